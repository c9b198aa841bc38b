#pragma once

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "imcgl/averaging_cone.hpp"

namespace imcgl {

enum class BvpSolver { Newton, FixedPoint };

struct BvpOptions {
  BvpSolver solver = BvpSolver::Newton;
  bool fallback = true;            // retry with the other solver on failure
  double tol = 1e-10;              // ||P_N S(T) y - u_plus0||_H
  int max_newton = 30;
  int max_krylov = 80;
  double krylov_rtol = 1e-10;     // floor of the adaptive forcing term
  int max_fixed_point = 400;
  /// Reject solutions whose forward trajectory breaks the (Q_N) dissipativity
  /// bound; infinite disables the check.
  double qims_C2 = std::numeric_limits<double>::infinity();
  double qims_kappa = 0.25;
};

struct BvpSolution {
  SpectralField u_plus_T;          // P_N u(-T)
  Trajectory trajectory;           // times -T .. 0
  double residual = 0.0;
  int iterations = 0;
  BvpSolver solver = BvpSolver::Newton;
  SpectralField preconditioned;    // x with u_plus_T = E_T x, reused as warm start
};

/// Solves du/dt + (1 + i omega) A u = F(u), P_N u(0) = u_plus0, Q_N u(-T) = 0.
/// `warm` is an optional starting x (zero-size field selects x = u_plus0).
BvpSolution solve_bvp(const Model& model, const SpectralField& u_plus0, double T, const IntegratorConfig& cfg,
                      const BvpOptions& options = {}, const SpectralField* warm = nullptr);

struct ManifoldOptions {
  IntegratorConfig integrator;     // dt and scheme; the horizon is set by the ladder
  double tol = 1e-6;               // stop once ||M_T - M_{T - dT}||_H <= tol
  double T0 = 0.0;                 // 0 selects 5 / (N - K + 1), rounded to the step
  double dT = 0.0;                 // 0 selects T0
  double T_max = 20.0;
  int min_gaps = 1;                // ladder steps taken before the stop test applies
  BvpOptions bvp;
};

struct GraphPoint {
  SpectralField u_plus;
  SpectralField m_value;
  double T_used = 0.0;
  double shooting_residual = 0.0;
  double cauchy_gap = 0.0;
  std::vector<double> ladder;      // T values
  std::vector<double> gaps;        // gaps[j] = ||M_{ladder[j]} - M_{ladder[j-1]}||, gaps[0] unused
  double gap_rate = 0.0;           // fitted gamma in gap ~ C e^{-gamma T}
  int iterations = 0;
  Trajectory trajectory;           // backward solution at T_used

  SpectralField point() const { return u_plus + m_value; }
};

/// The T-ladder resolved start used by manifold_value.
double ladder_start(const Model& model, const ManifoldOptions& options);

GraphPoint manifold_value(const Model& model, const SpectralField& u_plus0, const ManifoldOptions& options = {});

/// Distance from p to the graph over P_N p: ||Q_N p - M(P_N p)||_H.
double graph_distance(const Model& model, const SpectralField& p, const ManifoldOptions& options = {});

struct LipschitzReport {
  int pairs = 0;
  int excluded = 0;                // identical pairs
  double max_ratio = 0.0;
  double cone_bound = 0.0;         // 1 + d, d = sup |C_ubar| / (2 |omega| (N - K)) over the samples
  bool within_bound = false;
  std::vector<double> ratios;
  std::vector<std::pair<int, int>> pair_index;
};

LipschitzReport lipschitz_probe(const Model& model, const std::vector<SpectralField>& u_pluses,
                                const ManifoldOptions& options = {});
LipschitzReport lipschitz_probe(const Model& model, const std::vector<GraphPoint>& points);

struct TrackingReport {
  std::string id;
  GraphPoint trace_point;          // graph point at P_N u(T)
  std::vector<double> times;
  std::vector<double> distance;    // ||u(t) - ubar(t)||_H
  double rate = 0.0;
  double fit_residual = 0.0;
  double rate_2T = std::numeric_limits<double>::quiet_NaN();  // sensitivity run, when requested
  bool accepted = false;
};

struct TrackingOptions {
  ManifoldOptions manifold;
  double horizon = 1.0;
  double fit_start = 0.0;          // fit window start (skips an initial layer)
  bool sensitivity = false;        // repeat with 2 T
};

TrackingReport tracking_experiment(const Model& model, const SpectralField& u0, const TrackingOptions& options,
                                   const std::string& id = "");

using GraphMap = std::function<SpectralField(const SpectralField&)>;

struct SmoothnessReport {
  std::vector<double> h;
  std::vector<std::vector<double>> second_difference;  // per direction, per h
  std::vector<double> exponent;    // per direction; +inf when below resolution
  double min_exponent = 0.0;
  bool exceeds_resolution = false;
};

/// Fits the Hoelder exponent of h -> ||M(u + h w) - 2 M(u) + M(u - h w)|| / 2.
/// `graph` overrides M (synthetic checks); empty uses manifold_value.
SmoothnessReport smoothness_probe(const Model& model, const SpectralField& u_plus0,
                                  const std::vector<SpectralField>& directions, const std::vector<double>& h_ladder,
                                  const ManifoldOptions& options = {}, const GraphMap& graph = {},
                                  double resolution = 1e-13);

}  // namespace imcgl
