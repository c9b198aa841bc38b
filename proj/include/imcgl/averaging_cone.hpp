#pragma once

#include <limits>
#include <vector>

#include "imcgl/dynamics.hpp"

namespace imcgl {

/// Data of the temporal-averaging change of variables on the intermediate
/// modes N - K < a < N + K.
struct AveragingContext {
  Complex C_ubar = 0.0;
  int N = 0;
  int K = 0;
  double omega = 1.0;

  /// |C_ubar| / (2 |omega| (N - K)); the transform is refused from 1/2 on.
  double factor() const;
};

AveragingContext averaging_context(const Model& model, const SpectralField& u);
/// Pair context: C_ubar from the interval coefficients along [u2, u1].
AveragingContext averaging_context(const Model& model, const SpectralField& u1, const SpectralField& u2,
                                   const Quadrature& rule = Quadrature::gauss_legendre());

/// z_n = v_n + i C_ubar / (2 omega a_n) conj(v_{-n}) on intermediate modes,
/// identity elsewhere. Throws DomainError when factor() >= 1/2.
SpectralField transform_to_z(const AveragingContext& ctx, const SpectralField& v);
SpectralField transform_from_z(const AveragingContext& ctx, const SpectralField& z);

/// V(xi) = ||Q_N xi||_H^2 - ||P_N xi||_H^2.
double cone_V(const SpectralField& xi, int N);

enum class ConeSide { Inside, Boundary, Outside };

/// Membership of z = transform_to_z(ctx, v) in {V <= 0}; |V| <= band ||z||^2
/// counts as the boundary.
ConeSide in_cone(const AveragingContext& ctx, const SpectralField& v, double band = 1e-10);

/// Norm of I l1(u) I on H for the annulus of (N, K), real-linear structure
/// taken on doubled real coordinates.
struct SAOperatorReport {
  int N = 0;
  int K = 0;
  int annulus_dim = 0;
  double norm = 0.0;
  int samples = 1;
  double epsilon = 1.0 / 16.0;
  bool admissible = false;
};

/// Matrix of v -> I l1(u) I v in coordinates (Re v_1..Re v_d, Im v_1..Im v_d)
/// over the annulus modes (order of enumerate_modes), assembled from the
/// Fourier coefficients of the multiplier fields f_u, f_ubar of W(u).
Eigen::MatrixXd sa_operator_matrix(const Linearization& lin, int N, int K);
SAOperatorReport sa_operator_norm(const Model& model, const SpectralField& u, int N, int K,
                                  double epsilon = 1.0 / 16.0);

struct NSearchResult {
  int K = 0;
  double epsilon = 1.0 / 16.0;
  int samples = 0;
  std::vector<int> scanned;        // N values that fit the grid
  std::vector<double> max_norm;    // max over samples (scan stops at the first sample above epsilon)
  std::vector<int> admissible;

  bool is_admissible(int N) const;
};

/// Scans N in [N_lo, N_hi] restricted to levels the grid resolves.
NSearchResult n_search(const Model& model, int K, double epsilon, int N_lo, int N_hi,
                       const std::vector<SpectralField>& samples);

struct ConeOptions {
  double mu = 1.0 / 8.0;
  double tolerance_factor = 10.0;  // tol = factor * dt^2 * max |V'''| / (1 + ||z||^2)
  double boundary_band = 1e-10;    // cone exits counted beyond V > band ||z||^2
};

struct ConeCertificate {
  int N = 0;
  int K = 0;
  std::vector<double> times;
  std::vector<double> V;
  std::vector<double> dV;          // centered differences, interior samples
  std::vector<double> alpha;
  std::vector<double> z_norm_sq;
  std::vector<double> residual;    // dV + alpha V + mu ||z||^2, interior samples
  double mu = 1.0 / 8.0;
  double tolerance = 0.0;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max residual / (1 + ||z||^2)
  std::size_t worst_index = 0;
  int exit_events = 0;
  bool verdict = false;
};

/// Certificate for v = u1 - u2 along two trajectories (pair contexts, pair alpha).
ConeCertificate verify_cone_inequality(const Model& model, const NSearchResult& admissibility,
                                       const Trajectory& traj1, const Trajectory& traj2,
                                       const ConeOptions& options = {});
/// Certificate for the variation v with v(0) = v0 along one trajectory.
ConeCertificate verify_cone_inequality(const Model& model, const NSearchResult& admissibility,
                                       const Trajectory& base, const SpectralField& v0,
                                       const ConeOptions& options = {});

struct SqueezingReport {
  std::vector<double> times;
  std::vector<double> log_norm;    // ln ||u1 - u2||_H
  double rate = 0.0;               // fitted gamma in ||v|| ~ e^{-gamma t}
  double fit_residual = 0.0;       // RMS misfit / (rate * window length)
  bool decaying = false;
};

/// Fits the decay of ||u1 - u2||_H over [t_begin, t_end]; the transformed
/// difference must stay outside the floating cone there.
SqueezingReport estimate_squeezing(const Model& model, const Trajectory& traj1, const Trajectory& traj2,
                                   double t_begin, double t_end, double band = 1e-10);

struct L34Report {
  double v_norm = 0.0;
  double l3_norm = 0.0;            // ||I l3(u) v||_H
  double l4_norm = 0.0;            // ||I l4(u) v||_H
  double l3_constant = 0.0;        // l3_norm / ((N - K)^{-s0/2} ||v||)
  double l4_constant = 0.0;        // l4_norm / (((N - K)^{-1/2} + chi) ||v||)
  int indicator = 0;
};

L34Report bound_l3_l4(const Model& model, const SpectralField& u, int N, int K, const SpectralField& v);

}  // namespace imcgl
