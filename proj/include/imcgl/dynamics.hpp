#pragma once

#include <vector>

#include "imcgl/nonlinearity.hpp"
#include "imcgl/spectral_ops.hpp"

namespace imcgl {

enum class Scheme { ETD1, ETD2 };

struct IntegratorConfig {
  double dt = 1e-2;
  Scheme scheme = Scheme::ETD2;
  bool dealias = true;
  double horizon = 1.0;

  /// horizon / dt, which must be an integer up to roundoff.
  int steps() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
  ModelParams params;
  IntegratorConfig integrator;

  const SpectralField& last() const { return states.back(); }
  double dt() const { return integrator.dt; }
};

/// Exponential integrator for du/dt + (1 + i omega) A u = F(u). The diagonal
/// weights are built once per (grid, dt); ETD2 is the single-step
/// Cox-Matthews ETD2RK scheme, so aligned restarts reproduce runs bit-exactly.
class Stepper {
 public:
  Stepper(const Model& model, const IntegratorConfig& cfg);

  /// One step from time t (t only labels a blow-up).
  SpectralField step(const SpectralField& u, double t = 0.0) const;
  /// Stage state E u + h phi1 F(u) of the ETD2RK step.
  SpectralField stage(const SpectralField& u, const SpectralField& Fu) const;
  /// Tangent of one step at base u: the exact derivative of step().
  SpectralField tangent(const Linearization& at_u, const Linearization& at_stage, const SpectralField& v) const;
  SpectralField tangent(const IntervalLinearization& at_u, const IntervalLinearization& at_stage,
                        const SpectralField& v) const;

  const Model& model() const { return model_; }
  const IntegratorConfig& config() const { return cfg_; }

 private:
  template <class Lin>
  SpectralField tangent_impl(const Lin& at_u, const Lin& at_stage, const SpectralField& v) const;

  Model model_;
  IntegratorConfig cfg_;
  Eigen::VectorXcd E_, hphi1_, hphi2_;
};

SpectralField step(const Model& model, const SpectralField& u, const IntegratorConfig& cfg);
Trajectory integrate(const Model& model, const SpectralField& u0, const IntegratorConfig& cfg);

/// du/dt from the right-hand side of the equation.
SpectralField time_derivative(const Model& model, const SpectralField& u);

/// Variation along a stored base (single) or along the pair u1 - u2 with the
/// interval derivative. v(0) = v0; same scheme and dt as the base.
Trajectory integrate_variation(const Model& model, const Trajectory& base, const SpectralField& v0);
Trajectory integrate_variation(const Model& model, const Trajectory& base1, const Trajectory& base2,
                               const SpectralField& v0, const Quadrature& rule = Quadrature::gauss_legendre());

/// Tangent map of S(T) along a fixed base, with the per-step linearizations
/// cached so many directions can be pushed forward cheaply.
class TangentPropagator {
 public:
  TangentPropagator(const Model& model, const Trajectory& base);
  SpectralField apply(const SpectralField& v0) const;

 private:
  Stepper stepper_;
  std::vector<Linearization> at_u_, at_stage_;
};

struct SampleMax {
  double value = 0.0;
  std::size_t index = 0;
};

struct DissipativityReport {
  double kappa = 0.0;
  double C2 = 0.0;
  std::size_t tail_start = 0;
  std::vector<double> q_low;    // ||Q_N u||_{H^{2-kappa}}
  std::vector<double> q_high;   // ||Q_N u||_{H^{2+s0-kappa}}
  std::vector<double> q_dt;     // ||Q_N du/dt||_{H^{s0-kappa}}
  SampleMax sup_low, sup_high, sup_dt, sup_qims;  // over the tail
  double fit_intercept = 0.0;   // ||Q_N F||_{H^s0} ~ intercept + slope ||Q_N u||_{H^s0}
  double fit_slope = 0.0;
  bool qims_ok = false;
};

/// Q_N bounds along a trajectory; the tail starts at tail_fraction of the run.
DissipativityReport monitor_dissipativity(const Model& model, const Trajectory& traj, double kappa, double C2,
                                          double tail_fraction = 0.5);

struct CbarRateReport {
  std::vector<double> times;
  std::vector<double> rate;       // |d/dt C_ubar(alpha u1 + (1 - alpha) u2)|
  std::vector<int> indicator;     // number of ||P_N u_i||_{H^1} >= 4 Rtilde
  SampleMax max_rate;
  double c_bounded = 0.0;         // max rate / N^{1/2} where indicator == 0
  double c_unbounded = 0.0;       // max rate / (N^{1/2} + N indicator) elsewhere
};

CbarRateReport monitor_cbar_rate(const Model& model, const Trajectory& traj);
CbarRateReport monitor_cbar_rate(const Model& model, const Trajectory& traj1, const Trajectory& traj2, double alpha);

}  // namespace imcgl
