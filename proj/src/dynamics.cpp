#include "imcgl/dynamics.hpp"

#include <Eigen/QR>
#include <cmath>

#include "imcgl/errors.hpp"

namespace imcgl {
namespace {

// (e^z - 1)/z and (e^z - 1 - z)/z^2 from e^z, with Taylor series near 0.
void phi_functions(Complex z, Complex ez, Complex& phi1, Complex& phi2) {
  if (std::abs(z) < 0.1) {
    Complex term = 1.0, s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < 14; ++k) {
      // term = z^k / (k+1)! accumulates phi1; z^k / (k+2)! accumulates phi2.
      s1 += term;
      s2 += term / double(k + 2);
      term *= z / double(k + 2);
    }
    phi1 = s1;
    phi2 = s2;
    return;
  }
  phi1 = (ez - 1.0) / z;
  phi2 = (ez - 1.0 - z) / (z * z);
}

Model model_for(const Model& model, const IntegratorConfig& cfg) {
  if (model.discretization().dealias == cfg.dealias) return model;
  Discretization disc = model.discretization();
  disc.dealias = cfg.dealias;
  return Model(model.params(), disc, model.overrides());
}

void require_finite(const SpectralField& u, double t) {
  if (!u.all_finite()) throw IntegrationBlowup(t, "non-finite state at t = " + std::to_string(t));
}

void require_same_grid(const Trajectory& a, const Trajectory& b) {
  if (a.states.size() != b.states.size() || a.integrator.dt != b.integrator.dt ||
      a.integrator.scheme != b.integrator.scheme)
    throw ConfigError("base trajectories are on different time grids");
  for (std::size_t i = 0; i < a.times.size(); ++i)
    if (a.times[i] != b.times[i]) throw ConfigError("base trajectories are on different time grids");
}

Trajectory empty_like(const Trajectory& base, std::size_t reserve) {
  Trajectory out;
  out.params = base.params;
  out.integrator = base.integrator;
  out.times.reserve(reserve);
  out.states.reserve(reserve);
  return out;
}

}  // namespace

int IntegratorConfig::steps() const {
  if (!(dt > 0.0) || !(horizon >= 0.0)) throw ConfigError("invalid integrator: requires dt > 0 and horizon >= 0");
  const double m = horizon / dt;
  const double r = std::round(m);
  if (std::abs(m - r) > 1e-9 * std::max(1.0, m))
    throw ConfigError("invalid integrator: horizon must be a multiple of dt");
  return int(r);
}

Stepper::Stepper(const Model& model, const IntegratorConfig& cfg) : model_(model_for(model, cfg)), cfg_(cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("invalid integrator: requires dt > 0");
  const Eigen::VectorXd& a = Lattice::of(model_.grid_radius()).a_eig();
  const double omega = model_.params().omega, h = cfg.dt;
  E_.resize(a.size());
  hphi1_.resize(a.size());
  hphi2_.resize(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    E_[i] = propagator_factor(a[i], h, omega);
    const Complex z = -Complex(1.0, omega) * a[i] * h;
    Complex p1, p2;
    phi_functions(z, E_[i], p1, p2);
    hphi1_[i] = h * p1;
    hphi2_[i] = h * p2;
  }
}

SpectralField Stepper::stage(const SpectralField& u, const SpectralField& Fu) const {
  return SpectralField(u.grid_radius(),
                       E_.cwiseProduct(u.coeffs()) + hphi1_.cwiseProduct(Fu.coeffs()));
}

SpectralField Stepper::step(const SpectralField& u, double t) const {
  SpectralField next(u.grid_radius());
  if (model_.is_zero()) {
    next.coeffs() = E_.cwiseProduct(u.coeffs());
  } else {
    const SpectralField Fu = nonlinearity_F(model_, u);
    next = stage(u, Fu);
    if (cfg_.scheme == Scheme::ETD2) {
      const SpectralField Fa = nonlinearity_F(model_, next);
      next.coeffs() += hphi2_.cwiseProduct(Fa.coeffs() - Fu.coeffs());
    }
  }
  require_finite(next, t + cfg_.dt);
  return next;
}

template <class Lin>
SpectralField Stepper::tangent_impl(const Lin& at_u, const Lin& at_stage, const SpectralField& v) const {
  SpectralField out(v.grid_radius());
  if (model_.is_zero()) {
    out.coeffs() = E_.cwiseProduct(v.coeffs());
    return out;
  }
  const SpectralField dFu = at_u.apply(v);
  out.coeffs() = E_.cwiseProduct(v.coeffs()) + hphi1_.cwiseProduct(dFu.coeffs());
  if (cfg_.scheme == Scheme::ETD2) {
    const SpectralField dFa = at_stage.apply(out);
    out.coeffs() += hphi2_.cwiseProduct(dFa.coeffs() - dFu.coeffs());
  }
  return out;
}

SpectralField Stepper::tangent(const Linearization& at_u, const Linearization& at_stage,
                               const SpectralField& v) const {
  return tangent_impl(at_u, at_stage, v);
}

SpectralField Stepper::tangent(const IntervalLinearization& at_u, const IntervalLinearization& at_stage,
                               const SpectralField& v) const {
  return tangent_impl(at_u, at_stage, v);
}

SpectralField step(const Model& model, const SpectralField& u, const IntegratorConfig& cfg) {
  if (!u.all_finite()) throw IntegrationBlowup(0.0, "non-finite initial state");
  return Stepper(model, cfg).step(u);
}

Trajectory integrate(const Model& model, const SpectralField& u0, const IntegratorConfig& cfg) {
  const int m = cfg.steps();
  if (u0.grid_radius() != model.grid_radius()) throw GridError("initial state is on a different grid");
  if (!u0.all_finite()) throw IntegrationBlowup(0.0, "non-finite initial state");
  const Stepper stepper(model, cfg);
  Trajectory traj;
  traj.params = model.params();
  traj.integrator = cfg;
  traj.times.reserve(m + 1);
  traj.states.reserve(m + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(u0);
  for (int i = 0; i < m; ++i) {
    const double t = i * cfg.dt;
    traj.states.push_back(stepper.step(traj.states.back(), t));
    traj.times.push_back((i + 1) * cfg.dt);
  }
  return traj;
}

SpectralField time_derivative(const Model& model, const SpectralField& u) {
  SpectralField du = nonlinearity_F(model, u);
  const double omega = model.params().omega;
  du.coeffs() -= Complex(1.0, omega) * u.lattice().a_eig().cast<Complex>().cwiseProduct(u.coeffs());
  return du;
}

Trajectory integrate_variation(const Model& model, const Trajectory& base, const SpectralField& v0) {
  if (base.states.empty()) throw ConfigError("empty base trajectory");
  if (v0.grid_radius() != base.states.front().grid_radius()) throw GridError("variation is on a different grid");
  const Stepper stepper(model, base.integrator);
  Trajectory out = empty_like(base, base.states.size());
  out.times.push_back(base.times.front());
  out.states.push_back(v0);
  for (std::size_t i = 0; i + 1 < base.states.size(); ++i) {
    const SpectralField& u = base.states[i];
    const Linearization at_u(stepper.model(), u);
    SpectralField v;
    if (stepper.model().is_zero() || base.integrator.scheme == Scheme::ETD1) {
      v = stepper.tangent(at_u, at_u, out.states.back());
    } else {
      const Linearization at_a(stepper.model(), stepper.stage(u, nonlinearity_F(stepper.model(), u)));
      v = stepper.tangent(at_u, at_a, out.states.back());
    }
    require_finite(v, base.times[i + 1]);
    out.states.push_back(std::move(v));
    out.times.push_back(base.times[i + 1]);
  }
  return out;
}

Trajectory integrate_variation(const Model& model, const Trajectory& base1, const Trajectory& base2,
                               const SpectralField& v0, const Quadrature& rule) {
  if (base1.states.empty()) throw ConfigError("empty base trajectory");
  require_same_grid(base1, base2);
  const Stepper stepper(model, base1.integrator);
  const Model& m = stepper.model();
  Trajectory out = empty_like(base1, base1.states.size());
  out.times.push_back(base1.times.front());
  out.states.push_back(v0);
  for (std::size_t i = 0; i + 1 < base1.states.size(); ++i) {
    const SpectralField& u1 = base1.states[i];
    const SpectralField& u2 = base2.states[i];
    const IntervalLinearization at_u(m, u1, u2, rule);
    SpectralField v;
    if (m.is_zero() || base1.integrator.scheme == Scheme::ETD1) {
      v = stepper.tangent(at_u, at_u, out.states.back());
    } else {
      const IntervalLinearization at_a(m, stepper.stage(u1, nonlinearity_F(m, u1)),
                                       stepper.stage(u2, nonlinearity_F(m, u2)), rule);
      v = stepper.tangent(at_u, at_a, out.states.back());
    }
    require_finite(v, base1.times[i + 1]);
    out.states.push_back(std::move(v));
    out.times.push_back(base1.times[i + 1]);
  }
  return out;
}

TangentPropagator::TangentPropagator(const Model& model, const Trajectory& base)
    : stepper_(model, base.integrator) {
  const Model& m = stepper_.model();
  const std::size_t steps = base.states.empty() ? 0 : base.states.size() - 1;
  at_u_.reserve(steps);
  at_stage_.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const SpectralField& u = base.states[i];
    at_u_.emplace_back(m, u);
    if (base.integrator.scheme == Scheme::ETD2 && !m.is_zero())
      at_stage_.emplace_back(m, stepper_.stage(u, nonlinearity_F(m, u)));
  }
}

SpectralField TangentPropagator::apply(const SpectralField& v0) const {
  SpectralField v = v0;
  for (std::size_t i = 0; i < at_u_.size(); ++i)
    v = stepper_.tangent(at_u_[i], at_stage_.empty() ? at_u_[i] : at_stage_[i], v);
  return v;
}

DissipativityReport monitor_dissipativity(const Model& model, const Trajectory& traj, double kappa, double C2,
                                          double tail_fraction) {
  DissipativityReport rep;
  rep.kappa = kappa;
  rep.C2 = C2;
  const std::size_t n = traj.states.size();
  rep.tail_start = std::min(n == 0 ? 0 : n - 1, std::size_t(std::floor(tail_fraction * double(n))));
  const int N = model.N();
  const double s0 = model.params().s0;
  std::vector<double> qf, qu;
  for (std::size_t i = 0; i < n; ++i) {
    const SpectralField& u = traj.states[i];
    const SpectralField qn = project(u, Projector::Q_N, N);
    const SpectralField F = nonlinearity_F(model, u);
    SpectralField du = F;
    du.coeffs() -= Complex(1.0, model.params().omega) *
                   u.lattice().a_eig().cast<Complex>().cwiseProduct(u.coeffs());
    rep.q_low.push_back(sobolev_norm(qn, 2.0 - kappa));
    rep.q_high.push_back(sobolev_norm(qn, 2.0 + s0 - kappa));
    rep.q_dt.push_back(sobolev_norm(project(du, Projector::Q_N, N), s0 - kappa));
    qf.push_back(sobolev_norm(project(F, Projector::Q_N, N), s0));
    qu.push_back(sobolev_norm(qn, s0));
  }
  const auto track = [&](SampleMax& m, double value, std::size_t i) {
    if (i == rep.tail_start || value > m.value) m = {value, i};
  };
  for (std::size_t i = rep.tail_start; i < n; ++i) {
    track(rep.sup_low, rep.q_low[i], i);
    track(rep.sup_high, rep.q_high[i], i);
    track(rep.sup_dt, rep.q_dt[i], i);
    track(rep.sup_qims, rep.q_high[i] + rep.q_dt[i], i);
  }
  rep.qims_ok = n > 0 && rep.sup_qims.value <= C2;

  // Least-squares affine fit over the whole run.
  if (n >= 2) {
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = qu[i];
      y[i] = qf[i];
    }
    const Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
    rep.fit_intercept = c[0];
    rep.fit_slope = c[1];
  }
  return rep;
}

CbarRateReport monitor_cbar_rate(const Model& model, const Trajectory& traj) {
  return monitor_cbar_rate(model, traj, traj, 1.0);
}

CbarRateReport monitor_cbar_rate(const Model& model, const Trajectory& traj1, const Trajectory& traj2,
                                 double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  require_same_grid(traj1, traj2);
  CbarRateReport rep;
  rep.times = traj1.times;
  const std::size_t n = traj1.states.size();
  const int N = model.N();
  const double big = 4.0 * model.params().Rtilde;
  std::vector<Complex> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SpectralField w = alpha * traj1.states[i] + (1.0 - alpha) * traj2.states[i];
    c[i] = coefficients_C(model, w).ubar;
    int chi = sobolev_norm(project(traj1.states[i], Projector::P_N, N), 1.0) >= big;
    if (alpha < 1.0) chi += sobolev_norm(project(traj2.states[i], Projector::P_N, N), 1.0) >= big;
    rep.indicator.push_back(chi);
  }
  const double h = traj1.dt();
  rep.rate.assign(n, 0.0);
  for (std::size_t i = 0; i < n && n >= 2; ++i) {
    Complex d;
    if (i == 0)
      d = (c[1] - c[0]) / h;
    else if (i + 1 == n)
      d = (c[n - 1] - c[n - 2]) / h;
    else
      d = (c[i + 1] - c[i - 1]) / (2.0 * h);
    rep.rate[i] = std::abs(d);
  }
  const double sqrtN = std::sqrt(double(N));
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || rep.rate[i] > rep.max_rate.value) rep.max_rate = {rep.rate[i], i};
    if (rep.indicator[i] == 0)
      rep.c_bounded = std::max(rep.c_bounded, rep.rate[i] / sqrtN);
    else
      rep.c_unbounded = std::max(rep.c_unbounded, rep.rate[i] / (sqrtN + N * rep.indicator[i]));
  }
  return rep;
}

}  // namespace imcgl
