#include "imcgl/manifold_builder.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "imcgl/errors.hpp"

namespace imcgl {
namespace {

// Real coordinates (Re..., Im...) of the P_N block.
struct LowModes {
  int grid_radius = 0;
  std::vector<Eigen::Index> index;

  LowModes(int G, int N) : grid_radius(G) {
    const Lattice& lat = Lattice::of(G);
    for (const ModeIndex& n : enumerate_modes(G, ModePredicate::at_most(N))) index.push_back(lat.index(n));
  }
  Eigen::Index dim() const { return 2 * Eigen::Index(index.size()); }

  Eigen::VectorXd to_real(const SpectralField& u) const {
    const Eigen::Index n = Eigen::Index(index.size());
    Eigen::VectorXd x(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = u.coeffs()[index[i]].real();
      x[n + i] = u.coeffs()[index[i]].imag();
    }
    return x;
  }
  SpectralField from_real(const Eigen::VectorXd& x) const {
    const Eigen::Index n = Eigen::Index(index.size());
    SpectralField u(grid_radius);
    for (Eigen::Index i = 0; i < n; ++i) u.coeffs()[index[i]] = Complex(x[i], x[n + i]);
    return u;
  }
};

// E_T = exp(((1 + i omega) a - F'(0)) T) on P_N, 0 elsewhere: the inverse of the
// linearized low-mode flow at the origin.
Eigen::VectorXcd backward_weights(const Model& model, double T) {
  const int G = model.grid_radius();
  const Eigen::ArrayXd mask = projector_mask(G, Projector::P_N, model.N(), 0);
  const Eigen::VectorXd& a = Lattice::of(G).a_eig();
  const Complex r0 = model.zero_linearization_rate();
  const double omega = model.params().omega;
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (mask[i] != 0.0) e[i] = 1.0 / (propagator_factor(a[i], T, omega) * std::exp(r0 * T));
  return e;
}

SpectralField scaled(const Eigen::VectorXcd& w, const SpectralField& x) {
  return SpectralField(x.grid_radius(), w.cwiseProduct(x.coeffs()));
}

struct Shot {
  Trajectory traj;
  SpectralField residual;
  double norm = std::numeric_limits<double>::infinity();
};

class Shooter {
 public:
  Shooter(const Model& model, const SpectralField& target, double T, const IntegratorConfig& cfg)
      : model_(model), target_(project(target, Projector::P_N, model.N())), T_(T), cfg_(cfg),
        E_(backward_weights(model, T)) {
    cfg_.horizon = T;
    cfg_.steps();
  }

  SpectralField start(const SpectralField& x) const { return scaled(E_, x); }

  Shot shoot(const SpectralField& x) const {
    Shot s;
    s.traj = integrate(model_, start(x), cfg_);
    for (double& t : s.traj.times) t -= T_;
    s.residual = project(s.traj.last(), Projector::P_N, model_.N()) - target_;
    s.norm = sobolev_norm(s.residual, 0.0);
    return s;
  }

  const Model& model() const { return model_; }
  const Eigen::VectorXcd& weights() const { return E_; }
  const SpectralField& target() const { return target_; }

 private:
  Model model_;
  SpectralField target_;
  double T_;
  IntegratorConfig cfg_;
  Eigen::VectorXcd E_;
};

template <class Op>
Eigen::VectorXd gmres(const Op& apply, const Eigen::VectorXd& b, int max_it, double rtol) {
  const double beta = b.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  if (beta == 0.0) return x;
  const int m = std::max(1, std::min<int>(max_it, int(b.size())));
  Eigen::MatrixXd V(b.size(), m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  V.col(0) = b / beta;
  Eigen::VectorXd y;
  int k = 0;
  for (; k < m; ++k) {
    Eigen::VectorXd w = apply(V.col(k));
    for (int j = 0; j <= k; ++j) {
      H(j, k) = V.col(j).dot(w);
      w -= H(j, k) * V.col(j);
    }
    H(k + 1, k) = w.norm();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 2);
    rhs[0] = beta;
    const Eigen::MatrixXd Hk = H.topLeftCorner(k + 2, k + 1);
    y = Hk.colPivHouseholderQr().solve(rhs);
    const double res = (rhs - Hk * y).norm();
    if (res <= rtol * beta || H(k + 1, k) <= 1e-14 * beta) {
      ++k;
      break;
    }
    V.col(k + 1) = w / H(k + 1, k);
  }
  return V.leftCols(y.size()) * y;
}

struct SolveState {
  SpectralField x;
  Shot shot;
  int iterations = 0;
  bool converged = false;
};

SolveState run_newton(const Shooter& sh, SpectralField x, const BvpOptions& opt) {
  const LowModes low(x.grid_radius(), sh.model().N());
  SolveState st{x, sh.shoot(x)};
  double previous = 0.0;
  for (; st.iterations < opt.max_newton; ++st.iterations) {
    if (st.shot.norm <= opt.tol) {
      st.converged = true;
      return st;
    }
    const TangentPropagator tangent(sh.model(), st.shot.traj);
    const auto J = [&](const Eigen::VectorXd& d) {
      return low.to_real(tangent.apply(sh.start(low.from_real(d))));
    };
    // Eisenstat-Walker forcing, never asking for more than the tolerance needs.
    double eta = previous > 0.0 ? 0.9 * std::pow(st.shot.norm / previous, 2) : 0.1;
    eta = std::clamp(std::max(eta, 0.5 * opt.tol / st.shot.norm), opt.krylov_rtol, 0.1);
    const Eigen::VectorXd delta = gmres(J, -low.to_real(st.shot.residual), opt.max_krylov, eta);
    previous = st.shot.norm;
    const SpectralField step = low.from_real(delta);
    bool accepted = false;
    for (double lambda = 1.0; lambda >= 1.0 / 64.0; lambda *= 0.5) {
      const SpectralField trial = st.x + lambda * step;
      Shot s;
      try {
        s = sh.shoot(trial);
      } catch (const IntegrationBlowup&) {
        continue;
      }
      if (s.norm < (1.0 - 1e-4 * lambda) * st.shot.norm) {
        st.x = trial;
        st.shot = std::move(s);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  st.converged = st.shot.norm <= opt.tol;
  return st;
}

SolveState run_fixed_point(const Shooter& sh, SpectralField x, const BvpOptions& opt) {
  SolveState st{x, sh.shoot(x)};
  const double start = st.shot.norm;
  for (; st.iterations < opt.max_fixed_point; ++st.iterations) {
    if (st.shot.norm <= opt.tol) {
      st.converged = true;
      return st;
    }
    if (!(st.shot.norm <= 1e3 * std::max(start, opt.tol))) break;
    st.x -= st.shot.residual;
    st.shot = sh.shoot(st.x);
  }
  st.converged = st.shot.norm <= opt.tol;
  return st;
}

SolveState run(const Shooter& sh, const SpectralField& x, BvpSolver solver, const BvpOptions& opt) {
  return solver == BvpSolver::Newton ? run_newton(sh, x, opt) : run_fixed_point(sh, x, opt);
}

// Least-squares slope of log(values) against t; NaN with fewer than two points.
double log_slope(const std::vector<double>& t, const std::vector<double>& values, double* rms = nullptr) {
  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (values[i] > 0.0 && std::isfinite(values[i])) {
      ts.push_back(t[i]);
      ys.push_back(std::log(values[i]));
    }
  const std::size_t n = ts.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = ts[i];
    y[i] = ys[i];
  }
  const Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
  if (rms) *rms = std::sqrt((X * c - y).squaredNorm() / double(n));
  return c[1];
}

double round_to_step(double T, double dt) { return std::max(1.0, std::round(T / dt)) * dt; }

}  // namespace

BvpSolution solve_bvp(const Model& model, const SpectralField& u_plus0, double T, const IntegratorConfig& cfg,
                      const BvpOptions& options, const SpectralField* warm) {
  if (!u_plus0.all_finite()) throw DomainError("u_plus0 is not finite");
  const Shooter sh(model, u_plus0, T, cfg);
  const SpectralField x0 = warm && warm->size() > 0 ? *warm : sh.target();

  SolveState st;
  double best = std::numeric_limits<double>::infinity();
  std::string failure;
  const BvpSolver other = options.solver == BvpSolver::Newton ? BvpSolver::FixedPoint : BvpSolver::Newton;
  for (BvpSolver solver : {options.solver, other}) {
    try {
      st = run(sh, x0, solver, options);
      best = std::min(best, st.shot.norm);
      if (st.converged) {
        BvpSolution sol;
        sol.solver = solver;
        sol.iterations = st.iterations;
        sol.residual = st.shot.norm;
        sol.u_plus_T = sh.start(st.x);
        sol.preconditioned = st.x;
        sol.trajectory = std::move(st.shot.traj);
        if (std::isfinite(options.qims_C2) &&
            !monitor_dissipativity(model, sol.trajectory, options.qims_kappa, options.qims_C2, 0.0).qims_ok)
          throw DomainError("backward solve leaves the Q_N dissipativity bound");
        return sol;
      }
    } catch (const IntegrationBlowup& e) {
      failure = e.what();
    }
    if (!options.fallback) break;
  }
  std::ostringstream msg;
  msg << "shooting did not converge at T = " << T << " (best residual " << best << ")";
  if (!failure.empty()) msg << "; " << failure;
  throw ConvergenceError(msg.str(), best);
}

double ladder_start(const Model& model, const ManifoldOptions& options) {
  const double T0 = options.T0 > 0.0 ? options.T0 : 5.0 / double(model.N() - model.K() + 1);
  return round_to_step(T0, options.integrator.dt);
}

GraphPoint manifold_value(const Model& model, const SpectralField& u_plus0, const ManifoldOptions& options) {
  const double dt = options.integrator.dt;
  const double T0 = ladder_start(model, options);
  const double dT = options.dT > 0.0 ? round_to_step(options.dT, dt) : T0;
  const int N = model.N();

  GraphPoint gp;
  gp.u_plus = project(u_plus0, Projector::P_N, N);
  gp.cauchy_gap = std::numeric_limits<double>::infinity();
  SpectralField warm, previous;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int j = 0;; ++j) {
    const double T = T0 + j * dT;
    if (T > options.T_max + 0.5 * dt)
      throw ConvergenceError("graph value did not converge by T_max", best_gap);
    BvpSolution sol = solve_bvp(model, gp.u_plus, T, options.integrator, options.bvp, j ? &warm : nullptr);
    SpectralField m = project(sol.trajectory.last(), Projector::Q_N, N);
    gp.ladder.push_back(T);
    gp.iterations += sol.iterations;
    warm = sol.preconditioned;
    if (j == 0) {
      gp.gaps.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      const double gap = sobolev_norm(m - previous, 0.0);
      if (j >= 2 && gap >= gp.gaps.back() && gap > options.tol)
        throw ConvergenceError("no graph convergence - check (N,K) admissibility", best_gap);
      gp.gaps.push_back(gap);
      best_gap = std::min(best_gap, gap);
      if (gap <= options.tol && j >= options.min_gaps) {
        gp.m_value = std::move(m);
        gp.T_used = T;
        gp.shooting_residual = sol.residual;
        gp.cauchy_gap = gap;
        gp.trajectory = std::move(sol.trajectory);
        gp.gap_rate = -log_slope(gp.ladder, gp.gaps);
        return gp;
      }
    }
    previous = std::move(m);
  }
}

double graph_distance(const Model& model, const SpectralField& p, const ManifoldOptions& options) {
  const GraphPoint gp = manifold_value(model, project(p, Projector::P_N, model.N()), options);
  return sobolev_norm(project(p, Projector::Q_N, model.N()) - gp.m_value, 0.0);
}

LipschitzReport lipschitz_probe(const Model& model, const std::vector<SpectralField>& u_pluses,
                                const ManifoldOptions& options) {
  std::vector<GraphPoint> pts;
  for (const SpectralField& u : u_pluses) pts.push_back(manifold_value(model, u, options));
  return lipschitz_probe(model, pts);
}

LipschitzReport lipschitz_probe(const Model& model, const std::vector<GraphPoint>& pts) {
  double distortion = 0.0;
  for (const GraphPoint& p : pts) distortion = std::max(distortion, averaging_context(model, p.point()).factor());
  LipschitzReport rep;
  rep.cone_bound = 1.0 + distortion;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double du = sobolev_norm(pts[i].u_plus - pts[j].u_plus, 0.0);
      if (!(du > 0.0)) {
        ++rep.excluded;
        continue;
      }
      const double r = sobolev_norm(pts[i].m_value - pts[j].m_value, 0.0) / du;
      rep.ratios.push_back(r);
      rep.pair_index.emplace_back(int(i), int(j));
      rep.max_ratio = std::max(rep.max_ratio, r);
      ++rep.pairs;
    }
  rep.within_bound = rep.max_ratio <= rep.cone_bound;
  return rep;
}

namespace {

// Manifold trajectory ubar on [0, horizon] with P_N ubar(horizon) = target,
// built from a backward solve over horizon + T_back.
Trajectory trace(const Model& model, const SpectralField& target, double horizon, double T_back,
                 const ManifoldOptions& options, const SpectralField& warm) {
  const BvpSolution sol = solve_bvp(model, target, horizon + T_back, options.integrator, options.bvp, &warm);
  const std::size_t skip = std::size_t(std::llround(T_back / options.integrator.dt));
  Trajectory out;
  out.params = sol.trajectory.params;
  out.integrator = sol.trajectory.integrator;
  for (std::size_t i = skip; i < sol.trajectory.states.size(); ++i) {
    out.times.push_back(sol.trajectory.times[i] + horizon);
    out.states.push_back(sol.trajectory.states[i]);
  }
  return out;
}

}  // namespace

TrackingReport tracking_experiment(const Model& model, const SpectralField& u0, const TrackingOptions& options,
                                   const std::string& id) {
  if (!u0.all_finite()) throw DomainError("initial state is not finite");
  IntegratorConfig cfg = options.manifold.integrator;
  cfg.horizon = round_to_step(options.horizon, cfg.dt);
  const Trajectory u = integrate(model, u0, cfg);
  const int N = model.N();

  TrackingReport rep;
  rep.id = id;
  rep.trace_point = manifold_value(model, project(u.last(), Projector::P_N, N), options.manifold);
  const double T_back = rep.trace_point.T_used;

  const auto distances = [&](double back, std::vector<double>& d) {
    const Trajectory ubar = trace(model, rep.trace_point.u_plus, cfg.horizon, back, options.manifold,
                                  SpectralField());
    d.resize(u.states.size());
    for (std::size_t i = 0; i < u.states.size(); ++i) d[i] = sobolev_norm(u.states[i] - ubar.states[i], 0.0);
  };
  distances(T_back, rep.distance);
  rep.times = u.times;

  std::vector<double> t_fit, d_fit;
  for (std::size_t i = 0; i < rep.times.size(); ++i)
    if (rep.times[i] >= options.fit_start - 0.5 * cfg.dt) {
      t_fit.push_back(rep.times[i]);
      d_fit.push_back(rep.distance[i]);
    }
  double rms = 0.0;
  rep.rate = -log_slope(t_fit, d_fit, &rms);
  const double span = t_fit.empty() ? 0.0 : t_fit.back() - t_fit.front();
  rep.fit_residual = rep.rate > 0.0 ? rms / (rep.rate * span) : std::numeric_limits<double>::infinity();
  rep.accepted = rep.rate > 0.0 &&
                 std::all_of(rep.distance.begin(), rep.distance.end(), [](double d) { return d > 0.0; });

  if (options.sensitivity) {
    std::vector<double> d2;
    distances(2.0 * T_back, d2);
    std::vector<double> d2_fit;
    for (std::size_t i = 0; i < rep.times.size(); ++i)
      if (rep.times[i] >= options.fit_start - 0.5 * cfg.dt) d2_fit.push_back(d2[i]);
    rep.rate_2T = -log_slope(t_fit, d2_fit);
  }
  return rep;
}

SmoothnessReport smoothness_probe(const Model& model, const SpectralField& u_plus0,
                                  const std::vector<SpectralField>& directions, const std::vector<double>& h_ladder,
                                  const ManifoldOptions& options, const GraphMap& graph, double resolution) {
  const int N = model.N();
  const GraphMap M = graph ? graph : GraphMap([&](const SpectralField& u) {
    return manifold_value(model, u, options).m_value;
  });
  SmoothnessReport rep;
  rep.h = h_ladder;
  rep.min_exponent = std::numeric_limits<double>::infinity();
  const SpectralField u = project(u_plus0, Projector::P_N, N);
  const SpectralField Mu = M(u);
  for (const SpectralField& w0 : directions) {
    const SpectralField w = project(w0, Projector::P_N, N);
    std::vector<double> d, logh;
    for (double h : h_ladder) {
      const SpectralField second = M(u + h * w) - 2.0 * Mu + M(u - h * w);
      d.push_back(0.5 * sobolev_norm(second, 0.0));
    }
    std::vector<double> hs, ds;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] > resolution) {
        hs.push_back(std::log(h_ladder[i]));
        ds.push_back(d[i]);
      }
    double exponent = std::numeric_limits<double>::infinity();
    if (hs.size() >= 2) {
      // d ~ C h^p: slope of log d against log h, reusing the log-linear fit.
      exponent = log_slope(hs, ds);
    } else {
      rep.exceeds_resolution = true;
    }
    rep.second_difference.push_back(std::move(d));
    rep.exponent.push_back(exponent);
    rep.min_exponent = std::min(rep.min_exponent, exponent);
  }
  return rep;
}

}  // namespace imcgl
