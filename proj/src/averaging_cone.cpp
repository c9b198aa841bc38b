#include "imcgl/averaging_cone.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "imcgl/errors.hpp"

namespace imcgl {
namespace {

const Complex kI(0.0, 1.0);

AveragingContext make_context(const Model& model, Complex C_ubar) {
  return {C_ubar, model.N(), model.K(), model.params().omega};
}

// b_n = i C_ubar / (2 omega a_n) on intermediate modes, 0 elsewhere.
Eigen::VectorXcd averaging_weights(const AveragingContext& ctx, int grid_radius) {
  if (ctx.factor() >= 0.5) {
    std::ostringstream msg;
    msg << "N-K too small for temporal averaging (factor " << ctx.factor() << ")";
    throw DomainError(msg.str());
  }
  const Eigen::ArrayXd mask = projector_mask(grid_radius, Projector::I_NK, ctx.N, ctx.K);
  const Eigen::ArrayXd& a = Lattice::of(grid_radius).a_eig().array();
  const Complex c = kI * ctx.C_ubar / (2.0 * ctx.omega);
  return (mask / a).cast<Complex>().matrix() * c;
}

int high_indicator(const Model& model, const SpectralField& u) {
  return sobolev_norm(project(u, Projector::P_N, model.N()), 1.0) >= 4.0 * model.params().Rtilde ? 1 : 0;
}

double dense_spectral_norm(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

// Largest singular value by Lanczos on m^T m with full reorthogonalization;
// falls back to the dense eigensolver when the Ritz residual does not settle.
double spectral_norm(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.cols();
  if (n == 0) return 0.0;
  if (n <= 64) return dense_spectral_norm(m);
  const int max_steps = int(std::min<Eigen::Index>(n, 120));
  Eigen::MatrixXd Q(n, max_steps + 1);
  std::vector<double> alpha, beta;
  // Deterministic start with weight on every coordinate.
  Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0);
  q.normalize();
  Q.col(0) = q;
  for (int k = 0; k < max_steps; ++k) {
    Eigen::VectorXd w = m.transpose() * (m * Q.col(k));
    alpha.push_back(Q.col(k).dot(w));
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).transpose() * w);
    const double b = w.norm();
    const int size = k + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(size, size);
    for (int i = 0; i < size; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < size) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
    const Eigen::Index top = size - 1;
    const double theta = eig.eigenvalues()[top];
    const double ritz_residual = b * std::abs(eig.eigenvectors()(top, top));
    if (theta <= 0.0 && b <= 1e-300) return 0.0;
    if (ritz_residual <= 1e-14 * std::max(theta, 1e-300) || b <= 1e-14 * std::max(theta, 1e-300))
      return std::sqrt(std::max(0.0, theta));
    beta.push_back(b);
    Q.col(k + 1) = w / b;
  }
  return dense_spectral_norm(m);
}

// Fourier data of I l1(u) I shared by every (N, K).
struct MultiplierSpectrum {
  const GridTransform* transform = nullptr;
  bool active = false;
  bool dealias = true;
  Eigen::VectorXcd g1, g2;   // periodic coefficients of f_u, f_ubar on the grid
  Averages a;
  Eigen::VectorXcd dz, dzb;  // W'(u) diagonal
};

MultiplierSpectrum spectrum_of(const Linearization& lin, const Model& model) {
  MultiplierSpectrum s;
  s.transform = &model.transform();
  s.dealias = model.discretization().dealias;
  s.active = model.overrides().mode == NonlinearityMode::GinzburgLandau;
  if (!s.active) return s;
  s.g1 = s.transform->periodic_coefficients(lin.f_u_grid());
  s.g2 = s.transform->periodic_coefficients(lin.f_ubar_grid());
  s.a = lin.a();
  s.dz = lin.dW_z();
  s.dzb = lin.dW_zbar();
  return s;
}

std::vector<ModeIndex> annulus_modes(int grid_radius, int N, int K) {
  require_levels_fit(grid_radius, Projector::I_NK, N, K);
  std::vector<ModeIndex> modes = enumerate_modes(grid_radius, ModePredicate::annulus(N, K));
  if (modes.empty()) throw DomainError("empty annulus for the requested N, K");
  return modes;
}

// Columns: real and imaginary unit directions of v at each annulus mode.
Eigen::MatrixXd assemble(const MultiplierSpectrum& s, int grid_radius, int N, int K) {
  const std::vector<ModeIndex> modes = annulus_modes(grid_radius, N, K);
  const int d = int(modes.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  if (!s.active) return out;
  const Lattice& lattice = Lattice::of(grid_radius);
  const GridTransform& tr = *s.transform;
  const int band = tr.dealias_radius();
  std::vector<Eigen::Index> cube(d);
  std::vector<bool> kept(d);
  for (int r = 0; r < d; ++r) {
    cube[r] = lattice.index(modes[r]);
    const ModeIndex& n = modes[r];
    kept[r] = !s.dealias || std::max({std::abs(n.k), std::abs(n.l), std::abs(n.m)}) <= band;
  }
  // Position of -n in the annulus list.
  std::vector<int> opposite(d, -1);
  for (int r = 0; r < d; ++r)
    for (int q = 0; q < d; ++q)
      if (modes[q] == -modes[r]) opposite[r] = q;

  Eigen::VectorXcd y(d);
  for (int j = 0; j < d; ++j) {
    for (int part = 0; part < 2; ++part) {
      // v = e_j (part 0) or i e_j (part 1); delta = W'(u)v is supported at n_j.
      const Complex v = part == 0 ? Complex(1.0) : kI;
      const Complex delta = s.dz[cube[j]] * v + s.dzb[cube[j]] * std::conj(v);
      const Complex delta_bar = std::conj(delta);
      for (int r = 0; r < d; ++r) {
        Complex acc = 0.0;
        if (kept[r]) {
          const ModeIndex& n = modes[r];
          const ModeIndex& m = modes[j];
          acc += s.g1[tr.periodic_slot({n.k - m.k, n.l - m.l, n.m - m.m})] * delta;
          acc += s.g2[tr.periodic_slot({n.k + m.k, n.l + m.l, n.m + m.m})] * delta_bar;
          if (r == j) acc -= s.a.u * delta;
          if (opposite[r] == j) acc -= s.a.ubar * delta_bar;
        }
        y[r] = acc;
      }
      out.col(j + part * d).head(d) = y.real();
      out.col(j + part * d).tail(d) = y.imag();
    }
  }
  return out;
}

bool levels_fit(int grid_radius, int N, int K) {
  return K >= 1 && N - K >= 1 && N + K - 2 <= grid_radius * grid_radius;
}

// Interior centered differences of a sampled scalar.
std::vector<double> centered(const std::vector<double>& f, double h) {
  std::vector<double> d(f.size(), 0.0);
  for (std::size_t i = 1; i + 1 < f.size(); ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  return d;
}

void finalize(ConeCertificate& cert, double h, const ConeOptions& opt) {
  const std::size_t n = cert.V.size();
  cert.mu = opt.mu;
  cert.dV = centered(cert.V, h);
  cert.residual.assign(n, 0.0);
  double scale = 0.0;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double third = (cert.V[i + 2] - 2.0 * cert.V[i + 1] + 2.0 * cert.V[i - 1] - cert.V[i - 2]) / (2.0 * h * h * h);
    scale = std::max(scale, std::abs(third) / (1.0 + cert.z_norm_sq[i]));
  }
  cert.tolerance = opt.tolerance_factor * h * h * scale;
  cert.verdict = true;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    cert.residual[i] = cert.dV[i] + cert.alpha[i] * cert.V[i] + opt.mu * cert.z_norm_sq[i];
    const double margin = cert.residual[i] / (1.0 + cert.z_norm_sq[i]);
    if (margin > cert.worst_margin) {
      cert.worst_margin = margin;
      cert.worst_index = i;
    }
    if (margin > cert.tolerance) cert.verdict = false;
  }
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (cert.V[i] <= 0.0) {
      inside = true;
    } else if (inside && cert.V[i] > opt.boundary_band * cert.z_norm_sq[i]) {
      ++cert.exit_events;
      inside = false;
    }
  }
  if (n > 0) {
    cert.alpha_min = *std::min_element(cert.alpha.begin(), cert.alpha.end());
    cert.alpha_max = *std::max_element(cert.alpha.begin(), cert.alpha.end());
  }
  if (cert.exit_events > 0) cert.verdict = false;
}

void require_admissible(const Model& model, const NSearchResult& adm) {
  if (adm.K != model.K() || !adm.is_admissible(model.N())) {
    std::ostringstream msg;
    msg << "(N, K) = (" << model.N() << ", " << model.K()
        << ") is not admissible for spatial averaging; run n-search for this K first";
    throw DomainError(msg.str());
  }
}

void record(ConeCertificate& cert, double t, const SpectralField& z, double alpha) {
  cert.times.push_back(t);
  cert.V.push_back(cone_V(z, cert.N));
  cert.z_norm_sq.push_back(sobolev_norm_sq(z, 0.0));
  cert.alpha.push_back(alpha);
}

}  // namespace

double AveragingContext::factor() const {
  return std::abs(C_ubar) / (2.0 * std::abs(omega) * double(N - K));
}

AveragingContext averaging_context(const Model& model, const SpectralField& u) {
  return make_context(model, coefficients_C(model, u).ubar);
}

AveragingContext averaging_context(const Model& model, const SpectralField& u1, const SpectralField& u2,
                                   const Quadrature& rule) {
  return make_context(model, coefficients_C_interval(model, u1, u2, rule).ubar);
}

SpectralField transform_to_z(const AveragingContext& ctx, const SpectralField& v) {
  const Eigen::VectorXcd b = averaging_weights(ctx, v.grid_radius());
  SpectralField z = v;
  z.coeffs() += b.cwiseProduct(conjugate(v).coeffs());
  return z;
}

SpectralField transform_from_z(const AveragingContext& ctx, const SpectralField& z) {
  const Eigen::VectorXcd b = averaging_weights(ctx, z.grid_radius());
  SpectralField v(z.grid_radius());
  const Eigen::ArrayXd det = 1.0 - b.array().abs2();
  v.coeffs() = ((z.coeffs() - b.cwiseProduct(conjugate(z).coeffs())).array() / det).matrix();
  return v;
}

double cone_V(const SpectralField& xi, int N) {
  return sobolev_norm_sq(project(xi, Projector::Q_N, N), 0.0) -
         sobolev_norm_sq(project(xi, Projector::P_N, N), 0.0);
}

ConeSide in_cone(const AveragingContext& ctx, const SpectralField& v, double band) {
  const SpectralField z = transform_to_z(ctx, v);
  const double V = cone_V(z, ctx.N);
  const double edge = band * sobolev_norm_sq(z, 0.0);
  if (std::abs(V) <= edge) return ConeSide::Boundary;
  return V < 0.0 ? ConeSide::Inside : ConeSide::Outside;
}

Eigen::MatrixXd sa_operator_matrix(const Linearization& lin, int N, int K) {
  // The Linearization carries the model it was built from.
  return assemble(spectrum_of(lin, lin.model()), lin.model().grid_radius(), N, K);
}

SAOperatorReport sa_operator_norm(const Model& model, const SpectralField& u, int N, int K, double epsilon) {
  const Linearization lin(model, u);
  const Eigen::MatrixXd m = sa_operator_matrix(lin, N, K);
  SAOperatorReport rep;
  rep.N = N;
  rep.K = K;
  rep.annulus_dim = int(m.rows() / 2);
  rep.norm = spectral_norm(m);
  rep.epsilon = epsilon;
  rep.admissible = rep.norm <= epsilon;
  return rep;
}

bool NSearchResult::is_admissible(int N) const {
  return std::find(admissible.begin(), admissible.end(), N) != admissible.end();
}

NSearchResult n_search(const Model& model, int K, double epsilon, int N_lo, int N_hi,
                       const std::vector<SpectralField>& samples) {
  if (samples.empty()) throw DomainError("n-search needs at least one sample");
  NSearchResult res;
  res.K = K;
  res.epsilon = epsilon;
  res.samples = int(samples.size());
  const int G = model.grid_radius();
  std::vector<MultiplierSpectrum> spectra;
  std::vector<Linearization> lins;
  lins.reserve(samples.size());
  for (const auto& u : samples) lins.emplace_back(model, u);
  for (const auto& lin : lins) spectra.push_back(spectrum_of(lin, model));
  for (int N = std::max(N_lo, K + 1); N <= N_hi; ++N) {
    if (!levels_fit(G, N, K)) continue;
    if (enumerate_modes(G, ModePredicate::annulus(N, K)).empty()) continue;
    double worst = 0.0;
    for (const auto& s : spectra) {
      worst = std::max(worst, spectral_norm(assemble(s, G, N, K)));
      if (worst > epsilon) break;
    }
    res.scanned.push_back(N);
    res.max_norm.push_back(worst);
    if (worst <= epsilon) res.admissible.push_back(N);
  }
  if (res.scanned.empty()) throw GridError("no N in the requested range fits the grid for this K");
  return res;
}

ConeCertificate verify_cone_inequality(const Model& model, const NSearchResult& admissibility,
                                       const Trajectory& traj1, const Trajectory& traj2,
                                       const ConeOptions& options) {
  require_admissible(model, admissibility);
  if (traj1.states.size() != traj2.states.size() || traj1.dt() != traj2.dt())
    throw ConfigError("base trajectories are on different time grids");
  ConeCertificate cert;
  cert.N = model.N();
  cert.K = model.K();
  const double N = model.N(), K = model.K();
  for (std::size_t i = 0; i < traj1.states.size(); ++i) {
    const SpectralField& u1 = traj1.states[i];
    const SpectralField& u2 = traj2.states[i];
    const Averages C = coefficients_C_interval(model, u1, u2);
    const SpectralField z = transform_to_z(make_context(model, C.ubar), u1 - u2);
    const int chi = high_indicator(model, u1) + high_indicator(model, u2);
    record(cert, traj1.times[i], z, 2.0 * N + 1.0 - 2.0 * C.u.real() - K / 16.0 * chi);
  }
  finalize(cert, traj1.dt(), options);
  return cert;
}

ConeCertificate verify_cone_inequality(const Model& model, const NSearchResult& admissibility,
                                       const Trajectory& base, const SpectralField& v0,
                                       const ConeOptions& options) {
  require_admissible(model, admissibility);
  const Trajectory v = integrate_variation(model, base, v0);
  ConeCertificate cert;
  cert.N = model.N();
  cert.K = model.K();
  const double N = model.N(), K = model.K();
  for (std::size_t i = 0; i < base.states.size(); ++i) {
    const SpectralField& u = base.states[i];
    const Averages C = coefficients_C(model, u);
    const SpectralField z = transform_to_z(make_context(model, C.ubar), v.states[i]);
    record(cert, base.times[i], z, 2.0 * (N + 0.5 - C.u.real() - K / 8.0 * high_indicator(model, u)));
  }
  finalize(cert, base.dt(), options);
  return cert;
}

SqueezingReport estimate_squeezing(const Model& model, const Trajectory& traj1, const Trajectory& traj2,
                                   double t_begin, double t_end, double band) {
  if (traj1.states.size() != traj2.states.size() || traj1.dt() != traj2.dt())
    throw ConfigError("base trajectories are on different time grids");
  if (!(t_end > t_begin)) throw DomainError("squeezing window must have positive length");
  SqueezingReport rep;
  const double slack = 0.5 * traj1.dt();
  for (std::size_t i = 0; i < traj1.states.size(); ++i) {
    const double t = traj1.times[i];
    if (t < t_begin - slack || t > t_end + slack) continue;
    const SpectralField v = traj1.states[i] - traj2.states[i];
    const double norm = sobolev_norm(v, 0.0);
    if (!(norm > 0.0)) throw DomainError("trajectories coincide inside the squeezing window");
    if (in_cone(averaging_context(model, traj1.states[i], traj2.states[i]), v, band) == ConeSide::Inside) {
      std::ostringstream msg;
      msg << "difference entered the cone at t = " << t;
      throw DomainError(msg.str());
    }
    rep.times.push_back(t);
    rep.log_norm.push_back(std::log(norm));
  }
  const std::size_t n = rep.times.size();
  if (n < 3) throw DomainError("squeezing window holds fewer than three samples");
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rep.times[i];
    y[i] = rep.log_norm[i];
  }
  const Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
  rep.rate = -c[1];
  const double rms = std::sqrt((X * c - y).squaredNorm() / double(n));
  const double span = rep.times.back() - rep.times.front();
  rep.decaying = rep.rate > 0.0;
  rep.fit_residual = rep.decaying ? rms / (rep.rate * span) : std::numeric_limits<double>::infinity();
  return rep;
}

L34Report bound_l3_l4(const Model& model, const SpectralField& u, int N, int K, const SpectralField& v) {
  require_levels_fit(u.grid_radius(), Projector::I_NK, N, K);
  const FPrimeParts parts = F_prime_parts(model, u, v);
  L34Report rep;
  rep.v_norm = sobolev_norm(v, 0.0);
  rep.l3_norm = sobolev_norm(project(parts.l3, Projector::I_NK, N, K), 0.0);
  rep.l4_norm = sobolev_norm(project(parts.l4, Projector::I_NK, N, K), 0.0);
  rep.indicator = sobolev_norm(project(u, Projector::P_N, N), 1.0) >= 4.0 * model.params().Rtilde;
  if (rep.v_norm > 0.0) {
    const double gap = N - K;
    rep.l3_constant = rep.l3_norm / (std::pow(gap, -model.params().s0 / 2.0) * rep.v_norm);
    rep.l4_constant = rep.l4_norm / ((1.0 / std::sqrt(gap) + rep.indicator) * rep.v_norm);
  }
  return rep;
}

}  // namespace imcgl
