#include "imcgl/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "imcgl/errors.hpp"

namespace imcgl {

double sobolev_norm_sq(const SpectralField& u, double s) {
  const Eigen::ArrayXd& a = u.lattice().a_eig().array();
  const Eigen::ArrayXd w = s == 0.0 ? Eigen::ArrayXd::Ones(a.size()) : a.pow(s).eval();
  return kTorusVolume * (w * u.coeffs().array().abs2()).sum();
}

double sobolev_norm(const SpectralField& u, double s) { return std::sqrt(sobolev_norm_sq(u, s)); }

Complex inner(const SpectralField& u, const SpectralField& v) {
  if (!u.same_grid(v)) throw GridError("fields live on different grids");
  // Eigen's dot conjugates its first argument.
  return kTorusVolume * v.coeffs().dot(u.coeffs());
}

SpectralField conjugate(const SpectralField& u) {
  return SpectralField(u.grid_radius(), u.coeffs().reverse().conjugate());
}

SpectralField apply_A_power(const SpectralField& u, double p) {
  const Eigen::ArrayXd w = u.lattice().a_eig().array().pow(p);
  return SpectralField(u.grid_radius(), (u.coeffs().array() * w).matrix());
}

void require_levels_fit(int grid_radius, Projector which, int N, int K) {
  if (N < 1) throw DomainError("N must be positive");
  const bool uses_k = which == Projector::I_NK || which == Projector::P_NK || which == Projector::Q_NK;
  if (uses_k && (K <= 0 || K >= N)) throw DomainError("K must satisfy 0 < K < N");
  // Every mode with a_eig < top (resp. <= N) must lie inside the cube.
  const int max_lap = uses_k ? N + K - 2 : N - 1;
  if (max_lap > grid_radius * grid_radius) throw GridError("grid too small for requested N,K");
}

Eigen::ArrayXd projector_mask(int grid_radius, Projector which, int N, int K) {
  require_levels_fit(grid_radius, which, N, K);
  const Eigen::ArrayXd& a = Lattice::of(grid_radius).a_eig().array();
  const Eigen::ArrayXd lower = (a <= N).cast<double>();
  const Eigen::ArrayXd inter = ((a > N - K) && (a < N + K)).cast<double>();
  switch (which) {
    case Projector::P_N: return lower;
    case Projector::Q_N: return 1.0 - lower;
    case Projector::I_NK: return inter;
    case Projector::P_NK: return lower * (1.0 - inter);
    case Projector::Q_NK: return (1.0 - lower) * (1.0 - inter);
  }
  return lower;
}

SpectralField project(const SpectralField& u, Projector which, int N, int K) {
  const Eigen::ArrayXd mask = projector_mask(u.grid_radius(), which, N, K);
  return SpectralField(u.grid_radius(), (u.coeffs().array() * mask).matrix());
}

ModeSplit split_modes(const SpectralField& u, int N, int K) {
  return {project(u, Projector::P_NK, N, K), project(u, Projector::I_NK, N, K),
          project(u, Projector::Q_NK, N, K)};
}

Complex propagator_factor(double a_eig, double t, double omega) {
  return std::exp(Complex(-a_eig * t, -omega * a_eig * t));
}

SpectralField apply_linear_propagator(const SpectralField& u, double t, double omega) {
  const Eigen::VectorXd& a = u.lattice().a_eig();
  SpectralField out = u;
  for (Eigen::Index i = 0; i < a.size(); ++i) out.coeffs()[i] *= propagator_factor(a[i], t, omega);
  return out;
}

bool ModePredicate::accepts(int a_eig) const {
  switch (kind) {
    case Kind::All: return true;
    case Kind::AtMost: return a_eig <= N;
    case Kind::Above: return a_eig > N;
    case Kind::Annulus: return a_eig > N - K && a_eig < N + K;
  }
  return false;
}

std::vector<ModeIndex> enumerate_modes(int grid_radius, const ModePredicate& predicate) {
  const Lattice& lattice = Lattice::of(grid_radius);
  // Shells cut by the cube are returned partially; a range that starts above
  // the largest eigenvalue in the cube is an error.
  const int top = 1 + 3 * grid_radius * grid_radius;
  int lowest = 1;
  switch (predicate.kind) {
    case ModePredicate::Kind::All: break;
    case ModePredicate::Kind::AtMost: lowest = 1; break;
    case ModePredicate::Kind::Above: lowest = predicate.N + 1; break;
    case ModePredicate::Kind::Annulus: lowest = predicate.N - predicate.K + 1; break;
  }
  if (lowest > top) throw GridError("grid too small for requested N,K");
  std::vector<ModeIndex> modes;
  for (Eigen::Index i = 0; i < lattice.size(); ++i) {
    const ModeIndex n = lattice.mode(i);
    if (predicate.accepts(n.a_eig())) modes.push_back(n);
  }
  std::sort(modes.begin(), modes.end(), [](const ModeIndex& x, const ModeIndex& y) {
    return std::tuple(x.a_eig(), x.k, x.l, x.m) < std::tuple(y.a_eig(), y.k, y.l, y.m);
  });
  return modes;
}

}  // namespace imcgl
