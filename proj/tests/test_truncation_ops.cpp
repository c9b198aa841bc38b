#include <random>

#include "doctest.h"
#include "imcgl/nonlinearity.hpp"
#include "support.hpp"

using namespace imcgl;
using imcgl::testing::plateau_params;
using imcgl::testing::random_field;
using imcgl::testing::rel_error;

namespace {

const Complex kI(0.0, 1.0);

Model plateau_model(int G = 4, int N = 10, int K = 4) {
  Discretization disc;
  disc.grid_radius = G;
  return Model(plateau_params(N, K), disc);
}

// Largest rescaled coefficient a^{s/2}|u_n| / C_*.
double max_rescaled(const Model& model, const SpectralField& u) {
  const Eigen::ArrayXd lam = u.lattice().a_eig().array().pow(model.params().s / 2.0);
  return (lam * u.coeffs().array().abs()).maxCoeff() / model.params().C_star;
}

// Field scaled so every rescaled coefficient sits at |z| <= target.
SpectralField scaled_to(const Model& model, SpectralField u, double target) {
  return (target / max_rescaled(model, u)) * u;
}

template <class Map>
SpectralField central_difference(Map&& map, const SpectralField& u, const SpectralField& v, double h) {
  return (1.0 / (2.0 * h)) * (map(u + h * v) - map(u - h * v));
}

}  // namespace

TEST_CASE("eval_f closed forms and derivatives") {
  const Model model = plateau_model();
  const double beta = model.params().beta, gamma = model.params().gamma;
  const FJet z = eval_f(model, 0.0);
  CHECK(std::abs(z.f) == 0.0);
  CHECK(std::abs(z.f_u - Complex(1.0, beta)) < 1e-15);
  CHECK(std::abs(z.f_ubar) == 0.0);
  CHECK(std::abs(eval_f(model, 1.0).f - kI * (beta - gamma)) < 1e-15);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double h = 1e-6;
  // Samples cover the plateau and the roll-off shell.
  for (int trial = 0; trial < 200; ++trial) {
    const double r = 0.1 + 7.5 * (trial / 200.0);
    const Complex u = std::polar(r, M_PI * unif(rng));
    const Complex d = std::polar(1.0, M_PI * unif(rng));
    const FJet j = eval_f(model, u);
    const Complex fd = (eval_f(model, u + h * d).f - eval_f(model, u - h * d).f) / (2.0 * h);
    const Complex an = j.f_u * d + j.f_ubar * std::conj(d);
    CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    const FHessian hs = eval_f_hessian(model, u);
    const FJet jp = eval_f(model, u + h * d), jm = eval_f(model, u - h * d);
    const Complex fu_fd = (jp.f_u - jm.f_u) / (2.0 * h);
    const Complex fub_fd = (jp.f_ubar - jm.f_ubar) / (2.0 * h);
    CHECK(std::abs(fu_fd - (hs.uu * d + hs.uubar * std::conj(d))) <= 1e-5 * std::max(1.0, std::abs(fu_fd)));
    CHECK(std::abs(fub_fd - (hs.uubar * d + hs.ubarubar * std::conj(d))) <=
          1e-5 * std::max(1.0, std::abs(fub_fd)));
  }
  CHECK(std::abs(eval_f(model, 8.5).f) == 0.0);
}

TEST_CASE("W identity region, vanishing and sup bound") {
  const Model model = plateau_model();
  std::mt19937_64 rng(2);
  const SpectralField u = scaled_to(model, random_field(4, rng), 0.95);
  CHECK(max_abs_diff(truncate_W(model, u), u) <= 1e-15 * u.coeffs().cwiseAbs().maxCoeff());

  const ModeIndex n{1, 2, 0};
  const double lam = std::pow(n.a_eig(), model.params().s / 2.0);
  const SpectralField big = SpectralField::basis(4, n, 2.5 * model.params().C_star / lam);
  CHECK(std::abs(truncate_W(model, big)[n]) == 0.0);

  const double s0 = model.params().s0;
  const double bound = W_sup_bound(model, s0);
  for (int trial = 0; trial < 50; ++trial) {
    const SpectralField w = truncate_W(model, scaled_to(model, random_field(4, rng), 0.5 + 0.05 * trial));
    CHECK(sobolev_norm(w, s0) <= bound);
  }
  // The bound is attained by putting every rescaled coefficient at the argmax of |phi|.
  double r_best = 0.0, best = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double r = 1.0 + i / 20000.0;
    const double m = std::abs(model.bumps().phi(r).phi);
    if (m > best) best = m, r_best = r;
  }
  SpectralField extremal(4);
  const Eigen::ArrayXd lam_all = extremal.lattice().a_eig().array().pow(model.params().s / 2.0);
  extremal.coeffs() = (r_best * model.params().C_star / lam_all).cast<Complex>().matrix();
  CHECK(sobolev_norm(truncate_W(model, extremal), s0) == doctest::Approx(bound).epsilon(1e-6));
}

TEST_CASE("W prime against central differences and its diagonal bound") {
  const Model model = plateau_model();
  std::mt19937_64 rng(3);
  const SpectralField id = scaled_to(model, random_field(4, rng), 0.8);
  const SpectralField v0 = random_field(4, rng);
  CHECK(max_abs_diff(W_prime_apply(model, id, v0), v0) <= 1e-15);

  const double dmax = model.bumps().phi.max_derivative_norm();
  for (int trial = 0; trial < 20; ++trial) {
    const SpectralField u = scaled_to(model, random_field(4, rng), 2.2);  // spans the transition shell
    const SpectralField v = scaled_to(model, random_field(4, rng), 1.0);
    const auto W = [&](const SpectralField& x) { return truncate_W(model, x); };
    CHECK(rel_error(central_difference(W, u, v, 1e-6), W_prime_apply(model, u, v)) <= 1e-4);
    for (double kappa : {0.0, model.params().s0})
      CHECK(sobolev_norm(W_prime_apply(model, u, v), kappa) <= dmax * sobolev_norm(v, kappa) * (1 + 1e-12));
  }
}

TEST_CASE("T map plateaus and derivative") {
  const int G = 4, N = 10, K = 4;
  ModelParams p = plateau_params(N, K);
  p.R1 = 2.0;
  p.Rtilde = 8.0;
  Discretization disc;
  disc.grid_radius = G;
  const Model model(p, disc);
  std::mt19937_64 rng(4);

  const auto t_norm = [&](const SpectralField& u) {
    return sobolev_norm(project(u, Projector::P_N, N), 1.0);
  };
  const auto scaled_T = [&](double target) {
    const SpectralField u = random_field(G, rng);
    return (target / t_norm(u)) * u;
  };

  CHECK(sobolev_norm(map_T(model, scaled_T(1.9)), 0.0) == 0.0);

  const SpectralField big = scaled_T(8.5);
  const SpectralField dir = apply_A_power(project(big, Projector::P_N, N), 0.5);
  CHECK(max_abs_diff(map_T(model, big), -0.5 * dir) <= 1e-14 * dir.coeffs().cwiseAbs().maxCoeff());
  const SpectralField v = random_field(G, rng);
  const SpectralField pv = project(v, Projector::P_N, N);
  CHECK(inner(T_prime_apply(model, big, pv), pv).real() ==
        doctest::Approx(-0.5 * sobolev_norm_sq(pv, 0.5)).epsilon(1e-12));

  const auto T = [&](const SpectralField& x) { return map_T(model, x); };
  for (double target : {2.5, 4.0, 6.0, 7.5}) {
    const SpectralField u = scaled_T(target);
    const SpectralField w = random_field(G, rng);
    CHECK(rel_error(central_difference(T, u, w, 1e-6), T_prime_apply(model, u, w)) <= 1e-4);
  }
}

TEST_CASE("spatial averages and C coefficients") {
  const Model model = plateau_model();
  const double beta = model.params().beta, gamma = model.params().gamma;
  const Averages a0 = spatial_average(model, SpectralField(4));
  CHECK(std::abs(a0.u - Complex(1.0, beta)) < 1e-14);
  CHECK(std::abs(a0.ubar) < 1e-14);

  const Complex c(0.3, -0.2);
  const Averages ac = spatial_average(model, SpectralField::basis(4, {0, 0, 0}, c));
  CHECK(std::abs(ac.u - (Complex(1.0, beta) - 2.0 * Complex(1.0, gamma) * std::norm(c))) < 1e-14);
  CHECK(std::abs(ac.ubar + Complex(1.0, gamma) * c * c) < 1e-14);

  const Averages an = spatial_average(model, SpectralField::basis(4, {1, 0, -1}, 1e-3));
  CHECK(std::abs(an.ubar) < 1e-17);

  std::mt19937_64 rng(5);
  const SpectralField u = scaled_to(model, random_field(4, rng), 0.5);
  REQUIRE(sobolev_norm(u, 0.0) <= model.params().R0);
  const Averages cu = coefficients_C(model, u), au = spatial_average(model, truncate_W(model, u));
  CHECK(cu.u == au.u);
  CHECK(cu.ubar == au.ubar);

  const SpectralField far = SpectralField::basis(4, {0, 0, 0}, 2.01 * model.params().R0 / std::sqrt(kTorusVolume));
  const Averages cf = coefficients_C(model, far);
  CHECK(cf.u == 0.0);
  CHECK(cf.ubar == 0.0);

  const Averages cz = coefficients_C(model, SpectralField(4));
  CHECK(std::abs(cz.u - Complex(1.0, beta)) < 1e-14);
  CHECK(std::abs(cz.ubar) < 1e-14);
}

TEST_CASE("F in the zero override and in the absorbing region") {
  const Model model = plateau_model();
  std::mt19937_64 rng(6);
  const Model zero = model.with_overrides({NonlinearityMode::Zero, 0.0, false});
  for (int trial = 0; trial < 5; ++trial)
    CHECK(nonlinearity_F(zero, random_field(4, rng, 10.0)).coeffs().cwiseAbs().maxCoeff() == 0.0);

  // Small smooth fields: W = identity, theta = 1, T = 0, so F is f.
  const SpectralField u = scaled_to(model, random_field(4, rng, 1.0, 0.3), 0.9);
  const GridTransform& tr = model.transform();
  GridField g = tr.to_grid(u);
  for (auto& x : g.values) x = eval_f(model, x).f;
  const SpectralField f_u = tr.from_grid(g, false);

  Discretization raw = model.discretization();
  raw.dealias = false;
  const Model undealiased(model.params(), raw);
  CHECK(rel_error(nonlinearity_F(undealiased, u), f_u) <= 1e-12);

  // Dealiased: f on the resolved band, the mean-field term a(u)u beyond it.
  const Averages a = spatial_average(model, u);
  SpectralField want = f_u - (a.u * u + a.ubar * conjugate(u));
  tr.apply_dealias(want);
  want += a.u * u + a.ubar * conjugate(u);
  CHECK(rel_error(nonlinearity_F(model, u), want) <= 1e-12);
  SpectralField band_only = nonlinearity_F(model, u) - f_u;
  tr.apply_dealias(band_only);
  CHECK(sobolev_norm(band_only, 0.0) <= 1e-12 * sobolev_norm(f_u, 0.0));
}

TEST_CASE("F prime parts, zero base point and central differences") {
  const Model model = plateau_model();
  std::mt19937_64 rng(7);
  const double beta = model.params().beta;

  const SpectralField v = random_field(4, rng);
  const FPrimeParts z = F_prime_parts(model, SpectralField(4), v);
  CHECK(std::abs(z.l1[{0, 0, 0}]) < 1e-14);
  CHECK(max_abs_diff(z.l2, Complex(1.0, beta) * v) <= 1e-14);

  ModelParams p = plateau_params();
  p.C_star = 0.05;  // pushes coefficients into the phi transition
  p.R0 = 0.6;
  p.R1 = 0.5;
  p.Rtilde = 2.5;
  p.f_support_radius = 1.0;
  Discretization disc;
  disc.grid_radius = 4;
  const Model curved(p, disc);
  for (int trial = 0; trial < 10; ++trial) {
    const SpectralField u = random_field(4, rng, 0.08, 0.15);
    const SpectralField w = random_field(4, rng, 0.08, 0.15);
    const FPrimeParts parts = F_prime_parts(curved, u, w);
    const SpectralField total = F_prime_apply(curved, u, w);
    CHECK(max_abs_diff(parts.l1 + parts.l2 + parts.l3 + parts.l4 - parts.t_prime, total) <=
          1e-14 * std::max(1.0, total.coeffs().cwiseAbs().maxCoeff()));
    const auto F = [&](const SpectralField& x) { return nonlinearity_F(curved, x); };
    CHECK(rel_error(central_difference(F, u, w, 1e-5), total) <= 1e-3);
  }
}

TEST_CASE("interval derivative") {
  const Model model = plateau_model();
  std::mt19937_64 rng(8);
  const SpectralField u = random_field(4, rng, 0.05, 0.2);
  const SpectralField v = random_field(4, rng);
  CHECK(rel_error(F_prime_interval(model, u, u, v), F_prime_apply(model, u, v)) <= 1e-12);

  const SpectralField u1 = random_field(4, rng, 0.05, 0.2);
  const SpectralField u2 = random_field(4, rng, 0.05, 0.2);
  const Quadrature fine = Quadrature::gauss_legendre(8, 4);
  const SpectralField lhs = nonlinearity_F(model, u1) - nonlinearity_F(model, u2);
  CHECK(rel_error(F_prime_interval(model, u1, u2, u1 - u2, fine), lhs) <= 1e-6);
  CHECK(rel_error(F_prime_interval(model, u1, u2, v, fine), F_prime_interval(model, u2, u1, v, fine)) <= 1e-6);
  CHECK(rel_error(IntervalLinearization(model, u1, u2, fine).apply(u1 - u2), lhs) <= 1e-6);
}
