#include <random>

#include "doctest.h"
#include "imcgl/errors.hpp"
#include "imcgl/grid_transform.hpp"
#include "imcgl/spectral_ops.hpp"
#include "support.hpp"

using namespace imcgl;
using imcgl::testing::random_field;

namespace {

// Brute-force lattice count, independent of enumerate_modes.
int count_modes(int G, int a_lo_exclusive, int a_hi_exclusive) {
  int count = 0;
  for (int k = -G; k <= G; ++k)
    for (int l = -G; l <= G; ++l)
      for (int m = -G; m <= G; ++m) {
        const int a = 1 + k * k + l * l + m * m;
        if (a > a_lo_exclusive && a < a_hi_exclusive) ++count;
      }
  return count;
}

}  // namespace

TEST_CASE("enumerate_modes counts and ordering") {
  CHECK(count_modes(4, 0, 5) == 27);
  const auto low = enumerate_modes(4, ModePredicate::at_most(4));
  CHECK(low.size() == 27u);
  for (std::size_t i = 1; i < low.size(); ++i) CHECK(low[i - 1].a_eig() <= low[i].a_eig());

  const auto zero = enumerate_modes(1, ModePredicate::at_most(1));
  REQUIRE(zero.size() == 1u);
  CHECK(zero[0] == ModeIndex{0, 0, 0});

  const auto shell = enumerate_modes(2, ModePredicate::annulus(10, 2));
  CHECK(int(shell.size()) == count_modes(2, 8, 12));
  CHECK(shell.size() == 36u);  // (2,2,0) and (2,2,1) families

  CHECK_THROWS_AS(enumerate_modes(1, ModePredicate::annulus(40, 4)), GridError);
}

TEST_CASE("sobolev norm closed forms") {
  const double unit = std::pow(2.0 * M_PI, 1.5);
  const SpectralField e0 = SpectralField::basis(3, {0, 0, 0});
  for (double s : {0.0, 1.0, 2.5}) CHECK(sobolev_norm(e0, s) == doctest::Approx(unit).epsilon(1e-14));
  const SpectralField e1 = SpectralField::basis(3, {0, 1, 0});
  CHECK(sobolev_norm(e1, 2.0) == doctest::Approx(2.0 * unit).epsilon(1e-14));
}

TEST_CASE("Parseval against direct grid quadrature") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const SpectralField u = random_field(2, rng);
    const int M = 6;
    const Eigen::VectorXcd g = testing::direct_grid_eval(u, M);
    const double quad = kTorusVolume * g.cwiseAbs2().mean();
    CHECK(sobolev_norm_sq(u, 0.0) == doctest::Approx(quad).epsilon(1e-10));
  }
}

TEST_CASE("norm ordering in s") {
  std::mt19937_64 rng(3);
  const SpectralField u = random_field(3, rng);
  CHECK(sobolev_norm(u, -1.0) <= sobolev_norm(u, 0.0));
  CHECK(sobolev_norm(u, 0.0) <= sobolev_norm(u, 1.75));
  CHECK(sobolev_norm(u, 1.75) <= sobolev_norm(u, 3.5));
}

TEST_CASE("projector algebra") {
  std::mt19937_64 rng(11);
  const int G = 4, N = 10, K = 4;
  for (int trial = 0; trial < 10; ++trial) {
    const SpectralField u = random_field(G, rng);
    const SpectralField pu = project(u, Projector::P_N, N);
    CHECK(max_abs_diff(project(pu, Projector::P_N, N), pu) == 0.0);
    CHECK(project(pu, Projector::Q_N, N).coeffs().cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs_diff(pu + project(u, Projector::Q_N, N), u) <= 1e-15);
    const ModeSplit sp = split_modes(u, N, K);
    CHECK(max_abs_diff(sp.plus + sp.intermediate + sp.minus, u) <= 1e-15);
    // Disjoint supports.
    CHECK((sp.plus.coeffs().cwiseAbs().array() * sp.intermediate.coeffs().cwiseAbs().array()).maxCoeff() == 0.0);
    CHECK((sp.minus.coeffs().cwiseAbs().array() * sp.intermediate.coeffs().cwiseAbs().array()).maxCoeff() == 0.0);
  }
  const SpectralField e = SpectralField::basis(G, {1, 1, 1});  // a = 4 <= N
  CHECK(max_abs_diff(project(e, Projector::P_N, N), e) == 0.0);
  CHECK_THROWS_AS(project(e, Projector::I_NK, 16, 4), GridError);
}

TEST_CASE("split membership follows a_eig") {
  const int G = 4, N = 10, K = 4;
  const SpectralField low = SpectralField::basis(G, {2, 1, 0});     // a = 6 = N-K
  const SpectralField mid = SpectralField::basis(G, {2, 2, 1});     // a = 10
  const SpectralField high = SpectralField::basis(G, {3, 2, 0});    // a = 14 = N+K
  CHECK(max_abs_diff(split_modes(low, N, K).plus, low) == 0.0);
  CHECK(max_abs_diff(split_modes(mid, N, K).intermediate, mid) == 0.0);
  CHECK(max_abs_diff(split_modes(high, N, K).minus, high) == 0.0);
}

TEST_CASE("linear propagator") {
  const SpectralField e0 = SpectralField::basis(2, {0, 0, 0});
  const SpectralField p = apply_linear_propagator(e0, 1.0, 1.0);
  CHECK(std::abs(p[{0, 0, 0}] - std::exp(Complex(-1.0, -1.0))) < 1e-15);

  std::mt19937_64 rng(5);
  const SpectralField u = random_field(3, rng);
  CHECK(max_abs_diff(apply_linear_propagator(u, 0.0, 2.0), u) == 0.0);
  const double t = 0.3;
  CHECK(sobolev_norm(apply_linear_propagator(u, t, 2.0), 0.0) < std::exp(-t) * sobolev_norm(u, 0.0));
  CHECK(sobolev_norm(apply_linear_propagator(2.0 * e0, t, 2.0), 0.0) ==
        doctest::Approx(std::exp(-t) * sobolev_norm(2.0 * e0, 0.0)).epsilon(1e-14));
  const SpectralField composed = apply_linear_propagator(apply_linear_propagator(u, 0.2, 2.0), 0.1, 2.0);
  CHECK(max_abs_diff(composed, apply_linear_propagator(u, 0.3, 2.0)) <= 1e-13);
}

TEST_CASE("grid transform pair") {
  const GridTransform tr(3, 8);
  const SpectralField c0 = SpectralField::basis(3, {0, 0, 0}, Complex(0.5, -2.0));
  const GridField g0 = tr.to_grid(c0);
  CHECK((g0.values.array() - Complex(0.5, -2.0)).abs().maxCoeff() < 1e-15);

  const GridField gn = tr.to_grid(SpectralField::basis(3, {1, -2, 3}));
  CHECK((gn.values.cwiseAbs2().array() - 1.0).abs().maxCoeff() < 1e-13);

  std::mt19937_64 rng(9);
  const SpectralField u = random_field(3, rng);
  CHECK(max_abs_diff(tr.from_grid(tr.to_grid(u)), u) <= 1e-13);
  // Against direct summation.
  const Eigen::VectorXcd direct = testing::direct_grid_eval(u, 8);
  CHECK((tr.to_grid(u).values - direct).cwiseAbs().maxCoeff() < 1e-11);

  CHECK_THROWS_AS(GridTransform(3, 6), GridError);
  CHECK_THROWS_AS(tr.to_grid(SpectralField(2)), GridError);
}

TEST_CASE("conjugate field matches pointwise conjugation") {
  const GridTransform tr(2, 6);
  std::mt19937_64 rng(21);
  const SpectralField u = random_field(2, rng);
  const GridField g = tr.to_grid(conjugate(u));
  CHECK((g.values - tr.to_grid(u).values.conjugate()).cwiseAbs().maxCoeff() < 1e-13);
}
