#include <random>

#include "doctest.h"
#include "imcgl/errors.hpp"
#include "imcgl/manifold_builder.hpp"
#include "support.hpp"

using namespace imcgl;
using imcgl::testing::random_field;
using imcgl::testing::rel_error;

namespace {

constexpr int kG = 4;

Model gl_model() {
  ModelParams p;
  p.N = 10;
  p.K = 4;
  return Model(p, Discretization{kG});
}

Model zero_model() { return gl_model().with_overrides({NonlinearityMode::Zero, 0.0, false}); }

SpectralField low_sample(std::mt19937_64& rng, double norm = 0.05) {
  SpectralField u = project(random_field(kG, rng), Projector::P_N, 10);
  return (norm / sobolev_norm(u, 0.0)) * u;
}

ManifoldOptions options(double tol = 1e-6) {
  ManifoldOptions o;
  o.integrator.dt = 0.02;
  o.tol = tol;
  return o;
}

}  // namespace

TEST_CASE("zero override: backward propagator and a flat graph") {
  const Model model = zero_model();
  std::mt19937_64 rng(3);
  const SpectralField u = low_sample(rng, 1.0);
  const ManifoldOptions o = options();
  const double T = ladder_start(model, o);
  CHECK(T == doctest::Approx(0.72));

  const BvpSolution sol = solve_bvp(model, u, T, o.integrator, o.bvp);
  const SpectralField exact = apply_linear_propagator(u, -T, model.params().omega);
  CHECK(rel_error(sol.u_plus_T, exact) < 1e-12);
  CHECK(sol.residual <= o.bvp.tol);
  CHECK(sol.trajectory.times.front() == doctest::Approx(-T));
  CHECK(sol.trajectory.times.back() == doctest::Approx(0.0).epsilon(1e-12));

  const GraphPoint gp = manifold_value(model, u, o);
  CHECK(gp.ladder.size() == 2u);
  CHECK(sobolev_norm(gp.m_value, 0.0) == 0.0);
  CHECK(gp.cauchy_gap == 0.0);
}

TEST_CASE("origin is a fixed point of the shooting problem") {
  const Model model = gl_model();
  const ManifoldOptions o = options();
  const BvpSolution sol = solve_bvp(model, SpectralField(kG), 0.72, o.integrator, o.bvp);
  CHECK(sobolev_norm(sol.u_plus_T, 0.0) == 0.0);
  for (const SpectralField& s : sol.trajectory.states) CHECK(sobolev_norm(s, 0.0) == 0.0);
}

TEST_CASE("Newton and fixed-point shooting agree") {
  const Model model = gl_model();
  std::mt19937_64 rng(11);
  ManifoldOptions o = options();
  o.bvp.fallback = false;
  for (int trial = 0; trial < 2; ++trial) {
    const SpectralField u = low_sample(rng);
    o.bvp.solver = BvpSolver::Newton;
    const BvpSolution a = solve_bvp(model, u, 0.72, o.integrator, o.bvp);
    o.bvp.solver = BvpSolver::FixedPoint;
    const BvpSolution b = solve_bvp(model, u, 0.72, o.integrator, o.bvp);
    CHECK(a.solver == BvpSolver::Newton);
    CHECK(b.solver == BvpSolver::FixedPoint);
    CHECK(rel_error(a.u_plus_T, b.u_plus_T) < 1e-6);
    CHECK(sobolev_norm(project(a.trajectory.last(), Projector::P_N, 10) - u, 0.0) <= o.bvp.tol);
    CHECK(sobolev_norm(project(a.trajectory.states.front(), Projector::Q_N, 10), 0.0) == 0.0);
  }
}

TEST_CASE("shooting failures carry the best residual") {
  const Model model = gl_model();
  std::mt19937_64 rng(5);
  ManifoldOptions o = options();
  o.bvp.fallback = false;
  o.bvp.max_newton = 0;
  try {
    solve_bvp(model, low_sample(rng), 0.72, o.integrator, o.bvp);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.best_residual() > o.bvp.tol);
  }
  CHECK_THROWS_AS(solve_bvp(model, low_sample(rng), 0.715, o.integrator, o.bvp), ConfigError);
}

TEST_CASE("graph values: Cauchy decay and determining condition") {
  const Model model = gl_model();
  std::mt19937_64 rng(7);
  ManifoldOptions o = options(1e-9);
  o.min_gaps = 2;
  const SpectralField u = low_sample(rng);
  const GraphPoint gp = manifold_value(model, u, o);
  REQUIRE(gp.gaps.size() >= 3u);
  for (std::size_t j = 2; j < gp.gaps.size(); ++j) CHECK(gp.gaps[j] < gp.gaps[j - 1]);
  CHECK(gp.gap_rate > 0.0);
  CHECK(gp.cauchy_gap <= o.tol);
  CHECK(gp.shooting_residual <= o.bvp.tol);
  CHECK(sobolev_norm(project(gp.m_value, Projector::P_N, 10), 0.0) == 0.0);
  CHECK(rel_error(gp.u_plus, u) == 0.0);

  // A different starting iterate converges to the same state at time 0.
  const SpectralField warm = 1.1 * u;
  const BvpSolution other = solve_bvp(model, u, gp.T_used, o.integrator, o.bvp, &warm);
  CHECK(sobolev_norm(other.trajectory.last() - gp.point(), 0.0) <= 2.0 * o.tol);
}

TEST_CASE("Lipschitz probe guards") {
  const Model model = zero_model();
  std::mt19937_64 rng(9);
  const SpectralField a = low_sample(rng), b = low_sample(rng);
  const LipschitzReport rep = lipschitz_probe(model, {a, b, a}, options());
  CHECK(rep.pairs == 2);
  CHECK(rep.excluded == 1);
  CHECK(rep.max_ratio == 0.0);
  CHECK(rep.cone_bound == doctest::Approx(1.0));
  CHECK(rep.within_bound);
}

TEST_CASE("tracking under the zero override follows the high modes") {
  const Model model = zero_model();
  std::mt19937_64 rng(13);
  const SpectralField u0 = random_field(kG, rng, 0.01, 0.2);
  TrackingOptions o;
  o.manifold = options();
  o.horizon = 0.5;
  const TrackingReport rep = tracking_experiment(model, u0, o, "zero");
  REQUIRE(rep.times.size() == 26u);
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    const SpectralField q = apply_linear_propagator(project(u0, Projector::Q_N, 10), rep.times[i], 1.5);
    CHECK(rep.distance[i] == doctest::Approx(sobolev_norm(q, 0.0)).epsilon(1e-10));
  }
  CHECK(rep.rate >= 11.0);
  CHECK(rep.accepted);
  CHECK(rep.id == "zero");
}

TEST_CASE("smoothness probe on synthetic graphs") {
  const Model model = zero_model();
  std::mt19937_64 rng(17);
  const SpectralField u = low_sample(rng, 1.0);
  const std::vector<SpectralField> dirs = {low_sample(rng, 1.0), low_sample(rng, 1.0)};
  const std::vector<double> h = {0.2, 0.1, 0.05, 0.025};

  const SmoothnessReport flat = smoothness_probe(model, u, dirs, h, options());
  CHECK(flat.exceeds_resolution);
  CHECK(std::isinf(flat.min_exponent));

  const ModeIndex target{3, 1, 0};
  const GraphMap quadratic = [&](const SpectralField& p) {
    SpectralField m(kG);
    m[target] = p.coeffs().squaredNorm() + p.coeffs().dot(p.coeffs().reverse());
    return m;
  };
  const SmoothnessReport q = smoothness_probe(model, u, dirs, h, options(), quadratic);
  CHECK_FALSE(q.exceeds_resolution);
  for (double e : q.exponent) CHECK(e == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("graph is better than Lipschitz along a GL direction") {
  const Model model = gl_model();
  std::mt19937_64 rng(42);
  const SpectralField u = low_sample(rng);
  const SpectralField w = low_sample(rng);
  const SmoothnessReport rep = smoothness_probe(model, u, {w}, {0.5, 0.25}, options());
  REQUIRE_FALSE(rep.exceeds_resolution);
  CHECK(rep.second_difference[0][0] > 1e-6);
  CHECK(rep.min_exponent > 1.0);
}
