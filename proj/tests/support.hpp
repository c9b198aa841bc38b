#pragma once

#include <cmath>
#include <random>

#include "imcgl/model.hpp"
#include "imcgl/spectral_ops.hpp"

namespace imcgl::testing {

/// Random field with Gaussian coefficients damped like exp(-decay |n|^2);
/// restricted to max(|k|,|l|,|m|) <= band when band >= 0.
inline SpectralField random_field(int grid_radius, std::mt19937_64& rng, double amplitude = 1.0,
                                  double decay = 0.0, int band = -1) {
  std::normal_distribution<double> normal;
  SpectralField u(grid_radius);
  const Lattice& lattice = u.lattice();
  for (Eigen::Index i = 0; i < lattice.size(); ++i) {
    const ModeIndex n = lattice.mode(i);
    const double re = normal(rng), im = normal(rng);
    if (band >= 0 && std::max({std::abs(n.k), std::abs(n.l), std::abs(n.m)}) > band) continue;
    u.coeffs()[i] = amplitude * std::exp(-decay * n.lap_eig()) * Complex(re, im);
  }
  return u;
}

/// Direct O(modes * points) evaluation of sum_n u_n e^{i n.x} on the grid
/// x_j = 2 pi j / M; independent of the FFT path.
inline Eigen::VectorXcd direct_grid_eval(const SpectralField& u, int points) {
  const Lattice& lattice = u.lattice();
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(Eigen::Index(points) * points * points);
  const double h = 2.0 * M_PI / points;
  for (int a = 0; a < points; ++a)
    for (int b = 0; b < points; ++b)
      for (int c = 0; c < points; ++c) {
        Complex sum = 0.0;
        for (Eigen::Index i = 0; i < lattice.size(); ++i) {
          const Complex coeff = u.coeffs()[i];
          if (coeff == 0.0) continue;
          const ModeIndex n = lattice.mode(i);
          sum += coeff * std::polar(1.0, h * (n.k * a + n.l * b + n.m * c));
        }
        g[(Eigen::Index(a) * points + b) * points + c] = sum;
      }
  return g;
}

/// Parameters with wide cut-off radii: every test field sits in the
/// plateau regions unless a test narrows them on purpose.
inline ModelParams plateau_params(int N = 10, int K = 4) {
  ModelParams p;
  p.omega = 1.5;
  p.beta = 0.5;
  p.gamma = 0.5;
  p.f_support_radius = 8.0;
  p.C_star = 10.0;
  p.R0 = 1e3;
  p.R1 = 1e3;
  p.Rtilde = 4e3;
  p.N = N;
  p.K = K;
  return p;
}

inline double rel_error(const SpectralField& got, const SpectralField& want) {
  const double denom = sobolev_norm(want, 0.0);
  const double diff = sobolev_norm(got - want, 0.0);
  return denom == 0.0 ? diff : diff / denom;
}

}  // namespace imcgl::testing
