#pragma once

#include <cmath>
#include <random>

#include "imcgl/nonlinearity.hpp"
#include "support.hpp"

namespace imcgl::testing {

// I l1 I and its adjoint for the real inner product Re sum u conj(v), built
// directly from grid products. Used as an independent operator for power
// iteration.
struct AnnulusOperator {
  const Linearization& lin;
  const GridTransform& tr;
  Eigen::ArrayXd annulus;
  bool dealias;

  SpectralField restrict(const SpectralField& v) const {
    SpectralField out = v;
    out.coeffs().array() *= annulus;
    return out;
  }
  SpectralField mask(SpectralField v) const {
    if (dealias) tr.apply_dealias(v);
    return v;
  }
  SpectralField apply(const SpectralField& v) const {
    const SpectralField d = lin.W_prime(restrict(v));
    GridField g = tr.to_grid(d);
    for (Eigen::Index j = 0; j < g.values.size(); ++j)
      g.values[j] = lin.f_u_grid().values[j] * g.values[j] + lin.f_ubar_grid().values[j] * std::conj(g.values[j]);
    SpectralField out = tr.from_grid(g, false);
    out -= lin.a().u * d + lin.a().ubar * conjugate(d);
    return restrict(mask(out));
  }
  SpectralField adjoint(const SpectralField& y) const {
    const SpectralField r = restrict(y);
    GridField g = tr.to_grid(mask(r));
    for (Eigen::Index j = 0; j < g.values.size(); ++j)
      g.values[j] = std::conj(lin.f_u_grid().values[j]) * g.values[j] +
                    lin.f_ubar_grid().values[j] * std::conj(g.values[j]);
    SpectralField w = tr.from_grid(g, false);
    w -= std::conj(lin.a().u) * mask(r) + lin.a().ubar * conjugate(mask(r));
    // W'(u)^* y = conj(dW_z) y + dW_zbar conj(y), coefficient-wise.
    SpectralField out(w.grid_radius());
    out.coeffs() = lin.dW_z().conjugate().cwiseProduct(w.coeffs()) + lin.dW_zbar().cwiseProduct(w.coeffs().conjugate());
    return restrict(out);
  }
};

inline double power_iteration_norm(const AnnulusOperator& op, std::mt19937_64& rng, int max_iter = 20000) {
  SpectralField x = op.restrict(random_field(op.tr.grid_radius(), rng));
  double sigma_sq = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    x *= Complex(1.0 / std::sqrt(x.coeffs().squaredNorm()));
    const SpectralField y = op.adjoint(op.apply(x));
    const double next = x.coeffs().dot(y.coeffs()).real();
    x = y;
    if (it > 50 && std::abs(next - sigma_sq) <= 1e-16 * next) {
      sigma_sq = next;
      break;
    }
    sigma_sq = next;
  }
  return std::sqrt(sigma_sq);
}

}  // namespace imcgl::testing
