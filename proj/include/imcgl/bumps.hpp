#pragma once

#include <complex>

namespace imcgl {

/// Value and first two derivatives of a scalar profile.
struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// C^infinity step from 0 (x <= 0) to 1 (x >= 1):
///   S(x) = 1 / (1 + exp(sigma (1/x - 1/(1-x)))).
/// sigma is the profile parameter; smaller values flatten the centre.
Jet smooth_step(double x, double sigma = 1.0);

/// Smooth transition between two plateau values over [lo, hi], either linear
/// in the variable or linear in its logarithm.
struct Transition {
  enum class Scale { Linear, Log };

  double lo = 0.0;
  double hi = 1.0;
  double value_lo = 1.0;
  double value_hi = 0.0;
  double sigma = 1.0;
  Scale scale = Scale::Linear;

  Jet operator()(double y) const;
};

/// Complex cut-off phi with phi(z) = z for |z| <= 1, phi(z) = 0 for |z| >= 2
/// and phi(conj z) = conj phi(z). Returns phi and its Wirtinger derivatives.
struct ComplexCutoff {
  Transition radial{1.0, 2.0, 1.0, 0.0, 1.0, Transition::Scale::Linear};

  struct Value {
    std::complex<double> phi;
    std::complex<double> d_z;
    std::complex<double> d_zbar;
  };
  Value operator()(std::complex<double> z) const;
  /// max over z of |phi(z)|, found on the radial profile.
  double max_modulus() const;
  /// max over z of the operator norm |phi_z| + |phi_zbar|.
  double max_derivative_norm() const;
};

/// Smallest ln(hi/lo) for which a log-scale transition from 0 to -1/2 with the
/// given sigma satisfies z |varphi'| <= max(1 + 2 varphi, -varphi), the
/// sufficient condition for the T-map quadratic-form bound.
double varphi_min_log_width(double sigma);

}  // namespace imcgl
