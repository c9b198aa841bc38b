#pragma once

#include <complex>

#include <Eigen/Core>

#include "imcgl/lattice.hpp"

namespace imcgl {

using Complex = std::complex<double>;

/// Complex Fourier coefficients u_n of a (genuinely complex-valued) function on
/// the torus [-pi, pi]^3, one per mode of the cube |k|,|l|,|m| <= G:
///   u(x) = sum_n u_n e^{i n.x}.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int grid_radius);
  SpectralField(int grid_radius, Eigen::VectorXcd coeffs);

  /// c * e_n.
  static SpectralField basis(int grid_radius, const ModeIndex& n, Complex c = 1.0);

  int grid_radius() const { return radius_; }
  const Lattice& lattice() const { return Lattice::of(radius_); }
  Eigen::Index size() const { return coeffs_.size(); }

  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  Eigen::VectorXcd& coeffs() { return coeffs_; }

  Complex operator[](const ModeIndex& n) const { return coeffs_[lattice().index(n)]; }
  Complex& operator[](const ModeIndex& n) { return coeffs_[lattice().index(n)]; }

  bool all_finite() const;
  bool same_grid(const SpectralField& other) const { return radius_ == other.radius_; }

  SpectralField& operator+=(const SpectralField& rhs);
  SpectralField& operator-=(const SpectralField& rhs);
  SpectralField& operator*=(Complex c);

 private:
  int radius_ = 0;
  Eigen::VectorXcd coeffs_;
};

SpectralField operator+(SpectralField lhs, const SpectralField& rhs);
SpectralField operator-(SpectralField lhs, const SpectralField& rhs);
SpectralField operator*(Complex c, SpectralField u);
SpectralField operator*(SpectralField u, Complex c);

/// Largest coefficient-wise modulus of u - v.
double max_abs_diff(const SpectralField& u, const SpectralField& v);

}  // namespace imcgl
