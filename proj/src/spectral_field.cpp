#include "imcgl/spectral_field.hpp"

#include "imcgl/errors.hpp"

namespace imcgl {

SpectralField::SpectralField(int grid_radius)
    : radius_(grid_radius), coeffs_(Eigen::VectorXcd::Zero(Lattice::of(grid_radius).size())) {}

SpectralField::SpectralField(int grid_radius, Eigen::VectorXcd coeffs)
    : radius_(grid_radius), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != Lattice::of(grid_radius).size())
    throw GridError("coefficient count does not match (2G+1)^3");
}

SpectralField SpectralField::basis(int grid_radius, const ModeIndex& n, Complex c) {
  SpectralField u(grid_radius);
  u[n] = c;
  return u;
}

bool SpectralField::all_finite() const { return coeffs_.allFinite(); }

namespace {
void require_same_grid(const SpectralField& a, const SpectralField& b) {
  if (!a.same_grid(b)) throw GridError("fields live on different grids");
}
}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& rhs) {
  require_same_grid(*this, rhs);
  coeffs_ += rhs.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& rhs) {
  require_same_grid(*this, rhs);
  coeffs_ -= rhs.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator*=(Complex c) {
  coeffs_ *= c;
  return *this;
}

SpectralField operator+(SpectralField lhs, const SpectralField& rhs) { return lhs += rhs; }
SpectralField operator-(SpectralField lhs, const SpectralField& rhs) { return lhs -= rhs; }
SpectralField operator*(Complex c, SpectralField u) { return u *= c; }
SpectralField operator*(SpectralField u, Complex c) { return u *= c; }

double max_abs_diff(const SpectralField& u, const SpectralField& v) {
  require_same_grid(u, v);
  return (u.coeffs() - v.coeffs()).cwiseAbs().maxCoeff();
}

}  // namespace imcgl
