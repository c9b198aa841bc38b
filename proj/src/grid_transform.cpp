#include "imcgl/grid_transform.hpp"

#include <algorithm>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "imcgl/errors.hpp"

namespace imcgl {

namespace {

enum class Direction { Forward, Inverse };

// In-place unscaled 3D FFT, axis by axis. Forward uses e^{-i}, inverse e^{+i}.
void fft3(Eigen::VectorXcd& data, int n, Direction dir) {
  thread_local Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> line(n), out(n);
  const Eigen::Index strides[3] = {Eigen::Index(n) * n, n, 1};
  for (int axis = 0; axis < 3; ++axis) {
    const Eigen::Index stride = strides[axis];
    const Eigen::Index outer1 = strides[(axis + 1) % 3];
    const Eigen::Index outer2 = strides[(axis + 2) % 3];
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const Eigen::Index base = a * outer1 + b * outer2;
        for (int j = 0; j < n; ++j) line[j] = data[base + j * stride];
        if (dir == Direction::Forward)
          fft.fwd(out, line);
        else
          fft.inv(out, line);
        for (int j = 0; j < n; ++j) data[base + j * stride] = out[j];
      }
    }
  }
}

}  // namespace

GridTransform::GridTransform(int grid_radius, int points_per_axis)
    : radius_(grid_radius), points_(points_per_axis) {
  if (points_per_axis < 2 * grid_radius + 1)
    throw GridError("grid resolution must be at least 2G+1 points per axis");
  const Lattice& lattice = Lattice::of(grid_radius);
  grid_slot_.resize(lattice.size());
  dealias_mask_.resize(lattice.size());
  const int band = dealias_radius();
  auto wrap = [this](int k) { return ((k % points_) + points_) % points_; };
  for (Eigen::Index i = 0; i < lattice.size(); ++i) {
    const ModeIndex n = lattice.mode(i);
    grid_slot_[i] = (wrap(n.k) * points_ + wrap(n.l)) * points_ + wrap(n.m);
    const int reach = std::max({std::abs(n.k), std::abs(n.l), std::abs(n.m)});
    dealias_mask_[i] = reach <= band ? 1.0 : 0.0;
  }
}

GridField GridTransform::to_grid(const SpectralField& u) const {
  if (u.grid_radius() != radius_) throw GridError("resolution mismatch between field and transform");
  const Eigen::Index total = Eigen::Index(points_) * points_ * points_;
  GridField g{points_, Eigen::VectorXcd::Zero(total)};
  for (Eigen::Index i = 0; i < grid_slot_.size(); ++i) g.values[grid_slot_[i]] = u.coeffs()[i];
  fft3(g.values, points_, Direction::Inverse);
  return g;
}

SpectralField GridTransform::from_grid(const GridField& g, bool dealias) const {
  if (g.points != points_) throw GridError("resolution mismatch between grid and transform");
  Eigen::VectorXcd work = g.values;
  fft3(work, points_, Direction::Forward);
  const double scale = 1.0 / (double(points_) * points_ * points_);
  SpectralField u(radius_);
  for (Eigen::Index i = 0; i < grid_slot_.size(); ++i) u.coeffs()[i] = work[grid_slot_[i]] * scale;
  if (dealias) apply_dealias(u);
  return u;
}

Eigen::VectorXcd GridTransform::periodic_coefficients(const GridField& g) const {
  if (g.points != points_) throw GridError("resolution mismatch between grid and transform");
  Eigen::VectorXcd work = g.values;
  fft3(work, points_, Direction::Forward);
  return work / (double(points_) * points_ * points_);
}

Eigen::Index GridTransform::periodic_slot(const ModeIndex& n) const {
  auto wrap = [this](int k) { return ((k % points_) + points_) % points_; };
  return (Eigen::Index(wrap(n.k)) * points_ + wrap(n.l)) * points_ + wrap(n.m);
}

void GridTransform::apply_dealias(SpectralField& u) const {
  u.coeffs().array() *= dealias_mask_;
}

}  // namespace imcgl
