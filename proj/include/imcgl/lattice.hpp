#pragma once

#include <Eigen/Core>

namespace imcgl {

/// Integer wavenumber triple n = (k, l, m) on the torus lattice.
struct ModeIndex {
  int k = 0;
  int l = 0;
  int m = 0;

  /// |n|^2, the Laplacian eigenvalue.
  int lap_eig() const { return k * k + l * l + m * m; }
  /// 1 + |n|^2, the eigenvalue of A = 1 - Laplacian.
  int a_eig() const { return 1 + lap_eig(); }

  ModeIndex operator-() const { return {-k, -l, -m}; }
  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

/// Dense cube |k|,|l|,|m| <= G of Fourier modes, stored lexicographically in
/// (k, l, m). Tables are shared between all fields of the same radius.
class Lattice {
 public:
  explicit Lattice(int grid_radius);

  /// Cached instance for a radius; thread-safe.
  static const Lattice& of(int grid_radius);

  int grid_radius() const { return radius_; }
  int side() const { return 2 * radius_ + 1; }
  Eigen::Index size() const { return a_eig_.size(); }

  bool contains(const ModeIndex& n) const;
  Eigen::Index index(const ModeIndex& n) const;
  ModeIndex mode(Eigen::Index i) const;

  /// Index of -n for the mode stored at i.
  Eigen::Index negated(Eigen::Index i) const { return size() - 1 - i; }

  /// 1 + |n|^2 per stored mode.
  const Eigen::VectorXd& a_eig() const { return a_eig_; }
  /// Largest |n|^2 such that every mode with that |n|^2 or less is inside.
  int complete_lap_radius() const { return radius_ * radius_; }

 private:
  int radius_;
  Eigen::VectorXd a_eig_;
};

}  // namespace imcgl
