#pragma once

#include "imcgl/spectral_field.hpp"

namespace imcgl {

/// Values of a complex function on the uniform grid x_j = 2 pi j / M of the
/// torus, j in [0, M)^3, flattened with the last axis fastest.
struct GridField {
  int points = 0;
  Eigen::VectorXcd values;
};

/// Pseudospectral transform pair between a SpectralField of radius G and an
/// M^3 grid (M >= 2G + 1). Stateless apart from precomputed index maps; safe
/// to share across threads.
class GridTransform {
 public:
  GridTransform(int grid_radius, int points_per_axis);

  int grid_radius() const { return radius_; }
  int points() const { return points_; }
  /// Modes with max(|k|,|l|,|m|) above this are zeroed by dealiased products.
  int dealias_radius() const { return (2 * radius_) / 3; }

  /// u(x_j) = sum_n u_n e^{i n.x_j}.
  GridField to_grid(const SpectralField& u) const;
  /// Inverse of to_grid on the cube; with dealias set, modes beyond the 2/3
  /// band are zeroed.
  SpectralField from_grid(const GridField& g, bool dealias = false) const;

  /// All M^3 discrete Fourier coefficients (1/M^3) sum_j g_j e^{-i p.x_j},
  /// indexed like the grid with p taken modulo M.
  Eigen::VectorXcd periodic_coefficients(const GridField& g) const;
  /// Flattened index of wavevector n modulo M.
  Eigen::Index periodic_slot(const ModeIndex& n) const;

  /// Grid mean (1/M^3) sum_j g_j, i.e. the zero mode of from_grid.
  static Complex mean(const GridField& g) { return g.values.mean(); }

  /// Zeroes coefficients beyond the dealias band.
  void apply_dealias(SpectralField& u) const;

 private:
  int radius_;
  int points_;
  Eigen::VectorXi grid_slot_;        // stored mode -> flattened grid index
  Eigen::ArrayXd dealias_mask_;      // per stored mode
};

}  // namespace imcgl
