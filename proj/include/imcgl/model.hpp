#pragma once

#include <memory>

#include "imcgl/bumps.hpp"
#include "imcgl/grid_transform.hpp"

namespace imcgl {

/// Fixed scalars of the modified Ginzburg-Landau system.
struct ModelParams {
  double omega = 1.5;             // dispersion, must be nonzero
  double beta = 0.5;              // f = (1 + i beta) u - (1 + i gamma) u |u|^2
  double gamma = 0.5;
  double f_support_radius = 4.0;  // f vanishes for |u| >= this, exact GL for |u| <= half
  double C_star = 4.0;            // amplitude of the W cut-off
  double s = 3.5;                 // s0 + 3/2 < s < 4
  double s0 = 1.75;               // 3/2 < s0 < 2
  double R0 = 40.0;               // theta = 1 for ||u||_H <= R0, 0 beyond 2 R0
  double R1 = 60.0;               // varphi = 0 for ||A^{1/2} P_N u||_H <= R1
  double Rtilde = 240.0;          // varphi = -1/2 beyond Rtilde
  int N = 10;
  int K = 4;

  /// Throws ConfigError naming the violated invariant.
  void validate() const;
};

enum class NonlinearityMode {
  GinzburgLandau,  // F built from the truncated GL nonlinearity
  Zero,            // F == 0 (f == 0 and the T map off)
  Linear,          // F(u) = lambda u, for closed-form checks
};

struct Overrides {
  NonlinearityMode mode = NonlinearityMode::GinzburgLandau;
  Complex linear_rate = 0.0;
  bool t_map = true;
};

/// Spatial discretization: cube radius G, grid points per axis, 2/3 rule.
struct Discretization {
  int grid_radius = 4;
  int grid_points = 0;  // 0 selects 2G + 2
  bool dealias = true;
};

/// The cut-off profiles. varphi's sharpness is chosen at model construction.
struct BumpSpec {
  ComplexCutoff phi;
  Transition varphi;
  Transition theta;
  Transition f_rolloff;
};

/// Immutable bundle of parameters, cut-offs, test overrides and the
/// pseudospectral transform. Cheap to copy (the transform is shared).
class Model {
 public:
  Model(const ModelParams& params, const Discretization& disc, const Overrides& overrides = {});

  const ModelParams& params() const { return params_; }
  const Discretization& discretization() const { return disc_; }
  const Overrides& overrides() const { return overrides_; }
  const BumpSpec& bumps() const { return bumps_; }
  const GridTransform& transform() const { return *transform_; }
  int grid_radius() const { return disc_.grid_radius; }
  int N() const { return params_.N; }
  int K() const { return params_.K; }

  bool is_zero() const { return overrides_.mode == NonlinearityMode::Zero; }

  /// Same model with a different mode split.
  Model with_levels(int N, int K) const;
  Model with_overrides(const Overrides& overrides) const;

  /// The diagonal rate of F'(0): 1 + i beta for GL, lambda for the linear
  /// override, 0 when F vanishes.
  Complex zero_linearization_rate() const;

 private:
  ModelParams params_;
  Discretization disc_;
  Overrides overrides_;
  BumpSpec bumps_;
  std::shared_ptr<const GridTransform> transform_;
};

}  // namespace imcgl
