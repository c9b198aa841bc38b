#include "imcgl/model.hpp"

#include <cmath>

#include "imcgl/errors.hpp"
#include "imcgl/spectral_ops.hpp"

namespace imcgl {

void ModelParams::validate() const {
  auto fail = [](const char* key, const char* rule) {
    throw ConfigError(std::string("invalid ") + key + ": requires " + rule);
  };
  if (!(omega != 0.0) || !std::isfinite(omega)) fail("omega", "omega ≠ 0");
  if (!std::isfinite(beta)) fail("beta", "a finite value");
  if (!std::isfinite(gamma)) fail("gamma", "a finite value");
  if (!(s0 > 1.5 && s0 < 2.0)) fail("s0", "3/2 < s0 < 2");
  if (!(s > s0 + 1.5 && s < 4.0)) fail("s", "s0 + 3/2 < s < 4");
  if (!(K > 0 && K < N)) fail("K", "0 < K < N");
  if (!(R1 > 0.0)) fail("R1", "R1 > 0");
  if (!(Rtilde > R1)) fail("Rtilde", "Rtilde > R1 > 0");
  if (!(R0 > 0.0)) fail("R0", "R0 > 0");
  if (!(C_star > 0.0)) fail("C_star", "C_star > 0");
  if (!(f_support_radius > 0.0)) fail("f_support_radius", "f_support_radius > 0");
}

namespace {

// Flattest profile of the sampled family for the varphi transition.
double choose_varphi_sigma(double log_width) {
  double best_sigma = 0.5;
  double best_need = varphi_min_log_width(best_sigma);
  for (double sigma : {0.45, 0.55, 0.6}) {
    const double need = varphi_min_log_width(sigma);
    if (need < best_need) best_need = need, best_sigma = sigma;
  }
  if (best_need > log_width)
    throw ConfigError("invalid Rtilde: the varphi transition needs ln(Rtilde^2/R1^2) >= " +
                      std::to_string(best_need));
  return best_sigma;
}

}  // namespace

Model::Model(const ModelParams& params, const Discretization& disc, const Overrides& overrides)
    : params_(params), disc_(disc), overrides_(overrides) {
  params_.validate();
  if (disc_.grid_points == 0) disc_.grid_points = 2 * disc_.grid_radius + 2;
  require_levels_fit(disc_.grid_radius, Projector::I_NK, params_.N, params_.K);
  transform_ = std::make_shared<const GridTransform>(disc_.grid_radius, disc_.grid_points);

  using Scale = Transition::Scale;
  const double r1sq = params_.R1 * params_.R1;
  const double rtsq = params_.Rtilde * params_.Rtilde;
  const double sigma = choose_varphi_sigma(std::log(rtsq / r1sq));
  bumps_.varphi = {r1sq, rtsq, 0.0, -0.5, sigma, Scale::Log};
  const double r0sq = params_.R0 * params_.R0;
  bumps_.theta = {r0sq, 4.0 * r0sq, 1.0, 0.0, 1.0, Scale::Linear};
  const double rf = params_.f_support_radius;
  bumps_.f_rolloff = {0.25 * rf * rf, rf * rf, 1.0, 0.0, 1.0, Scale::Linear};
}

Model Model::with_levels(int N, int K) const {
  ModelParams p = params_;
  p.N = N;
  p.K = K;
  return Model(p, disc_, overrides_);
}

Model Model::with_overrides(const Overrides& overrides) const {
  Model copy = *this;
  copy.overrides_ = overrides;
  return copy;
}

Complex Model::zero_linearization_rate() const {
  switch (overrides_.mode) {
    case NonlinearityMode::GinzburgLandau: return {1.0, params_.beta};
    case NonlinearityMode::Zero: return 0.0;
    case NonlinearityMode::Linear: return overrides_.linear_rate;
  }
  return 0.0;
}

}  // namespace imcgl
