#include "imcgl/nonlinearity.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "imcgl/errors.hpp"
#include "imcgl/spectral_ops.hpp"

namespace imcgl {

namespace {


bool uses_gl(const Model& model) { return model.overrides().mode == NonlinearityMode::GinzburgLandau; }

Eigen::ArrayXd w_scale(const Model& model) {
  return Lattice::of(model.grid_radius()).a_eig().array().pow(0.5 * model.params().s);
}

double norm_sq_H(const SpectralField& u) { return sobolev_norm_sq(u, 0.0); }

}  // namespace

FJet eval_f(const Model& model, Complex u) {
  if (model.is_zero()) return {0.0, 0.0, 0.0};
  const ModelParams& p = model.params();
  const Complex lin(1.0, p.beta), cub(1.0, p.gamma);
  const double q = std::norm(u);
  const Complex g = lin * u - cub * u * q;
  const Complex g_u = lin - 2.0 * cub * q;
  const Complex g_ub = -cub * u * u;
  const Jet rho = model.bumps().f_rolloff(q);
  if (rho.d1 == 0.0) return {g * rho.value, g_u * rho.value, g_ub * rho.value};
  return {g * rho.value, g_u * rho.value + g * rho.d1 * std::conj(u), g_ub * rho.value + g * rho.d1 * u};
}

FHessian eval_f_hessian(const Model& model, Complex u) {
  if (model.is_zero()) return {0.0, 0.0, 0.0};
  const ModelParams& p = model.params();
  const Complex lin(1.0, p.beta), cub(1.0, p.gamma);
  const double q = std::norm(u);
  const Complex ub = std::conj(u);
  const Complex g = lin * u - cub * u * q;
  const Complex g_u = lin - 2.0 * cub * q;
  const Complex g_ub = -cub * u * u;
  const Complex g_uu = -2.0 * cub * ub;
  const Complex g_uub = -2.0 * cub * u;
  const Jet rho = model.bumps().f_rolloff(q);
  return {g_uu * rho.value + 2.0 * g_u * rho.d1 * ub + g * rho.d2 * ub * ub,
          g_uub * rho.value + g_u * rho.d1 * u + g_ub * rho.d1 * ub + g * (rho.d2 * q + rho.d1),
          2.0 * g_ub * rho.d1 * u + g * rho.d2 * u * u};
}

SpectralField truncate_W(const Model& model, const SpectralField& u) {
  const Eigen::ArrayXd lam = w_scale(model);
  const double c = model.params().C_star;
  SpectralField w(u.grid_radius());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    w.coeffs()[i] = c / lam[i] * model.bumps().phi(lam[i] * u.coeffs()[i] / c).phi;
  return w;
}

SpectralField W_prime_apply(const Model& model, const SpectralField& u, const SpectralField& v) {
  const Eigen::ArrayXd lam = w_scale(model);
  const double c = model.params().C_star;
  SpectralField out(u.grid_radius());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const auto d = model.bumps().phi(lam[i] * u.coeffs()[i] / c);
    out.coeffs()[i] = d.d_z * v.coeffs()[i] + d.d_zbar * std::conj(v.coeffs()[i]);
  }
  return out;
}

double W_sup_bound(const Model& model, double kappa) {
  const Eigen::ArrayXd& a = Lattice::of(model.grid_radius()).a_eig().array();
  const double sum = a.pow(kappa - model.params().s).sum();
  return std::sqrt(kTorusVolume * sum) * model.params().C_star * model.bumps().phi.max_modulus();
}

SpectralField map_T(const Model& model, const SpectralField& u) {
  if (!uses_gl(model) || !model.overrides().t_map) return SpectralField(u.grid_radius());
  const SpectralField dir = apply_A_power(project(u, Projector::P_N, model.N()), 0.5);
  const double z = norm_sq_H(dir);
  return model.bumps().varphi(z).value * dir;
}

SpectralField T_prime_apply(const Model& model, const SpectralField& u, const SpectralField& v) {
  if (!uses_gl(model) || !model.overrides().t_map) return SpectralField(u.grid_radius());
  const SpectralField dir = apply_A_power(project(u, Projector::P_N, model.N()), 0.5);
  const Jet vp = model.bumps().varphi(norm_sq_H(dir));
  const SpectralField av = apply_A_power(project(v, Projector::P_N, model.N()), 0.5);
  return vp.value * av + (2.0 * vp.d1 * inner(dir, av).real()) * dir;
}

Averages spatial_average(const Model& model, const SpectralField& w) {
  if (model.is_zero()) return {0.0, 0.0};
  const GridField g = model.transform().to_grid(w);
  Complex su = 0.0, sub = 0.0;
  for (Eigen::Index j = 0; j < g.values.size(); ++j) {
    const FJet fj = eval_f(model, g.values[j]);
    su += fj.f_u;
    sub += fj.f_ubar;
  }
  const double n = double(g.values.size());
  return {su / n, sub / n};
}

Averages coefficients_C(const Model& model, const SpectralField& u) {
  if (model.is_zero()) return {0.0, 0.0};
  const double th = model.bumps().theta(norm_sq_H(u)).value;
  if (th == 0.0) return {0.0, 0.0};
  const Averages a = spatial_average(model, truncate_W(model, u));
  return {th * a.u, th * a.ubar};
}

SpectralField nonlinearity_F(const Model& model, const SpectralField& u) {
  switch (model.overrides().mode) {
    case NonlinearityMode::Zero: return SpectralField(u.grid_radius());
    case NonlinearityMode::Linear: return model.overrides().linear_rate * u;
    case NonlinearityMode::GinzburgLandau: break;
  }
  const SpectralField w = truncate_W(model, u);
  GridField g = model.transform().to_grid(w);
  Complex su = 0.0, sub = 0.0;
  for (Eigen::Index j = 0; j < g.values.size(); ++j) {
    const FJet fj = eval_f(model, g.values[j]);
    su += fj.f_u;
    sub += fj.f_ubar;
    g.values[j] = fj.f;
  }
  const double n = double(g.values.size());
  const Averages a{su / n, sub / n};
  const double th = model.bumps().theta(norm_sq_H(u)).value;
  // The 2/3 rule acts on the fluctuation f(W) - a(W)W only; the mean-field
  // part a(W)u is linear in u and kept on every mode.
  SpectralField out = model.transform().from_grid(g, false);
  out -= a.u * w + a.ubar * conjugate(w);
  if (model.discretization().dealias) model.transform().apply_dealias(out);
  if (th != 0.0) out += th * (a.u * u + a.ubar * conjugate(u));
  out -= map_T(model, u);
  return out;
}

SpectralField FPrimeParts::total() const { return l1 + l2 + l3 + l4 - t_prime; }

Linearization::Linearization(const Model& model, const SpectralField& u) : model_(model), u_(u) {
  if (!uses_gl(model)) return;
  ubar_ = conjugate(u);
  w_ = truncate_W(model, u);
  wbar_ = conjugate(w_);
  const Eigen::ArrayXd lam = w_scale(model);
  const double c = model.params().C_star;
  dw_z_.resize(lam.size());
  dw_zbar_.resize(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const auto d = model.bumps().phi(lam[i] * u.coeffs()[i] / c);
    dw_z_[i] = d.d_z;
    dw_zbar_[i] = d.d_zbar;
  }
  const GridField wg = model.transform().to_grid(w_);
  fu_ = fub_ = huu_ = huub_ = hubub_ = GridField{wg.points, Eigen::VectorXcd(wg.values.size())};
  for (Eigen::Index j = 0; j < wg.values.size(); ++j) {
    const FJet fj = eval_f(model, wg.values[j]);
    const FHessian h = eval_f_hessian(model, wg.values[j]);
    fu_.values[j] = fj.f_u;
    fub_.values[j] = fj.f_ubar;
    huu_.values[j] = h.uu;
    huub_.values[j] = h.uubar;
    hubub_.values[j] = h.ubarubar;
  }
  a_ = {fu_.values.mean(), fub_.values.mean()};
  theta_ = model.bumps().theta(norm_sq_H(u));
  if (model.overrides().t_map) {
    t_dir_ = apply_A_power(project(u, Projector::P_N, model.N()), 0.5);
    varphi_ = model.bumps().varphi(norm_sq_H(t_dir_));
  }
}

SpectralField Linearization::W_prime(const SpectralField& v) const {
  if (!uses_gl(model_)) return v;
  SpectralField out(v.grid_radius());
  out.coeffs() = dw_z_.cwiseProduct(v.coeffs()) + dw_zbar_.cwiseProduct(v.coeffs().conjugate());
  return out;
}

FPrimeParts Linearization::parts(const SpectralField& v) const {
  const int G = v.grid_radius();
  FPrimeParts p{SpectralField(G), SpectralField(G), SpectralField(G), SpectralField(G), SpectralField(G)};
  switch (model_.overrides().mode) {
    case NonlinearityMode::Zero: return p;
    case NonlinearityMode::Linear: p.l2 = model_.overrides().linear_rate * v; return p;
    case NonlinearityMode::GinzburgLandau: break;
  }
  const SpectralField wv = W_prime(v);
  const SpectralField wv_bar = conjugate(wv);
  GridField prod = model_.transform().to_grid(wv);
  Complex da_u = 0.0, da_ub = 0.0;
  for (Eigen::Index j = 0; j < prod.values.size(); ++j) {
    const Complex d = prod.values[j];
    const Complex db = std::conj(d);
    da_u += huu_.values[j] * d + huub_.values[j] * db;
    da_ub += huub_.values[j] * d + hubub_.values[j] * db;
    prod.values[j] = fu_.values[j] * d + fub_.values[j] * db;
  }
  const double n = double(prod.values.size());
  da_u /= n;
  da_ub /= n;

  p.l1 = model_.transform().from_grid(prod, false);
  p.l1 -= a_.u * wv + a_.ubar * wv_bar;
  p.l2 = theta_.value * (a_.u * v + a_.ubar * conjugate(v));
  p.l3 = -1.0 * (da_u * w_ + da_ub * wbar_);
  if (model_.discretization().dealias) {
    model_.transform().apply_dealias(p.l1);
    model_.transform().apply_dealias(p.l3);
  }
  p.l4 = (2.0 * theta_.d1 * inner(u_, v).real()) * (a_.u * u_ + a_.ubar * ubar_) +
         theta_.value * (da_u * u_ + da_ub * ubar_);
  if (model_.overrides().t_map) {
    const SpectralField av = apply_A_power(project(v, Projector::P_N, model_.N()), 0.5);
    p.t_prime = varphi_.value * av + (2.0 * varphi_.d1 * inner(t_dir_, av).real()) * t_dir_;
  }
  return p;
}

SpectralField Linearization::apply(const SpectralField& v) const {
  switch (model_.overrides().mode) {
    case NonlinearityMode::Zero: return SpectralField(v.grid_radius());
    case NonlinearityMode::Linear: return model_.overrides().linear_rate * v;
    case NonlinearityMode::GinzburgLandau: break;
  }
  return parts(v).total();
}

SpectralField F_prime_apply(const Model& model, const SpectralField& u, const SpectralField& v) {
  return Linearization(model, u).apply(v);
}

FPrimeParts F_prime_parts(const Model& model, const SpectralField& u, const SpectralField& v) {
  return Linearization(model, u).parts(v);
}

Quadrature Quadrature::gauss_legendre(int points, int panels) {
  if (points < 1 || panels < 1) throw DomainError("quadrature needs at least one node and panel");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Quadrature rule;
  const double h = 1.0 / panels;
  for (int panel = 0; panel < panels; ++panel) {
    for (int i = 0; i < points; ++i) {
      const double t = eig.eigenvalues()[i];
      const double w = 2.0 * eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
      rule.nodes.push_back(h * (panel + 0.5 * (t + 1.0)));
      rule.weights.push_back(0.5 * h * w);
    }
  }
  return rule;
}

IntervalLinearization::IntervalLinearization(const Model& model, const SpectralField& u1,
                                             const SpectralField& u2, const Quadrature& rule)
    : weights_(rule.weights) {
  nodes_.reserve(rule.nodes.size());
  for (double s : rule.nodes) nodes_.emplace_back(model, s * u1 + (1.0 - s) * u2);
}

SpectralField IntervalLinearization::apply(const SpectralField& v) const {
  SpectralField out(v.grid_radius());
  for (std::size_t j = 0; j < nodes_.size(); ++j) out += weights_[j] * nodes_[j].apply(v);
  return out;
}

Averages IntervalLinearization::C() const {
  Averages c{0.0, 0.0};
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    c.u += weights_[j] * nodes_[j].C().u;
    c.ubar += weights_[j] * nodes_[j].C().ubar;
  }
  return c;
}

SpectralField F_prime_interval(const Model& model, const SpectralField& u1, const SpectralField& u2,
                               const SpectralField& v, const Quadrature& rule) {
  return IntervalLinearization(model, u1, u2, rule).apply(v);
}

Averages coefficients_C_interval(const Model& model, const SpectralField& u1, const SpectralField& u2,
                                 const Quadrature& rule) {
  Averages c{0.0, 0.0};
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double s = rule.nodes[j];
    const Averages cj = coefficients_C(model, s * u1 + (1.0 - s) * u2);
    c.u += rule.weights[j] * cj.u;
    c.ubar += rule.weights[j] * cj.ubar;
  }
  return c;
}

}  // namespace imcgl
