#pragma once

#include <vector>

#include "imcgl/model.hpp"

namespace imcgl {

/// f and its first Wirtinger derivatives at a point.
struct FJet {
  Complex f;
  Complex f_u;
  Complex f_ubar;
};

/// Second Wirtinger derivatives of f (f_{u ubar} = f_{ubar u}).
struct FHessian {
  Complex uu;
  Complex uubar;
  Complex ubarubar;
};

/// GL nonlinearity rolled off to zero beyond f_support_radius; exact
/// (1+i beta)u - (1+i gamma)u|u|^2 on |u| <= f_support_radius / 2.
FJet eval_f(const Model& model, Complex u);
FHessian eval_f_hessian(const Model& model, Complex u);

/// Coefficient-wise cut-off W(u)_n = C_* a^{-s/2} phi(a^{s/2} u_n / C_*).
SpectralField truncate_W(const Model& model, const SpectralField& u);
/// W'(u)v, coefficient-wise phi_z v_n + phi_zbar conj(v_n) at the rescaled u_n.
SpectralField W_prime_apply(const Model& model, const SpectralField& u, const SpectralField& v);
/// sup_u ||W(u)||_{H^kappa} over the cube, attained coefficient-wise.
double W_sup_bound(const Model& model, double kappa);

/// T(u) = varphi(||A^{1/2} P_N u||^2) A^{1/2} P_N u.
SpectralField map_T(const Model& model, const SpectralField& u);
SpectralField T_prime_apply(const Model& model, const SpectralField& u, const SpectralField& v);

/// Pair (a_u, a_ubar) or (C_u, C_ubar).
struct Averages {
  Complex u;
  Complex ubar;
};

/// Torus means of f_u and f_ubar evaluated pointwise on w.
Averages spatial_average(const Model& model, const SpectralField& w);
/// theta(||u||_H^2) * spatial_average(W(u)).
Averages coefficients_C(const Model& model, const SpectralField& u);

/// The modified nonlinearity
///   F(u) = f(W(u)) - a(W(u))W(u) + theta(||u||^2) a(W(u)) u - T_N(u).
SpectralField nonlinearity_F(const Model& model, const SpectralField& u);

/// Bracketed groups of F'(u)v; total = l1 + l2 + l3 + l4 - t_prime.
struct FPrimeParts {
  SpectralField l1;
  SpectralField l2;
  SpectralField l3;
  SpectralField l4;
  SpectralField t_prime;

  SpectralField total() const;
};

/// Everything F'(u) needs from the base point, computed once and applied to
/// many directions (variational integration, Krylov solves).
class Linearization {
 public:
  Linearization(const Model& model, const SpectralField& u);

  SpectralField apply(const SpectralField& v) const;
  const Model& model() const { return model_; }
  FPrimeParts parts(const SpectralField& v) const;
  /// W'(u)v.
  SpectralField W_prime(const SpectralField& v) const;
  /// (a_u, a_ubar) of W(u) and the theta-weighted (C_u, C_ubar).
  Averages a() const { return a_; }
  Averages C() const { return {theta_.value * a_.u, theta_.value * a_.ubar}; }
  /// Multiplier fields f_u(W(u)(x)), f_ubar(W(u)(x)) on the grid.
  const GridField& f_u_grid() const { return fu_; }
  const GridField& f_ubar_grid() const { return fub_; }
  /// Diagonal of W'(u): W'(u)v = dW_z * v + dW_zbar * conj(v) coefficient-wise
  /// (empty unless the GL nonlinearity is active).
  const Eigen::VectorXcd& dW_z() const { return dw_z_; }
  const Eigen::VectorXcd& dW_zbar() const { return dw_zbar_; }

 private:
  Model model_;
  SpectralField u_, ubar_, w_, wbar_;
  Eigen::VectorXcd dw_z_, dw_zbar_;
  GridField fu_, fub_, huu_, huub_, hubub_;
  Averages a_{};
  Jet theta_;
  Jet varphi_;
  SpectralField t_dir_;  // A^{1/2} P_N u
};

SpectralField F_prime_apply(const Model& model, const SpectralField& u, const SpectralField& v);
FPrimeParts F_prime_parts(const Model& model, const SpectralField& u, const SpectralField& v);

/// Gauss-Legendre rule on [0, 1], optionally composite.
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;

  static Quadrature gauss_legendre(int points = 8, int panels = 1);
};

/// int_0^1 F'(s u1 + (1-s) u2) ds v by quadrature.
SpectralField F_prime_interval(const Model& model, const SpectralField& u1, const SpectralField& u2,
                               const SpectralField& v, const Quadrature& rule = Quadrature::gauss_legendre());

/// Interval coefficients int_0^1 C_(s u1 + (1-s) u2) ds.
Averages coefficients_C_interval(const Model& model, const SpectralField& u1, const SpectralField& u2,
                                 const Quadrature& rule = Quadrature::gauss_legendre());

/// Interval linearization: the quadrature-weighted family of Linearization
/// objects along the segment, reusable for many directions.
class IntervalLinearization {
 public:
  IntervalLinearization(const Model& model, const SpectralField& u1, const SpectralField& u2,
                        const Quadrature& rule = Quadrature::gauss_legendre());
  SpectralField apply(const SpectralField& v) const;
  Averages C() const;

 private:
  std::vector<Linearization> nodes_;
  std::vector<double> weights_;
};

}  // namespace imcgl
