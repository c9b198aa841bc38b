#pragma once

#include <vector>

#include "imcgl/spectral_field.hpp"

namespace imcgl {

/// (2 pi)^3, the Parseval constant: ||e_n||_H^2 = (2 pi)^3.
inline constexpr double kTorusVolume = 248.05021344239853;

/// ||u||_{H^s} = ((2 pi)^3 sum_n (1+|n|^2)^s |u_n|^2)^{1/2}.
double sobolev_norm(const SpectralField& u, double s);
/// Squared H^s norm, avoiding the square root in hot loops.
double sobolev_norm_sq(const SpectralField& u, double s);

/// (u, v) = int_T u conj(v) dx.
Complex inner(const SpectralField& u, const SpectralField& v);

/// Fourier coefficients of the pointwise complex conjugate: conj(u_{-n}).
SpectralField conjugate(const SpectralField& u);

/// A^p u with A = 1 - Laplacian.
SpectralField apply_A_power(const SpectralField& u, double p);

enum class Projector {
  P_N,   // 1 + |n|^2 <= N
  Q_N,   // 1 + |n|^2 >  N
  I_NK,  // N - K < 1 + |n|^2 < N + K
  P_NK,  // lower modes: P_N (1 - I_NK)
  Q_NK,  // higher modes: Q_N (1 - I_NK)
};

/// Throws GridError("grid too small for requested N,K") when the selected
/// eigenvalue range is not fully contained in the cube.
void require_levels_fit(int grid_radius, Projector which, int N, int K);

/// 0/1 weights of a projector over the stored modes.
Eigen::ArrayXd projector_mask(int grid_radius, Projector which, int N, int K);

SpectralField project(const SpectralField& u, Projector which, int N, int K = 0);

struct ModeSplit {
  SpectralField plus;          // P_{N,K} u
  SpectralField intermediate;  // I_{N,K} u
  SpectralField minus;         // Q_{N,K} u
};

ModeSplit split_modes(const SpectralField& u, int N, int K);

/// e^{-(1 + i omega) a t}, shared by the propagator and the time steppers so
/// that both produce identical bits.
Complex propagator_factor(double a_eig, double t, double omega);

/// Exact diagonal solution operator e^{-(1 + i omega) A t}.
SpectralField apply_linear_propagator(const SpectralField& u, double t, double omega);

/// Eigenvalue-range selector for enumerate_modes.
struct ModePredicate {
  enum class Kind { All, AtMost, Above, Annulus };
  Kind kind = Kind::All;
  int N = 0;
  int K = 0;

  static ModePredicate all() { return {}; }
  static ModePredicate at_most(int N) { return {Kind::AtMost, N, 0}; }
  static ModePredicate above(int N) { return {Kind::Above, N, 0}; }
  static ModePredicate annulus(int N, int K) { return {Kind::Annulus, N, K}; }

  bool accepts(int a_eig) const;
};

/// Lattice modes in the cube satisfying the predicate, sorted by
/// (a_eig, k, l, m).
std::vector<ModeIndex> enumerate_modes(int grid_radius, const ModePredicate& predicate);

}  // namespace imcgl
