#pragma once

#include "bcsif/params.hpp"

namespace bcsif {

// Solution record for the modified gap equation
//   -2/|U| + (2pi)^{-d} int dk sinh(beta E)/((cos(beta theta/2) +
//                                             cosh(beta E)) E) = 0,
// E = sqrt(e(k)^2 + Delta^2). The cos(beta theta/2) in the denominator is
// what the imaginary field contributes.
struct GapSolution {
  double delta = 0.0;      // gap, 0 when not solvable
  double residual = 0.0;   // gap-equation LHS at delta
  bool solvable = false;
  int iterations = 0;
  int quad_nodes = 0;      // per-axis quadrature resolution used
  double ssb = 0.0;        // -delta/|U|
  double odlro = 0.0;      // delta^2/U^2 = ssb^2
  double free_energy = 0.0;
};

// Per-axis node count: caller's value, or the Theta-adaptive floor
// max(64, ceil(8/Theta)) when nodes <= 0 (the integrand peaks at the Fermi
// surface with width ~Theta).
int auto_nodes(const ModelParams& p, int nodes);

// The scalar integrand sinh(beta E)/((c + cosh(beta E)) E) with
// c = cos(beta theta/2); finite at E = 0 and overflow-safe for beta E >> 1.
double gap_integrand(double E, double beta, double cos_bt);

// Gap-equation LHS D(Delta) by tensor-product periodic-trapezoid quadrature
// over [0, 2pi]^d.
double gap_residual(const ModelParams& p, double delta, int nodes = 0);

// D(0); its sign decides solvability.
double solvability_indicator(const ModelParams& p, int nodes = 0);

// Lattice-sum versions (momentum sum over Gamma* at the params' own L).
double gap_residual_lattice(const ModelParams& p, double delta);

// Bracket-and-Brent solve of D(Delta) = 0; fills all Theorem-1.3 scalars.
GapSolution solve_gap(const ModelParams& p, double tol = 1e-10,
                      int nodes = 0);

// Free-energy density
//   Delta^2/|U| - (beta (2pi)^d)^{-1} int dk log(2 cos(beta theta/2)
//       e^{-beta e} + e^{beta(E - e)} + e^{-beta(E + e)}),
// evaluated in the factored form 2 e^{-beta e}(cos(beta theta/2) +
// cosh(beta E)) which is manifestly positive for theta < 2 pi/beta.
double free_energy_density(const ModelParams& p, double delta,
                           int nodes = 0);

// Unique root a(gamma) in (Delta, inf) of
//   a (-2/|U| + I(a)) = -2 gamma / |U|,
// where I is the gap integral. Requires gamma > 0.
double a_of_gamma(const ModelParams& p, double tol = 1e-10, int nodes = 0);

// Lattice-sum analogue (used by the effective-potential maximizers).
double a_of_gamma_lattice(const ModelParams& p, double tol = 1e-10);

// True iff x -> sinh(x)/(x (eps + cosh x)) is decreasing on a sampled grid
// of (0, 50].
bool monotonicity_check(double eps, int samples);

// Value of that function (finite at x = 0 where it equals 1/(1 + eps)).
double monotone_kernel(double x, double eps);

}  // namespace bcsif
