#pragma once

#include "bcsif/params.hpp"

namespace bcsif {

// Free dispersion e(k) = (-1)^hop 2 sum_j cos k_j - mu.
double dispersion(const ModelParams& p, const std::vector<double>& k);

// g_d(x), the coupling-magnitude function:
//   d >= 2:  (log(1/x + 1))^{d/(d+1)} x^{-1/(d+1)}
//   d == 1:  (4 - mu^2)^{-1/2} log(1/x + 1)
// Strictly decreasing on (0, inf). Domain error for x <= 0 or
// (d == 1 and mu^2 >= 4).
double g_function(const ModelParams& p, double x);

// Coupling window from the two sides of the superconductivity condition,
// with configurable constants c1, c2 (the theorem's constants are
// existential; defaults are 1). `upper_alt` replaces g_d(Theta) by the
// integral of 1/sqrt(Theta^2 + e(k)^2) over [0,2pi]^d, which bounds the same
// quantity.
struct CouplingWindow {
  double lower = 0.0;
  double upper = 0.0;
  double upper_alt = 0.0;
  bool nonempty = false;
  bool nonempty_alt = false;
};
CouplingWindow coupling_window(const ModelParams& p, double c1, double c2,
                               int quad_nodes = 0);

// Lower bound on the Fermi-surface measure inf_{|eta| <= (2d-|mu|)/2}
// H^{d-1}({e(k) = eta}): 1 for d = 1, ((2d-|mu|)/(10(d-1)d))^{d-1} for
// d >= 2. Domain error if |mu| >= 2d.
double fermi_surface_lower_bound(const ModelParams& p);

// Mesh estimate of the level-set measure H^{d-1}({k : e(k) = eta}) on
// [0,2pi]^d. d = 1 counts roots; d = 2 runs marching squares on an n x n
// grid. Only d <= 2 supported.
double level_set_measure(const ModelParams& p, double eta, int n = 512);

// [(1/L^d) sum_k 1/sqrt(K^2 + e(k)^2)] / g_d(K); empirical probe for the
// momentum-sum inequality's constant c(d).
double momentum_sum_ratio(const ModelParams& p, double K);

// (1/L^d) sum_k 1/sqrt(K^2 + e(k)^2) by itself (lattice sum at the params'
// own L).
double momentum_sum(const ModelParams& p, double K);

}  // namespace bcsif
