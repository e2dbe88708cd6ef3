#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bcsif/gap.hpp"
#include "bcsif/model.hpp"
#include "bcsif/numerics.hpp"

using namespace bcsif;

namespace {

ModelParams base_params() {
  ModelParams p;
  p.d = 1;
  p.L = 8;
  p.mu = 0.0;
  p.beta = 1.0;
  p.theta = 0.0;
  p.U = -1.0;
  return p;
}

// Brute-force trapezoid evaluation of the gap integral with no rearranged
// hyperbolics; independent of the production path.
double trapezoid_oracle(const ModelParams& p, double delta, long n) {
  double cb = std::cos(p.beta * p.theta / 2.0);
  long double acc = 0.0L;
  for (long i = 0; i < n; ++i) {
    double k = 2.0 * kPi * i / n;
    double e = 2.0 * std::cos(k) - p.mu;
    double E = std::sqrt(e * e + delta * delta);
    long double num = std::sinh((long double)(p.beta * E));
    long double den = (cb + std::cosh((long double)(p.beta * E))) * E;
    acc += E > 1e-14 ? num / den
                     : (long double)(p.beta / (cb + 1.0));
  }
  return -2.0 / p.abs_u() + static_cast<double>(acc / n);
}

// Classical BCS residual (theta = 0) through the tanh form, with its own
// bisection solver.
double tanh_residual(const ModelParams& p, double delta, long n) {
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    double k = 2.0 * kPi * i / n;
    double e = 2.0 * std::cos(k) - p.mu;
    double E = std::sqrt(e * e + delta * delta);
    acc += E > 1e-14 ? std::tanh(p.beta * E / 2.0) / E : p.beta / 2.0;
  }
  return -2.0 / p.abs_u() + acc / n;
}

double tanh_solver(const ModelParams& p, long n) {
  double lo = 0.0, hi = 1.0;
  while (tanh_residual(p, hi, n) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (tanh_residual(p, mid, n) > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("integrand equals tanh form at theta = 0") {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    double e = rng.uniform(-4.0, 4.0);
    double delta = rng.uniform(0.0, 3.0);
    double beta = rng.uniform(0.1, 20.0);
    double E = std::sqrt(e * e + delta * delta);
    double lhs = gap_integrand(E, beta, 1.0);
    double rhs = E > 1e-14 ? std::tanh(beta * E / 2.0) / E : beta / 2.0;
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("residual tends to -2/|U| for huge delta") {
  ModelParams p = base_params();
  CHECK(std::abs(gap_residual(p, 1e6, 256) + 2.0) < 1e-5);
}

TEST_CASE("residual against dense trapezoid oracle") {
  ModelParams p = base_params();
  p.U = -0.2;
  p.theta = 1.99 * kPi;  // Theta = 0.005 pi
  double mine = gap_residual(p, 0.1, 1 << 16);
  double oracle = trapezoid_oracle(p, 0.1, 1 << 20);
  CHECK(std::abs(mine - oracle) < 1e-8);
}

TEST_CASE("solvability indicator signs") {
  ModelParams p = base_params();
  p.theta = kPi;  // theta = pi/beta boundary of the non-solvable region
  p.U = -1.0;     // |U| < 2/beta
  CHECK(solvability_indicator(p, 512) < 0.0);

  ModelParams q = base_params();
  q.U = -1e9;
  CHECK(solvability_indicator(q, 512) > 0.0);

  // Window-regime point: indicator positive at the midpoint coupling.
  ModelParams r = base_params();
  r.theta = 2.0 * (kPi / r.beta - 1e-3);
  CouplingWindow win = coupling_window(r, 1.0, 1.0);
  REQUIRE(win.nonempty);
  r.U = -(win.lower + win.upper) / 2.0;
  CHECK(solvability_indicator(r) > 0.0);
}

TEST_CASE("solve_gap honors the indicator and brackets the root") {
  ModelParams p = base_params();  // theta = 0, |U| = 1 < 2/beta: no gap
  GapSolution sol = solve_gap(p, 1e-10);
  CHECK(!sol.solvable);
  CHECK(sol.delta == 0.0);
  CHECK(sol.ssb == 0.0);
  CHECK(sol.odlro == 0.0);

  ModelParams q = base_params();
  q.beta = 10.0;
  q.U = -3.0;
  GapSolution s2 = solve_gap(q, 1e-12, 1 << 12);
  REQUIRE(s2.solvable);
  // sign change across delta +- tol bracket
  CHECK(gap_residual(q, s2.delta - 1e-6, 1 << 12) > 0.0);
  CHECK(gap_residual(q, s2.delta + 1e-6, 1 << 12) < 0.0);
  // classical solver agreement at theta = 0
  double oracle = tanh_solver(q, 1 << 14);
  CHECK(std::abs(s2.delta - oracle) < 1e-8);
  // scalar invariants
  CHECK(s2.ssb == -s2.delta / q.abs_u());
  CHECK(s2.odlro == s2.ssb * s2.ssb);
  CHECK(s2.ssb <= 0.0);
}

TEST_CASE("residual strictly decreasing in delta") {
  ModelParams p = base_params();
  p.beta = 2.0;
  p.theta = 2.4;
  double prev = gap_residual(p, 0.0, 512);
  for (double x : {0.1, 0.3, 0.8, 1.5, 3.0}) {
    double v = gap_residual(p, x, 512);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("quadrature node doubling converges") {
  ModelParams p = base_params();
  p.theta = 2.0 * (kPi / p.beta - 1e-3);  // Theta = 1e-3
  double a = gap_residual(p, 0.2, 256);
  double b = gap_residual(p, 0.2, 512);
  CHECK(std::abs(a - b) < 1e-6);
  ModelParams q = base_params();
  q.d = 2;
  q.theta = 2.0 * (kPi / q.beta - 0.05);
  double c = gap_residual(q, 0.2, 128);
  double e = gap_residual(q, 0.2, 256);
  CHECK(std::abs(c - e) < 1e-6);
}

TEST_CASE("free energy density limits") {
  // Delta = 0, theta = 0: matches the log of the exact free partition
  // product at L = 64.
  ModelParams p = base_params();
  double fed = free_energy_density(p, 0.0, 1 << 12);
  double cb = 1.0;
  double lattice = 0.0;
  for (int m = 0; m < 64; ++m) {
    double e = 2.0 * std::cos(2.0 * kPi * m / 64.0);
    lattice += std::log(2.0) - p.beta * e +
               log_coshsum(p.beta * e, cb);
  }
  lattice = -lattice / (p.beta * 64.0);
  CHECK(std::abs(fed - lattice) < 1e-4);

  // beta -> 0: the difference reduces to the quadratic term.
  ModelParams q = base_params();
  q.beta = 1e-4;
  q.theta = 0.0;
  double diff = free_energy_density(q, 1.0, 4096) -
                free_energy_density(q, 0.0, 4096);
  CHECK(std::abs(diff - 1.0) < 1e-3);
}

TEST_CASE("free energy is stationary at the solved gap") {
  ModelParams p = base_params();
  p.beta = 10.0;
  p.U = -3.0;
  GapSolution sol = solve_gap(p, 1e-12, 4096);
  REQUIRE(sol.solvable);
  // chain rule: dF/dDelta = -Delta * residual
  CHECK(std::abs(-sol.delta * sol.residual) < 1e-8);
  // central-difference cross-check
  double h = 1e-4;
  double fd = (free_energy_density(p, sol.delta + h, 4096) -
               free_energy_density(p, sol.delta - h, 4096)) /
              (2.0 * h);
  CHECK(std::abs(fd) < 1e-6);
}

TEST_CASE("a_of_gamma") {
  // gamma -> 0 recovers the gap on a solvable point.
  ModelParams p = base_params();
  p.beta = 10.0;
  p.U = -3.0;
  p.gamma = 1e-6;
  GapSolution sol = solve_gap(p, 1e-12, 2048);
  REQUIRE(sol.solvable);
  CHECK(std::abs(a_of_gamma(p, 1e-12, 2048) - sol.delta) < 1e-3);

  // a(gamma) > Delta across sampled gamma.
  for (double g : {0.05, 0.2, 0.5, 1.0}) {
    ModelParams q = p;
    q.gamma = g;
    CHECK(a_of_gamma(q, 1e-12, 2048) > sol.delta);
  }

  // Dense-scan oracle on the defining function.
  ModelParams r = base_params();
  r.U = -1.0;
  r.gamma = 0.5;
  double root = a_of_gamma(r, 1e-12, 2048);
  long n = 1000000;
  double found = -1.0;
  double prev = 2.0 * r.gamma / r.abs_u();  // a -> 0 limit of the function
  for (long i = 1; i <= n; ++i) {
    double a = 10.0 * i / n;
    double v = a * gap_residual(r, a, 512) + 2.0 * r.gamma / r.abs_u();
    if (prev > 0.0 && v <= 0.0) {
      found = a;
      break;
    }
    prev = v;
  }
  REQUIRE(found > 0.0);
  CHECK(std::abs(root - found) < 2e-5 + 10.0 / n);
}

TEST_CASE("monotone kernel") {
  CHECK(monotone_kernel(1e-12, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(monotone_kernel(50.0, 1.0) < 1e-10 * monotone_kernel(1e-12, 1.0));
  CHECK(monotonicity_check(-0.99, 10000));
  CHECK(monotonicity_check(1.0, 1000));
}
