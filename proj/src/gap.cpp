#include "bcsif/gap.hpp"

#include <algorithm>

#include "bcsif/model.hpp"

namespace bcsif {

int auto_nodes(const ModelParams& p, int nodes) {
  if (nodes > 0) return nodes;
  double th = p.Theta();
  double want = th > 0.0 ? 8.0 / th : 64.0;
  want = std::min(want, 4.0e6);
  return std::max(64, static_cast<int>(std::ceil(want)));
}

double gap_integrand(double E, double beta, double cos_bt) {
  double x = beta * E;
  if (x > 30.0) return sinh_over_coshsum(x, cos_bt) / E;
  // sinh(x)/((c + cosh x) E) = beta sinhc(x) / (c + cosh x): finite at E = 0.
  double den = cos_bt + std::cosh(x);
  assert(den > 0.0 && "cos(beta*theta/2)+cosh(beta*E) must be positive");
  return beta * sinhc(x) / den;
}

namespace {

// Mean over the uniform n^d lattice on [0,2pi)^d of f(e(k)); equals the
// periodic trapezoid rule for the normalized integral (2pi)^{-d} int dk.
template <typename F>
double momentum_average(const ModelParams& p, int n, F&& f) {
  long total = 1;
  for (int j = 0; j < p.d; ++j) total *= n;
  double acc = 0.0;
  std::vector<double> k(p.d);
  std::vector<int> m(p.d, 0);
  for (long i = 0; i < total; ++i) {
    for (int j = 0; j < p.d; ++j) k[j] = 2.0 * kPi * m[j] / n;
    acc += f(dispersion(p, k));
    for (int j = p.d - 1; j >= 0; --j) {
      if (++m[j] < n) break;
      m[j] = 0;
    }
  }
  return acc / static_cast<double>(total);
}

double gap_integral(const ModelParams& p, double delta, int n) {
  double cb = std::cos(p.beta * p.theta / 2.0);
  return momentum_average(p, n, [&](double e) {
    double E = std::sqrt(e * e + delta * delta);
    return gap_integrand(E, p.beta, cb);
  });
}

}  // namespace

double gap_residual(const ModelParams& p, double delta, int nodes) {
  int n = auto_nodes(p, nodes);
  if (n < 8) throw validation_error("gap_residual: nodes >= 8 required");
  return -2.0 / p.abs_u() + gap_integral(p, delta, n);
}

double solvability_indicator(const ModelParams& p, int nodes) {
  return gap_residual(p, 0.0, nodes);
}

double gap_residual_lattice(const ModelParams& p, double delta) {
  double cb = std::cos(p.beta * p.theta / 2.0);
  return -2.0 / p.abs_u() +
         momentum_average(p, p.L, [&](double e) {
           double E = std::sqrt(e * e + delta * delta);
           return gap_integrand(E, p.beta, cb);
         });
}

GapSolution solve_gap(const ModelParams& p, double tol, int nodes) {
  if (!(tol > 0.0)) throw validation_error("solve_gap: tol > 0");
  int n = auto_nodes(p, nodes);
  GapSolution sol;
  sol.quad_nodes = n;
  double ind = gap_residual(p, 0.0, n);
  if (ind <= 0.0) {
    sol.delta = 0.0;
    sol.residual = ind;
    sol.solvable = false;
    sol.ssb = 0.0;
    sol.odlro = 0.0;
    sol.free_energy = free_energy_density(p, 0.0, n);
    return sol;
  }
  int iters = 0;
  auto f = [&](double x) {
    ++iters;
    return gap_residual(p, x, n);
  };
  // Residual is strictly decreasing in Delta and tends to -2/|U| < 0, so a
  // doubling bracket always closes.
  double delta = bracket_and_solve(f, 0.0, ind, 1.0, 1e-14, tol, 1e12);
  sol.delta = delta;
  sol.residual = gap_residual(p, delta, n);
  sol.solvable = true;
  sol.iterations = iters;
  sol.ssb = -delta / p.abs_u();
  sol.odlro = sol.ssb * sol.ssb;
  sol.free_energy = free_energy_density(p, delta, n);
  return sol;
}

double free_energy_density(const ModelParams& p, double delta, int nodes) {
  int n = auto_nodes(p, nodes);
  double cb = std::cos(p.beta * p.theta / 2.0);
  double ln2 = std::log(2.0);
  double avg = momentum_average(p, n, [&](double e) {
    double E = std::sqrt(e * e + delta * delta);
    return ln2 - p.beta * e + log_coshsum(p.beta * E, cb);
  });
  return delta * delta / p.abs_u() - avg / p.beta;
}

namespace {

double a_root(const ModelParams& p, double tol,
              const std::function<double(double)>& residual) {
  if (!(p.gamma > 0.0)) throw validation_error("a_of_gamma: gamma > 0");
  auto f = [&](double a) { return a * residual(a) + 2.0 * p.gamma / p.abs_u(); };
  double f0 = 2.0 * p.gamma / p.abs_u();  // limit a -> 0+
  return bracket_and_solve(f, 0.0, f0, 1.0, 1e-14, tol, 1e12);
}

}  // namespace

double a_of_gamma(const ModelParams& p, double tol, int nodes) {
  int n = auto_nodes(p, nodes);
  return a_root(p, tol, [&](double a) { return gap_residual(p, a, n); });
}

double a_of_gamma_lattice(const ModelParams& p, double tol) {
  return a_root(p, tol, [&](double a) { return gap_residual_lattice(p, a); });
}

double monotone_kernel(double x, double eps) {
  if (x > 30.0) return sinh_over_coshsum(x, eps) / x;
  return sinhc(x) / (eps + std::cosh(x));
}

bool monotonicity_check(double eps, int samples) {
  if (samples < 2) throw validation_error("monotonicity_check: samples >= 2");
  double prev = monotone_kernel(1e-12, eps);
  for (int i = 1; i <= samples; ++i) {
    double x = 50.0 * i / samples;
    double v = monotone_kernel(x, eps);
    if (v >= prev) return false;
    prev = v;
  }
  return true;
}

}  // namespace bcsif
