#pragma once

#include <cassert>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace bcsif {

using cplx = std::complex<double>;

// Thrown when inputs violate a documented precondition.
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a solver or quadrature fails to converge.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Stable scalar kernels
// ---------------------------------------------------------------------------

// sinh(x)/x, finite at x = 0.
inline double sinhc(double x) {
  double ax = std::abs(x);
  if (ax < 1e-4) {
    double x2 = x * x;
    return 1.0 + x2 / 6.0 * (1.0 + x2 / 20.0);
  }
  return std::sinh(x) / x;
}

// sinh(x)/(c + cosh(x)) without overflow; rearranged through e^{-x} for
// large x. Requires c + cosh(x) > 0, which holds for c in (-1, 1].
inline double sinh_over_coshsum(double x, double c) {
  double ax = std::abs(x);
  double s = x < 0 ? -1.0 : 1.0;
  if (ax > 30.0) {
    double em = std::exp(-ax);
    double em2 = em * em;
    return s * (1.0 - em2) / (2.0 * c * em + 1.0 + em2);
  }
  double den = c + std::cosh(x);
  assert(den > 0.0 && "cos(beta*theta/2) + cosh must stay positive");
  return std::sinh(x) / den;
}

// log(c + cosh(x)) without overflow, c in (-1, 1].
inline double log_coshsum(double x, double c) {
  double ax = std::abs(x);
  if (ax > 30.0) {
    double em = std::exp(-ax);
    return ax - std::log(2.0) + std::log1p(em * (2.0 * c + em));
  }
  double den = c + std::cosh(x);
  assert(den > 0.0);
  return std::log(den);
}

// e^{tau*lam} / (1 + e^{beta*lam}) for tau in [0, beta); stable for any
// Re(lam) sign.
inline cplx fermi_plus(cplx lam, double tau, double beta) {
  if (lam.real() > 0.0)
    return std::exp((tau - beta) * lam) / (1.0 + std::exp(-beta * lam));
  return std::exp(tau * lam) / (1.0 + std::exp(beta * lam));
}

// e^{tau*lam} / (1 + e^{-beta*lam}) for tau in [-beta, 0).
inline cplx fermi_minus(cplx lam, double tau, double beta) {
  if (lam.real() > 0.0)
    return std::exp(tau * lam) / (1.0 + std::exp(-beta * lam));
  return std::exp((tau + beta) * lam) / (1.0 + std::exp(beta * lam));
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

// Brent's method on [a, b] with f(a), f(b) of opposite sign. Stops when the
// bracket shrinks to xtol or |f| <= ftol. Caps at max_iter iterations.
double brent(const std::function<double(double)>& f, double a, double b,
             double fa, double fb, double xtol, double ftol,
             int max_iter = 200);

// Doubles hi from hi0 until f(hi) < 0, then runs brent on [lo, hi].
// Throws numerical_error if hi exceeds hi_cap without a sign change.
double bracket_and_solve(const std::function<double(double)>& f, double lo,
                         double flo, double hi0, double xtol, double ftol,
                         double hi_cap = 1e12);

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct GaussHermite {
  std::vector<double> x;  // nodes
  std::vector<double> w;  // weights for int e^{-x^2} f(x) dx
};

// Golub-Welsch nodes/weights for the e^{-x^2} weight.
GaussHermite gauss_hermite(int n);

// ---------------------------------------------------------------------------
// Parallel helpers
// ---------------------------------------------------------------------------

// Runs fn(i) for i in [0, n) across hardware threads. fn must write only to
// per-index slots so results are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Linear algebra extras
// ---------------------------------------------------------------------------

// Pfaffian of an antisymmetric complex matrix by recursive expansion along
// the first row. Intended for small matrices (dim <= 16).
cplx pfaffian(const Eigen::MatrixXcd& a);

// ---------------------------------------------------------------------------
// Reproducible random numbers
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return (eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) {  // [0, n)
    return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
  }
  double normal() {
    // Box-Muller; pairs discarded to keep the stream simple.
    double u1 = uniform();
    double u2 = uniform();
    u1 = std::max(u1, 1e-300);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }
  cplx cnormal() { return {normal(), normal()}; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace bcsif
