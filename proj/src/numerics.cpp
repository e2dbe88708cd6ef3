#include "bcsif/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

namespace bcsif {

double brent(const std::function<double(double)>& f, double a, double b,
             double fa, double fb, double xtol, double ftol, int max_iter) {
  if (fa * fb > 0.0)
    throw numerical_error("brent: endpoints do not bracket a root");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    double tol1 = 2.0 * 2.2204460492503131e-16 * std::abs(b) + 0.5 * xtol;
    double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || std::abs(fb) <= ftol) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double s = fb / fa, p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q),
                             std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a; fc = fa;
      d = b - a; e = d;
    }
  }
  return b;
}

double bracket_and_solve(const std::function<double(double)>& f, double lo,
                         double flo, double hi0, double xtol, double ftol,
                         double hi_cap) {
  double hi = hi0;
  double fhi = f(hi);
  while (fhi * flo > 0.0) {
    hi *= 2.0;
    if (hi > hi_cap)
      throw numerical_error("bracket_and_solve: no sign change up to cap");
    fhi = f(hi);
  }
  return brent(f, lo, hi, flo, fhi, xtol, ftol);
}

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw validation_error("gauss_hermite: n must be >= 1");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(k / 2.0);
    j(k - 1, k) = b;
    j(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  GaussHermite gh;
  gh.x.resize(n);
  gh.w.resize(n);
  const double sqrt_pi = std::sqrt(kPi);
  for (int k = 0; k < n; ++k) {
    gh.x[k] = es.eigenvalues()(k);
    double v0 = es.eigenvectors()(0, k);
    gh.w[k] = sqrt_pi * v0 * v0;
  }
  return gh;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t nthreads = std::max(1u, hw);
  if (n < 2 || nthreads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  nthreads = std::min<std::size_t>(nthreads, n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

cplx pfaffian(const Eigen::MatrixXcd& a) {
  long n = a.rows();
  if (n % 2 != 0) return 0.0;
  if (n == 0) return 1.0;
  if (n == 2) return a(0, 1);
  // Expand along row 0: Pf(A) = sum_j (-1)^j a(0,j) Pf(A with rows/cols 0,j
  // removed).
  cplx acc = 0.0;
  std::vector<long> keep(n - 2);
  for (long j = 1; j < n; ++j) {
    long m = 0;
    for (long k = 1; k < n; ++k)
      if (k != j) keep[m++] = k;
    Eigen::MatrixXcd sub(n - 2, n - 2);
    for (long r = 0; r < n - 2; ++r)
      for (long c = 0; c < n - 2; ++c) sub(r, c) = a(keep[r], keep[c]);
    double sign = (j % 2 == 1) ? 1.0 : -1.0;
    acc += sign * a(0, j) * pfaffian(sub);
  }
  return acc;
}

}  // namespace bcsif
