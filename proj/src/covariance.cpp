#include "bcsif/covariance.hpp"

#include <algorithm>

#include "bcsif/gap.hpp"
#include "bcsif/model.hpp"

namespace bcsif {

namespace {

constexpr cplx kI{0.0, 1.0};

// Integer phase exponent sum_j m_j dx_j mod L, so spatial periodicity is
// exact to the bit.
long phase_exponent(const std::vector<int>& m, const std::vector<int>& dx,
                    int L) {
  long acc = 0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    long term = (static_cast<long>(m[j]) * (dx[j] % L)) % L;
    acc = (acc + term) % L;
  }
  return acc < 0 ? acc + L : acc;
}

std::vector<int> site_diff(const FieldIndex& X, const FieldIndex& Y) {
  std::vector<int> dx(X.site.size());
  for (std::size_t j = 0; j < dx.size(); ++j) dx[j] = X.site[j] - Y.site[j];
  return dx;
}

}  // namespace

BandBlock make_band_block(const ModelParams& p, cplx phi,
                          const std::vector<double>& k) {
  BandBlock b;
  b.k = k;
  b.e = dispersion(p, k);
  double r2 = std::norm(phi);
  b.E_matrix << b.e, std::conj(phi), phi, -b.e;
  if (r2 == 0.0) {
    b.e_full = b.e;
    b.U_matrix.setIdentity();
    return b;
  }
  double E = std::sqrt(b.e * b.e + r2);
  b.e_full = E;
  // Cancellation-free eigenvector components: E -+ e via r2/(E +- e).
  double Eme = (b.e >= 0.0) ? r2 / (E + b.e) : E - b.e;
  double Epe = (b.e >= 0.0) ? E + b.e : r2 / (E - b.e);
  Eigen::Vector2cd X(std::conj(phi), cplx(Eme, 0.0));
  Eigen::Vector2cd Y(-std::conj(phi), cplx(Epe, 0.0));
  b.U_matrix.col(0) = X / X.norm();
  b.U_matrix.col(1) = Y / Y.norm();
  return b;
}

CovarianceEvaluator::CovarianceEvaluator(const ModelParams& p, cplx phi)
    : p_(p), phi_(phi), grid_(p.d, p.L) {
  p_.validate();
  blocks_.reserve(grid_.size());
  for (long i = 0; i < grid_.size(); ++i)
    blocks_.push_back(make_band_block(p_, phi_, grid_.point(i)));
}

cplx CovarianceEvaluator::covariance(const FieldIndex& X,
                                     const FieldIndex& Y) const {
  const double beta = p_.beta;
  const double tau = X.time - Y.time;
  const bool ge = X.time >= Y.time;
  std::vector<int> dx = site_diff(X, Y);
  cplx acc = 0.0;
  for (long i = 0; i < grid_.size(); ++i) {
    const BandBlock& b = blocks_[i];
    long ph = phase_exponent(grid_.indices()[i], dx, p_.L);
    cplx phase = std::exp(kI * (2.0 * kPi * ph / p_.L));
    cplx term = 0.0;
    for (int xi = 0; xi < 2; ++xi) {
      cplx lam = kI * (p_.theta / 2.0) + (xi == 0 ? b.e_full : -b.e_full);
      cplx occ = ge ? fermi_plus(lam, tau, beta) : -fermi_minus(lam, tau, beta);
      term += b.U_matrix(X.band - 1, xi) * std::conj(b.U_matrix(Y.band - 1, xi)) *
              occ;
    }
    acc += phase * term;
  }
  return acc / static_cast<double>(grid_.size());
}

std::vector<double> matsubara_frequencies(double beta, double h) {
  double bh = beta * h;
  long half = std::lround(bh / 2.0);
  if (std::abs(bh - 2.0 * half) > 1e-9 || half < 1)
    throw validation_error("h must lie in (2/beta) N");
  std::vector<double> w;
  w.reserve(2 * half);
  for (long j = -half; j < half; ++j)
    w.push_back(kPi / beta * (2 * j + 1));
  return w;
}

namespace {

bool on_grid(double t, double h) {
  double m = t * h;
  return std::abs(m - std::round(m)) < 1e-9;
}

}  // namespace

cplx CovarianceEvaluator::matsubara(double h, const FieldIndex& X,
                                    const FieldIndex& Y) const {
  if (!on_grid(X.time, h) || !on_grid(Y.time, h))
    throw validation_error("matsubara: times must lie on the [0,beta)_h grid");
  std::vector<double> freqs = matsubara_frequencies(p_.beta, h);
  std::vector<int> dx = site_diff(X, Y);
  const double tau = X.time - Y.time;
  cplx acc = 0.0;
  for (long i = 0; i < grid_.size(); ++i) {
    const BandBlock& b = blocks_[i];
    long ph = phase_exponent(grid_.indices()[i], dx, p_.L);
    cplx phase = std::exp(kI * (2.0 * kPi * ph / p_.L));
    for (double w : freqs) {
      cplx c = std::exp(-kI * (w - p_.theta / 2.0) / h);
      cplx term = 0.0;
      for (int xi = 0; xi < 2; ++xi) {
        double lam = (xi == 0 ? b.e_full : -b.e_full);
        term += b.U_matrix(X.band - 1, xi) *
                std::conj(b.U_matrix(Y.band - 1, xi)) /
                (h * (1.0 - c * std::exp(lam / h)));
      }
      acc += phase * std::exp(kI * w * tau) * term;
    }
  }
  return acc / (p_.beta * static_cast<double>(grid_.size()));
}

Eigen::Matrix2cd CovarianceEvaluator::equal_time(
    const std::vector<int>& x, const std::vector<int>& y) const {
  const double cb = std::cos(p_.beta * p_.theta / 2.0);
  const cplx etheta = std::exp(-kI * (p_.beta * p_.theta / 2.0));
  std::vector<int> dx(x.size());
  for (std::size_t j = 0; j < dx.size(); ++j) dx[j] = x[j] - y[j];
  Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
  for (long i = 0; i < grid_.size(); ++i) {
    const BandBlock& b = blocks_[i];
    long ph = phase_exponent(grid_.indices()[i], dx, p_.L);
    cplx phase = std::exp(kI * (2.0 * kPi * ph / p_.L));
    double E = std::sqrt(b.e * b.e + std::norm(phi_));
    double x_ = p_.beta * E;
    double den, diag_cosh, sdiag;
    if (x_ > 30.0) {
      // All three ratios expressed through e^{-x}.
      double em = std::exp(-x_);
      double em2 = em * em;
      double scale = 2.0 * cb * em + 1.0 + em2;  // 2 e^{-x}(c + cosh x)
      den = scale;
      diag_cosh = 1.0 + em2;                     // 2 e^{-x} cosh x
      sdiag = 1.0 - em2;                         // 2 e^{-x} sinh x
      cplx diag1 = (2.0 * em * etheta + diag_cosh) / (2.0 * den);
      double off = p_.beta * ((x_ > 0) ? sdiag / (den * x_) : 0.0);
      double pm = sdiag * b.e / (2.0 * E * den);
      out(0, 0) += phase * (diag1 - pm);
      out(1, 1) += phase * (diag1 + pm);
      out(0, 1) += phase * (-std::conj(phi_) * off / 2.0);
      out(1, 0) += phase * (-phi_ * off / 2.0);
    } else {
      den = cb + std::cosh(x_);
      cplx diag1 = (etheta + std::cosh(x_)) / (2.0 * den);
      double off = p_.beta * sinhc(x_) / den;        // sinh(beta E)/(E den)
      double pm = std::sinh(x_) * b.e / (2.0 * E * den);
      out(0, 0) += phase * (diag1 - pm);
      out(1, 1) += phase * (diag1 + pm);
      out(0, 1) += phase * (-std::conj(phi_) * off / 2.0);
      out(1, 0) += phase * (-phi_ * off / 2.0);
    }
  }
  return out / static_cast<double>(grid_.size());
}

double pair_integral(const ModelParams& p, double r, long n_per_axis) {
  double cb = std::cos(p.beta * p.theta / 2.0);
  long total = 1;
  for (int j = 0; j < p.d; ++j) total *= n_per_axis;
  std::vector<double> k(p.d);
  std::vector<int> m(p.d, 0);
  double acc = 0.0;
  for (long i = 0; i < total; ++i) {
    for (int j = 0; j < p.d; ++j) k[j] = 2.0 * kPi * m[j] / n_per_axis;
    double e = dispersion(p, k);
    double E = std::sqrt(e * e + r * r);
    acc += gap_integrand(E, p.beta, cb);
    for (int j = p.d - 1; j >= 0; --j) {
      if (++m[j] < n_per_axis) break;
      m[j] = 0;
    }
  }
  return acc / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Scale decomposition
// ---------------------------------------------------------------------------

double cutoff_chi(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  double a = std::exp(1.0 / (x - 2.0));   // = e^{-1/(2-x)}, -> 0 as x -> 2-
  double b = std::exp(-1.0 / (x - 1.0));  // -> 0 as x -> 1+
  return a / (a + b);
}

ScaleDecomposition::ScaleDecomposition(const ModelParams& p, cplx phi,
                                       double h, double M)
    : p_(p), phi_(phi), h_(h), M_(M), grid_(p.d, p.L) {
  p_.validate();
  if (M < 2.0 * kPi) throw validation_error("scale decomposition: M >= 2 pi");
  double hmin = std::max(0.5 * std::max(1.0, 1.0 / p.beta) * M * M,
                         4.0 * static_cast<double>(p.d));
  if (h < hmin - 1e-12)
    throw validation_error("scale decomposition: h below admissible floor");
  double bh = p.beta * h;
  if (std::abs(bh / 2.0 - std::round(bh / 2.0)) > 1e-9)
    throw validation_error("scale decomposition: h must lie in (2/beta) N");
  n_h_ = static_cast<int>(std::floor(std::log(2.0 * h) / std::log(M)));
  n_beta_ = std::max(
      static_cast<int>(std::floor(std::log(1.0 / p.beta) / std::log(M))) + 1,
      1);
  if (n_h_ < n_beta_ + 1)
    throw numerical_error("scale decomposition: N_h < N_beta + 1");
  blocks_.reserve(grid_.size());
  for (long i = 0; i < grid_.size(); ++i)
    blocks_.push_back(make_band_block(p_, phi_, grid_.point(i)));
  freqs_ = matsubara_frequencies(p.beta, h);
}

double ScaleDecomposition::chi_M(double x) const {
  return cutoff_chi((x - M_) / (M_ * M_ - M_) + 1.0);
}

double ScaleDecomposition::chi(int l_phys, double omega) const {
  double u = h_ * std::abs(1.0 - std::exp(kI * omega / h_));
  if (l_phys == n_beta_) return chi_M(u * std::pow(M_, -n_beta_));
  return chi_M(u * std::pow(M_, -l_phys)) -
         chi_M(u * std::pow(M_, -(l_phys - 1)));
}

double ScaleDecomposition::chi_sum(double omega) const {
  double acc = 0.0;
  for (int l = n_beta_; l <= n_h_; ++l) acc += chi(l, omega);
  return acc;
}

Eigen::Matrix2cd ScaleDecomposition::resolvent(long ki, double omega) const {
  const BandBlock& b = blocks_[ki];
  cplx c = std::exp(-kI * (omega - p_.theta / 2.0) / h_);
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  d(0, 0) = 1.0 / (h_ * (1.0 - c * std::exp(b.e_full / h_)));
  d(1, 1) = 1.0 / (h_ * (1.0 - c * std::exp(-b.e_full / h_)));
  return b.U_matrix * d * b.U_matrix.adjoint();
}

cplx ScaleDecomposition::C_l(int l, const FieldIndex& X,
                             const FieldIndex& Y) const {
  if (l < 0 || l > top_scale())
    throw validation_error("scale index out of range");
  if (!on_grid(X.time, h_) || !on_grid(Y.time, h_))
    throw validation_error("C_l: times must lie on the [0,beta)_h grid");
  std::vector<int> dx = site_diff(X, Y);
  const double tau = X.time - Y.time;
  cplx acc = 0.0;
  for (long i = 0; i < grid_.size(); ++i) {
    long ph = phase_exponent(grid_.indices()[i], dx, p_.L);
    cplx phase = std::exp(kI * (2.0 * kPi * ph / p_.L));
    if (l == 0) {
      double w = kPi / p_.beta;
      acc += phase * resolvent(i, w)(X.band - 1, Y.band - 1);
      continue;
    }
    for (double w : freqs_) {
      double cut;
      if (l == 1) {
        if (std::abs(w - kPi / p_.beta) < 1e-12) continue;
        cut = chi(n_beta_, w);
      } else {
        cut = chi(l + n_beta_ - 1, w);
      }
      if (cut == 0.0) continue;
      acc += phase * cut * std::exp(kI * (w - kPi / p_.beta) * tau) *
             resolvent(i, w)(X.band - 1, Y.band - 1);
    }
  }
  return acc / (p_.beta * static_cast<double>(grid_.size()));
}

cplx ScaleDecomposition::C_sum(const FieldIndex& X, const FieldIndex& Y) const {
  cplx acc = 0.0;
  for (int l = 0; l <= top_scale(); ++l) acc += C_l(l, X, Y);
  return acc;
}

double ScaleDecomposition::decay_norm(int l) const {
  // sup over the fixed index of (1/2h) sum of |C_l| along the free index,
  // both orders; translation invariance pins the fixed index at the origin.
  long bh = std::lround(p_.beta * h_);
  double best = 0.0;
  std::vector<int> origin(p_.d, 0);
  for (int rho = 1; rho <= 2; ++rho) {
    double row = 0.0, col = 0.0;
    FieldIndex X{rho, origin, 0.0};
    for (int eta = 1; eta <= 2; ++eta) {
      for (long si = 0; si < grid_.size(); ++si) {
        const std::vector<int>& m = grid_.indices()[si];
        for (long step = 0; step < bh; ++step) {
          FieldIndex Y{eta, m, static_cast<double>(step) / h_};
          row += std::abs(C_l(l, X, Y));
          col += std::abs(C_l(l, Y, X));
        }
      }
    }
    best = std::max(best, std::max(row, col));
  }
  return best / (2.0 * h_);
}

// ---------------------------------------------------------------------------
// Determinant-bound fuzzing
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXcd random_unit(Rng& rng, int m) {
  Eigen::VectorXcd v(m);
  for (int i = 0; i < m; ++i) v(i) = rng.cnormal();
  return v / v.norm();
}

FieldIndex random_index(Rng& rng, const ModelParams& p, bool grid_times,
                        double h) {
  FieldIndex X;
  X.band = 1 + rng.uniform_int(2);
  X.site.resize(p.d);
  for (int j = 0; j < p.d; ++j) X.site[j] = rng.uniform_int(p.L);
  if (grid_times) {
    long bh = std::lround(p.beta * h);
    X.time = rng.uniform_int(static_cast<int>(bh)) / h;
  } else {
    X.time = rng.uniform(0.0, p.beta * (1.0 - 1e-12));
  }
  return X;
}

}  // namespace

FuzzReport determinant_bound_fuzz(const ModelParams& p, cplx phi, int n,
                                  int m, int trials, std::uint64_t seed) {
  CovarianceEvaluator cov(p, phi);
  double cb = std::cos(p.beta * p.theta / 2.0);
  double bound1 = 0.0;
  for (const BandBlock& b : cov.blocks()) {
    double E = std::sqrt(b.e * b.e + std::norm(phi));
    double x = p.beta * E;
    double em = std::exp(-std::min(x, 700.0));
    bound1 += 1.0 / std::sqrt(1.0 + 2.0 * cb * em + em * em);
  }
  bound1 *= 16.0 / static_cast<double>(cov.blocks().size());

  FuzzReport rep;
  Rng rng(seed);
  Eigen::MatrixXcd mat(n, n);
  for (int t = 0; t < trials; ++t) {
    std::vector<Eigen::VectorXcd> u(n), v(n);
    std::vector<FieldIndex> X(n), Y(n);
    for (int i = 0; i < n; ++i) {
      u[i] = random_unit(rng, m);
      v[i] = random_unit(rng, m);
      X[i] = random_index(rng, p, false, 0.0);
      Y[i] = random_index(rng, p, false, 0.0);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        mat(i, j) = u[i].dot(v[j]) * cov.covariance(X[i], Y[j]);
    double det = std::abs(mat.determinant());
    double bound = std::pow(bound1, n);
    double ratio = det / bound;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio > 1.0 + 1e-9) ++rep.violations;
  }
  return rep;
}

FuzzReport gram_bound_fuzz(const ModelParams& p, cplx phi, double h, double M,
                           int n, int m, int trials, std::uint64_t seed) {
  ScaleDecomposition dec(p, phi, h, M);
  // Gram-vector norms of the omega = pi/beta representation. ||f|| is
  // index-independent; ||g|| depends on the band through the resolvent
  // column.
  double th2 = p.Theta() * p.Theta();
  MomentumGrid grid(p.d, p.L);
  double f2 = 0.0;
  Eigen::Vector2d g2 = Eigen::Vector2d::Zero();
  {
    double w = kPi / p.beta;
    for (long i = 0; i < grid.size(); ++i) {
      BandBlock b = make_band_block(p, phi, grid.point(i));
      double quart = th2 + b.e * b.e;
      f2 += 1.0 / std::sqrt(quart);
      cplx c = std::exp(-kI * (w - p.theta / 2.0) / h);
      Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
      d(0, 0) = 1.0 / (h * (1.0 - c * std::exp(b.e_full / h)));
      d(1, 1) = 1.0 / (h * (1.0 - c * std::exp(-b.e_full / h)));
      Eigen::Matrix2cd r = b.U_matrix * d * b.U_matrix.adjoint();
      for (int rho = 0; rho < 2; ++rho) {
        double colsq = std::norm(r(0, rho)) + std::norm(r(1, rho));
        g2(rho) += std::sqrt(quart) * colsq;
      }
    }
    double vol = p.beta * static_cast<double>(grid.size());
    f2 /= vol;
    g2 /= vol;
  }

  FuzzReport rep;
  Rng rng(seed);
  Eigen::MatrixXcd mat(n, n);
  for (int t = 0; t < trials; ++t) {
    std::vector<Eigen::VectorXcd> u(n), v(n);
    std::vector<FieldIndex> X(n), Y(n);
    double bound = 1.0;
    for (int i = 0; i < n; ++i) {
      u[i] = random_unit(rng, m);
      v[i] = random_unit(rng, m);
      X[i] = random_index(rng, p, true, h);
      Y[i] = random_index(rng, p, true, h);
      bound *= std::sqrt(f2) * std::sqrt(g2(Y[i].band - 1));
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        mat(i, j) = u[i].dot(v[j]) * dec.C_l(0, X[i], Y[j]);
    double det = std::abs(mat.determinant());
    double ratio = det / bound;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio > 1.0 + 1e-9) ++rep.violations;
  }
  return rep;
}

}  // namespace bcsif
