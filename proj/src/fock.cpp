#include "bcsif/fock.hpp"

#include <array>
#include <map>

#include <unsupported/Eigen/MatrixFunctions>

#include "bcsif/model.hpp"

namespace bcsif {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr long kDenseCap = 4096;

void check_dense(long dim) {
  if (dim > kDenseCap)
    throw validation_error("dense Fock path needs dim " + std::to_string(dim) +
                           " > cap " + std::to_string(kDenseCap));
}

int parity_below(long state, int mode) {
  long mask = (1L << mode) - 1;
  return __builtin_popcountll(state & mask) % 2 ? -1 : 1;
}

}  // namespace

FockSpace::FockSpace(int n_modes) : n_modes_(n_modes) {
  if (n_modes < 1 || n_modes > 16)
    throw validation_error("FockSpace: mode count " + std::to_string(n_modes) +
                           " outside [1, 16]");
}

SpMatC FockSpace::creation(int mode) const {
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(dim() / 2);
  for (long b = 0; b < dim(); ++b) {
    if (b & (1L << mode)) continue;
    t.emplace_back(b | (1L << mode), b, cplx(parity_below(b, mode), 0.0));
  }
  SpMatC m(dim(), dim());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMatC FockSpace::annihilation(int mode) const {
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(dim() / 2);
  for (long b = 0; b < dim(); ++b) {
    if (!(b & (1L << mode))) continue;
    t.emplace_back(b & ~(1L << mode), b, cplx(parity_below(b, mode), 0.0));
  }
  SpMatC m(dim(), dim());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

namespace {

// Applies a product of ladder operators (rightmost first) to every basis
// state; ops are (mode, is_creation).
SpMatC apply_ladder(const FockSpace& f,
                    const std::vector<std::pair<int, bool>>& ops, cplx c) {
  std::vector<Eigen::Triplet<cplx>> t;
  for (long b = 0; b < f.dim(); ++b) {
    long s = b;
    int sign = 1;
    bool dead = false;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
      long bit = 1L << it->first;
      if (it->second) {  // creation
        if (s & bit) { dead = true; break; }
        sign *= parity_below(s, it->first);
        s |= bit;
      } else {
        if (!(s & bit)) { dead = true; break; }
        sign *= parity_below(s, it->first);
        s &= ~bit;
      }
    }
    if (!dead) t.emplace_back(s, b, c * static_cast<double>(sign));
  }
  SpMatC m(f.dim(), f.dim());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

SpMatC FockSpace::quadratic(
    const std::vector<std::tuple<int, int, cplx>>& terms) const {
  SpMatC acc(dim(), dim());
  for (const auto& [i, j, c] : terms)
    acc = acc + apply_ladder(*this, {{i, true}, {j, false}}, c);
  return acc;
}

SpMatC FockSpace::pair_create(int i, int j, cplx c) const {
  return apply_ladder(*this, {{i, true}, {j, true}}, c);
}

SpMatC FockSpace::pair_annihilate(int i, int j, cplx c) const {
  return apply_ladder(*this, {{i, false}, {j, false}}, c);
}

SpMatC FockSpace::quartic(int i, int j, int k, int l, cplx c) const {
  return apply_ladder(*this, {{i, true}, {j, true}, {k, false}, {l, false}},
                      c);
}

// ---------------------------------------------------------------------------
// Operator sets
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<int>> all_sites(const ModelParams& p) {
  long n = p.n_sites();
  std::vector<std::vector<int>> sites;
  sites.reserve(n);
  std::vector<int> x(p.d, 0);
  for (long i = 0; i < n; ++i) {
    sites.push_back(x);
    for (int j = p.d - 1; j >= 0; --j) {
      if (++x[j] < p.L) break;
      x[j] = 0;
    }
  }
  return sites;
}

long site_number(const ModelParams& p, const std::vector<int>& x) {
  std::vector<int> r = p.site_mod(x);
  long idx = 0;
  for (int j = 0; j < p.d; ++j) idx = idx * p.L + r[j];
  return idx;
}

std::vector<int> default_xhat(const ModelParams& p) {
  if (p.xhat) return *p.xhat;
  return std::vector<int>(p.d, 0);
}

std::vector<int> default_yhat(const ModelParams& p) {
  if (p.yhat) return *p.yhat;
  std::vector<int> y(p.d, 0);
  y[0] = 1;  // differs from the default xhat mod L once L >= 2
  return y;
}

}  // namespace

int spin_mode(const ModelParams& p, const std::vector<int>& x, int sigma) {
  return static_cast<int>(2 * site_number(p, x) + sigma);
}

int band_mode(const ModelParams& p, const std::vector<int>& x, int rho) {
  return static_cast<int>(2 * site_number(p, x) + (rho - 1));
}

SpinOperators build_spin_operators(const ModelParams& p) {
  SpinOperators ops;
  ops.n_modes = static_cast<int>(2 * p.n_sites());
  FockSpace f(ops.n_modes);
  auto sites = all_sites(p);
  double hop_sign = (p.hop == 0) ? 1.0 : -1.0;

  std::vector<std::tuple<int, int, cplx>> h0;
  for (const auto& x : sites) {
    for (int sg = 0; sg < 2; ++sg) {
      int i = spin_mode(p, x, sg);
      for (int j = 0; j < p.d; ++j) {
        std::vector<int> xp = x, xm = x;
        xp[j] += 1;
        xm[j] -= 1;
        h0.emplace_back(i, spin_mode(p, xp, sg), hop_sign);
        h0.emplace_back(i, spin_mode(p, xm, sg), hop_sign);
      }
      h0.emplace_back(i, i, -p.mu);
    }
  }
  ops.H0 = f.quadratic(h0);

  double ld = static_cast<double>(p.n_sites());
  SpMatC v(f.dim(), f.dim());
  for (const auto& x : sites)
    for (const auto& y : sites)
      v = v + f.quartic(spin_mode(p, x, 0), spin_mode(p, x, 1),
                        spin_mode(p, y, 1), spin_mode(p, y, 0), p.U / ld);
  ops.V = v;
  ops.H = ops.H0 + ops.V;

  SpMatC fop(f.dim(), f.dim());
  for (const auto& x : sites) {
    fop = fop + f.pair_create(spin_mode(p, x, 0), spin_mode(p, x, 1), p.gamma);
    fop = fop +
          f.pair_annihilate(spin_mode(p, x, 1), spin_mode(p, x, 0), p.gamma);
  }
  ops.F = fop;

  std::vector<std::tuple<int, int, cplx>> sz;
  for (const auto& x : sites) {
    sz.emplace_back(spin_mode(p, x, 0), spin_mode(p, x, 0), 0.5);
    sz.emplace_back(spin_mode(p, x, 1), spin_mode(p, x, 1), -0.5);
  }
  ops.Sz = f.quadratic(sz);

  auto xh = default_xhat(p);
  auto yh = default_yhat(p);
  ops.A1 = f.pair_create(spin_mode(p, xh, 0), spin_mode(p, xh, 1), 1.0);
  ops.A1dag =
      f.pair_annihilate(spin_mode(p, xh, 1), spin_mode(p, xh, 0), 1.0);
  ops.A2 = f.quartic(spin_mode(p, xh, 0), spin_mode(p, xh, 1),
                     spin_mode(p, yh, 1), spin_mode(p, yh, 0), 1.0);
  return ops;
}

void build_spin_hs_operators(const ModelParams& p, SpMatC& vplus,
                             SpMatC& vminus) {
  FockSpace f(static_cast<int>(2 * p.n_sites()));
  double c = std::sqrt(p.abs_u()) /
             (std::sqrt(p.beta) * std::pow(static_cast<double>(p.n_sites()),
                                           0.5));
  SpMatC vp(f.dim(), f.dim()), vm(f.dim(), f.dim());
  for (const auto& x : all_sites(p)) {
    vp = vp + f.pair_create(spin_mode(p, x, 0), spin_mode(p, x, 1), c);
    vm = vm + f.pair_annihilate(spin_mode(p, x, 1), spin_mode(p, x, 0), c);
  }
  vplus = vp;
  vminus = vm;
}

BandOperators build_band_operators(const ModelParams& p, cplx phi) {
  BandOperators ops;
  ops.n_modes = static_cast<int>(2 * p.n_sites());
  FockSpace f(ops.n_modes);
  auto sites = all_sites(p);
  double ld = static_cast<double>(p.n_sites());
  MomentumGrid grid(p.d, p.L);

  // Position-space kernel of H0(phi): (1/L^d) sum_k e^{i<k,x-y>} M(k).
  std::vector<std::tuple<int, int, cplx>> h0;
  for (const auto& x : sites) {
    for (const auto& y : sites) {
      Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
      for (long ki = 0; ki < grid.size(); ++ki) {
        long ip = 0;
        for (int j = 0; j < p.d; ++j) {
          long term =
              (static_cast<long>(grid.indices()[ki][j]) *
               (((x[j] - y[j]) % p.L + p.L) % p.L)) % p.L;
          ip = (ip + term) % p.L;
        }
        cplx phase = std::exp(kI * (2.0 * kPi * ip / p.L));
        double e = dispersion(p, grid.point(ki));
        Eigen::Matrix2cd mk;
        mk << kI * (p.theta / 2.0) + e, phi, std::conj(phi),
            kI * (p.theta / 2.0) - e;
        m += phase * mk;
      }
      m /= ld;
      for (int r = 1; r <= 2; ++r)
        for (int s = 1; s <= 2; ++s)
          if (std::abs(m(r - 1, s - 1)) > 1e-15)
            h0.emplace_back(band_mode(p, x, r), band_mode(p, y, s),
                            m(r - 1, s - 1));
    }
  }
  ops.H0phi = f.quadratic(h0);

  SpMatC v(f.dim(), f.dim());
  for (const auto& x : sites) {
    v = v + f.quadratic({{band_mode(p, x, 1), band_mode(p, x, 1),
                          cplx(p.U / ld, 0.0)}});
    for (const auto& y : sites)
      v = v + f.quartic(band_mode(p, x, 1), band_mode(p, y, 2),
                        band_mode(p, x, 2), band_mode(p, y, 1), -p.U / ld);
  }
  ops.Vb = v;

  cplx wc = kI * std::sqrt(p.abs_u()) /
            (std::sqrt(p.beta) * std::sqrt(ld));
  SpMatC wp(f.dim(), f.dim()), wm(f.dim(), f.dim());
  for (const auto& x : sites) {
    wp = wp + f.quadratic({{band_mode(p, x, 1), band_mode(p, x, 2), wc}});
    wm = wm + f.quadratic({{band_mode(p, x, 2), band_mode(p, x, 1), wc}});
  }
  ops.Wplus = wp;
  ops.Wminus = wm;

  auto xh = default_xhat(p);
  auto yh = default_yhat(p);
  ops.A1 = f.quadratic(
      {{band_mode(p, xh, 1), band_mode(p, xh, 2), cplx(1.0, 0.0)}});
  ops.A2 = f.quartic(band_mode(p, xh, 1), band_mode(p, yh, 2),
                     band_mode(p, xh, 2), band_mode(p, yh, 1), 1.0);
  return ops;
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

cplx trace_exp(const Eigen::MatrixXcd& k, double beta) {
  check_dense(k.rows());
  if (!k.allFinite()) throw numerical_error("trace_exp: non-finite entries");
  Eigen::MatrixXcd m = (-beta) * k;
  return m.exp().trace();
}

cplx trace_exp_insert(const Eigen::MatrixXcd& k, const Eigen::MatrixXcd& a,
                      double beta) {
  check_dense(k.rows());
  Eigen::MatrixXcd m = (-beta) * k;
  return (m.exp() * a).trace();
}

cplx trace_exp_derivative(const Eigen::MatrixXcd& k, const Eigen::MatrixXcd& a,
                          double beta) {
  long n = k.rows();
  check_dense(2 * n);
  Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  blk.topLeftCorner(n, n) = -beta * k;
  blk.bottomRightCorner(n, n) = -beta * k;
  blk.topRightCorner(n, n) = -beta * a;
  Eigen::MatrixXcd e = blk.exp();
  return e.block(0, n, n, n).trace();
}

BlockedSpectral::BlockedSpectral(const SpMatC& h_herm,
                                 const std::vector<int>& sz_times_2) {
  long dim = h_herm.rows();
  std::map<int, std::vector<long>> groups;
  for (long b = 0; b < dim; ++b) groups[sz_times_2[b]].push_back(b);
  Eigen::MatrixXcd hd(h_herm);
  double herm_err = (hd - hd.adjoint()).cwiseAbs().maxCoeff();
  if (herm_err > 1e-10 * (1.0 + hd.cwiseAbs().maxCoeff()))
    throw validation_error("BlockedSpectral: matrix is not Hermitian");
  for (auto& [sz2, states] : groups) {
    Sector sec;
    sec.sz2 = sz2;
    sec.states = states;
    long n = static_cast<long>(states.size());
    Eigen::MatrixXcd block(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) block(i, j) = hd(states[i], states[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block);
    sec.evals = es.eigenvalues();
    sec.evecs = es.eigenvectors();
    sectors_.push_back(std::move(sec));
  }
}

cplx BlockedSpectral::partition(double beta, double theta) const {
  cplx acc = 0.0;
  for (const auto& sec : sectors_) {
    cplx phase = std::exp(-kI * (beta * theta * sec.sz2 / 2.0));
    double s = 0.0;
    for (long i = 0; i < sec.evals.size(); ++i)
      s += std::exp(-beta * sec.evals(i));
    acc += phase * s;
  }
  return acc;
}

cplx BlockedSpectral::expectation_numerator(double beta, double theta,
                                            const SpMatC& a) const {
  Eigen::MatrixXcd ad(a);
  cplx acc = 0.0;
  for (const auto& sec : sectors_) {
    long n = static_cast<long>(sec.states.size());
    Eigen::MatrixXcd blk(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        blk(i, j) = ad(sec.states[i], sec.states[j]);
    Eigen::MatrixXcd rot = sec.evecs.adjoint() * blk * sec.evecs;
    cplx s = 0.0;
    for (long i = 0; i < n; ++i)
      s += std::exp(-beta * sec.evals(i)) * rot(i, i);
    acc += std::exp(-kI * (beta * theta * sec.sz2 / 2.0)) * s;
  }
  return acc;
}

std::vector<int> spin_sz2_table(const ModelParams& p) {
  long n_modes = 2 * p.n_sites();
  long dim = 1L << n_modes;
  std::vector<int> t(dim);
  long up_mask = 0, dn_mask = 0;
  for (long m = 0; m < n_modes; ++m)
    ((m % 2 == 0) ? up_mask : dn_mask) |= (1L << m);
  for (long b = 0; b < dim; ++b)
    t[b] = __builtin_popcountll(b & up_mask) -
           __builtin_popcountll(b & dn_mask);
  return t;
}

// ---------------------------------------------------------------------------
// Product formulas and partition ratios
// ---------------------------------------------------------------------------

cplx free_partition_product(const ModelParams& p, double theta_override) {
  double th = theta_override >= 0.0 ? theta_override : p.theta;
  MomentumGrid grid(p.d, p.L);
  cplx prod = 1.0;
  double c = std::cos(p.beta * th / 2.0);
  for (long i = 0; i < grid.size(); ++i) {
    double e = dispersion(p, grid.point(i));
    double em = std::exp(-p.beta * e);
    prod *= 1.0 + 2.0 * c * em + em * em;
  }
  return prod;
}

cplx band_partition_product(const ModelParams& p, cplx phi) {
  MomentumGrid grid(p.d, p.L);
  double c = std::cos(p.beta * p.theta / 2.0);
  cplx prod = std::exp(-kI * (p.beta * p.theta / 2.0) *
                       static_cast<double>(p.n_sites()));
  for (long i = 0; i < grid.size(); ++i) {
    double e = dispersion(p, grid.point(i));
    double E = std::sqrt(e * e + std::norm(phi));
    prod *= 2.0 * (c + std::cosh(p.beta * E));
  }
  return prod;
}

double b_ratio(const ModelParams& p, cplx phi) {
  MomentumGrid grid(p.d, p.L);
  double c = std::cos(p.beta * p.theta / 2.0);
  double acc = 0.0;
  for (long i = 0; i < grid.size(); ++i) {
    double e = dispersion(p, grid.point(i));
    double E = std::sqrt(e * e + std::norm(phi));
    acc += log_coshsum(p.beta * E, c) - log_coshsum(p.beta * e, c);
  }
  return std::exp(acc);
}

PartitionCheck free_partition_check(const ModelParams& p) {
  SpinOperators ops = build_spin_operators(p);
  FockSpace f(ops.n_modes);
  check_dense(f.dim());
  Eigen::MatrixXcd k =
      Eigen::MatrixXcd(ops.H0) + kI * p.theta * Eigen::MatrixXcd(ops.Sz);
  PartitionCheck chk;
  chk.trace = trace_exp(k, p.beta);
  chk.product = free_partition_product(p);
  chk.abs_err = std::abs(chk.trace - chk.product);
  return chk;
}

PartitionCheck band_partition_check(const ModelParams& p, cplx phi) {
  BandOperators ops = build_band_operators(p, phi);
  FockSpace f(ops.n_modes);
  check_dense(f.dim());
  PartitionCheck chk;
  chk.trace = trace_exp(Eigen::MatrixXcd(ops.H0phi), p.beta);
  chk.product = band_partition_product(p, phi);
  chk.abs_err = std::abs(chk.trace - chk.product);
  return chk;
}

cplx spin_partition_ratio(const ModelParams& p, cplx l1, cplx l2,
                          double theta_override) {
  double th = theta_override >= 0.0 ? theta_override : p.theta;
  SpinOperators ops = build_spin_operators(p);
  FockSpace f(ops.n_modes);
  check_dense(f.dim());
  Eigen::MatrixXcd k = Eigen::MatrixXcd(ops.H) +
                       kI * th * Eigen::MatrixXcd(ops.Sz) +
                       Eigen::MatrixXcd(ops.F);
  if (l1 != 0.0) k += l1 * Eigen::MatrixXcd(ops.A1);
  if (l2 != 0.0) k += l2 * Eigen::MatrixXcd(ops.A2);
  return trace_exp(k, p.beta) / free_partition_product(p, th);
}

cplx thermal_expectation(const ModelParams& p, Observable obs) {
  SpinOperators ops = build_spin_operators(p);
  BlockedSpectral bs(ops.H + ops.F, spin_sz2_table(p));
  const SpMatC& a = obs == Observable::A1 ? ops.A1
                    : obs == Observable::A1dag ? ops.A1dag
                                               : ops.A2;
  cplx num = bs.expectation_numerator(p.beta, p.theta, a);
  cplx den = bs.partition(p.beta, p.theta);
  if (std::abs(den) < 1e-300)
    throw numerical_error("thermal_expectation: vanishing partition function");
  return num / den;
}

RealityPeriodicityReport reality_periodicity_check(const ModelParams& p,
                                                   double tol) {
  SpinOperators ops = build_spin_operators(p);
  FockSpace f(ops.n_modes);
  check_dense(f.dim());
  Eigen::MatrixXcd sz(ops.Sz), base = Eigen::MatrixXcd(ops.H) +
                                       Eigen::MatrixXcd(ops.F);
  auto traces = [&](double th) {
    Eigen::MatrixXcd k = base + kI * th * sz;
    Eigen::MatrixXcd e = ((-p.beta) * k).exp();
    return std::array<cplx, 3>{e.trace(),
                               (e * Eigen::MatrixXcd(ops.A1)).trace(),
                               (e * Eigen::MatrixXcd(ops.A2)).trace()};
  };
  auto t0 = traces(p.theta);
  RealityPeriodicityReport rep;
  for (const cplx& v : t0) {
    double re = std::max(std::abs(v.real()), 1e-300);
    rep.max_imag_rel = std::max(rep.max_imag_rel, std::abs(v.imag()) / re);
  }
  {
    Eigen::MatrixXcd k = base + kI * p.theta * sz;
    Eigen::MatrixXcd e = ((-p.beta) * k).exp();
    cplx a1 = (e * Eigen::MatrixXcd(ops.A1)).trace();
    cplx a1d = (e * Eigen::MatrixXcd(ops.A1dag)).trace();
    rep.a1_conj_rel = std::abs(a1 - a1d) / std::max(std::abs(a1), 1e-300);
  }
  auto tshift = traces(p.theta + 4.0 * kPi / p.beta);
  rep.periodicity_rel =
      std::abs(t0[0] - tshift[0]) / std::max(std::abs(t0[0]), 1e-300);
  // theta + 2 pi/beta lies in (2 pi/beta, 4 pi/beta); it must reproduce the
  // |theta - 2 pi/beta| system.
  double th_big = p.theta + 2.0 * kPi / p.beta;
  double th_ref = std::abs(th_big - 4.0 * kPi / p.beta);
  auto tb = traces(th_big);
  auto tr = traces(th_ref);
  rep.reflection_rel =
      std::abs(tb[0] - tr[0]) / std::max(std::abs(tr[0]), 1e-300);
  rep.pass = rep.max_imag_rel < tol && rep.a1_conj_rel < tol &&
             rep.periodicity_rel < tol && rep.reflection_rel < tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Trace-defined covariance
// ---------------------------------------------------------------------------

cplx covariance_from_traces(const ModelParams& p, cplx phi,
                            const FieldIndex& X, const FieldIndex& Y) {
  if (X.time < 0.0 || X.time >= p.beta || Y.time < 0.0 || Y.time >= p.beta)
    throw validation_error("covariance_from_traces: times in [0, beta)");
  BandOperators ops = build_band_operators(p, phi);
  FockSpace f(ops.n_modes);
  check_dense(f.dim());
  Eigen::MatrixXcd k(ops.H0phi);
  Eigen::MatrixXcd adag(
      f.creation(band_mode(p, p.site_mod(X.site), X.band)));
  Eigen::MatrixXcd a(
      f.annihilation(band_mode(p, p.site_mod(Y.site), Y.band)));
  cplx z = trace_exp(k, p.beta);
  double s = X.time, t = Y.time;
  if (s >= t) {
    Eigen::MatrixXcd e1 = ((-(p.beta - s)) * k).exp();
    Eigen::MatrixXcd e2 = ((-(s - t)) * k).exp();
    Eigen::MatrixXcd e3 = ((-t) * k).exp();
    return (e1 * adag * e2 * a * e3).trace() / z;
  }
  Eigen::MatrixXcd e1 = ((-(p.beta - t)) * k).exp();
  Eigen::MatrixXcd e2 = ((-(t - s)) * k).exp();
  Eigen::MatrixXcd e3 = ((-s) * k).exp();
  return -(e1 * a * e2 * adag * e3).trace() / z;
}

cplx spin_covariance_from_traces(const ModelParams& p,
                                 const std::vector<int>& x, int sigma,
                                 double s, const std::vector<int>& y, int tau,
                                 double t) {
  SpinOperators ops = build_spin_operators(p);
  FockSpace f(ops.n_modes);
  check_dense(f.dim());
  Eigen::MatrixXcd k =
      Eigen::MatrixXcd(ops.H0) + kI * p.theta * Eigen::MatrixXcd(ops.Sz);
  Eigen::MatrixXcd adag(f.creation(spin_mode(p, p.site_mod(x), sigma)));
  Eigen::MatrixXcd a(f.annihilation(spin_mode(p, p.site_mod(y), tau)));
  cplx z = trace_exp(k, p.beta);
  if (s >= t) {
    Eigen::MatrixXcd e1 = ((-(p.beta - s)) * k).exp();
    Eigen::MatrixXcd e2 = ((-(s - t)) * k).exp();
    Eigen::MatrixXcd e3 = ((-t) * k).exp();
    return (e1 * adag * e2 * a * e3).trace() / z;
  }
  Eigen::MatrixXcd e1 = ((-(p.beta - t)) * k).exp();
  Eigen::MatrixXcd e2 = ((-(t - s)) * k).exp();
  Eigen::MatrixXcd e3 = ((-s) * k).exp();
  return -(e1 * a * e2 * adag * e3).trace() / z;
}

// ---------------------------------------------------------------------------
// Hubbard-Stratonovich chain
// ---------------------------------------------------------------------------

namespace {

struct HsWork {
  ModelParams p;
  cplx l1, l2;
  int deriv_j = 0;  // 0: partition; 1/2: correlation insertion
  GaussHermite gh_phi, gh_xi;
  double sigma = 0.0;  // Gaussian width sqrt(|U| / (beta L^d))
};

// Every band-side operator in the chain conserves the total particle
// number, so traces factor over popcount sectors; exponentiating the small
// sector blocks instead of the full matrix is what keeps the quadrature
// affordable.
struct SectorMats {
  std::vector<std::vector<long>> states;
  std::vector<Eigen::MatrixXcd> base, wp, wm, ains;
};

SectorMats sectorize(const Eigen::MatrixXcd& base, const Eigen::MatrixXcd& wp,
                     const Eigen::MatrixXcd& wm, const Eigen::MatrixXcd& ains,
                     int n_modes) {
  SectorMats s;
  s.states.resize(n_modes + 1);
  long dim = 1L << n_modes;
  for (long b = 0; b < dim; ++b)
    s.states[__builtin_popcountll(b)].push_back(b);
  for (const auto& st : s.states) {
    long n = static_cast<long>(st.size());
    Eigen::MatrixXcd mb(n, n), mp(n, n), mm(n, n), ma(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) {
        mb(i, j) = base(st[i], st[j]);
        mp(i, j) = wp(st[i], st[j]);
        mm(i, j) = wm(st[i], st[j]);
        ma(i, j) = ains.size() ? ains(st[i], st[j]) : cplx(0.0);
      }
    s.base.push_back(mb);
    s.wp.push_back(mp);
    s.wm.push_back(mm);
    s.ains.push_back(ma);
  }
  return s;
}

// Inner xi integral at fixed phi: (1/pi) int e^{-|xi|^2} TrRatio (or its
// -d/dlambda_j derivative) with the trace over the band Fock space.
cplx hs_inner(const HsWork& w, cplx phi) {
  BandOperators ops = build_band_operators(w.p, phi);
  FockSpace f(ops.n_modes);
  check_dense(f.dim());
  Eigen::MatrixXcd base = Eigen::MatrixXcd(ops.H0phi) +
                          Eigen::MatrixXcd(ops.Vb);
  if (w.l1 != 0.0) base += w.l1 * Eigen::MatrixXcd(ops.A1);
  if (w.l2 != 0.0) base -= w.l2 * Eigen::MatrixXcd(ops.A2);
  Eigen::MatrixXcd ains;
  if (w.deriv_j == 1) ains = Eigen::MatrixXcd(ops.A1);
  if (w.deriv_j == 2) ains = -Eigen::MatrixXcd(ops.A2);
  SectorMats sec = sectorize(base, Eigen::MatrixXcd(ops.Wplus),
                             Eigen::MatrixXcd(ops.Wminus), ains,
                             ops.n_modes);
  cplx z = band_partition_product(w.p, phi);
  cplx acc = 0.0;
  for (std::size_t a = 0; a < w.gh_xi.x.size(); ++a) {
    for (std::size_t b = 0; b < w.gh_xi.x.size(); ++b) {
      cplx xi(w.gh_xi.x[a], w.gh_xi.x[b]);
      cplx val = 0.0;
      for (std::size_t q = 0; q < sec.states.size(); ++q) {
        long n = static_cast<long>(sec.states[q].size());
        Eigen::MatrixXcd k =
            sec.base[q] - xi * sec.wp[q] - std::conj(xi) * sec.wm[q];
        if (w.deriv_j == 0) {
          val += ((-w.p.beta) * k).exp().trace();
        } else {
          Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
          blk.topLeftCorner(n, n) = -w.p.beta * k;
          blk.bottomRightCorner(n, n) = -w.p.beta * k;
          blk.topRightCorner(n, n) = -w.p.beta * sec.ains[q];
          val -= blk.exp().block(0, n, n, n).trace();
        }
      }
      acc += w.gh_xi.w[a] * w.gh_xi.w[b] * val;
    }
  }
  return acc / (kPi * z);
}

// phi-space Gaussian quadrature of B(phi) x inner, already rescaled so the
// weight is exactly e^{-u^2}; returns (1/pi) sum w B inner and the relative
// outer-shell contribution for the tail check.
std::pair<cplx, double> hs_outer(const HsWork& w) {
  std::size_t n = w.gh_phi.x.size();
  std::vector<cplx> cell(n * n);
  parallel_for(n * n, [&](std::size_t idx) {
    std::size_t i = idx / n, j = idx % n;
    cplx phi = w.p.gamma + w.sigma * cplx(w.gh_phi.x[i], w.gh_phi.x[j]);
    cell[idx] = w.gh_phi.w[i] * w.gh_phi.w[j] * b_ratio(w.p, phi) *
                hs_inner(w, phi);
  });
  cplx total = 0.0;
  double shell = 0.0;
  for (std::size_t idx = 0; idx < n * n; ++idx) {
    total += cell[idx];
    std::size_t i = idx / n, j = idx % n;
    if (i == 0 || j == 0 || i == n - 1 || j == n - 1)
      shell += std::abs(cell[idx]);
  }
  double tail = shell / std::max(std::abs(total), 1e-300);
  return {total / kPi, tail};
}

}  // namespace

cplx hs_partition(const ModelParams& p, cplx l1, cplx l2, int phi_nodes,
                  int xi_nodes) {
  if (phi_nodes < 8 || xi_nodes < 8)
    throw validation_error("hs_partition: nodes >= 8 per axis");
  HsWork w{p, l1, l2, 0, gauss_hermite(phi_nodes), gauss_hermite(xi_nodes),
           std::sqrt(p.abs_u() / (p.beta * p.n_sites()))};
  auto [val, tail] = hs_outer(w);
  if (tail > 1e-6)
    throw numerical_error("hs_partition: quadrature tail " +
                          std::to_string(tail) + " above threshold");
  return val;
}

cplx hs_correlation(const ModelParams& p, int j, int phi_nodes, int xi_nodes) {
  if (j != 1 && j != 2) throw validation_error("hs_correlation: j in {1,2}");
  HsWork w{p, 0.0, 0.0, j, gauss_hermite(phi_nodes), gauss_hermite(xi_nodes),
           std::sqrt(p.abs_u() / (p.beta * p.n_sites()))};
  auto [val, tail] = hs_outer(w);
  if (tail > 1e-6)
    throw numerical_error("hs_correlation: quadrature tail above threshold");
  // The correlation formulation carries L^d/(pi|U|) instead of
  // beta L^d/(pi|U|); after the same rescaling that is a 1/beta factor.
  return val / p.beta;
}

InsideIdentityCheck partition_equality_inside(const ModelParams& p, cplx phi,
                                              cplx xi, cplx l1, cplx l2) {
  SpinOperators sp = build_spin_operators(p);
  FockSpace fs(sp.n_modes);
  check_dense(fs.dim());
  SpMatC vplus, vminus;
  build_spin_hs_operators(p, vplus, vminus);
  Eigen::MatrixXcd k = Eigen::MatrixXcd(sp.H) +
                       kI * p.theta * Eigen::MatrixXcd(sp.Sz) +
                       Eigen::MatrixXcd(sp.F);
  if (l1 != 0.0) k += l1 * Eigen::MatrixXcd(sp.A1);
  if (l2 != 0.0) k += l2 * Eigen::MatrixXcd(sp.A2);
  k -= phi * Eigen::MatrixXcd(vplus);
  k -= std::conj(phi) * Eigen::MatrixXcd(vminus);
  k -= (xi * kI) * Eigen::MatrixXcd(vplus);        // W+ = i V+
  k -= (std::conj(xi) * kI) * Eigen::MatrixXcd(vminus);
  InsideIdentityCheck chk;
  chk.lhs = trace_exp(k, p.beta) / free_partition_product(p);

  cplx phi_prime =
      p.gamma - std::sqrt(p.abs_u()) * phi /
                    (std::sqrt(p.beta) *
                     std::sqrt(static_cast<double>(p.n_sites())));
  BandOperators bops = build_band_operators(p, phi_prime);
  Eigen::MatrixXcd kb = Eigen::MatrixXcd(bops.H0phi) +
                        Eigen::MatrixXcd(bops.Vb);
  if (l1 != 0.0) kb += l1 * Eigen::MatrixXcd(bops.A1);
  if (l2 != 0.0) kb -= l2 * Eigen::MatrixXcd(bops.A2);
  kb -= xi * Eigen::MatrixXcd(bops.Wplus);
  kb -= std::conj(xi) * Eigen::MatrixXcd(bops.Wminus);
  chk.rhs = b_ratio(p, phi_prime) * trace_exp(kb, p.beta) /
            band_partition_product(p, phi_prime);
  chk.abs_err = std::abs(chk.lhs - chk.rhs);
  return chk;
}

}  // namespace bcsif
