#include "bcsif/grassmann.hpp"

#include <algorithm>

#include "bcsif/covariance.hpp"
#include "bcsif/model.hpp"

namespace bcsif {

namespace {

constexpr cplx kI{0.0, 1.0};

int popcount(std::uint64_t m) { return __builtin_popcountll(m); }

// Sign of psi_{m1} ^ psi_{m2} when both are canonically sorted: each
// generator of m2 crosses the generators of m1 above it.
int merge_sign(std::uint64_t m1, std::uint64_t m2) {
  int crossings = 0;
  std::uint64_t rest = m2;
  while (rest) {
    int b = __builtin_ctzll(rest);
    rest &= rest - 1;
    crossings += popcount(m1 >> (b + 1));
  }
  return crossings % 2 ? -1 : 1;
}

}  // namespace

GrassmannElement GrassmannElement::constant(int n_fields, cplx c) {
  GrassmannElement e(n_fields);
  e.add_term(0, c);
  return e;
}

GrassmannElement GrassmannElement::generator(int n_fields, int field,
                                             bool bar) {
  GrassmannElement e(n_fields);
  e.add_term(std::uint64_t(1) << (2 * field + (bar ? 0 : 1)), 1.0);
  return e;
}

GrassmannElement GrassmannElement::monomial(
    int n_fields, const std::vector<std::pair<int, bool>>& w, cplx c) {
  GrassmannElement e = constant(n_fields, c);
  for (const auto& [field, bar] : w) {
    e = e.wedge(generator(n_fields, field, bar));
    if (e.terms_.empty()) return e;  // repeated generator
  }
  return e;
}

cplx GrassmannElement::coeff(std::uint64_t mask) const {
  auto it = terms_.find(mask);
  return it == terms_.end() ? cplx(0.0) : it->second;
}

bool GrassmannElement::is_even() const {
  for (const auto& [m, c] : terms_)
    if (popcount(m) % 2 != 0 && c != 0.0) return false;
  return true;
}

int GrassmannElement::max_degree() const {
  int deg = 0;
  for (const auto& [m, c] : terms_)
    if (c != 0.0) deg = std::max(deg, popcount(m));
  return deg;
}

double GrassmannElement::max_abs_coeff() const {
  double v = 0.0;
  for (const auto& [m, c] : terms_) v = std::max(v, std::abs(c));
  return v;
}

void GrassmannElement::add_term(std::uint64_t mask, cplx c) {
  if (c == 0.0) return;
  auto [it, fresh] = terms_.emplace(mask, c);
  if (!fresh) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

GrassmannElement& GrassmannElement::operator+=(const GrassmannElement& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

GrassmannElement& GrassmannElement::operator-=(const GrassmannElement& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

GrassmannElement& GrassmannElement::operator*=(cplx c) {
  if (c == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, v] : terms_) v *= c;
  return *this;
}

GrassmannElement GrassmannElement::wedge(const GrassmannElement& o) const {
  GrassmannElement out(n_fields_);
  for (const auto& [m1, c1] : terms_) {
    for (const auto& [m2, c2] : o.terms_) {
      if (m1 & m2) continue;
      double s = merge_sign(m1, m2);
      out.add_term(m1 | m2, s * c1 * c2);
    }
  }
  return out;
}

GrassmannElement GrassmannElement::exp() const {
  cplx c0 = constant_part();
  GrassmannElement nil = *this;
  nil.add_term(0, -c0);
  GrassmannElement acc = constant(n_fields_, 1.0);
  GrassmannElement pow = constant(n_fields_, 1.0);
  int cap = n_generators();
  double fact = 1.0;
  for (int k = 1; k <= cap; ++k) {
    pow = pow.wedge(nil);
    if (pow.terms().empty()) break;
    fact *= k;
    GrassmannElement term = pow;
    term *= 1.0 / fact;
    acc += term;
  }
  acc *= std::exp(c0);
  return acc;
}

GrassmannElement GrassmannElement::log() const {
  cplx c0 = constant_part();
  if (c0.real() <= 0.0 && c0.imag() == 0.0)
    throw validation_error("grassmann log: constant part on (-inf, 0]");
  GrassmannElement u = *this;
  u.add_term(0, -c0);
  u *= 1.0 / c0;  // nilpotent part of f/f0
  GrassmannElement acc = constant(n_fields_, std::log(c0));
  GrassmannElement pow = constant(n_fields_, 1.0);
  int cap = n_generators();
  for (int k = 1; k <= cap; ++k) {
    pow = pow.wedge(u);
    if (pow.terms().empty()) break;
    GrassmannElement term = pow;
    term *= (k % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(k);
    acc += term;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Gaussian integration
// ---------------------------------------------------------------------------

namespace {

struct MonomialSplit {
  std::vector<int> bars;     // field ids, order of appearance
  std::vector<int> nonbars;  // field ids, order of appearance
  int sign = 1;              // parity of sorting to (bars..., reversed nonbars)
};

// Walks the canonical monomial and computes the permutation parity needed to
// reach psi-bar_{X_1}..psi-bar_{X_a} psi_{Y_b}..psi_{Y_1} with X, Y in
// appearance order.
MonomialSplit split_monomial(std::uint64_t mask) {
  MonomialSplit sp;
  std::vector<int> kind;  // 0 = bar, 1 = nonbar, in canonical order
  std::uint64_t rest = mask;
  while (rest) {
    int b = __builtin_ctzll(rest);
    rest &= rest - 1;
    int field = b / 2;
    bool bar = (b % 2 == 0);
    kind.push_back(bar ? 0 : 1);
    (bar ? sp.bars : sp.nonbars).push_back(field);
  }
  int n = static_cast<int>(kind.size());
  int a = static_cast<int>(sp.bars.size());
  int b = static_cast<int>(sp.nonbars.size());
  // Target position of each factor: bars keep appearance order in [0, a);
  // non-bars are reversed into [a, n).
  std::vector<int> target(n);
  int bar_seen = 0, nonbar_seen = 0;
  for (int i = 0; i < n; ++i) {
    if (kind[i] == 0)
      target[i] = bar_seen++;
    else
      target[i] = a + (b - 1 - nonbar_seen++);
  }
  // Parity of the permutation i -> target[i] by counting inversions.
  int inv = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (target[i] > target[j]) ++inv;
  sp.sign = inv % 2 ? -1 : 1;
  return sp;
}

cplx det_value(const MonomialSplit& sp, const CovarianceTable& d) {
  if (sp.bars.size() != sp.nonbars.size()) return 0.0;
  long a = static_cast<long>(sp.bars.size());
  if (a == 0) return 1.0;
  Eigen::MatrixXcd m(a, a);
  for (long i = 0; i < a; ++i)
    for (long j = 0; j < a; ++j)
      m(i, j) = d(sp.bars[i], sp.nonbars[j]);
  return static_cast<double>(sp.sign) * m.determinant();
}

}  // namespace

cplx gaussian_monomial(std::uint64_t mask, const CovarianceTable& d) {
  return det_value(split_monomial(mask), d);
}

cplx gaussian_monomial_wick(std::uint64_t mask, const CovarianceTable& d) {
  std::vector<int> gens;
  std::uint64_t rest = mask;
  while (rest) {
    int b = __builtin_ctzll(rest);
    rest &= rest - 1;
    gens.push_back(b);
  }
  long n = static_cast<long>(gens.size());
  if (n % 2 != 0) return 0.0;
  if (n == 0) return 1.0;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) {
      int fi = gens[i] / 2, fj = gens[j] / 2;
      bool bari = gens[i] % 2 == 0, barj = gens[j] % 2 == 0;
      cplx v = 0.0;
      if (bari && !barj) v = d(fi, fj);
      if (!bari && barj) v = -d(fj, fi);
      m(i, j) = v;
      m(j, i) = -v;
    }
  }
  return pfaffian(m);
}

cplx gaussian_integral(const GrassmannElement& f, const CovarianceTable& d) {
  cplx acc = 0.0;
  for (const auto& [m, c] : f.terms()) acc += c * gaussian_monomial(m, d);
  return acc;
}

cplx gaussian_integral_wick(const GrassmannElement& f,
                            const CovarianceTable& d) {
  cplx acc = 0.0;
  for (const auto& [m, c] : f.terms()) acc += c * gaussian_monomial_wick(m, d);
  return acc;
}

GrassmannElement gaussian_integral_partial(const GrassmannElement& f,
                                           int first_int,
                                           const CovarianceTable& d) {
  GrassmannElement out(first_int);
  std::uint64_t keep_mask = (std::uint64_t(1) << (2 * first_int)) - 1;
  for (const auto& [m, c] : f.terms()) {
    std::uint64_t mk = m & keep_mask;
    std::uint64_t mi = m >> (2 * first_int);
    // Keep-part generators all precede the integrated ones in canonical
    // order, so the split carries no extra sign.
    out.add_term(mk, c * gaussian_monomial(mi, d));
  }
  return out;
}

GrassmannElement shift_doubled(const GrassmannElement& f) {
  int nf = f.n_fields();
  GrassmannElement out(2 * nf);
  for (const auto& [m, c] : f.terms()) {
    // Expand prod (psi_b + psi^1_b) over the bits of m, preserving factor
    // order.
    std::vector<int> bits;
    std::uint64_t rest = m;
    while (rest) {
      int b = __builtin_ctzll(rest);
      rest &= rest - 1;
      bits.push_back(b);
    }
    GrassmannElement acc = GrassmannElement::constant(2 * nf, c);
    for (int b : bits) {
      int field = b / 2;
      bool bar = (b % 2 == 0);
      GrassmannElement g =
          GrassmannElement::generator(2 * nf, field, bar);
      g += GrassmannElement::generator(2 * nf, field + nf, bar);
      acc = acc.wedge(g);
    }
    out += acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Universes, actions, covariances
// ---------------------------------------------------------------------------

GrassmannUniverse make_universe(const ModelParams& p, double h) {
  double bh = p.beta * h;
  long nt = std::lround(bh);
  if (std::abs(bh - nt) > 1e-9 || std::lround(bh) % 2 != 0)
    throw validation_error("grassmann universe: h must lie in (2/beta) N");
  GrassmannUniverse u;
  u.n_sites = static_cast<int>(p.n_sites());
  u.nt = static_cast<int>(nt);
  if (4 * u.n_sites * u.nt > 24)
    throw validation_error("grassmann universe: generator cap 24 exceeded");
  return u;
}

namespace {

std::vector<std::vector<int>> sites_of(const ModelParams& p) {
  std::vector<std::vector<int>> sites;
  std::vector<int> x(p.d, 0);
  for (long i = 0; i < p.n_sites(); ++i) {
    sites.push_back(x);
    for (int j = p.d - 1; j >= 0; --j) {
      if (++x[j] < p.L) break;
      x[j] = 0;
    }
  }
  return sites;
}

long site_no(const ModelParams& p, const std::vector<int>& x) {
  std::vector<int> r = p.site_mod(x);
  long idx = 0;
  for (int j = 0; j < p.d; ++j) idx = idx * p.L + r[j];
  return idx;
}

std::vector<int> xhat_of(const ModelParams& p) {
  return p.xhat ? *p.xhat : std::vector<int>(p.d, 0);
}

std::vector<int> yhat_of(const ModelParams& p) {
  if (p.yhat) return *p.yhat;
  std::vector<int> y(p.d, 0);
  y[0] = 1;
  return y;
}

}  // namespace

SpinActions build_spin_actions(const ModelParams& p, double h) {
  GrassmannUniverse u = make_universe(p, h);
  int nf = u.n_fields();
  auto sites = sites_of(p);
  double ld = static_cast<double>(p.n_sites());
  auto fidx = [&](const std::vector<int>& x, int sg, int s) {
    return u.field(static_cast<int>(site_no(p, x)), sg, s);
  };
  SpinActions A{GrassmannElement(nf), GrassmannElement(nf),
                GrassmannElement(nf), GrassmannElement(nf),
                GrassmannElement(nf), GrassmannElement(nf),
                GrassmannElement(nf), GrassmannElement(nf),
                GrassmannElement(nf)};
  auto xh = xhat_of(p);
  auto yh = yhat_of(p);
  for (int s = 0; s < u.nt; ++s) {
    for (const auto& x : sites) {
      for (const auto& y : sites) {
        A.V += GrassmannElement::monomial(
            nf,
            {{fidx(x, 0, s), true},
             {fidx(x, 1, s), true},
             {fidx(y, 1, s), false},
             {fidx(y, 0, s), false}},
            p.U / (h * ld));
      }
      A.F += GrassmannElement::monomial(
          nf, {{fidx(x, 0, s), true}, {fidx(x, 1, s), true}}, p.gamma / h);
      A.F += GrassmannElement::monomial(
          nf, {{fidx(x, 1, s), false}, {fidx(x, 0, s), false}}, p.gamma / h);
      double chs = std::sqrt(p.abs_u() / (p.beta * ld)) / h;
      A.Vplus += GrassmannElement::monomial(
          nf, {{fidx(x, 0, s), true}, {fidx(x, 1, s), true}}, chs);
      A.Vminus += GrassmannElement::monomial(
          nf, {{fidx(x, 1, s), false}, {fidx(x, 0, s), false}}, chs);
      A.Wplus += GrassmannElement::monomial(
          nf, {{fidx(x, 0, s), true}, {fidx(x, 1, s), true}}, kI * chs);
      A.Wminus += GrassmannElement::monomial(
          nf, {{fidx(x, 1, s), false}, {fidx(x, 0, s), false}}, kI * chs);
    }
    A.A1 += GrassmannElement::monomial(
        nf, {{fidx(xh, 0, s), true}, {fidx(xh, 1, s), true}}, 1.0 / h);
    A.A2 += GrassmannElement::monomial(
        nf,
        {{fidx(xh, 0, s), true},
         {fidx(xh, 1, s), true},
         {fidx(yh, 1, s), false},
         {fidx(yh, 0, s), false}},
        1.0 / h);
    for (int t = 0; t < u.nt; ++t) {
      for (const auto& x : sites) {
        for (const auto& y : sites) {
          A.W += GrassmannElement::monomial(
              nf,
              {{fidx(x, 0, s), true},
               {fidx(x, 1, s), true},
               {fidx(y, 1, t), false},
               {fidx(y, 0, t), false}},
              p.U / (p.beta * ld * h * h));
        }
      }
    }
  }
  return A;
}

BandActions build_band_actions(const ModelParams& p, double h) {
  GrassmannUniverse u = make_universe(p, h);
  int nf = u.n_fields();
  auto sites = sites_of(p);
  double ld = static_cast<double>(p.n_sites());
  auto fidx = [&](const std::vector<int>& x, int rho, int s) {
    return u.field(static_cast<int>(site_no(p, x)), rho - 1, s);
  };
  BandActions A{GrassmannElement(nf), GrassmannElement(nf),
                GrassmannElement(nf), GrassmannElement(nf)};
  auto xh = xhat_of(p);
  auto yh = yhat_of(p);
  for (int s = 0; s < u.nt; ++s) {
    for (const auto& x : sites) {
      A.V += GrassmannElement::monomial(
          nf, {{fidx(x, 1, s), true}, {fidx(x, 1, s), false}},
          p.U / (ld * h));
      for (const auto& y : sites) {
        A.V += GrassmannElement::monomial(
            nf,
            {{fidx(x, 1, s), true},
             {fidx(x, 2, s), false},
             {fidx(y, 2, s), true},
             {fidx(y, 1, s), false}},
            p.U / (ld * h));
      }
    }
    A.A1 += GrassmannElement::monomial(
        nf, {{fidx(xh, 1, s), true}, {fidx(xh, 2, s), false}}, 1.0 / h);
    A.A2 += GrassmannElement::monomial(
        nf,
        {{fidx(xh, 1, s), true},
         {fidx(xh, 2, s), false},
         {fidx(yh, 2, s), true},
         {fidx(yh, 1, s), false}},
        1.0 / h);
    for (int t = 0; t < u.nt; ++t)
      for (const auto& x : sites)
        for (const auto& y : sites)
          A.W += GrassmannElement::monomial(
              nf,
              {{fidx(x, 1, s), true},
               {fidx(x, 2, s), false},
               {fidx(y, 2, t), true},
               {fidx(y, 1, t), false}},
              p.U / (p.beta * ld * h * h));
  }
  return A;
}

cplx covariance_G(const ModelParams& p, const std::vector<int>& x, int sigma,
                  double s, const std::vector<int>& y, int tau, double t) {
  if (sigma != tau) return 0.0;
  MomentumGrid grid(p.d, p.L);
  double sign = sigma == 0 ? 1.0 : -1.0;
  std::vector<int> dx(p.d);
  for (int j = 0; j < p.d; ++j) dx[j] = x[j] - y[j];
  cplx acc = 0.0;
  for (long i = 0; i < grid.size(); ++i) {
    long ip = 0;
    for (int j = 0; j < p.d; ++j) {
      long term = (static_cast<long>(grid.indices()[i][j]) *
                   ((dx[j] % p.L + p.L) % p.L)) % p.L;
      ip = (ip + term) % p.L;
    }
    cplx phase = std::exp(kI * (2.0 * kPi * ip / p.L));
    cplx lam = kI * (sign * p.theta / 2.0) + dispersion(p, grid.point(i));
    cplx occ = (s >= t) ? fermi_plus(lam, s - t, p.beta)
                        : -fermi_minus(lam, s - t, p.beta);
    acc += phase * occ;
  }
  return acc / static_cast<double>(grid.size());
}

CovarianceTable spin_covariance_table(const ModelParams& p, double h) {
  GrassmannUniverse u = make_universe(p, h);
  auto sites = sites_of(p);
  int nf = u.n_fields();
  CovarianceTable d(nf, nf);
  for (int si = 0; si < u.n_sites; ++si)
    for (int sg = 0; sg < 2; ++sg)
      for (int ts = 0; ts < u.nt; ++ts)
        for (int sj = 0; sj < u.n_sites; ++sj)
          for (int tg = 0; tg < 2; ++tg)
            for (int tt = 0; tt < u.nt; ++tt)
              d(u.field(si, sg, ts), u.field(sj, tg, tt)) =
                  covariance_G(p, sites[si], sg, ts / h, sites[sj], tg,
                               tt / h);
  return d;
}

CovarianceTable band_covariance_table(const ModelParams& p, cplx phi,
                                      double h) {
  GrassmannUniverse u = make_universe(p, h);
  auto sites = sites_of(p);
  int nf = u.n_fields();
  CovarianceEvaluator cov(p, phi);
  CovarianceTable d(nf, nf);
  for (int si = 0; si < u.n_sites; ++si)
    for (int rho = 0; rho < 2; ++rho)
      for (int ts = 0; ts < u.nt; ++ts)
        for (int sj = 0; sj < u.n_sites; ++sj)
          for (int eta = 0; eta < 2; ++eta)
            for (int tt = 0; tt < u.nt; ++tt)
              d(u.field(si, rho, ts), u.field(sj, eta, tt)) = cov.covariance(
                  FieldIndex{rho + 1, sites[si], ts / h},
                  FieldIndex{eta + 1, sites[sj], tt / h});
  return d;
}

// ---------------------------------------------------------------------------
// Formulation identities
// ---------------------------------------------------------------------------

namespace {

// One vertex of the discrete perturbation series.
struct Vertex {
  int xi, yi;  // site numbers
  int step;    // time index
  int a;       // 0, +1, -1
};

cplx vertex_weight(const ModelParams& p, const std::vector<int>& xh,
                   const std::vector<int>& yh, const Vertex& v, cplx l1,
                   cplx l2) {
  double ld = static_cast<double>(p.n_sites());
  long xh_no = site_no(p, xh), yh_no = site_no(p, yh);
  if (v.a == 0) {
    cplx w = p.U / ld;
    if (v.xi == xh_no && v.yi == yh_no) w += l2;
    return w;
  }
  if (v.a == 1) {
    cplx w = p.gamma / ld;
    if (v.xi == xh_no) w += l1 / ld;
    return w;
  }
  return cplx(p.gamma / ld, 0.0);
}

// Determinant of G over the (X, Y) row/column construction: a = 0 and
// a = +1 vertices supply rows (x, up), (x, down); a = 0 and a = -1 supply
// columns (y, up), (y, down); within each class vertices keep their order
// and a = 0 precedes a = +-1.
cplx config_determinant(const CovarianceTable& g,
                        const GrassmannUniverse& u,
                        const std::vector<Vertex>& vs) {
  std::vector<int> rows, cols;
  for (const Vertex& v : vs)
    if (v.a == 0) {
      rows.push_back(u.field(v.xi, 0, v.step));
      rows.push_back(u.field(v.xi, 1, v.step));
      cols.push_back(u.field(v.yi, 0, v.step));
      cols.push_back(u.field(v.yi, 1, v.step));
    }
  for (const Vertex& v : vs)
    if (v.a == 1) {
      rows.push_back(u.field(v.xi, 0, v.step));
      rows.push_back(u.field(v.xi, 1, v.step));
    }
  for (const Vertex& v : vs)
    if (v.a == -1) {
      cols.push_back(u.field(v.yi, 0, v.step));
      cols.push_back(u.field(v.yi, 1, v.step));
    }
  long n = static_cast<long>(rows.size());
  if (n != static_cast<long>(cols.size())) return 0.0;
  if (n == 0) return 1.0;
  Eigen::MatrixXcd m(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) m(i, j) = g(rows[i], cols[j]);
  return m.determinant();
}

}  // namespace

PartitionViaGrassmann partition_via_grassmann(const ModelParams& p, double h,
                                              cplx l1, cplx l2) {
  GrassmannUniverse u = make_universe(p, h);
  SpinActions acts = build_spin_actions(p, h);
  CovarianceTable g = spin_covariance_table(p, h);
  PartitionViaGrassmann out;

  GrassmannElement expo(u.n_fields());
  expo -= acts.V;
  expo -= acts.F;
  expo -= l1 * acts.A1;
  expo -= l2 * acts.A2;
  out.grassmann = gaussian_integral(expo.exp(), g);

  auto sites = sites_of(p);
  auto xh = xhat_of(p);
  auto yh = yhat_of(p);
  long ns = p.n_sites();
  long options = ns * ns * u.nt * 3;

  // Constrained series: strictly decreasing times, so n <= nt.
  // Enumerate ordered tuples recursively.
  cplx constrained = 1.0;
  std::vector<Vertex> stack;
  std::function<void(int, int)> rec = [&](int n_left, int min_next_step) {
    if (!stack.empty()) {
      int balance = 0;
      for (const Vertex& v : stack) balance += v.a;
      if (balance == 0) {
        cplx w = (stack.size() % 2 == 1) ? -1.0 : 1.0;
        for (const Vertex& v : stack)
          w *= vertex_weight(p, xh, yh, v, l1, l2) / h;
        constrained += w * config_determinant(g, u, stack);
      }
    }
    if (n_left == 0) return;
    // Times strictly decreasing along j; enumerate the next (smaller) step.
    for (int step = min_next_step - 1; step >= 0; --step)
      for (int xi = 0; xi < ns; ++xi)
        for (int yi = 0; yi < ns; ++yi)
          for (int a : {0, 1, -1}) {
            stack.push_back({xi, yi, step, a});
            rec(n_left - 1, step);
            stack.pop_back();
          }
  };
  rec(u.nt, u.nt);
  out.p_h_constrained = constrained;

  // Unconstrained series (times free, weight 1/n!), determinant form per
  // ordered tuple; exponential cost, so only attempted at small sizes.
  int nmax = 2 * static_cast<int>(ns) * u.nt;
  double work = std::pow(static_cast<double>(options), nmax);
  if (work < 1e7) {
    cplx unconstrained = 1.0;
    std::vector<Vertex> tup;
    std::function<void(int, double)> recu = [&](int n_left, double fact) {
      if (!tup.empty()) {
        int balance = 0;
        for (const Vertex& v : tup) balance += v.a;
        if (balance == 0) {
          cplx w = (tup.size() % 2 == 1) ? -1.0 : 1.0;
          w /= fact;
          for (const Vertex& v : tup)
            w *= vertex_weight(p, xh, yh, v, l1, l2) / h;
          unconstrained += w * config_determinant(g, u, tup);
        }
      }
      if (n_left == 0) return;
      for (int step = 0; step < u.nt; ++step)
        for (int xi = 0; xi < ns; ++xi)
          for (int yi = 0; yi < ns; ++yi)
            for (int a : {0, 1, -1}) {
              tup.push_back({xi, yi, step, a});
              recu(n_left - 1, fact * static_cast<double>(tup.size()));
              tup.pop_back();
            }
    };
    recu(nmax, 1.0);
    out.p_h_unconstrained = unconstrained;
    out.unconstrained_done = true;
  }
  return out;
}

double hs_identity_check(const ModelParams& p, double h, int nodes, cplx l1,
                         cplx l2) {
  GrassmannUniverse u = make_universe(p, h);
  SpinActions acts = build_spin_actions(p, h);
  GrassmannElement base(u.n_fields());
  base -= acts.V;
  base -= acts.F;
  base -= l1 * acts.A1;
  base -= l2 * acts.A2;
  GrassmannElement lhs = base.exp();

  GaussHermite gh = gauss_hermite(nodes);
  GrassmannElement rhs(u.n_fields());
  for (std::size_t i = 0; i < gh.x.size(); ++i) {
    for (std::size_t j = 0; j < gh.x.size(); ++j) {
      cplx phi(gh.x[i], gh.x[j]);
      GrassmannElement expo = base;
      expo += acts.W;
      expo += phi * acts.Vplus;
      expo += std::conj(phi) * acts.Vminus;
      GrassmannElement term = expo.exp();
      term *= gh.w[i] * gh.w[j] / kPi;
      rhs += term;
    }
  }
  GrassmannElement diff = lhs - rhs;
  return diff.max_abs_coeff();
}

LogMomentResult log_moment_check(const GrassmannElement& f,
                                 const CovarianceTable& c, int n) {
  if (n < 1 || n > 3) throw validation_error("log_moment_check: n in [1,3]");
  if (!f.is_even())
    throw validation_error("log_moment_check: f must be even");
  int nf = f.n_fields();
  GrassmannElement fs = shift_doubled(f);
  // Moments g_k = (1/k!) int fs^k dmu (elements of the outer universe).
  std::vector<GrassmannElement> gk;
  gk.push_back(GrassmannElement::constant(nf, 1.0));
  GrassmannElement pow = GrassmannElement::constant(2 * nf, 1.0);
  double fact = 1.0;
  for (int k = 1; k <= n; ++k) {
    pow = pow.wedge(fs);
    fact *= k;
    GrassmannElement integrated = gaussian_integral_partial(pow, nf, c);
    integrated *= 1.0 / fact;
    gk.push_back(integrated);
  }
  // Route 1: series logarithm, L_m = g_m - sum_{k<m} (k/m) L_k g_{m-k}.
  std::vector<GrassmannElement> lk(n + 1, GrassmannElement(nf));
  for (int m = 1; m <= n; ++m) {
    GrassmannElement acc = gk[m];
    for (int k = 1; k < m; ++k) {
      GrassmannElement t = lk[k].wedge(gk[m - k]);
      t *= static_cast<double>(k) / m;
      acc -= t;
    }
    lk[m] = acc;
  }
  // Route 2: cumulants from raw moments m_k = k! g_k,
  // kappa_m = m_m - sum_{j<m} C(m-1, j-1) kappa_j m_{m-j}.
  auto binom = [](int a, int b) {
    double r = 1.0;
    for (int i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
    return r;
  };
  std::vector<GrassmannElement> mk(n + 1, GrassmannElement(nf));
  for (int k = 1; k <= n; ++k) {
    mk[k] = gk[k];
    double fct = 1.0;
    for (int i = 2; i <= k; ++i) fct *= i;
    mk[k] *= fct;
  }
  std::vector<GrassmannElement> kap(n + 1, GrassmannElement(nf));
  for (int m = 1; m <= n; ++m) {
    GrassmannElement acc = mk[m];
    for (int j = 1; j < m; ++j) {
      GrassmannElement t = kap[j].wedge(mk[m - j]);
      t *= binom(m - 1, j - 1);
      acc -= t;
    }
    kap[m] = acc;
  }
  LogMomentResult res;
  double dis = 0.0;
  for (int m = 1; m <= n; ++m) {
    // kappa_m / m! should equal L_m.
    double fct = 1.0;
    for (int i = 2; i <= m; ++i) fct *= i;
    GrassmannElement scaled = kap[m];
    scaled *= 1.0 / fct;
    GrassmannElement diff = scaled - lk[m];
    dis = std::max(dis, diff.max_abs_coeff());
    res.cumulants.push_back(lk[m]);
  }
  res.route_disagreement = dis;
  return res;
}

}  // namespace bcsif
