#include "bcsif/model.hpp"

#include <algorithm>

namespace bcsif {

double dispersion(const ModelParams& p, const std::vector<double>& k) {
  double s = 0.0;
  for (int j = 0; j < p.d; ++j) s += std::cos(k[j]);
  double sign = (p.hop == 0) ? 1.0 : -1.0;
  return sign * 2.0 * s - p.mu;
}

double g_function(const ModelParams& p, double x) {
  if (!(x > 0.0)) throw validation_error("g_function: x must be positive");
  if (p.d == 1) {
    double disc = 4.0 - p.mu * p.mu;
    if (!(disc > 0.0))
      throw validation_error("g_function: d = 1 requires mu^2 < 4");
    return std::log(1.0 / x + 1.0) / std::sqrt(disc);
  }
  double lg = std::log(1.0 / x + 1.0);
  double e = static_cast<double>(p.d) / (p.d + 1);
  return std::pow(lg, e) * std::pow(x, -1.0 / (p.d + 1));
}

namespace {

// Integral of 1/sqrt(K^2 + e(k)^2) over [0,2pi]^d by the periodic trapezoid
// (uniform lattice) rule with n points per axis.
double dispersion_integral(const ModelParams& p, double K, int n) {
  long total = 1;
  for (int j = 0; j < p.d; ++j) total *= n;
  std::vector<double> k(p.d);
  std::vector<int> m(p.d, 0);
  double acc = 0.0;
  for (long i = 0; i < total; ++i) {
    for (int j = 0; j < p.d; ++j) k[j] = 2.0 * kPi * m[j] / n;
    double e = dispersion(p, k);
    acc += 1.0 / std::sqrt(K * K + e * e);
    for (int j = p.d - 1; j >= 0; --j) {
      if (++m[j] < n) break;
      m[j] = 0;
    }
  }
  double vol = std::pow(2.0 * kPi, p.d);
  return vol * acc / static_cast<double>(total);
}

}  // namespace

CouplingWindow coupling_window(const ModelParams& p, double c1, double c2,
                               int quad_nodes) {
  double th = p.Theta();
  if (!(th > 0.0))
    throw validation_error("coupling_window: Theta must be positive");
  double w = 2.0 * p.d - std::abs(p.mu);
  double branch = (th <= 0.5 * w) ? 1.0 : th / w;
  CouplingWindow win;
  win.lower = c1 * std::pow(w, 1.0 - p.d) * p.beta * th * branch;
  double gd = g_function(p, th);
  double base = 1.0 + std::pow(p.beta, p.d + 3);
  double pre = 1.0 + 1.0 / p.beta;
  win.upper = c2 / ((base + pre * gd) * (base + pre * gd));
  int n = quad_nodes > 0
              ? quad_nodes
              : std::max<int>(64, static_cast<int>(std::ceil(8.0 / th)));
  double integ = dispersion_integral(p, th, n);
  win.upper_alt = c2 / ((base + pre * integ) * (base + pre * integ));
  win.nonempty = win.lower < win.upper;
  win.nonempty_alt = win.lower < win.upper_alt;
  return win;
}

double fermi_surface_lower_bound(const ModelParams& p) {
  double w = 2.0 * p.d - std::abs(p.mu);
  if (!(w > 0.0))
    throw validation_error("fermi_surface_lower_bound: requires |mu| < 2d");
  if (p.d == 1) return 1.0;
  return std::pow(w / (10.0 * (p.d - 1) * p.d), p.d - 1);
}

double level_set_measure(const ModelParams& p, double eta, int n) {
  if (p.d == 1) {
    // H^0: count solutions of e(k) = eta on [0, 2pi).
    double sign = (p.hop == 0) ? 1.0 : -1.0;
    double c = (eta + p.mu) / (2.0 * sign);
    if (std::abs(c) < 1.0) return 2.0;
    if (std::abs(c) == 1.0) return 1.0;
    return 0.0;
  }
  if (p.d != 2)
    throw validation_error("level_set_measure: only d <= 2 supported");
  // Marching squares on an n x n grid over [0, 2pi]^2.
  double hstep = 2.0 * kPi / n;
  auto f = [&](int i, int j) {
    std::vector<double> k{i * hstep, j * hstep};
    return dispersion(p, k) - eta;
  };
  std::vector<double> row0(n + 1), row1(n + 1);
  for (int j = 0; j <= n; ++j) row0[j] = f(0, j);
  double length = 0.0;
  auto interp = [](double a, double b) { return a / (a - b); };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= n; ++j) row1[j] = f(i + 1, j);
    for (int j = 0; j < n; ++j) {
      double v00 = row0[j], v01 = row0[j + 1];
      double v10 = row1[j], v11 = row1[j + 1];
      // Crossing points on the four edges, in cell units.
      std::vector<std::pair<double, double>> pts;
      if ((v00 < 0) != (v01 < 0)) pts.emplace_back(0.0, interp(v00, v01));
      if ((v10 < 0) != (v11 < 0)) pts.emplace_back(1.0, interp(v10, v11));
      if ((v00 < 0) != (v10 < 0)) pts.emplace_back(interp(v00, v10), 0.0);
      if ((v01 < 0) != (v11 < 0)) pts.emplace_back(interp(v01, v11), 1.0);
      if (pts.size() == 2) {
        double dx = pts[0].first - pts[1].first;
        double dy = pts[0].second - pts[1].second;
        length += hstep * std::sqrt(dx * dx + dy * dy);
      } else if (pts.size() == 4) {
        // Saddle cell; pair edges by proximity, both pairings have equal
        // total length to leading order, take the first.
        double dx = pts[0].first - pts[2].first;
        double dy = pts[0].second - pts[2].second;
        length += hstep * std::sqrt(dx * dx + dy * dy);
        dx = pts[1].first - pts[3].first;
        dy = pts[1].second - pts[3].second;
        length += hstep * std::sqrt(dx * dx + dy * dy);
      }
    }
    std::swap(row0, row1);
  }
  return length;
}

double momentum_sum(const ModelParams& p, double K) {
  MomentumGrid grid(p.d, p.L);
  double acc = 0.0;
  for (long i = 0; i < grid.size(); ++i) {
    double e = dispersion(p, grid.point(i));
    acc += 1.0 / std::sqrt(K * K + e * e);
  }
  return acc / static_cast<double>(grid.size());
}

double momentum_sum_ratio(const ModelParams& p, double K) {
  if (!(K > 0.0)) throw validation_error("momentum_sum_ratio: K > 0");
  return momentum_sum(p, K) / g_function(p, K);
}

}  // namespace bcsif
