#include "bcsif/params.hpp"

namespace bcsif {

std::vector<std::string> ModelParams::validate() const {
  if (d < 1) throw validation_error("d must be a positive integer");
  if (L < 1) throw validation_error("L must be a positive integer");
  if (hop != 0 && hop != 1) throw validation_error("hop must be 0 or 1");
  if (!(beta > 0.0)) throw validation_error("beta must be positive");
  if (!(U < 0.0)) throw validation_error("U must be negative");
  if (theta < 0.0 || theta >= 2.0 * kPi / beta)
    throw validation_error("theta must lie in [0, 2 pi / beta)");
  if (gamma < 0.0 || gamma > 1.0)
    throw validation_error("gamma must lie in [0, 1]");
  if (xhat && static_cast<int>(xhat->size()) != d)
    throw validation_error("xhat must have d components");
  if (yhat && static_cast<int>(yhat->size()) != d)
    throw validation_error("yhat must have d components");
  if (xhat && yhat && site_mod(*xhat) == site_mod(*yhat))
    throw validation_error("xhat and yhat must differ mod L");

  std::vector<std::string> warnings;
  if (std::abs(mu) >= 2.0 * d)
    warnings.push_back("|mu| >= 2d: Fermi surface degenerates; "
                       "formulas still evaluate");
  return warnings;
}

std::vector<int> ModelParams::site_mod(const std::vector<int>& x) const {
  std::vector<int> r(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    int m = x[j] % L;
    r[j] = m < 0 ? m + L : m;
  }
  return r;
}

MomentumGrid::MomentumGrid(int d, int L) : L_(L) {
  if (d < 1 || L < 1) throw validation_error("MomentumGrid: d, L >= 1");
  long n = 1;
  for (int j = 0; j < d; ++j) n *= L;
  points_.reserve(n);
  index_.reserve(n);
  std::vector<int> m(d, 0);
  for (long i = 0; i < n; ++i) {
    std::vector<double> k(d);
    for (int j = 0; j < d; ++j) k[j] = 2.0 * kPi * m[j] / L;
    points_.push_back(std::move(k));
    index_.push_back(m);
    for (int j = d - 1; j >= 0; --j) {
      if (++m[j] < L) break;
      m[j] = 0;
    }
  }
}

}  // namespace bcsif
