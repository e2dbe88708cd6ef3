#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bcsif/numerics.hpp"

namespace bcsif {

// Physical and lattice parameters of the reduced BCS system with the
// non-Hermitian i*theta*Sz term. Theta = |theta/2 - pi/beta| is derived and
// controls all small-parameter behavior.
struct ModelParams {
  int d = 1;            // spatial dimension
  int L = 8;            // linear lattice size
  int hop = 0;          // hopping sign selector, e(k) = (-1)^hop 2 sum cos - mu
  double mu = 0.0;      // chemical potential
  double beta = 1.0;    // inverse temperature
  double theta = 0.0;   // imaginary-field magnitude, in [0, 2 pi / beta)
  double U = -1.0;      // coupling, strictly negative
  double gamma = 0.0;   // U(1)-breaking external field, in [0, 1]
  std::optional<std::vector<int>> xhat;  // pairing-operator site
  std::optional<std::vector<int>> yhat;  // second pairing-operator site

  double Theta() const { return std::abs(theta / 2.0 - kPi / beta); }
  double abs_u() const { return std::abs(U); }
  long n_sites() const {
    long n = 1;
    for (int j = 0; j < d; ++j) n *= L;
    return n;
  }

  // Throws validation_error on hard violations; returns human-readable
  // warnings for soft ones (|mu| >= 2d keeps the formulas evaluable).
  std::vector<std::string> validate() const;

  std::vector<int> site_mod(const std::vector<int>& x) const;  // r_L
};

// The momentum lattice {2 pi m / L : m = 0..L-1}^d, immutable after
// construction and closed under k -> (2 pi - k) mod 2 pi.
class MomentumGrid {
 public:
  MomentumGrid(int d, int L);

  long size() const { return static_cast<long>(points_.size()); }
  const std::vector<double>& point(long i) const { return points_[i]; }
  const std::vector<std::vector<int>>& indices() const { return index_; }
  int L() const { return L_; }

 private:
  int L_;
  std::vector<std::vector<double>> points_;
  std::vector<std::vector<int>> index_;  // integer m-tuples
};

}  // namespace bcsif
