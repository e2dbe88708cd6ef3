#pragma once

#include <Eigen/Dense>

#include "bcsif/params.hpp"

namespace bcsif {

// Field index (band, site, time). Sites are arbitrary integers and get
// periodized; times live in [0, beta) (grid-valued for the Matsubara and
// scale routes).
struct FieldIndex {
  int band = 1;  // 1 or 2
  std::vector<int> site;
  double time = 0.0;
};

// Diagonalization data of the 2x2 dispersion matrix
//   E(phi)(k) = [[ e(k), conj(phi)], [phi, -e(k)]]
// at one momentum: U* E U = diag(e_full, -e_full).
struct BandBlock {
  std::vector<double> k;
  double e = 0.0;       // e(k)
  double e_full = 0.0;  // e(phi)(k)
  Eigen::Matrix2cd E_matrix;
  Eigen::Matrix2cd U_matrix;
};

BandBlock make_band_block(const ModelParams& p, cplx phi,
                          const std::vector<double>& k);

// The 2-band free covariance C(phi) with a per-momentum diagonalization
// cache. Immutable after construction; all evaluation paths are const and
// thread-safe.
class CovarianceEvaluator {
 public:
  CovarianceEvaluator(const ModelParams& p, cplx phi);

  const ModelParams& params() const { return p_; }
  cplx phi() const { return phi_; }
  const std::vector<BandBlock>& blocks() const { return blocks_; }

  // Closed form (momentum sum over the diagonalized bands); times in
  // [0, beta), sites periodized.
  cplx covariance(const FieldIndex& X, const FieldIndex& Y) const;

  // Matsubara-sum route; exact equality with covariance() on the time grid
  // [0, beta)_h. h must lie in (2/beta)N and times on the grid.
  cplx matsubara(double h, const FieldIndex& X, const FieldIndex& Y) const;

  // Equal-time closed forms, all four band entries at once.
  Eigen::Matrix2cd equal_time(const std::vector<int>& x,
                              const std::vector<int>& y) const;

 private:
  ModelParams p_;
  cplx phi_;
  MomentumGrid grid_;
  std::vector<BandBlock> blocks_;
  long phase_index(const std::vector<int>& dx, long ki) const;
};

// (1/N^d) sum over the uniform N^d momentum lattice of
// sinh(beta E)/(E (cos(beta theta/2) + cosh(beta E))), E at |phi| = r.
// This is the momentum sum whose value at a solved gap equals 2/|U| and
// which multiplies -conj(phi)/2 in the equal-time off-diagonal entry.
double pair_integral(const ModelParams& p, double r, long n_per_axis);

// Matsubara frequencies {omega in (pi/beta)(2Z+1) : |omega| < pi h}.
std::vector<double> matsubara_frequencies(double beta, double h);

// Smooth cutoff chi: 1 on (-inf,1], 0 on [2,inf), C^inf monotone plateau in
// between.
double cutoff_chi(double x);

// Scale decomposition of the gauge-twisted covariance: evaluators C_l,
// l = 0..N_h-N_beta+1, with sum_l C_l = e^{-i pi (s-t)/beta} C(phi) on the
// grid, built from the cutoff family chi_l.
class ScaleDecomposition {
 public:
  // Requires M >= 2pi and h >= max(max(1,1/beta) M^2 / 2, 4d).
  ScaleDecomposition(const ModelParams& p, cplx phi, double h, double M);

  int n_beta() const { return n_beta_; }
  int n_h() const { return n_h_; }
  int top_scale() const { return n_h_ - n_beta_ + 1; }  // largest l
  double h() const { return h_; }

  // chi_l at physical scale index l in [N_beta, N_h].
  double chi(int l_phys, double omega) const;
  // sum over the whole family; identically 1.
  double chi_sum(double omega) const;

  // Scale covariance C_l, l in [0, top_scale()], grid times.
  cplx C_l(int l, const FieldIndex& X, const FieldIndex& Y) const;

  // Sum of all scales (should equal the gauge-twisted full covariance).
  cplx C_sum(const FieldIndex& X, const FieldIndex& Y) const;

  // ||C~_l||_{1,infty} on the finite grid: sup over one fixed index of the
  // h-normalized absolute sum of the antisymmetric extension.
  double decay_norm(int l) const;

 private:
  ModelParams p_;
  cplx phi_;
  double h_, M_;
  int n_beta_, n_h_;
  MomentumGrid grid_;
  std::vector<BandBlock> blocks_;
  std::vector<double> freqs_;

  double chi_M(double x) const;
  Eigen::Matrix2cd resolvent(long ki, double omega) const;
  cplx eval(int l, const std::vector<int>& dx, long steps) const;
};

// Fuzz results for the determinant bounds.
struct FuzzReport {
  long violations = 0;
  double max_ratio = 0.0;  // max |det| / bound over trials
};

// Pedra-Salmhofer bound on the full covariance:
//   |det(<u_i, v_j> C(phi)(X_i, Y_j))| <= B^n,
//   B = (16/L^d) sum_k (1 + 2 cos(beta theta/2) e^{-beta E} +
//                       e^{-2 beta E})^{-1/2}.
// Samples unit vectors u, v in C^m and uniform (X, Y) with continuous
// times.
FuzzReport determinant_bound_fuzz(const ModelParams& p, cplx phi, int n,
                                  int m, int trials, std::uint64_t seed);

// Gram bound for the single-frequency covariance C_0:
//   |det(<u_i, v_j> C_0(X_i, Y_j))| <= prod_j ||f_{X_j}|| ||g_{Y_j}||,
// with the explicit Gram vectors of the omega = pi/beta representation.
FuzzReport gram_bound_fuzz(const ModelParams& p, cplx phi, double h, double M,
                           int n, int m, int trials, std::uint64_t seed);

}  // namespace bcsif
