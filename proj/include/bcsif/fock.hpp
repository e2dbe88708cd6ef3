#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bcsif/covariance.hpp"
#include "bcsif/params.hpp"

namespace bcsif {

using SpMatC = Eigen::SparseMatrix<cplx>;

// Occupation-number basis over an ordered mode list. The canonical order is
// site-major, spin/band-minor; every fermionic parity sign derives from this
// single order. Mode count capped at 16 (dim 65536); dense work capped at
// dim 4096.
class FockSpace {
 public:
  explicit FockSpace(int n_modes);

  int n_modes() const { return n_modes_; }
  long dim() const { return 1L << n_modes_; }

  // a_i^dagger, a_i as sparse matrices in the occupation basis.
  SpMatC creation(int mode) const;
  SpMatC annihilation(int mode) const;

  // sum over terms c * a_i^dagger a_j.
  SpMatC quadratic(const std::vector<std::tuple<int, int, cplx>>& t) const;
  // c * a_i^dagger a_j^dagger (i != j).
  SpMatC pair_create(int i, int j, cplx c) const;
  // c * a_i a_j.
  SpMatC pair_annihilate(int i, int j, cplx c) const;
  // c * a_i^dagger a_j^dagger a_k a_l.
  SpMatC quartic(int i, int j, int k, int l, cplx c) const;

 private:
  int n_modes_;
};

// Spin model operators on F_f(L^2(Gamma x {up,down})).
struct SpinOperators {
  int n_modes = 0;
  SpMatC H0, V, H, F, Sz, A1, A1dag, A2;
};

// Band model operators on F_f(L^2({1,2} x Gamma)); H0phi carries the phi
// dependence.
struct BandOperators {
  int n_modes = 0;
  SpMatC H0phi, Vb, Wplus, Wminus;
  SpMatC A1, A2;           // band-side artificial operators
  SpMatC Vplus, Vminus;    // only filled for the spin set (see below)
};

// Mode numbering: spin (x, sigma) -> 2*site + sigma (sigma: 0 = up,
// 1 = down); band (rho, x) -> 2*site + (rho - 1).
int spin_mode(const ModelParams& p, const std::vector<int>& x, int sigma);
int band_mode(const ModelParams& p, const std::vector<int>& x, int rho);

SpinOperators build_spin_operators(const ModelParams& p);
// The spin-side Hubbard-Stratonovich partners V+-, W+- = i V+-.
void build_spin_hs_operators(const ModelParams& p, SpMatC& vplus,
                             SpMatC& vminus);
BandOperators build_band_operators(const ModelParams& p, cplx phi);

// Tr e^{-beta K} for a dense complex matrix (scaling-and-squaring Pade).
cplx trace_exp(const Eigen::MatrixXcd& k, double beta);

// Tr(e^{-beta K} A).
cplx trace_exp_insert(const Eigen::MatrixXcd& k, const Eigen::MatrixXcd& a,
                      double beta);

// d/dlambda Tr e^{-beta(K + lambda A)} at lambda = 0, computed exactly from
// the exponential of the doubled block matrix [[-beta K, -beta A], [0,
// -beta K]].
cplx trace_exp_derivative(const Eigen::MatrixXcd& k, const Eigen::MatrixXcd& a,
                          double beta);

// Sz-blocked evaluation of Tr(e^{-beta(Hherm + i theta Sz)} A) for Hherm
// Hermitian commuting with Sz (A optional, must preserve the Sz sectors).
// Uses a per-sector Hermitian eigendecomposition; this is what makes L = 6
// spin lattices affordable.
class BlockedSpectral {
 public:
  BlockedSpectral(const SpMatC& h_herm, const std::vector<int>& sz_times_2);

  cplx partition(double beta, double theta) const;
  cplx expectation_numerator(double beta, double theta, const SpMatC& a) const;

 private:
  struct Sector {
    int sz2;  // 2 * Sz eigenvalue
    std::vector<long> states;
    Eigen::VectorXd evals;
    Eigen::MatrixXcd evecs;
  };
  std::vector<Sector> sectors_;
};

// 2*Sz quantum number per basis state of the spin model.
std::vector<int> spin_sz2_table(const ModelParams& p);

// Trace ratio Tr e^{-beta(H + i theta Sz + F + l1 A1 + l2 A2)} /
// Tr e^{-beta(H0 + i theta Sz)} computed exactly (dense for small dims).
// theta_override, when >= 0, replaces p.theta without revalidation (used by
// the periodicity check).
cplx spin_partition_ratio(const ModelParams& p, cplx l1, cplx l2,
                          double theta_override = -1.0);

// Exact thermal expectation Tr(e^{-beta K} A)/Tr e^{-beta K},
// K = H + i theta Sz + F.
enum class Observable { A1, A1dag, A2 };
cplx thermal_expectation(const ModelParams& p, Observable obs);

// Lemma checks -------------------------------------------------------------

struct PartitionCheck {
  cplx trace;
  cplx product;
  double abs_err;
};

// Free spin partition function against the momentum product formula.
PartitionCheck free_partition_check(const ModelParams& p);
// Band partition function at phi against its product formula.
PartitionCheck band_partition_check(const ModelParams& p, cplx phi);

// Product formula value of Tr e^{-beta H0(phi)}.
cplx band_partition_product(const ModelParams& p, cplx phi);
// Product formula value of Tr e^{-beta(H0 + i theta Sz)}.
cplx free_partition_product(const ModelParams& p, double theta_override = -1.0);
// B(phi): the ratio of cosh products entering the Gaussian formulation.
double b_ratio(const ModelParams& p, cplx phi);

struct RealityPeriodicityReport {
  double max_imag_rel = 0.0;    // |Im|/|Re| over the three traces
  double a1_conj_rel = 0.0;     // |Tr(..A1) - Tr(..A1*)| relative
  double periodicity_rel = 0.0; // theta vs theta + 4 pi/beta
  double reflection_rel = 0.0;  // theta in (2pi/b, 4pi/b) vs |theta - 4pi/b|
  bool pass = false;
};
RealityPeriodicityReport reality_periodicity_check(const ModelParams& p,
                                                   double tol = 1e-9);

// Time-ordered 2-point function from three matrix exponentials
// (the trace definition of C(phi)); oracle for the covariance module.
cplx covariance_from_traces(const ModelParams& p, cplx phi,
                            const FieldIndex& X, const FieldIndex& Y);

// Spin-model analogue: sigma, tau in {0 = up, 1 = down}.
cplx spin_covariance_from_traces(const ModelParams& p,
                                 const std::vector<int>& x, int sigma,
                                 double s, const std::vector<int>& y, int tau,
                                 double t);

// Hubbard-Stratonovich chain ------------------------------------------------

// Gaussian-quadrature realization of the partition formulation: the
// (phi, xi) double Gaussian integral of B(phi) times the 2-band trace
// ratio, which reproduces Tr e^{-beta(H + i theta Sz + F + A)}/
// Tr e^{-beta(H0 + i theta Sz)}.
cplx hs_partition(const ModelParams& p, cplx l1, cplx l2, int phi_nodes,
                  int xi_nodes);

// Same chain for the correlation insertions: j = 1 reproduces
// Tr(e^{-beta(H + i theta Sz + F)} A_j)/Tr e^{-beta(H0 + i theta Sz)}.
cplx hs_correlation(const ModelParams& p, int j, int phi_nodes, int xi_nodes);

// The trace identity behind the chain, checked pointwise at given
// (phi, xi, lambda): LHS spin trace ratio, RHS = B(phi') x band trace ratio
// at phi' = gamma - |U|^{1/2} beta^{-1/2} L^{-d/2} phi.
struct InsideIdentityCheck {
  cplx lhs, rhs;
  double abs_err;
};
InsideIdentityCheck partition_equality_inside(const ModelParams& p, cplx phi,
                                              cplx xi, cplx l1, cplx l2);

}  // namespace bcsif
