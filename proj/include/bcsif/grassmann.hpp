#pragma once

#include <cstdint>
#include <map>

#include <Eigen/Dense>

#include "bcsif/params.hpp"

namespace bcsif {

// Element of the Grassmann algebra over a fixed universe of F fields, each
// contributing a bar and a non-bar generator. Generator id = 2*field + 0
// for the bar copy, 2*field + 1 for the non-bar copy; the canonical monomial
// order is ascending generator id and every sign comes from sorting parity
// against it. Coefficients are kept sparse.
class GrassmannElement {
 public:
  explicit GrassmannElement(int n_fields = 0) : n_fields_(n_fields) {}

  static GrassmannElement constant(int n_fields, cplx c);
  // +- psi-bar / psi of one field.
  static GrassmannElement generator(int n_fields, int field, bool bar);
  // Product of the listed (field, bar) factors in the written order.
  static GrassmannElement monomial(int n_fields,
                                   const std::vector<std::pair<int, bool>>& w,
                                   cplx c);

  int n_fields() const { return n_fields_; }
  int n_generators() const { return 2 * n_fields_; }
  const std::map<std::uint64_t, cplx>& terms() const { return terms_; }
  cplx coeff(std::uint64_t mask) const;
  cplx constant_part() const { return coeff(0); }
  bool is_even() const;
  int max_degree() const;
  double max_abs_coeff() const;

  GrassmannElement& operator+=(const GrassmannElement& o);
  GrassmannElement& operator-=(const GrassmannElement& o);
  GrassmannElement& operator*=(cplx c);
  friend GrassmannElement operator+(GrassmannElement a,
                                    const GrassmannElement& b) {
    return a += b;
  }
  friend GrassmannElement operator-(GrassmannElement a,
                                    const GrassmannElement& b) {
    return a -= b;
  }
  friend GrassmannElement operator*(cplx c, GrassmannElement a) {
    return a *= c;
  }

  GrassmannElement wedge(const GrassmannElement& o) const;

  // Finite exponential / logarithm series (nilpotency terminates them).
  // log requires the constant part outside (-inf, 0].
  GrassmannElement exp() const;
  GrassmannElement log() const;

  void add_term(std::uint64_t mask, cplx c);

 private:
  int n_fields_;
  std::map<std::uint64_t, cplx> terms_;
};

// Covariance table D(field_i, field_j) over the field universe.
using CovarianceTable = Eigen::MatrixXcd;

// Grassmann Gaussian integral of one canonical monomial: the signed
// determinant det(D(X_i, Y_j)) over its bar/non-bar fields; zero when the
// counts differ.
cplx gaussian_monomial(std::uint64_t mask, const CovarianceTable& d);

// Independent route: Pfaffian of the antisymmetric-extension matrix
// (Wick pairing).
cplx gaussian_monomial_wick(std::uint64_t mask, const CovarianceTable& d);

// Full Gaussian integral of an element.
cplx gaussian_integral(const GrassmannElement& f, const CovarianceTable& d);
cplx gaussian_integral_wick(const GrassmannElement& f,
                            const CovarianceTable& d);

// Partial integration: the universe is split at field `first_int`; fields
// >= first_int are integrated against d (indexed from 0 inside that tail)
// and the result lives on the fields below it.
GrassmannElement gaussian_integral_partial(const GrassmannElement& f,
                                           int first_int,
                                           const CovarianceTable& d);

// f(psi) on F fields -> f(psi + psi^1) on 2F fields, originals first.
GrassmannElement shift_doubled(const GrassmannElement& f);

// ---------------------------------------------------------------------------
// Model actions on the discrete-time index sets
// ---------------------------------------------------------------------------

// Field labels (x, sigma, s) for the spin universe and (rho, x, s) for the
// band universe, both with time step count nt = beta*h; field index is
// (site * 2 + spin_or_band) * nt + step.
struct GrassmannUniverse {
  int n_sites = 0;
  int nt = 0;
  int n_fields() const { return 2 * n_sites * nt; }
  int field(int site, int which, int step) const {
    return (site * 2 + which) * nt + step;
  }
};

GrassmannUniverse make_universe(const ModelParams& p, double h);

// Spin-model actions of the interacting formulation.
struct SpinActions {
  GrassmannElement V, F, A1, A2;           // quartic/pairing/artificial
  GrassmannElement Vplus, Vminus, W;       // Hubbard-Stratonovich partners
  GrassmannElement Wplus, Wminus;
};
SpinActions build_spin_actions(const ModelParams& p, double h);

// Band-model actions.
struct BandActions {
  GrassmannElement V, W, A1, A2;
};
BandActions build_band_actions(const ModelParams& p, double h);

// Spin free 2-point function G((x,sigma,s),(y,tau,t)); the per-spin
// imaginary field is +theta/2 for up, -theta/2 for down.
cplx covariance_G(const ModelParams& p, const std::vector<int>& x, int sigma,
                  double s, const std::vector<int>& y, int tau, double t);

// Covariance table of G over the spin universe at time grid h.
CovarianceTable spin_covariance_table(const ModelParams& p, double h);
// Covariance table of C(phi) over the band universe.
CovarianceTable band_covariance_table(const ModelParams& p, cplx phi,
                                      double h);

// ---------------------------------------------------------------------------
// Formulation identities
// ---------------------------------------------------------------------------

struct PartitionViaGrassmann {
  cplx grassmann;          // int e^{-V-F-A} dmu_G
  cplx p_h_constrained;    // discrete series with ordered distinct times
  cplx p_h_unconstrained;  // (-1)^n/n! sum without the distinct-time
                           // constraint (determinant form per tuple)
  bool unconstrained_done = false;
};
// l1, l2 are the artificial couplings. The unconstrained enumeration is
// exponential in beta*h and is attempted only when the tuple count stays
// under ~10^7.
PartitionViaGrassmann partition_via_grassmann(const ModelParams& p, double h,
                                              cplx l1, cplx l2);

// Max coefficient error of the Hubbard-Stratonovich identity at Grassmann
// level: e^{-V-F-A} vs (1/pi) int dphi e^{-|phi|^2}
// e^{-V+W-F-A+phi V+ + conj(phi) V-} assembled by Gauss-Hermite quadrature.
double hs_identity_check(const ModelParams& p, double h, int nodes, cplx l1,
                         cplx l2);

// First n cumulant elements of z -> log int e^{z f(psi+psi^1)} dmu_C(psi^1)
// by two routes (series logarithm vs moment-cumulant recursion); returns
// the per-order max coefficient disagreement and the route-1 cumulants.
struct LogMomentResult {
  std::vector<GrassmannElement> cumulants;
  double route_disagreement = 0.0;
};
LogMomentResult log_moment_check(const GrassmannElement& f,
                                 const CovarianceTable& c, int n);

}  // namespace bcsif
