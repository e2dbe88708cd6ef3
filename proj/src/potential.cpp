#include "bcsif/potential.hpp"

#include "bcsif/gap.hpp"
#include "bcsif/model.hpp"

namespace bcsif {

namespace {

// Calls f(e(k)) for every point of the uniform n^d lattice on [0,2pi)^d.
template <typename F>
void momentum_foreach(const ModelParams& p, int n, F&& f) {
  long total = 1;
  for (int j = 0; j < p.d; ++j) total *= n;
  std::vector<double> k(p.d);
  std::vector<int> m(p.d, 0);
  for (long i = 0; i < total; ++i) {
    for (int j = 0; j < p.d; ++j) k[j] = 2.0 * kPi * m[j] / n;
    f(dispersion(p, k));
    for (int j = p.d - 1; j >= 0; --j) {
      if (++m[j] < n) break;
      m[j] = 0;
    }
  }
}

long lattice_count(const ModelParams& p, int n) {
  long total = 1;
  for (int j = 0; j < p.d; ++j) total *= n;
  return total;
}

double log_term_average(const ModelParams& p, double r2, int n) {
  double cb = std::cos(p.beta * p.theta / 2.0);
  double acc = 0.0;
  momentum_foreach(p, n, [&](double e) {
    double E = std::sqrt(e * e + r2);
    acc += log_coshsum(p.beta * E, cb) - log_coshsum(p.beta * e, cb);
  });
  return acc / lattice_count(p, n);
}

// d/dE of the gap integrand Q(E) = sinh(beta E)/((c + cosh(beta E)) E).
double gap_integrand_deriv(double E, double beta, double c) {
  double x = beta * E;
  if (x < 1e-3) {
    // Q(E) = beta g(beta E) with g even; series keeps the cancellation out.
    double c1 = c + 1.0;
    return beta * beta * (2.0 * x / c1) * (1.0 / 6.0 - 1.0 / (2.0 * c1));
  }
  if (x > 30.0) {
    double em = std::exp(-x);
    double em2 = em * em;
    double den = 2.0 * c * em + 1.0 + em2;
    double q = (1.0 - em2) / den;                              // tanh-like
    double dq = beta * em * (2.0 * c + 4.0 * em + 2.0 * c * em2) /
                (den * den);                                   // beta q'(x)
    return (dq * E - q) / (E * E);
  }
  double s = std::sinh(x), ch = std::cosh(x);
  double den = (c + ch) * E;
  return (beta * ch * den - s * (c + ch + E * beta * s)) / (den * den);
}

struct Derivs {
  double I = 0.0;  // (2pi)^{-d} int Q dk        (gap integral at radius r)
  double K = 0.0;  // (2pi)^{-d} int Q'(E)/E dk  (radial curvature kernel)
};

Derivs radial_derivs(const ModelParams& p, double r2, int n) {
  double cb = std::cos(p.beta * p.theta / 2.0);
  double accI = 0.0, accK = 0.0;
  momentum_foreach(p, n, [&](double e) {
    double E = std::sqrt(e * e + r2);
    accI += gap_integrand(E, p.beta, cb);
    accK += gap_integrand_deriv(E, p.beta, cb) / E;
  });
  long total = lattice_count(p, n);
  return {accI / total, accK / total};
}

}  // namespace

double eval_F(const ModelParams& p, const Eigen::Vector2d& x, int nodes) {
  int n = auto_nodes(p, nodes);
  double quad = (x(0) - p.gamma) * (x(0) - p.gamma) + x(1) * x(1);
  return -quad / p.abs_u() + log_term_average(p, x.squaredNorm(), n) / p.beta;
}

double eval_F_L(const ModelParams& p, const Eigen::Vector2d& x) {
  double quad = (x(0) - p.gamma) * (x(0) - p.gamma) + x(1) * x(1);
  return -quad / p.abs_u() +
         log_term_average(p, x.squaredNorm(), p.L) / p.beta;
}

double eval_f(const ModelParams& p, double x, int nodes) {
  int n = auto_nodes(p, nodes);
  return -x * x / p.abs_u() + log_term_average(p, x * x, n) / p.beta;
}

double eval_f_L(const ModelParams& p, double x) {
  return -x * x / p.abs_u() + log_term_average(p, x * x, p.L) / p.beta;
}

namespace {

void grad_hess_impl(const ModelParams& p, const Eigen::Vector2d& x, int n,
                    Eigen::Vector2d& grad, Eigen::Matrix2d& hess) {
  Derivs dv = radial_derivs(p, x.squaredNorm(), n);
  grad(0) = -2.0 * (x(0) - p.gamma) / p.abs_u() + x(0) * dv.I;
  grad(1) = -2.0 * x(1) / p.abs_u() + x(1) * dv.I;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      hess(i, j) =
          (i == j ? -2.0 / p.abs_u() + dv.I : 0.0) + x(i) * x(j) * dv.K;
}

}  // namespace

void grad_hess_F(const ModelParams& p, const Eigen::Vector2d& x,
                 Eigen::Vector2d& grad, Eigen::Matrix2d& hess, int nodes) {
  grad_hess_impl(p, x, auto_nodes(p, nodes), grad, hess);
}

void grad_hess_F_L(const ModelParams& p, const Eigen::Vector2d& x,
                   Eigen::Vector2d& grad, Eigen::Matrix2d& hess) {
  grad_hess_impl(p, x, p.L, grad, hess);
}

double maximize_F_L(const ModelParams& p, double tol) {
  return a_of_gamma_lattice(p, tol);
}

double maximize_f_L(const ModelParams& p, double tol) {
  double ind = gap_residual_lattice(p, 0.0);
  if (ind == 0.0) return 0.0;  // degenerate tie, measure zero
  if (ind < 0.0) return 0.0;
  auto f = [&](double x) { return gap_residual_lattice(p, x); };
  return bracket_and_solve(f, 0.0, ind, 1.0, 1e-14, tol, 1e12);
}

PotentialReport report_F_L(const ModelParams& p, double tol) {
  PotentialReport rep;
  double a = maximize_F_L(p, tol);
  rep.maximizer = Eigen::Vector2d(a, 0.0);
  rep.value = eval_F_L(p, rep.maximizer);
  grad_hess_F_L(p, rep.maximizer, rep.gradient, rep.hessian);
  rep.second_derivative_at_max = rep.hessian(1, 1);
  return rep;
}

PotentialReport report_f_L(const ModelParams& p, double tol) {
  PotentialReport rep;
  double delta = maximize_f_L(p, tol);
  rep.maximizer = Eigen::Vector2d(delta, 0.0);
  rep.value = eval_f_L(p, delta);
  Derivs dv = radial_derivs(p, delta * delta, p.L);
  double d1 = -2.0 * delta / p.abs_u() + delta * dv.I;
  double d2 = -2.0 / p.abs_u() + dv.I + delta * delta * dv.K;
  rep.gradient = Eigen::Vector2d(d1, 0.0);
  rep.hessian.setZero();
  rep.hessian(0, 0) = d2;
  rep.second_derivative_at_max = d2;
  return rep;
}

LaplacePrediction laplace_prediction(const ModelParams& p, double tol,
                                     int nodes) {
  LaplacePrediction pred;
  GapSolution sol = solve_gap(p, tol, nodes);
  pred.delta = sol.delta;
  pred.odlro_pred = sol.odlro;
  if (p.gamma > 0.0) {
    pred.a_gamma = a_of_gamma(p, tol, nodes);
    pred.ssb_pred = -(pred.a_gamma - p.gamma) / p.abs_u();
  } else {
    pred.a_gamma = sol.delta;
    pred.ssb_pred = sol.ssb;
  }
  return pred;
}

}  // namespace bcsif
