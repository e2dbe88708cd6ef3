#pragma once

#include <Eigen/Dense>

#include "bcsif/params.hpp"

namespace bcsif {

// Report for an effective-potential maximizer. For the planar potential F
// the maximizer is (a(gamma), 0) and gradient/hessian are 2-dimensional; for
// the radial potential f_L they collapse to scalars stored in component 0.
struct PotentialReport {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
  Eigen::Vector2d maximizer = Eigen::Vector2d::Zero();
  double second_derivative_at_max = 0.0;
};

// F(x) = -((x1-gamma)^2 + x2^2)/|U|
//        + (beta (2pi)^d)^{-1} int dk [log(cos + cosh(beta E_x))
//                                      - log(cos + cosh(beta e))],
// E_x = sqrt(e(k)^2 + |x|^2). The reference subtraction makes
// F(0) = -gamma^2/|U| exactly.
double eval_F(const ModelParams& p, const Eigen::Vector2d& x, int nodes = 0);

// Discrete analogue: the integral replaced by the mean over Gamma*.
double eval_F_L(const ModelParams& p, const Eigen::Vector2d& x);

// Radial potentials f, f_L (the gamma = 0, x2 = 0 restriction with the
// quadratic term -x^2/|U|).
double eval_f(const ModelParams& p, double x, int nodes = 0);
double eval_f_L(const ModelParams& p, double x);

// Closed-form gradient and Hessian of F by differentiation under the
// integral sign.
void grad_hess_F(const ModelParams& p, const Eigen::Vector2d& x,
                 Eigen::Vector2d& grad, Eigen::Matrix2d& hess, int nodes = 0);

// Lattice-sum versions.
void grad_hess_F_L(const ModelParams& p, const Eigen::Vector2d& x,
                   Eigen::Vector2d& grad, Eigen::Matrix2d& hess);

// Maximizer a_L(gamma) of F_L on the x1-axis (symmetry pins x2 = 0);
// requires gamma > 0.
double maximize_F_L(const ModelParams& p, double tol = 1e-12);

// Maximizer Delta_L of f_L restricted to [0, inf). Zero when the
// L-dependent solvability sum is negative; the measure-zero tie is treated
// as Delta_L = 0.
double maximize_f_L(const ModelParams& p, double tol = 1e-12);

// Report at the F_L maximizer (a_L(gamma), 0).
PotentialReport report_F_L(const ModelParams& p, double tol = 1e-12);

// Report at the f_L maximizer.
PotentialReport report_f_L(const ModelParams& p, double tol = 1e-12);

// Leading-order infinite-volume targets from the Laplace method:
// ssb_pred = -(a(gamma) - gamma)/|U|, odlro_pred = Delta^2/U^2.
struct LaplacePrediction {
  double ssb_pred = 0.0;
  double odlro_pred = 0.0;
  double a_gamma = 0.0;
  double delta = 0.0;
};
LaplacePrediction laplace_prediction(const ModelParams& p, double tol = 1e-10,
                                     int nodes = 0);

}  // namespace bcsif
