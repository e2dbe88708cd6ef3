#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bcsif/model.hpp"

using namespace bcsif;

namespace {

ModelParams base_params() {
  ModelParams p;
  p.d = 1;
  p.L = 8;
  p.mu = 0.0;
  p.beta = 1.0;
  p.theta = 0.0;
  p.U = -1.0;
  return p;
}

}  // namespace

TEST_CASE("dispersion values") {
  ModelParams p = base_params();
  CHECK(dispersion(p, {0.0}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(dispersion(p, {kPi / 2.0}) == doctest::Approx(0.0).epsilon(1e-15));
  ModelParams q = base_params();
  q.d = 2;
  q.hop = 1;
  q.mu = 1.0;
  CHECK(dispersion(q, {kPi, kPi}) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("dispersion reflection symmetry") {
  ModelParams p = base_params();
  p.d = 2;
  p.mu = 0.7;
  for (double a : {0.3, 1.1, 2.9})
    for (double b : {0.1, 2.2}) {
      std::vector<double> k{a, b};
      std::vector<double> kr{2.0 * kPi - a, 2.0 * kPi - b};
      CHECK(dispersion(p, k) == dispersion(p, kr));
    }
}

TEST_CASE("momentum grid closure") {
  MomentumGrid g(2, 6);
  CHECK(g.size() == 36);
  // closed under k -> (2 pi - k) mod 2 pi: every reflected index is present.
  for (long i = 0; i < g.size(); ++i) {
    std::vector<int> m = g.indices()[i];
    std::vector<int> r(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) r[j] = (6 - m[j]) % 6;
    bool found = false;
    for (long l = 0; l < g.size(); ++l)
      if (g.indices()[l] == r) found = true;
    CHECK(found);
  }
}

TEST_CASE("g_function exact values and monotonicity") {
  ModelParams p = base_params();
  CHECK(g_function(p, 1.0) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
  ModelParams q = base_params();
  q.d = 2;
  CHECK(g_function(q, 1.0) ==
        doctest::Approx(std::pow(std::log(2.0), 2.0 / 3.0)).epsilon(1e-12));
  CHECK(g_function(q, 0.01) > g_function(q, 0.1));
  double prev = g_function(p, 1e-4);
  for (double x : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    double v = g_function(p, x);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(g_function(p, 0.0), validation_error);
  ModelParams bad = base_params();
  bad.mu = 2.5;
  CHECK_THROWS_AS(g_function(bad, 1.0), validation_error);
}

TEST_CASE("validation rules") {
  ModelParams p = base_params();
  CHECK(p.validate().empty());
  ModelParams b1 = p;
  b1.beta = -1.0;
  CHECK_THROWS_AS(b1.validate(), validation_error);
  ModelParams b2 = p;
  b2.U = 0.5;
  CHECK_THROWS_AS(b2.validate(), validation_error);
  ModelParams b3 = p;
  b3.theta = 2.0 * kPi / b3.beta;  // excluded endpoint
  CHECK_THROWS_AS(b3.validate(), validation_error);
  ModelParams b4 = p;
  b4.xhat = std::vector<int>{0};
  b4.yhat = std::vector<int>{8};  // same site mod L
  CHECK_THROWS_AS(b4.validate(), validation_error);
  ModelParams soft = p;
  soft.mu = 2.5;  // degenerate Fermi surface: warning, not error
  CHECK(!soft.validate().empty());
}

TEST_CASE("coupling window branches") {
  // theta near 0 at beta = 1: Theta ~ pi lands in the outer branch and the
  // window is empty.
  ModelParams p = base_params();
  p.theta = 1e-8;
  CouplingWindow win = coupling_window(p, 1.0, 1.0);
  double th = p.Theta();
  double lo = th * (th / 2.0);  // (2d-|mu|)^0 * beta * Theta * Theta/(2d-|mu|)
  double g = 0.5 * std::log(1.0 / th + 1.0);
  double up = std::pow(2.0 + 2.0 * g, -2.0);
  CHECK(win.lower == doctest::Approx(lo).epsilon(1e-12));
  CHECK(win.upper == doctest::Approx(up).epsilon(1e-12));
  CHECK(!win.nonempty);

  // Theta = 1e-4: lower = Theta and the window opens.
  ModelParams q = base_params();
  q.theta = 2.0 * (kPi / q.beta - 1e-4);
  CouplingWindow w2 = coupling_window(q, 1.0, 1.0);
  CHECK(w2.lower == doctest::Approx(1e-4).epsilon(1e-6));
  CHECK(w2.nonempty);

  // lower -> 0 monotonically as Theta -> 0.
  double prev = 1e100;
  for (double t : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    ModelParams r = base_params();
    r.theta = 2.0 * (kPi / r.beta - t);
    double lov = coupling_window(r, 1.0, 1.0).lower;
    CHECK(lov < prev);
    prev = lov;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("fermi surface lower bound and level sets") {
  ModelParams p = base_params();
  CHECK(fermi_surface_lower_bound(p) == 1.0);
  ModelParams q = base_params();
  q.d = 2;
  CHECK(fermi_surface_lower_bound(q) == doctest::Approx(0.2).epsilon(1e-15));
  ModelParams bad = q;
  bad.mu = 4.0;
  CHECK_THROWS_AS(fermi_surface_lower_bound(bad), validation_error);

  // Mesh-estimated measure dominates the bound at eta = 0 for d = 2 ...
  CHECK(level_set_measure(q, 0.0, 512) >= 0.2);
  // ... and across 11 sampled eta in [-K, K] for d in {1, 2}.
  for (int d : {1, 2}) {
    ModelParams r = base_params();
    r.d = d;
    r.mu = 0.4;
    double K = 0.5 * (2.0 * d - std::abs(r.mu));
    double bound = fermi_surface_lower_bound(r);
    for (int i = 0; i <= 10; ++i) {
      double eta = -K + 2.0 * K * i / 10.0;
      CHECK(level_set_measure(r, eta, 512) >= bound);
    }
  }
}

TEST_CASE("momentum sum ratio") {
  ModelParams p = base_params();
  p.L = 512;
  double r512 = momentum_sum_ratio(p, 1.0);
  p.L = 1024;
  double r1024 = momentum_sum_ratio(p, 1.0);
  CHECK(std::abs(r512 - r1024) / r1024 < 0.01);

  // Large K: numerator bounded by 1/K.
  p.L = 512;
  CHECK(momentum_sum(p, 100.0) <= 0.01);

  // d = 2: ratio stays within 20% across two small K (the empirical c(d)).
  ModelParams q = base_params();
  q.d = 2;
  q.L = 128;
  double ra = momentum_sum_ratio(q, 0.1);
  double rb = momentum_sum_ratio(q, 0.01);
  CHECK(std::abs(ra - rb) / std::max(ra, rb) < 0.2);
}
