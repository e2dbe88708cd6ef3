#pragma once

#include <string>
#include <vector>

#include "bcsif/params.hpp"

namespace bcsif {

struct CheckResult {
  std::string check;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

CheckResult make_check(const std::string& name, cplx lhs, cplx rhs,
                       double tol, bool relative = true);
CheckResult make_flag_check(const std::string& name, bool ok);

// Numeric knobs shared by the suites.
struct VerifyConfig {
  int quad_nodes = 0;      // 0 = Theta-adaptive
  int hs_nodes = 24;       // Gauss-Hermite nodes per axis
  int fuzz_trials = 1000;
  std::uint64_t seed = 1;
  double M_base = 2.0 * kPi;
};

std::vector<CheckResult> verify_traces(const ModelParams& p,
                                       const VerifyConfig& cfg);
std::vector<CheckResult> verify_covariance(const ModelParams& p,
                                           const VerifyConfig& cfg);
std::vector<CheckResult> verify_hs(const ModelParams& p,
                                   const VerifyConfig& cfg);
std::vector<CheckResult> verify_grassmann(const ModelParams& p,
                                          const VerifyConfig& cfg);
std::vector<CheckResult> verify_detbound(const ModelParams& p,
                                         const VerifyConfig& cfg);
std::vector<CheckResult> verify_potential(const ModelParams& p,
                                          const VerifyConfig& cfg);

// suite in {traces, covariance, hs, grassmann, detbound, potential, all}.
std::vector<CheckResult> run_suite(const std::string& suite,
                                   const ModelParams& p,
                                   const VerifyConfig& cfg);

}  // namespace bcsif
