// Command-line front end: gap-equation observables, phase-diagram sweeps,
// effective-potential tables, covariance dumps and the verification suites.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcsif/covariance.hpp"
#include "bcsif/gap.hpp"
#include "bcsif/model.hpp"
#include "bcsif/numerics.hpp"
#include "bcsif/potential.hpp"
#include "bcsif/verify.hpp"

using json = nlohmann::json;
using namespace bcsif;

namespace {

struct RunConfig {
  ModelParams params;
  int quad_nodes = 0;
  double tol = 1e-10;
  int hs_nodes = 24;
  int fuzz_trials = 1000;
  std::uint64_t seed = 1;
  double c1 = 1.0;
  double c2 = 1.0;
  double m_base = 2.0 * kPi;
  double grid_h = 8.0;
  double phi_re = 0.0, phi_im = 0.0;
  std::string theta_grid, u_grid, l_list;
  std::string out_path, format = "csv", suite = "all";
  std::vector<int> xhat, yhat;
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// "lo:hi:n" linspace or comma-separated explicit values.
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> vals;
  if (spec.empty()) return vals;
  if (spec.find(':') != std::string::npos) {
    double lo, hi;
    int n;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 1)
      throw validation_error("bad grid spec: " + spec);
    for (int i = 0; i < n; ++i)
      vals.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return vals;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  return vals;
}

std::ostream& open_out(const RunConfig& cfg, std::ofstream& file) {
  if (cfg.out_path.empty()) return std::cout;
  file.open(cfg.out_path);
  if (!file) throw validation_error("cannot open " + cfg.out_path);
  return file;
}

json params_json(const ModelParams& p) {
  return json{{"d", p.d},       {"L", p.L},         {"hop", p.hop},
              {"mu", p.mu},     {"beta", p.beta},   {"theta", p.theta},
              {"U", p.U},       {"gamma", p.gamma}, {"Theta", p.Theta()}};
}

int cmd_gap(const RunConfig& cfg) {
  for (const std::string& w : cfg.params.validate()) std::cerr << w << "\n";
  GapSolution sol = solve_gap(cfg.params, cfg.tol, cfg.quad_nodes);
  CouplingWindow win = coupling_window(cfg.params, cfg.c1, cfg.c2,
                                       cfg.quad_nodes);
  json rec{{"params", params_json(cfg.params)},
           {"delta", sol.delta},
           {"residual", sol.residual},
           {"solvable", sol.solvable},
           {"quad_nodes", sol.quad_nodes},
           {"ssb", sol.ssb},
           {"odlro", sol.odlro},
           {"free_energy", sol.free_energy},
           {"window_lower", win.lower},
           {"window_upper", win.upper},
           {"window_upper_alt", win.upper_alt},
           {"in_window", win.nonempty}};
  std::ofstream file;
  open_out(cfg, file) << rec.dump(2) << "\n";
  return 0;
}

int cmd_phase(const RunConfig& cfg) {
  std::vector<double> thetas = parse_grid(cfg.theta_grid);
  std::vector<double> us = parse_grid(cfg.u_grid);
  if (thetas.empty() || us.empty())
    throw validation_error("phase: --theta-grid and --U-grid required");
  struct Row {
    double theta, u, th, lo, hi;
    bool in_window, solvable;
    GapSolution sol;
  };
  std::vector<Row> rows(thetas.size() * us.size());
  parallel_for(rows.size(), [&](std::size_t idx) {
    std::size_t i = idx / us.size(), j = idx % us.size();
    ModelParams p = cfg.params;
    p.theta = thetas[i];
    p.U = us[j];
    p.validate();
    Row& r = rows[idx];
    r.theta = p.theta;
    r.u = p.U;
    r.th = p.Theta();
    CouplingWindow win = coupling_window(p, cfg.c1, cfg.c2, cfg.quad_nodes);
    r.lo = win.lower;
    r.hi = win.upper;
    r.in_window = win.nonempty && p.abs_u() > win.lower &&
                  p.abs_u() < win.upper;
    r.sol = solve_gap(p, cfg.tol, cfg.quad_nodes);
  });
  std::ofstream file;
  std::ostream& os = open_out(cfg, file);
  os << "theta,U,Theta,window_lower,window_upper,in_window,delta,ssb,odlro,"
        "free_energy\n";
  for (const Row& r : rows) {
    os << fmt17(r.theta) << ',' << fmt17(r.u) << ',' << fmt17(r.th) << ','
       << fmt17(r.lo) << ',' << fmt17(r.hi) << ',' << (r.in_window ? 1 : 0)
       << ',' << fmt17(r.sol.delta) << ',' << fmt17(r.sol.ssb) << ','
       << fmt17(r.sol.odlro) << ',' << fmt17(r.sol.free_energy) << "\n";
  }
  return 0;
}

int cmd_potential(const RunConfig& cfg) {
  std::vector<double> ls = parse_grid(cfg.l_list);
  if (ls.empty()) ls = {8, 16, 32, 64};
  double a_inf = cfg.params.gamma > 0.0
                     ? a_of_gamma(cfg.params, cfg.tol, cfg.quad_nodes)
                     : solve_gap(cfg.params, cfg.tol, cfg.quad_nodes).delta;
  std::ofstream file;
  std::ostream& os = open_out(cfg, file);
  os << "L,a_L,delta_L,F_L_at_max,f_L_at_max,hessian_x2x2,"
        "hessian_identity_err,a_limit\n";
  for (double lv : ls) {
    ModelParams p = cfg.params;
    p.L = static_cast<int>(lv);
    PotentialReport fr = report_F_L(p, cfg.tol);
    PotentialReport gr = report_f_L(p, cfg.tol);
    double a = fr.maximizer(0);
    double ident = std::abs(fr.hessian(1, 1) +
                            2.0 * p.gamma / (p.abs_u() * a));
    os << p.L << ',' << fmt17(a) << ',' << fmt17(gr.maximizer(0)) << ','
       << fmt17(fr.value) << ',' << fmt17(gr.value) << ','
       << fmt17(fr.hessian(1, 1)) << ',' << fmt17(ident) << ','
       << fmt17(a_inf) << "\n";
  }
  return 0;
}

int cmd_covariance(const RunConfig& cfg) {
  const ModelParams& p = cfg.params;
  p.validate();
  CovarianceEvaluator cov(p, cplx(cfg.phi_re, cfg.phi_im));
  long bh = std::lround(p.beta * cfg.grid_h);
  if (bh < 1 || std::abs(p.beta * cfg.grid_h - bh) > 1e-9 || bh % 2 != 0)
    throw validation_error("covariance: --grid-h must lie in (2/beta) N");
  std::ofstream file;
  std::ostream& os = open_out(cfg, file);
  os << "band1,band2";
  for (int j = 0; j < p.d; ++j) os << ",x" << (j + 1);
  os << ",s,t,re,im\n";
  MomentumGrid grid(p.d, p.L);
  for (int r = 1; r <= 2; ++r)
    for (int e = 1; e <= 2; ++e)
      for (long si = 0; si < grid.size(); ++si)
        for (long a = 0; a < bh; ++a)
          for (long b = 0; b < bh; ++b) {
            std::vector<int> x = grid.indices()[si];
            double s = a / cfg.grid_h, t = b / cfg.grid_h;
            cplx v = cov.covariance({r, x, s}, {e, std::vector<int>(p.d, 0),
                                                t});
            os << r << ',' << e;
            for (int j = 0; j < p.d; ++j) os << ',' << x[j];
            os << ',' << fmt17(s) << ',' << fmt17(t) << ','
               << fmt17(v.real()) << ',' << fmt17(v.imag()) << "\n";
          }
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  VerifyConfig vc;
  vc.quad_nodes = cfg.quad_nodes;
  vc.hs_nodes = cfg.hs_nodes;
  vc.fuzz_trials = cfg.fuzz_trials;
  vc.seed = cfg.seed;
  vc.M_base = cfg.m_base;
  std::vector<CheckResult> results = run_suite(cfg.suite, cfg.params, vc);
  json rep = json::array();
  bool all_pass = true;
  for (const CheckResult& r : results) {
    rep.push_back(json{{"check", r.check},
                       {"lhs", r.lhs},
                       {"rhs", r.rhs},
                       {"abs_err", r.abs_err},
                       {"rel_err", r.rel_err},
                       {"tol", r.tol},
                       {"pass", r.pass}});
    all_pass = all_pass && r.pass;
  }
  std::ofstream file;
  open_out(cfg, file) << rep.dump(2) << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced BCS model with an imaginary magnetic field: gap "
               "observables, effective potentials, covariances and exact "
               "formulation checks"};
  app.require_subcommand(1);

  RunConfig cfg;
  const char* env = std::getenv("BCSIF_CONFIG");
  app.set_config("--config", env ? env : "",
                 "flat key=value configuration file");

  app.add_option("--d", cfg.params.d, "spatial dimension");
  app.add_option("--L", cfg.params.L, "linear lattice size");
  app.add_option("--hop", cfg.params.hop, "hopping sign selector (0 or 1)");
  app.add_option("--mu", cfg.params.mu, "chemical potential");
  app.add_option("--beta", cfg.params.beta, "inverse temperature");
  app.add_option("--theta", cfg.params.theta, "imaginary-field magnitude");
  app.add_option("--U", cfg.params.U, "coupling constant (negative)");
  app.add_option("--gamma", cfg.params.gamma, "symmetry-breaking field");
  app.add_option("--xhat", cfg.xhat, "pairing-operator site");
  app.add_option("--yhat", cfg.yhat, "second pairing-operator site");
  app.add_option("--quad-nodes", cfg.quad_nodes,
                 "per-axis quadrature nodes (0 = adaptive)");
  app.add_option("--tol", cfg.tol, "solver tolerance");
  app.add_option("--hs-nodes", cfg.hs_nodes, "Gauss-Hermite nodes per axis");
  app.add_option("--fuzz-trials", cfg.fuzz_trials, "determinant-bound trials");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--c1", cfg.c1, "window lower-bound constant");
  app.add_option("--c2", cfg.c2, "window upper-bound constant");
  app.add_option("--M-base", cfg.m_base, "scale-decomposition base (>= 2 pi)");
  app.add_option("--grid-h", cfg.grid_h, "time-grid rate, in (2/beta) N");
  app.add_option("--phi-re", cfg.phi_re, "Re phi for covariance dumps");
  app.add_option("--phi-im", cfg.phi_im, "Im phi for covariance dumps");
  app.add_option("--theta-grid", cfg.theta_grid,
                 "sweep values: lo:hi:n or comma list");
  app.add_option("--U-grid", cfg.u_grid, "sweep values: lo:hi:n or comma list");
  app.add_option("--L-list", cfg.l_list, "lattice sizes for potential tables");
  app.add_option("--out", cfg.out_path, "output path (default stdout)");
  app.add_option("--format", cfg.format, "csv|json");
  app.add_option("--suite", cfg.suite,
                 "traces|covariance|hs|grassmann|detbound|potential|all");

  auto* sub_gap = app.add_subcommand("gap", "solve the gap equation");
  auto* sub_phase = app.add_subcommand("phase", "sweep the (theta, U) plane");
  auto* sub_pot =
      app.add_subcommand("potential", "effective-potential maximizers");
  auto* sub_cov = app.add_subcommand("covariance", "dump C(phi) on a grid");
  auto* sub_ver = app.add_subcommand("verify", "run verification suites");
  for (auto* sub : {sub_gap, sub_phase, sub_pot, sub_cov, sub_ver})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (!cfg.xhat.empty()) cfg.params.xhat = cfg.xhat;
  if (!cfg.yhat.empty()) cfg.params.yhat = cfg.yhat;

  try {
    cfg.params.validate();
    if (sub_gap->parsed()) return cmd_gap(cfg);
    if (sub_phase->parsed()) return cmd_phase(cfg);
    if (sub_pot->parsed()) return cmd_potential(cfg);
    if (sub_cov->parsed()) return cmd_covariance(cfg);
    if (sub_ver->parsed()) return cmd_verify(cfg);
  } catch (const validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
