// Command-line front end: single solves with iteration traces, the Monte
// Carlo experiment, and a self-contained property-verification suite.
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <mmopt/mmopt.hpp>

namespace {

using namespace mmopt;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitProperties = 3;

struct CommonFlags {
  std::string preset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> mc;
  std::optional<double> q, tau, gamma, noise_var, tol;
  std::optional<int> n, max_iter;
  std::string out;
  std::string format;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--preset", f.preset, "named preset (only: paper)")
      ->check(CLI::IsMember({"paper"}));
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--seed", f.seed, "random seed (u64)");
  cmd->add_option("--mc", f.mc, "Monte Carlo run count");
  cmd->add_option("--q", f.q, "constraint exponent q in (0,2]");
  cmd->add_option("--tau", f.tau, "constraint scale tau > 0");
  cmd->add_option("--gamma", f.gamma, "constraint bound gamma > 0");
  cmd->add_option("--n", f.n, "number of measurements");
  cmd->add_option("--noise-var", f.noise_var, "noise variance");
  cmd->add_option("--tol", f.tol, "objective tolerance");
  cmd->add_option("--max-iter", f.max_iter, "outer iteration cap");
  cmd->add_option("--out", f.out, "output path (default: stdout)");
  cmd->add_option("--format", f.format, "export format")
      ->check(CLI::IsMember({"csv", "json-lines"}));
}

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;  // defaults are the benchmark preset
  if (!f.config_path.empty()) cfg = load_config_file(f.config_path);
  if (f.seed) cfg.experiment.seed = *f.seed;
  if (f.mc) cfg.experiment.n_monte_carlo = *f.mc;
  if (f.q) cfg.experiment.q = *f.q;
  if (f.tau) cfg.experiment.tau = *f.tau;
  if (f.gamma) cfg.experiment.gamma = *f.gamma;
  if (f.n) cfg.experiment.n_measurements = *f.n;
  if (f.noise_var) cfg.experiment.noise_variance = *f.noise_var;
  if (f.tol) cfg.experiment.solver.objective_tolerance = *f.tol;
  if (f.max_iter) cfg.experiment.solver.max_iterations = *f.max_iter;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.format.empty()) cfg.format = f.format;
  cfg.experiment.validate();
  return cfg;
}

void emit(const std::string& path,
          const std::function<void(std::ostream&)>& writer) {
  if (path.empty())
    writer(std::cout);
  else
    write_file(path, writer);
}

std::string runs_path(const std::string& summary_path) {
  const auto dot = summary_path.rfind('.');
  const auto sep = summary_path.find_last_of("/\\");
  if (dot == std::string::npos || (sep != std::string::npos && dot < sep))
    return summary_path + "_runs";
  return summary_path.substr(0, dot) + "_runs" + summary_path.substr(dot);
}

int cmd_solve(const CommonFlags& f) {
  RunConfig cfg = resolve_config(f);
  ProblemInstance inst = generate_instance(cfg.experiment, 0);
  GroupedVector theta0 =
      zeros_like_structure(cfg.experiment.true_theta.group_sizes);
  auto [theta, trace] = marks_solve(inst, theta0, cfg.experiment.solver);
  emit(cfg.out, [&](std::ostream& os) { write_trace_csv(os, trace); });
  std::cerr << "solve: " << trace.records.size() << " iterations, "
            << to_string(trace.termination)
            << ", objective " << fmt12(trace.records.back().objective) << "\n";
  return kExitOk;
}

int cmd_montecarlo(const CommonFlags& f) {
  RunConfig cfg = resolve_config(f);
  ExperimentSummary summary = run_monte_carlo(cfg.experiment);
  const bool jsonl = cfg.format == "json-lines";
  emit(cfg.out, [&](std::ostream& os) {
    jsonl ? write_summary_jsonl(os, summary) : write_summary_csv(os, summary);
  });
  if (!cfg.out.empty()) {
    emit(runs_path(cfg.out), [&](std::ostream& os) {
      jsonl ? write_runs_jsonl(os, summary) : write_runs_csv(os, summary);
    });
  }
  std::cerr << "montecarlo: mse_constrained=" << fmt12(summary.mse_constrained)
            << " mse_least_squares=" << fmt12(summary.mse_least_squares)
            << " win_rate=" << fmt12(summary.win_rate)
            << " mean_iterations=" << fmt12(summary.mean_iterations)
            << " failures=" << summary.n_failures << "\n";
  return kExitOk;
}

struct PropertyLine {
  std::string name;
  bool pass;
  std::string detail;
};

int cmd_verify(std::uint64_t seed, bool quick, double perturb) {
  std::vector<PropertyLine> lines;
  const int n_anchors = quick ? 10 : 100;
  const int n_samples = quick ? 1000 : 10000;
  const int n_kkt = quick ? 100 : 1000;
  const int n_oracle = quick ? 3 : 10;

  MpeConstraintSpec spec;
  spec.group_sizes = {3, 3, 3, 3};

  // Fisher identity: finite differences of the constraint against the
  // analytic surrogate gradient at the anchor
  {
    double worst = 0.0;
    CounterRng rng(seed, 11);
    for (int a = 0; a < n_anchors; ++a) {
      GroupedVector th = zeros_like_structure(spec.group_sizes);
      for (Index i = 0; i < th.dim(); ++i) th.values[i] = rng.normal();
      for (std::size_t m = 0; m < th.num_groups(); ++m)
        if (th.group_norm(m) < 1e-3) th.group(m).setConstant(0.1);
      QuadraticSurrogate s = build_constraint_surrogate(th, spec);
      auto value_fn = [&](const VectorXd& v) {
        return mpe_value(GroupedVector(v, spec.group_sizes), spec);
      };
      FisherReport rep = check_fisher_identity(value_fn, s, th, 1e-6);
      const double scale = 1.0 + s.gradient(th.values).norm();
      worst = std::max(worst, rep.max_abs_gradient_gap / scale);
    }
    lines.push_back({"fisher_identity", worst <= 1e-5,
                     "max relative gradient gap " + fmt12(worst)});
  }

  // majorization + tangency + gradient match, optionally with perturbed
  // weights as a negative control
  {
    std::size_t violations = 0;
    double worst_tan = 0.0, worst_grad = 0.0;
    CounterRng rng(seed, 13);
    auto g_fn = [&](const VectorXd& v) {
      return mpe_value(GroupedVector(v, spec.group_sizes), spec);
    };
    for (int a = 0; a < n_anchors; ++a) {
      GroupedVector th = zeros_like_structure(spec.group_sizes);
      for (Index i = 0; i < th.dim(); ++i) th.values[i] = rng.normal();
      for (std::size_t m = 0; m < th.num_groups(); ++m)
        if (th.group_norm(m) < 1e-2) th.group(m).setConstant(0.1);
      QuadraticSurrogate s = build_constraint_surrogate(th, spec);
      if (perturb != 1.0) {
        s.weights *= perturb;
        double constant = mpe_value(th, spec);
        for (std::size_t m = 0; m < th.num_groups(); ++m)
          constant -= 0.5 * s.weights[static_cast<Index>(m)] *
                      th.group_norm(m) * th.group_norm(m);
        s.constant = constant;
      }
      MarksConditionReport rep = check_marks_conditions(
          s, g_fn, th, n_samples, 0.5, seed + static_cast<std::uint64_t>(a));
      violations += rep.majorization_violations;
      worst_tan = std::max(
          worst_tan, rep.tangency_gap / (1.0 + std::abs(g_fn(th.values))));
      worst_grad = std::max(worst_grad, rep.gradient_gap);
    }
    lines.push_back({"majorization", violations == 0,
                     std::to_string(violations) + " violations"});
    lines.push_back({"tangency", worst_tan <= 1e-12,
                     "worst relative gap " + fmt12(worst_tan)});
    lines.push_back({"gradient_match", worst_grad <= 1e-5,
                     "worst gap " + fmt12(worst_grad)});
  }

  // KKT certificates of the inner solver on random active instances
  {
    CounterRng rng(seed, 17);
    double worst_stat = 0.0, worst_feas = 0.0;
    bool lambda_ok = true;
    for (int t = 0; t < n_kkt; ++t) {
      const Index n = 8 + static_cast<Index>(rng.below(9));
      const Index p = 2 + static_cast<Index>(rng.below(5));
      MatrixXd A(n, p);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) A(i, j) = rng.normal();
      VectorXd y(n);
      for (Index i = 0; i < n; ++i) y[i] = rng.normal() * 2.0;
      VectorXd d(p);
      for (Index j = 0; j < p; ++j) d[j] = std::exp(rng.uniform(-2.0, 2.0));
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
      const VectorXd ls = cod.solve(y);
      const double h_ls = 0.5 * ls.dot(d.cwiseProduct(ls));
      const double c = h_ls * rng.uniform(0.05, 0.8);  // active by design
      if (c <= 0.0) continue;
      SolverOptions opts;
      InnerQclsResult r = inner_qcls_solve(A, y, d, c, opts);
      const double scale = 1.0 + 2.0 * (A.transpose() * y).norm();
      worst_stat = std::max(worst_stat, r.stationarity_residual / scale);
      worst_feas =
          std::max(worst_feas, (r.primal_value - c) / (1.0 + std::abs(c)));
      if (r.lambda < 0.0) lambda_ok = false;
    }
    lines.push_back({"kkt_stationarity", worst_stat <= 1e-8,
                     "worst scaled residual " + fmt12(worst_stat)});
    lines.push_back({"kkt_feasibility", worst_feas <= 1e-8,
                     "worst scaled excess " + fmt12(worst_feas)});
    lines.push_back({"kkt_multiplier_sign", lambda_ok, "lambda >= 0"});
  }

  // global-optimum agreement on small instances
  {
    CounterRng rng(seed, 19);
    int agree = 0;
    bool never_worse = true;
    for (int t = 0; t < n_oracle; ++t) {
      const Index p = 2 + static_cast<Index>(rng.below(3));
      std::vector<Index> sizes =
          (p > 2 && rng.uniform01() < 0.5) ? std::vector<Index>{1, p - 1}
                                           : std::vector<Index>{p};
      const Index n = 40;
      MatrixXd A(n, p);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) A(i, j) = rng.normal();
      VectorXd th_true(p);
      for (Index j = 0; j < p; ++j) th_true[j] = 1.5 * rng.normal();
      VectorXd y = A * th_true;
      for (Index i = 0; i < n; ++i) y[i] += 0.1 * rng.normal();
      MpeConstraintSpec sp;
      sp.q = 0.4;
      sp.tau = 0.2;
      sp.group_sizes = sizes;
      sp.gamma = 1.0;
      const VectorXd ls =
          Eigen::CompleteOrthogonalDecomposition<MatrixXd>(A).solve(y);
      const double m_ls = mpe_value(GroupedVector(ls, sizes), sp);
      sp.gamma = m_ls > 0.0 ? 0.6 * m_ls : 1.0;
      ProblemInstance inst{A, y, sp};
      SolverOptions opts;
      opts.objective_tolerance = 1e-8;
      opts.max_iterations = 200;
      auto [theta, trace] = marks_solve(inst, zeros_like_structure(sizes), opts);
      const double om = (y - A * theta.values).squaredNorm();
      OracleResult orc = oracle_global_solve(
          inst, quick ? 500 : 1000, seed + 31 + static_cast<std::uint64_t>(t),
          {theta.values});
      const double rel =
          (om - orc.best_objective) / std::max(1e-12, orc.best_objective);
      if (rel <= 1e-3) ++agree;
      if (om < orc.best_objective - 1e-9) never_worse = false;
    }
    lines.push_back({"oracle_agreement", agree == n_oracle,
                     std::to_string(agree) + "/" + std::to_string(n_oracle) +
                         " within 1e-3"});
    lines.push_back({"oracle_never_worse", never_worse,
                     "solver never beats the oracle by > 1e-9"});
  }

  bool all = true;
  for (const PropertyLine& l : lines) {
    std::printf("%-22s %s  (%s)\n", l.name.c_str(),
                l.pass ? "PASS" : "FAIL", l.detail.c_str());
    all = all && l.pass;
  }
  return all ? kExitOk : kExitProperties;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group-lq constrained least squares: solver and experiment"};
  app.require_subcommand(1);

  CommonFlags sf, mf;
  CLI::App* solve = app.add_subcommand("solve", "single solve, CSV trace");
  add_common(solve, sf);
  CLI::App* mc = app.add_subcommand("montecarlo", "Monte Carlo experiment");
  add_common(mc, mf);

  CLI::App* verify = app.add_subcommand("verify", "property suite");
  std::uint64_t vseed = 12345;
  bool quick = false;
  double perturb = 1.0;
  verify->add_option("--seed", vseed, "suite seed");
  verify->add_flag("--quick", quick, "reduced sample counts");
  verify->add_option("--perturb-weights", perturb,
                     "scale surrogate weights (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (solve->parsed()) return cmd_solve(sf);
    if (mc->parsed()) return cmd_montecarlo(mf);
    return cmd_verify(vseed, quick, perturb);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
