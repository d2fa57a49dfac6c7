// Command line front end for the twostage library: penalized fits on CSV
// data, bootstrap confidence intervals, support diagnostics, and the
// simulation benchmarks. Every command writes its resolved settings next to
// its outputs so a run can be reproduced from the output directory alone.

#include <charconv>
#include <clocale>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "twostage/bootstrap.hpp"
#include "twostage/dataset.hpp"
#include "twostage/diagnostics.hpp"
#include "twostage/simbench.hpp"

namespace ts = twostage;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t env_default_seed() {
  const char* env = std::getenv("TWOSTAGE_SEED");
  if (env == nullptr || *env == '\0') return 1;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), v);
  if (ec != std::errc{} || *ptr != '\0')
    throw ts::InvalidConfig("TWOSTAGE_SEED must be a nonnegative integer");
  return v;
}

/// Buffers every output of a command and writes them together, so a failed
/// run leaves either nothing or a complete set behind.
class OutputSet {
 public:
  void add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
  }

  void commit(const fs::path& dir) const {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (const auto& [name, content] : files_) {
      fs::path target = dir / name;
      std::ofstream out(target, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.flush();
      if (!out) {
        for (const fs::path& w : written) fs::remove(w);
        fs::remove(target);
        throw ts::Error("could not write " + target.string());
      }
      written.push_back(target);
    }
    for (const auto& [name, content] : files_) {
      (void)content;
      std::cout << "wrote " << (dir / name).string() << "\n";
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

struct EstimatorSpec {
  ts::SelectorKind selector = ts::SelectorKind::lasso_cv;
  std::optional<ts::Stage2Kind> stage2;  // absent: plain penalized fit
};

EstimatorSpec parse_estimator(const std::string& name, const std::string& lambda_text) {
  EstimatorSpec spec;
  std::string base = name, suffix;
  if (auto pos = name.find('+'); pos != std::string::npos) {
    base = name.substr(0, pos);
    suffix = name.substr(pos + 1);
  }
  if (base == "ss") {
    if (suffix.empty())
      throw ts::InvalidConfig("stability selection needs a second stage: ss+mls or ss+ridge");
    spec.selector = ts::SelectorKind::stability;
  } else if (base == "lasso") {
    spec.selector =
        lambda_text == "cv" ? ts::SelectorKind::lasso_cv : ts::SelectorKind::lasso_fixed;
  } else {
    throw ts::InvalidConfig("unknown estimator: " + name);
  }
  if (!suffix.empty()) {
    if (suffix == "mls")
      spec.stage2 = ts::Stage2Kind::mls;
    else if (suffix == "ridge")
      spec.stage2 = ts::Stage2Kind::ridge;
    else
      throw ts::InvalidConfig("unknown second stage: " + suffix);
  }
  return spec;
}

double parse_lambda_value(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !(v > 0.0))
    throw ts::InvalidConfig("--lambda must be \"cv\" or a positive number, got: " + text);
  return v;
}

/// Options shared by fit, bootstrap and diagnose.
struct FitArgs {
  std::string input;
  std::string response = "0";
  std::string estimator = "lasso+mls";
  std::string lambda = "cv";
  double tau = -1.0;
  double mu = -1.0;
  double zero_tol = 0.0;
  int n_lambda = 100;
  double lambda_ratio = 0.0;
  int cv_folds = 5;
  std::string cv_rule = "1se";
  bool intercept = false;
  std::uint64_t seed = 1;
  std::string out;
  double tol = 1e-7;
  int max_sweeps = 100000;
  ts::StabilityConfig stability;
};

void add_fit_options(CLI::App* cmd, FitArgs& a, bool with_estimator = true) {
  cmd->add_option("--input", a.input, "CSV file with one response column")->required();
  cmd->add_option("--response", a.response,
                  "Response column, by header name or 0-based index (default 0)");
  if (with_estimator) {
    cmd->add_option("--estimator", a.estimator, "One of lasso, lasso+mls, lasso+ridge, ss+mls, ss+ridge")
        ->check(CLI::IsMember({"lasso", "lasso+mls", "lasso+ridge", "ss+mls", "ss+ridge"}));
    cmd->add_option("--tau", a.tau,
                    "Singular value cutoff for the mls refit; negative picks 1/n");
    cmd->add_option("--mu", a.mu, "Ridge level for the ridge refit; negative picks 1/n");
  }
  cmd->add_option("--lambda", a.lambda, "\"cv\" or a fixed positive penalty");
  cmd->add_option("--zero-tol", a.zero_tol, "Support threshold on |beta_j|")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--n-lambda", a.n_lambda, "Penalty grid size for cross validation")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda-ratio", a.lambda_ratio,
                  "Smallest grid penalty as a fraction of the largest; 0 = default");
  cmd->add_option("--cv-folds", a.cv_folds, "Cross validation folds")->check(CLI::Range(2, 1000));
  cmd->add_option("--cv-rule", a.cv_rule,
                  "Grid point taken from cross validation: 1se (one-standard-error, "
                  "sparser) or min (raw minimizer)")
      ->check(CLI::IsMember({"1se", "min"}));
  cmd->add_flag("--intercept", a.intercept, "Center the response and report an intercept");
  cmd->add_option("--seed", a.seed, "RNG seed (falls back to TWOSTAGE_SEED, then 1)");
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--tol", a.tol, "Stationarity tolerance of the solver")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-sweeps", a.max_sweeps, "Coordinate sweep budget per solve")
      ->check(CLI::PositiveNumber);
  if (with_estimator) {
    cmd->add_option("--ss-alpha", a.stability.alpha, "Weakened penalty weight");
    cmd->add_option("--ss-pw", a.stability.p_w, "Probability of the weakened weight");
    cmd->add_option("--ss-draws", a.stability.n_subsamples, "Subsample draws")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--ss-threshold", a.stability.pi_thr, "Selection frequency threshold");
    cmd->add_option("--ss-n-lambda", a.stability.n_lambda, "Grid size of the selection profile")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--ss-lambda-ratio", a.stability.lambda_ratio,
                    "Grid ratio of the selection profile");
    cmd->add_flag("--ss-without-replacement", "Subsample rows without replacement");
  }
}

/// Flags that only modify semantics when given explicitly.
void validate_flag_use(const CLI::App* cmd, const FitArgs& a) {
  EstimatorSpec spec = parse_estimator(a.estimator, a.lambda);
  if (spec.selector == ts::SelectorKind::stability && cmd->count("--lambda") > 0)
    throw ts::InvalidConfig("--lambda does not apply to stability selection");
  if (!spec.stage2) {
    if (cmd->count("--tau") > 0) throw ts::InvalidConfig("--tau needs an mls second stage");
    if (cmd->count("--mu") > 0) throw ts::InvalidConfig("--mu needs a ridge second stage");
  } else if (*spec.stage2 == ts::Stage2Kind::mls && cmd->count("--mu") > 0) {
    throw ts::InvalidConfig("--mu needs a ridge second stage");
  } else if (*spec.stage2 == ts::Stage2Kind::ridge && cmd->count("--tau") > 0) {
    throw ts::InvalidConfig("--tau needs an mls second stage");
  }
}

struct FitResult {
  ts::CsvData data;
  ts::StandardizedData standardized;
  double y_mean = 0.0;  // subtracted from the response iff intercept
  Eigen::VectorXd beta_std;
  Eigen::VectorXd stage1_beta;
  std::optional<ts::TwoStageEstimate> estimate;
  double lambda_used = 0.0;
  std::optional<ts::CvResult> cv;
  double max_kkt = 0.0;
};

ts::CvRule cv_rule_of(const FitArgs& a) {
  return a.cv_rule == "min" ? ts::CvRule::min : ts::CvRule::one_se;
}

FitResult run_fit(const FitArgs& a, bool without_replacement) {
  FitResult r;
  r.data = ts::load_csv(a.input, a.response);
  r.standardized = ts::standardize(r.data.ds);
  if (a.intercept) {
    r.y_mean = r.standardized.ds.y.mean();
    r.standardized.ds.y.array() -= r.y_mean;
  }

  ts::SolverOptions solver;
  solver.tol = a.tol;
  solver.max_sweeps = a.max_sweeps;

  EstimatorSpec spec = parse_estimator(a.estimator, a.lambda);
  if (spec.stage2) {
    ts::SelectionConfig sel;
    sel.kind = spec.selector;
    if (sel.kind == ts::SelectorKind::lasso_fixed) sel.lambda = parse_lambda_value(a.lambda);
    sel.n_lambda = a.n_lambda;
    sel.lambda_ratio = a.lambda_ratio;
    sel.cv_folds = a.cv_folds;
    sel.cv_rule = cv_rule_of(a);
    sel.stability = a.stability;
    sel.stability.with_replacement = !without_replacement;
    sel.zero_tol = a.zero_tol;
    sel.solver = solver;
    ts::Stage2Config s2;
    s2.kind = *spec.stage2;
    s2.tau = a.tau;
    s2.mu = a.mu;
    ts::TwoStageFit fit = ts::fit_two_stage(r.standardized.ds, sel, s2, a.seed);
    r.beta_std = fit.estimate.beta;
    r.stage1_beta = fit.stage1_beta;
    r.estimate = std::move(fit.estimate);
    r.lambda_used = fit.lambda_used;
    r.cv = std::move(fit.cv);
    r.max_kkt = fit.max_kkt_violation;
  } else if (spec.selector == ts::SelectorKind::lasso_cv) {
    ts::CvResult cv;
    ts::LassoFit fit = ts::fit_lasso_cv(r.standardized.ds, a.n_lambda, a.lambda_ratio, a.cv_folds,
                                        a.seed, cv_rule_of(a), solver, &cv);
    r.beta_std = fit.beta;
    r.stage1_beta = fit.beta;
    r.lambda_used = fit.lambda;
    r.max_kkt = std::max(fit.kkt_violation, cv.max_kkt_violation);
    r.cv = std::move(cv);
  } else {
    ts::LassoFit fit = ts::fit_lasso(r.standardized.ds, parse_lambda_value(a.lambda), nullptr, solver);
    r.beta_std = fit.beta;
    r.stage1_beta = fit.beta;
    r.lambda_used = fit.lambda;
    r.max_kkt = fit.kkt_violation;
  }
  return r;
}

ordered_json fit_config_json(const char* command, const FitArgs& a, bool without_replacement) {
  ordered_json j;
  j["command"] = command;
  j["input"] = a.input;
  j["response"] = a.response;
  j["estimator"] = a.estimator;
  j["lambda"] = a.lambda;
  j["tau"] = a.tau;
  j["mu"] = a.mu;
  j["zero_tol"] = a.zero_tol;
  j["n_lambda"] = a.n_lambda;
  j["lambda_ratio"] = a.lambda_ratio;
  j["cv_folds"] = a.cv_folds;
  j["cv_rule"] = a.cv_rule;
  j["intercept"] = a.intercept;
  j["seed"] = a.seed;
  j["tol"] = a.tol;
  j["max_sweeps"] = a.max_sweeps;
  EstimatorSpec spec = parse_estimator(a.estimator, a.lambda);
  if (spec.selector == ts::SelectorKind::stability) {
    ordered_json ss;
    ss["alpha"] = a.stability.alpha;
    ss["p_w"] = a.stability.p_w;
    ss["n_subsamples"] = a.stability.n_subsamples;
    ss["pi_thr"] = a.stability.pi_thr;
    ss["n_lambda"] = a.stability.n_lambda;
    ss["lambda_ratio"] = a.stability.lambda_ratio;
    ss["with_replacement"] = !without_replacement;
    j["stability"] = ss;
  }
  return j;
}

ordered_json coefficients_json(const FitArgs& a, const FitResult& r) {
  const Eigen::VectorXd& beta_std = r.beta_std;
  auto [beta_orig, offset] = r.standardized.transform.to_original(beta_std);

  ts::SupportSet support =
      r.estimate ? r.estimate->support : ts::extract_support(beta_std, a.zero_tol);

  ordered_json j;
  j["estimator"] = a.estimator;
  j["n"] = r.standardized.ds.n();
  j["p"] = r.standardized.ds.p();
  j["response"] = r.data.response_name;
  j["lambda"] = r.lambda_used;
  if (r.cv) {
    ordered_json cv;
    cv["lambda_min"] = r.cv->lambda_min;
    cv["lambda_min_index"] = r.cv->lambda_min_index;
    cv["lambda_1se"] = r.cv->lambda_1se;
    cv["lambda_1se_index"] = r.cv->lambda_1se_index;
    cv["folds"] = r.cv->k;
    cv["grid"] = r.cv->grid.values;
    cv["cv_mean"] = r.cv->cv_mean;
    cv["cv_se"] = r.cv->cv_se;
    j["cv"] = cv;
  } else {
    j["cv"] = nullptr;
  }
  std::vector<std::string> names;
  for (int k : support.indices()) names.push_back(r.data.predictor_names[k]);
  j["support"] = names;
  j["support_indices"] = support.indices();
  j["coefficients_standardized"] = std::vector<double>(beta_std.begin(), beta_std.end());
  j["coefficients"] = std::vector<double>(beta_orig.begin(), beta_orig.end());
  j["intercept"] = offset + r.y_mean;
  if (r.estimate) {
    ordered_json s2;
    s2["kind"] = r.estimate->kind == ts::Stage2Kind::mls ? "mls" : "ridge";
    if (r.estimate->kind == ts::Stage2Kind::mls) {
      s2["tau"] = r.estimate->tau;
      s2["kept_rank"] = r.estimate->kept_rank;
    } else {
      s2["mu"] = r.estimate->mu;
    }
    j["stage2"] = s2;
  } else {
    j["stage2"] = nullptr;
  }
  j["max_kkt_violation"] = r.max_kkt;
  return j;
}

int cmd_fit(const CLI::App* cmd, FitArgs& a) {
  validate_flag_use(cmd, a);
  bool no_repl = cmd->count("--ss-without-replacement") > 0;
  FitResult r = run_fit(a, no_repl);

  OutputSet out;
  out.add("config.json", fit_config_json("fit", a, no_repl).dump(2) + "\n");
  out.add("coefficients.json", coefficients_json(a, r).dump(2) + "\n");
  out.commit(a.out);
  return 0;
}

int cmd_bootstrap(const CLI::App* cmd, FitArgs& a, int B, double level, const std::string& ci,
                  const std::string& method_name, bool re_cv, int workers) {
  validate_flag_use(cmd, a);
  bool no_repl = cmd->count("--ss-without-replacement") > 0;
  FitResult r = run_fit(a, no_repl);

  ts::RefitConfig refit;
  refit.lambda = r.lambda_used;
  refit.re_cv = re_cv;
  refit.n_lambda = a.n_lambda;
  refit.lambda_ratio = a.lambda_ratio;
  refit.cv_folds = a.cv_folds;
  refit.cv_rule = cv_rule_of(a);
  if (r.estimate) {
    ts::Stage2Config s2;
    s2.kind = r.estimate->kind;
    s2.tau = a.tau;
    s2.mu = a.mu;
    refit.stage2 = s2;
  }
  refit.zero_tol = a.zero_tol;
  refit.solver.tol = a.tol;
  refit.solver.max_sweeps = a.max_sweeps;
  refit.warm_start = r.stage1_beta;

  ts::BootstrapMethod method =
      method_name == "paired" ? ts::BootstrapMethod::paired : ts::BootstrapMethod::residual;
  ts::BootstrapEnsemble ens = ts::bootstrap_ensemble(r.standardized.ds, r.beta_std, refit, B,
                                                     method, a.seed, workers);

  const auto& names = r.data.predictor_names;
  const Eigen::VectorXd& scales = r.standardized.transform.scales;
  auto [beta_orig, offset] = r.standardized.transform.to_original(r.beta_std);

  std::string ens_csv = "replicate";
  for (const auto& nm : names) ens_csv += "," + nm;
  ens_csv += ",intercept\n";
  {
    std::size_t next_failed = 0;
    int row = 0;
    for (int b = 0; b < ens.B; ++b) {
      if (next_failed < ens.failed.size() && ens.failed[next_failed] == b) {
        ++next_failed;
        continue;
      }
      ens_csv += std::to_string(b);
      auto [rep_orig, rep_offset] =
          r.standardized.transform.to_original(ens.replicates.row(row).transpose());
      for (int j = 0; j < rep_orig.size(); ++j) ens_csv += "," + fmt17(rep_orig[j]);
      ens_csv += "," + fmt17(rep_offset + r.y_mean) + "\n";
      ++row;
    }
  }

  std::string int_csv = "predictor,kind,level,estimate,lower,upper\n";
  std::vector<ts::CiKind> kinds;
  if (ci == "basic" || ci == "both") kinds.push_back(ts::CiKind::basic);
  if (ci == "percentile" || ci == "both") kinds.push_back(ts::CiKind::percentile);
  for (ts::CiKind kind : kinds) {
    ts::IntervalSet s = ts::confidence_intervals(ens, level, kind);
    const char* kind_name = kind == ts::CiKind::basic ? "basic" : "percentile";
    for (int j = 0; j < r.standardized.ds.p(); ++j) {
      int_csv += names[j];
      int_csv += ",";
      int_csv += kind_name;
      int_csv += "," + fmt17(level) + "," + fmt17(beta_orig[j]) + "," +
                 fmt17(s.lower[j] / scales[j]) + "," + fmt17(s.upper[j] / scales[j]) + "\n";
    }
  }

  ordered_json cfg = fit_config_json("bootstrap", a, no_repl);
  cfg["B"] = B;
  cfg["level"] = level;
  cfg["ci"] = ci;
  cfg["method"] = method_name;
  cfg["re_cv"] = re_cv;
  cfg["workers"] = workers;

  ordered_json coef = coefficients_json(a, r);
  coef["bootstrap"] = {{"B", ens.B},
                       {"method", method_name},
                       {"n_failed", ens.failed.size()},
                       {"failed_replicates", ens.failed}};
  coef["max_kkt_violation"] = std::max(r.max_kkt, ens.max_kkt_violation);

  OutputSet out;
  out.add("config.json", cfg.dump(2) + "\n");
  out.add("coefficients.json", coef.dump(2) + "\n");
  out.add("ensemble.csv", std::move(ens_csv));
  out.add("intervals.csv", std::move(int_csv));
  out.commit(a.out);
  return 0;
}

int cmd_diagnose(const FitArgs& a, double sparse_k, int sparse_trials, bool sparse_exact) {
  FitArgs plain = a;
  plain.estimator = "lasso";
  FitResult r = run_fit(plain, false);

  ts::SupportSet support = ts::extract_support(r.beta_std, a.zero_tol);
  ordered_json j;
  j["lambda"] = r.lambda_used;
  std::vector<std::string> names;
  std::vector<double> signs_out;
  for (int k : support.indices()) {
    names.push_back(r.data.predictor_names[k]);
    signs_out.push_back(ts::sign_of(r.beta_std[k]));
  }
  j["support"] = names;
  j["support_indices"] = support.indices();
  j["signs"] = signs_out;

  if (!support.empty()) {
    Eigen::VectorXd signs(support.size());
    for (int i = 0; i < support.size(); ++i) signs[i] = signs_out[static_cast<std::size_t>(i)];
    try {
      ts::IcReport ic = ts::irrepresentable_check(r.standardized.ds, support, signs);
      ordered_json ij;
      ij["holds"] = ic.holds;
      ij["eta_min"] = ic.eta_min;
      ordered_json margins = ordered_json::array();
      for (std::size_t i = 0; i < ic.checked.size(); ++i) {
        margins.push_back({{"predictor", r.data.predictor_names[ic.checked[i]]},
                           {"margin", ic.margins[static_cast<int>(i)]}});
      }
      ij["margins"] = margins;
      j["irrepresentable"] = ij;
    } catch (const ts::SingularC11&) {
      j["irrepresentable"] = {{"c11_singular", true}};
    }
    j["c11_min_eigenvalue"] = ts::c11_min_eigenvalue(r.standardized.ds, support);
    j["support_row_mass"] = ts::support_row_mass(r.standardized.ds, support);
  } else {
    j["irrepresentable"] = nullptr;
    j["c11_min_eigenvalue"] = nullptr;
    j["support_row_mass"] = nullptr;
  }

  if (sparse_k > 0.0) {
    ts::SparseEigenvalueEstimate se = ts::sparse_eigenvalue_estimate(
        r.standardized.ds.X, sparse_k, sparse_trials, a.seed, sparse_exact);
    j["sparse_singular_values"] = {{"subset_size", se.subset_size},
                                   {"phi_min", se.phi_min},
                                   {"phi_max", se.phi_max},
                                   {"exact", se.exact},
                                   {"n_trials", se.n_trials}};
  } else {
    j["sparse_singular_values"] = nullptr;
  }
  j["max_kkt_violation"] = r.max_kkt;

  ordered_json cfg = fit_config_json("diagnose", a, false);
  cfg.erase("estimator");
  cfg.erase("tau");
  cfg.erase("mu");
  cfg["sparse_k"] = sparse_k;
  cfg["sparse_trials"] = sparse_trials;
  cfg["sparse_exact"] = sparse_exact;

  OutputSet out;
  out.add("config.json", cfg.dump(2) + "\n");
  out.add("diagnostics.json", j.dump(2) + "\n");
  out.commit(a.out);
  return 0;
}

/// Desk-scale overrides applied on top of a canonical example setting.
struct BenchArgs {
  int example = 1;
  int n = 0, p = 0, reps = 0, test_size = 0, n_lambda = 0, B = 0, cv_folds = 0;
  double sigma = -1.0, level = 0.0, lambda_ratio = -1.0;
  std::uint64_t seed = 1;
  int workers = 1;
  double tol = 1e-7;
  int max_sweeps = 100000;
  std::string out;
};

void add_bench_options(CLI::App* cmd, BenchArgs& a, bool coverage) {
  cmd->add_option("--example", a.example, "Canonical setting id, 1 through 8")
      ->required()
      ->check(CLI::Range(1, 8));
  cmd->add_option("--n", a.n, "Override the sample size")->check(CLI::PositiveNumber);
  cmd->add_option("--p", a.p, "Override the predictor count")->check(CLI::PositiveNumber);
  cmd->add_option("--reps", a.reps, "Override the replicate count")->check(CLI::PositiveNumber);
  cmd->add_option("--sigma", a.sigma, "Override the noise level")->check(CLI::NonNegativeNumber);
  if (!coverage)
    cmd->add_option("--test-size", a.test_size, "Override the held-out rows")
        ->check(CLI::PositiveNumber);
  if (coverage) {
    cmd->add_option("--B", a.B, "Override the bootstrap replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--level", a.level, "Override the interval level");
  }
  cmd->add_option("--n-lambda", a.n_lambda, "Override the penalty grid size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda-ratio", a.lambda_ratio, "Override the grid ratio");
  cmd->add_option("--cv-folds", a.cv_folds, "Override the fold count")->check(CLI::Range(2, 1000));
  cmd->add_option("--seed", a.seed, "RNG seed (falls back to TWOSTAGE_SEED, then 1)");
  cmd->add_option("--workers", a.workers, "Worker threads; results do not depend on this")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", a.tol, "Stationarity tolerance of the solver")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-sweeps", a.max_sweeps, "Coordinate sweep budget per solve")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "Output directory")->required();
}

// count() would throw for options that only one bench subcommand defines.
bool given(const CLI::App* cmd, const std::string& name) {
  const CLI::Option* opt = cmd->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

ts::ExperimentConfig bench_config(const CLI::App* cmd, const BenchArgs& a) {
  ts::ExperimentConfig cfg = ts::ExperimentConfig::example(a.example);
  if (given(cmd, "--n")) cfg.n = a.n;
  if (given(cmd, "--p")) cfg.p = a.p;
  if (given(cmd, "--reps")) cfg.n_reps = a.reps;
  if (given(cmd, "--sigma")) cfg.sigma = a.sigma;
  if (given(cmd, "--test-size")) cfg.test_size = a.test_size;
  if (given(cmd, "--B")) cfg.B = a.B;
  if (given(cmd, "--level")) cfg.level = a.level;
  if (given(cmd, "--n-lambda")) cfg.n_lambda = a.n_lambda;
  if (given(cmd, "--lambda-ratio")) cfg.lambda_ratio = a.lambda_ratio;
  if (given(cmd, "--cv-folds")) cfg.cv_folds = a.cv_folds;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  cfg.solver.tol = a.tol;
  cfg.solver.max_sweeps = a.max_sweeps;
  return cfg;
}

int cmd_simulate(const CLI::App* cmd, const BenchArgs& a) {
  ts::ExperimentConfig cfg = bench_config(cmd, a);
  ts::MetricsReport rep = ts::run_estimation_experiment(cfg);
  for (const auto& [name, m] : rep.estimation) {
    std::cout << name << ": bias_sq=" << fmt17(m.bias_sq) << " mse=" << fmt17(m.mse_mean)
              << " pmse=" << fmt17(m.pmse_mean) << "\n";
  }
  OutputSet out;
  out.add("metrics.json", rep.to_json() + "\n");
  out.add("metrics.csv", rep.to_csv_long());
  out.commit(a.out);
  return 0;
}

int cmd_coverage(const CLI::App* cmd, const BenchArgs& a) {
  ts::ExperimentConfig cfg = bench_config(cmd, a);
  ts::MetricsReport rep = ts::run_coverage_experiment(cfg);
  for (const auto& [name, m] : rep.coverage) {
    std::cout << name << ": nonzero basic " << fmt17(m.nonzero_basic.coverage) << " zero basic "
              << fmt17(m.zero_basic.coverage) << "\n";
  }
  OutputSet out;
  out.add("metrics.json", rep.to_json() + "\n");
  out.add("metrics.csv", rep.to_csv_long());
  out.commit(a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");

  CLI::App app{"Two-stage sparse regression: penalized fits, support refits, bootstrap"
               " intervals, and simulation benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "twostage 0.1.0");
  app.set_config("--config", "", "Read options from an INI/TOML file");

  FitArgs fit_args, boot_args, diag_args;
  BenchArgs sim_args, cov_args;

  CLI::App* fit = app.add_subcommand("fit", "Fit one estimator on a CSV dataset");
  add_fit_options(fit, fit_args);

  CLI::App* boot = app.add_subcommand("bootstrap", "Bootstrap confidence intervals on a CSV dataset");
  add_fit_options(boot, boot_args);
  int B = 500, boot_workers = 1;
  double level = 0.90;
  std::string ci = "both", boot_method = "residual";
  bool re_cv = false;
  boot->add_option("--B", B, "Bootstrap replicates")->check(CLI::PositiveNumber);
  boot->add_option("--level", level, "Interval level, e.g. 0.9");
  boot->add_option("--ci", ci, "Interval kind")->check(CLI::IsMember({"basic", "percentile", "both"}));
  boot->add_option("--method", boot_method, "Resampling scheme")
      ->check(CLI::IsMember({"residual", "paired"}));
  boot->add_flag("--re-cv", re_cv, "Re-run cross validation inside every replicate");
  boot->add_option("--workers", boot_workers, "Worker threads; results do not depend on this")
      ->check(CLI::PositiveNumber);

  CLI::App* diag = app.add_subcommand("diagnose", "Support and design diagnostics on a CSV dataset");
  add_fit_options(diag, diag_args, /*with_estimator=*/false);
  double sparse_k = 0.0;
  int sparse_trials = 200;
  bool sparse_exact = false;
  diag->add_option("--sparse-k", sparse_k, "Subset size for extreme sparse singular values; 0 = off")
      ->check(CLI::NonNegativeNumber);
  diag->add_option("--sparse-trials", sparse_trials, "Random subsets to try")
      ->check(CLI::PositiveNumber);
  diag->add_flag("--sparse-exact", sparse_exact, "Enumerate all subsets (p <= 20)");

  CLI::App* sim = app.add_subcommand("simulate", "Estimation error benchmark on simulated data");
  add_bench_options(sim, sim_args, /*coverage=*/false);

  CLI::App* cov = app.add_subcommand("coverage", "Interval coverage benchmark on simulated data");
  add_bench_options(cov, cov_args, /*coverage=*/true);

  try {
    std::uint64_t env_seed = env_default_seed();
    fit_args.seed = boot_args.seed = diag_args.seed = env_seed;
    sim_args.seed = cov_args.seed = env_seed;

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      int rc = app.exit(e);
      return rc == 0 ? 0 : 2;
    }

    if (fit->parsed()) return cmd_fit(fit, fit_args);
    if (boot->parsed())
      return cmd_bootstrap(boot, boot_args, B, level, ci, boot_method, re_cv, boot_workers);
    if (diag->parsed()) return cmd_diagnose(diag_args, sparse_k, sparse_trials, sparse_exact);
    if (sim->parsed()) return cmd_simulate(sim, sim_args);
    if (cov->parsed()) return cmd_coverage(cov, cov_args);
    return 2;
  } catch (const ts::ParseError& e) {
    std::cerr << "error: " << e.what() << " (row " << e.row << ", column " << e.column << ")\n";
    return 2;
  } catch (const ts::ZeroVarianceColumn& e) {
    std::cerr << "error: " << e.what() << " (column " << e.column << ")\n";
    return 2;
  } catch (const ts::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ts::InvalidRatio& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ts::TooFewSamples& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ts::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
