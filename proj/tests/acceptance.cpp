// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Runs the full simulation study at the documented scales, so expect a
// couple of hours on one core. Progress goes to stderr, results to stdout.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oracle_qp.hpp"
#include "twostage/bootstrap.hpp"
#include "twostage/dataset.hpp"
#include "twostage/diagnostics.hpp"
#include "twostage/simbench.hpp"
#include "twostage/stats.hpp"

using namespace twostage;

namespace {

constexpr std::uint64_t kSeed = 7;

std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

void progress(const std::string& msg) {
  auto dt = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0);
  std::fprintf(stderr, "[%6llds] %s\n", static_cast<long long>(dt.count()), msg.c_str());
  std::fflush(stderr);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Criterion {
  int id = 0;
  bool pass = false;
  std::string detail;
};

std::vector<Criterion> results;

void record(int id, bool pass, const std::string& detail) {
  results.push_back({id, pass, detail});
  progress("criterion " + std::to_string(id) + (pass ? " PASS" : " FAIL"));
}

bool in_band(double v, double lo, double hi) { return v >= lo && v <= hi; }

double global_kkt = 0.0;
void track_kkt(double v) { global_kkt = std::max(global_kkt, v); }

// ---------------------------------------------------------------------------
// Criteria 1-3: estimation error experiments, examples 1-6 at full scale.

std::map<int, MetricsReport> estimation_reports;

void run_estimation_suite() {
  for (int id = 1; id <= 6; ++id) {
    progress("estimation experiment, example " + std::to_string(id));
    ExperimentConfig cfg = ExperimentConfig::example(id);
    cfg.seed = kSeed;
    MetricsReport rep = run_estimation_experiment(cfg);
    track_kkt(rep.max_kkt_violation);
    estimation_reports.emplace(id, std::move(rep));
  }
}

void criterion_1() {
  const auto& est = estimation_reports.at(1).estimation;
  double lmse = est.at("lasso").mse_mean;
  double mmse = est.at("lasso+mls").mse_mean;
  double rmse = est.at("lasso+ridge").mse_mean;
  double lpmse = est.at("lasso").pmse_mean;
  double mpmse = est.at("lasso+mls").pmse_mean;
  bool ok = in_band(lmse, 0.30, 0.55) && in_band(mmse, 0.04, 0.15) &&
            in_band(rmse, 0.04, 0.15) && in_band(lpmse, 1.30, 1.60) &&
            in_band(mpmse, 1.02, 1.16);
  record(1, ok,
         "example-1 error bands: lasso mse " + num(lmse) + " in [0.30,0.55], mls mse " +
             num(mmse) + " in [0.04,0.15], ridge mse " + num(rmse) + " in [0.04,0.15], lasso pmse " +
             num(lpmse) + " in [1.30,1.60], mls pmse " + num(mpmse) + " in [1.02,1.16]");
}

void criterion_2() {
  double m200 = estimation_reports.at(1).estimation.at("lasso+mls").mse_mean;
  double m400 = estimation_reports.at(2).estimation.at("lasso+mls").mse_mean;
  double ratio = m200 / m400;
  bool ok = in_band(m400, 0.015, 0.06) && in_band(ratio, 1.8, 3.5);
  record(2, ok,
         "example-2 mls mse " + num(m400) + " in [0.015,0.06]; n=200/n=400 mse ratio " +
             num(ratio) + " in [1.8,3.5]");
}

void criterion_3() {
  bool ok = true;
  std::string detail = "bias^2 mls <= 0.1 x lasso on examples 1-6:";
  for (int id = 1; id <= 6; ++id) {
    const auto& est = estimation_reports.at(id).estimation;
    double bl = est.at("lasso").bias_sq;
    double bm = est.at("lasso+mls").bias_sq;
    bool this_ok = bm <= 0.1 * bl;
    ok = ok && this_ok;
    detail += " ex" + std::to_string(id) + " " + num(bm) + "/" + num(bl) +
              (this_ok ? "" : " (VIOLATED)");
  }
  record(3, ok, detail);
}

// ---------------------------------------------------------------------------
// Criterion 4: coverage experiment, example 1 at 50 datasets x 300 replicates.

void criterion_4() {
  progress("coverage experiment, example 1 (50 x 300)");
  ExperimentConfig cfg = ExperimentConfig::example(1);
  cfg.seed = kSeed;
  cfg.n_reps = 50;
  cfg.B = 300;
  cfg.level = 0.90;
  MetricsReport rep = run_coverage_experiment(cfg);
  track_kkt(rep.max_kkt_violation);

  const CoverageMetrics& mls = rep.coverage.at("rblmls");
  const CoverageMetrics& las = rep.coverage.at("rbl");
  double c_nz = mls.nonzero_basic.coverage;
  double c_z = mls.zero_basic.coverage;
  double c_lnz = las.nonzero_basic.coverage;
  double len_z = mls.zero_basic.mean_length;
  bool ok = in_band(c_nz, 0.80, 0.95) && c_z >= 0.98 && in_band(c_lnz, 0.60, 0.85) &&
            len_z <= 0.01;
  record(4, ok,
         "90% basic CIs on example 1: rblmls nonzero coverage " + num(c_nz) +
             " in [0.80,0.95], zero coverage " + num(c_z) + " >= 0.98, rbl nonzero coverage " +
             num(c_lnz) + " in [0.60,0.85], rblmls zero mean length " + num(len_z) + " <= 0.01");
}

// ---------------------------------------------------------------------------
// Criterion 5: sign-condition classification over fresh designs.

double holds_rate(int example_id, int n_draws) {
  ExperimentConfig base = ExperimentConfig::example(example_id);
  Eigen::VectorXd beta_star = true_beta(base.beta_case, base.p, base.s);
  std::vector<int> idx;
  Eigen::VectorXd signs(base.s);
  for (int j = 0; j < base.s; ++j) {
    idx.push_back(j);
    signs[j] = sign_of(beta_star[j]);
  }
  SupportSet S(idx, base.p);

  int holds = 0;
  for (int d = 0; d < n_draws; ++d) {
    ExperimentConfig cfg = base;
    cfg.seed = 1000 + static_cast<std::uint64_t>(d);
    RegressionDataset ds;
    ds.X = generate_fixed_design(cfg);
    ds.y = Eigen::VectorXd::Zero(cfg.n);
    ds.standardized = true;
    if (irrepresentable_check(ds, S, signs).holds) ++holds;
  }
  return static_cast<double>(holds) / static_cast<double>(n_draws);
}

void criterion_5() {
  progress("sign-condition classification over fresh designs");
  const int n_draws = 25;
  double h1 = holds_rate(1, n_draws);
  double h2 = holds_rate(2, n_draws);
  double h7 = holds_rate(7, n_draws);
  double h8 = holds_rate(8, n_draws);
  bool ok = h1 >= 0.80 && h2 >= 0.80 && (1.0 - h7) >= 0.60 && (1.0 - h8) >= 0.60;
  record(5, ok,
         "holds rate over " + std::to_string(n_draws) + " designs: ex1 " + num(h1) +
             " >= 0.80, ex2 " + num(h2) + " >= 0.80; violated rate: ex7 " + num(1.0 - h7) +
             " >= 0.60, ex8 " + num(1.0 - h8) + " >= 0.60");
}

// ---------------------------------------------------------------------------
// Criterion 6: normality of the refit draws, center shift of the penalized fit.

void criterion_6() {
  progress("sampling distributions at coordinates 1 and 6 (1000 draws)");
  ExperimentConfig cfg = ExperimentConfig::example(1);
  cfg.seed = kSeed;
  SamplingDraws d = sampling_distribution_draws_multi(cfg, {0, 5}, 1000);
  track_kkt(d.max_kkt_violation);

  auto column = [](const Eigen::MatrixXd& m, int c) {
    return std::vector<double>(m.col(c).begin(), m.col(c).end());
  };
  double q1 = qq_normality_score(column(d.mls, 0));
  double q6 = qq_normality_score(column(d.mls, 1));

  std::vector<double> lasso1 = column(d.lasso, 0);
  double mu = mean(lasso1);
  double se = sample_sd(lasso1) / std::sqrt(static_cast<double>(lasso1.size()));
  double shift = std::abs(mu) / se;
  bool ok = q1 >= 0.995 && q6 >= 0.995 && shift > 3.0;
  record(6, ok,
         "mls qq scores " + num(q1) + ", " + num(q6) +
             " >= 0.995; lasso center shift at coordinate 1 is " + num(shift) + " MC ses > 3");
}

// ---------------------------------------------------------------------------
// Criterion 7: bootstrap consistency trend in the Mallows distance.

double mallows_median_at_n(int n) {
  ExperimentConfig cfg = ExperimentConfig::example(1);
  cfg.seed = kSeed;
  cfg.n = n;
  const int n_draws = 500;
  const int B = 500;

  std::vector<int> coords;
  for (int j = 0; j < cfg.s; ++j) coords.push_back(j);
  progress("sampling draws for n=" + std::to_string(n));
  SamplingDraws draws = sampling_distribution_draws_multi(cfg, coords, n_draws);
  track_kkt(draws.max_kkt_violation);

  // One held-out dataset from the same generator (noise stream id past the
  // sampling draws) carries the bootstrap side.
  const Eigen::MatrixXd X = generate_fixed_design(cfg);
  const Eigen::VectorXd beta_star = true_beta(cfg.beta_case, cfg.p, cfg.s);
  const Eigen::VectorXd mu = X * beta_star;
  const std::uint64_t rep_id = static_cast<std::uint64_t>(n_draws);
  Rng rng = make_stream(cfg.seed, Stream::noise, rep_id);
  RegressionDataset ds;
  ds.X = X;
  ds.standardized = true;
  ds.y.resize(cfg.n);
  for (int i = 0; i < cfg.n; ++i) ds.y[i] = mu[i] + cfg.sigma * rng.normal();

  progress("bootstrap ensemble for n=" + std::to_string(n));
  SelectionConfig sel;
  sel.n_lambda = cfg.n_lambda;
  sel.lambda_ratio = cfg.lambda_ratio;
  sel.cv_folds = cfg.cv_folds;
  sel.solver = cfg.solver;
  Stage2Config s2;
  TwoStageFit tsf = fit_two_stage(ds, sel, s2, derive_seed(cfg.seed, Stream::folds, rep_id));
  track_kkt(tsf.max_kkt_violation);
  Eigen::VectorXd point = tsf.estimate.beta;

  RefitConfig refit;
  refit.lambda = tsf.lambda_used;
  refit.solver = cfg.solver;
  refit.warm_start = tsf.stage1_beta;
  refit.stage2 = s2;
  BootstrapEnsemble ens = bootstrap_ensemble(
      ds, point, refit, B, BootstrapMethod::residual,
      derive_seed(cfg.seed, Stream::bootstrap, rep_id, 0));
  track_kkt(ens.max_kkt_violation);

  std::vector<double> dists;
  for (int c = 0; c < cfg.s; ++c) {
    std::vector<double> side(draws.mls.col(c).begin(), draws.mls.col(c).end());
    dists.push_back(mallows_check(side, ens, coords[c]));
  }
  return median_of(dists);
}

void criterion_7() {
  double m100 = mallows_median_at_n(100);
  double m200 = mallows_median_at_n(200);
  double m400 = mallows_median_at_n(400);
  bool ok = m100 > m200 && m200 > m400;
  record(7, ok,
         "median Mallows distance over true coordinates: n=100 " + num(m100) + " > n=200 " +
             num(m200) + " > n=400 " + num(m400));
}

// ---------------------------------------------------------------------------
// Criterion 8: oracle equivalences.

bool oracle_qp_check(std::string& detail) {
  Rng rng = make_stream(kSeed, Stream::trial, 1);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    int n = 8 + static_cast<int>(rng.below(33));
    int p = 2 + static_cast<int>(rng.below(5));
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal() * 2.0;
    double lambda = 0.5 + 4.0 * rng.uniform01();

    LassoFit fit = fit_lasso(X, y, lambda);
    auto truth = oracle::lasso_by_enumeration(X, y, lambda);
    if (!truth) {
      detail = "oracle produced no certified solution on trial " + std::to_string(t);
      return false;
    }
    worst = std::max(worst, (fit.beta - *truth).cwiseAbs().maxCoeff());
  }
  detail = "solver vs sign-pattern QP oracle, 100 instances, max gap " + num(worst);
  return worst <= 1e-6;
}

bool mls_ols_check(std::string& detail) {
  Rng rng = make_stream(kSeed, Stream::trial, 2);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    int n = 30 + static_cast<int>(rng.below(40));
    int p = 8 + static_cast<int>(rng.below(6));
    RegressionDataset ds;
    ds.X.resize(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) ds.X(i, j) = rng.normal();
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) ds.y[i] = rng.normal();

    std::vector<int> idx;
    for (int j = 0; j < p; ++j)
      if (rng.uniform01() < 0.5) idx.push_back(j);
    if (idx.empty()) idx.push_back(0);
    SupportSet S(idx, p);

    double lam_min = c11_min_eigenvalue(ds, S);
    double tau = 0.9 * std::sqrt(lam_min);
    Eigen::VectorXd mls = fit_mls(ds, S, tau).beta;

    Eigen::MatrixXd Xs(n, S.size());
    for (int a = 0; a < S.size(); ++a) Xs.col(a) = ds.X.col(S.indices()[a]);
    Eigen::VectorXd ols_s =
        (Xs.transpose() * Xs).ldlt().solve(Xs.transpose() * ds.y);
    Eigen::VectorXd ols = Eigen::VectorXd::Zero(p);
    for (int a = 0; a < S.size(); ++a) ols[S.indices()[a]] = ols_s[a];

    worst = std::max(worst, (mls - ols).cwiseAbs().maxCoeff());
  }
  detail = "mls vs normal-equation ols with tau^2 <= lambda_min, 50 instances, max gap " +
           num(worst);
  return worst <= 1e-8;
}

bool reflection_check(std::string& detail) {
  Rng rng = make_stream(kSeed, Stream::trial, 3);
  for (int t = 0; t < 20; ++t) {
    int B = 20 + static_cast<int>(rng.below(100));
    int p = 1 + static_cast<int>(rng.below(7));
    BootstrapEnsemble ens;
    ens.point_beta.resize(p);
    for (int j = 0; j < p; ++j) ens.point_beta[j] = rng.normal();
    ens.replicates.resize(B, p);
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < p; ++j) ens.replicates(b, j) = rng.normal() * 3.0;
    ens.B = B;
    ens.n_rows = 10;

    double level = 0.5 + 0.45 * rng.uniform01();
    IntervalSet basic = confidence_intervals(ens, level, CiKind::basic);
    IntervalSet perc = confidence_intervals(ens, level, CiKind::percentile);
    for (int j = 0; j < p; ++j) {
      if (basic.lower[j] != 2.0 * ens.point_beta[j] - perc.upper[j] ||
          basic.upper[j] != 2.0 * ens.point_beta[j] - perc.lower[j]) {
        detail = "reflection duality broken on trial " + std::to_string(t);
        return false;
      }
    }
  }
  detail = "basic = point-reflected percentile, exactly, on 20 random ensembles";
  return true;
}

void criterion_8() {
  progress("oracle equivalence suite");
  std::string d_a, d_b, d_c;
  bool a = oracle_qp_check(d_a);
  bool b = mls_ols_check(d_b);
  bool c = reflection_check(d_c);
  bool d = global_kkt <= 1e-7;
  std::string d_d = "max stationarity violation across all simulation fits " + num(global_kkt) +
                    " <= 1e-7";
  record(8, a && b && c && d,
         "(a) " + d_a + "; (b) " + d_b + "; (c) " + d_c + "; (d) " + d_d);
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical reports on rerun and across worker counts.

void criterion_9() {
  progress("determinism reruns");
  ExperimentConfig cfg = ExperimentConfig::example(1);
  cfg.seed = kSeed;
  cfg.n_reps = 20;
  MetricsReport a = run_estimation_experiment(cfg);
  MetricsReport b = run_estimation_experiment(cfg);
  ExperimentConfig cfg4 = cfg;
  cfg4.workers = 4;
  MetricsReport c = run_estimation_experiment(cfg4);
  track_kkt(a.max_kkt_violation);

  ExperimentConfig cov = ExperimentConfig::example(1);
  cov.seed = kSeed;
  cov.n = 60;
  cov.p = 40;
  cov.n_reps = 3;
  cov.B = 50;
  cov.n_lambda = 30;
  MetricsReport ca = run_coverage_experiment(cov);
  MetricsReport cb = run_coverage_experiment(cov);
  ExperimentConfig cov4 = cov;
  cov4.workers = 3;
  MetricsReport cc = run_coverage_experiment(cov4);
  track_kkt(ca.max_kkt_violation);

  auto strip = [](MetricsReport r) {
    r.config.workers = 1;
    return r.to_json();
  };
  bool est_rerun = a.to_json() == b.to_json();
  bool est_workers = strip(a) == strip(c);
  bool cov_rerun = ca.to_json() == cb.to_json();
  bool cov_workers = strip(ca) == strip(cc);
  bool ok = est_rerun && est_workers && cov_rerun && cov_workers;
  record(9, ok,
         std::string("estimation rerun ") + (est_rerun ? "identical" : "DIFFERS") +
             ", workers 1 vs 4 " + (est_workers ? "identical" : "DIFFERS") +
             "; coverage rerun " + (cov_rerun ? "identical" : "DIFFERS") +
             ", workers 1 vs 3 " + (cov_workers ? "identical" : "DIFFERS"));
}

void guard(int id, void (*fn)()) {
  try {
    fn();
  } catch (const std::exception& e) {
    record(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  try {
    run_estimation_suite();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "estimation suite failed: %s\n", e.what());
  }
  if (!estimation_reports.empty()) {
    guard(1, criterion_1);
    guard(2, criterion_2);
    guard(3, criterion_3);
  } else {
    record(1, false, "estimation suite did not run");
    record(2, false, "estimation suite did not run");
    record(3, false, "estimation suite did not run");
  }
  guard(4, criterion_4);
  guard(5, criterion_5);
  guard(6, criterion_6);
  guard(7, criterion_7);
  guard(8, criterion_8);
  guard(9, criterion_9);

  int failed = 0;
  for (const Criterion& c : results) {
    std::printf("criterion %d: %s  %s\n", c.id, c.pass ? "PASS" : "FAIL", c.detail.c_str());
    if (!c.pass) ++failed;
  }
  std::printf("acceptance: %d/%d criteria passed\n", static_cast<int>(results.size()) - failed,
              static_cast<int>(results.size()));
  return failed == 0 ? 0 : 1;
}
