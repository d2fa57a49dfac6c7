#include "twostage/simbench.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "twostage/dataset.hpp"
#include "twostage/parallel.hpp"
#include "twostage/rng.hpp"
#include "twostage/stats.hpp"

namespace twostage {

using nlohmann::json;

ExperimentConfig ExperimentConfig::example(int id) {
  if (id < 1 || id > 8) throw InvalidConfig("ExperimentConfig::example: id must lie in 1..8");
  ExperimentConfig cfg;
  cfg.example_id = id;
  cfg.p = 500;
  cfg.s = 10;
  cfg.sigma = 1.0;
  // Eight settings: n alternates 200/400, correlation and sign pattern
  // switch in blocks of two.
  cfg.n = (id % 2 == 1) ? 200 : 400;
  cfg.rho = (id == 3 || id == 4 || id == 7 || id == 8) ? 0.5 : 0.0;
  cfg.beta_case = (id >= 5) ? 2 : 1;
  return cfg;
}

Eigen::MatrixXd toeplitz_covariance(int p, double rho) {
  if (p < 1) throw InvalidConfig("toeplitz_covariance: p must be positive");
  if (!(rho > -1.0 && rho < 1.0))
    throw InvalidConfig("toeplitz_covariance: rho must lie in (-1, 1)");
  Eigen::MatrixXd S(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) S(i, j) = std::pow(rho, std::abs(i - j));
  return S;
}

Eigen::VectorXd true_beta(const std::vector<double>& magnitudes, int p) {
  if (static_cast<int>(magnitudes.size()) > p)
    throw InvalidConfig("true_beta: more magnitudes than coordinates");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < magnitudes.size(); ++i) beta[static_cast<int>(i)] = magnitudes[i];
  return beta;
}

Eigen::VectorXd true_beta(int beta_case, int p, int s) {
  if (s != 10) throw InvalidConfig("true_beta: canonical patterns require s == 10");
  if (p < s) throw InvalidConfig("true_beta: p < s");
  if (beta_case == 1)
    return true_beta({1.5, 1.5, 1.5, 1.5, 1.5, 0.75, 0.75, 0.75, 0.75, 0.75}, p);
  if (beta_case == 2)
    return true_beta({1.5, 1.5, -1.5, -1.5, 1.5, 0.75, -0.75, 0.75, -0.75, -0.75}, p);
  throw InvalidConfig("true_beta: beta_case must be 1 or 2");
}

namespace {

// Lower Cholesky factor of the covariance, or empty for identity.
Eigen::MatrixXd correlation_factor(int p, double rho) {
  if (rho == 0.0) return Eigen::MatrixXd();
  Eigen::LLT<Eigen::MatrixXd> llt(toeplitz_covariance(p, rho));
  if (llt.info() != Eigen::Success)
    throw FactorizationFailure("correlation_factor: covariance is not positive definite");
  return llt.matrixL();
}

// Row-by-row standard normal fill, then the correlation factor.
Eigen::MatrixXd gaussian_rows(int n, int p, const Eigen::MatrixXd& L, Rng& rng) {
  Eigen::MatrixXd Z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) Z(i, j) = rng.normal();
  if (L.size() == 0) return Z;
  return Z * L.transpose();
}

}  // namespace

Eigen::MatrixXd generate_fixed_design(const ExperimentConfig& cfg) {
  Rng rng = make_stream(cfg.seed, Stream::design, static_cast<std::uint64_t>(cfg.example_id));
  Eigen::MatrixXd L = correlation_factor(cfg.p, cfg.rho);
  Eigen::MatrixXd X = gaussian_rows(cfg.n, cfg.p, L, rng);
  RegressionDataset raw;
  raw.X = std::move(X);
  raw.y = Eigen::VectorXd::Zero(cfg.n);
  return standardize(raw).ds.X;
}

TestSet generate_test_set(const ExperimentConfig& cfg, const Eigen::VectorXd& beta_star) {
  if (beta_star.size() != cfg.p) throw DimensionMismatch("generate_test_set: beta length != p");
  Rng rng = make_stream(cfg.seed, Stream::test_set, static_cast<std::uint64_t>(cfg.example_id));
  Eigen::MatrixXd L = correlation_factor(cfg.p, cfg.rho);
  TestSet ts;
  ts.X = gaussian_rows(cfg.test_size, cfg.p, L, rng);
  ts.y = ts.X * beta_star;
  for (int i = 0; i < cfg.test_size; ++i) ts.y[i] += cfg.sigma * rng.normal();
  return ts;
}

std::string method_name(BenchMethod m) {
  switch (m) {
    case BenchMethod::lasso:
      return "lasso";
    case BenchMethod::lasso_mls:
      return "lasso+mls";
    case BenchMethod::lasso_ridge:
      return "lasso+ridge";
  }
  throw InvalidConfig("method_name: unknown method");
}

namespace {

void config_to_json(const ExperimentConfig& c, json& j) {
  j["example_id"] = c.example_id;
  j["n"] = c.n;
  j["p"] = c.p;
  j["s"] = c.s;
  j["rho"] = c.rho;
  j["beta_case"] = c.beta_case;
  j["sigma"] = c.sigma;
  j["n_reps"] = c.n_reps;
  j["B"] = c.B;
  j["level"] = c.level;
  j["test_size"] = c.test_size;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["n_lambda"] = c.n_lambda;
  j["lambda_ratio"] = c.lambda_ratio;
  j["cv_folds"] = c.cv_folds;
  j["tol"] = c.solver.tol;
  j["max_sweeps"] = c.solver.max_sweeps;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.example_id = j.at("example_id").get<int>();
  c.n = j.at("n").get<int>();
  c.p = j.at("p").get<int>();
  c.s = j.at("s").get<int>();
  c.rho = j.at("rho").get<double>();
  c.beta_case = j.at("beta_case").get<int>();
  c.sigma = j.at("sigma").get<double>();
  c.n_reps = j.at("n_reps").get<int>();
  c.B = j.at("B").get<int>();
  c.level = j.at("level").get<double>();
  c.test_size = j.at("test_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.workers = j.at("workers").get<int>();
  c.n_lambda = j.at("n_lambda").get<int>();
  c.lambda_ratio = j.at("lambda_ratio").get<double>();
  c.cv_folds = j.at("cv_folds").get<int>();
  c.solver.tol = j.at("tol").get<double>();
  c.solver.max_sweeps = j.at("max_sweeps").get<int>();
  return c;
}

}  // namespace

std::string MetricsReport::to_json() const {
  json j;
  config_to_json(config, j["config"]);
  for (const auto& [name, m] : estimation) {
    json e;
    e["bias_sq"] = m.bias_sq;
    e["mse_mean"] = m.mse_mean;
    e["mse_sd"] = m.mse_sd;
    e["pmse_mean"] = m.pmse_mean;
    e["pmse_sd"] = m.pmse_sd;
    j["estimation"][name] = e;
  }
  for (const auto& [name, m] : coverage) {
    json c;
    c["nonzero_basic"] = {{"coverage", m.nonzero_basic.coverage},
                          {"mean_length", m.nonzero_basic.mean_length}};
    c["zero_basic"] = {{"coverage", m.zero_basic.coverage},
                       {"mean_length", m.zero_basic.mean_length}};
    c["nonzero_percentile"] = {{"coverage", m.nonzero_percentile.coverage},
                               {"mean_length", m.nonzero_percentile.mean_length}};
    c["zero_percentile"] = {{"coverage", m.zero_percentile.coverage},
                            {"mean_length", m.zero_percentile.mean_length}};
    j["coverage"][name] = c;
  }
  j["max_kkt_violation"] = max_kkt_violation;
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  json j = json::parse(text);
  MetricsReport rep;
  rep.config = config_from_json(j.at("config"));
  if (j.contains("estimation")) {
    for (auto it = j["estimation"].begin(); it != j["estimation"].end(); ++it) {
      EstimationMetrics m;
      m.bias_sq = it.value().at("bias_sq").get<double>();
      m.mse_mean = it.value().at("mse_mean").get<double>();
      m.mse_sd = it.value().at("mse_sd").get<double>();
      m.pmse_mean = it.value().at("pmse_mean").get<double>();
      m.pmse_sd = it.value().at("pmse_sd").get<double>();
      rep.estimation[it.key()] = m;
    }
  }
  if (j.contains("coverage")) {
    for (auto it = j["coverage"].begin(); it != j["coverage"].end(); ++it) {
      CoverageMetrics m;
      auto grp = [&](const char* key) {
        CoverageGroup g;
        g.coverage = it.value().at(key).at("coverage").get<double>();
        g.mean_length = it.value().at(key).at("mean_length").get<double>();
        return g;
      };
      m.nonzero_basic = grp("nonzero_basic");
      m.zero_basic = grp("zero_basic");
      m.nonzero_percentile = grp("nonzero_percentile");
      m.zero_percentile = grp("zero_percentile");
      rep.coverage[it.key()] = m;
    }
  }
  rep.max_kkt_violation = j.at("max_kkt_violation").get<double>();
  return rep;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string MetricsReport::to_csv_long() const {
  std::ostringstream out;
  out << "method,example,metric,group,value\n";
  const std::string ex = std::to_string(config.example_id);
  for (const auto& [name, m] : estimation) {
    out << name << "," << ex << ",bias_sq,," << fmt17(m.bias_sq) << "\n";
    out << name << "," << ex << ",mse_mean,," << fmt17(m.mse_mean) << "\n";
    out << name << "," << ex << ",mse_sd,," << fmt17(m.mse_sd) << "\n";
    out << name << "," << ex << ",pmse_mean,," << fmt17(m.pmse_mean) << "\n";
    out << name << "," << ex << ",pmse_sd,," << fmt17(m.pmse_sd) << "\n";
  }
  for (const auto& [name, m] : coverage) {
    auto row = [&](const char* group, const CoverageGroup& g) {
      out << name << "," << ex << ",coverage," << group << "," << fmt17(g.coverage) << "\n";
      out << name << "," << ex << ",mean_length," << group << "," << fmt17(g.mean_length)
          << "\n";
    };
    row("nonzero_basic", m.nonzero_basic);
    row("zero_basic", m.zero_basic);
    row("nonzero_percentile", m.nonzero_percentile);
    row("zero_percentile", m.zero_percentile);
  }
  out << "all," << ex << ",max_kkt_violation,," << fmt17(max_kkt_violation) << "\n";
  return out.str();
}

namespace {

struct RepFits {
  Eigen::VectorXd y;
  Eigen::VectorXd lasso;       // penalized estimate at its own penalty
  Eigen::VectorXd stage1;      // penalized fit at the refit-curve penalty
  Eigen::VectorXd mls, ridge;  // refits on stage1's support
  double lambda_lasso = 0.0;
  double lambda_refit = 0.0;
  double max_kkt = 0.0;
};

// Shared per-replicate work: noise, joint cross validation, the penalized
// fit at its own penalty and both refits at the refit-curve penalty. The
// curves bottom out far apart, so each method gets its own tuning.
RepFits fit_replicate(const ExperimentConfig& cfg, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& mu, int rep) {
  const int n = cfg.n;
  Rng rng = make_stream(cfg.seed, Stream::noise, static_cast<std::uint64_t>(rep));
  RegressionDataset ds;
  ds.X = X;
  ds.standardized = true;
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) ds.y[i] = mu[i] + cfg.sigma * rng.normal();

  std::uint64_t cv_seed = derive_seed(cfg.seed, Stream::folds, static_cast<std::uint64_t>(rep));
  LambdaGrid grid = lambda_grid(ds, cfg.n_lambda, cfg.lambda_ratio);
  PathCv cv = cross_validate_with_refit(ds, grid, cfg.cv_folds, cv_seed, cfg.solver);

  const int idx_lasso = cv.lasso.selected_index(CvRule::one_se);
  const int idx_refit = cv.refit.selected_index(CvRule::one_se);

  RepFits out;
  out.max_kkt = cv.lasso.max_kkt_violation;
  out.lambda_lasso = grid.values[idx_lasso];
  out.lambda_refit = grid.values[idx_refit];

  // One warm path down to the deeper of the two selections covers both.
  const Eigen::VectorXd* warm = nullptr;
  Eigen::VectorXd warm_beta;
  for (int l = 0; l <= std::max(idx_lasso, idx_refit); ++l) {
    LassoFit fit = fit_lasso(ds, grid.values[l], warm, cfg.solver);
    out.max_kkt = std::max(out.max_kkt, fit.kkt_violation);
    if (l == idx_lasso) out.lasso = fit.beta;
    if (l == idx_refit) out.stage1 = fit.beta;
    warm_beta = std::move(fit.beta);
    warm = &warm_beta;
  }

  SupportSet S = extract_support(out.stage1, 0.0);
  out.mls = fit_mls(ds, S, -1.0).beta;
  out.ridge = fit_ridge_after(ds, S, -1.0).beta;
  out.y = std::move(ds.y);
  return out;
}

double pmse_of(const TestSet& ts, const Eigen::VectorXd& beta) {
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(ts.X.rows());
  for (int j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) pred += beta[j] * ts.X.col(j);
  }
  return (ts.y - pred).squaredNorm() / static_cast<double>(ts.X.rows());
}

}  // namespace

MetricsReport run_estimation_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_reps < 2) throw InvalidConfig("run_estimation_experiment: need n_reps >= 2");
  const Eigen::MatrixXd X = generate_fixed_design(cfg);
  const Eigen::VectorXd beta_star = true_beta(cfg.beta_case, cfg.p, cfg.s);
  const Eigen::VectorXd mu = X * beta_star;
  const TestSet ts = generate_test_set(cfg, beta_star);

  std::vector<RepFits> fits(cfg.n_reps);
  parallel_for(cfg.n_reps, cfg.workers,
               [&](int r) { fits[r] = fit_replicate(cfg, X, mu, r); });

  MetricsReport rep;
  rep.config = cfg;

  const std::vector<BenchMethod> methods = {BenchMethod::lasso, BenchMethod::lasso_mls,
                                            BenchMethod::lasso_ridge};
  for (BenchMethod m : methods) {
    Eigen::VectorXd mean_beta = Eigen::VectorXd::Zero(cfg.p);
    std::vector<double> errs(cfg.n_reps), pmses(cfg.n_reps);
    for (int r = 0; r < cfg.n_reps; ++r) {
      const Eigen::VectorXd& b = (m == BenchMethod::lasso)       ? fits[r].lasso
                                 : (m == BenchMethod::lasso_mls) ? fits[r].mls
                                                                 : fits[r].ridge;
      mean_beta += b;
      errs[r] = (b - beta_star).squaredNorm();
      pmses[r] = pmse_of(ts, b);
    }
    mean_beta /= static_cast<double>(cfg.n_reps);

    EstimationMetrics em;
    em.bias_sq = (mean_beta - beta_star).squaredNorm();
    em.mse_mean = mean(errs);
    em.mse_sd = sample_sd(errs);
    em.pmse_mean = mean(pmses);
    em.pmse_sd = sample_sd(pmses);
    rep.estimation[method_name(m)] = em;
  }

  for (int r = 0; r < cfg.n_reps; ++r)
    rep.max_kkt_violation = std::max(rep.max_kkt_violation, fits[r].max_kkt);
  return rep;
}

namespace {

struct GroupTally {
  long covered = 0;
  long total = 0;
  double length_sum = 0.0;

  void add(bool cov, double len) {
    covered += cov ? 1 : 0;
    length_sum += len;
    ++total;
  }
  CoverageGroup finish() const {
    CoverageGroup g;
    if (total > 0) {
      g.coverage = static_cast<double>(covered) / static_cast<double>(total);
      g.mean_length = length_sum / static_cast<double>(total);
    }
    return g;
  }
};

struct CoverageTallies {
  GroupTally nonzero_basic, zero_basic, nonzero_percentile, zero_percentile;
};

void tally_intervals(const BootstrapEnsemble& ens, const Eigen::VectorXd& beta_star,
                     double level, CoverageTallies& t) {
  for (CiKind kind : {CiKind::basic, CiKind::percentile}) {
    IntervalSet iv = confidence_intervals(ens, level, kind);
    for (int j = 0; j < beta_star.size(); ++j) {
      bool cov = iv.lower[j] <= beta_star[j] && beta_star[j] <= iv.upper[j];
      double len = iv.upper[j] - iv.lower[j];
      bool nonzero = beta_star[j] != 0.0;
      if (kind == CiKind::basic) {
        (nonzero ? t.nonzero_basic : t.zero_basic).add(cov, len);
      } else {
        (nonzero ? t.nonzero_percentile : t.zero_percentile).add(cov, len);
      }
    }
  }
}

}  // namespace

MetricsReport run_coverage_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_reps < 1) throw InvalidConfig("run_coverage_experiment: need n_reps >= 1");
  const Eigen::MatrixXd X = generate_fixed_design(cfg);
  const Eigen::VectorXd beta_star = true_beta(cfg.beta_case, cfg.p, cfg.s);
  const Eigen::VectorXd mu = X * beta_star;

  // Method order fixes the bootstrap stream assignment.
  const std::vector<std::string> names = {"rblmls", "rbl", "pbl"};
  std::vector<CoverageTallies> tallies(cfg.n_reps * 3);
  std::vector<double> kkts(cfg.n_reps, 0.0);

  parallel_for(cfg.n_reps, cfg.workers, [&](int r) {
    RepFits fits = fit_replicate(cfg, X, mu, r);
    RegressionDataset ds;
    ds.X = X;
    ds.standardized = true;
    ds.y = fits.y;

    double kkt = fits.max_kkt;
    for (int m = 0; m < 3; ++m) {
      RefitConfig refit;
      refit.solver = cfg.solver;
      Eigen::VectorXd point;
      BootstrapMethod scheme = BootstrapMethod::residual;
      if (m == 0) {
        Stage2Config s2;
        s2.kind = Stage2Kind::mls;
        refit.stage2 = s2;
        refit.lambda = fits.lambda_refit;
        refit.warm_start = fits.stage1;
        point = fits.mls;
      } else {
        refit.lambda = fits.lambda_lasso;
        refit.warm_start = fits.lasso;
        point = fits.lasso;
        if (m == 2) scheme = BootstrapMethod::paired;
      }
      std::uint64_t bs_seed = derive_seed(cfg.seed, Stream::bootstrap,
                                          static_cast<std::uint64_t>(r),
                                          static_cast<std::uint64_t>(m));
      BootstrapEnsemble ens = bootstrap_ensemble(ds, point, refit, cfg.B, scheme, bs_seed);
      kkt = std::max(kkt, ens.max_kkt_violation);
      tally_intervals(ens, beta_star, cfg.level, tallies[r * 3 + m]);
    }
    kkts[r] = kkt;
  });

  MetricsReport rep;
  rep.config = cfg;
  for (int m = 0; m < 3; ++m) {
    CoverageTallies total;
    auto merge = [](GroupTally& a, const GroupTally& b) {
      a.covered += b.covered;
      a.total += b.total;
      a.length_sum += b.length_sum;
    };
    for (int r = 0; r < cfg.n_reps; ++r) {
      merge(total.nonzero_basic, tallies[r * 3 + m].nonzero_basic);
      merge(total.zero_basic, tallies[r * 3 + m].zero_basic);
      merge(total.nonzero_percentile, tallies[r * 3 + m].nonzero_percentile);
      merge(total.zero_percentile, tallies[r * 3 + m].zero_percentile);
    }
    CoverageMetrics cm;
    cm.nonzero_basic = total.nonzero_basic.finish();
    cm.zero_basic = total.zero_basic.finish();
    cm.nonzero_percentile = total.nonzero_percentile.finish();
    cm.zero_percentile = total.zero_percentile.finish();
    rep.coverage[names[m]] = cm;
  }
  for (double k : kkts) rep.max_kkt_violation = std::max(rep.max_kkt_violation, k);
  return rep;
}

SamplingDraws sampling_distribution_draws_multi(const ExperimentConfig& cfg,
                                                const std::vector<int>& coords, int n_draws) {
  if (n_draws < 1) throw InvalidConfig("sampling_distribution_draws: n_draws must be positive");
  for (int j : coords) {
    if (j < 0 || j >= cfg.p) throw InvalidConfig("sampling_distribution_draws: coordinate out of range");
  }
  const Eigen::MatrixXd X = generate_fixed_design(cfg);
  const Eigen::VectorXd beta_star = true_beta(cfg.beta_case, cfg.p, cfg.s);
  const Eigen::VectorXd mu = X * beta_star;
  const double root_n = std::sqrt(static_cast<double>(cfg.n));
  const int nc = static_cast<int>(coords.size());

  SamplingDraws out;
  out.coords = coords;
  out.lasso.resize(n_draws, nc);
  out.mls.resize(n_draws, nc);
  out.ridge.resize(n_draws, nc);
  std::vector<double> kkts(n_draws, 0.0);

  parallel_for(n_draws, cfg.workers, [&](int r) {
    RepFits fits = fit_replicate(cfg, X, mu, r);
    for (int c = 0; c < nc; ++c) {
      int j = coords[c];
      out.lasso(r, c) = root_n * (fits.lasso[j] - beta_star[j]);
      out.mls(r, c) = root_n * (fits.mls[j] - beta_star[j]);
      out.ridge(r, c) = root_n * (fits.ridge[j] - beta_star[j]);
    }
    kkts[r] = fits.max_kkt;
  });

  for (double k : kkts) out.max_kkt_violation = std::max(out.max_kkt_violation, k);
  return out;
}

std::vector<double> sampling_distribution_draws(const ExperimentConfig& cfg, BenchMethod method,
                                                int j, int n_draws) {
  SamplingDraws d = sampling_distribution_draws_multi(cfg, {j}, n_draws);
  const Eigen::MatrixXd& m = (method == BenchMethod::lasso)       ? d.lasso
                             : (method == BenchMethod::lasso_mls) ? d.mls
                                                                  : d.ridge;
  std::vector<double> out(n_draws);
  for (int r = 0; r < n_draws; ++r) out[r] = m(r, 0);
  return out;
}

}  // namespace twostage
