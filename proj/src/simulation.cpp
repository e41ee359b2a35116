#include "facov/simulation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "facov/losses.hpp"
#include "facov/portfolio.hpp"

namespace facov {

CalibrationParams default_calibration() {
  CalibrationParams c;
  c.mu_f = VectorXd(3);
  c.mu_f << 0.023558, 0.012989, 0.020714;
  c.cov_f = MatrixXd(3, 3);
  c.cov_f << 1.2507, -0.034999, -0.20419,
      -0.034999, 0.31564, -0.0022526,
      -0.20419, -0.0022526, 0.19303;
  c.mu_b = VectorXd(3);
  c.mu_b << 0.78282, 0.51803, 0.41003;
  c.cov_b = MatrixXd(3, 3);
  c.cov_b << 0.029145, 0.023873, 0.010184,
      0.023873, 0.053951, -0.006967,
      0.010184, -0.006967, 0.086856;
  c.gamma_shape = 3.3586;
  c.gamma_scale = 0.1876;
  c.sd_floor = 0.1950;
  c.target_mean = 0.66081;
  c.target_sd = 0.3275;
  return c;
}

namespace {

// Regularized lower incomplete gamma P(a, x), series for x < a + 1 and
// continued fraction otherwise.
double regularized_gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(log_prefix);
  }
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(log_prefix) * h;
}

}  // namespace

double gamma_cdf(double x, double shape, double scale) {
  return regularized_gamma_p(shape, x / scale);
}

std::pair<double, double> calibrate_truncated_gamma(double target_mean,
                                                    double target_sd,
                                                    double floor,
                                                    CalibrationMode mode) {
  if (target_sd <= 0.0) {
    throw InvalidTarget("target sd must be positive");
  }
  if (target_mean <= floor) {
    throw InvalidTarget("target mean must exceed the truncation floor");
  }
  const double m2 = target_sd * target_sd + target_mean * target_mean;
  double alpha = target_mean * target_mean / (target_sd * target_sd);
  double beta = target_sd * target_sd / target_mean;
  if (floor <= 0.0) return {alpha, beta};

  for (int it = 0; it < 200; ++it) {
    double s1, s2;  // targets for E[G] and E[G^2] of the untruncated law
    if (mode == CalibrationMode::approximate) {
      const double q = gamma_cdf(floor, alpha, beta);
      s1 = target_mean * (1.0 - q) + 0.5 * floor * q;
      s2 = m2 * (1.0 - q) + 0.5 * floor * floor * q;
    } else {
      const double q0 = 1.0 - gamma_cdf(floor, alpha, beta);
      const double q1 = 1.0 - gamma_cdf(floor, alpha + 1.0, beta);
      const double q2 = 1.0 - gamma_cdf(floor, alpha + 2.0, beta);
      if (q1 <= 0.0 || q2 <= 0.0) {
        throw NoConvergence("truncated-gamma tail mass vanished");
      }
      s1 = target_mean * q0 / q1;
      s2 = m2 * q0 / q2;
    }
    const double var = s2 - s1 * s1;
    if (s1 <= 0.0 || var <= 0.0) {
      throw NoConvergence("moment targets left the gamma family");
    }
    const double beta_next = var / s1;
    const double alpha_next = s1 / beta_next;
    const bool done = std::abs(alpha_next - alpha) < 1e-8 * alpha &&
                      std::abs(beta_next - beta) < 1e-8 * beta;
    alpha = alpha_next;
    beta = beta_next;
    if (done) return {alpha, beta};
  }
  throw NoConvergence("truncated-gamma calibration did not converge");
}

MatrixXd sample_mvn(const VectorXd& mean, const MatrixXd& cov, int count,
                    std::mt19937_64& rng) {
  const Index d = mean.size();
  if (cov.rows() != d || cov.cols() != d) {
    throw DimensionMismatch("sample_mvn: mean/cov dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(cov));
  VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-10 * scale) {
    throw NotPsd("covariance has eigenvalue " + std::to_string(ev.minCoeff()));
  }
  ev = ev.cwiseMax(0.0);
  const MatrixXd factor =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd z(d, count);
  for (Index j = 0; j < count; ++j) {
    for (Index i = 0; i < d; ++i) {
      z(i, j) = normal(rng);
    }
  }
  return (factor * z).colwise() + mean;
}

VectorXd sample_truncated_gamma(double shape, double scale, double floor,
                                int count, std::mt19937_64& rng) {
  if (shape <= 0.0 || scale <= 0.0) {
    throw InvalidTarget("gamma shape and scale must be positive");
  }
  std::gamma_distribution<double> gamma(shape, scale);
  VectorXd out(count);
  long attempts = 0;
  for (int i = 0; i < count;) {
    const double draw = gamma(rng);
    ++attempts;
    if (draw >= floor) {
      out(i++) = draw;
    } else if (attempts > 1000000 && static_cast<double>(i) <
                                         1e-6 * static_cast<double>(attempts)) {
      throw RejectionStall("truncated-gamma acceptance rate below 1e-6");
    }
  }
  return out;
}

std::vector<int> SimulationConfig::default_p_grid() {
  std::vector<int> grid;
  for (int p = 16; p <= 1000; p += 20) grid.push_back(p);
  return grid;
}

bool SimulationConfig::metric_enabled(const std::string& name) const {
  return metrics.empty() || metrics.count(name) > 0;
}

void SimulationConfig::validate() const {
  if (n < k) {
    throw InvalidTarget("config: n must be at least K");
  }
  if (replications < 1) {
    throw InvalidTarget("config: replications must be >= 1");
  }
  if (p_grid.empty()) {
    throw InvalidTarget("config: empty p grid");
  }
  int prev = 0;
  for (int p : p_grid) {
    if (p <= prev) {
      throw InvalidTarget("config: p grid must be ascending and positive");
    }
    prev = p;
  }
  if (calibration.mu_f.size() != k || calibration.cov_f.rows() != k ||
      calibration.mu_b.size() != k || calibration.cov_b.rows() != k) {
    throw DimensionMismatch(
        "config: calibration dimension does not match K");
  }
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t rep,
                            std::uint64_t p_index) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(p_index),
      0x9e3779b9u};
  return std::mt19937_64(seq);
}

ReplicationRecord run_replication(const SimulationConfig& config, int p,
                                  std::mt19937_64& rng) {
  const CalibrationParams& cal = config.calibration;
  const int n = config.n;
  ReplicationRecord rec;

  // Draws, in the protocol's order.
  FactorPanel x{sample_mvn(cal.mu_f, cal.cov_f, n, rng), {}};
  const MatrixXd b =
      sample_mvn(cal.mu_b, cal.cov_b, p, rng).transpose();  // p x K
  const VectorXd sigmas = sample_truncated_gamma(
      cal.gamma_shape, cal.gamma_scale, cal.sd_floor, p, rng);
  MatrixXd errors;
  if (config.zero_noise) {
    errors = MatrixXd::Zero(p, n);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    errors.resize(p, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < p; ++i) {
        errors(i, j) = sigmas(i) * normal(rng);
      }
    }
  }
  ReturnPanel y{b * x.data + errors, {}};

  // Truth for this replication.
  const VectorXd sigma_sq = sigmas.cwiseProduct(sigmas);
  MatrixXd sigma_true = b * cal.cov_f * b.transpose();
  sigma_true.diagonal() += sigma_sq;
  const CovarianceEstimate truth{symmetrize(sigma_true), CovMethod::oracle};
  const VectorXd mu_true = b * cal.mu_f;

  const FactorModelFit fit = fit_factor_model(x, y);
  const CovarianceEstimate cov_f_est = covariance_factor(fit);
  const CovarianceEstimate cov_s_est = covariance_sample(y);

  const bool want_sigma = config.metric_enabled("sigma_norm");
  const bool want_entropy = config.metric_enabled("entropy");
  const bool want_inverse = config.metric_enabled("inverse");
  const bool want_portfolio = config.metric_enabled("portfolio");

  if (config.metric_enabled("frobenius")) {
    rec.frobenius_factor = (cov_f_est.matrix - truth.matrix).norm();
    rec.frobenius_sample = (cov_s_est.matrix - truth.matrix).norm();
  }

  MatrixXd isq;  // inverse square root of the true covariance
  if (want_sigma || want_entropy || want_inverse) {
    isq = inverse_sqrt(truth.matrix);
  }
  const double pd = static_cast<double>(p);
  if (want_sigma) {
    rec.sigma_norm_factor =
        (isq * (cov_f_est.matrix - truth.matrix) * isq).norm() /
        std::sqrt(pd);
    rec.sigma_norm_sample =
        (isq * (cov_s_est.matrix - truth.matrix) * isq).norm() /
        std::sqrt(pd);
  }
  if (want_entropy) {
    auto entropy_of = [&](const CovarianceEstimate& est)
        -> std::optional<double> {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(
          symmetrize(isq * est.matrix * isq), Eigen::EigenvaluesOnly);
      const VectorXd& ev = es.eigenvalues();
      if (ev.minCoeff() <= kEigenvalueFloor) return std::nullopt;
      double loss = 0.0;
      for (Index i = 0; i < ev.size(); ++i) {
        loss += ev(i) - std::log(ev(i)) - 1.0;
      }
      return loss;
    };
    rec.entropy_factor = entropy_of(cov_f_est);
    rec.entropy_sample = entropy_of(cov_s_est);
  }

  MatrixXd true_inv;
  if (want_inverse || want_portfolio) {
    if (isq.size() == 0) isq = inverse_sqrt(truth.matrix);
    true_inv = isq * isq;
  }
  if (want_inverse) {
    rec.inverse_frobenius_factor = (inverse_factor(fit) - true_inv).norm();
    try {
      rec.inverse_frobenius_sample =
          (inverse_generic(cov_s_est) - true_inv).norm();
    } catch (const SingularMatrix&) {
      rec.inverse_frobenius_sample.reset();
    }
  }

  if (want_portfolio) {
    const PortfolioScalars truth_scalars =
        portfolio_scalars(true_inv, mu_true);
    const double optimal_true =
        minimum_variance_closed_form(truth_scalars, config.gamma_target);
    const double global_min_true = 1.0 / truth_scalars.varphi;

    auto record = [&](const MatrixXd& inv, const VectorXd& mu,
                      std::optional<double>& opt_slot,
                      std::optional<double>& gm_slot) {
      const PortfolioScalars s = portfolio_scalars(inv, mu);
      try {
        opt_slot = minimum_variance_closed_form(s, config.gamma_target) -
                   optimal_true;
      } catch (const DegenerateFrontier&) {
        opt_slot.reset();
      }
      gm_slot = 1.0 / s.varphi - global_min_true;
    };
    record(inverse_factor(fit), fit.mean, rec.optimal_var_factor,
           rec.global_min_var_factor);
    try {
      record(inverse_generic(cov_s_est), sample_mean(y),
             rec.optimal_var_sample, rec.global_min_var_sample);
    } catch (const SingularMatrix&) {
      rec.optimal_var_sample.reset();
      rec.global_min_var_sample.reset();
    }
  }

  if (config.metric_enabled("equal_weight")) {
    const VectorXd ew = VectorXd::Constant(p, 1.0 / pd);
    const double ew_true = ew.dot(truth.matrix * ew);
    rec.equal_weight_var_factor = ew.dot(cov_f_est.matrix * ew) - ew_true;
    rec.equal_weight_var_sample = ew.dot(cov_s_est.matrix * ew) - ew_true;
  }
  return rec;
}

namespace {

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  long count = 0;
  long undefined = 0;

  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      sum_sq += *v * *v;
      ++count;
    } else {
      ++undefined;
    }
  }

  MetricAggregate finish() const {
    MetricAggregate agg;
    agg.count = count;
    agg.undefined = undefined;
    if (count > 0) {
      agg.mean = sum / static_cast<double>(count);
      agg.mse = sum_sq / static_cast<double>(count);
      if (count > 1) {
        const double var =
            (sum_sq - sum * sum / static_cast<double>(count)) /
            static_cast<double>(count - 1);
        agg.sd = std::sqrt(std::max(0.0, var));
      }
    }
    return agg;
  }
};

int resolve_workers(const SimulationConfig& config) {
  if (config.workers > 0) return config.workers;
  if (const char* env = std::getenv("FACOV_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

const MetricAggregate& SimulationResult::at(int p_index,
                                            const std::string& key) const {
  return aggregates.at(p_index).at(key);
}

SimulationResult run_experiment(const SimulationConfig& config) {
  config.validate();
  const int reps = config.replications;
  const int num_p = static_cast<int>(config.p_grid.size());

  std::vector<std::vector<ReplicationRecord>> raw(
      num_p, std::vector<ReplicationRecord>(reps));

  const int total = reps * num_p;
  std::atomic<int> next_task{0};
  const int workers = std::min(resolve_workers(config), total);
  auto worker_loop = [&]() {
    for (;;) {
      const int task = next_task.fetch_add(1);
      if (task >= total) break;
      const int rep = task / num_p;
      const int p_index = task % num_p;
      std::mt19937_64 rng = make_stream(config.seed, rep, p_index);
      raw[p_index][rep] =
          run_replication(config, config.p_grid[p_index], rng);
    }
  };
  if (workers <= 1) {
    worker_loop();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker_loop);
    for (auto& t : pool) t.join();
  }

  SimulationResult result;
  result.config = config;
  result.aggregates.resize(num_p);
  using Field = std::optional<double> ReplicationRecord::*;
  const std::vector<std::pair<std::string, Field>> fields = {
      {"frobenius.factor", &ReplicationRecord::frobenius_factor},
      {"frobenius.sample", &ReplicationRecord::frobenius_sample},
      {"sigma_norm.factor", &ReplicationRecord::sigma_norm_factor},
      {"sigma_norm.sample", &ReplicationRecord::sigma_norm_sample},
      {"entropy.factor", &ReplicationRecord::entropy_factor},
      {"entropy.sample", &ReplicationRecord::entropy_sample},
      {"inverse.factor", &ReplicationRecord::inverse_frobenius_factor},
      {"inverse.sample", &ReplicationRecord::inverse_frobenius_sample},
      {"optimal_var.factor", &ReplicationRecord::optimal_var_factor},
      {"optimal_var.sample", &ReplicationRecord::optimal_var_sample},
      {"global_min_var.factor", &ReplicationRecord::global_min_var_factor},
      {"global_min_var.sample", &ReplicationRecord::global_min_var_sample},
      {"equal_weight_var.factor",
       &ReplicationRecord::equal_weight_var_factor},
      {"equal_weight_var.sample",
       &ReplicationRecord::equal_weight_var_sample},
  };
  for (int pi = 0; pi < num_p; ++pi) {
    for (const auto& [key, field] : fields) {
      Accumulator acc;
      for (int rep = 0; rep < reps; ++rep) {
        acc.add(raw[pi][rep].*field);
      }
      result.aggregates[pi][key] = acc.finish();
    }
  }
  if (config.keep_raw) {
    result.raw = std::move(raw);
  }
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Column {
  std::string header;
  std::string key;
  enum class Stat { mean, sd, mse, undefined_count } stat;
};

void write_panel(const SimulationResult& result,
                 const std::filesystem::path& path,
                 const std::vector<Column>& columns) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << "p";
  for (const auto& col : columns) out << "," << col.header;
  out << "\r\n";
  for (std::size_t pi = 0; pi < result.config.p_grid.size(); ++pi) {
    out << result.config.p_grid[pi];
    for (const auto& col : columns) {
      const MetricAggregate& agg = result.at(static_cast<int>(pi), col.key);
      out << ",";
      if (col.stat == Column::Stat::undefined_count) {
        out << agg.undefined;
      } else if (!agg.defined()) {
        out << "NA";
      } else if (col.stat == Column::Stat::mean) {
        out << fmt(agg.mean);
      } else if (col.stat == Column::Stat::sd) {
        out << fmt(agg.sd);
      } else {
        out << fmt(agg.mse);
      }
    }
    out << "\r\n";
  }
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

}  // namespace

void emit_figure_tables(const SimulationResult& result,
                        const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path dir(out_dir);
  const SimulationConfig& cfg = result.config;
  using Stat = Column::Stat;

  auto loss_panel = [&](const std::string& metric, const fs::path& file,
                        bool with_na) {
    std::vector<Column> cols = {
        {"factor_" + metric + "_mean", metric + ".factor", Stat::mean},
        {"sample_" + metric + "_mean", metric + ".sample", Stat::mean},
        {"factor_" + metric + "_sd", metric + ".factor", Stat::sd},
        {"sample_" + metric + "_sd", metric + ".sample", Stat::sd},
    };
    if (with_na) {
      cols.push_back(
          {"sample_" + metric + "_na", metric + ".sample",
           Stat::undefined_count});
    }
    write_panel(result, file, cols);
  };

  if (cfg.metric_enabled("frobenius")) {
    loss_panel("frobenius", dir / "figure1_frobenius.csv", false);
  }
  if (cfg.metric_enabled("sigma_norm")) {
    loss_panel("sigma_norm", dir / "figure1_sigma_norm.csv", false);
  }
  if (cfg.metric_enabled("entropy")) {
    loss_panel("entropy", dir / "figure1_entropy.csv", true);
  }
  if (cfg.metric_enabled("inverse")) {
    loss_panel("inverse", dir / "figure2_inverse_frobenius.csv", true);
  }
  if (cfg.metric_enabled("portfolio")) {
    write_panel(result, dir / "figure3_portfolio_mse.csv",
                {{"factor_optimal_mse", "optimal_var.factor", Stat::mse},
                 {"sample_optimal_mse", "optimal_var.sample", Stat::mse},
                 {"factor_global_min_mse", "global_min_var.factor",
                  Stat::mse},
                 {"sample_global_min_mse", "global_min_var.sample",
                  Stat::mse},
                 {"sample_optimal_na", "optimal_var.sample",
                  Stat::undefined_count}});
  }
  if (cfg.metric_enabled("equal_weight")) {
    write_panel(result, dir / "figure4_equal_weight_mse.csv",
                {{"factor_equal_weight_mse", "equal_weight_var.factor",
                  Stat::mse},
                 {"sample_equal_weight_mse", "equal_weight_var.sample",
                  Stat::mse}});
  }
}

}  // namespace facov
