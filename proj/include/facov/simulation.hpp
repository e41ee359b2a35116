#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "facov/estimators.hpp"

namespace facov {

// Parameters of the Monte Carlo design: factor and loading distributions,
// and the truncated-gamma law of the idiosyncratic standard deviations.
struct CalibrationParams {
  VectorXd mu_f;          // length 3
  MatrixXd cov_f;         // 3 x 3
  VectorXd mu_b;          // length 3
  MatrixXd cov_b;         // 3 x 3
  double gamma_shape = 0.0;
  double gamma_scale = 0.0;
  double sd_floor = 0.0;
  double target_mean = 0.0;
  double target_sd = 0.0;
};

// The calibration the simulation study is built around.
CalibrationParams default_calibration();

enum class CalibrationMode {
  // Conditional moments approximated by the half-mass corrections used to
  // derive the printed (alpha, beta).
  approximate,
  // Exact truncated-gamma moments via the incomplete gamma function.
  exact,
};

// Moment-matching of a gamma law conditioned on exceeding `floor`.
// Returns (shape, scale). floor <= 0 degenerates to the untruncated match
// (mean^2/sd^2, sd^2/mean).
std::pair<double, double> calibrate_truncated_gamma(
    double target_mean, double target_sd, double floor,
    CalibrationMode mode = CalibrationMode::approximate);

// Regularized lower incomplete gamma P(a, x).
double gamma_cdf(double x, double shape, double scale);

// i.i.d. draws from N(mean, cov) as columns, via an eigenvalue
// factorization of cov (PSD allowed).
MatrixXd sample_mvn(const VectorXd& mean, const MatrixXd& cov, int count,
                    std::mt19937_64& rng);

// i.i.d. draws from Gamma(shape, scale) conditioned on being >= floor.
VectorXd sample_truncated_gamma(double shape, double scale, double floor,
                                int count, std::mt19937_64& rng);

struct SimulationConfig {
  int n = 756;
  std::vector<int> p_grid;  // default: 16, 36, ..., 996
  int k = 3;
  int replications = 500;
  double gamma_target = 0.10;
  std::uint64_t seed = 0;
  CalibrationParams calibration = default_calibration();
  std::set<std::string> metrics;  // empty = all
  int workers = 0;                // 0 = hardware concurrency
  bool keep_raw = false;
  bool zero_noise = false;  // test hook: error draws replaced by zeros

  static std::vector<int> default_p_grid();
  bool metric_enabled(const std::string& name) const;
  void validate() const;
};

// Raw outcome of one replication at one p. Missing values mark metrics
// that are undefined for that draw (singular sample covariance).
struct ReplicationRecord {
  std::optional<double> frobenius_factor, frobenius_sample;
  std::optional<double> sigma_norm_factor, sigma_norm_sample;
  std::optional<double> entropy_factor, entropy_sample;
  std::optional<double> inverse_frobenius_factor, inverse_frobenius_sample;
  // Signed errors v_hat - v_true of estimated portfolio variances.
  std::optional<double> optimal_var_factor, optimal_var_sample;
  std::optional<double> global_min_var_factor, global_min_var_sample;
  std::optional<double> equal_weight_var_factor, equal_weight_var_sample;
};

struct MetricAggregate {
  double mean = 0.0;
  double sd = 0.0;
  double mse = 0.0;  // mean of squares
  long count = 0;
  long undefined = 0;

  bool defined() const { return count > 0; }
};

struct SimulationResult {
  SimulationConfig config;
  // aggregates[p_index][metric key]; keys look like "frobenius.factor".
  std::vector<std::map<std::string, MetricAggregate>> aggregates;
  std::vector<std::vector<ReplicationRecord>> raw;  // [p_index][rep]

  const MetricAggregate& at(int p_index, const std::string& key) const;
};

// Deterministic substream for one (replication, p) cell.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t rep,
                            std::uint64_t p_index);

// One full pass of the simulation protocol at dimensionality p.
ReplicationRecord run_replication(const SimulationConfig& config, int p,
                                  std::mt19937_64& rng);

// All replications over the p grid; bit-identical for a fixed seed
// regardless of worker count.
SimulationResult run_experiment(const SimulationConfig& config);

// One CSV per figure: frobenius / sigma-norm / entropy losses, inverse
// errors, portfolio-variance MSEs, equal-weight MSEs.
void emit_figure_tables(const SimulationResult& result,
                        const std::string& out_dir);

}  // namespace facov
