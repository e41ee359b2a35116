// Command-line front end for the facov library: model fitting, portfolio
// construction, loss evaluation, truncated-gamma calibration, the CLT
// check, and the Monte Carlo simulation harness.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "facov/asymptotics.hpp"
#include "facov/data_io.hpp"
#include "facov/errors.hpp"
#include "facov/estimators.hpp"
#include "facov/losses.hpp"
#include "facov/portfolio.hpp"
#include "facov/simulation.hpp"

namespace fs = std::filesystem;
using namespace facov;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream ss(s);
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<int> parse_p_grid(const std::string& text) {
  std::vector<int> grid;
  for (const std::string& part : split(text, ',')) {
    const std::string t = trim(part);
    if (t.empty()) continue;
    try {
      grid.push_back(std::stoi(t));
    } catch (const std::exception&) {
      throw InvalidTarget("p-grid entry '" + t + "' is not an integer");
    }
  }
  return grid;
}

// ---------------------------------------------------------------------
// simulate: config files and manifests share one key=value format so a
// manifest can be fed straight back through --config.

void apply_config_file(const std::string& path, SimulationConfig& cfg) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path);
  }
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    try {
      if (key == "n") {
        cfg.n = std::stoi(value);
      } else if (key == "p_grid") {
        cfg.p_grid = parse_p_grid(value);
      } else if (key == "k") {
        cfg.k = std::stoi(value);
      } else if (key == "replications") {
        cfg.replications = std::stoi(value);
      } else if (key == "gamma") {
        cfg.gamma_target = std::stod(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "metrics") {
        cfg.metrics.clear();
        if (value != "all") {
          for (const std::string& m : split(value, ',')) {
            if (!trim(m).empty()) cfg.metrics.insert(trim(m));
          }
        }
      } else if (key == "workers") {
        cfg.workers = std::stoi(value);
      } else {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": unknown key '" + key + "'");
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": cannot parse value '" + value + "' for key '" +
                       key + "'");
    }
  }
}

void write_manifest(const SimulationConfig& cfg, const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << "# facov " << kVersion << " simulate manifest\n";
  out << "# eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION
      << "." << EIGEN_MINOR_VERSION << "\n";
  out << "n = " << cfg.n << "\n";
  out << "p_grid = ";
  for (std::size_t i = 0; i < cfg.p_grid.size(); ++i) {
    out << (i ? "," : "") << cfg.p_grid[i];
  }
  out << "\n";
  out << "k = " << cfg.k << "\n";
  out << "replications = " << cfg.replications << "\n";
  out << "gamma = " << fmt(cfg.gamma_target) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "metrics = ";
  if (cfg.metrics.empty()) {
    out << "all";
  } else {
    bool first = true;
    for (const std::string& m : cfg.metrics) {
      out << (first ? "" : ",") << m;
      first = false;
    }
  }
  out << "\n";
  out << "workers = " << cfg.workers << "\n";
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

struct SimulateArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<int> n, k, reps, workers;
  std::optional<double> gamma;
  std::optional<std::uint64_t> seed;
  std::string p_grid_text;
  std::string metrics_text;
};

void run_simulate(const SimulateArgs& args) {
  SimulationConfig cfg;
  cfg.p_grid = SimulationConfig::default_p_grid();
  if (!args.config_path.empty()) {
    apply_config_file(args.config_path, cfg);
  }
  if (args.n) cfg.n = *args.n;
  if (args.k) cfg.k = *args.k;
  if (args.reps) cfg.replications = *args.reps;
  if (args.gamma) cfg.gamma_target = *args.gamma;
  if (args.seed) cfg.seed = *args.seed;
  if (args.workers) cfg.workers = *args.workers;
  if (!args.p_grid_text.empty()) {
    cfg.p_grid = parse_p_grid(args.p_grid_text);
  }
  if (!args.metrics_text.empty()) {
    cfg.metrics.clear();
    if (args.metrics_text != "all") {
      for (const std::string& m : split(args.metrics_text, ',')) {
        if (!trim(m).empty()) cfg.metrics.insert(trim(m));
      }
    }
  }
  cfg.validate();

  std::error_code ec;
  fs::create_directories(args.out_dir, ec);

  std::cerr << "simulate: n=" << cfg.n << " reps=" << cfg.replications
            << " over " << cfg.p_grid.size() << " values of p ("
            << cfg.p_grid.front() << ".." << cfg.p_grid.back()
            << "), seed=" << cfg.seed << "\n";
  const SimulationResult result = run_experiment(cfg);
  emit_figure_tables(result, args.out_dir);
  write_manifest(cfg, fs::path(args.out_dir) / "manifest.cfg");
  std::cerr << "simulate: wrote figure tables and manifest.cfg to "
            << args.out_dir << "\n";
}

// ---------------------------------------------------------------------
// fit

void run_fit(const std::string& factors_path, const std::string& returns_path,
             const std::string& out_dir, const std::string& method,
             bool inverse) {
  const AlignResult aligned =
      align_and_excess(load_factor_csv(factors_path),
                       load_returns_csv(returns_path), true);
  if (aligned.dropped_factor_dates || aligned.dropped_return_dates) {
    std::cerr << "fit: dropped " << aligned.dropped_factor_dates
              << " factor dates and " << aligned.dropped_return_dates
              << " return dates outside the common range\n";
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path dir(out_dir);

  if (method == "factor" || method == "both") {
    const FactorModelFit fit = fit_factor_model(aligned.factors,
                                                aligned.returns);
    write_matrix_csv(fit.loadings, (dir / "loadings.csv").string());
    write_matrix_csv(fit.factor_cov, (dir / "factor_cov.csv").string());
    write_vector_csv(fit.resid_diag, (dir / "resid_diag.csv").string());
    const CovarianceEstimate est = covariance_factor(fit);
    write_matrix_csv(est.matrix, (dir / "sigma_factor.csv").string());
    if (inverse) {
      write_matrix_csv(inverse_factor(fit),
                       (dir / "sigma_factor_inv.csv").string());
    }
  }
  if (method == "sample" || method == "both") {
    const CovarianceEstimate est = covariance_sample(aligned.returns);
    write_matrix_csv(est.matrix, (dir / "sigma_sample.csv").string());
    if (inverse) {
      write_matrix_csv(inverse_generic(est),
                       (dir / "sigma_sample_inv.csv").string());
    }
  }
  std::cerr << "fit: wrote outputs to " << out_dir << "\n";
}

// ---------------------------------------------------------------------
// portfolio

void run_portfolio(const std::string& sigma_path, const std::string& fit_dir,
                   const std::string& mu_path, std::optional<double> gamma,
                   bool global_min, const std::string& out_path) {
  std::string matrix_path = sigma_path;
  if (matrix_path.empty()) {
    matrix_path = (fs::path(fit_dir) / "sigma_factor.csv").string();
  }
  const MatrixXd sigma = read_matrix_csv(matrix_path);
  if (sigma.rows() != sigma.cols()) {
    throw ParseError(matrix_path + ": covariance matrix must be square");
  }
  const CovarianceEstimate est{symmetrize(sigma), CovMethod::oracle};
  const MatrixXd inv = inverse_generic(est);

  PortfolioWeights weights{VectorXd(), std::nullopt};
  std::optional<PortfolioScalars> scalars;
  if (global_min) {
    weights = global_min_variance_weights(inv);
  } else {
    const VectorXd mu = read_vector_csv(mu_path);
    scalars = portfolio_scalars(inv, mu);
    weights = markowitz_weights(inv, mu, *gamma);
  }
  const double variance = portfolio_variance(est, weights);

  std::ofstream out(out_path);
  if (!out) {
    throw IoError("cannot open " + out_path + " for writing");
  }
  out << "name,value\r\n";
  for (Eigen::Index i = 0; i < weights.weights.size(); ++i) {
    out << "weight_" << (i + 1) << "," << fmt(weights.weights(i)) << "\r\n";
  }
  out << "variance," << fmt(variance) << "\r\n";
  if (scalars) {
    out << "varphi," << fmt(scalars->varphi) << "\r\n";
    out << "psi," << fmt(scalars->psi) << "\r\n";
    out << "phi," << fmt(scalars->phi) << "\r\n";
  } else {
    const VectorXd ones = VectorXd::Ones(inv.rows());
    out << "varphi," << fmt(ones.dot(inv * ones)) << "\r\n";
  }
  if (!out) {
    throw IoError("write failed for " + out_path);
  }
}

// ---------------------------------------------------------------------
// losses

void run_losses(const std::string& est_path, const std::string& ref_path,
                const std::string& out_path) {
  const MatrixXd est_m = read_matrix_csv(est_path);
  const MatrixXd ref_m = read_matrix_csv(ref_path);
  if (est_m.rows() != est_m.cols() || ref_m.rows() != ref_m.cols() ||
      est_m.rows() != ref_m.rows()) {
    throw DimensionMismatch("losses: matrices must be square and equal-size");
  }
  const CovarianceEstimate est{symmetrize(est_m), CovMethod::oracle};
  const CovarianceEstimate ref{symmetrize(ref_m), CovMethod::oracle};
  const LossReport report = loss_report(est, ref);

  std::ofstream out(out_path);
  if (!out) {
    throw IoError("cannot open " + out_path + " for writing");
  }
  out << "name,value\r\n";
  out << "frobenius," << fmt(report.frobenius) << "\r\n";
  out << "sigma_norm," << fmt(report.sigma_norm) << "\r\n";
  out << "quadratic," << fmt(report.quadratic) << "\r\n";
  out << "entropy,"
      << (report.entropy ? fmt(*report.entropy) : std::string("NA"))
      << "\r\n";
  out << "max_eigen_dev," << fmt(report.max_eigen_dev) << "\r\n";
  if (!out) {
    throw IoError("write failed for " + out_path);
  }
}

// ---------------------------------------------------------------------
// clt-check

void run_clt_check(int k, int p, int n, int reps, std::uint64_t seed,
                   double factor_var) {
  if (k < 1 || p < 1 || k > p) {
    throw InvalidTarget("clt-check requires 1 <= K <= p");
  }
  if (n <= k + 1 || reps < 2) {
    throw InvalidTarget("clt-check requires n > K + 1 and reps >= 2");
  }
  // Fixed design: B = ones for K = 1, otherwise a fixed draw from the
  // seeded stream; Gaussian factors with covariance factor_var * I;
  // idiosyncratic covariance I.
  std::mt19937_64 rng = make_stream(seed, 0, 0);
  MatrixXd b(p, k);
  if (k == 1) {
    b.setOnes();
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < p; ++i) b(i, j) = normal(rng);
    }
  }
  const MatrixXd cov_f = factor_var * MatrixXd::Identity(k, k);
  MatrixXd sigma_true = b * cov_f * b.transpose();
  sigma_true.diagonal().array() += 1.0;
  sigma_true = symmetrize(sigma_true);

  const Eigen::Index m = k * (k + 1) / 2;
  MatrixXd stats(m, reps);
  for (int r = 0; r < reps; ++r) {
    std::mt19937_64 stream = make_stream(seed, static_cast<std::uint64_t>(r),
                                         1);
    FactorPanel x{sample_mvn(VectorXd::Zero(k), cov_f, n, stream), {}};
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd e(p, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < p; ++i) e(i, j) = normal(stream);
    }
    ReturnPanel y{b * x.data + e, {}};
    const FactorModelFit fit = fit_factor_model(x, y);
    const CovarianceEstimate est = covariance_factor(fit);
    stats.col(r) = clt_statistic(b, est.matrix, sigma_true, n);
    if (reps >= 100 && (r + 1) % (reps / 10) == 0) {
      std::cerr << "clt-check: " << (r + 1) << "/" << reps
                << " replications\n";
    }
  }

  const VectorXd mean = stats.rowwise().mean();
  const MatrixXd centered = stats.colwise() - mean;
  const MatrixXd emp =
      centered * centered.transpose() / static_cast<double>(reps - 1);
  const MatrixXd a = b.transpose() * b / static_cast<double>(p);
  const MatrixXd g = asymptotic_g(a, gaussian_h(cov_f));

  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double rel = std::abs(emp(i, i) - g(i, i)) / g(i, i);
    max_rel = std::max(max_rel, rel);
    std::cout << "component " << (i + 1) << ": empirical variance "
              << fmt(emp(i, i)) << ", analytic " << fmt(g(i, i)) << "\n";
  }
  std::cout << "max relative deviation (diagonal): " << fmt(max_rel) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-model covariance estimation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // simulate
  SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Run the seeded Monte Carlo comparison study");
  simulate->add_option("--config", sim.config_path,
                       "Config or manifest file (key = value)");
  int sim_n = 0, sim_k = 0, sim_reps = 0, sim_workers = 0;
  double sim_gamma = 0.0;
  std::uint64_t sim_seed = 0;
  simulate->add_option("--n", sim_n, "Sample size per replication");
  simulate->add_option("--p-grid", sim.p_grid_text,
                       "Comma-separated ascending dimensionalities");
  simulate->add_option("--reps", sim_reps, "Replications per p");
  simulate->add_option("--k", sim_k, "Number of factors");
  simulate->add_option("--gamma", sim_gamma,
                       "Target expected portfolio return");
  simulate->add_option("--seed", sim_seed, "Random seed");
  simulate->add_option("--metrics", sim.metrics_text,
                       "Comma list of metric groups, or 'all'");
  simulate->add_option("--workers", sim_workers,
                       "Worker threads (0 = hardware)");
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();
  simulate->callback([&]() {
    if (simulate->count("--n")) sim.n = sim_n;
    if (simulate->count("--k")) sim.k = sim_k;
    if (simulate->count("--reps")) sim.reps = sim_reps;
    if (simulate->count("--gamma")) sim.gamma = sim_gamma;
    if (simulate->count("--seed")) sim.seed = sim_seed;
    if (simulate->count("--workers")) sim.workers = sim_workers;
    run_simulate(sim);
  });

  // fit
  std::string fit_factors, fit_returns, fit_out, fit_method = "factor";
  bool fit_inverse = false;
  auto* fit = app.add_subcommand(
      "fit", "Fit the factor model to factor/return CSV files");
  fit->add_option("--factors", fit_factors, "Factor CSV file")->required();
  fit->add_option("--returns", fit_returns, "Return CSV file")->required();
  fit->add_option("--out", fit_out, "Output directory")->required();
  fit->add_option("--method", fit_method, "factor, sample, or both")
      ->check(CLI::IsMember({"factor", "sample", "both"}));
  fit->add_flag("--inverse", fit_inverse,
                "Also write the inverse covariance");
  fit->callback([&]() {
    // The factor route always has a well-defined inverse; emit it.
    const bool inv = fit_inverse || fit_method == "factor";
    run_fit(fit_factors, fit_returns, fit_out, fit_method, inv);
  });

  // portfolio
  std::string pf_sigma, pf_fit, pf_mu, pf_out;
  double pf_gamma = 0.0;
  bool pf_global = false;
  auto* portfolio = app.add_subcommand(
      "portfolio", "Closed-form mean-variance portfolio weights");
  auto* pf_sigma_opt =
      portfolio->add_option("--sigma", pf_sigma, "Covariance CSV");
  portfolio->add_option("--fit", pf_fit, "Directory written by 'fit'")
      ->excludes(pf_sigma_opt);
  portfolio->add_option("--mu", pf_mu, "Expected-return vector CSV");
  auto* pf_gamma_opt = portfolio->add_option(
      "--gamma", pf_gamma, "Target expected portfolio return");
  portfolio->add_flag("--global-min", pf_global,
                      "Global minimum-variance portfolio")
      ->excludes(pf_gamma_opt);
  portfolio->add_option("--out", pf_out, "Output CSV")->required();
  portfolio->callback([&]() {
    if (pf_sigma.empty() && pf_fit.empty()) {
      throw InvalidTarget("portfolio needs --sigma or --fit");
    }
    if (!pf_global && !portfolio->count("--gamma")) {
      throw InvalidTarget("portfolio needs --gamma or --global-min");
    }
    if (!pf_global && pf_mu.empty()) {
      throw InvalidTarget("portfolio needs --mu unless --global-min");
    }
    run_portfolio(pf_sigma, pf_fit, pf_mu,
                  pf_global ? std::nullopt : std::optional<double>(pf_gamma),
                  pf_global, pf_out);
  });

  // losses
  std::string loss_est, loss_ref, loss_out;
  auto* losses = app.add_subcommand(
      "losses", "Loss metrics between an estimate and a reference");
  losses->add_option("--est", loss_est, "Estimated covariance CSV")
      ->required();
  losses->add_option("--ref", loss_ref, "Reference covariance CSV")
      ->required();
  losses->add_option("--out", loss_out, "Output CSV")->required();
  losses->callback([&]() { run_losses(loss_est, loss_ref, loss_out); });

  // calibrate-gamma
  double cal_mean = 0.0, cal_sd = 0.0, cal_floor = 0.0;
  std::string cal_mode = "approximate";
  auto* calibrate = app.add_subcommand(
      "calibrate-gamma",
      "Moment-match a truncated gamma law for the noise scale");
  calibrate->add_option("--mean", cal_mean, "Target mean")->required();
  calibrate->add_option("--sd", cal_sd, "Target standard deviation")
      ->required();
  calibrate->add_option("--floor", cal_floor, "Truncation floor")
      ->required();
  calibrate->add_option("--mode", cal_mode, "approximate or exact")
      ->check(CLI::IsMember({"approximate", "exact"}));
  calibrate->callback([&]() {
    const auto [shape, scale] = calibrate_truncated_gamma(
        cal_mean, cal_sd, cal_floor,
        cal_mode == "exact" ? CalibrationMode::exact
                            : CalibrationMode::approximate);
    std::cout << "alpha = " << fmt(shape) << "\n";
    std::cout << "beta = " << fmt(scale) << "\n";
  });

  // clt-check
  int clt_k = 1, clt_p = 20, clt_n = 400, clt_reps = 200;
  std::uint64_t clt_seed = 0;
  double clt_var = 1.0;
  auto* clt = app.add_subcommand(
      "clt-check",
      "Compare the empirical and analytic variance of the clt statistic");
  clt->add_option("--k", clt_k, "Number of factors");
  clt->add_option("--p", clt_p, "Dimensionality");
  clt->add_option("--n", clt_n, "Sample size");
  clt->add_option("--reps", clt_reps, "Replications");
  clt->add_option("--seed", clt_seed, "Random seed");
  clt->add_option("--factor-var", clt_var, "Factor variance s^2");
  clt->callback([&]() {
    run_clt_check(clt_k, clt_p, clt_n, clt_reps, clt_seed, clt_var);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
