#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asymptotics.hpp"
#include "json.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "optimizer.hpp"

namespace ncfam {

enum class NoisePolicy { FitGaussian, GenGaussTruth };
const char* noise_policy_name(NoisePolicy p);
std::optional<NoisePolicy> parse_noise_policy(std::string_view name);

nlohmann::json optimizer_config_json(const OptimizerConfig& cfg);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);

// Draws a mixing matrix with i.i.d. standard-normal entries, rejecting until
// the condition number is at most 20 (at most 100 attempts).
IcaGroundTruth make_ground_truth(int dim, double alpha, uint64_t seed);

// x = A s with independent unit-variance generalized-Gaussian sources; one
// row per sample.
MatrixXd generate_data(const IcaGroundTruth& truth, int n, uint64_t seed);

struct TrialConfig {
  int dim = 2;
  double alpha = 1.0;
  uint64_t truth_seed = 1;
  Kind kind = Kind::NC;
  int n_data = 1000;
  int n_noise = 1000;
  NoisePolicy noise_policy = NoisePolicy::FitGaussian;
  double init_sigma = 0.1;  // theta0 = theta* + N(0, init_sigma^2) per component
  OptimizerConfig optimizer;
  uint64_t seed = 0;
};

struct TrialResult {
  VectorXd theta_hat;
  double sq_error = 0.0;  // ||theta_hat - theta*||^2 over all parameters incl. c
  OptStatus status = OptStatus::Diverged;
  int iterations = 0;
  double wall_time = 0.0;  // seconds; never serialized, so runs stay bit-reproducible
  uint64_t seed = 0;
};

// One estimation run: generate data and noise, build the problem, start from
// a perturbed theta*, maximize. Optimizer failures are recorded in the
// status; sq_error is always computed from the best-so-far theta.
TrialResult run_trial(const TrialConfig& config);

struct SweepRow {
  std::string kind;
  int n_d = 0;
  int n_n = 0;
  double gamma = 1.0;
  int trials = 0;
  double median_mse = 0.0;
  double mean_mse = 0.0;
  std::optional<double> theory_mse;  // empty when the theory flags divergence
  bool diverged = false;
  int failed_trials = 0;  // trials whose status was not Converged
};

struct ResultsTable {
  std::vector<SweepRow> rows;
  nlohmann::json metadata;
};

struct SweepNConfig {
  int dim = 2;
  double alpha = 1.0;
  std::vector<Kind> kinds = {Kind::NC};
  std::vector<int> nd_list = {500, 2000, 8000};
  int trials = 20;
  NoisePolicy noise_policy = NoisePolicy::FitGaussian;
  double init_sigma = 0.1;
  OptimizerConfig optimizer;
  int n_mc_theory = 1000000;
  uint64_t seed = 0;
};

// MSE versus sample size at N_n = N_d, with the asymptotic prediction
// tr(Sigma_g)/N_d per cell (left empty for kinds flagged divergent).
ResultsTable sweep_sample_size(const SweepNConfig& config);

struct SweepGammaConfig {
  int dim = 2;
  double alpha = 1.0;
  std::vector<Kind> kinds = {Kind::NC};
  int n_total = 10000;
  std::vector<double> gammas = {0.25, 0.5, 1.0, 2.0, 4.0};
  int trials = 20;
  NoisePolicy noise_policy = NoisePolicy::FitGaussian;
  double init_sigma = 0.1;
  OptimizerConfig optimizer;
  int n_mc_theory = 1000000;
  uint64_t seed = 0;
};

// MSE versus gamma at fixed N_tot = N_d + N_n, with the theory curve
// (1 + 1/gamma) tr(Sigma_g(gamma)) / N_tot and the closed-form gamma_hat in
// the metadata. Ratios that leave either side under 10 samples are skipped
// with a note.
ResultsTable sweep_gamma(const SweepGammaConfig& config);

// CSV with header kind,N_d,N_n,gamma,trials,median_mse,mean_mse,theory_mse,
// diverged,failed_trials; floats in shortest round-trip form; rows sorted by
// (kind, N_d, gamma). Writes companion metadata JSON when a path is given.
void write_results(const ResultsTable& table, const std::string& csv_path,
                   const std::string& metadata_path = "");

// Parses a results CSV back (rows only).
ResultsTable read_results(const std::string& csv_path);

struct EstimateConfig {
  Kind kind = Kind::NC;
  double alpha = 1.0;
  double gamma = 1.0;  // noise sample count is N_d / gamma
  uint64_t seed = 0;
  std::string init = "whiten";  // "whiten" or "truth" (requires truth)
  std::optional<IcaGroundTruth> truth;
  double init_sigma = 0.1;
  OptimizerConfig optimizer;
  std::string trace_path;  // optional per-iteration CSV
};

// Fits the ICA model to a raw data matrix: fits the Gaussian auxiliary on the
// data, samples noise, maximizes, and reports the fit as JSON.
nlohmann::json estimate_from_data(const EstimateConfig& config, const MatrixXd& data);

// JSON-config front ends (the CLI and C API surface).
//
// predict config: kind (required), alpha, dim, gamma, mc, seed, truth_seed,
// nd_list, noise ("gaussian" = zero-mean Gaussian with the exact data
// covariance A A^T, or "gengauss-truth" = p_n equal to the data density).
nlohmann::json predict_report_json(const nlohmann::json& config);

// Same setup; gamma_hat is invalid when the closed form is undefined or the
// divergence heuristic trips (the asymptotic MSE is then not finite for any
// gamma).
GammaHat gamma_opt_from_config(const nlohmann::json& config);

EstimateConfig estimate_config_from_json(const nlohmann::json& j);
SweepNConfig sweep_n_config_from_json(const nlohmann::json& j);
SweepGammaConfig sweep_gamma_config_from_json(const nlohmann::json& j);

}  // namespace ncfam
