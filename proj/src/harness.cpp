#include "harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "numeric.hpp"
#include "rng.hpp"

namespace ncfam {

namespace {

// Seed-stream tags, fixed so runs stay reproducible across versions.
constexpr uint64_t kDataStream = 1;
constexpr uint64_t kNoiseStream = 2;
constexpr uint64_t kInitStream = 3;
constexpr uint64_t kTruthStream = 100;
constexpr uint64_t kTheoryBlocksStream = 200;
constexpr uint64_t kTheoryDivStream = 201;
constexpr uint64_t kSweepNStream = 1000;
constexpr uint64_t kSweepGammaStream = 2000;

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n == 0) throw std::invalid_argument("median of empty set");
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
  return pairwise_sum<double>(0, v.size(), [&](std::size_t i) { return v[i]; }) /
         static_cast<double>(v.size());
}

struct KindTheory {
  std::optional<TheoryBlocks> blocks;
  bool diverged = false;
  std::optional<double> trace_sigma_at(double gamma) const {
    if (diverged || !blocks) return std::nullopt;
    try {
      return sigma_g(blocks->I, blocks->A_gamma, blocks->A, blocks->B, gamma).trace();
    } catch (const std::runtime_error&) {
      return std::nullopt;
    }
  }
};

KindTheory kind_theory(const ModelSpec& model, const VectorXd& theta_star,
                       const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                       Kind kind, int n_mc, uint64_t blocks_seed, uint64_t div_seed) {
  KindTheory out;
  out.diverged = divergence_check(model, theta_star, data_dist, aux, kind,
                                  std::max(10000, n_mc / 16), div_seed);
  TheoryBlocks b =
      estimate_blocks(model, theta_star, data_dist, aux, kind, n_mc, blocks_seed);
  if (!b.i_diverged && !b.a_gamma_diverged && !b.a_diverged && !b.b_diverged)
    out.blocks = std::move(b);
  return out;
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.n_d != b.n_d) return a.n_d < b.n_d;
    return a.gamma < b.gamma;
  });
}

nlohmann::json kinds_json(const std::vector<Kind>& kinds) {
  nlohmann::json out = nlohmann::json::array();
  for (Kind k : kinds) out.push_back(kind_name(k));
  return out;
}

}  // namespace

const char* noise_policy_name(NoisePolicy p) {
  return p == NoisePolicy::FitGaussian ? "fit-gaussian" : "gengauss-truth";
}

std::optional<NoisePolicy> parse_noise_policy(std::string_view name) {
  if (name == "fit-gaussian") return NoisePolicy::FitGaussian;
  if (name == "gengauss-truth") return NoisePolicy::GenGaussTruth;
  return std::nullopt;
}

nlohmann::json optimizer_config_json(const OptimizerConfig& cfg) {
  return {{"max_iters", cfg.max_iters},   {"grad_tol", cfg.grad_tol},
          {"step_tol", cfg.step_tol},     {"wolfe_c1", cfg.wolfe_c1},
          {"wolfe_c2", cfg.wolfe_c2},     {"restart_period", cfg.restart_period}};
}

OptimizerConfig optimizer_config_from_json(const nlohmann::json& j) {
  OptimizerConfig cfg;
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  cfg.grad_tol = j.value("grad_tol", cfg.grad_tol);
  cfg.step_tol = j.value("step_tol", cfg.step_tol);
  cfg.wolfe_c1 = j.value("wolfe_c1", cfg.wolfe_c1);
  cfg.wolfe_c2 = j.value("wolfe_c2", cfg.wolfe_c2);
  cfg.restart_period = j.value("restart_period", cfg.restart_period);
  return cfg;
}

IcaGroundTruth make_ground_truth(int dim, double alpha, uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("make_ground_truth: dim must be >= 1");
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    MatrixXd A(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) A(i, j) = rng.normal();
    const Eigen::JacobiSVD<MatrixXd> svd(A);
    const double smin = svd.singularValues().minCoeff();
    if (smin > 0.0 && svd.singularValues().maxCoeff() / smin <= 20.0)
      return IcaGroundTruth::from_mixing(std::move(A), alpha, seed);
  }
  throw std::runtime_error(
      "make_ground_truth: no mixing matrix with condition number <= 20 in 100 draws");
}

MatrixXd generate_data(const IcaGroundTruth& truth, int n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_data: n must be >= 1");
  const int d = truth.dim();
  MatrixXd sources(n, d);
  for (int j = 0; j < d; ++j)
    sources.col(j) = gen_gaussian_sample(truth.alpha, n, derive_seed(seed, j));
  return sources * truth.A.transpose();
}

TrialResult run_trial(const TrialConfig& cfg) {
  if (cfg.n_data < 1 || cfg.n_noise < 1)
    throw std::invalid_argument("run_trial: sample counts must be >= 1");

  const IcaGroundTruth truth = make_ground_truth(cfg.dim, cfg.alpha, cfg.truth_seed);
  const auto model = std::make_shared<IcaModel>(cfg.dim, cfg.alpha);
  MatrixXd data = generate_data(truth, cfg.n_data, derive_seed(cfg.seed, kDataStream));

  std::unique_ptr<AuxiliarySpec> aux;
  if (cfg.noise_policy == NoisePolicy::FitGaussian)
    aux = std::make_unique<GaussianSpec>(fit_gaussian(data));
  else
    aux = std::make_unique<ProductGenGaussianSpec>(cfg.alpha, truth.B_star);
  MatrixXd noise = aux->sample(cfg.n_noise, derive_seed(cfg.seed, kNoiseStream));

  const VectorXd theta_star = truth.theta_star();
  Rng init_rng(derive_seed(cfg.seed, kInitStream));
  VectorXd theta0 = theta_star;
  for (Eigen::Index k = 0; k < theta0.size(); ++k)
    theta0(k) += cfg.init_sigma * init_rng.normal();

  TrialResult res;
  res.seed = cfg.seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const EstimationProblem problem = EstimationProblem::make(
        model, cfg.kind, std::move(data), std::move(noise), *aux);
    MaximizeResult opt = maximize(problem, theta0, cfg.optimizer);
    res.theta_hat = std::move(opt.theta);
    res.status = opt.trace.status;
    res.iterations = static_cast<int>(opt.trace.rows.size()) - 1;
  } catch (const std::exception&) {
    // Objective not finite at theta0 (or a degenerate sample): count the
    // trial as diverged and score the starting point.
    res.theta_hat = theta0;
    res.status = OptStatus::Diverged;
    res.iterations = 0;
  }
  res.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.sq_error = (res.theta_hat - theta_star).squaredNorm();
  return res;
}

ResultsTable sweep_sample_size(const SweepNConfig& cfg) {
  if (cfg.kinds.empty() || cfg.nd_list.empty() || cfg.trials < 1)
    throw std::invalid_argument("sweep_sample_size: empty sweep");

  const uint64_t truth_seed = derive_seed(cfg.seed, kTruthStream);
  const IcaGroundTruth truth = make_ground_truth(cfg.dim, cfg.alpha, truth_seed);
  const IcaModel model(cfg.dim, cfg.alpha);
  const VectorXd theta_star = truth.theta_star();
  const ProductGenGaussianSpec data_dist(cfg.alpha, truth.B_star);
  const GaussianSpec gauss_theory(VectorXd::Zero(cfg.dim),
                                  truth.A * truth.A.transpose());
  const AuxiliarySpec& aux_theory =
      cfg.noise_policy == NoisePolicy::FitGaussian
          ? static_cast<const AuxiliarySpec&>(gauss_theory)
          : static_cast<const AuxiliarySpec&>(data_dist);

  ResultsTable table;
  nlohmann::json theory_meta = nlohmann::json::object();
  for (size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
    const Kind kind = cfg.kinds[ki];
    const KindTheory theory = kind_theory(
        model, theta_star, data_dist, aux_theory, kind, cfg.n_mc_theory,
        derive_seed(cfg.seed, kTheoryBlocksStream, static_cast<uint64_t>(kind)),
        derive_seed(cfg.seed, kTheoryDivStream, static_cast<uint64_t>(kind)));
    const std::optional<double> trace = theory.trace_sigma_at(1.0);
    theory_meta[kind_name(kind)] = {
        {"diverged", theory.diverged},
        {"trace_sigma", trace ? nlohmann::json(*trace) : nlohmann::json()}};

    for (int nd : cfg.nd_list) {
      std::vector<double> errors;
      int failed = 0;
      for (int t = 0; t < cfg.trials; ++t) {
        TrialConfig tc;
        tc.dim = cfg.dim;
        tc.alpha = cfg.alpha;
        tc.truth_seed = truth_seed;
        tc.kind = kind;
        tc.n_data = nd;
        tc.n_noise = nd;
        tc.noise_policy = cfg.noise_policy;
        tc.init_sigma = cfg.init_sigma;
        tc.optimizer = cfg.optimizer;
        tc.seed = derive_seed(cfg.seed, kSweepNStream + static_cast<uint64_t>(kind),
                              static_cast<uint64_t>(nd), static_cast<uint64_t>(t));
        const TrialResult res = run_trial(tc);
        errors.push_back(res.sq_error);
        if (res.status != OptStatus::Converged) ++failed;
      }
      SweepRow row;
      row.kind = kind_name(kind);
      row.n_d = nd;
      row.n_n = nd;
      row.gamma = 1.0;
      row.trials = cfg.trials;
      row.median_mse = median_of(errors);
      row.mean_mse = mean_of(errors);
      if (trace) row.theory_mse = *trace / static_cast<double>(nd);
      row.diverged = theory.diverged;
      row.failed_trials = failed;
      table.rows.push_back(std::move(row));
    }
  }
  sort_rows(table.rows);
  table.metadata = {{"command", "sweep-n"},
                    {"seed", cfg.seed},
                    {"truth_seed", truth_seed},
                    {"truth", truth.to_json()},
                    {"alpha", cfg.alpha},
                    {"dim", cfg.dim},
                    {"kinds", kinds_json(cfg.kinds)},
                    {"nd", cfg.nd_list},
                    {"trials", cfg.trials},
                    {"noise_policy", noise_policy_name(cfg.noise_policy)},
                    {"init_sigma", cfg.init_sigma},
                    {"n_mc_theory", cfg.n_mc_theory},
                    {"optimizer", optimizer_config_json(cfg.optimizer)},
                    {"theory", std::move(theory_meta)}};
  return table;
}

ResultsTable sweep_gamma(const SweepGammaConfig& cfg) {
  if (cfg.kinds.empty() || cfg.gammas.empty() || cfg.trials < 1)
    throw std::invalid_argument("sweep_gamma: empty sweep");

  const uint64_t truth_seed = derive_seed(cfg.seed, kTruthStream);
  const IcaGroundTruth truth = make_ground_truth(cfg.dim, cfg.alpha, truth_seed);
  const IcaModel model(cfg.dim, cfg.alpha);
  const VectorXd theta_star = truth.theta_star();
  const ProductGenGaussianSpec data_dist(cfg.alpha, truth.B_star);
  const GaussianSpec gauss_theory(VectorXd::Zero(cfg.dim),
                                  truth.A * truth.A.transpose());
  const AuxiliarySpec& aux_theory =
      cfg.noise_policy == NoisePolicy::FitGaussian
          ? static_cast<const AuxiliarySpec&>(gauss_theory)
          : static_cast<const AuxiliarySpec&>(data_dist);

  ResultsTable table;
  nlohmann::json theory_meta = nlohmann::json::object();
  nlohmann::json skipped = nlohmann::json::array();
  for (size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
    const Kind kind = cfg.kinds[ki];
    const KindTheory theory = kind_theory(
        model, theta_star, data_dist, aux_theory, kind, cfg.n_mc_theory,
        derive_seed(cfg.seed, kTheoryBlocksStream, static_cast<uint64_t>(kind)),
        derive_seed(cfg.seed, kTheoryDivStream, static_cast<uint64_t>(kind)));
    GammaHat gh;
    if (theory.blocks && !theory.diverged)
      gh = optimal_gamma(theory.blocks->I, theory.blocks->A_gamma, theory.blocks->A,
                         theory.blocks->B);
    theory_meta[kind_name(kind)] = {
        {"diverged", theory.diverged},
        {"gamma_hat", gh.valid ? nlohmann::json(gh.value) : nlohmann::json()}};

    for (size_t gi = 0; gi < cfg.gammas.size(); ++gi) {
      const double gamma = cfg.gammas[gi];
      const int nd =
          static_cast<int>(std::llround(cfg.n_total * gamma / (1.0 + gamma)));
      const int nn = cfg.n_total - nd;
      if (nd < 10 || nn < 10) {
        skipped.push_back({{"kind", kind_name(kind)},
                           {"gamma", gamma},
                           {"reason", "fewer than 10 samples on one side"}});
        continue;
      }
      std::vector<double> errors;
      int failed = 0;
      for (int t = 0; t < cfg.trials; ++t) {
        TrialConfig tc;
        tc.dim = cfg.dim;
        tc.alpha = cfg.alpha;
        tc.truth_seed = truth_seed;
        tc.kind = kind;
        tc.n_data = nd;
        tc.n_noise = nn;
        tc.noise_policy = cfg.noise_policy;
        tc.init_sigma = cfg.init_sigma;
        tc.optimizer = cfg.optimizer;
        tc.seed = derive_seed(cfg.seed, kSweepGammaStream + static_cast<uint64_t>(kind),
                              static_cast<uint64_t>(gi), static_cast<uint64_t>(t));
        const TrialResult res = run_trial(tc);
        errors.push_back(res.sq_error);
        if (res.status != OptStatus::Converged) ++failed;
      }
      SweepRow row;
      row.kind = kind_name(kind);
      row.n_d = nd;
      row.n_n = nn;
      row.gamma = gamma;
      row.trials = cfg.trials;
      row.median_mse = median_of(errors);
      row.mean_mse = mean_of(errors);
      const std::optional<double> trace = theory.trace_sigma_at(gamma);
      if (trace)
        row.theory_mse = (1.0 + 1.0 / gamma) * *trace / static_cast<double>(cfg.n_total);
      row.diverged = theory.diverged;
      row.failed_trials = failed;
      table.rows.push_back(std::move(row));
    }
  }
  sort_rows(table.rows);
  table.metadata = {{"command", "sweep-gamma"},
                    {"seed", cfg.seed},
                    {"truth_seed", truth_seed},
                    {"truth", truth.to_json()},
                    {"alpha", cfg.alpha},
                    {"dim", cfg.dim},
                    {"kinds", kinds_json(cfg.kinds)},
                    {"n_total", cfg.n_total},
                    {"gammas", cfg.gammas},
                    {"trials", cfg.trials},
                    {"noise_policy", noise_policy_name(cfg.noise_policy)},
                    {"init_sigma", cfg.init_sigma},
                    {"n_mc_theory", cfg.n_mc_theory},
                    {"optimizer", optimizer_config_json(cfg.optimizer)},
                    {"theory", std::move(theory_meta)},
                    {"skipped", std::move(skipped)}};
  return table;
}

void write_results(const ResultsTable& table, const std::string& csv_path,
                   const std::string& metadata_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw std::runtime_error("write_results: cannot open " + csv_path);
  out << "kind,N_d,N_n,gamma,trials,median_mse,mean_mse,theory_mse,diverged,"
         "failed_trials\n";
  for (const SweepRow& r : table.rows) {
    out << r.kind << ',' << r.n_d << ',' << r.n_n << ',' << fmt_double(r.gamma) << ','
        << r.trials << ',' << fmt_double(r.median_mse) << ',' << fmt_double(r.mean_mse)
        << ',' << (r.theory_mse ? fmt_double(*r.theory_mse) : std::string()) << ','
        << (r.diverged ? 1 : 0) << ',' << r.failed_trials << '\n';
  }
  if (!out) throw std::runtime_error("write_results: write failed for " + csv_path);
  if (!metadata_path.empty()) {
    std::ofstream meta(metadata_path, std::ios::binary);
    if (!meta) throw std::runtime_error("write_results: cannot open " + metadata_path);
    meta << table.metadata.dump(2) << '\n';
    if (!meta)
      throw std::runtime_error("write_results: write failed for " + metadata_path);
  }
}

ResultsTable read_results(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw std::runtime_error("read_results: cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line) ||
      line !=
          "kind,N_d,N_n,gamma,trials,median_mse,mean_mse,theory_mse,diverged,"
          "failed_trials")
    throw std::runtime_error("read_results: bad header in " + csv_path);

  ResultsTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw std::runtime_error("read_results: malformed row in " + csv_path);
    SweepRow r;
    r.kind = fields[0];
    r.n_d = std::stoi(fields[1]);
    r.n_n = std::stoi(fields[2]);
    r.gamma = std::stod(fields[3]);
    r.trials = std::stoi(fields[4]);
    r.median_mse = std::stod(fields[5]);
    r.mean_mse = std::stod(fields[6]);
    if (!fields[7].empty()) r.theory_mse = std::stod(fields[7]);
    r.diverged = fields[8] == "1";
    r.failed_trials = std::stoi(fields[9]);
    table.rows.push_back(std::move(r));
  }
  return table;
}

nlohmann::json estimate_from_data(const EstimateConfig& cfg, const MatrixXd& data) {
  if (data.rows() < 2) throw std::invalid_argument("estimate: need at least 2 samples");
  if (!(cfg.gamma > 0.0)) throw std::invalid_argument("estimate: gamma must be positive");
  const int dim = static_cast<int>(data.cols());
  const auto model = std::make_shared<IcaModel>(dim, cfg.alpha);

  const GaussianSpec aux = fit_gaussian(data);
  const int n_noise = std::max<int>(
      1, static_cast<int>(std::llround(static_cast<double>(data.rows()) / cfg.gamma)));
  MatrixXd noise = aux.sample(n_noise, derive_seed(cfg.seed, kNoiseStream));

  VectorXd theta0(model->dim_theta());
  if (cfg.init == "truth") {
    if (!cfg.truth)
      throw std::invalid_argument("estimate: init=truth requires a ground-truth spec");
    if (cfg.truth->dim() != dim)
      throw std::invalid_argument("estimate: ground-truth dimension mismatch");
    theta0 = cfg.truth->theta_star();
    Rng rng(derive_seed(cfg.seed, kInitStream));
    for (Eigen::Index k = 0; k < theta0.size(); ++k)
      theta0(k) += cfg.init_sigma * rng.normal();
  } else if (cfg.init == "whiten") {
    // Whitening start: B0 makes the data covariance the identity, c0
    // normalizes the model at B0.
    const MatrixXd B0 = aux.chol_lower().inverse();
    theta0.head(model->dim_phi()) = IcaModel::flatten(B0);
    theta0(model->dim_phi()) = ica_true_c(B0, cfg.alpha);
  } else {
    throw std::invalid_argument("estimate: unknown init policy '" + cfg.init + "'");
  }

  const EstimationProblem problem =
      EstimationProblem::make(model, cfg.kind, data, std::move(noise), aux);
  MaximizeResult opt = maximize(problem, theta0, cfg.optimizer);

  if (!cfg.trace_path.empty()) {
    std::ofstream t(cfg.trace_path, std::ios::binary);
    if (!t) throw std::runtime_error("estimate: cannot open " + cfg.trace_path);
    t << trace_csv(opt.trace);
  }

  const Evaluation value = objective_value(problem, opt.theta);
  nlohmann::json fit = {
      {"kind", kind_name(cfg.kind)},
      {"alpha", cfg.alpha},
      {"dim", dim},
      {"gamma", problem.gamma},
      {"seed", cfg.seed},
      {"n_data", problem.n_data()},
      {"n_noise", problem.n_noise()},
      {"init", cfg.init},
      {"theta_hat", std::vector<double>(opt.theta.data(), opt.theta.data() + opt.theta.size())},
      {"objective", value.value},
      {"status", opt_status_name(opt.trace.status)},
      {"iterations", static_cast<int>(opt.trace.rows.size()) - 1},
      {"grad_norm", opt.trace.rows.back().grad_norm},
      {"noise_spec", aux.to_json()},
      {"optimizer", optimizer_config_json(cfg.optimizer)},
  };
  if (cfg.truth) {
    const VectorXd theta_star = cfg.truth->theta_star();
    fit["sq_error"] = (opt.theta - theta_star).squaredNorm();
    fit["theta_star"] = std::vector<double>(theta_star.data(),
                                            theta_star.data() + theta_star.size());
  }
  return fit;
}

namespace {

Kind kind_from_json(const nlohmann::json& j, const char* key) {
  const std::string token = j.at(key).get<std::string>();
  const auto kind = parse_kind(token);
  if (!kind) throw std::invalid_argument("unknown nonlinearity '" + token + "'");
  return *kind;
}

std::vector<Kind> kinds_from_json(const nlohmann::json& j) {
  std::vector<Kind> out;
  for (const auto& item : j) {
    const std::string token = item.get<std::string>();
    const auto kind = parse_kind(token);
    if (!kind) throw std::invalid_argument("unknown nonlinearity '" + token + "'");
    out.push_back(*kind);
  }
  if (out.empty()) throw std::invalid_argument("empty kinds list");
  return out;
}

struct PredictSetup {
  IcaGroundTruth truth;
  std::unique_ptr<IcaModel> model;
  std::unique_ptr<ProductGenGaussianSpec> data_dist;
  std::unique_ptr<GaussianSpec> gaussian;
  const AuxiliarySpec* aux = nullptr;
  std::string noise;
};

PredictSetup predict_setup(const nlohmann::json& cfg) {
  PredictSetup s;
  const double alpha = cfg.value("alpha", 1.0);
  const int dim = cfg.value("dim", 2);
  const uint64_t seed = cfg.value("seed", uint64_t{0});
  const uint64_t truth_seed =
      cfg.contains("truth_seed") ? cfg.at("truth_seed").get<uint64_t>()
                                 : derive_seed(seed, kTruthStream);
  s.truth = make_ground_truth(dim, alpha, truth_seed);
  s.model = std::make_unique<IcaModel>(dim, alpha);
  s.data_dist = std::make_unique<ProductGenGaussianSpec>(alpha, s.truth.B_star);
  s.noise = cfg.value("noise", "gaussian");
  if (s.noise == "gaussian") {
    s.gaussian = std::make_unique<GaussianSpec>(VectorXd::Zero(dim),
                                                s.truth.A * s.truth.A.transpose());
    s.aux = s.gaussian.get();
  } else if (s.noise == "gengauss-truth") {
    s.aux = s.data_dist.get();
  } else {
    throw std::invalid_argument("unknown noise setting '" + s.noise + "'");
  }
  return s;
}

}  // namespace

nlohmann::json predict_report_json(const nlohmann::json& cfg) {
  const PredictSetup s = predict_setup(cfg);
  const Kind kind = kind_from_json(cfg, "kind");
  const int mc = cfg.value("mc", 1000000);
  const uint64_t seed = cfg.value("seed", uint64_t{0});
  const double gamma = cfg.value("gamma", 1.0);
  const std::vector<int> nd_list =
      cfg.value("nd_list", std::vector<int>{500, 1000, 2000, 4000, 8000});
  const AsymptoticReport report =
      make_report(*s.model, s.truth.theta_star(), *s.data_dist, *s.aux, kind, mc, seed,
                  gamma, nd_list, true);
  nlohmann::json out = report.to_json();
  out["truth"] = s.truth.to_json();
  out["noise"] = s.noise;
  return out;
}

GammaHat gamma_opt_from_config(const nlohmann::json& cfg) {
  const PredictSetup s = predict_setup(cfg);
  const Kind kind = kind_from_json(cfg, "kind");
  const int mc = cfg.value("mc", 1000000);
  const uint64_t seed = cfg.value("seed", uint64_t{0});
  const VectorXd theta_star = s.truth.theta_star();
  const TheoryBlocks blocks = estimate_blocks(*s.model, theta_star, *s.data_dist,
                                              *s.aux, kind, mc, derive_seed(seed, 1));
  GammaHat gh;
  if (!blocks.i_diverged && !blocks.a_gamma_diverged && !blocks.a_diverged &&
      !blocks.b_diverged)
    gh = optimal_gamma(blocks.I, blocks.A_gamma, blocks.A, blocks.B);
  if (gh.valid &&
      divergence_check(*s.model, theta_star, *s.data_dist, *s.aux, kind,
                       std::max(10000, mc / 16), derive_seed(seed, 2)))
    gh.valid = false;  // asymptotic MSE is not finite for any gamma
  return gh;
}

EstimateConfig estimate_config_from_json(const nlohmann::json& j) {
  EstimateConfig cfg;
  cfg.kind = kind_from_json(j, "kind");
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.init = j.value("init", cfg.init);
  cfg.init_sigma = j.value("init_sigma", cfg.init_sigma);
  if (j.contains("truth")) cfg.truth = IcaGroundTruth::from_json(j.at("truth"));
  if (j.contains("optimizer")) cfg.optimizer = optimizer_config_from_json(j.at("optimizer"));
  cfg.trace_path = j.value("trace_out", cfg.trace_path);
  return cfg;
}

SweepNConfig sweep_n_config_from_json(const nlohmann::json& j) {
  SweepNConfig cfg;
  cfg.dim = j.value("dim", cfg.dim);
  cfg.alpha = j.value("alpha", cfg.alpha);
  if (j.contains("kinds")) cfg.kinds = kinds_from_json(j.at("kinds"));
  if (j.contains("nd")) cfg.nd_list = j.at("nd").get<std::vector<int>>();
  cfg.trials = j.value("trials", cfg.trials);
  if (j.contains("noise_policy")) {
    const auto p = parse_noise_policy(j.at("noise_policy").get<std::string>());
    if (!p) throw std::invalid_argument("unknown noise policy");
    cfg.noise_policy = *p;
  }
  cfg.init_sigma = j.value("init_sigma", cfg.init_sigma);
  if (j.contains("optimizer")) cfg.optimizer = optimizer_config_from_json(j.at("optimizer"));
  cfg.n_mc_theory = j.value("mc", cfg.n_mc_theory);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

SweepGammaConfig sweep_gamma_config_from_json(const nlohmann::json& j) {
  SweepGammaConfig cfg;
  cfg.dim = j.value("dim", cfg.dim);
  cfg.alpha = j.value("alpha", cfg.alpha);
  if (j.contains("kinds")) cfg.kinds = kinds_from_json(j.at("kinds"));
  cfg.n_total = j.value("ntot", cfg.n_total);
  if (j.contains("gammas")) cfg.gammas = j.at("gammas").get<std::vector<double>>();
  cfg.trials = j.value("trials", cfg.trials);
  if (j.contains("noise_policy")) {
    const auto p = parse_noise_policy(j.at("noise_policy").get<std::string>());
    if (!p) throw std::invalid_argument("unknown noise policy");
    cfg.noise_policy = *p;
  }
  cfg.init_sigma = j.value("init_sigma", cfg.init_sigma);
  if (j.contains("optimizer")) cfg.optimizer = optimizer_config_from_json(j.at("optimizer"));
  cfg.n_mc_theory = j.value("mc", cfg.n_mc_theory);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

}  // namespace ncfam
