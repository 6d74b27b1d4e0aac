// Command-line harness for the ncfam shared library. Talks to the core
// exclusively through the C API in ncfam.h; everything here is argument
// plumbing and file IO.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ncfam.h"

namespace {

int fail(ncfam_status rc) {
  std::cerr << "error: " << ncfam_last_error() << "\n";
  return static_cast<int>(rc);
}

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

// Headerless numeric CSV, one sample per row.
bool read_matrix_csv(const std::string& path, std::vector<double>& values, int& rows,
                     int& cols) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    return false;
  }
  values.clear();
  rows = 0;
  cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    int this_cols = 0;
    while (std::getline(ss, field, ',')) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        std::cerr << "error: " << path << ": bad number '" << field << "'\n";
        return false;
      }
      ++this_cols;
    }
    if (cols < 0) cols = this_cols;
    if (this_cols != cols) {
      std::cerr << "error: " << path << ": ragged row " << rows + 1 << "\n";
      return false;
    }
    ++rows;
  }
  if (rows == 0 || cols <= 0) {
    std::cerr << "error: " << path << " is empty\n";
    return false;
  }
  return true;
}

bool write_matrix_csv(const std::string& path, const std::vector<double>& values,
                      int rows, int cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open " << path << "\n";
    return false;
  }
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (j) out << ',';
      out << fmt_double(values[static_cast<size_t>(i) * cols + j]);
    }
    out << '\n';
  }
  return static_cast<bool>(out);
}

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open " << path << "\n";
    return false;
  }
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  return static_cast<bool>(out);
}

// Values from --config take precedence over command-line flags.
class ConfigFile {
 public:
  bool load(const std::string& path) {
    if (path.empty()) return true;
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot open config " << path << "\n";
      return false;
    }
    try {
      in >> json_;
    } catch (const std::exception& e) {
      std::cerr << "error: bad config " << path << ": " << e.what() << "\n";
      return false;
    }
    return true;
  }

  template <class T>
  void override(const char* key, T& value) const {
    if (json_.contains(key)) value = json_.at(key).get<T>();
  }

  const nlohmann::json& raw() const { return json_; }

 private:
  nlohmann::json json_ = nlohmann::json::object();
};

struct KindsOption {
  std::vector<std::string> tokens = {"nc"};
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncfam: estimators for unnormalized models (two-nonlinearity family)"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(34);

  // ---- verify ----
  auto* cmd_verify = app.add_subcommand(
      "verify", "Run the fast invariant suite; exit code 0 iff all checks pass");

  // ---- gen-data ----
  auto* cmd_gen = app.add_subcommand("gen-data", "Simulate ICA data x = A s");
  struct {
    double alpha = 1.0;
    int dim = 2;
    int n = 1000;
    uint64_t seed = 0;
    std::string out;
    std::string truth_out;
    std::string config;
  } gen;
  cmd_gen->add_option("--alpha", gen.alpha, "Source shape (1 Laplacian, 2 Gaussian, 3 sub-Gaussian)")->capture_default_str();
  cmd_gen->add_option("--dim", gen.dim, "Data dimension")->capture_default_str();
  cmd_gen->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  cmd_gen->add_option("--seed", gen.seed, "Root seed")->capture_default_str();
  cmd_gen->add_option("--out", gen.out, "Output data CSV")->required();
  cmd_gen->add_option("--truth-out", gen.truth_out, "Also write the ground-truth JSON here");
  cmd_gen->add_option("--config", gen.config, "JSON config; its keys override flags");

  // ---- estimate ----
  auto* cmd_est = app.add_subcommand("estimate", "Fit the ICA model to a data CSV");
  struct {
    std::string kind = "nc";
    std::string data;
    double alpha = 1.0;
    double gamma = 1.0;
    uint64_t seed = 0;
    std::string init = "whiten";
    std::string truth;
    double init_sigma = 0.1;
    std::string trace;
    std::string out;
    std::string config;
  } est;
  cmd_est->add_option("--kind", est.kind, "Nonlinearity: is, po, nc, invpo, invis")->capture_default_str();
  cmd_est->add_option("--data", est.data, "Input data CSV")->required();
  cmd_est->add_option("--alpha", est.alpha, "Model shape parameter")->capture_default_str();
  cmd_est->add_option("--gamma", est.gamma, "N_d / N_n; noise count is N_d/gamma")->capture_default_str();
  cmd_est->add_option("--seed", est.seed, "Seed for noise sampling and init")->capture_default_str();
  cmd_est->add_option("--init", est.init, "Start: whiten | truth")->capture_default_str();
  cmd_est->add_option("--truth", est.truth, "Ground-truth JSON (enables init=truth and sq_error)");
  cmd_est->add_option("--init-sigma", est.init_sigma, "Perturbation around theta* for init=truth")->capture_default_str();
  cmd_est->add_option("--trace", est.trace, "Write per-iteration CSV here");
  cmd_est->add_option("--out", est.out, "Output fit JSON")->required();
  cmd_est->add_option("--config", est.config, "JSON config; its keys override flags");

  // ---- predict ----
  auto* cmd_pred = app.add_subcommand(
      "predict", "Asymptotic covariance report for a simulated ICA setup");
  struct {
    std::string kind = "nc";
    double alpha = 1.0;
    int dim = 2;
    double gamma = 1.0;
    int mc = 1000000;
    uint64_t seed = 0;
    std::string noise = "gaussian";
    std::vector<int> nd_list = {500, 1000, 2000, 4000, 8000};
    std::string out;
    std::string config;
  } pred;
  cmd_pred->add_option("--kind", pred.kind, "Nonlinearity")->capture_default_str();
  cmd_pred->add_option("--alpha", pred.alpha, "Source shape")->capture_default_str();
  cmd_pred->add_option("--dim", pred.dim, "Dimension")->capture_default_str();
  cmd_pred->add_option("--gamma", pred.gamma, "N_d / N_n")->capture_default_str();
  cmd_pred->add_option("--mc", pred.mc, "Monte-Carlo sample count")->capture_default_str();
  cmd_pred->add_option("--seed", pred.seed, "Root seed")->capture_default_str();
  cmd_pred->add_option("--noise", pred.noise, "gaussian | gengauss-truth")->capture_default_str();
  cmd_pred->add_option("--nd-list", pred.nd_list, "N_d values for the predicted-MSE table")->capture_default_str();
  cmd_pred->add_option("--out", pred.out, "Output report JSON")->required();
  cmd_pred->add_option("--config", pred.config, "JSON config; its keys override flags");

  // ---- gamma-opt ----
  auto* cmd_gopt = app.add_subcommand(
      "gamma-opt", "Print the MSE-optimal sample-size ratio N_d/N_n");
  struct {
    std::string kind = "nc";
    double alpha = 1.0;
    int dim = 2;
    int mc = 1000000;
    uint64_t seed = 0;
    std::string noise = "gaussian";
    std::string config;
  } gopt;
  cmd_gopt->add_option("--kind", gopt.kind, "Nonlinearity")->capture_default_str();
  cmd_gopt->add_option("--alpha", gopt.alpha, "Source shape")->capture_default_str();
  cmd_gopt->add_option("--dim", gopt.dim, "Dimension")->capture_default_str();
  cmd_gopt->add_option("--mc", gopt.mc, "Monte-Carlo sample count")->capture_default_str();
  cmd_gopt->add_option("--seed", gopt.seed, "Root seed")->capture_default_str();
  cmd_gopt->add_option("--noise", gopt.noise, "gaussian | gengauss-truth")->capture_default_str();
  cmd_gopt->add_option("--config", gopt.config, "JSON config; its keys override flags");

  // ---- sweep-n ----
  auto* cmd_sn = app.add_subcommand(
      "sweep-n", "MSE versus sample size at N_n = N_d, with theory lines");
  struct {
    double alpha = 1.0;
    int dim = 2;
    KindsOption kinds;
    std::vector<int> nd = {500, 2000, 8000};
    int trials = 20;
    uint64_t seed = 0;
    int mc = 1000000;
    std::string noise_policy = "fit-gaussian";
    double init_sigma = 0.1;
    std::string out;
    std::string meta;
    std::string config;
  } sn;
  cmd_sn->add_option("--alpha", sn.alpha, "Source shape")->capture_default_str();
  cmd_sn->add_option("--dim", sn.dim, "Dimension")->capture_default_str();
  cmd_sn->add_option("--kinds", sn.kinds.tokens, "Nonlinearities to sweep")->capture_default_str();
  cmd_sn->add_option("--nd", sn.nd, "Data sample sizes")->capture_default_str();
  cmd_sn->add_option("--trials", sn.trials, "Trials per cell")->capture_default_str();
  cmd_sn->add_option("--seed", sn.seed, "Root seed")->capture_default_str();
  cmd_sn->add_option("--mc", sn.mc, "Monte-Carlo samples for the theory line")->capture_default_str();
  cmd_sn->add_option("--noise-policy", sn.noise_policy, "fit-gaussian | gengauss-truth")->capture_default_str();
  cmd_sn->add_option("--init-sigma", sn.init_sigma, "Init perturbation scale")->capture_default_str();
  cmd_sn->add_option("--out", sn.out, "Output results CSV")->required();
  cmd_sn->add_option("--meta", sn.meta, "Metadata JSON path (default: <out>.meta.json)");
  cmd_sn->add_option("--config", sn.config, "JSON config; its keys override flags");

  // ---- sweep-gamma ----
  auto* cmd_sg = app.add_subcommand(
      "sweep-gamma", "MSE versus gamma at fixed N_tot, with theory curve");
  struct {
    double alpha = 1.0;
    int dim = 2;
    KindsOption kinds;
    int ntot = 10000;
    std::vector<double> gammas = {0.25, 0.5, 1.0, 2.0, 4.0};
    int trials = 20;
    uint64_t seed = 0;
    int mc = 1000000;
    std::string noise_policy = "fit-gaussian";
    double init_sigma = 0.1;
    std::string out;
    std::string meta;
    std::string config;
  } sg;
  cmd_sg->add_option("--alpha", sg.alpha, "Source shape")->capture_default_str();
  cmd_sg->add_option("--dim", sg.dim, "Dimension")->capture_default_str();
  cmd_sg->add_option("--kinds", sg.kinds.tokens, "Nonlinearities to sweep")->capture_default_str();
  cmd_sg->add_option("--ntot", sg.ntot, "Total sample budget N_d + N_n")->capture_default_str();
  cmd_sg->add_option("--gammas", sg.gammas, "Ratios N_d/N_n to sweep")->capture_default_str();
  cmd_sg->add_option("--trials", sg.trials, "Trials per cell")->capture_default_str();
  cmd_sg->add_option("--seed", sg.seed, "Root seed")->capture_default_str();
  cmd_sg->add_option("--mc", sg.mc, "Monte-Carlo samples for the theory curve")->capture_default_str();
  cmd_sg->add_option("--noise-policy", sg.noise_policy, "fit-gaussian | gengauss-truth")->capture_default_str();
  cmd_sg->add_option("--init-sigma", sg.init_sigma, "Init perturbation scale")->capture_default_str();
  cmd_sg->add_option("--out", sg.out, "Output results CSV")->required();
  cmd_sg->add_option("--meta", sg.meta, "Metadata JSON path (default: <out>.meta.json)");
  cmd_sg->add_option("--config", sg.config, "JSON config; its keys override flags");

  CLI11_PARSE(app, argc, argv);

  if (cmd_verify->parsed()) return ncfam_verify();

  if (cmd_gen->parsed()) {
    ConfigFile cf;
    if (!cf.load(gen.config)) return 1;
    cf.override("alpha", gen.alpha);
    cf.override("dim", gen.dim);
    cf.override("n", gen.n);
    cf.override("seed", gen.seed);
    cf.override("out", gen.out);
    cf.override("truth_out", gen.truth_out);

    ncfam_truth* truth = nullptr;
    if (auto rc = ncfam_truth_create(gen.dim, gen.alpha, gen.seed, &truth)) return fail(rc);
    std::vector<double> data(static_cast<size_t>(gen.n) * gen.dim);
    // Data stream uses seed+1 so the mixing matrix and the sources differ.
    if (auto rc = ncfam_truth_generate(truth, gen.n, gen.seed + 1, data.data())) {
      ncfam_truth_free(truth);
      return fail(rc);
    }
    if (!write_matrix_csv(gen.out, data, gen.n, gen.dim)) {
      ncfam_truth_free(truth);
      return 1;
    }
    if (!gen.truth_out.empty()) {
      char* json = nullptr;
      if (auto rc = ncfam_truth_to_json(truth, &json)) {
        ncfam_truth_free(truth);
        return fail(rc);
      }
      const bool ok = write_text(gen.truth_out, json);
      ncfam_string_free(json);
      if (!ok) {
        ncfam_truth_free(truth);
        return 1;
      }
    }
    ncfam_truth_free(truth);
    std::cout << "wrote " << gen.n << " x " << gen.dim << " samples to " << gen.out
              << "\n";
    return 0;
  }

  if (cmd_est->parsed()) {
    ConfigFile cf;
    if (!cf.load(est.config)) return 1;
    cf.override("kind", est.kind);
    cf.override("data", est.data);
    cf.override("alpha", est.alpha);
    cf.override("gamma", est.gamma);
    cf.override("seed", est.seed);
    cf.override("init", est.init);
    cf.override("truth", est.truth);
    cf.override("init_sigma", est.init_sigma);
    cf.override("trace_out", est.trace);
    cf.override("out", est.out);

    std::vector<double> values;
    int rows = 0, cols = 0;
    if (!read_matrix_csv(est.data, values, rows, cols)) return 1;

    nlohmann::json config = {{"kind", est.kind},
                             {"alpha", est.alpha},
                             {"gamma", est.gamma},
                             {"seed", est.seed},
                             {"init", est.init},
                             {"init_sigma", est.init_sigma}};
    if (!est.trace.empty()) config["trace_out"] = est.trace;
    if (cf.raw().contains("optimizer")) config["optimizer"] = cf.raw().at("optimizer");
    if (!est.truth.empty()) {
      std::ifstream tin(est.truth);
      if (!tin) {
        std::cerr << "error: cannot open " << est.truth << "\n";
        return 1;
      }
      nlohmann::json tj;
      tin >> tj;
      config["truth"] = tj;
    }

    char* out_json = nullptr;
    if (auto rc = ncfam_estimate_json(config.dump().c_str(), values.data(), rows, cols,
                                      &out_json))
      return fail(rc);
    const bool ok = write_text(est.out, out_json);
    ncfam_string_free(out_json);
    if (!ok) return 1;
    std::cout << "wrote fit to " << est.out << "\n";
    return 0;
  }

  if (cmd_pred->parsed()) {
    ConfigFile cf;
    if (!cf.load(pred.config)) return 1;
    cf.override("kind", pred.kind);
    cf.override("alpha", pred.alpha);
    cf.override("dim", pred.dim);
    cf.override("gamma", pred.gamma);
    cf.override("mc", pred.mc);
    cf.override("seed", pred.seed);
    cf.override("noise", pred.noise);
    cf.override("nd_list", pred.nd_list);
    cf.override("out", pred.out);

    nlohmann::json config = {{"kind", pred.kind},   {"alpha", pred.alpha},
                             {"dim", pred.dim},     {"gamma", pred.gamma},
                             {"mc", pred.mc},       {"seed", pred.seed},
                             {"noise", pred.noise}, {"nd_list", pred.nd_list}};
    if (cf.raw().contains("truth_seed"))
      config["truth_seed"] = cf.raw().at("truth_seed");

    char* out_json = nullptr;
    if (auto rc = ncfam_predict_json(config.dump().c_str(), &out_json)) return fail(rc);
    const bool ok = write_text(pred.out, out_json);
    ncfam_string_free(out_json);
    if (!ok) return 1;
    std::cout << "wrote report to " << pred.out << "\n";
    return 0;
  }

  if (cmd_gopt->parsed()) {
    ConfigFile cf;
    if (!cf.load(gopt.config)) return 1;
    cf.override("kind", gopt.kind);
    cf.override("alpha", gopt.alpha);
    cf.override("dim", gopt.dim);
    cf.override("mc", gopt.mc);
    cf.override("seed", gopt.seed);
    cf.override("noise", gopt.noise);

    nlohmann::json config = {{"kind", gopt.kind}, {"alpha", gopt.alpha},
                             {"dim", gopt.dim},   {"mc", gopt.mc},
                             {"seed", gopt.seed}, {"noise", gopt.noise}};
    if (cf.raw().contains("truth_seed"))
      config["truth_seed"] = cf.raw().at("truth_seed");

    double gamma_hat = 0.0;
    int valid = 0;
    if (auto rc = ncfam_gamma_opt(config.dump().c_str(), &gamma_hat, &valid))
      return fail(rc);
    if (valid)
      std::cout << "gamma_hat " << fmt_double(gamma_hat) << "\n";
    else
      std::cout << "gamma_hat nan (asymptotic MSE not finite in this configuration)\n";
    return 0;
  }

  if (cmd_sn->parsed()) {
    ConfigFile cf;
    if (!cf.load(sn.config)) return 1;
    cf.override("alpha", sn.alpha);
    cf.override("dim", sn.dim);
    cf.override("kinds", sn.kinds.tokens);
    cf.override("nd", sn.nd);
    cf.override("trials", sn.trials);
    cf.override("seed", sn.seed);
    cf.override("mc", sn.mc);
    cf.override("noise_policy", sn.noise_policy);
    cf.override("init_sigma", sn.init_sigma);
    cf.override("out", sn.out);
    cf.override("meta", sn.meta);

    nlohmann::json config = {{"alpha", sn.alpha},
                             {"dim", sn.dim},
                             {"kinds", sn.kinds.tokens},
                             {"nd", sn.nd},
                             {"trials", sn.trials},
                             {"seed", sn.seed},
                             {"mc", sn.mc},
                             {"noise_policy", sn.noise_policy},
                             {"init_sigma", sn.init_sigma}};
    if (cf.raw().contains("optimizer")) config["optimizer"] = cf.raw().at("optimizer");
    const std::string meta = sn.meta.empty() ? sn.out + ".meta.json" : sn.meta;
    if (auto rc = ncfam_sweep_n_csv(config.dump().c_str(), sn.out.c_str(), meta.c_str()))
      return fail(rc);
    std::cout << "wrote " << sn.out << " and " << meta << "\n";
    return 0;
  }

  if (cmd_sg->parsed()) {
    ConfigFile cf;
    if (!cf.load(sg.config)) return 1;
    cf.override("alpha", sg.alpha);
    cf.override("dim", sg.dim);
    cf.override("kinds", sg.kinds.tokens);
    cf.override("ntot", sg.ntot);
    cf.override("gammas", sg.gammas);
    cf.override("trials", sg.trials);
    cf.override("seed", sg.seed);
    cf.override("mc", sg.mc);
    cf.override("noise_policy", sg.noise_policy);
    cf.override("init_sigma", sg.init_sigma);
    cf.override("out", sg.out);
    cf.override("meta", sg.meta);

    nlohmann::json config = {{"alpha", sg.alpha},
                             {"dim", sg.dim},
                             {"kinds", sg.kinds.tokens},
                             {"ntot", sg.ntot},
                             {"gammas", sg.gammas},
                             {"trials", sg.trials},
                             {"seed", sg.seed},
                             {"mc", sg.mc},
                             {"noise_policy", sg.noise_policy},
                             {"init_sigma", sg.init_sigma}};
    if (cf.raw().contains("optimizer")) config["optimizer"] = cf.raw().at("optimizer");
    const std::string meta = sg.meta.empty() ? sg.out + ".meta.json" : sg.meta;
    if (auto rc = ncfam_sweep_gamma_csv(config.dump().c_str(), sg.out.c_str(),
                                        meta.c_str()))
      return fail(rc);
    std::cout << "wrote " << sg.out << " and " << meta << "\n";
    return 0;
  }

  return 0;
}
