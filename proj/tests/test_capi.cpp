// Exercises the shared library strictly through the public C header.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <unistd.h>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "ncfam.h"

namespace {
constexpr double kLog2 = 0.69314718055994530942;

struct TempDir {
  std::filesystem::path dir;
  TempDir() {
    dir = std::filesystem::temp_directory_path() /
          ("ncfam_capi_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string path(const char* name) const { return (dir / name).string(); }
};
}  // namespace

TEST_CASE("kind parsing and names") {
  ncfam_kind k;
  REQUIRE(ncfam_kind_parse("invpo", &k) == NCFAM_OK);
  CHECK(k == NCFAM_KIND_INVPO);
  CHECK(std::string(ncfam_kind_name(NCFAM_KIND_NC)) == "nc");

  CHECK(ncfam_kind_parse("bogus", &k) == NCFAM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ncfam_last_error()).find("bogus") != std::string::npos);
  CHECK(ncfam_kind_parse(nullptr, &k) == NCFAM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("family evaluations") {
  double g1 = 0, g2 = 0;
  REQUIRE(ncfam_g_values(NCFAM_KIND_NC, 0.0, &g1, &g2) == NCFAM_OK);
  CHECK(g1 == doctest::Approx(-kLog2));
  CHECK(g2 == doctest::Approx(kLog2));

  double wd = 0, wn = 0;
  REQUIRE(ncfam_weights(NCFAM_KIND_PO, std::log(3.0), &wd, &wn) == NCFAM_OK);
  CHECK(wd == doctest::Approx(3.0));
  CHECK(wn == doctest::Approx(9.0));

  CHECK(ncfam_g_values(NCFAM_KIND_IS, INFINITY, &g1, &g2) ==
        NCFAM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("truth handle: create, serialize, generate") {
  ncfam_truth* truth = nullptr;
  REQUIRE(ncfam_truth_create(2, 1.0, 77, &truth) == NCFAM_OK);
  CHECK(ncfam_truth_dim(truth) == 2);

  std::vector<double> theta(5);
  REQUIRE(ncfam_truth_theta_star(truth, theta.data(), theta.size()) == NCFAM_OK);
  CHECK(ncfam_truth_theta_star(truth, theta.data(), 3) == NCFAM_ERR_INVALID_ARGUMENT);

  char* json = nullptr;
  REQUIRE(ncfam_truth_to_json(truth, &json) == NCFAM_OK);
  ncfam_truth* back = nullptr;
  REQUIRE(ncfam_truth_from_json(json, &back) == NCFAM_OK);
  std::vector<double> theta2(5);
  REQUIRE(ncfam_truth_theta_star(back, theta2.data(), theta2.size()) == NCFAM_OK);
  for (int i = 0; i < 5; ++i) CHECK(theta[i] == theta2[i]);
  ncfam_string_free(json);
  ncfam_truth_free(back);

  std::vector<double> data(100 * 2);
  REQUIRE(ncfam_truth_generate(truth, 100, 5, data.data()) == NCFAM_OK);
  for (double v : data) CHECK(std::isfinite(v));
  ncfam_truth_free(truth);

  CHECK(ncfam_truth_create(0, 1.0, 1, &truth) == NCFAM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("auxiliary handles") {
  // gengauss with alpha 2 and identity B is the standard normal
  const double eye[1] = {1.0};
  ncfam_aux* gg = nullptr;
  REQUIRE(ncfam_aux_gengauss_create(2.0, eye, 1, &gg) == NCFAM_OK);
  double ld = 0;
  const double zero[1] = {0.0};
  REQUIRE(ncfam_aux_log_density(gg, zero, 1, &ld) == NCFAM_OK);
  CHECK(ld == doctest::Approx(-0.91893853320467274178).epsilon(1e-12));

  char* json = nullptr;
  REQUIRE(ncfam_aux_to_json(gg, &json) == NCFAM_OK);
  ncfam_aux* back = nullptr;
  REQUIRE(ncfam_aux_from_json(json, &back) == NCFAM_OK);
  CHECK(ncfam_aux_dim(back) == 1);
  ncfam_string_free(json);

  std::vector<double> s1(50), s2(50);
  REQUIRE(ncfam_aux_sample(gg, 50, 9, s1.data()) == NCFAM_OK);
  REQUIRE(ncfam_aux_sample(back, 50, 9, s2.data()) == NCFAM_OK);
  CHECK(std::memcmp(s1.data(), s2.data(), sizeof(double) * 50) == 0);
  ncfam_aux_free(back);
  ncfam_aux_free(gg);

  CHECK(ncfam_aux_gengauss_create(-1.0, eye, 1, &gg) == NCFAM_ERR_DOMAIN);

  // a constant column is singular
  std::vector<double> flat(10, 3.0);
  CHECK(ncfam_aux_fit_gaussian(flat.data(), 10, 1, &gg) == NCFAM_ERR_SINGULAR);
}

TEST_CASE("problem, objective, optimizer through the C surface") {
  const double eye[1] = {1.0};
  ncfam_aux* aux = nullptr;
  REQUIRE(ncfam_aux_gengauss_create(2.0, eye, 1, &aux) == NCFAM_OK);

  std::vector<double> data(200), noise(300);
  REQUIRE(ncfam_aux_sample(aux, 200, 1, data.data()) == NCFAM_OK);
  REQUIRE(ncfam_aux_sample(aux, 300, 2, noise.data()) == NCFAM_OK);

  ncfam_problem* problem = nullptr;
  REQUIRE(ncfam_problem_create_ica(1, 2.0, NCFAM_KIND_IS, data.data(), 200,
                                   noise.data(), 300, aux, &problem) == NCFAM_OK);
  CHECK(ncfam_problem_theta_dim(problem) == 2);

  // theta* makes the log-ratio exactly zero: J_IS = 0 - 1.
  const double c_star = -0.91893853320467274178;
  const double theta[2] = {1.0, c_star};
  double value = 0;
  int diverged = -1;
  REQUIRE(ncfam_objective_value(problem, theta, 2, &value, &diverged) == NCFAM_OK);
  CHECK(value == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(diverged == 0);

  double grad[2] = {0, 0};
  REQUIRE(ncfam_objective_gradient(problem, theta, 2, grad, &diverged) == NCFAM_OK);
  CHECK(std::isfinite(grad[0]));
  CHECK(diverged == 0);
  ncfam_problem_free(problem);

  // NC fit from a perturbed start improves the objective.
  REQUIRE(ncfam_problem_create_ica(1, 2.0, NCFAM_KIND_NC, data.data(), 200,
                                   noise.data(), 300, aux, &problem) == NCFAM_OK);
  ncfam_opt_config cfg;
  ncfam_opt_config_default(&cfg);
  CHECK(cfg.max_iters == 500);
  const double theta0[2] = {1.4, c_star + 0.3};
  double theta_hat[2] = {0, 0};
  ncfam_opt_result result;
  REQUIRE(ncfam_maximize(problem, theta0, 2, &cfg, theta_hat, &result) == NCFAM_OK);
  double j0 = 0, j1 = 0;
  REQUIRE(ncfam_objective_value(problem, theta0, 2, &j0, nullptr) == NCFAM_OK);
  REQUIRE(ncfam_objective_value(problem, theta_hat, 2, &j1, nullptr) == NCFAM_OK);
  CHECK(j1 > j0);
  CHECK(result.iterations >= 1);
  ncfam_problem_free(problem);
  ncfam_aux_free(aux);
}

TEST_CASE("json-configured estimate, predict, gamma-opt, sweep") {
  ncfam_truth* truth = nullptr;
  REQUIRE(ncfam_truth_create(2, 1.0, 31, &truth) == NCFAM_OK);
  std::vector<double> data(800 * 2);
  REQUIRE(ncfam_truth_generate(truth, 800, 32, data.data()) == NCFAM_OK);
  char* truth_json = nullptr;
  REQUIRE(ncfam_truth_to_json(truth, &truth_json) == NCFAM_OK);

  nlohmann::json est_cfg = {{"kind", "nc"}, {"alpha", 1.0}, {"gamma", 1.0},
                            {"seed", 3},    {"init", "truth"}};
  est_cfg["truth"] = nlohmann::json::parse(truth_json);
  ncfam_string_free(truth_json);
  ncfam_truth_free(truth);

  char* fit_json = nullptr;
  REQUIRE(ncfam_estimate_json(est_cfg.dump().c_str(), data.data(), 800, 2,
                              &fit_json) == NCFAM_OK);
  const nlohmann::json fit = nlohmann::json::parse(fit_json);
  ncfam_string_free(fit_json);
  CHECK(fit.at("theta_hat").size() == 5);
  CHECK(fit.contains("sq_error"));

  const nlohmann::json pred_cfg = {{"kind", "nc"}, {"alpha", 1.0}, {"dim", 2},
                                   {"gamma", 1.0}, {"mc", 20000},  {"seed", 5}};
  char* report_json = nullptr;
  REQUIRE(ncfam_predict_json(pred_cfg.dump().c_str(), &report_json) == NCFAM_OK);
  const nlohmann::json report = nlohmann::json::parse(report_json);
  ncfam_string_free(report_json);
  CHECK(report.at("sigma_valid").get<bool>());
  CHECK(report.at("trace_sigma").get<double>() > 0.0);

  double gamma_hat = 0;
  int valid = 0;
  const nlohmann::json gopt_cfg = {{"kind", "nc"},  {"alpha", 1.0}, {"dim", 2},
                                   {"mc", 20000},   {"seed", 5},
                                   {"noise", "gengauss-truth"}};
  REQUIRE(ncfam_gamma_opt(gopt_cfg.dump().c_str(), &gamma_hat, &valid) == NCFAM_OK);
  CHECK(valid == 1);
  CHECK(gamma_hat == doctest::Approx(1.0));

  TempDir tmp;
  const nlohmann::json sweep_cfg = {{"alpha", 1.0},      {"dim", 2},
                                    {"kinds", {"nc"}},   {"nd", {100, 200}},
                                    {"trials", 2},       {"seed", 11},
                                    {"mc", 20000}};
  const std::string csv = tmp.path("s.csv");
  const std::string meta = tmp.path("s.meta.json");
  REQUIRE(ncfam_sweep_n_csv(sweep_cfg.dump().c_str(), csv.c_str(), meta.c_str()) ==
          NCFAM_OK);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "kind,N_d,N_n,gamma,trials,median_mse,mean_mse,theory_mse,diverged,"
        "failed_trials");
  CHECK(std::filesystem::file_size(meta) > 0);

  CHECK(ncfam_sweep_n_csv("{ not json", csv.c_str(), nullptr) ==
        NCFAM_ERR_INVALID_ARGUMENT);
  CHECK(ncfam_sweep_n_csv(sweep_cfg.dump().c_str(), "/nonexistent-dir/x.csv",
                          nullptr) == NCFAM_ERR_RUNTIME);
}

TEST_CASE("version and error strings are stable") {
  CHECK(std::string(ncfam_version()).find('.') != std::string::npos);
  CHECK(ncfam_last_error() != nullptr);
  ncfam_string_free(nullptr);  // must be safe
}
