#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "harness.hpp"
#include "rng.hpp"
#include "support/oracles.hpp"

using namespace ncfam;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  std::filesystem::path dir;
  TempDir() {
    dir = std::filesystem::temp_directory_path() /
          ("ncfam_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("ground truth is reproducible and well conditioned") {
  const IcaGroundTruth a = make_ground_truth(3, 1.0, 99);
  const IcaGroundTruth b = make_ground_truth(3, 1.0, 99);
  CHECK((a.A - b.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.B_star * a.A - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);

  const Eigen::JacobiSVD<MatrixXd> svd(a.A);
  CHECK(svd.singularValues().maxCoeff() / svd.singularValues().minCoeff() <= 20.0);

  const IcaGroundTruth c = make_ground_truth(3, 1.0, 100);
  CHECK((a.A - c.A).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("generated data has the mixing covariance") {
  const IcaGroundTruth eye = IcaGroundTruth::from_mixing(MatrixXd::Identity(2, 2), 2.0);
  const MatrixXd d1 = generate_data(eye, 100000, 7);
  const GaussianSpec f1 = fit_gaussian(d1);
  CHECK((f1.cov() - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);

  const IcaGroundTruth truth = make_ground_truth(2, 1.0, 21);
  const MatrixXd d2 = generate_data(truth, 200000, 8);
  const MatrixXd want = truth.A * truth.A.transpose();
  CHECK((fit_gaussian(d2).cov() - want).cwiseAbs().maxCoeff() <
        0.05 * want.cwiseAbs().maxCoeff());

  CHECK((generate_data(truth, 50, 9) - generate_data(truth, 50, 9))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("trials are deterministic given the config") {
  TrialConfig cfg;
  cfg.dim = 2;
  cfg.alpha = 1.0;
  cfg.truth_seed = 5;
  cfg.kind = Kind::NC;
  cfg.n_data = 400;
  cfg.n_noise = 400;
  cfg.seed = 12;
  const TrialResult a = run_trial(cfg);
  const TrialResult b = run_trial(cfg);
  CHECK(a.status == b.status);
  CHECK(a.sq_error == b.sq_error);
  CHECK((a.theta_hat - b.theta_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.sq_error >= 0.0);
  CHECK(a.iterations >= 0);
}

TEST_CASE("nc trials at N = 4000 land near the truth") {
  std::vector<double> errors;
  for (int t = 0; t < 20; ++t) {
    TrialConfig cfg;
    cfg.dim = 2;
    cfg.alpha = 1.0;
    cfg.truth_seed = 5;
    cfg.kind = Kind::NC;
    cfg.n_data = 4000;
    cfg.n_noise = 4000;
    cfg.seed = derive_seed(77, t);
    errors.push_back(run_trial(cfg).sq_error);
  }
  std::sort(errors.begin(), errors.end());
  const double median = 0.5 * (errors[9] + errors[10]);
  CHECK(median < 0.1);
}

TEST_CASE("po trials on the heavy-tailed model mostly fail to converge") {
  int hard_failures = 0;
  for (int t = 0; t < 10; ++t) {
    TrialConfig cfg;
    cfg.dim = 2;
    cfg.alpha = 1.0;
    cfg.truth_seed = 5;
    cfg.kind = Kind::PO;
    cfg.n_data = 2000;
    cfg.n_noise = 2000;
    cfg.seed = derive_seed(88, t);
    const TrialResult r = run_trial(cfg);
    if (r.status == OptStatus::Diverged || r.status == OptStatus::LineSearchFailed)
      ++hard_failures;
  }
  CHECK(hard_failures > 5);
}

TEST_CASE("sample-size sweep: structure, theory column, determinism") {
  SweepNConfig cfg;
  cfg.dim = 2;
  cfg.alpha = 1.0;
  cfg.kinds = {Kind::NC, Kind::InvIS};
  cfg.nd_list = {400, 200};
  cfg.trials = 3;
  cfg.n_mc_theory = 40000;
  cfg.seed = 2026;

  const ResultsTable t1 = sweep_sample_size(cfg);
  REQUIRE(t1.rows.size() == 4);
  // sorted by kind token then N_d
  CHECK(t1.rows[0].kind == "invis");
  CHECK(t1.rows[0].n_d == 200);
  CHECK(t1.rows[1].n_d == 400);
  CHECK(t1.rows[2].kind == "nc");
  for (const SweepRow& r : t1.rows) {
    CHECK(r.n_n == r.n_d);
    CHECK(r.gamma == 1.0);
    CHECK(r.trials == 3);
    CHECK(!r.diverged);
    REQUIRE(r.theory_mse.has_value());
    CHECK(*r.theory_mse > 0.0);
    CHECK(r.median_mse >= 0.0);
    CHECK(r.failed_trials >= 0);
    CHECK(r.failed_trials <= 3);
  }
  CHECK(t1.metadata.at("command") == "sweep-n");
  CHECK(t1.metadata.at("theory").contains("nc"));

  TempDir tmp;
  write_results(t1, tmp.path("a.csv"), tmp.path("a.meta.json"));
  const ResultsTable t2 = sweep_sample_size(cfg);
  write_results(t2, tmp.path("b.csv"));
  CHECK(slurp(tmp.path("a.csv")) == slurp(tmp.path("b.csv")));
  CHECK(!slurp(tmp.path("a.meta.json")).empty());
}

TEST_CASE("gamma sweep: sample split, theory curve, gamma_hat metadata") {
  SweepGammaConfig cfg;
  cfg.dim = 2;
  cfg.alpha = 1.0;
  cfg.kinds = {Kind::NC};
  cfg.n_total = 1000;
  cfg.gammas = {0.5, 1.0, 2.0, 1e-4};
  cfg.trials = 2;
  cfg.n_mc_theory = 40000;
  cfg.seed = 31;

  const ResultsTable t = sweep_gamma(cfg);
  REQUIRE(t.rows.size() == 3);  // the infeasible ratio is skipped with a note
  for (const SweepRow& r : t.rows) {
    CHECK(r.n_d + r.n_n == 1000);
    CHECK(r.n_d ==
          static_cast<int>(std::llround(1000 * r.gamma / (1.0 + r.gamma))));
    REQUIRE(r.theory_mse.has_value());
  }
  CHECK(t.metadata.at("skipped").size() == 1);
  CHECK(t.metadata.at("theory").at("nc").at("gamma_hat").is_number());
  const double gamma_hat = t.metadata.at("theory").at("nc").at("gamma_hat").get<double>();
  CHECK(gamma_hat > 0.3);
  CHECK(gamma_hat < 3.0);

  // The theory curve (1 + 1/gamma) tr(Sigma(gamma)) / N_tot is convex in
  // gamma: along the gamma-sorted rows it dips once and rises after.
  for (const SweepRow& r : t.rows) CHECK(*r.theory_mse > 0.0);
  bool rising = false;
  for (size_t i = 1; i < t.rows.size(); ++i) {
    if (*t.rows[i].theory_mse > *t.rows[i - 1].theory_mse)
      rising = true;
    else
      CHECK(!rising);
  }
}

TEST_CASE("results CSV round-trips exactly") {
  ResultsTable t;
  SweepRow r;
  r.kind = "nc";
  r.n_d = 500;
  r.n_n = 250;
  r.gamma = 2.0;
  r.trials = 20;
  r.median_mse = 0.01234567890123456789;
  r.mean_mse = 1.0 / 3.0;
  r.theory_mse = 0.1 + 0.2;  // not exactly 0.3
  r.diverged = false;
  r.failed_trials = 2;
  t.rows.push_back(r);
  SweepRow d = r;
  d.kind = "is";
  d.theory_mse.reset();  // divergent: empty column, not zero
  d.diverged = true;
  t.rows.push_back(d);

  TempDir tmp;
  write_results(t, tmp.path("t.csv"));
  const std::string text = slurp(tmp.path("t.csv"));
  CHECK(text.find(",,1,") != std::string::npos);  // empty theory before diverged=1

  const ResultsTable back = read_results(tmp.path("t.csv"));
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].kind == "nc");
  CHECK(back.rows[0].median_mse == r.median_mse);
  CHECK(back.rows[0].mean_mse == r.mean_mse);
  CHECK(back.rows[0].theory_mse == r.theory_mse);
  CHECK(back.rows[1].theory_mse == std::nullopt);
  CHECK(back.rows[1].diverged);

  // Empty table: header only.
  ResultsTable empty;
  write_results(empty, tmp.path("e.csv"));
  CHECK(slurp(tmp.path("e.csv")) ==
        "kind,N_d,N_n,gamma,trials,median_mse,mean_mse,theory_mse,diverged,"
        "failed_trials\n");
  CHECK(read_results(tmp.path("e.csv")).rows.empty());
}

TEST_CASE("write_results surfaces IO failures with the path") {
  ResultsTable t;
  CHECK_THROWS_WITH_AS(write_results(t, "/nonexistent-dir/x.csv"),
                       doctest::Contains("/nonexistent-dir/x.csv"),
                       std::runtime_error);
}

TEST_CASE("estimate_from_data produces a usable fit report") {
  const IcaGroundTruth truth = make_ground_truth(2, 1.0, 500);
  const MatrixXd data = generate_data(truth, 1500, 501);

  EstimateConfig cfg;
  cfg.kind = Kind::NC;
  cfg.alpha = 1.0;
  cfg.gamma = 1.0;
  cfg.seed = 7;
  cfg.init = "truth";
  cfg.truth = truth;
  TempDir tmp;
  cfg.trace_path = tmp.path("trace.csv");

  const nlohmann::json fit = estimate_from_data(cfg, data);
  CHECK(fit.at("kind") == "nc");
  CHECK(fit.at("n_data") == 1500);
  CHECK(fit.at("n_noise") == 1500);
  CHECK(fit.at("theta_hat").size() == 5);
  CHECK(fit.at("sq_error").get<double>() < 0.5);
  CHECK(std::isfinite(fit.at("objective").get<double>()));
  CHECK(slurp(tmp.path("trace.csv")).rfind("iter,", 0) == 0);

  // Whitening start works without a truth spec.
  EstimateConfig plain;
  plain.kind = Kind::NC;
  plain.alpha = 1.0;
  plain.seed = 8;
  const nlohmann::json fit2 = estimate_from_data(plain, data);
  CHECK(fit2.contains("theta_hat"));
  CHECK(!fit2.contains("sq_error"));

  EstimateConfig bad = plain;
  bad.init = "truth";
  CHECK_THROWS_AS(estimate_from_data(bad, data), std::invalid_argument);
}

TEST_CASE("config parsing from JSON") {
  const nlohmann::json j = {{"kind", "invis"}, {"alpha", 3.0}, {"nd", {100, 200}},
                            {"kinds", {"nc", "is"}}, {"trials", 4}, {"seed", 9},
                            {"mc", 1234}, {"noise_policy", "gengauss-truth"}};
  const SweepNConfig cfg = sweep_n_config_from_json(j);
  CHECK(cfg.alpha == 3.0);
  CHECK(cfg.kinds == std::vector<Kind>{Kind::NC, Kind::IS});
  CHECK(cfg.nd_list == std::vector<int>{100, 200});
  CHECK(cfg.trials == 4);
  CHECK(cfg.seed == 9);
  CHECK(cfg.n_mc_theory == 1234);
  CHECK(cfg.noise_policy == NoisePolicy::GenGaussTruth);

  CHECK_THROWS_AS(sweep_n_config_from_json(nlohmann::json{{"kinds", {"bogus"}}}),
                  std::invalid_argument);

  const EstimateConfig est = estimate_config_from_json(j);
  CHECK(est.kind == Kind::InvIS);
}
