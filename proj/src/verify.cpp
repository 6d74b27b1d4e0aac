#include "verify.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "asymptotics.hpp"
#include "family.hpp"
#include "harness.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "objective.hpp"
#include "optimizer.hpp"
#include "rng.hpp"

namespace ncfam {

namespace {

bool report(std::ostream& out, const char* name, bool ok) {
  out << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
  return ok;
}

double grid_q(int i, int n) {
  return std::pow(10.0, -6.0 + 12.0 * static_cast<double>(i) / (n - 1));
}

bool pairing_grid(Kind k) {
  for (int i = 0; i < 1000; ++i) {
    const double q = grid_q(i, 1000);
    if (!check_pairing(k, q, 1e-6 * q, 1e-5)) return false;
  }
  return true;
}

bool monotone_grid(Kind k) {
  for (int i = 0; i < 1000; ++i) {
    const double q = grid_q(i, 1000);
    const GPair a = g_values(k, std::log(q));
    const GPair b = g_values(k, std::log(1.01 * q));
    if (!(b.g1 > a.g1) || !(b.g2 > a.g2)) return false;
  }
  return true;
}

GPair closed_form(Kind k, double q) {
  switch (k) {
    case Kind::IS: return {std::log(q), q};
    case Kind::PO: return {q, 0.5 * q * q};
    case Kind::NC: return {std::log(q / (1.0 + q)), std::log(1.0 + q)};
    case Kind::InvPO: return {-0.5 / (q * q), -1.0 / q};
    case Kind::InvIS: return {-1.0 / q, std::log(q)};
  }
  return {0, 0};
}

bool closed_form_grid(Kind k) {
  for (int i = 0; i <= 200; ++i) {
    const double l = -20.0 + 40.0 * i / 200.0;
    const GPair got = g_values(k, l);
    const GPair want = closed_form(k, std::exp(l));
    const auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
    };
    if (!close(got.g1, want.g1) || !close(got.g2, want.g2)) return false;
  }
  return true;
}

bool gradient_checks() {
  for (int rep = 0; rep < 5; ++rep) {
    const double alpha = rep % 2 == 0 ? 2.0 : 3.0;
    const Kind kind = kAllKinds[rep % 5];
    const IcaGroundTruth truth = make_ground_truth(2, alpha, 7000 + rep);
    const auto model = std::make_shared<IcaModel>(2, alpha);
    const MatrixXd data = generate_data(truth, 60, derive_seed(33, rep, 1));
    const GaussianSpec aux = fit_gaussian(data);
    const MatrixXd noise = aux.sample(60, derive_seed(33, rep, 2));
    const EstimationProblem problem =
        EstimationProblem::make(model, kind, data, noise, aux);

    Rng rng(derive_seed(33, rep, 3));
    VectorXd theta = truth.theta_star();
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += 0.05 * rng.normal();

    const VectorXd analytic = objective_gradient(problem, theta).gradient;
    const VectorXd numeric = finite_diff_gradient(
        [&](const VectorXd& t) { return objective_value(problem, t).value; }, theta,
        1e-6);
    const double rel = (analytic - numeric).lpNorm<Eigen::Infinity>() /
                       std::max(1.0, numeric.lpNorm<Eigen::Infinity>());
    if (!(rel < 1e-5)) return false;
  }
  return true;
}

bool corollary2_quick() {
  const Gauss1dModel model;
  VectorXd theta_star(2);
  theta_star << 1.0, gauss1d_true_c(1.0);
  const GaussianSpec p_d(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  const double want = 2.0 / gauss1d_fisher(1.0);  // (1+gamma) I_F^{-1} at gamma=1
  for (Kind k : kAllKinds) {
    const TheoryBlocks b =
        estimate_blocks(model, theta_star, p_d, p_d, k, 200000, 4242, false);
    const MatrixXd sigma = sigma_g(b.I, b.A_gamma, b.A, b.B, 1.0);
    if (!(std::abs(sigma(0, 0) - want) <= 0.10 * want)) return false;
  }
  return true;
}

}  // namespace

bool run_verify(std::ostream& out) {
  bool ok = true;
  bool all = true;
  for (Kind k : kAllKinds) {
    ok = pairing_grid(k);
    all &= report(out, (std::string("pairing identity g2'/g1' = q  [") +
                        kind_name(k) + "]").c_str(), ok);
  }
  ok = true;
  for (Kind k : kAllKinds) ok = ok && monotone_grid(k);
  all &= report(out, "monotonicity of g1, g2 on the q grid", ok);
  ok = true;
  for (Kind k : kAllKinds) ok = ok && closed_form_grid(k);
  all &= report(out, "log-domain evaluation matches closed forms", ok);
  all &= report(out, "analytic gradient matches central differences", gradient_checks());
  all &= report(out, "covariance reaches (1+gamma)/Fisher at p_n = p_d",
                corollary2_quick());
  out << (all ? "verify: all checks passed\n" : "verify: FAILURES above\n");
  return all;
}

}  // namespace ncfam
