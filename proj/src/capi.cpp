#include "ncfam.h"

#include <cstring>
#include <iostream>
#include <new>
#include <stdexcept>
#include <string>

#include "asymptotics.hpp"
#include "family.hpp"
#include "harness.hpp"
#include "json.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "numeric.hpp"
#include "objective.hpp"
#include "optimizer.hpp"
#include "verify.hpp"

struct ncfam_truth {
  ncfam::IcaGroundTruth truth;
};

struct ncfam_aux {
  std::unique_ptr<ncfam::AuxiliarySpec> spec;
};

struct ncfam_problem {
  ncfam::EstimationProblem problem;
};

namespace {

thread_local std::string g_last_error = "no error";

void set_error(const std::string& msg) { g_last_error = msg; }

// Maps C++ failures onto the C status codes. Any function crossing the
// boundary runs inside this guard.
template <class F>
ncfam_status guarded(F&& fn) {
  try {
    fn();
    return NCFAM_OK;
  } catch (const ncfam::SingularError& e) {
    set_error(e.what());
    return NCFAM_ERR_SINGULAR;
  } catch (const std::domain_error& e) {
    set_error(e.what());
    return NCFAM_ERR_DOMAIN;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return NCFAM_ERR_INVALID_ARGUMENT;
  } catch (const nlohmann::json::exception& e) {
    set_error(e.what());
    return NCFAM_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return NCFAM_ERR_RUNTIME;
  } catch (const std::exception& e) {
    set_error(e.what());
    return NCFAM_ERR_RUNTIME;
  }
}

ncfam_status require(bool cond, const char* msg) {
  if (cond) return NCFAM_OK;
  set_error(msg);
  return NCFAM_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ncfam::Kind to_kind(ncfam_kind k) {
  switch (k) {
    case NCFAM_KIND_IS: return ncfam::Kind::IS;
    case NCFAM_KIND_PO: return ncfam::Kind::PO;
    case NCFAM_KIND_NC: return ncfam::Kind::NC;
    case NCFAM_KIND_INVPO: return ncfam::Kind::InvPO;
    case NCFAM_KIND_INVIS: return ncfam::Kind::InvIS;
  }
  throw std::invalid_argument("unknown nonlinearity tag");
}

ncfam_kind from_kind(ncfam::Kind k) {
  switch (k) {
    case ncfam::Kind::IS: return NCFAM_KIND_IS;
    case ncfam::Kind::PO: return NCFAM_KIND_PO;
    case ncfam::Kind::NC: return NCFAM_KIND_NC;
    case ncfam::Kind::InvPO: return NCFAM_KIND_INVPO;
    case ncfam::Kind::InvIS: return NCFAM_KIND_INVIS;
  }
  throw std::invalid_argument("unknown nonlinearity tag");
}

Eigen::MatrixXd rowmajor_to_matrix(const double* buf, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = buf[static_cast<size_t>(i) * cols + j];
  return m;
}

void matrix_to_rowmajor(const Eigen::MatrixXd& m, double* buf) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      buf[static_cast<size_t>(i) * m.cols() + j] = m(i, j);
}

}  // namespace

extern "C" {

const char* ncfam_last_error(void) { return g_last_error.c_str(); }

const char* ncfam_version(void) { return "0.1.0"; }

void ncfam_string_free(char* s) { delete[] s; }

ncfam_status ncfam_kind_parse(const char* name, ncfam_kind* out) {
  if (auto st = require(name && out, "kind_parse: null argument")) return st;
  const auto kind = ncfam::parse_kind(name);
  if (!kind) {
    set_error(std::string("unknown nonlinearity '") + name +
              "'; expected is, po, nc, invpo or invis");
    return NCFAM_ERR_INVALID_ARGUMENT;
  }
  *out = from_kind(*kind);
  return NCFAM_OK;
}

const char* ncfam_kind_name(ncfam_kind kind) {
  switch (kind) {
    case NCFAM_KIND_IS:
    case NCFAM_KIND_PO:
    case NCFAM_KIND_NC:
    case NCFAM_KIND_INVPO:
    case NCFAM_KIND_INVIS: return ncfam::kind_name(to_kind(kind));
  }
  return "?";
}

ncfam_status ncfam_g_values(ncfam_kind kind, double logratio, double* g1, double* g2) {
  if (auto st = require(g1 && g2, "g_values: null output")) return st;
  return guarded([&] {
    const ncfam::GPair g = ncfam::g_values(to_kind(kind), logratio);
    *g1 = g.g1;
    *g2 = g.g2;
  });
}

ncfam_status ncfam_weights(ncfam_kind kind, double logratio, double* data_weight,
                           double* noise_weight) {
  if (auto st = require(data_weight && noise_weight, "weights: null output")) return st;
  return guarded([&] {
    const ncfam::WeightPair w = ncfam::weights_from_logratio(to_kind(kind), logratio);
    *data_weight = w.data_weight;
    *noise_weight = w.noise_weight;
  });
}

ncfam_status ncfam_truth_create(int dim, double alpha, uint64_t seed, ncfam_truth** out) {
  if (auto st = require(out != nullptr, "truth_create: null output")) return st;
  return guarded([&] {
    *out = new ncfam_truth{ncfam::make_ground_truth(dim, alpha, seed)};
  });
}

ncfam_status ncfam_truth_from_json(const char* json, ncfam_truth** out) {
  if (auto st = require(json && out, "truth_from_json: null argument")) return st;
  return guarded([&] {
    *out = new ncfam_truth{ncfam::IcaGroundTruth::from_json(nlohmann::json::parse(json))};
  });
}

ncfam_status ncfam_truth_to_json(const ncfam_truth* truth, char** out_json) {
  if (auto st = require(truth && out_json, "truth_to_json: null argument")) return st;
  return guarded([&] { *out_json = dup_string(truth->truth.to_json().dump()); });
}

int ncfam_truth_dim(const ncfam_truth* truth) { return truth ? truth->truth.dim() : 0; }

ncfam_status ncfam_truth_theta_star(const ncfam_truth* truth, double* theta, size_t len) {
  if (auto st = require(truth && theta, "truth_theta_star: null argument")) return st;
  return guarded([&] {
    const Eigen::VectorXd t = truth->truth.theta_star();
    if (len != static_cast<size_t>(t.size()))
      throw std::invalid_argument("truth_theta_star: buffer length must be dim*dim+1");
    for (Eigen::Index i = 0; i < t.size(); ++i) theta[i] = t(i);
  });
}

ncfam_status ncfam_truth_generate(const ncfam_truth* truth, int n, uint64_t seed,
                                  double* out) {
  if (auto st = require(truth && out, "truth_generate: null argument")) return st;
  return guarded([&] {
    matrix_to_rowmajor(ncfam::generate_data(truth->truth, n, seed), out);
  });
}

void ncfam_truth_free(ncfam_truth* truth) { delete truth; }

ncfam_status ncfam_aux_fit_gaussian(const double* data, int n, int dim, ncfam_aux** out) {
  if (auto st = require(data && out && n > 0 && dim > 0,
                        "aux_fit_gaussian: null or empty input"))
    return st;
  return guarded([&] {
    *out = new ncfam_aux{std::make_unique<ncfam::GaussianSpec>(
        ncfam::fit_gaussian(rowmajor_to_matrix(data, n, dim)))};
  });
}

ncfam_status ncfam_aux_gaussian_create(const double* mean, const double* cov, int dim,
                                       ncfam_aux** out) {
  if (auto st = require(mean && cov && out && dim > 0,
                        "aux_gaussian_create: null or empty input"))
    return st;
  return guarded([&] {
    Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(mean, dim);
    *out = new ncfam_aux{std::make_unique<ncfam::GaussianSpec>(
        std::move(mu), rowmajor_to_matrix(cov, dim, dim))};
  });
}

ncfam_status ncfam_aux_gengauss_create(double alpha, const double* B, int dim,
                                       ncfam_aux** out) {
  if (auto st = require(B && out && dim > 0, "aux_gengauss_create: null or empty input"))
    return st;
  return guarded([&] {
    *out = new ncfam_aux{std::make_unique<ncfam::ProductGenGaussianSpec>(
        alpha, rowmajor_to_matrix(B, dim, dim))};
  });
}

ncfam_status ncfam_aux_from_json(const char* json, ncfam_aux** out) {
  if (auto st = require(json && out, "aux_from_json: null argument")) return st;
  return guarded([&] {
    *out = new ncfam_aux{ncfam::aux_from_json(nlohmann::json::parse(json))};
  });
}

ncfam_status ncfam_aux_to_json(const ncfam_aux* aux, char** out_json) {
  if (auto st = require(aux && aux->spec && out_json, "aux_to_json: null argument"))
    return st;
  return guarded([&] { *out_json = dup_string(aux->spec->to_json().dump()); });
}

int ncfam_aux_dim(const ncfam_aux* aux) { return aux && aux->spec ? aux->spec->dim() : 0; }

ncfam_status ncfam_aux_log_density(const ncfam_aux* aux, const double* x, int dim,
                                   double* out) {
  if (auto st = require(aux && aux->spec && x && out, "aux_log_density: null argument"))
    return st;
  return guarded([&] {
    *out = aux->spec->log_density(Eigen::Map<const Eigen::VectorXd>(x, dim));
  });
}

ncfam_status ncfam_aux_sample(const ncfam_aux* aux, int n, uint64_t seed, double* out) {
  if (auto st = require(aux && aux->spec && out && n >= 0, "aux_sample: null argument"))
    return st;
  return guarded([&] { matrix_to_rowmajor(aux->spec->sample(n, seed), out); });
}

void ncfam_aux_free(ncfam_aux* aux) { delete aux; }

ncfam_status ncfam_problem_create_ica(int dim, double alpha, ncfam_kind kind,
                                      const double* data, int n_data, const double* noise,
                                      int n_noise, const ncfam_aux* aux,
                                      ncfam_problem** out) {
  if (auto st = require(data && noise && aux && aux->spec && out,
                        "problem_create_ica: null argument"))
    return st;
  return guarded([&] {
    auto model = std::make_shared<ncfam::IcaModel>(dim, alpha);
    *out = new ncfam_problem{ncfam::EstimationProblem::make(
        std::move(model), to_kind(kind), rowmajor_to_matrix(data, n_data, dim),
        rowmajor_to_matrix(noise, n_noise, dim), *aux->spec)};
  });
}

int ncfam_problem_theta_dim(const ncfam_problem* p) {
  return p ? p->problem.model->dim_theta() : 0;
}

ncfam_status ncfam_objective_value(const ncfam_problem* p, const double* theta,
                                   size_t len, double* value, int* diverged) {
  if (auto st = require(p && theta && value, "objective_value: null argument")) return st;
  return guarded([&] {
    const Eigen::VectorXd t =
        Eigen::Map<const Eigen::VectorXd>(theta, static_cast<Eigen::Index>(len));
    const ncfam::Evaluation e = ncfam::objective_value(p->problem, t);
    *value = e.value;
    if (diverged) *diverged = e.diverged ? 1 : 0;
  });
}

ncfam_status ncfam_objective_gradient(const ncfam_problem* p, const double* theta,
                                      size_t len, double* grad, int* diverged) {
  if (auto st = require(p && theta && grad, "objective_gradient: null argument"))
    return st;
  return guarded([&] {
    const Eigen::VectorXd t =
        Eigen::Map<const Eigen::VectorXd>(theta, static_cast<Eigen::Index>(len));
    const ncfam::GradientEvaluation e = ncfam::objective_gradient(p->problem, t);
    for (Eigen::Index i = 0; i < e.gradient.size(); ++i) grad[i] = e.gradient(i);
    if (diverged) *diverged = e.diverged ? 1 : 0;
  });
}

void ncfam_problem_free(ncfam_problem* p) { delete p; }

void ncfam_opt_config_default(ncfam_opt_config* cfg) {
  if (!cfg) return;
  const ncfam::OptimizerConfig d;
  cfg->max_iters = d.max_iters;
  cfg->grad_tol = d.grad_tol;
  cfg->step_tol = d.step_tol;
  cfg->wolfe_c1 = d.wolfe_c1;
  cfg->wolfe_c2 = d.wolfe_c2;
  cfg->restart_period = d.restart_period;
}

ncfam_status ncfam_maximize(const ncfam_problem* p, const double* theta0, size_t len,
                            const ncfam_opt_config* config, double* theta_out,
                            ncfam_opt_result* result) {
  if (auto st = require(p && theta0 && theta_out, "maximize: null argument")) return st;
  return guarded([&] {
    ncfam::OptimizerConfig cfg;
    if (config) {
      cfg.max_iters = config->max_iters;
      cfg.grad_tol = config->grad_tol;
      cfg.step_tol = config->step_tol;
      cfg.wolfe_c1 = config->wolfe_c1;
      cfg.wolfe_c2 = config->wolfe_c2;
      cfg.restart_period = config->restart_period;
    }
    const Eigen::VectorXd t0 =
        Eigen::Map<const Eigen::VectorXd>(theta0, static_cast<Eigen::Index>(len));
    const ncfam::MaximizeResult res = ncfam::maximize(p->problem, t0, cfg);
    for (Eigen::Index i = 0; i < res.theta.size(); ++i) theta_out[i] = res.theta(i);
    if (result) {
      switch (res.trace.status) {
        case ncfam::OptStatus::Converged: result->status = NCFAM_OPT_CONVERGED; break;
        case ncfam::OptStatus::MaxIters: result->status = NCFAM_OPT_MAX_ITERS; break;
        case ncfam::OptStatus::LineSearchFailed:
          result->status = NCFAM_OPT_LINE_SEARCH_FAILED;
          break;
        case ncfam::OptStatus::Diverged: result->status = NCFAM_OPT_DIVERGED; break;
      }
      result->iterations = static_cast<int>(res.trace.rows.size()) - 1;
      result->objective = res.trace.rows.back().objective;
      result->grad_norm = res.trace.rows.back().grad_norm;
    }
  });
}

ncfam_status ncfam_estimate_json(const char* config_json, const double* data, int n,
                                 int dim, char** out_json) {
  if (auto st = require(config_json && data && out_json && n > 0 && dim > 0,
                        "estimate_json: null or empty input"))
    return st;
  return guarded([&] {
    const ncfam::EstimateConfig cfg =
        ncfam::estimate_config_from_json(nlohmann::json::parse(config_json));
    const nlohmann::json fit =
        ncfam::estimate_from_data(cfg, rowmajor_to_matrix(data, n, dim));
    *out_json = dup_string(fit.dump(2));
  });
}

ncfam_status ncfam_predict_json(const char* config_json, char** out_json) {
  if (auto st = require(config_json && out_json, "predict_json: null argument")) return st;
  return guarded([&] {
    const nlohmann::json report =
        ncfam::predict_report_json(nlohmann::json::parse(config_json));
    *out_json = dup_string(report.dump(2));
  });
}

ncfam_status ncfam_gamma_opt(const char* config_json, double* gamma_hat, int* valid) {
  if (auto st = require(config_json && gamma_hat && valid, "gamma_opt: null argument"))
    return st;
  return guarded([&] {
    const ncfam::GammaHat gh =
        ncfam::gamma_opt_from_config(nlohmann::json::parse(config_json));
    *gamma_hat = gh.value;
    *valid = gh.valid ? 1 : 0;
  });
}

ncfam_status ncfam_sweep_n_csv(const char* config_json, const char* csv_path,
                               const char* meta_path) {
  if (auto st = require(config_json && csv_path, "sweep_n_csv: null argument")) return st;
  return guarded([&] {
    const ncfam::ResultsTable table = ncfam::sweep_sample_size(
        ncfam::sweep_n_config_from_json(nlohmann::json::parse(config_json)));
    ncfam::write_results(table, csv_path, meta_path ? meta_path : "");
  });
}

ncfam_status ncfam_sweep_gamma_csv(const char* config_json, const char* csv_path,
                                   const char* meta_path) {
  if (auto st = require(config_json && csv_path, "sweep_gamma_csv: null argument"))
    return st;
  return guarded([&] {
    const ncfam::ResultsTable table = ncfam::sweep_gamma(
        ncfam::sweep_gamma_config_from_json(nlohmann::json::parse(config_json)));
    ncfam::write_results(table, csv_path, meta_path ? meta_path : "");
  });
}

int ncfam_verify(void) { return ncfam::run_verify(std::cout) ? 0 : 1; }

}  // extern "C"
