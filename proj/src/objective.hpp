#pragma once

#include <Eigen/Dense>
#include <memory>

#include "family.hpp"
#include "models.hpp"
#include "noise.hpp"

namespace ncfam {

// A fixed estimation instance: model, nonlinearity, the two sample sets, and
// the auxiliary log-densities precomputed once (samples never change across
// optimizer iterations). All density ratios enter downstream code through
// the log-ratio l = log pm(x; theta) - log pn(x); no probability ratio is
// ever formed directly.
struct EstimationProblem {
  std::shared_ptr<const ModelSpec> model;
  Kind kind = Kind::NC;
  MatrixXd data;    // N_d x d, rows are samples from p_d
  MatrixXd noise;   // N_n x d, rows are samples from p_n
  VectorXd data_logpn;
  VectorXd noise_logpn;
  double gamma = 1.0;  // N_d / N_n

  static EstimationProblem make(std::shared_ptr<const ModelSpec> model, Kind kind,
                                MatrixXd data, MatrixXd noise,
                                const AuxiliarySpec& aux);

  int n_data() const { return static_cast<int>(data.rows()); }
  int n_noise() const { return static_cast<int>(noise.rows()); }
};

struct Evaluation {
  double value = 0.0;
  // Set when the value is +inf or NaN (overflowing noise-side exponentials).
  // A value of -inf is reported unflagged: it is an honestly terrible point,
  // not a broken one, and a line search backs off from it on its own.
  bool diverged = false;
};

struct GradientEvaluation {
  VectorXd gradient;
  bool diverged = false;  // any non-finite component
};

struct FullEvaluation {
  double value = 0.0;
  VectorXd gradient;
  bool diverged = false;
};

// Sample objective: mean_d g1(l_i) - mean_n g2(l_j).
Evaluation objective_value(const EstimationProblem& p, const VectorXd& theta);

// Analytic gradient: mean_d w_d(l_i) psi(theta, x_i) - mean_n w_n(l_j) psi(theta, y_j).
GradientEvaluation objective_gradient(const EstimationProblem& p, const VectorXd& theta);

// Value and gradient in one pass over the samples.
FullEvaluation objective_eval(const EstimationProblem& p, const VectorXd& theta);

// The logistic-regression form of the NC objective:
// mean_d log sigmoid(l_i) + mean_n log sigmoid(-l_j).
// Equal to objective_value for kind NC up to rounding; kept as an
// independent algebraic route for tests. Throws unless p.kind == NC.
double nc_logistic_form(const EstimationProblem& p, const VectorXd& theta);

}  // namespace ncfam
