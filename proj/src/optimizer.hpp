#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "objective.hpp"

namespace ncfam {

struct OptimizerConfig {
  int max_iters = 500;
  double grad_tol = 1e-6;   // on the gradient infinity norm
  double step_tol = 1e-10;  // displacements at or below this are a stall
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.1;
  int restart_period = 0;  // 0: restart every dim(theta) iterations
};

enum class OptStatus { Converged, MaxIters, LineSearchFailed, Diverged };
const char* opt_status_name(OptStatus s);

struct TraceRow {
  int iter;
  double objective;
  double grad_norm;  // infinity norm, matching the stopping rule
  double step;       // accepted displacement 2-norm
};

struct OptimizationTrace {
  std::vector<TraceRow> rows;
  OptStatus status = OptStatus::MaxIters;
};

// CSV with header iter,objective,grad_norm,step.
std::string trace_csv(const OptimizationTrace& trace);

using ObjectiveFn = std::function<FullEvaluation(const VectorXd&)>;

struct MaximizeResult {
  VectorXd theta;
  OptimizationTrace trace;
};

// Polak-Ribiere+ conjugate ascent with a strong-Wolfe line search.
// Directions restart to steepest ascent every restart_period iterations and
// whenever the PR coefficient clamps to zero. Trial points whose evaluation
// overflows (diverged flag) are treated as infinitely bad, which makes the
// line search back off; after 30 such rejections in one search the run stops
// with LineSearchFailed and the best iterate so far.
// Throws std::invalid_argument if the objective is not finite at theta0.
MaximizeResult maximize(const ObjectiveFn& objective, const VectorXd& theta0,
                        const OptimizerConfig& config = {});

MaximizeResult maximize(const EstimationProblem& problem, const VectorXd& theta0,
                        const OptimizerConfig& config = {});

// Adapter: one fused value+gradient evaluation per point. Model domain errors
// at trial points (e.g. a nonpositive precision) surface as value -inf so the
// line search treats them as out of bounds.
ObjectiveFn make_objective(const EstimationProblem& problem);

// Component-wise central differences with absolute step h.
VectorXd finite_diff_gradient(const std::function<double(const VectorXd&)>& f,
                              const VectorXd& theta, double h);

}  // namespace ncfam
