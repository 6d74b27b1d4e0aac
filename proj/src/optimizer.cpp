#include "optimizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ncfam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxDivergedTrials = 30;
constexpr int kMaxZoomIters = 60;
constexpr double kMaxStep = 1e12;

void validate(const OptimizerConfig& cfg) {
  if (cfg.max_iters < 1) throw std::invalid_argument("optimizer: max_iters must be >= 1");
  if (!(cfg.grad_tol > 0.0) || !(cfg.step_tol > 0.0))
    throw std::invalid_argument("optimizer: tolerances must be positive");
  if (!(0.0 < cfg.wolfe_c1 && cfg.wolfe_c1 < cfg.wolfe_c2 && cfg.wolfe_c2 < 1.0))
    throw std::invalid_argument("optimizer: need 0 < c1 < c2 < 1");
  if (cfg.restart_period < 0)
    throw std::invalid_argument("optimizer: restart_period must be >= 0");
}

// Internal state is in minimization form: F = -J, gradF = -gradJ.
struct PointEval {
  VectorXd theta;
  double f = kInf;
  VectorXd grad;
  double slope = kInf;  // gradF . d along the current direction
  bool usable = false;
};

struct LineEvaluator {
  const ObjectiveFn* objective;
  const VectorXd* origin;
  const VectorXd* direction;
  int diverged_trials = 0;

  PointEval at(double alpha) {
    PointEval e;
    e.theta = *origin + alpha * *direction;
    const FullEvaluation fe = (*objective)(e.theta);
    e.f = -fe.value;
    e.grad = fe.gradient;
    e.usable = std::isfinite(e.f) && !fe.diverged && fe.gradient.allFinite();
    e.slope = e.usable ? -fe.gradient.dot(*direction) : kInf;
    if (!e.usable) ++diverged_trials;
    return e;
  }
};

// Minimizer of the cubic Hermite interpolant through (a, fa, da), (b, fb, db).
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double sign = (b - a) >= 0.0 ? 1.0 : -1.0;
  const double d2 = sign * std::sqrt(disc);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (db + d2 - d1) / denom;
}

struct LineSearchResult {
  PointEval point;
  double alpha = 0.0;
  bool ok = false;
};

// Strong Wolfe line search (bracket + zoom with cubic interpolation and
// bisection safeguards). f0/slope0 describe alpha = 0.
LineSearchResult wolfe_line_search(LineEvaluator& ev, double f0, double slope0,
                                   double c1, double c2, double alpha_init) {
  LineSearchResult out;
  if (!(slope0 < 0.0)) return out;

  auto armijo_ok = [&](double alpha, double f) { return f <= f0 + c1 * alpha * slope0; };
  auto curvature_ok = [&](double slope) { return std::abs(slope) <= -c2 * slope0; };

  struct End {
    double alpha, f, slope;
    bool usable;
  };

  auto zoom = [&](End lo, End hi) {
    // Invariant: lo satisfies Armijo with the lowest f seen, and the interval
    // brackets a strong-Wolfe point (or hi is unusable territory).
    for (int it = 0; it < kMaxZoomIters; ++it) {
      if (ev.diverged_trials > kMaxDivergedTrials) return;
      double a;
      const double width = hi.alpha - lo.alpha;
      if (hi.usable) {
        a = cubic_minimizer(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope);
        const double lo_guard = lo.alpha + 1e-3 * width;
        const double hi_guard = hi.alpha - 1e-3 * width;
        const double lo_bound = std::min(lo_guard, hi_guard);
        const double hi_bound = std::max(lo_guard, hi_guard);
        if (!std::isfinite(a) || a < lo_bound || a > hi_bound)
          a = 0.5 * (lo.alpha + hi.alpha);
      } else {
        a = 0.5 * (lo.alpha + hi.alpha);
      }
      if (std::abs(width) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;

      PointEval trial = ev.at(a);
      if (!trial.usable || !armijo_ok(a, trial.f) || trial.f >= lo.f) {
        hi = {a, trial.f, trial.slope, trial.usable};
        continue;
      }
      if (curvature_ok(trial.slope)) {
        out.point = std::move(trial);
        out.alpha = a;
        out.ok = true;
        return;
      }
      if (trial.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = {a, trial.f, trial.slope, true};
    }
    // Fall back to the best Armijo point if the interval collapsed on one.
    if (lo.alpha > 0.0 && lo.usable && armijo_ok(lo.alpha, lo.f)) {
      PointEval best = ev.at(lo.alpha);
      if (best.usable) {
        out.point = std::move(best);
        out.alpha = lo.alpha;
        out.ok = true;
      }
    }
  };

  End prev{0.0, f0, slope0, true};
  double alpha = alpha_init;
  for (int it = 0; it < 40 && alpha <= kMaxStep; ++it) {
    if (ev.diverged_trials > kMaxDivergedTrials) return out;
    PointEval trial = ev.at(alpha);
    if (!trial.usable || !armijo_ok(alpha, trial.f) || (it > 0 && trial.f >= prev.f)) {
      zoom(prev, {alpha, trial.f, trial.slope, trial.usable});
      return out;
    }
    if (curvature_ok(trial.slope)) {
      out.point = std::move(trial);
      out.alpha = alpha;
      out.ok = true;
      return out;
    }
    if (trial.slope >= 0.0) {
      zoom({alpha, trial.f, trial.slope, true}, prev);
      return out;
    }
    prev = {alpha, trial.f, trial.slope, true};
    alpha *= 2.0;
  }
  return out;
}

}  // namespace

const char* opt_status_name(OptStatus s) {
  switch (s) {
    case OptStatus::Converged: return "converged";
    case OptStatus::MaxIters: return "max_iters";
    case OptStatus::LineSearchFailed: return "line_search_failed";
    case OptStatus::Diverged: return "diverged";
  }
  return "?";
}

std::string trace_csv(const OptimizationTrace& trace) {
  std::string out = "iter,objective,grad_norm,step\n";
  char buf[32];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
  };
  for (const TraceRow& r : trace.rows) {
    out += std::to_string(r.iter);
    out += ',';
    put(r.objective);
    out += ',';
    put(r.grad_norm);
    out += ',';
    put(r.step);
    out += '\n';
  }
  return out;
}

MaximizeResult maximize(const ObjectiveFn& objective, const VectorXd& theta0,
                        const OptimizerConfig& config) {
  validate(config);
  const int dim = static_cast<int>(theta0.size());
  const int restart_period = config.restart_period > 0 ? config.restart_period : dim;

  FullEvaluation cur = objective(theta0);
  if (!std::isfinite(cur.value))
    throw std::invalid_argument("maximize: objective is not finite at theta0");

  MaximizeResult result;
  result.theta = theta0;
  result.trace.status = OptStatus::MaxIters;

  VectorXd theta = theta0;
  VectorXd grad_min = -cur.gradient;  // minimization gradient
  double f = -cur.value;
  result.trace.rows.push_back({0, cur.value, cur.gradient.lpNorm<Eigen::Infinity>(), 0.0});

  if (cur.diverged || !grad_min.allFinite()) {
    result.trace.status = OptStatus::Diverged;
    return result;
  }

  VectorXd direction = -grad_min;
  int since_restart = 0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    if (cur.gradient.lpNorm<Eigen::Infinity>() <= config.grad_tol) {
      result.trace.status = OptStatus::Converged;
      return result;
    }

    bool steepest = false;
    double slope0 = grad_min.dot(direction);
    if (!(slope0 < 0.0) || since_restart >= restart_period) {
      direction = -grad_min;
      slope0 = grad_min.dot(direction);
      since_restart = 0;
      steepest = true;
    }

    const double alpha_init =
        iter == 1 ? std::min(1.0, 1.0 / std::max(1.0, grad_min.lpNorm<Eigen::Infinity>()))
                  : 1.0;
    LineEvaluator ev{&objective, &theta, &direction, 0};
    LineSearchResult ls =
        wolfe_line_search(ev, f, slope0, config.wolfe_c1, config.wolfe_c2, alpha_init);
    if (!ls.ok && !steepest) {
      // A conjugate direction can die where the objective is only piecewise
      // smooth; retry the search along the plain gradient before giving up.
      direction = -grad_min;
      slope0 = grad_min.dot(direction);
      since_restart = 0;
      ls = wolfe_line_search(ev, f, slope0, config.wolfe_c1, config.wolfe_c2, alpha_init);
    }
    if (!ls.ok) {
      result.trace.status = ev.diverged_trials > kMaxDivergedTrials
                                ? OptStatus::Diverged
                                : OptStatus::LineSearchFailed;
      return result;  // best-so-far theta
    }

    const VectorXd displacement = ls.point.theta - theta;
    if (displacement.lpNorm<Eigen::Infinity>() <= config.step_tol) {
      // A Wolfe step this small with the gradient still above tolerance is a
      // stall (the gradient check at the top of the loop handles genuine
      // convergence); keep the current iterate.
      result.trace.status = OptStatus::LineSearchFailed;
      return result;
    }
    const double step_norm = displacement.norm();
    const VectorXd grad_new = -ls.point.grad;  // back to minimization form

    theta = ls.point.theta;
    f = ls.point.f;
    result.theta = theta;
    result.trace.rows.push_back(
        {iter, -f, ls.point.grad.lpNorm<Eigen::Infinity>(), step_norm});

    // Polak-Ribiere+ on the minimization gradients.
    const double denom = grad_min.squaredNorm();
    double beta = denom > 0.0 ? grad_new.dot(grad_new - grad_min) / denom : 0.0;
    beta = std::max(0.0, beta);
    direction = -grad_new + beta * direction;
    if (beta == 0.0) since_restart = 0;
    ++since_restart;

    grad_min = grad_new;
    cur.gradient = ls.point.grad;
  }
  return result;
}

ObjectiveFn make_objective(const EstimationProblem& problem) {
  return [&problem](const VectorXd& theta) -> FullEvaluation {
    try {
      return objective_eval(problem, theta);
    } catch (const std::domain_error&) {
      FullEvaluation out;
      out.value = -kInf;
      out.gradient = VectorXd::Zero(theta.size());
      out.diverged = false;
      return out;
    }
  };
}

MaximizeResult maximize(const EstimationProblem& problem, const VectorXd& theta0,
                        const OptimizerConfig& config) {
  return maximize(make_objective(problem), theta0, config);
}

VectorXd finite_diff_gradient(const std::function<double(const VectorXd&)>& f,
                              const VectorXd& theta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be positive");
  VectorXd grad(theta.size());
  VectorXd probe = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    probe(k) = theta(k) + h;
    const double up = f(probe);
    probe(k) = theta(k) - h;
    const double down = f(probe);
    probe(k) = theta(k);
    grad(k) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace ncfam
