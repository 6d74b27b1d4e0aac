#include "objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "numeric.hpp"

namespace ncfam {

EstimationProblem EstimationProblem::make(std::shared_ptr<const ModelSpec> model,
                                          Kind kind, MatrixXd data, MatrixXd noise,
                                          const AuxiliarySpec& aux) {
  if (!model) throw std::invalid_argument("EstimationProblem: null model");
  if (data.rows() < 1 || noise.rows() < 1)
    throw std::invalid_argument("EstimationProblem: need at least one sample on each side");
  if (data.cols() != model->dim_x() || noise.cols() != model->dim_x() ||
      aux.dim() != model->dim_x())
    throw std::invalid_argument("EstimationProblem: dimension mismatch");

  EstimationProblem p;
  p.model = std::move(model);
  p.kind = kind;
  p.data = std::move(data);
  p.noise = std::move(noise);
  p.gamma = static_cast<double>(p.data.rows()) / static_cast<double>(p.noise.rows());

  auto logpn_over = [&aux](const MatrixXd& m) {
    VectorXd v(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      v(i) = aux.log_density(m.row(i).transpose());
      if (!std::isfinite(v(i)))
        throw std::invalid_argument(
            "EstimationProblem: auxiliary log-density is not finite at a "
            "sample; p_n must be nonzero wherever samples fall");
    }
    return v;
  };
  p.data_logpn = logpn_over(p.data);
  p.noise_logpn = logpn_over(p.noise);
  return p;
}

namespace {

void check_theta(const EstimationProblem& p, const VectorXd& theta) {
  if (theta.size() != p.model->dim_theta())
    throw std::invalid_argument("objective: theta dimension mismatch");
}

double logratio_at(const EstimationProblem& p, const VectorXd& phi, double c,
                   const MatrixXd& samples, const VectorXd& logpn, Eigen::Index i) {
  return p.model->log_pm0(phi, samples.row(i).transpose()) + c - logpn(i);
}

}  // namespace

Evaluation objective_value(const EstimationProblem& p, const VectorXd& theta) {
  check_theta(p, theta);
  const VectorXd phi = theta.head(p.model->dim_phi());
  const double c = theta(p.model->dim_phi());

  const double sum_d = pairwise_sum<double>(0, p.data.rows(), [&](std::size_t i) {
    return g_values(p.kind, logratio_at(p, phi, c, p.data, p.data_logpn, i)).g1;
  });
  const double sum_n = pairwise_sum<double>(0, p.noise.rows(), [&](std::size_t i) {
    return g_values(p.kind, logratio_at(p, phi, c, p.noise, p.noise_logpn, i)).g2;
  });

  const double value = sum_d / p.n_data() - sum_n / p.n_noise();
  return {value, std::isnan(value) || value == std::numeric_limits<double>::infinity()};
}

GradientEvaluation objective_gradient(const EstimationProblem& p, const VectorXd& theta) {
  check_theta(p, theta);
  const VectorXd phi = theta.head(p.model->dim_phi());
  const double c = theta(p.model->dim_phi());

  const VectorXd grad_d =
      pairwise_sum<VectorXd>(0, p.data.rows(), [&](std::size_t i) -> VectorXd {
        const double l = logratio_at(p, phi, c, p.data, p.data_logpn, i);
        return weights_from_logratio(p.kind, l).data_weight *
               p.model->psi(theta, p.data.row(i).transpose());
      });
  const VectorXd grad_n =
      pairwise_sum<VectorXd>(0, p.noise.rows(), [&](std::size_t i) -> VectorXd {
        const double l = logratio_at(p, phi, c, p.noise, p.noise_logpn, i);
        return weights_from_logratio(p.kind, l).noise_weight *
               p.model->psi(theta, p.noise.row(i).transpose());
      });

  GradientEvaluation out;
  out.gradient = grad_d / p.n_data() - grad_n / p.n_noise();
  out.diverged = !out.gradient.allFinite();
  return out;
}

FullEvaluation objective_eval(const EstimationProblem& p, const VectorXd& theta) {
  check_theta(p, theta);
  const VectorXd phi = theta.head(p.model->dim_phi());
  const double c = theta(p.model->dim_phi());

  struct Term {
    double g;
    VectorXd wpsi;
    Term& operator+=(const Term& o) {
      g += o.g;
      wpsi += o.wpsi;
      return *this;
    }
  };

  const Term td = pairwise_sum<Term>(0, p.data.rows(), [&](std::size_t i) -> Term {
    const double l = logratio_at(p, phi, c, p.data, p.data_logpn, i);
    const double w = weights_from_logratio(p.kind, l).data_weight;
    return {g_values(p.kind, l).g1, w * p.model->psi(theta, p.data.row(i).transpose())};
  });
  const Term tn = pairwise_sum<Term>(0, p.noise.rows(), [&](std::size_t i) -> Term {
    const double l = logratio_at(p, phi, c, p.noise, p.noise_logpn, i);
    const double w = weights_from_logratio(p.kind, l).noise_weight;
    return {g_values(p.kind, l).g2, w * p.model->psi(theta, p.noise.row(i).transpose())};
  });

  FullEvaluation out;
  out.value = td.g / p.n_data() - tn.g / p.n_noise();
  out.gradient = td.wpsi / p.n_data() - tn.wpsi / p.n_noise();
  out.diverged = std::isnan(out.value) ||
                 out.value == std::numeric_limits<double>::infinity() ||
                 !out.gradient.allFinite();
  return out;
}

double nc_logistic_form(const EstimationProblem& p, const VectorXd& theta) {
  if (p.kind != Kind::NC)
    throw std::logic_error("nc_logistic_form: problem kind is not nc");
  check_theta(p, theta);
  const VectorXd phi = theta.head(p.model->dim_phi());
  const double c = theta(p.model->dim_phi());

  // Deliberately evaluated through log1p/exp rather than the saturating
  // softplus used by objective_value, so the two routes are independent.
  const double sum_d = pairwise_sum<double>(0, p.data.rows(), [&](std::size_t i) {
    const double l = logratio_at(p, phi, c, p.data, p.data_logpn, i);
    return -std::log1p(std::exp(-l));
  });
  const double sum_n = pairwise_sum<double>(0, p.noise.rows(), [&](std::size_t i) {
    const double l = logratio_at(p, phi, c, p.noise, p.noise_logpn, i);
    return -std::log1p(std::exp(l));
  });
  return sum_d / p.n_data() + sum_n / p.n_noise();
}

}  // namespace ncfam
