#include "asymptotics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "numeric.hpp"
#include "rng.hpp"

namespace ncfam {

namespace {

// Mean of the phi-score over the sample rows; equals grad log Z(phi*) in the
// population limit.
VectorXd score_mean(const ModelSpec& model, const VectorXd& phi, const MatrixXd& sample) {
  return pairwise_sum<VectorXd>(0, sample.rows(), [&](std::size_t r) -> VectorXd {
           return model.score_phi(phi, sample.row(r).transpose());
         }) /
         static_cast<double>(sample.rows());
}

nlohmann::json matrix_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TheoryBlocks estimate_blocks(const ModelSpec& model, const VectorXd& theta_star,
                             const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                             Kind kind, int n_mc, uint64_t seed, bool include_c) {
  if (n_mc < 1) throw std::invalid_argument("estimate_blocks: n_mc must be >= 1");
  if (theta_star.size() != model.dim_theta())
    throw std::invalid_argument("estimate_blocks: theta dimension mismatch");

  const MatrixXd sample = data_dist.sample(n_mc, seed);
  const VectorXd phi = theta_star.head(model.dim_phi());
  const VectorXd center =
      include_c ? VectorXd() : score_mean(model, phi, sample);

  struct Accum {
    MatrixXd i, a_gamma, a;
    VectorXd v;
    Accum& operator+=(const Accum& o) {
      i += o.i;
      a_gamma += o.a_gamma;
      a += o.a;
      v += o.v;
      return *this;
    }
  };

  const Accum total = pairwise_sum<Accum>(0, n_mc, [&](std::size_t r) -> Accum {
    const VectorXd x = sample.row(r).transpose();
    const VectorXd psi = include_c
                             ? model.psi(theta_star, x)
                             : VectorXd(model.score_phi(phi, x) - center);
    const double l = model.log_pm(theta_star, x) - aux.log_density(x);
    const double w = weights_from_logratio(kind, l).data_weight;  // g2'(q)
    const double ratio = std::exp(l);                             // p_d/p_n at truth
    const MatrixXd outer = psi * psi.transpose();
    Accum acc;
    acc.i = w * outer;
    acc.a = (w * w) * outer;
    acc.a_gamma = ratio * acc.a;
    acc.v = w * psi;
    return acc;
  });

  TheoryBlocks out;
  out.n_mc = n_mc;
  out.seed = seed;
  out.include_c = include_c;
  const double n = static_cast<double>(n_mc);
  auto sym = [](const MatrixXd& m) { return MatrixXd(0.5 * (m + m.transpose())); };
  out.I = sym(total.i / n);
  out.A_gamma = sym(total.a_gamma / n);
  out.A = sym(total.a / n);
  out.v = total.v / n;
  out.B = out.v * out.v.transpose();
  out.i_diverged = !out.I.allFinite();
  out.a_gamma_diverged = !out.A_gamma.allFinite();
  out.a_diverged = !out.A.allFinite();
  out.b_diverged = !out.B.allFinite();
  return out;
}

MatrixEstimate estimate_I(const ModelSpec& model, const VectorXd& theta_star,
                          const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                          Kind kind, int n_mc, uint64_t seed, bool include_c) {
  const TheoryBlocks b =
      estimate_blocks(model, theta_star, data_dist, aux, kind, n_mc, seed, include_c);
  return {b.I, b.i_diverged};
}

Inverse invert_information(const MatrixXd& I) {
  if (I.rows() != I.cols()) throw std::invalid_argument("invert_information: not square");
  if (!I.allFinite())
    throw std::runtime_error("invert_information: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(I);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("invert_information: eigen-decomposition failed");
  const VectorXd ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || cond > 1e10) {
    std::ostringstream msg;
    msg << "information matrix is numerically singular (condition number " << cond
        << "); the model is not identifiable in this configuration";
    throw SingularError(msg.str());
  }
  Inverse out;
  out.inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
  out.cond = cond;
  return out;
}

MatrixXd sigma_g(const MatrixXd& I, const MatrixXd& A_gamma, const MatrixXd& A,
                 const MatrixXd& B, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("sigma_g: gamma must be positive");
  const Inverse inv = invert_information(I);
  const MatrixXd middle = gamma * A_gamma + A - (1.0 + gamma) * B;
  const MatrixXd sigma = inv.inv * middle * inv.inv;
  return 0.5 * (sigma + sigma.transpose());
}

double predicted_mse(const MatrixXd& Sigma, int n_d) {
  if (n_d < 1) throw std::invalid_argument("predicted_mse: N_d must be >= 1");
  return Sigma.trace() / static_cast<double>(n_d);
}

GammaHat optimal_gamma(const MatrixXd& I, const MatrixXd& A_gamma, const MatrixXd& A,
                       const MatrixXd& B) {
  const Inverse inv = invert_information(I);
  const double t_const = (inv.inv * (A - B) * inv.inv).trace();
  const double t_linear = (inv.inv * (A_gamma - B) * inv.inv).trace();
  GammaHat out;
  if (!std::isfinite(t_const) || !std::isfinite(t_linear) || t_const <= 0.0 ||
      t_linear <= 0.0)
    return out;
  out.value = std::sqrt(t_const / t_linear);
  out.valid = true;
  return out;
}

MatrixXd fisher_information(const ModelSpec& model, const VectorXd& theta_star,
                            const AuxiliarySpec& data_dist, int n_mc, uint64_t seed) {
  if (n_mc < 1) throw std::invalid_argument("fisher_information: n_mc must be >= 1");
  const MatrixXd sample = data_dist.sample(n_mc, seed);
  const VectorXd phi = theta_star.head(model.dim_phi());
  const VectorXd center = score_mean(model, phi, sample);
  const MatrixXd total =
      pairwise_sum<MatrixXd>(0, n_mc, [&](std::size_t r) -> MatrixXd {
        const VectorXd s = model.score_phi(phi, sample.row(r).transpose()) - center;
        return s * s.transpose();
      });
  const MatrixXd m = total / static_cast<double>(n_mc);
  return 0.5 * (m + m.transpose());
}

double optimal_noise_logdensity(const ModelSpec& model, const VectorXd& theta_star,
                                const MatrixXd& I, const VectorXd& x) {
  const Inverse inv = invert_information(I);
  const VectorXd psi = model.psi(theta_star, x);
  const double norm = (inv.inv * psi).norm();
  return std::log(norm) + model.log_pm(theta_star, x);
}

namespace {

double trace_a_gamma(const ModelSpec& model, const VectorXd& theta_star,
                     const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                     Kind kind, int n_mc, uint64_t seed) {
  const MatrixXd sample = data_dist.sample(n_mc, seed);
  const double total = pairwise_sum<double>(0, n_mc, [&](std::size_t r) {
    const VectorXd x = sample.row(r).transpose();
    const double l = model.log_pm(theta_star, x) - aux.log_density(x);
    const double w = weights_from_logratio(kind, l).data_weight;
    return std::exp(l) * w * w * model.psi(theta_star, x).squaredNorm();
  });
  return total / static_cast<double>(n_mc);
}

}  // namespace

bool divergence_check(const ModelSpec& model, const VectorXd& theta_star,
                      const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                      Kind kind, int n_mc, uint64_t seed) {
  int votes = 0;
  for (int pair = 0; pair < 5; ++pair) {
    const double small = trace_a_gamma(model, theta_star, data_dist, aux, kind, n_mc,
                                       derive_seed(seed, pair, 1));
    const double large = trace_a_gamma(model, theta_star, data_dist, aux, kind,
                                       4 * n_mc, derive_seed(seed, pair, 2));
    // A finite trace concentrates, so the two estimates agree; a divergent one
    // is dominated by its largest single draw and the pair disagrees wildly in
    // one direction or the other. Vote on disagreement beyond factor 1.5.
    const double ratio = large / small;
    if (!std::isfinite(small) || !std::isfinite(large) || small <= 0.0 ||
        ratio > 1.5 || ratio < 1.0 / 1.5)
      ++votes;
  }
  return votes >= 3;
}

nlohmann::json AsymptoticReport::to_json() const {
  nlohmann::json mse = nlohmann::json::array();
  for (const auto& [n, v] : mse_by_n) mse.push_back({{"n_d", n}, {"mse", v}});
  return {
      {"kind", kind_name(kind)},
      {"n_mc", n_mc},
      {"seed", seed},
      {"gamma", gamma},
      {"include_c", include_c},
      {"I", matrix_json(blocks.I)},
      {"A_gamma", matrix_json(blocks.A_gamma)},
      {"A", matrix_json(blocks.A)},
      {"B", matrix_json(blocks.B)},
      {"Sigma", sigma_valid ? matrix_json(Sigma) : nlohmann::json()},
      {"sigma_valid", sigma_valid},
      {"sigma_psd", sigma_psd},
      {"trace_sigma", sigma_valid ? nlohmann::json(trace_sigma) : nlohmann::json()},
      {"cond_I", cond_I},
      {"predicted_mse", std::move(mse)},
      {"gamma_hat", gamma_hat.valid ? nlohmann::json(gamma_hat.value) : nlohmann::json()},
      {"gamma_hat_valid", gamma_hat.valid},
      {"diverged",
       {{"overall", diverged},
        {"I", blocks.i_diverged},
        {"A_gamma", blocks.a_gamma_diverged},
        {"A", blocks.a_diverged},
        {"B", blocks.b_diverged}}},
  };
}

AsymptoticReport make_report(const ModelSpec& model, const VectorXd& theta_star,
                             const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                             Kind kind, int n_mc, uint64_t seed, double gamma,
                             const std::vector<int>& nd_list, bool include_c) {
  AsymptoticReport rep;
  rep.kind = kind;
  rep.n_mc = n_mc;
  rep.seed = seed;
  rep.gamma = gamma;
  rep.include_c = include_c;
  rep.blocks = estimate_blocks(model, theta_star, data_dist, aux, kind, n_mc,
                               derive_seed(seed, 1), include_c);
  rep.diverged = divergence_check(model, theta_star, data_dist, aux, kind,
                                  std::max(1000, n_mc / 16), derive_seed(seed, 2));

  const bool blocks_ok = !rep.blocks.i_diverged && !rep.blocks.a_gamma_diverged &&
                         !rep.blocks.a_diverged && !rep.blocks.b_diverged;
  if (blocks_ok) {
    try {
      const Inverse inv = invert_information(rep.blocks.I);
      rep.cond_I = inv.cond;
      rep.Sigma = sigma_g(rep.blocks.I, rep.blocks.A_gamma, rep.blocks.A, rep.blocks.B,
                          gamma);
      rep.sigma_valid = true;
      rep.trace_sigma = rep.Sigma.trace();
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(rep.Sigma);
      rep.sigma_psd = es.info() == Eigen::Success &&
                      es.eigenvalues().minCoeff() >=
                          -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
      for (int n : nd_list) rep.mse_by_n[n] = predicted_mse(rep.Sigma, n);
      rep.gamma_hat =
          optimal_gamma(rep.blocks.I, rep.blocks.A_gamma, rep.blocks.A, rep.blocks.B);
    } catch (const std::runtime_error&) {
      rep.sigma_valid = false;  // singular information matrix; leave fields empty
    }
  }
  return rep;
}

}  // namespace ncfam
