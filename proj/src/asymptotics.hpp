#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>

#include "family.hpp"
#include "json.hpp"
#include "models.hpp"
#include "noise.hpp"

namespace ncfam {

// Monte-Carlo estimates of the theory matrices, all taken over one common
// sample from the data distribution so their errors are coupled:
//   I       = E_d[ psi psi^T g2'(q) ]
//   A_gamma = E_d[ (p_d/p_n) g2'(q)^2 psi psi^T ]
//   A       = E_d[ g2'(q)^2 psi psi^T ]
//   B       = v v^T,  v = E_d[ g2'(q) psi ]
// with q = pm(theta*)/pn evaluated through the log-ratio only. g2'(q) equals
// the data-side gradient weight g1'(q) q, which is how it is computed here.
//
// include_c=false switches psi to the Fisher score of the normalized family:
// the phi-score minus its mean under the data distribution (that mean is
// grad log Z, so centering is what normalizing the model does to the score).
// The mean is taken over the same sample, so the centered scores average to
// zero exactly.
struct TheoryBlocks {
  MatrixXd I, A_gamma, A, B;
  VectorXd v;
  bool i_diverged = false, a_gamma_diverged = false, a_diverged = false,
       b_diverged = false;
  int n_mc = 0;
  uint64_t seed = 0;
  bool include_c = true;
};

TheoryBlocks estimate_blocks(const ModelSpec& model, const VectorXd& theta_star,
                             const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                             Kind kind, int n_mc, uint64_t seed, bool include_c = true);

struct MatrixEstimate {
  MatrixXd value;
  bool diverged = false;
};

MatrixEstimate estimate_I(const ModelSpec& model, const VectorXd& theta_star,
                          const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                          Kind kind, int n_mc, uint64_t seed, bool include_c = true);

struct Inverse {
  MatrixXd inv;
  double cond = 0.0;
};

// Symmetric eigen-decomposition inverse; throws (with the condition number in
// the message) when the smallest eigenvalue is nonpositive or cond > 1e10.
Inverse invert_information(const MatrixXd& I);

// Sigma_g = I^{-1} [ gamma A_gamma + A - (1+gamma) B ] I^{-1}, symmetrized.
MatrixXd sigma_g(const MatrixXd& I, const MatrixXd& A_gamma, const MatrixXd& A,
                 const MatrixXd& B, double gamma);

// tr(Sigma) / N_d.
double predicted_mse(const MatrixXd& Sigma, int n_d);

struct GammaHat {
  double value = 0.0;
  bool valid = false;
};

// Closed-form minimizer of (1 + 1/gamma) tr(Sigma_g(gamma)):
// gamma_hat = sqrt( tr[I^{-1}(A - B)I^{-1}] / tr[I^{-1}(A_gamma - B)I^{-1}] ).
// Invalid when either trace is nonpositive or not finite.
GammaHat optimal_gamma(const MatrixXd& I, const MatrixXd& A_gamma, const MatrixXd& A,
                       const MatrixXd& B);

// Fisher information of the normalized family: second moment of the centered
// phi-score under the data distribution (no c component).
MatrixXd fisher_information(const ModelSpec& model, const VectorXd& theta_star,
                            const AuxiliarySpec& data_dist, int n_mc, uint64_t seed);

// Unnormalized log of the MSE-optimal auxiliary density for the IS pair:
// log ||I^{-1} psi(x)|| + log pm(x; theta*).
double optimal_noise_logdensity(const ModelSpec& model, const VectorXd& theta_star,
                                const MatrixXd& I, const VectorXd& x);

// Sample-size doubling heuristic on tr(A_gamma): estimates at n_mc and
// 4*n_mc for five derived seed pairs; reports divergence when the two
// estimates of a pair disagree by more than factor 1.5 (either direction)
// in a majority of pairs. A non-finite estimate counts as disagreement.
bool divergence_check(const ModelSpec& model, const VectorXd& theta_star,
                      const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                      Kind kind, int n_mc, uint64_t seed);

struct AsymptoticReport {
  Kind kind = Kind::NC;
  int n_mc = 0;
  uint64_t seed = 0;
  double gamma = 1.0;
  bool include_c = true;
  TheoryBlocks blocks;
  MatrixXd Sigma;
  bool sigma_valid = false;
  bool sigma_psd = false;
  double trace_sigma = 0.0;
  double cond_I = 0.0;
  std::map<int, double> mse_by_n;
  GammaHat gamma_hat;
  bool diverged = false;  // doubling-heuristic verdict

  nlohmann::json to_json() const;
};

AsymptoticReport make_report(const ModelSpec& model, const VectorXd& theta_star,
                             const AuxiliarySpec& data_dist, const AuxiliarySpec& aux,
                             Kind kind, int n_mc, uint64_t seed, double gamma,
                             const std::vector<int>& nd_list, bool include_c = true);

}  // namespace ncfam
