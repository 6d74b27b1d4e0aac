#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "json.hpp"
#include "models.hpp"

namespace ncfam {

// An auxiliary distribution: exact log-density plus seeded i.i.d. sampling.
// Specs are immutable after construction; sample() is reentrant.
class AuxiliarySpec {
 public:
  virtual ~AuxiliarySpec() = default;

  virtual int dim() const = 0;
  virtual double log_density(const VectorXd& x) const = 0;
  // n x dim matrix of draws, one row per sample; bit-identical for equal seeds.
  virtual MatrixXd sample(int n, uint64_t seed) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

std::unique_ptr<AuxiliarySpec> aux_from_json(const nlohmann::json& j);

class GaussianSpec final : public AuxiliarySpec {
 public:
  GaussianSpec(VectorXd mean, MatrixXd cov);  // cov must be symmetric positive definite

  int dim() const override { return static_cast<int>(mean_.size()); }
  double log_density(const VectorXd& x) const override;
  MatrixXd sample(int n, uint64_t seed) const override;
  nlohmann::json to_json() const override;

  const VectorXd& mean() const { return mean_; }
  const MatrixXd& cov() const { return cov_; }
  const MatrixXd& chol_lower() const { return chol_; }

 private:
  VectorXd mean_;
  MatrixXd cov_;
  MatrixXd chol_;
  double log_norm_;  // -d/2 log(2 pi) - sum log diag(L)
};

// Moment-matched Gaussian (denominator-n covariance). Needs at least d+1
// samples and a nonsingular sample covariance.
GaussianSpec fit_gaussian(const MatrixXd& data);

// Product of generalized-Gaussian sources pushed through B^{-1}; this is the
// exact data density of the ICA model and exists so p_n = p_d setups have a
// samplable spec with matching log-density code path.
class ProductGenGaussianSpec final : public AuxiliarySpec {
 public:
  ProductGenGaussianSpec(double alpha, MatrixXd B);

  int dim() const override { return static_cast<int>(B_.rows()); }
  double log_density(const VectorXd& x) const override;
  MatrixXd sample(int n, uint64_t seed) const override;
  nlohmann::json to_json() const override;

  double alpha() const { return alpha_; }
  const MatrixXd& B() const { return B_; }
  double c_star() const { return c_star_; }

 private:
  double alpha_;
  MatrixXd B_;
  MatrixXd B_inv_;
  double c_star_;
  double nu_;
};

// n draws from the 1-D generalized Gaussian with density proportional to
// exp(-|s/nu(alpha)|^alpha): |s| = nu * Gamma(1/alpha)^(1/alpha)-distributed
// magnitude via G^(1/alpha), G ~ Gamma(1/alpha, 1), with a random sign.
// Unit variance by construction of nu.
VectorXd gen_gaussian_sample(double alpha, int n, uint64_t seed);

}  // namespace ncfam
