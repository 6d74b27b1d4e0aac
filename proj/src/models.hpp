#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "json.hpp"

namespace ncfam {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// An unnormalized log-density log pm0(x; phi) with analytic parameter score.
// The full parameter vector is theta = [phi, c], c the negative log-partition
// parameter in the last slot; log pm(x; theta) = log pm0(x; phi) + c.
class ModelSpec {
 public:
  virtual ~ModelSpec() = default;

  virtual int dim_x() const = 0;
  virtual int dim_phi() const = 0;
  virtual double log_pm0(const VectorXd& phi, const VectorXd& x) const = 0;
  virtual VectorXd score_phi(const VectorXd& phi, const VectorXd& x) const = 0;

  int dim_theta() const { return dim_phi() + 1; }
  double log_pm(const VectorXd& theta, const VectorXd& x) const;
  // Augmented score [score_phi, 1]; the c component is identically 1.
  VectorXd psi(const VectorXd& theta, const VectorXd& x) const;
};

// Generalized-Gaussian shape constants kappa(a) = (2/a)Gamma(1/a) and
// nu(a) = sqrt(Gamma(1/a)/Gamma(3/a)); nu makes the source variance 1.
struct GgConstants {
  double kappa;
  double nu;
};
GgConstants gg_constants(double alpha);

// log pm0 for the ICA model: -sum_i |(Bx)_i / nu(alpha)|^alpha.
double ica_log_pm0(const MatrixXd& B, double alpha, const VectorXd& x);

// d(log pm0)/dB, entry (i,j) = -(alpha/nu) sign((Bx)_i) |(Bx)_i/nu|^(alpha-1) x_j.
// Rows with (Bx)_i == 0 are set to zero (subgradient convention; such points
// have measure zero under continuous data).
MatrixXd ica_score(const MatrixXd& B, double alpha, const VectorXd& x);

// The c that normalizes the ICA model: log|det B| - d log(kappa nu).
double ica_true_c(const MatrixXd& B, double alpha);

// ICA energy model; phi is the row-major flattened d x d unmixing matrix.
class IcaModel final : public ModelSpec {
 public:
  IcaModel(int dim, double alpha);

  int dim_x() const override { return dim_; }
  int dim_phi() const override { return dim_ * dim_; }
  double log_pm0(const VectorXd& phi, const VectorXd& x) const override;
  VectorXd score_phi(const VectorXd& phi, const VectorXd& x) const override;

  double alpha() const { return alpha_; }
  static MatrixXd unflatten(const VectorXd& phi, int dim);
  static VectorXd flatten(const MatrixXd& B);

 private:
  int dim_;
  double alpha_;
  double nu_;
};

// 1-D precision-parameterized Gaussian energy: log pm0(x; lambda) = -lambda x^2/2,
// score_phi = -x^2/2. Analytic test model.
class Gauss1dModel final : public ModelSpec {
 public:
  int dim_x() const override { return 1; }
  int dim_phi() const override { return 1; }
  double log_pm0(const VectorXd& phi, const VectorXd& x) const override;
  VectorXd score_phi(const VectorXd& phi, const VectorXd& x) const override;
};

double gauss1d_true_c(double lambda);   // 0.5 log(lambda / (2 pi))
double gauss1d_fisher(double lambda);   // 1 / (2 lambda^2)

// Ground truth for simulated ICA data: mixing matrix A, its inverse B*, and
// the c* that makes the model a proper density.
struct IcaGroundTruth {
  MatrixXd A;
  MatrixXd B_star;
  double alpha = 1.0;
  double c_star = 0.0;
  uint64_t seed = 0;

  static IcaGroundTruth from_mixing(MatrixXd A, double alpha, uint64_t seed = 0);

  int dim() const { return static_cast<int>(A.rows()); }
  VectorXd theta_star() const;  // [flatten(B*), c*]

  nlohmann::json to_json() const;  // {alpha, A (row-major), seed}
  static IcaGroundTruth from_json(const nlohmann::json& j);
};

}  // namespace ncfam
