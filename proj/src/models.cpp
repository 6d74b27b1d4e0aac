#include "models.hpp"

#include <cmath>
#include <stdexcept>

#include "numeric.hpp"

namespace ncfam {

double ModelSpec::log_pm(const VectorXd& theta, const VectorXd& x) const {
  if (theta.size() != dim_theta())
    throw std::invalid_argument("ModelSpec: theta dimension mismatch");
  return log_pm0(theta.head(dim_phi()), x) + theta(dim_phi());
}

VectorXd ModelSpec::psi(const VectorXd& theta, const VectorXd& x) const {
  if (theta.size() != dim_theta())
    throw std::invalid_argument("ModelSpec: theta dimension mismatch");
  VectorXd out(dim_theta());
  out.head(dim_phi()) = score_phi(theta.head(dim_phi()), x);
  out(dim_phi()) = 1.0;
  return out;
}

GgConstants gg_constants(double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("gg_constants: alpha must be positive");
  const double g1 = std::tgamma(1.0 / alpha);
  const double g3 = std::tgamma(3.0 / alpha);
  return {2.0 / alpha * g1, std::sqrt(g1 / g3)};
}

namespace {

double ica_log_pm0_nu(const MatrixXd& B, double alpha, double nu, const VectorXd& x) {
  if (B.rows() != B.cols() || B.cols() != x.size())
    throw std::invalid_argument("ica_log_pm0: dimension mismatch");
  const VectorXd y = B * x;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    acc += std::pow(std::abs(y(i)) / nu, alpha);
  return -acc;
}

MatrixXd ica_score_nu(const MatrixXd& B, double alpha, double nu, const VectorXd& x) {
  if (B.rows() != B.cols() || B.cols() != x.size())
    throw std::invalid_argument("ica_score: dimension mismatch");
  const Eigen::Index d = B.rows();
  const VectorXd y = B * x;
  MatrixXd out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (y(i) == 0.0) {
      out.row(i).setZero();
      continue;
    }
    const double s = y(i) > 0.0 ? 1.0 : -1.0;
    const double w = -(alpha / nu) * s * std::pow(std::abs(y(i)) / nu, alpha - 1.0);
    out.row(i) = w * x.transpose();
  }
  return out;
}

}  // namespace

double ica_log_pm0(const MatrixXd& B, double alpha, const VectorXd& x) {
  return ica_log_pm0_nu(B, alpha, gg_constants(alpha).nu, x);
}

MatrixXd ica_score(const MatrixXd& B, double alpha, const VectorXd& x) {
  return ica_score_nu(B, alpha, gg_constants(alpha).nu, x);
}

double ica_true_c(const MatrixXd& B, double alpha) {
  if (B.rows() != B.cols()) throw std::invalid_argument("ica_true_c: B must be square");
  const GgConstants gg = gg_constants(alpha);
  const double det = B.determinant();
  if (det == 0.0 || !std::isfinite(det))
    throw SingularError("ica_true_c: singular unmixing matrix");
  return std::log(std::abs(det)) -
         static_cast<double>(B.rows()) * std::log(gg.kappa * gg.nu);
}

IcaModel::IcaModel(int dim, double alpha) : dim_(dim), alpha_(alpha) {
  if (dim < 1) throw std::invalid_argument("IcaModel: dim must be >= 1");
  nu_ = gg_constants(alpha).nu;  // validates alpha > 0
}

MatrixXd IcaModel::unflatten(const VectorXd& phi, int dim) {
  if (phi.size() != static_cast<Eigen::Index>(dim) * dim)
    throw std::invalid_argument("IcaModel: phi size mismatch");
  MatrixXd B(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) B(i, j) = phi(i * dim + j);
  return B;
}

VectorXd IcaModel::flatten(const MatrixXd& B) {
  VectorXd phi(B.size());
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.cols(); ++j) phi(i * B.cols() + j) = B(i, j);
  return phi;
}

double IcaModel::log_pm0(const VectorXd& phi, const VectorXd& x) const {
  return ica_log_pm0_nu(unflatten(phi, dim_), alpha_, nu_, x);
}

VectorXd IcaModel::score_phi(const VectorXd& phi, const VectorXd& x) const {
  return flatten(ica_score_nu(unflatten(phi, dim_), alpha_, nu_, x));
}

double Gauss1dModel::log_pm0(const VectorXd& phi, const VectorXd& x) const {
  if (phi.size() != 1 || x.size() != 1)
    throw std::invalid_argument("Gauss1dModel: dimension mismatch");
  if (!(phi(0) > 0.0)) throw std::domain_error("Gauss1dModel: lambda must be positive");
  return -0.5 * phi(0) * x(0) * x(0);
}

VectorXd Gauss1dModel::score_phi(const VectorXd& phi, const VectorXd& x) const {
  if (phi.size() != 1 || x.size() != 1)
    throw std::invalid_argument("Gauss1dModel: dimension mismatch");
  if (!(phi(0) > 0.0)) throw std::domain_error("Gauss1dModel: lambda must be positive");
  VectorXd s(1);
  s(0) = -0.5 * x(0) * x(0);
  return s;
}

double gauss1d_true_c(double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("gauss1d_true_c: lambda must be positive");
  return 0.5 * std::log(lambda / (2.0 * kPi));
}

double gauss1d_fisher(double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("gauss1d_fisher: lambda must be positive");
  return 1.0 / (2.0 * lambda * lambda);
}

IcaGroundTruth IcaGroundTruth::from_mixing(MatrixXd A, double alpha, uint64_t seed) {
  if (A.rows() != A.cols()) throw std::invalid_argument("ground truth: A must be square");
  IcaGroundTruth t;
  t.A = std::move(A);
  t.B_star = t.A.inverse();
  t.alpha = alpha;
  t.c_star = ica_true_c(t.B_star, alpha);
  t.seed = seed;
  return t;
}

VectorXd IcaGroundTruth::theta_star() const {
  VectorXd theta(A.size() + 1);
  theta.head(A.size()) = IcaModel::flatten(B_star);
  theta(A.size()) = c_star;
  return theta;
}

nlohmann::json IcaGroundTruth::to_json() const {
  std::vector<double> a(A.size());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) a[i * A.cols() + j] = A(i, j);
  return {{"alpha", alpha}, {"A", a}, {"seed", seed}};
}

IcaGroundTruth IcaGroundTruth::from_json(const nlohmann::json& j) {
  const auto a = j.at("A").get<std::vector<double>>();
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(a.size()))));
  if (static_cast<size_t>(d) * d != a.size())
    throw std::invalid_argument("ground truth JSON: A is not square");
  MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) A(i, k) = a[i * d + k];
  return from_mixing(std::move(A), j.at("alpha").get<double>(),
                     j.value("seed", uint64_t{0}));
}

}  // namespace ncfam
