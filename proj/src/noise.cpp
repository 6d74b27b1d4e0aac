#include "noise.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "numeric.hpp"
#include "rng.hpp"

namespace ncfam {

namespace {

std::vector<double> to_vec(const VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

std::vector<double> to_vec_rowmajor(const MatrixXd& m) {
  std::vector<double> out(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
  return out;
}

MatrixXd from_vec_rowmajor(const std::vector<double>& v, int rows, int cols) {
  if (static_cast<size_t>(rows) * cols != v.size())
    throw std::invalid_argument("matrix JSON: size mismatch");
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v[i * cols + j];
  return m;
}

}  // namespace

GaussianSpec::GaussianSpec(VectorXd mean, MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
    throw std::invalid_argument("GaussianSpec: dimension mismatch");
  Eigen::LLT<MatrixXd> llt(0.5 * (cov_ + cov_.transpose()));
  if (llt.info() != Eigen::Success)
    throw SingularError(
        "GaussianSpec: covariance is not positive definite; regularize it "
        "(e.g. add a small ridge) before constructing the spec");
  chol_ = llt.matrixL();
  log_norm_ = -0.5 * dim() * std::log(2.0 * kPi) - chol_.diagonal().array().log().sum();
}

double GaussianSpec::log_density(const VectorXd& x) const {
  if (x.size() != mean_.size())
    throw std::invalid_argument("GaussianSpec: x dimension mismatch");
  const VectorXd z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

MatrixXd GaussianSpec::sample(int n, uint64_t seed) const {
  if (n < 0) throw std::invalid_argument("GaussianSpec: n must be >= 0");
  Rng rng(seed);
  const int d = dim();
  MatrixXd out(n, d);
  VectorXd z(d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) z(j) = rng.normal();
    out.row(i) = (mean_ + chol_ * z).transpose();
  }
  return out;
}

nlohmann::json GaussianSpec::to_json() const {
  return {{"type", "gaussian"}, {"mean", to_vec(mean_)}, {"cov", to_vec_rowmajor(cov_)}};
}

GaussianSpec fit_gaussian(const MatrixXd& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < d + 1)
    throw std::invalid_argument("fit_gaussian: need at least dim+1 samples");
  const VectorXd mean = data.colwise().mean();
  const MatrixXd centered = data.rowwise() - mean.transpose();
  // Denominator n, not n-1; fixed for reproducibility.
  const MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw SingularError(
        "fit_gaussian: sample covariance is singular; add a ridge or provide "
        "more varied data");
  return {mean, cov};
}

ProductGenGaussianSpec::ProductGenGaussianSpec(double alpha, MatrixXd B)
    : alpha_(alpha), B_(std::move(B)) {
  if (B_.rows() != B_.cols())
    throw std::invalid_argument("ProductGenGaussianSpec: B must be square");
  c_star_ = ica_true_c(B_, alpha_);  // validates alpha and det B
  B_inv_ = B_.inverse();
  nu_ = gg_constants(alpha_).nu;
}

double ProductGenGaussianSpec::log_density(const VectorXd& x) const {
  return ica_log_pm0(B_, alpha_, x) + c_star_;
}

MatrixXd ProductGenGaussianSpec::sample(int n, uint64_t seed) const {
  if (n < 0) throw std::invalid_argument("ProductGenGaussianSpec: n must be >= 0");
  const int d = dim();
  MatrixXd s(n, d);
  for (int j = 0; j < d; ++j)
    s.col(j) = gen_gaussian_sample(alpha_, n, derive_seed(seed, j));
  // x = B^{-1} s per sample, rows are samples.
  return s * B_inv_.transpose();
}

nlohmann::json ProductGenGaussianSpec::to_json() const {
  return {{"type", "gengauss"},
          {"alpha", alpha_},
          {"B", to_vec_rowmajor(B_)},
          {"dim", dim()}};
}

std::unique_ptr<AuxiliarySpec> aux_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian") {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const int d = static_cast<int>(mean.size());
    VectorXd mu = Eigen::Map<const VectorXd>(mean.data(), d);
    MatrixXd cov = from_vec_rowmajor(j.at("cov").get<std::vector<double>>(), d, d);
    return std::make_unique<GaussianSpec>(std::move(mu), std::move(cov));
  }
  if (type == "gengauss") {
    const int d = j.at("dim").get<int>();
    MatrixXd B = from_vec_rowmajor(j.at("B").get<std::vector<double>>(), d, d);
    return std::make_unique<ProductGenGaussianSpec>(j.at("alpha").get<double>(),
                                                    std::move(B));
  }
  throw std::invalid_argument("auxiliary spec JSON: unknown type '" + type + "'");
}

VectorXd gen_gaussian_sample(double alpha, int n, uint64_t seed) {
  if (!(alpha > 0.0))
    throw std::domain_error("gen_gaussian_sample: alpha must be positive");
  if (n < 0) throw std::invalid_argument("gen_gaussian_sample: n must be >= 0");
  const double nu = gg_constants(alpha).nu;
  Rng rng(seed);
  VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(1.0 / alpha);
    const double mag = nu * std::pow(g, 1.0 / alpha);
    out(i) = rng.uniform01() < 0.5 ? -mag : mag;
  }
  return out;
}

}  // namespace ncfam
