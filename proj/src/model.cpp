#include "gibbscal/model.hpp"

#include "gibbscal/errors.hpp"

namespace gibbscal {

ExperimentData::ExperimentData(Eigen::VectorXd x, Eigen::VectorXd y, std::string id)
    : x_(std::move(x)), y_(std::move(y)), id_(std::move(id)) {
  if (x_.size() != y_.size())
    fail(ErrorKind::Structural, "experiment '" + id_ + "': x and y differ in length");
  if (x_.size() < 2) fail(ErrorKind::Structural, "experiment '" + id_ + "': need at least two observations");
  for (Eigen::Index i = 1; i < x_.size(); ++i) {
    if (!(x_(i) > x_(i - 1)))
      fail(ErrorKind::Data, "experiment '" + id_ + "': x must be strictly increasing (row " + std::to_string(i + 1) + ")");
  }
  if (!x_.allFinite() || !y_.allFinite()) fail(ErrorKind::Data, "experiment '" + id_ + "': non-finite values");
}

ExperimentData ExperimentData::with_y(Eigen::VectorXd y) const { return ExperimentData(x_, std::move(y), id_); }

std::vector<Bounds> ForwardModel::theta_bounds() const { return std::vector<Bounds>(dim_theta()); }

bool ForwardModel::within_bounds(const Eigen::VectorXd& theta) const {
  const auto bounds = theta_bounds();
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!bounds[i].contains(theta(static_cast<Eigen::Index>(i)))) return false;
  }
  return true;
}

PolynomialModel::PolynomialModel(int degree, bool through_origin)
    : degree_(degree), through_origin_(through_origin) {
  if (degree < 0 || (through_origin && degree < 1))
    fail(ErrorKind::Configuration, "polynomial degree out of range");
}

std::size_t PolynomialModel::dim_theta() const {
  return static_cast<std::size_t>(through_origin_ ? degree_ : degree_ + 1);
}

std::string PolynomialModel::name() const {
  return through_origin_ ? "polynomial_origin_" + std::to_string(degree_) : "polynomial_" + std::to_string(degree_);
}

Eigen::MatrixXd PolynomialModel::design(const Eigen::VectorXd& x) const {
  const int first = through_origin_ ? 1 : 0;
  Eigen::MatrixXd X(x.size(), static_cast<Eigen::Index>(dim_theta()));
  for (int j = first; j <= degree_; ++j) X.col(j - first) = x.array().pow(j);
  return X;
}

Eigen::VectorXd PolynomialModel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim_theta())
    fail(ErrorKind::Structural, "polynomial model: wrong parameter count");
  return design(x) * theta;
}

FunctionModel::FunctionModel(std::string name, std::size_t dim_theta, Fn fn, std::vector<Bounds> bounds)
    : name_(std::move(name)), dim_(dim_theta), fn_(std::move(fn)), bounds_(std::move(bounds)) {
  if (bounds_.empty()) bounds_.resize(dim_);
  if (bounds_.size() != dim_) fail(ErrorKind::Configuration, "function model: bounds size mismatch");
}

Eigen::VectorXd FunctionModel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
  Eigen::VectorXd out = fn_(x, theta);
  if (out.size() != x.size()) fail(ErrorKind::Structural, "model '" + name_ + "' returned wrong output length");
  return out;
}

std::vector<Bounds> FunctionModel::theta_bounds() const { return bounds_; }

}  // namespace gibbscal
