#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace gibbscal {

/// Paired control inputs and observations for one experiment (or subset).
/// Construction enforces len(x) == len(y) >= 2 and strictly increasing x.
class ExperimentData {
 public:
  ExperimentData() = default;
  ExperimentData(Eigen::VectorXd x, Eigen::VectorXd y, std::string id = "experiment");

  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  const std::string& id() const { return id_; }
  Eigen::Index size() const { return x_.size(); }

  /// Same inputs, new responses. Used by the bootstrap.
  ExperimentData with_y(Eigen::VectorXd y) const;

 private:
  Eigen::VectorXd x_;
  Eigen::VectorXd y_;
  std::string id_;
};

struct Bounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Deterministic computer model (or surrogate) eta(x; theta).
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Eigen::VectorXd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const = 0;
  virtual std::size_t dim_theta() const = 0;
  virtual std::vector<Bounds> theta_bounds() const;
  virtual std::string name() const = 0;

  bool within_bounds(const Eigen::VectorXd& theta) const;
};

using ModelPtr = std::shared_ptr<const ForwardModel>;

/// eta(x; theta) = sum_j theta_j * x^j, j = 0..degree, or theta * x when
/// `through_origin` (the misspecified fit model of the toy problem).
class PolynomialModel final : public ForwardModel {
 public:
  explicit PolynomialModel(int degree, bool through_origin = false);

  Eigen::VectorXd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const override;
  std::size_t dim_theta() const override;
  std::string name() const override;

  /// Design matrix with one column per coefficient.
  Eigen::MatrixXd design(const Eigen::VectorXd& x) const;

 private:
  int degree_;
  bool through_origin_;
};

/// Adapter for an arbitrary callable.
class FunctionModel final : public ForwardModel {
 public:
  using Fn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

  FunctionModel(std::string name, std::size_t dim_theta, Fn fn, std::vector<Bounds> bounds = {});

  Eigen::VectorXd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const override;
  std::size_t dim_theta() const override { return dim_; }
  std::vector<Bounds> theta_bounds() const override;
  std::string name() const override { return name_; }

 private:
  std::string name_;
  std::size_t dim_;
  Fn fn_;
  std::vector<Bounds> bounds_;
};

}  // namespace gibbscal
