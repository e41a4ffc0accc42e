#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gibbscal/random.hpp"

namespace gibbscal {

struct Uniform {
  double lo;
  double hi;
};

struct Normal {
  double mean;
  double sd;
};

/// Density proportional to v^-(shape+1) exp(-scale / v) on v > 0.
struct InverseGamma {
  double shape;
  double scale;
};

using Marginal = std::variant<Uniform, Normal, InverseGamma>;

void validate(const Marginal& m);
double log_density(const Marginal& m, double v);
double sample(const Marginal& m, Rng& rng);
double quantile(const Marginal& m, double p);
std::pair<double, double> support(const Marginal& m);
/// Centre used as a deterministic optimizer start: mean, midpoint or mode.
double centre(const Marginal& m);
bool positive_support(const Marginal& m);

/// Independent product prior over the parameter vector.
///
/// Coordinates with positive support are handled on a log scale by the
/// sampler and the optimizers; `to_unconstrained` / `from_unconstrained`
/// apply that map and `log_jacobian` supplies the density correction.
class ParameterPrior {
 public:
  ParameterPrior() = default;
  explicit ParameterPrior(std::vector<Marginal> marginals, std::vector<std::string> names = {});

  std::size_t dim() const { return marginals_.size(); }
  const Marginal& marginal(std::size_t i) const { return marginals_.at(i); }
  const std::vector<Marginal>& marginals() const { return marginals_; }
  const std::vector<std::string>& names() const { return names_; }

  /// Returns -infinity outside the support.
  double log_density(const Eigen::VectorXd& theta) const;
  /// Same as log_density but Uniform coordinates are treated as flat on the
  /// whole real line. Used by the Laplace fast path.
  double log_density_relaxed(const Eigen::VectorXd& theta) const;
  bool in_support(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd sample(Rng& rng) const;
  Eigen::VectorXd centre() const;

  Eigen::VectorXd to_unconstrained(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd from_unconstrained(const Eigen::VectorXd& z) const;
  double log_jacobian(const Eigen::VectorXd& z) const;

  /// Prior restricted to the leading `n` coordinates.
  ParameterPrior head(std::size_t n) const;

 private:
  std::vector<Marginal> marginals_;
  std::vector<std::string> names_;
};

}  // namespace gibbscal
