#include "gibbscal/prior.hpp"

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "gibbscal/errors.hpp"

namespace gibbscal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void validate(const Marginal& m) {
  std::visit(overloaded{
                 [](const Uniform& u) {
                   if (!(u.lo < u.hi) || !std::isfinite(u.lo) || !std::isfinite(u.hi))
                     fail(ErrorKind::Configuration, "Uniform prior requires finite lo < hi");
                 },
                 [](const Normal& n) {
                   if (!(n.sd > 0) || !std::isfinite(n.mean))
                     fail(ErrorKind::Configuration, "Normal prior requires sd > 0");
                 },
                 [](const InverseGamma& g) {
                   if (!(g.shape > 0) || !(g.scale > 0))
                     fail(ErrorKind::Configuration, "InverseGamma prior requires shape > 0 and scale > 0");
                 },
             },
             m);
}

double log_density(const Marginal& m, double v) {
  return std::visit(overloaded{
                        [v](const Uniform& u) {
                          return (v >= u.lo && v <= u.hi) ? -std::log(u.hi - u.lo) : -kInf;
                        },
                        [v](const Normal& n) {
                          const double z = (v - n.mean) / n.sd;
                          return -0.5 * z * z - std::log(n.sd) - 0.5 * std::log(2.0 * std::numbers::pi);
                        },
                        [v](const InverseGamma& g) {
                          if (!(v > 0)) return -kInf;
                          return g.shape * std::log(g.scale) - std::lgamma(g.shape) -
                                 (g.shape + 1.0) * std::log(v) - g.scale / v;
                        },
                    },
                    m);
}

double sample(const Marginal& m, Rng& rng) {
  return std::visit(overloaded{
                        [&rng](const Uniform& u) {
                          std::uniform_real_distribution<double> d(u.lo, u.hi);
                          return d(rng);
                        },
                        [&rng](const Normal& n) {
                          std::normal_distribution<double> d(n.mean, n.sd);
                          return d(rng);
                        },
                        [&rng](const InverseGamma& g) {
                          // 1/Gamma(shape, rate = scale); tiny shapes can underflow to 0.
                          std::gamma_distribution<double> d(g.shape, 1.0 / g.scale);
                          double v = 0.0;
                          do {
                            v = d(rng);
                          } while (!(v > 0));
                          return 1.0 / v;
                        },
                    },
                    m);
}

double quantile(const Marginal& m, double p) {
  return std::visit(overloaded{
                        [p](const Uniform& u) { return u.lo + p * (u.hi - u.lo); },
                        [p](const Normal& n) {
                          return boost::math::quantile(boost::math::normal(n.mean, n.sd), p);
                        },
                        [p](const InverseGamma& g) {
                          return boost::math::quantile(boost::math::inverse_gamma(g.shape, g.scale), p);
                        },
                    },
                    m);
}

std::pair<double, double> support(const Marginal& m) {
  return std::visit(overloaded{
                        [](const Uniform& u) { return std::pair{u.lo, u.hi}; },
                        [](const Normal&) { return std::pair{-kInf, kInf}; },
                        [](const InverseGamma&) { return std::pair{0.0, kInf}; },
                    },
                    m);
}

double centre(const Marginal& m) {
  return std::visit(overloaded{
                        [](const Uniform& u) { return 0.5 * (u.lo + u.hi); },
                        [](const Normal& n) { return n.mean; },
                        [](const InverseGamma& g) { return g.scale / (g.shape + 1.0); },
                    },
                    m);
}

bool positive_support(const Marginal& m) { return std::holds_alternative<InverseGamma>(m); }

ParameterPrior::ParameterPrior(std::vector<Marginal> marginals, std::vector<std::string> names)
    : marginals_(std::move(marginals)), names_(std::move(names)) {
  if (marginals_.empty()) fail(ErrorKind::Configuration, "prior must have at least one coordinate");
  for (const auto& m : marginals_) validate(m);
  if (names_.empty()) {
    for (std::size_t i = 0; i < marginals_.size(); ++i) names_.push_back("theta" + std::to_string(i));
  }
  if (names_.size() != marginals_.size())
    fail(ErrorKind::Configuration, "prior names and marginals differ in length");
}

double ParameterPrior::log_density(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim())
    fail(ErrorKind::Structural, "parameter vector length does not match prior dimension");
  double total = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    total += gibbscal::log_density(marginals_[i], theta(static_cast<Eigen::Index>(i)));
    if (total == -kInf) return total;
  }
  return total;
}

double ParameterPrior::log_density_relaxed(const Eigen::VectorXd& theta) const {
  double total = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (std::holds_alternative<Uniform>(marginals_[i])) continue;
    total += gibbscal::log_density(marginals_[i], theta(static_cast<Eigen::Index>(i)));
  }
  return total;
}

bool ParameterPrior::in_support(const Eigen::VectorXd& theta) const {
  return std::isfinite(log_density(theta));
}

Eigen::VectorXd ParameterPrior::sample(Rng& rng) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < dim(); ++i) out(static_cast<Eigen::Index>(i)) = gibbscal::sample(marginals_[i], rng);
  return out;
}

Eigen::VectorXd ParameterPrior::centre() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < dim(); ++i) out(static_cast<Eigen::Index>(i)) = gibbscal::centre(marginals_[i]);
  return out;
}

Eigen::VectorXd ParameterPrior::to_unconstrained(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd z = theta;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (positive_support(marginals_[i])) z(static_cast<Eigen::Index>(i)) = std::log(theta(static_cast<Eigen::Index>(i)));
  }
  return z;
}

Eigen::VectorXd ParameterPrior::from_unconstrained(const Eigen::VectorXd& z) const {
  Eigen::VectorXd theta = z;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (positive_support(marginals_[i])) theta(static_cast<Eigen::Index>(i)) = std::exp(z(static_cast<Eigen::Index>(i)));
  }
  return theta;
}

double ParameterPrior::log_jacobian(const Eigen::VectorXd& z) const {
  double total = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (positive_support(marginals_[i])) total += z(static_cast<Eigen::Index>(i));
  }
  return total;
}

ParameterPrior ParameterPrior::head(std::size_t n) const {
  if (n == 0 || n > dim()) fail(ErrorKind::Structural, "prior head size out of range");
  return ParameterPrior(std::vector<Marginal>(marginals_.begin(), marginals_.begin() + static_cast<long>(n)),
                        std::vector<std::string>(names_.begin(), names_.begin() + static_cast<long>(n)));
}

}  // namespace gibbscal
