#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gibbscal/loss.hpp"
#include "gibbscal/model.hpp"
#include "gibbscal/prior.hpp"

namespace gibbscal {

/// The tempered posterior  p_w(theta | y)  ∝  exp(-w * loss(y, theta)) * prior(theta).
///
/// The parameter vector is the model's physical coordinates followed by the
/// loss's nuisance coordinates (sigma^2 for the Gaussian NLL), so the prior
/// dimension must equal their sum.
struct GibbsPosteriorSpec {
  ModelPtr model;
  ExperimentData data;
  LossFunction loss;
  ParameterPrior prior;
  double w = 1.0;

  void validate() const;
  std::size_t dim() const { return prior.dim(); }
  std::size_t physical_dim() const { return model->dim_theta(); }

  /// +infinity outside the model's parameter bounds.
  double loss_at(const Eigen::VectorXd& params) const;
  /// Unnormalized log density; -infinity outside the support.
  double log_target(const Eigen::VectorXd& params) const;
};

struct SamplerConfig {
  int n_iter = 20000;  // total iterations, burn-in included
  int n_burn = 5000;
  /// Proposal standard deviations in the sampler's coordinates (log scale
  /// for positive parameters). Empty: derived from the curvature at the
  /// starting point.
  std::vector<double> step_sizes;
  std::uint64_t seed = 1;
  std::optional<Eigen::VectorXd> initial;
  double target_acceptance = 0.3;
};

struct PosteriorSample {
  Eigen::MatrixXd draws;       // n_kept x dim
  std::vector<bool> accepted;  // post-burn-in transcript
  double acceptance_rate = 0.0;
  double w = 1.0;
  std::uint64_t rng_seed = 0;
  int n_iter = 0;
  int n_burn = 0;
  std::vector<std::string> names;

  Eigen::Index size() const { return draws.rows(); }
};

struct CredibleInterval {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  double alpha = 0.05;

  bool contains(Eigen::Index coord, double v) const { return v >= lo(coord) && v <= hi(coord); }
};

/// Adaptive random-walk Metropolis. The proposal scale is tuned toward the
/// target acceptance rate and the proposal covariance re-estimated once,
/// both only during burn-in; the kept part of the chain uses a fixed kernel.
PosteriorSample sample_gibbs(const GibbsPosteriorSpec& spec, const SamplerConfig& config);

/// Equal-tailed per-coordinate interval from type-7 empirical quantiles.
CredibleInterval credible_interval(const PosteriorSample& sample, double alpha);

/// Linear-interpolation quantile of an ascending range.
double quantile_type7(const std::vector<double>& sorted, double p);

Eigen::VectorXd posterior_median(const PosteriorSample& sample);

struct MapConfig {
  int restarts = 8;
  std::uint64_t seed = 1;
};

/// Multistart Nelder–Mead minimum of  w * loss - log prior.
Eigen::VectorXd map_estimate(const GibbsPosteriorSpec& spec, const MapConfig& config = {});

struct LaplaceApproximation {
  Eigen::VectorXd mode;  // sampler coordinates
  Eigen::MatrixXd covariance;
};

/// Gaussian approximation of the tempered posterior with Uniform prior
/// coordinates relaxed to flat, i.e. the large-sample likelihood
/// approximation. `start` skips the multistart search.
LaplaceApproximation laplace_approximation(const GibbsPosteriorSpec& spec,
                                           const std::optional<Eigen::VectorXd>& start = std::nullopt);

/// Equal-tailed interval of the Laplace approximation, mapped back to the
/// parameter scale and clipped to the prior support.
CredibleInterval laplace_interval(const GibbsPosteriorSpec& spec, double alpha,
                                  const std::optional<Eigen::VectorXd>& start = std::nullopt);

}  // namespace gibbscal
