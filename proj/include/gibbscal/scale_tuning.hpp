#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "gibbscal/gibbs_sampler.hpp"
#include "gibbscal/gp_discrepancy.hpp"

namespace gibbscal {

enum class BootstrapVariant { ParametricPrior, ParametricMap, NonparametricBlock };

/// How each replicate's credible interval is computed. Laplace is the
/// Gaussian approximation at the mode, much cheaper than a chain.
enum class IntervalMethod { Mcmc, Laplace };

/// Spline root (default) or the largest grid value that still reaches the
/// target coverage.
enum class SelectionPolicy { SplineRoot, Threshold };

/// n values evenly spaced in log between lo and hi inclusive.
std::vector<double> log_spaced_grid(double lo = 1e-3, double hi = 10.0, int n = 35);

struct BootstrapConfig {
  int B = 100;
  std::vector<double> w_grid = log_spaced_grid();
  double alpha = 0.1;
  BootstrapVariant variant = BootstrapVariant::ParametricPrior;
  double block_length = 0.0;  // x units, NonparametricBlock only
  std::uint64_t seed = 1;
  IntervalMethod interval_method = IntervalMethod::Mcmc;
  int n_iter = 4000;
  int n_burn = 1000;
  /// Worker threads; 0 uses the hardware concurrency.
  int threads = 1;
  /// ParametricPrior only: when the loss carries a variance coordinate, draw
  /// the noise variance from its prior instead of using noise_sd.
  bool noise_from_prior = false;

  void validate() const;
};

struct CoveragePoint {
  double w = 0.0;
  double coverage = 0.0;
  double std_error = 0.0;
};

struct CoverageCurve {
  std::vector<CoveragePoint> points;
  int B = 0;  // replicates that completed
  double alpha = 0.1;
  int failed = 0;
};

/// Replicates y_b = eta(x; theta_b) + delta_b + eps_b with every component
/// drawn from its prior; coverage at w is the fraction of replicates whose
/// interval contains theta_b, averaged over physical coordinates. `spec.w` is
/// ignored.
CoverageCurve parametric_bootstrap_coverage(const GibbsPosteriorSpec& spec, const DiscrepancyPrior& disc,
                                            const BootstrapConfig& cfg);

/// Replicates around the observed-data MAP theta_hat; coverage at w is the
/// fraction of replicate MAP estimates inside the single interval computed
/// from the observed data.
CoverageCurve parametric_bootstrap_map_variant(const GibbsPosteriorSpec& spec, const DiscrepancyPrior& disc,
                                               const BootstrapConfig& cfg);

/// Residual block bootstrap around the full-data minimizer theta_hat.
/// Residuals are split into contiguous blocks of (about) block_length in x,
/// resampled with replacement and laid back on the fixed x grid.
CoverageCurve nonparametric_block_bootstrap(const ExperimentData& data, const GibbsPosteriorSpec& spec,
                                            const BootstrapConfig& cfg);

/// Dispatches on cfg.variant.
CoverageCurve bootstrap_coverage(const GibbsPosteriorSpec& spec, const DiscrepancyPrior& disc,
                                 const BootstrapConfig& cfg);

/// Block index of every x for blocks of width close to block_length.
std::vector<int> block_partition(const Eigen::VectorXd& x, double block_length);

/// One block-resampled residual vector of the original length.
Eigen::VectorXd block_resample(const Eigen::VectorXd& residuals, const std::vector<int>& blocks, Rng& rng);

/// Fits a weighted non-increasing curve to the coverage points (weights
/// 1/SE), interpolates it with a monotone cubic in log w and returns the
/// largest w where it meets `target`. Curves never dropping below target
/// give the largest grid value; curves entirely below target throw
/// ErrorKind::Tuning.
double select_loss_scale(const CoverageCurve& curve, double target,
                         SelectionPolicy policy = SelectionPolicy::SplineRoot);

/// Weighted pool-adjacent-violators fit constrained to be non-increasing.
std::vector<double> isotonic_decreasing(const std::vector<double>& y, const std::vector<double>& weights);

}  // namespace gibbscal
