#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "gibbscal/gibbs_sampler.hpp"

namespace gibbscal {

/// Mean and covariance of one subset posterior.
struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::Index n_draws = 0;
  std::string id;
  /// Set by gaussianize when some marginal has |skewness| > 1.
  std::vector<std::string> warnings;

  /// Throws ErrorKind::Conditioning unless cov is symmetric (1e-10) and
  /// positive definite.
  void validate() const;
};

/// WithinExperiment keeps the barycenter covariance; AcrossExperiments
/// divides it by K.
enum class ConsensusScaling { WithinExperiment, AcrossExperiments };

struct ConsensusPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  ConsensusScaling scaling = ConsensusScaling::WithinExperiment;
  int iterations_used = 0;
  bool converged = false;
};

struct BarycenterResult {
  Eigen::MatrixXd cov;
  int iterations = 0;
  bool converged = false;
};

/// Symmetric square root and inverse square root by eigendecomposition.
/// Throws ErrorKind::Conditioning when an eigenvalue is below 1e-12.
Eigen::MatrixXd sqrtm_spd(const Eigen::MatrixXd& A);
Eigen::MatrixXd inv_sqrtm_spd(const Eigen::MatrixXd& A);

/// One step of the Gaussian Wasserstein barycenter fixed point:
/// S^{-1/2} (sum_k (1/K) (S^{1/2} C_k S^{1/2})^{1/2})^2 S^{-1/2}.
Eigen::MatrixXd barycenter_update(const Eigen::MatrixXd& S, const std::vector<Eigen::MatrixXd>& covs);

/// Iterates barycenter_update from the identity until the Frobenius change
/// drops below tol. Returns the last iterate with converged = false when
/// max_iter is reached.
BarycenterResult barycenter_covariance(const std::vector<Eigen::MatrixXd>& covs, double tol = 1e-10,
                                       int max_iter = 500);

/// (sum_k C_k^{-1})^{-1} sum_k C_k^{-1} mu_k.
Eigen::VectorXd consensus_mean(const std::vector<GaussianSummary>& summaries);

ConsensusPosterior combine(const std::vector<GaussianSummary>& summaries, ConsensusScaling scaling,
                           double tol = 1e-10, int max_iter = 500);

/// Loss-scale multiplier applied to each subset before sampling: K when the
/// subsets partition one experiment, 1 otherwise.
double subset_loss_multiplier(ConsensusScaling scaling, std::size_t K);

/// Sample mean and unbiased covariance of the draws, restricted to
/// `coords` when given (e.g. only the physical coordinates).
GaussianSummary gaussianize(const PosteriorSample& sample, const std::optional<std::vector<Eigen::Index>>& coords = {},
                            std::string id = {});

}  // namespace gibbscal
