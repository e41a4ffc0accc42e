#pragma once

#include <Eigen/Dense>

#include <functional>
#include <variant>

#include "gibbscal/model.hpp"
#include "gibbscal/random.hpp"

namespace gibbscal {

/// k(x, x') = s2 * exp(-(x - x')^2 / (2 l^2)), plus `nugget` on the diagonal.
struct SqExpKernel {
  double s2 = 1.0;
  double length_scale = 1.0;
  double nugget = 0.0;

  void validate() const;
  double operator()(double a, double b) const;
  /// Covariance matrix at x, nugget included.
  Eigen::MatrixXd covariance(const Eigen::VectorXd& x) const;
};

/// Cholesky of K with the jitter ladder 0, 1e-10, 1e-8, 1e-6 (times `scale`).
/// Throws ErrorKind::Conditioning when every rung fails.
struct RobustCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};
RobustCholesky robust_cholesky(const Eigen::MatrixXd& K, double scale);

// ---------------------------------------------------------------------------
// Discrepancy priors used to generate bootstrap data.

struct NoDiscrepancy {};

struct GpDiscrepancy {
  SqExpKernel kernel;
};

/// Constant shift over the region (lo, hi], zero elsewhere. The magnitude is
/// drawn once per replicate from Uniform(magnitude_lo, magnitude_hi) and
/// multiplied by `direction` (+1 or -1).
struct ShiftFamily {
  double region_lo = 0.0;
  double region_hi = 0.0;
  double magnitude_lo = 0.0;
  double magnitude_hi = 0.0;
  double direction = 1.0;
};

struct DiscrepancyPrior {
  std::variant<NoDiscrepancy, GpDiscrepancy, ShiftFamily> form;
  double noise_sd = 0.0;

  void validate() const;
  Eigen::VectorXd sample_discrepancy(const Eigen::VectorXd& x, Rng& rng) const;
  Eigen::VectorXd sample_noise(const Eigen::VectorXd& x, Rng& rng) const;
  /// Prior mean of the discrepancy on x.
  Eigen::VectorXd expected(const Eigen::VectorXd& x) const;
};

// ---------------------------------------------------------------------------

Eigen::VectorXd empirical_discrepancy(const ExperimentData& data, const ForwardModel& model,
                                      const Eigen::VectorXd& theta_hat);

/// Mean-zero Gaussian log marginal likelihood of `residuals` under the kernel.
double gp_log_marginal_likelihood(const Eigen::VectorXd& residuals, const Eigen::VectorXd& x,
                                  const SqExpKernel& kernel);

struct GpFitOptions {
  int multistarts = 8;
};

/// Maximum marginal likelihood over (s2, l, nugget), multistart bounded
/// Nelder–Mead on log parameters. Never returns a kernel scoring below
/// `init`.
SqExpKernel fit_gp_mle(const Eigen::VectorXd& residuals, const Eigen::VectorXd& x, const SqExpKernel& init,
                       const GpFitOptions& options = {});

/// One mean-zero draw with covariance K(x, x).
Eigen::VectorXd sample_gp(const SqExpKernel& kernel, const Eigen::VectorXd& x, Rng& rng);

/// n / (1 + 2 sum rho(k)) with the autocorrelation sum truncated by Geyer's
/// initial positive sequence; clamped to [1, n].
double effective_sample_size(const Eigen::VectorXd& residuals, const Eigen::VectorXd& x);

/// n^2 / (1' R 1) for the kernel's correlation matrix R on x, the number of
/// independent points giving the same variance of the mean.
double effective_sample_size_from_kernel(const SqExpKernel& kernel, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Generalized least squares with a squared-exponential error covariance.

using DesignFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct GlsResult {
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov;
  Eigen::VectorXd ci_lo;
  Eigen::VectorXd ci_hi;
  SqExpKernel kernel;
  double log_likelihood = 0.0;
};

GlsResult gls_fixed_kernel(const ExperimentData& data, const Eigen::MatrixXd& X, const SqExpKernel& kernel,
                           double alpha = 0.05);

/// Profiles the kernel hyperparameters by marginal likelihood, then returns
/// the GLS estimate, its covariance and normal-theory interval.
GlsResult gls_fit(const ExperimentData& data, const DesignFn& design, const SqExpKernel& init,
                  double alpha = 0.05);

}  // namespace gibbscal
