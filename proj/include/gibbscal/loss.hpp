#pragma once

#include <Eigen/Dense>

#include <variant>

#include "gibbscal/model.hpp"

namespace gibbscal {

enum class Quadrature { PlainSum, Trapezoid };

/// Squared-error loss  sum_i q_i [y_i - E(zeta(x_i; theta))]^2.
///
/// E(zeta) = eta(x; theta) + expected_discrepancy. Leaving
/// `expected_discrepancy` empty means a zero-mean discrepancy, i.e. the
/// plain model prediction.
struct L2Loss {
  Quadrature quadrature = Quadrature::PlainSum;
  Eigen::VectorXd expected_discrepancy;
};

/// Gaussian negative log-likelihood. The variance is the last coordinate of
/// the parameter vector handed to `evaluate_loss`.
struct GaussianNllLoss {};

using LossFunction = std::variant<L2Loss, GaussianNllLoss>;

/// Number of trailing nuisance coordinates the loss appends to theta.
std::size_t nuisance_dim(const LossFunction& loss);

Eigen::VectorXd quadrature_weights(const Eigen::VectorXd& x, Quadrature q);

double l2_loss(const ExperimentData& data, const ForwardModel& model, const Eigen::VectorXd& theta,
               Quadrature q = Quadrature::PlainSum);
double l2_loss(const ExperimentData& data, const ForwardModel& model, const Eigen::VectorXd& theta,
               const L2Loss& loss);

double gaussian_nll_loss(const ExperimentData& data, const ForwardModel& model, const Eigen::VectorXd& theta,
                         double sigma2);
/// Same quantity from a precomputed residual sum of squares.
double gaussian_nll_from_ssr(double ssr, Eigen::Index n, double sigma2);

/// Loss at the full parameter vector (physical coordinates followed by any
/// nuisance coordinates).
double evaluate_loss(const LossFunction& loss, const ExperimentData& data, const ForwardModel& model,
                     const Eigen::VectorXd& params);

}  // namespace gibbscal
