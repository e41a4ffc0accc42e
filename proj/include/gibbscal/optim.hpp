#pragma once

#include <Eigen/Dense>

#include <functional>

namespace gibbscal::optim {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
  int max_iter = 4000;
  double size_tol = 1e-9;
  /// Restarts from the converged point with a fresh simplex; guards against
  /// collapsed simplices.
  int polish_rounds = 1;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Unconstrained simplex minimization. Non-finite objective values are
/// treated as a very large penalty, so box constraints can be expressed by
/// returning infinity outside the box.
OptimResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                        const NelderMeadOptions& options = {});

/// Central-difference Hessian with per-coordinate step h * max(1, |x_i|).
Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double h = 1e-4);

/// Root of g on [lo, hi]; requires a sign change.
double bisect(const std::function<double(double)>& g, double lo, double hi, double tol = 1e-12, int max_iter = 200);

}  // namespace gibbscal::optim
