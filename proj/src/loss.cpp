#include "gibbscal/loss.hpp"

#include <cmath>
#include <numbers>

#include "gibbscal/errors.hpp"

namespace gibbscal {

namespace {

Eigen::VectorXd residuals(const ExperimentData& data, const ForwardModel& model, const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != model.dim_theta())
    fail(ErrorKind::Structural, "parameter vector length does not match model '" + model.name() + "'");
  Eigen::VectorXd pred = model.eval(data.x(), theta);
  if (pred.size() != data.size())
    fail(ErrorKind::Structural, "model '" + model.name() + "' output length differs from data length");
  return data.y() - pred;
}

}  // namespace

std::size_t nuisance_dim(const LossFunction& loss) {
  return std::holds_alternative<GaussianNllLoss>(loss) ? 1 : 0;
}

Eigen::VectorXd quadrature_weights(const Eigen::VectorXd& x, Quadrature q) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (q == Quadrature::Trapezoid) {
    w.setZero();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double h = x(i + 1) - x(i);
      w(i) += 0.5 * h;
      w(i + 1) += 0.5 * h;
    }
  }
  return w;
}

double l2_loss(const ExperimentData& data, const ForwardModel& model, const Eigen::VectorXd& theta, Quadrature q) {
  return l2_loss(data, model, theta, L2Loss{q, {}});
}

double l2_loss(const ExperimentData& data, const ForwardModel& model, const Eigen::VectorXd& theta,
               const L2Loss& loss) {
  Eigen::VectorXd r = residuals(data, model, theta);
  if (loss.expected_discrepancy.size() > 0) {
    if (loss.expected_discrepancy.size() != r.size())
      fail(ErrorKind::Structural, "expected discrepancy length differs from data length");
    r -= loss.expected_discrepancy;
  }
  if (loss.quadrature == Quadrature::PlainSum) return r.squaredNorm();
  return quadrature_weights(data.x(), loss.quadrature).dot(r.cwiseAbs2());
}

double gaussian_nll_from_ssr(double ssr, Eigen::Index n, double sigma2) {
  if (!(sigma2 > 0)) fail(ErrorKind::Domain, "Gaussian NLL requires sigma2 > 0");
  return 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * sigma2) + ssr / (2.0 * sigma2);
}

double gaussian_nll_loss(const ExperimentData& data, const ForwardModel& model, const Eigen::VectorXd& theta,
                         double sigma2) {
  if (!(sigma2 > 0)) fail(ErrorKind::Domain, "Gaussian NLL requires sigma2 > 0");
  return gaussian_nll_from_ssr(residuals(data, model, theta).squaredNorm(), data.size(), sigma2);
}

double evaluate_loss(const LossFunction& loss, const ExperimentData& data, const ForwardModel& model,
                     const Eigen::VectorXd& params) {
  const auto d = static_cast<Eigen::Index>(model.dim_theta());
  if (params.size() != d + static_cast<Eigen::Index>(nuisance_dim(loss)))
    fail(ErrorKind::Structural, "parameter vector length does not match model plus loss nuisance coordinates");
  if (const auto* l2 = std::get_if<L2Loss>(&loss)) return l2_loss(data, model, params, *l2);
  return gaussian_nll_loss(data, model, params.head(d), params(d));
}

}  // namespace gibbscal
