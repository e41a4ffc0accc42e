#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <memory>

#include "gibbscal/errors.hpp"
#include "gibbscal/harness.hpp"

namespace gibbscal {

namespace {

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace

Eigen::VectorXd toy_true_curve(const Eigen::VectorXd& x, double theta, double a) {
  return (theta * x.array() / (1.0 + x.array() / a)).matrix();
}

ModelPtr make_ramp_model(double amplitude, double slope, double b_ref, double t0, double width) {
  auto fn = [=](const Eigen::VectorXd& t, const Eigen::VectorXd& theta) {
    // Only the height depends on theta; samplers call this repeatedly on one
    // grid, so keep the last logistic profile per thread.
    thread_local Eigen::VectorXd last_t;
    thread_local Eigen::VectorXd profile;
    thread_local double last_t0 = 0.0, last_width = 0.0;
    if (last_t.size() != t.size() || last_t0 != t0 || last_width != width || last_t != t) {
      last_t = t;
      last_t0 = t0;
      last_width = width;
      profile.resize(t.size());
      for (Eigen::Index i = 0; i < t.size(); ++i) profile(i) = logistic((t(i) - t0) / width);
    }
    const double height = amplitude * (1.0 + slope * (theta(0) - b_ref));
    return Eigen::VectorXd(height * profile);
  };
  return std::make_shared<FunctionModel>("ramp", 1, fn);
}

ModelPtr make_velocity_model(double amplitude) {
  auto fn = [=](const Eigen::VectorXd& t, const Eigen::VectorXd& theta) {
    const double first = 1.0 + 0.1 * (theta(0) - 3.9);
    const double delay = 0.55 + 0.1 * (theta(1) - 1.0);
    Eigen::VectorXd out(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i)
      out(i) = amplitude * (first * logistic((t(i) - 0.25) / 0.05) + 0.4 * logistic((t(i) - delay) / 0.05));
    return out;
  };
  return std::make_shared<FunctionModel>("velocity", 2, fn);
}

std::string to_string(ToyMethod m) {
  switch (m) {
    case ToyMethod::Mle:
      return "mle";
    case ToyMethod::GlsKoh:
      return "gls_koh";
    case ToyMethod::EssPower:
      return "ess_power";
    case ToyMethod::GibbsBootstrap:
      return "gibbs_bootstrap";
  }
  return "unknown";
}

std::string to_string(SimMethod m) { return m == SimMethod::ParametricBootstrap ? "parametric_bootstrap" : "ess"; }
std::string to_string(TuningMode m) { return m == TuningMode::Fixed ? "fixed" : "estimated"; }

CredibleInterval gaussian_interval(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double alpha) {
  if (!(alpha > 0 && alpha < 1)) fail(ErrorKind::Domain, "alpha must lie in (0, 1)");
  const double q = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  const Eigen::VectorXd half = q * cov.diagonal().cwiseSqrt();
  CredibleInterval ci;
  ci.alpha = alpha;
  ci.lo = mean - half;
  ci.hi = mean + half;
  return ci;
}

}  // namespace gibbscal
