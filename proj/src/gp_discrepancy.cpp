#include "gibbscal/gp_discrepancy.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "gibbscal/errors.hpp"
#include "gibbscal/optim.hpp"

namespace gibbscal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double min_spacing(const Eigen::VectorXd& x) {
  double h = kInf;
  for (Eigen::Index i = 1; i < x.size(); ++i) h = std::min(h, x(i) - x(i - 1));
  return h;
}

void require_increasing(const Eigen::VectorXd& x) {
  for (Eigen::Index i = 1; i < x.size(); ++i)
    if (!(x(i) > x(i - 1))) fail(ErrorKind::Domain, "x must be strictly increasing");
}

// Log-parameter box shared by the GP and GLS hyperparameter searches.
struct LogBox {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;

  bool contains(const Eigen::VectorXd& p) const {
    for (int i = 0; i < 3; ++i)
      if (!(p(i) >= lo(i) && p(i) <= hi(i))) return false;
    return true;
  }
  Eigen::VectorXd clamp(Eigen::VectorXd p) const {
    for (int i = 0; i < 3; ++i) p(i) = std::clamp(p(i), lo(i), hi(i));
    return p;
  }
};

LogBox hyper_box(double m2, const Eigen::VectorXd& x) {
  const double range = x(x.size() - 1) - x(0);
  LogBox box;
  box.lo << std::log(1e-4 * m2), std::log(0.1 * min_spacing(x)), std::log(1e-10 * m2);
  box.hi << std::log(1e4 * m2), std::log(10.0 * range), std::log(10.0 * m2);
  return box;
}

SqExpKernel kernel_from_log(const Eigen::VectorXd& p) { return SqExpKernel{std::exp(p(0)), std::exp(p(1)), std::exp(p(2))}; }

Eigen::VectorXd log_of(const SqExpKernel& k, double m2) {
  Eigen::VectorXd p(3);
  p << std::log(std::max(k.s2, 1e-300)), std::log(k.length_scale), std::log(std::max(k.nugget, 1e-3 * m2));
  return p;
}

// Multistart lattice over (s2, l) bracketing the residual scale and x-range.
std::vector<Eigen::VectorXd> lattice_starts(double m2, const Eigen::VectorXd& x, int count) {
  const double range = x(x.size() - 1) - x(0);
  const double lmin = std::min(2.0 * min_spacing(x), range);
  std::vector<Eigen::VectorXd> starts;
  const std::array<double, 2> s2_levels{0.5 * m2, 2.0 * m2};
  for (int j = 0; j < 4; ++j) {
    const double l = std::exp(std::log(lmin) + (std::log(range) - std::log(lmin)) * j / 3.0);
    for (double s2 : s2_levels) {
      Eigen::VectorXd p(3);
      p << std::log(s2), std::log(l), std::log(1e-3 * m2);
      starts.push_back(p);
    }
  }
  starts.resize(std::min<std::size_t>(starts.size(), static_cast<std::size_t>(std::max(count, 1))));
  return starts;
}

optim::OptimResult minimize_in_box(const optim::Objective& f, const LogBox& box, const std::vector<Eigen::VectorXd>& starts) {
  const auto bounded = [&](const Eigen::VectorXd& p) { return box.contains(p) ? f(p) : kInf; };
  optim::OptimResult best;
  best.value = kInf;
  optim::NelderMeadOptions opts;
  opts.size_tol = 1e-6;
  for (const auto& s : starts) {
    auto res = optim::nelder_mead(bounded, box.clamp(s), Eigen::VectorXd::Constant(3, 0.5), opts);
    if (res.value < best.value) best = res;
  }
  return best;
}

}  // namespace

void SqExpKernel::validate() const {
  if (!(s2 >= 0) || !(length_scale > 0) || !(nugget >= 0) || !std::isfinite(s2) || !std::isfinite(length_scale))
    fail(ErrorKind::Domain, "kernel requires s2 >= 0, length_scale > 0, nugget >= 0");
}

double SqExpKernel::operator()(double a, double b) const {
  const double d = (a - b) / length_scale;
  return s2 * std::exp(-0.5 * d * d);
}

Eigen::MatrixXd SqExpKernel::covariance(const Eigen::VectorXd& x) const {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = s2 + nugget;
    for (Eigen::Index i = j + 1; i < n; ++i) K(i, j) = K(j, i) = (*this)(x(i), x(j));
  }
  return K;
}

RobustCholesky robust_cholesky(const Eigen::MatrixXd& K, double scale) {
  if (!(scale > 0)) scale = std::max(K.diagonal().maxCoeff(), 1e-300);
  for (double rung : {0.0, 1e-10, 1e-8, 1e-6}) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += rung * scale;
    RobustCholesky out{Eigen::LLT<Eigen::MatrixXd>(A), rung * scale};
    if (out.llt.info() == Eigen::Success && (out.llt.matrixLLT().diagonal().array() > 0).all()) return out;
  }
  fail(ErrorKind::Conditioning, "Cholesky failed after nugget escalation to 1e-6 * s2");
}

void DiscrepancyPrior::validate() const {
  if (!(noise_sd >= 0)) fail(ErrorKind::Configuration, "noise_sd must be >= 0");
  std::visit(overloaded{
                 [](const NoDiscrepancy&) {},
                 [](const GpDiscrepancy& g) { g.kernel.validate(); },
                 [](const ShiftFamily& s) {
                   if (!(s.region_lo < s.region_hi)) fail(ErrorKind::Configuration, "shift region requires lo < hi");
                   if (!(s.magnitude_lo <= s.magnitude_hi))
                     fail(ErrorKind::Configuration, "shift magnitude requires lo <= hi");
                   if (std::abs(s.direction) != 1.0) fail(ErrorKind::Configuration, "shift direction must be +1 or -1");
                 },
             },
             form);
}

Eigen::VectorXd DiscrepancyPrior::sample_discrepancy(const Eigen::VectorXd& x, Rng& rng) const {
  return std::visit(overloaded{
                        [&](const NoDiscrepancy&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(x.size()); },
                        [&](const GpDiscrepancy& g) -> Eigen::VectorXd { return sample_gp(g.kernel, x, rng); },
                        [&](const ShiftFamily& s) -> Eigen::VectorXd {
                          std::uniform_real_distribution<double> mag(s.magnitude_lo, s.magnitude_hi);
                          const double m = s.magnitude_lo == s.magnitude_hi ? s.magnitude_lo : mag(rng);
                          Eigen::VectorXd d = Eigen::VectorXd::Zero(x.size());
                          for (Eigen::Index i = 0; i < x.size(); ++i)
                            if (x(i) > s.region_lo && x(i) <= s.region_hi) d(i) = s.direction * m;
                          return d;
                        },
                    },
                    form);
}

Eigen::VectorXd DiscrepancyPrior::sample_noise(const Eigen::VectorXd& x, Rng& rng) const {
  Eigen::VectorXd e(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) e(i) = noise_sd * standard_normal(rng);
  return e;
}

Eigen::VectorXd DiscrepancyPrior::expected(const Eigen::VectorXd& x) const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(x.size());
  if (const auto* s = std::get_if<ShiftFamily>(&form)) {
    const double m = 0.5 * (s->magnitude_lo + s->magnitude_hi);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x(i) > s->region_lo && x(i) <= s->region_hi) d(i) = s->direction * m;
  }
  return d;
}

Eigen::VectorXd empirical_discrepancy(const ExperimentData& data, const ForwardModel& model,
                                      const Eigen::VectorXd& theta_hat) {
  Eigen::VectorXd pred = model.eval(data.x(), theta_hat);
  if (pred.size() != data.size()) fail(ErrorKind::Structural, "model output length differs from data length");
  return data.y() - pred;
}

double gp_log_marginal_likelihood(const Eigen::VectorXd& residuals, const Eigen::VectorXd& x, const SqExpKernel& kernel) {
  if (residuals.size() != x.size()) fail(ErrorKind::Structural, "residuals and x differ in length");
  kernel.validate();
  const auto chol = robust_cholesky(kernel.covariance(x), kernel.s2 > 0 ? kernel.s2 : kernel.nugget);
  const Eigen::VectorXd alpha = chol.llt.solve(residuals);
  const double log_det = 2.0 * chol.llt.matrixLLT().diagonal().array().log().sum();
  const auto n = static_cast<double>(x.size());
  return -0.5 * residuals.dot(alpha) - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

SqExpKernel fit_gp_mle(const Eigen::VectorXd& residuals, const Eigen::VectorXd& x, const SqExpKernel& init,
                       const GpFitOptions& options) {
  if (residuals.size() != x.size()) fail(ErrorKind::Structural, "residuals and x differ in length");
  if (x.size() < 10) fail(ErrorKind::Domain, "GP fit needs at least 10 points");
  require_increasing(x);
  init.validate();
  const double m2 = residuals.squaredNorm() / static_cast<double>(residuals.size());
  if (!(m2 > 0)) return SqExpKernel{0.0, init.length_scale, 0.0};

  const auto objective = [&](const Eigen::VectorXd& p) {
    try {
      return -gp_log_marginal_likelihood(residuals, x, kernel_from_log(p));
    } catch (const Error&) {
      return kInf;
    }
  };
  const LogBox box = hyper_box(m2, x);
  auto starts = lattice_starts(m2, x, options.multistarts);
  starts.push_back(log_of(init, m2));
  const auto best = minimize_in_box(objective, box, starts);

  double init_score = -kInf;
  try {
    init_score = gp_log_marginal_likelihood(residuals, x, init);
  } catch (const Error&) {
  }
  if (!std::isfinite(best.value) || -best.value < init_score) {
    if (!std::isfinite(init_score)) fail(ErrorKind::Conditioning, "GP fit: no kernel with a finite likelihood");
    return init;
  }
  return kernel_from_log(best.x);
}

Eigen::VectorXd sample_gp(const SqExpKernel& kernel, const Eigen::VectorXd& x, Rng& rng) {
  kernel.validate();
  const Eigen::Index n = x.size();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = standard_normal(rng);
  if (kernel.s2 == 0.0 && kernel.nugget == 0.0) return Eigen::VectorXd::Zero(n);

  // Pivoted LDL^T tolerates the rank deficiency of long length scales.
  const Eigen::MatrixXd K = kernel.covariance(x);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
  const double scale = kernel.s2 + kernel.nugget;
  Eigen::VectorXd d = ldlt.vectorD();
  if (ldlt.info() == Eigen::Success && d.minCoeff() >= -1e-6 * scale) {
    d = d.cwiseMax(0.0).cwiseSqrt();
    Eigen::VectorXd u = ldlt.matrixL() * d.cwiseProduct(z);
    return ldlt.transpositionsP().transpose() * u;
  }
  // Near-constant kernels can leave LDL^T with rounding-sized negative pivots
  // that it flags as failure; the clipped spectral square root still works.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-6 * scale)
    fail(ErrorKind::Conditioning, "GP covariance is not positive semi-definite");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.cwiseProduct(z);
}

double effective_sample_size(const Eigen::VectorXd& residuals, const Eigen::VectorXd& x) {
  const Eigen::Index n = residuals.size();
  if (x.size() != n) fail(ErrorKind::Structural, "residuals and x differ in length");
  if (n < 10) fail(ErrorKind::Domain, "effective sample size needs at least 10 points");
  require_increasing(x);
  const Eigen::VectorXd centred = residuals.array() - residuals.mean();
  const double gamma0 = centred.squaredNorm() / static_cast<double>(n);
  const double amax = residuals.cwiseAbs().maxCoeff();
  if (!(gamma0 > 1e-24 * amax * amax)) return 1.0;

  const auto rho = [&](Eigen::Index k) {
    if (k == 0) return 1.0;
    return centred.head(n - k).dot(centred.tail(n - k)) / static_cast<double>(n) / gamma0;
  };
  double tau = -1.0;
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    const double pair = rho(2 * m) + rho(2 * m + 1);
    if (!(pair > 0)) break;
    tau += 2.0 * pair;
  }
  const auto nd = static_cast<double>(n);
  if (!(tau > 0)) return nd;
  return std::clamp(nd / tau, 1.0, nd);
}

double effective_sample_size_from_kernel(const SqExpKernel& kernel, const Eigen::VectorXd& x) {
  kernel.validate();
  const auto n = static_cast<double>(x.size());
  const double var = kernel.s2 + kernel.nugget;
  if (!(var > 0)) return n;
  const double total = kernel.covariance(x).sum() / var;
  return std::clamp(n * n / total, 1.0, n);
}

GlsResult gls_fixed_kernel(const ExperimentData& data, const Eigen::MatrixXd& X, const SqExpKernel& kernel, double alpha) {
  kernel.validate();
  if (X.rows() != data.size()) fail(ErrorKind::Structural, "design matrix rows differ from data length");
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(X).rank() < X.cols())
    fail(ErrorKind::Structural, "design matrix is rank deficient");
  const auto chol = robust_cholesky(kernel.covariance(data.x()), kernel.s2 > 0 ? kernel.s2 : kernel.nugget);
  const Eigen::MatrixXd KiX = chol.llt.solve(X);
  const Eigen::MatrixXd A = X.transpose() * KiX;
  Eigen::LLT<Eigen::MatrixXd> allt(A);
  if (allt.info() != Eigen::Success) fail(ErrorKind::Structural, "X' K^-1 X is singular");

  GlsResult out;
  out.kernel = kernel;
  out.coef = allt.solve(KiX.transpose() * data.y());
  out.cov = allt.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  const double q = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  const Eigen::VectorXd se = out.cov.diagonal().cwiseSqrt();
  out.ci_lo = out.coef - q * se;
  out.ci_hi = out.coef + q * se;
  const Eigen::VectorXd r = data.y() - X * out.coef;
  const double log_det = 2.0 * chol.llt.matrixLLT().diagonal().array().log().sum();
  out.log_likelihood = -0.5 * r.dot(chol.llt.solve(r)) - 0.5 * log_det -
                       0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi);
  return out;
}

GlsResult gls_fit(const ExperimentData& data, const DesignFn& design, const SqExpKernel& init, double alpha) {
  const Eigen::MatrixXd X = design(data.x());
  if (X.rows() != data.size()) fail(ErrorKind::Structural, "design matrix rows differ from data length");
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(X).rank() < X.cols())
    fail(ErrorKind::Structural, "design matrix is rank deficient");
  const Eigen::VectorXd ols = X.colPivHouseholderQr().solve(data.y());
  const Eigen::VectorXd r = data.y() - X * ols;
  const double m2 = std::max(r.squaredNorm() / static_cast<double>(r.size()), 1e-300);

  const auto objective = [&](const Eigen::VectorXd& p) {
    try {
      return -gls_fixed_kernel(data, X, kernel_from_log(p), alpha).log_likelihood;
    } catch (const Error&) {
      return kInf;
    }
  };
  auto starts = lattice_starts(m2, data.x(), 8);
  starts.push_back(log_of(init, m2));
  const auto best = minimize_in_box(objective, hyper_box(m2, data.x()), starts);
  if (!std::isfinite(best.value)) fail(ErrorKind::Conditioning, "GLS: no kernel with a finite likelihood");
  return gls_fixed_kernel(data, X, kernel_from_log(best.x), alpha);
}

}  // namespace gibbscal
