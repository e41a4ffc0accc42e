#include "gibbscal/gibbs_sampler.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gibbscal/errors.hpp"
#include "gibbscal/optim.hpp"
#include "gibbscal/random.hpp"

namespace gibbscal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd default_steps(const ParameterPrior& prior) {
  Eigen::VectorXd steps(static_cast<Eigen::Index>(prior.dim()));
  for (std::size_t i = 0; i < prior.dim(); ++i) {
    const auto& m = prior.marginal(i);
    double s = 0.1;
    if (const auto* u = std::get_if<Uniform>(&m)) s = 0.05 * (u->hi - u->lo);
    if (const auto* n = std::get_if<Normal>(&m)) s = 0.1 * n->sd;
    steps(static_cast<Eigen::Index>(i)) = s;
  }
  return steps;
}

Eigen::VectorXd optimizer_steps(const ParameterPrior& prior) {
  Eigen::VectorXd steps(static_cast<Eigen::Index>(prior.dim()));
  for (std::size_t i = 0; i < prior.dim(); ++i) {
    const auto& m = prior.marginal(i);
    double s = 1.0;
    if (const auto* u = std::get_if<Uniform>(&m)) s = 0.1 * (u->hi - u->lo);
    if (const auto* n = std::get_if<Normal>(&m)) s = std::min(1.0, 0.1 * n->sd);
    steps(static_cast<Eigen::Index>(i)) = s;
  }
  return steps;
}

// Log density in sampler coordinates, Jacobian included.
double log_target_z(const GibbsPosteriorSpec& spec, const Eigen::VectorXd& z) {
  const double lp = spec.log_target(spec.prior.from_unconstrained(z));
  if (!std::isfinite(lp)) return -kInf;
  return lp + spec.prior.log_jacobian(z);
}

Eigen::VectorXd clamp_log_coords(const ParameterPrior& prior, Eigen::VectorXd z) {
  for (std::size_t i = 0; i < prior.dim(); ++i) {
    if (positive_support(prior.marginal(i))) z(static_cast<Eigen::Index>(i)) = std::clamp(z(static_cast<Eigen::Index>(i)), -50.0, 50.0);
  }
  return z;
}

std::optional<Eigen::MatrixXd> chol_of(const Eigen::MatrixXd& cov) {
  if (!cov.allFinite()) return std::nullopt;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Eigen::MatrixXd L = llt.matrixL();
  if (!L.allFinite() || (L.diagonal().array() <= 0).any()) return std::nullopt;
  return L;
}

Eigen::VectorXd find_start(const GibbsPosteriorSpec& spec, const SamplerConfig& config, Rng& rng) {
  if (config.initial && std::isfinite(spec.log_target(*config.initial))) return *config.initial;
  try {
    return map_estimate(spec, MapConfig{4, split_seed(config.seed, 1)});
  } catch (const Error&) {
  }
  Eigen::VectorXd best;
  double best_lp = -kInf;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd cand = spec.prior.sample(rng);
    const double lp = spec.log_target(cand);
    if (lp > best_lp) {
      best_lp = lp;
      best = cand;
    }
  }
  if (!std::isfinite(best_lp))
    fail(ErrorKind::Initialization, "target density is zero at the optimizer result and at 100 prior draws");
  return best;
}

}  // namespace

void GibbsPosteriorSpec::validate() const {
  if (!model) fail(ErrorKind::Configuration, "posterior has no forward model");
  if (!(w >= 0) || !std::isfinite(w)) fail(ErrorKind::Configuration, "loss scale w must be finite and >= 0");
  const std::size_t expected = model->dim_theta() + nuisance_dim(loss);
  if (prior.dim() != expected)
    fail(ErrorKind::Configuration, "prior has " + std::to_string(prior.dim()) + " coordinates; model and loss need " +
                                       std::to_string(expected));
  const auto bounds = model->theta_bounds();
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const auto [lo, hi] = support(prior.marginal(i));
    if (std::max(lo, bounds[i].lo) > std::min(hi, bounds[i].hi))
      fail(ErrorKind::Configuration, "prior support of coordinate " + std::to_string(i) + " misses model bounds");
  }
}

double GibbsPosteriorSpec::loss_at(const Eigen::VectorXd& params) const {
  const auto d = static_cast<Eigen::Index>(physical_dim());
  if (!model->within_bounds(params.head(d))) return kInf;
  if (nuisance_dim(loss) > 0 && !(params(d) > 0)) return kInf;
  const double value = evaluate_loss(loss, data, *model, params);
  return std::isfinite(value) ? value : kInf;
}

double GibbsPosteriorSpec::log_target(const Eigen::VectorXd& params) const {
  const double lp = prior.log_density(params);
  if (!std::isfinite(lp)) return -kInf;
  if (w == 0.0) return lp;
  const double l = loss_at(params);
  if (!std::isfinite(l)) return -kInf;
  return lp - w * l;
}

PosteriorSample sample_gibbs(const GibbsPosteriorSpec& spec, const SamplerConfig& config) {
  spec.validate();
  if (!(config.n_iter > config.n_burn) || config.n_burn < 0)
    fail(ErrorKind::Configuration, "sampler requires n_iter > n_burn >= 0");
  const auto dim = static_cast<Eigen::Index>(spec.dim());
  if (!config.step_sizes.empty()) {
    if (static_cast<Eigen::Index>(config.step_sizes.size()) != dim)
      fail(ErrorKind::Configuration, "one step size per coordinate required");
    for (double s : config.step_sizes)
      if (!(s > 0)) fail(ErrorKind::Configuration, "step sizes must be positive");
  }

  Rng rng(split_seed(config.seed, 0));
  Eigen::VectorXd z = spec.prior.to_unconstrained(find_start(spec, config, rng));
  double lp = log_target_z(spec, z);

  const auto neg_log = [&spec](const Eigen::VectorXd& v) { return -log_target_z(spec, v); };
  const double scale_opt = 2.38 * 2.38 / static_cast<double>(dim);
  Eigen::MatrixXd L;
  if (!config.step_sizes.empty()) {
    L = Eigen::Map<const Eigen::VectorXd>(config.step_sizes.data(), dim).asDiagonal();
  } else {
    std::optional<Eigen::MatrixXd> from_curvature;
    const Eigen::MatrixXd H = optim::numeric_hessian(neg_log, z);
    if (H.allFinite()) {
      Eigen::LLT<Eigen::MatrixXd> llt(H);
      if (llt.info() == Eigen::Success)
        from_curvature = chol_of(scale_opt * llt.solve(Eigen::MatrixXd::Identity(dim, dim)));
    }
    L = from_curvature ? *from_curvature : Eigen::MatrixXd(default_steps(spec.prior).asDiagonal());
  }

  PosteriorSample out;
  out.w = spec.w;
  out.rng_seed = config.seed;
  out.n_iter = config.n_iter;
  out.n_burn = config.n_burn;
  out.names = spec.prior.names();
  out.draws.resize(config.n_iter - config.n_burn, dim);
  out.accepted.reserve(static_cast<std::size_t>(config.n_iter - config.n_burn));

  constexpr int kBatch = 50;
  const int refit_at = config.n_burn >= 400 ? config.n_burn / 2 : -1;
  std::vector<Eigen::VectorXd> burn_trace;
  double log_scale = 0.0;
  int batch_accepts = 0;
  int batch_index = 0;
  std::size_t kept_accepts = 0;
  Eigen::VectorXd xi(dim);

  for (int it = 0; it < config.n_iter; ++it) {
    for (Eigen::Index k = 0; k < dim; ++k) xi(k) = standard_normal(rng);
    const Eigen::VectorXd proposal = z + std::exp(log_scale) * (L * xi);
    const double lp_prop = log_target_z(spec, proposal);
    const bool accept = std::isfinite(lp_prop) && std::log(uniform01(rng)) < lp_prop - lp;
    if (accept) {
      z = proposal;
      lp = lp_prop;
    }

    if (it < config.n_burn) {
      batch_accepts += accept ? 1 : 0;
      if ((it + 1) % kBatch == 0) {
        const double rate = static_cast<double>(batch_accepts) / kBatch;
        log_scale += (rate - config.target_acceptance) * 2.0 / std::sqrt(1.0 + batch_index);
        ++batch_index;
        batch_accepts = 0;
      }
      if (refit_at > 0 && it >= refit_at / 2) burn_trace.push_back(z);
      if (it + 1 == refit_at && burn_trace.size() > static_cast<std::size_t>(10 * dim)) {
        Eigen::MatrixXd T(static_cast<Eigen::Index>(burn_trace.size()), dim);
        for (std::size_t r = 0; r < burn_trace.size(); ++r) T.row(static_cast<Eigen::Index>(r)) = burn_trace[r];
        const Eigen::MatrixXd centred = T.rowwise() - T.colwise().mean();
        const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(T.rows() - 1);
        if (auto refit = chol_of(scale_opt * cov + 1e-12 * Eigen::MatrixXd::Identity(dim, dim))) {
          L = *refit;
          log_scale = 0.0;
        }
        burn_trace.clear();
      }
    } else {
      out.draws.row(it - config.n_burn) = spec.prior.from_unconstrained(z);
      out.accepted.push_back(accept);
      kept_accepts += accept ? 1 : 0;
    }
  }
  out.acceptance_rate = static_cast<double>(kept_accepts) / static_cast<double>(out.accepted.size());
  return out;
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) fail(ErrorKind::Precision, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

CredibleInterval credible_interval(const PosteriorSample& sample, double alpha) {
  if (!(alpha > 0 && alpha < 1)) fail(ErrorKind::Domain, "alpha must lie in (0, 1)");
  if (sample.size() < 100) fail(ErrorKind::Precision, "credible interval needs at least 100 draws");
  CredibleInterval ci;
  ci.alpha = alpha;
  ci.lo.resize(sample.draws.cols());
  ci.hi.resize(sample.draws.cols());
  std::vector<double> col(static_cast<std::size_t>(sample.size()));
  for (Eigen::Index j = 0; j < sample.draws.cols(); ++j) {
    for (Eigen::Index i = 0; i < sample.size(); ++i) col[static_cast<std::size_t>(i)] = sample.draws(i, j);
    std::sort(col.begin(), col.end());
    ci.lo(j) = quantile_type7(col, alpha / 2.0);
    ci.hi(j) = quantile_type7(col, 1.0 - alpha / 2.0);
  }
  return ci;
}

Eigen::VectorXd posterior_median(const PosteriorSample& sample) {
  if (sample.size() == 0) fail(ErrorKind::Precision, "median of empty sample");
  Eigen::VectorXd med(sample.draws.cols());
  std::vector<double> col(static_cast<std::size_t>(sample.size()));
  for (Eigen::Index j = 0; j < sample.draws.cols(); ++j) {
    for (Eigen::Index i = 0; i < sample.size(); ++i) col[static_cast<std::size_t>(i)] = sample.draws(i, j);
    std::sort(col.begin(), col.end());
    med(j) = quantile_type7(col, 0.5);
  }
  return med;
}

Eigen::VectorXd map_estimate(const GibbsPosteriorSpec& spec, const MapConfig& config) {
  spec.validate();
  if (config.restarts < 1) fail(ErrorKind::Configuration, "map_estimate needs at least one restart");
  const auto objective = [&spec](const Eigen::VectorXd& z) {
    const double lt = spec.log_target(spec.prior.from_unconstrained(z));
    return std::isfinite(lt) ? -lt : kInf;
  };
  const Eigen::VectorXd steps = optimizer_steps(spec.prior);
  Rng rng(split_seed(config.seed, 7));

  optim::OptimResult best;
  best.value = kInf;
  int finite_runs = 0;
  double best_unconverged = kInf;
  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd start = r == 0 ? spec.prior.centre() : spec.prior.sample(rng);
    Eigen::VectorXd z0 = clamp_log_coords(spec.prior, spec.prior.to_unconstrained(start));
    const auto res = optim::nelder_mead(objective, z0, steps);
    if (std::isfinite(res.value) && res.value < 1e299) ++finite_runs;
    if (!res.converged) {
      best_unconverged = std::min(best_unconverged, res.value);
      continue;
    }
    if (res.value < best.value) best = res;
  }
  if (!std::isfinite(best.value))
    fail(ErrorKind::Optimization, "all " + std::to_string(config.restarts) + " Nelder-Mead restarts failed (" +
                                      std::to_string(finite_runs) + " reached a finite objective; best value " +
                                      std::to_string(best_unconverged) + ")");
  return spec.prior.from_unconstrained(best.x);
}

LaplaceApproximation laplace_approximation(const GibbsPosteriorSpec& spec, const std::optional<Eigen::VectorXd>& start) {
  spec.validate();
  const auto objective = [&spec](const Eigen::VectorXd& z) {
    const Eigen::VectorXd p = spec.prior.from_unconstrained(z);
    double value = -spec.prior.log_density_relaxed(p) - spec.prior.log_jacobian(z);
    if (spec.w > 0) value += spec.w * spec.loss_at(p);
    return std::isfinite(value) ? value : kInf;
  };
  Eigen::VectorXd p0 = start ? *start : map_estimate(spec, MapConfig{2, 11});
  Eigen::VectorXd z0 = clamp_log_coords(spec.prior, spec.prior.to_unconstrained(p0));
  const auto res = optim::nelder_mead(objective, z0, 0.1 * optimizer_steps(spec.prior));
  if (!std::isfinite(res.value) || res.value >= 1e299)
    fail(ErrorKind::Optimization, "Laplace approximation: no finite mode found");
  const Eigen::MatrixXd H = optim::numeric_hessian(objective, res.x);
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (!H.allFinite() || llt.info() != Eigen::Success)
    fail(ErrorKind::Conditioning, "Laplace approximation: Hessian at the mode is not positive definite");
  const auto d = res.x.size();
  return LaplaceApproximation{res.x, llt.solve(Eigen::MatrixXd::Identity(d, d))};
}

CredibleInterval laplace_interval(const GibbsPosteriorSpec& spec, double alpha, const std::optional<Eigen::VectorXd>& start) {
  if (!(alpha > 0 && alpha < 1)) fail(ErrorKind::Domain, "alpha must lie in (0, 1)");
  const auto approx = laplace_approximation(spec, start);
  const double q = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  const auto d = approx.mode.size();
  Eigen::VectorXd zlo = approx.mode - q * approx.covariance.diagonal().cwiseSqrt();
  Eigen::VectorXd zhi = approx.mode + q * approx.covariance.diagonal().cwiseSqrt();
  CredibleInterval ci;
  ci.alpha = alpha;
  ci.lo = spec.prior.from_unconstrained(zlo);
  ci.hi = spec.prior.from_unconstrained(zhi);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto [lo, hi] = support(spec.prior.marginal(static_cast<std::size_t>(j)));
    ci.lo(j) = std::clamp(ci.lo(j), lo, hi);
    ci.hi(j) = std::clamp(ci.hi(j), lo, hi);
  }
  return ci;
}

}  // namespace gibbscal
