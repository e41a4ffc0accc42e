#include "gibbscal/scale_tuning.hpp"

// pchip.hpp in Boost 1.74 calls isnan unqualified; math.h puts it in scope.
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "gibbscal/errors.hpp"
#include "gibbscal/optim.hpp"
#include "gibbscal/parallel.hpp"

namespace gibbscal {

namespace {

// Stream tags under a replicate seed.
constexpr std::uint64_t kStartStream = 1;

struct ReplicateOutcome {
  bool ok = false;
  std::vector<double> hits;  // one per grid w, averaged over physical coordinates
};

Eigen::VectorXd fit_start(GibbsPosteriorSpec spec, std::uint64_t seed) {
  spec.w = 1.0;
  return map_estimate(spec, MapConfig{4, seed});
}

CredibleInterval interval_at(const GibbsPosteriorSpec& spec, const BootstrapConfig& cfg, std::uint64_t chain_seed,
                             const Eigen::VectorXd& start) {
  if (cfg.interval_method == IntervalMethod::Laplace) return laplace_interval(spec, cfg.alpha, start);
  SamplerConfig sc;
  sc.n_iter = cfg.n_iter;
  sc.n_burn = cfg.n_burn;
  sc.seed = chain_seed;
  sc.initial = start;
  return credible_interval(sample_gibbs(spec, sc), cfg.alpha);
}

double hit_rate(const CredibleInterval& ci, const Eigen::VectorXd& truth, Eigen::Index d) {
  double hits = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) hits += ci.contains(j, truth(j)) ? 1.0 : 0.0;
  return hits / static_cast<double>(d);
}

CoverageCurve assemble(const std::vector<ReplicateOutcome>& outcomes, const BootstrapConfig& cfg) {
  CoverageCurve curve;
  curve.alpha = cfg.alpha;
  std::vector<double> sums(cfg.w_grid.size(), 0.0);
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++curve.failed;
      continue;
    }
    ++curve.B;
    for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += o.hits[k];
  }
  if (curve.failed * 5 > static_cast<int>(outcomes.size()))
    fail(ErrorKind::Tuning, std::to_string(curve.failed) + " of " + std::to_string(outcomes.size()) +
                                " bootstrap replicates failed (limit 20%)");
  for (std::size_t k = 0; k < sums.size(); ++k) {
    const double c = sums[k] / curve.B;
    curve.points.push_back({cfg.w_grid[k], c, std::sqrt(c * (1.0 - c) / curve.B)});
  }
  return curve;
}

template <class Fn>
CoverageCurve run_replicates(const BootstrapConfig& cfg, Fn&& replicate) {
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(cfg.B));
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t b) {
    try {
      outcomes[b].hits = replicate(b);
      outcomes[b].ok = true;
    } catch (const Error&) {
      outcomes[b].ok = false;
    }
  });
  return assemble(outcomes, cfg);
}

}  // namespace

std::vector<double> log_spaced_grid(double lo, double hi, int n) {
  if (!(lo > 0 && hi > lo) || n < 2) fail(ErrorKind::Configuration, "log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

void BootstrapConfig::validate() const {
  if (B < 20) fail(ErrorKind::Configuration, "tuning.B must be >= 20");
  if (w_grid.empty()) fail(ErrorKind::Configuration, "tuning.w_grid must be nonempty");
  for (std::size_t i = 0; i < w_grid.size(); ++i) {
    if (!(w_grid[i] > 0) || !std::isfinite(w_grid[i])) fail(ErrorKind::Configuration, "tuning.w_grid values must be positive");
    if (i > 0 && !(w_grid[i] > w_grid[i - 1])) fail(ErrorKind::Configuration, "tuning.w_grid must be strictly increasing");
  }
  if (!(alpha > 0 && alpha < 1)) fail(ErrorKind::Configuration, "tuning.alpha must lie in (0, 1)");
  if (variant == BootstrapVariant::NonparametricBlock && !(block_length > 0))
    fail(ErrorKind::Configuration, "tuning.block_length must be positive for the block bootstrap");
  if (interval_method == IntervalMethod::Mcmc && (n_burn < 0 || n_iter - n_burn < 100))
    fail(ErrorKind::Configuration, "tuning.n_iter must exceed tuning.n_burn by at least 100");
}

CoverageCurve parametric_bootstrap_coverage(const GibbsPosteriorSpec& spec, const DiscrepancyPrior& disc,
                                            const BootstrapConfig& cfg) {
  spec.validate();
  disc.validate();
  cfg.validate();
  const auto d = static_cast<Eigen::Index>(spec.physical_dim());
  const bool prior_noise = cfg.noise_from_prior && nuisance_dim(spec.loss) > 0;
  const Eigen::VectorXd& x = spec.data.x();

  return run_replicates(cfg, [&](std::size_t b) {
    const std::uint64_t rep_seed = split_seed(cfg.seed, b);
    Rng rng(rep_seed);
    const Eigen::VectorXd truth = spec.prior.sample(rng);
    Eigen::VectorXd y = spec.model->eval(x, truth.head(d)) + disc.sample_discrepancy(x, rng);
    if (prior_noise) {
      const double sd = std::sqrt(truth(d));
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sd * standard_normal(rng);
    } else {
      y += disc.sample_noise(x, rng);
    }
    GibbsPosteriorSpec rep = spec;
    rep.data = spec.data.with_y(std::move(y));
    const Eigen::VectorXd start = fit_start(rep, split_seed(rep_seed, kStartStream));
    std::vector<double> hits;
    for (double w : cfg.w_grid) {
      rep.w = w;
      hits.push_back(hit_rate(interval_at(rep, cfg, split_seed(rep_seed, key_index(w)), start), truth, d));
    }
    return hits;
  });
}

CoverageCurve parametric_bootstrap_map_variant(const GibbsPosteriorSpec& spec, const DiscrepancyPrior& disc,
                                               const BootstrapConfig& cfg) {
  spec.validate();
  disc.validate();
  cfg.validate();
  const auto d = static_cast<Eigen::Index>(spec.physical_dim());
  const Eigen::VectorXd& x = spec.data.x();
  const Eigen::VectorXd theta_hat = fit_start(spec, split_seed(cfg.seed, kStartStream));
  const Eigen::VectorXd fitted = spec.model->eval(x, theta_hat.head(d));

  std::vector<CredibleInterval> intervals;
  GibbsPosteriorSpec observed = spec;
  for (double w : cfg.w_grid) {
    observed.w = w;
    intervals.push_back(interval_at(observed, cfg, split_seed(cfg.seed, key_index(w)), theta_hat));
  }

  return run_replicates(cfg, [&](std::size_t b) {
    const std::uint64_t rep_seed = split_seed(cfg.seed, b);
    Rng rng(rep_seed);
    Eigen::VectorXd y = fitted + disc.sample_discrepancy(x, rng) + disc.sample_noise(x, rng);
    GibbsPosteriorSpec rep = spec;
    rep.data = spec.data.with_y(std::move(y));
    const Eigen::VectorXd estimate = fit_start(rep, split_seed(rep_seed, kStartStream));
    std::vector<double> hits;
    for (const auto& ci : intervals) hits.push_back(hit_rate(ci, estimate, d));
    return hits;
  });
}

std::vector<int> block_partition(const Eigen::VectorXd& x, double block_length) {
  if (!(block_length > 0)) fail(ErrorKind::Configuration, "block_length must be positive");
  const Eigen::Index n = x.size();
  if (n < 2) fail(ErrorKind::Structural, "block partition needs at least 2 points");
  const double range = x(n - 1) - x(0);
  const double spacing = range / static_cast<double>(n - 1);
  const double total = range + spacing;
  const int nb = std::max(1, static_cast<int>(std::lround(total / block_length)));
  const double width = total / nb;
  std::vector<int> blocks(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = static_cast<int>(std::floor((x(i) - x(0) + 0.5 * spacing) / width));
    blocks[static_cast<std::size_t>(i)] = std::clamp(k, 0, nb - 1);
  }
  return blocks;
}

Eigen::VectorXd block_resample(const Eigen::VectorXd& residuals, const std::vector<int>& blocks, Rng& rng) {
  if (static_cast<Eigen::Index>(blocks.size()) != residuals.size())
    fail(ErrorKind::Structural, "block labels and residuals differ in length");
  // Contiguous runs of equal labels; empty blocks never appear as runs.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> runs;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    if (i == 0 || blocks[static_cast<std::size_t>(i)] != blocks[static_cast<std::size_t>(i - 1)])
      runs.emplace_back(i, 0);
    ++runs.back().second;
  }
  std::uniform_int_distribution<std::size_t> pick(0, runs.size() - 1);
  Eigen::VectorXd out(residuals.size());
  Eigen::Index filled = 0;
  while (filled < out.size()) {
    const auto [start, len] = runs[runs.size() == 1 ? 0 : pick(rng)];
    const Eigen::Index take = std::min(len, out.size() - filled);
    out.segment(filled, take) = residuals.segment(start, take);
    filled += take;
  }
  return out;
}

CoverageCurve nonparametric_block_bootstrap(const ExperimentData& data, const GibbsPosteriorSpec& spec,
                                            const BootstrapConfig& cfg) {
  cfg.validate();
  GibbsPosteriorSpec base = spec;
  base.data = data;
  base.validate();
  const auto blocks = block_partition(data.x(), cfg.block_length);
  if (blocks.back() + 1 < 4)
    fail(ErrorKind::Configuration, "block_length leaves " + std::to_string(blocks.back() + 1) +
                                       " blocks; the block bootstrap needs at least 4");
  const auto d = static_cast<Eigen::Index>(base.physical_dim());
  const Eigen::VectorXd theta_hat = fit_start(base, split_seed(cfg.seed, kStartStream));
  const Eigen::VectorXd fitted = base.model->eval(data.x(), theta_hat.head(d));
  const Eigen::VectorXd residuals = data.y() - fitted;

  return run_replicates(cfg, [&](std::size_t b) {
    const std::uint64_t rep_seed = split_seed(cfg.seed, b);
    Rng rng(rep_seed);
    GibbsPosteriorSpec rep = base;
    rep.data = data.with_y(fitted + block_resample(residuals, blocks, rng));
    const Eigen::VectorXd start = fit_start(rep, split_seed(rep_seed, kStartStream));
    std::vector<double> hits;
    for (double w : cfg.w_grid) {
      rep.w = w;
      hits.push_back(hit_rate(interval_at(rep, cfg, split_seed(rep_seed, key_index(w)), start), theta_hat, d));
    }
    return hits;
  });
}

CoverageCurve bootstrap_coverage(const GibbsPosteriorSpec& spec, const DiscrepancyPrior& disc,
                                 const BootstrapConfig& cfg) {
  switch (cfg.variant) {
    case BootstrapVariant::ParametricPrior:
      return parametric_bootstrap_coverage(spec, disc, cfg);
    case BootstrapVariant::ParametricMap:
      return parametric_bootstrap_map_variant(spec, disc, cfg);
    case BootstrapVariant::NonparametricBlock:
      return nonparametric_block_bootstrap(spec.data, spec, cfg);
  }
  fail(ErrorKind::Configuration, "unknown bootstrap variant");
}

std::vector<double> isotonic_decreasing(const std::vector<double>& y, const std::vector<double>& weights) {
  if (y.size() != weights.size()) fail(ErrorKind::Structural, "isotonic fit: values and weights differ in length");
  struct Pool {
    double value;
    double weight;
    std::size_t count;
  };
  std::vector<Pool> pools;
  for (std::size_t i = 0; i < y.size(); ++i) {
    pools.push_back({y[i], weights[i], 1});
    while (pools.size() > 1 && pools[pools.size() - 2].value < pools.back().value) {
      const Pool top = pools.back();
      pools.pop_back();
      Pool& prev = pools.back();
      const double w = prev.weight + top.weight;
      prev.value = (prev.value * prev.weight + top.value * top.weight) / w;
      prev.weight = w;
      prev.count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& p : pools) out.insert(out.end(), p.count, p.value);
  return out;
}

double select_loss_scale(const CoverageCurve& curve, double target, SelectionPolicy policy) {
  const auto& pts = curve.points;
  if (pts.empty()) fail(ErrorKind::Tuning, "coverage curve is empty");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].w > pts[i - 1].w)) fail(ErrorKind::Tuning, "coverage curve w values must be strictly increasing");
  constexpr double kTol = 1e-12;
  const auto at_or_above = [&](double c) { return c >= target - kTol; };

  if (std::all_of(pts.begin(), pts.end(), [&](const CoveragePoint& p) { return at_or_above(p.coverage); }))
    return pts.back().w;
  if (std::none_of(pts.begin(), pts.end(), [&](const CoveragePoint& p) { return at_or_above(p.coverage); }))
    fail(ErrorKind::Tuning, "coverage is below the target " + std::to_string(target) +
                                " at every grid w; extend the grid toward smaller w");

  std::size_t last_ok = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (at_or_above(pts[i].coverage)) last_ok = i;
  const double threshold_choice = pts[last_ok].w;
  if (policy == SelectionPolicy::Threshold || pts.size() < 4) return threshold_choice;

  std::vector<double> logw;
  std::vector<double> cov;
  std::vector<double> weights;
  const double se_floor = 0.5 / std::max(curve.B, 1);
  for (const auto& p : pts) {
    logw.push_back(std::log(p.w));
    cov.push_back(p.coverage);
    weights.push_back(1.0 / std::max(p.std_error, se_floor));
  }
  const std::vector<double> fit = isotonic_decreasing(cov, weights);
  if (!at_or_above(fit.front())) return threshold_choice;
  std::size_t i = 0;
  while (i + 1 < fit.size() && at_or_above(fit[i + 1])) ++i;
  if (i + 1 == fit.size()) return pts.back().w;

  const double lo = logw[i];
  const double hi = logw[i + 1];
  boost::math::interpolators::pchip<std::vector<double>> spline(std::move(logw), std::vector<double>(fit));
  const double root = optim::bisect([&](double t) { return spline(t) - target; }, lo, hi, 1e-12);
  return std::clamp(std::exp(root), pts.front().w, pts.back().w);
}

}  // namespace gibbscal
