#include <cmath>

#include "gibbscal/data_io.hpp"
#include "gibbscal/errors.hpp"
#include "gibbscal/harness.hpp"
#include "gibbscal/parallel.hpp"

namespace gibbscal {

namespace {

struct McOutcome {
  bool ok = false;
  double w = 0.0;
  bool covered = false;
  std::string error;
};

}  // namespace

double length_scale_for_autocorr(double autocorr, double range) {
  if (!(autocorr > 0) || !(range > 0)) fail(ErrorKind::Configuration, "autocorrelation time and range must be positive");
  // exp(-lag^2 / (2 l^2)) = 0.1  at  lag = autocorr * range
  return autocorr * range / std::sqrt(2.0 * std::log(10.0));
}

SimulationRow run_simulation_study(const SimulationSetting& setting, const SimulationConfig& cfg) {
  if (cfg.n_mc < 1) fail(ErrorKind::Configuration, "simulation study needs n_mc >= 1");
  if (cfg.n < 10) fail(ErrorKind::Configuration, "simulation study needs n >= 10");
  Eigen::VectorXd t(cfg.n);
  for (int i = 0; i < cfg.n; ++i) t(i) = static_cast<double>(i) / (cfg.n - 1);
  const auto model = make_ramp_model(cfg.amplitude);
  const ParameterPrior prior({Uniform{2.9, 4.9}, InverseGamma{0.01, 0.01}}, {"B", "sigma2"});
  const double sd = cfg.discrepancy_sd;
  const SqExpKernel true_kernel = setting.zero_discrepancy
                                      ? SqExpKernel{0.0, 1.0, sd * sd}
                                      : SqExpKernel{sd * sd, length_scale_for_autocorr(setting.autocorr, 1.0), 0.0};
  const Eigen::VectorXd truth_curve = model->eval(t, Eigen::VectorXd::Constant(1, cfg.b_true));
  const double target = 1.0 - cfg.alpha;

  // The data streams depend on the discrepancy law only, so every method
  // and tuning mode sees the same datasets.
  const std::uint64_t law_seed =
      split_seed(split_seed(cfg.seed, key_index(setting.zero_discrepancy ? 0.0 : setting.autocorr)), 0);

  std::vector<McOutcome> outcomes(static_cast<std::size_t>(cfg.n_mc));
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t m) {
    const std::uint64_t mc_seed = split_seed(law_seed, m);
    Rng rng(mc_seed);
    try {
      const ExperimentData data(t, truth_curve + sample_gp(true_kernel, t, rng), "mc" + std::to_string(m));
      GibbsPosteriorSpec spec{model, data, GaussianNllLoss{}, prior, 1.0};

      std::optional<Eigen::VectorXd> residuals;
      if (setting.tuning == TuningMode::Estimated) {
        const Eigen::VectorXd theta_hat = map_estimate(spec, MapConfig{4, split_seed(mc_seed, 1)});
        residuals = empirical_discrepancy(data, *model, theta_hat.head(1));
      }

      double w = 0.0;
      if (setting.method == SimMethod::Ess) {
        const double n_e = residuals ? effective_sample_size(*residuals, t)
                                     : effective_sample_size_from_kernel(true_kernel, t);
        w = n_e / cfg.n;
      } else {
        DiscrepancyPrior disc{GpDiscrepancy{true_kernel}, 0.0};
        if (residuals) {
          const double v = residuals->squaredNorm() / cfg.n;
          disc.form = GpDiscrepancy{fit_gp_mle(*residuals, t, SqExpKernel{v, 0.1, 1e-3 * v})};
        }
        BootstrapConfig bc;
        bc.B = cfg.B;
        bc.w_grid = cfg.w_grid;
        bc.alpha = cfg.alpha;
        bc.seed = split_seed(mc_seed, 2);
        bc.interval_method = cfg.bootstrap_interval;
        bc.n_iter = cfg.n_iter / 2;
        bc.n_burn = cfg.n_burn / 2;
        bc.threads = 1;
        w = select_loss_scale(parametric_bootstrap_coverage(spec, disc, bc), target, cfg.policy);
      }

      spec.w = w;
      CredibleInterval ci;
      const IntervalMethod final_method = cfg.final_interval.value_or(
          setting.method == SimMethod::ParametricBootstrap ? cfg.bootstrap_interval : IntervalMethod::Mcmc);
      if (final_method == IntervalMethod::Laplace) {
        ci = laplace_interval(spec, cfg.alpha);
      } else {
        SamplerConfig sc;
        sc.n_iter = cfg.n_iter;
        sc.n_burn = cfg.n_burn;
        sc.seed = split_seed(mc_seed, 3);
        ci = credible_interval(sample_gibbs(spec, sc), cfg.alpha);
      }
      outcomes[m] = {true, w, ci.contains(0, cfg.b_true), {}};
    } catch (const Error& e) {
      outcomes[m].ok = false;
      outcomes[m].error = e.what();
    }
  });

  SimulationRow row;
  row.setting = setting;
  double w_sum = 0.0;
  int hits = 0;
  for (std::size_t m = 0; m < outcomes.size(); ++m) {
    const auto& o = outcomes[m];
    if (!o.ok) {
      ++row.failed;
      row.failures.push_back("iteration " + std::to_string(m) + ": " + o.error);
      continue;
    }
    ++row.n_ok;
    w_sum += o.w;
    hits += o.covered ? 1 : 0;
    row.selected_w.push_back(o.w);
    row.covered.push_back(o.covered ? 1 : 0);
  }
  if (row.n_ok == 0) fail(ErrorKind::Tuning, "every Monte-Carlo iteration of the simulation study failed");
  row.E_w = w_sum / row.n_ok;
  row.coverage = static_cast<double>(hits) / row.n_ok;
  row.coverage_se = std::sqrt(row.coverage * (1.0 - row.coverage) / row.n_ok);
  return row;
}

std::string simulation_table_csv(const std::vector<SimulationRow>& rows) {
  std::string out = "method,autocorr,tuning,E_w,coverage\n";
  for (const auto& r : rows) {
    const double autocorr = r.setting.zero_discrepancy ? 0.0 : r.setting.autocorr;
    out += to_string(r.setting.method) + ',' + format_double(autocorr) + ',' + to_string(r.setting.tuning) + ',' +
           format_double(r.E_w) + ',' + format_double(r.coverage) + '\n';
  }
  return out;
}

Json to_json(const SimulationRow& r) {
  return Json{{"method", to_string(r.setting.method)},
              {"autocorr", r.setting.autocorr},
              {"tuning", to_string(r.setting.tuning)},
              {"zero_discrepancy", r.setting.zero_discrepancy},
              {"E_w", r.E_w},
              {"coverage", r.coverage},
              {"coverage_se", r.coverage_se},
              {"n_ok", r.n_ok},
              {"failed", r.failed},
              {"selected_w", r.selected_w},
              {"covered", r.covered},
              {"failures", r.failures}};
}

}  // namespace gibbscal
