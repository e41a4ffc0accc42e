#include <cmath>

#include "gibbscal/errors.hpp"
#include "gibbscal/harness.hpp"
#include "gibbscal/parallel.hpp"

namespace gibbscal {

namespace {

bool contains_all(const CredibleInterval& ci, const Eigen::VectorXd& v) {
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (!ci.contains(j, v(j))) return false;
  return true;
}

bool narrower_than_all(const CredibleInterval& consensus, const std::vector<CredibleInterval>& subsets) {
  for (const auto& s : subsets)
    for (Eigen::Index j = 0; j < consensus.lo.size(); ++j)
      if (!(consensus.hi(j) - consensus.lo(j) < s.hi(j) - s.lo(j))) return false;
  return true;
}

double experiment_amplitude(int k, int K) { return K == 1 ? 500.0 : 400.0 + 200.0 * k / (K - 1); }

}  // namespace

EnsembleReport run_ensemble_demo(const SyntheticEnsembleSpec& spec) {
  if (spec.K < 2) fail(ErrorKind::Configuration, "ensemble demo needs K >= 2");
  if (spec.n < 10) fail(ErrorKind::Configuration, "ensemble demo needs n >= 10");
  Eigen::VectorXd t(spec.n);
  for (int i = 0; i < spec.n; ++i) t(i) = static_cast<double>(i) / (spec.n - 1);
  const ParameterPrior prior({Uniform{2.9, 4.9}, Uniform{0.5, 1.5}, InverseGamma{0.01, 0.01}}, {"B", "C", "sigma2"});
  const std::vector<Eigen::Index> physical{0, 1};
  const double multiplier = subset_loss_multiplier(spec.scaling, static_cast<std::size_t>(spec.K));

  EnsembleReport report;
  report.spec = spec;
  report.experiments.resize(static_cast<std::size_t>(spec.K));
  parallel_for(report.experiments.size(), spec.threads, [&](std::size_t k) {
    const int source = spec.identical_experiments ? 0 : static_cast<int>(k);
    auto& out = report.experiments[k];
    out.id = "exp" + std::to_string(k + 1);
    out.amplitude = experiment_amplitude(source, spec.K);
    const auto model = make_velocity_model(out.amplitude);
    const double sd = spec.discrepancy_sd_fraction * out.amplitude;
    Rng rng = make_stream(spec.seed, static_cast<std::uint64_t>(source));
    const Eigen::VectorXd y = model->eval(t, spec.theta_true) + sample_gp(SqExpKernel{sd * sd, spec.length_scale, 0.0}, t, rng);
    const ExperimentData data(t, y, out.id);
    GibbsPosteriorSpec post{model, data, GaussianNllLoss{}, prior, 1.0};

    const std::uint64_t exp_seed = split_seed(spec.seed, 1000 + static_cast<std::uint64_t>(source));
    out.theta_hat = map_estimate(post, MapConfig{8, split_seed(exp_seed, 1)});
    const Eigen::VectorXd residuals = empirical_discrepancy(data, *model, out.theta_hat.head(2));
    const double v = residuals.squaredNorm() / spec.n;
    out.kernel = fit_gp_mle(residuals, t, SqExpKernel{v, 0.1, 1e-3 * v});

    BootstrapConfig bc;
    bc.B = spec.B;
    bc.w_grid = spec.w_grid;
    bc.alpha = spec.alpha;
    bc.seed = split_seed(exp_seed, 2);
    bc.interval_method = IntervalMethod::Laplace;
    bc.threads = 1;
    const auto curve = parametric_bootstrap_coverage(post, DiscrepancyPrior{GpDiscrepancy{out.kernel}, 0.0}, bc);
    out.w_pb = select_loss_scale(curve, 1.0 - spec.alpha);
    out.w_ess = effective_sample_size(residuals, t) / spec.n;

    SamplerConfig sc;
    sc.n_iter = spec.n_iter;
    sc.n_burn = spec.n_burn;
    sc.seed = split_seed(exp_seed, 3);
    post.w = out.w_pb * multiplier;
    const auto sample_pb = sample_gibbs(post, sc);
    post.w = out.w_ess * multiplier;
    const auto sample_ess = sample_gibbs(post, sc);
    out.interval_pb = credible_interval(sample_pb, spec.alpha);
    out.interval_ess = credible_interval(sample_ess, spec.alpha);
    out.summary_pb = gaussianize(sample_pb, physical, out.id);
    out.summary_ess = gaussianize(sample_ess, physical, out.id);
  });

  std::vector<GaussianSummary> pb;
  std::vector<GaussianSummary> ess;
  std::vector<CredibleInterval> pb_intervals;
  std::vector<CredibleInterval> ess_intervals;
  report.truth_in_all_subsets_pb = true;
  for (const auto& e : report.experiments) {
    pb.push_back(e.summary_pb);
    ess.push_back(e.summary_ess);
    pb_intervals.push_back(gaussian_interval(e.summary_pb.mean, e.summary_pb.cov, spec.alpha));
    ess_intervals.push_back(gaussian_interval(e.summary_ess.mean, e.summary_ess.cov, spec.alpha));
    report.truth_in_all_subsets_pb = report.truth_in_all_subsets_pb && contains_all(e.interval_pb, spec.theta_true);
  }
  report.consensus_pb = combine(pb, spec.scaling);
  report.consensus_ess = combine(ess, spec.scaling);
  report.consensus_interval_pb = gaussian_interval(report.consensus_pb.mean, report.consensus_pb.cov, spec.alpha);
  report.consensus_interval_ess = gaussian_interval(report.consensus_ess.mean, report.consensus_ess.cov, spec.alpha);
  report.truth_in_consensus_pb = contains_all(report.consensus_interval_pb, spec.theta_true);
  report.consensus_narrower_pb = narrower_than_all(report.consensus_interval_pb, pb_intervals);
  report.consensus_narrower_ess = narrower_than_all(report.consensus_interval_ess, ess_intervals);
  return report;
}

Json to_json(const EnsembleReport& report) {
  const auto& s = report.spec;
  Json spec{{"K", s.K},
            {"n", s.n},
            {"theta_true", vector_json(s.theta_true)},
            {"discrepancy_sd_fraction", s.discrepancy_sd_fraction},
            {"length_scale", s.length_scale},
            {"seed", s.seed},
            {"B", s.B},
            {"alpha", s.alpha},
            {"n_iter", s.n_iter},
            {"n_burn", s.n_burn},
            {"identical_experiments", s.identical_experiments},
            {"scaling", to_string(s.scaling)}};
  Json experiments = Json::array();
  for (const auto& e : report.experiments) {
    experiments.push_back(Json{{"id", e.id},
                               {"amplitude", e.amplitude},
                               {"theta_hat", vector_json(e.theta_hat)},
                               {"kernel", to_json(e.kernel)},
                               {"w_pb", e.w_pb},
                               {"w_ess", e.w_ess},
                               {"interval_pb", to_json(e.interval_pb)},
                               {"interval_ess", to_json(e.interval_ess)},
                               {"summary_pb", to_json(e.summary_pb)},
                               {"summary_ess", to_json(e.summary_ess)}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"target", "ensemble-demo"},
              {"spec", spec},
              {"experiments", experiments},
              {"consensus_pb", to_json(report.consensus_pb)},
              {"consensus_ess", to_json(report.consensus_ess)},
              {"consensus_interval_pb", to_json(report.consensus_interval_pb)},
              {"consensus_interval_ess", to_json(report.consensus_interval_ess)},
              {"truth_in_all_subsets_pb", report.truth_in_all_subsets_pb},
              {"truth_in_consensus_pb", report.truth_in_consensus_pb},
              {"consensus_narrower_pb", report.consensus_narrower_pb},
              {"consensus_narrower_ess", report.consensus_narrower_ess}};
}

}  // namespace gibbscal
