#include <doctest.h>

#include <cmath>

#include "gibbscal/harness.hpp"
#include "helpers.hpp"

using namespace gibbscal;

TEST_CASE("toy generator reproduces its law") {
  ToyProblemSpec spec;
  const Eigen::VectorXd x = spec.grid();
  CHECK(x.size() == 60);
  CHECK(x(0) > 0.0);
  CHECK(x(59) == doctest::Approx(spec.x_max));

  const int reps = 10000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
  for (int r = 0; r < reps; ++r) {
    spec.seed = 1000 + static_cast<std::uint64_t>(r);
    sum += spec.generate().y();
  }
  const Eigen::VectorXd mean = sum / reps;
  const Eigen::VectorXd truth = toy_true_curve(x, spec.theta_true, spec.a);
  const double se = spec.tau / std::sqrt(static_cast<double>(reps));
  CHECK((mean - truth).cwiseAbs().maxCoeff() < 4.0 * se);
}

TEST_CASE("toy anchors and method outcomes") {
  const ToyProblemSpec spec;
  const ToyReport report = run_toy(spec);
  // The grid is chosen so the best-fit slope and the largest discrepancy land
  // on the published values.
  CHECK(std::abs(report.theta_hat - 0.57) < 0.01);
  CHECK(std::abs(report.max_true_discrepancy - 0.43) < 0.01);

  const auto* mle = report.find(ToyMethod::Mle);
  const auto* ess = report.find(ToyMethod::EssPower);
  const auto* gb = report.find(ToyMethod::GibbsBootstrap);
  REQUIRE(mle);
  REQUIRE(ess);
  REQUIRE(gb);
  CHECK(mle->ci_hi < 0.65);
  CHECK(ess->ci_lo < 0.65);
  CHECK(ess->ci_hi > 0.65);
  CHECK(gb->ci_lo < 0.65);
  CHECK(gb->ci_hi > 0.65);
  CHECK(gb->w >= 0.5);
  CHECK(gb->w <= 2.0);
}

TEST_CASE("run_toy is seed-deterministic") {
  ToyProblemSpec spec;
  spec.bootstrap_B = 50;
  spec.n_iter = 4000;
  spec.n_burn = 1000;
  const std::set<ToyMethod> methods{ToyMethod::Mle, ToyMethod::GibbsBootstrap};
  const std::string a = dump(to_json(run_toy(spec, methods)));
  const std::string b = dump(to_json(run_toy(spec, methods)));
  CHECK(a == b);
  const auto only = run_toy(spec, {ToyMethod::Mle});
  CHECK(only.methods.size() == 1);
  CHECK(only.find(ToyMethod::GibbsBootstrap) == nullptr);
}

TEST_CASE("ramp model") {
  const auto model = make_ramp_model(500.0);
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0);
  const Eigen::VectorXd lo = model->eval(t, Eigen::VectorXd::Constant(1, 3.5));
  const Eigen::VectorXd hi = model->eval(t, Eigen::VectorXd::Constant(1, 4.5));
  CHECK((hi.array() > lo.array()).all());
  // Interleaving grids must not leak a cached profile between calls.
  const Eigen::VectorXd t2 = Eigen::VectorXd::LinSpaced(7, 0.2, 0.8);
  const Eigen::VectorXd other = model->eval(t2, Eigen::VectorXd::Constant(1, 3.9));
  CHECK(model->eval(t, Eigen::VectorXd::Constant(1, 3.5)) == lo);
  for (Eigen::Index i = 0; i < t2.size(); ++i)
    CHECK(other(i) == doctest::Approx(500.0 / (1.0 + std::exp(-(t2(i) - 0.3) / 0.06))));
}

TEST_CASE("autocorrelation time conversion") {
  for (double a : {0.1, 0.2}) {
    const double l = length_scale_for_autocorr(a, 1.0);
    const SqExpKernel k{1.0, l, 0.0};
    CHECK(k(0.0, a) == doctest::Approx(0.1));
  }
  CHECK(error_kind([] { length_scale_for_autocorr(0.0, 1.0); }) == ErrorKind::Configuration);
}

TEST_CASE("simulation study checks and zero-discrepancy control") {
  SimulationConfig cfg;
  cfg.n_mc = 0;
  CHECK(error_kind([&] { run_simulation_study({}, cfg); }) == ErrorKind::Configuration);

  // Well-specified control: white noise only. ESS rule sees near-independent
  // residuals, so w is near 1 and the interval is an ordinary posterior.
  cfg.n_mc = 100;
  cfg.n_iter = 4000;
  cfg.n_burn = 1000;
  SimulationSetting control;
  control.method = SimMethod::Ess;
  control.zero_discrepancy = true;
  const SimulationRow row = run_simulation_study(control, cfg);
  CHECK(row.n_ok + row.failed == 100);
  CHECK(row.E_w > 0.8);
  CHECK(row.E_w < 1.2);
  const double se = std::sqrt(0.9 * 0.1 / row.n_ok);
  CHECK(std::abs(row.coverage - 0.9) < 3.0 * se);
  CHECK(row.coverage_se == doctest::Approx(std::sqrt(row.coverage * (1 - row.coverage) / row.n_ok)));

  const std::string csv = simulation_table_csv({row});
  CHECK(csv.rfind("method,autocorr,tuning,E_w,coverage\n", 0) == 0);
}

TEST_CASE("ensemble demo with identical experiments") {
  SyntheticEnsembleSpec spec;
  spec.K = 3;
  spec.B = 20;
  spec.w_grid = log_spaced_grid(1e-3, 10.0, 15);
  spec.n_iter = 3000;
  spec.n_burn = 1000;
  spec.identical_experiments = true;
  const EnsembleReport report = run_ensemble_demo(spec);
  REQUIRE(report.experiments.size() == 3);
  const auto& first = report.experiments.front().summary_pb;
  for (const auto& e : report.experiments) {
    CHECK(e.summary_pb.mean == first.mean);
    CHECK(e.summary_pb.cov == first.cov);
  }
  CHECK((report.consensus_pb.mean - first.mean).norm() < 1e-10 * first.mean.norm());
  const Eigen::MatrixXd expected = first.cov / 3.0;
  CHECK((report.consensus_pb.cov - expected).norm() < 1e-8 * expected.norm());
  CHECK(report.consensus_narrower_pb);

  spec.K = 1;
  CHECK(error_kind([&] { run_ensemble_demo(spec); }) == ErrorKind::Configuration);
}
