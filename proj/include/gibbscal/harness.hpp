#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gibbscal/ensemble_wasp.hpp"
#include "gibbscal/gibbs_sampler.hpp"
#include "gibbscal/gp_discrepancy.hpp"
#include "gibbscal/scale_tuning.hpp"
#include "gibbscal/serialize.hpp"

namespace gibbscal {

// ---------------------------------------------------------------------------
// Built-in models

/// True process of the toy problem: theta * x / (1 + x / a).
Eigen::VectorXd toy_true_curve(const Eigen::VectorXd& x, double theta, double a);

/// Logistic ramp whose height scales linearly with B:
///   amplitude * (1 + slope * (B - b_ref)) / (1 + exp(-(t - t0) / width)).
/// The stand-in forward model of the simulation study.
ModelPtr make_ramp_model(double amplitude, double slope = 0.1, double b_ref = 3.9, double t0 = 0.3,
                         double width = 0.06);

/// Two logistic ramps, the first scaled by B and the second delayed by C:
///   amplitude * [(1 + 0.1 (B - 3.9)) L((t - 0.25) / 0.05)
///                + 0.4 L((t - 0.55 - 0.1 (C - 1)) / 0.05)].
/// Velocity-like base curve for the ensemble demo, theta = (B, C).
ModelPtr make_velocity_model(double amplitude);

// ---------------------------------------------------------------------------
// Toy problem

enum class ToyMethod { Mle, GlsKoh, EssPower, GibbsBootstrap };
std::string to_string(ToyMethod m);

struct ToyProblemSpec {
  double theta_true = 0.65;
  double a = 20.0;
  double tau = 0.01;  // noise standard deviation
  int n = 60;
  double x_max = 4.0;  // x_i = x_max * i / n, i = 1..n
  std::uint64_t seed = 20240601;
  double alpha = 0.05;
  int bootstrap_B = 200;
  int n_iter = 20000;
  int n_burn = 5000;
  int threads = 1;

  Eigen::VectorXd grid() const;
  ExperimentData generate() const;
};

struct ToyMethodResult {
  ToyMethod method = ToyMethod::Mle;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double w = 0.0;                      // loss scale, where one applies
  double n_e = 0.0;                    // EssPower only
  double n_e_autocorrelation = 0.0;    // EssPower only, empirical-residual estimate
  SqExpKernel kernel;                  // GlsKoh only
};

struct ToyReport {
  ToyProblemSpec spec;
  double theta_hat = 0.0;
  double max_abs_residual = 0.0;      // fitted residual y - eta(x; theta_hat)
  double max_true_discrepancy = 0.0;  // true curve minus eta(x; theta_true)
  std::vector<ToyMethodResult> methods;
  CoverageCurve bootstrap_curve;

  const ToyMethodResult* find(ToyMethod m) const;
};

ToyReport run_toy(const ToyProblemSpec& spec,
                  const std::set<ToyMethod>& methods = {ToyMethod::Mle, ToyMethod::GlsKoh, ToyMethod::EssPower,
                                                        ToyMethod::GibbsBootstrap});
Json to_json(const ToyReport& report);

// ---------------------------------------------------------------------------
// Simulation study

enum class SimMethod { ParametricBootstrap, Ess };
enum class TuningMode { Fixed, Estimated };
std::string to_string(SimMethod m);
std::string to_string(TuningMode m);

struct SimulationSetting {
  double autocorr = 0.1;  // fraction of the t range where correlation falls to 0.1
  TuningMode tuning = TuningMode::Estimated;
  SimMethod method = SimMethod::ParametricBootstrap;
  /// Control run: no discrepancy, white noise of the same scale instead.
  bool zero_discrepancy = false;
};

struct SimulationConfig {
  int n_mc = 100;
  std::uint64_t seed = 777;
  int n = 100;
  double amplitude = 500.0;
  double discrepancy_sd = 10.0;
  double b_true = 3.9;
  int B = 100;
  std::vector<double> w_grid = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1,
                                0.2,  0.3,  0.4,  0.5,  0.6,  0.7,  0.8,  0.9,  1.0};
  double alpha = 0.1;
  SelectionPolicy policy = SelectionPolicy::SplineRoot;
  IntervalMethod bootstrap_interval = IntervalMethod::Laplace;
  /// Interval reported after tuning. Unset: bootstrap rows report the kind
  /// of interval whose coverage the bootstrap calibrated (bootstrap_interval),
  /// ESS rows report the MCMC interval.
  std::optional<IntervalMethod> final_interval;
  int n_iter = 8000;
  int n_burn = 2000;
  int threads = 1;
};

/// Length scale of the squared-exponential kernel whose correlation drops to
/// 0.1 at lag autocorr * range.
double length_scale_for_autocorr(double autocorr, double range);

struct SimulationRow {
  SimulationSetting setting;
  double E_w = 0.0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  int n_ok = 0;
  int failed = 0;
  std::vector<double> selected_w;
  std::vector<int> covered;
  std::vector<std::string> failures;  // one message per failed iteration
};

SimulationRow run_simulation_study(const SimulationSetting& setting, const SimulationConfig& cfg);

/// Table layout `method,autocorr,tuning,E_w,coverage`.
std::string simulation_table_csv(const std::vector<SimulationRow>& rows);
Json to_json(const SimulationRow& row);

// ---------------------------------------------------------------------------
// Ensemble demo

struct SyntheticEnsembleSpec {
  int K = 9;
  int n = 100;
  Eigen::Vector2d theta_true{3.9, 1.0};
  double discrepancy_sd_fraction = 0.02;
  double length_scale = 0.05;
  std::uint64_t seed = 4242;
  int B = 50;
  std::vector<double> w_grid = log_spaced_grid(1e-3, 10.0, 35);
  double alpha = 0.1;
  int n_iter = 8000;
  int n_burn = 2000;
  int threads = 1;
  /// Every experiment gets the first experiment's data (invariant check).
  bool identical_experiments = false;
  ConsensusScaling scaling = ConsensusScaling::AcrossExperiments;
};

struct EnsembleExperimentResult {
  std::string id;
  double amplitude = 0.0;
  Eigen::VectorXd theta_hat;
  SqExpKernel kernel;
  double w_pb = 0.0;
  double w_ess = 0.0;
  CredibleInterval interval_pb;
  CredibleInterval interval_ess;
  GaussianSummary summary_pb;
  GaussianSummary summary_ess;
};

struct EnsembleReport {
  SyntheticEnsembleSpec spec;
  std::vector<EnsembleExperimentResult> experiments;
  ConsensusPosterior consensus_pb;
  ConsensusPosterior consensus_ess;
  CredibleInterval consensus_interval_pb;
  CredibleInterval consensus_interval_ess;
  /// Whether theta_true lies inside every subset interval and inside the
  /// consensus interval (reported, not asserted).
  bool truth_in_all_subsets_pb = false;
  bool truth_in_consensus_pb = false;
  bool consensus_narrower_pb = false;
  bool consensus_narrower_ess = false;
};

EnsembleReport run_ensemble_demo(const SyntheticEnsembleSpec& spec);
Json to_json(const EnsembleReport& report);

/// Gaussian equal-tailed interval per coordinate.
CredibleInterval gaussian_interval(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double alpha);

}  // namespace gibbscal
