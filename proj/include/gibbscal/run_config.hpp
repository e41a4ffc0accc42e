#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gibbscal/ensemble_wasp.hpp"
#include "gibbscal/gp_discrepancy.hpp"
#include "gibbscal/loss.hpp"
#include "gibbscal/prior.hpp"
#include "gibbscal/scale_tuning.hpp"
#include "gibbscal/serialize.hpp"

namespace gibbscal {

struct ExperimentSource {
  std::string id;
  std::string path;  // relative paths resolve against the config file's directory
};

struct ModelSection {
  std::string name = "linear";  // linear | polynomial | ramp | velocity
  Json params = Json::object();
};

struct PriorEntry {
  std::string name;
  Marginal marginal = Normal{0.0, 1.0};
};

struct LossSection {
  std::string type = "l2";  // l2 | gaussian_nll
  Quadrature quadrature = Quadrature::PlainSum;
  /// L2 only: compare the data with eta + E[delta] under the discrepancy prior.
  bool offset_expected_discrepancy = false;
};

struct DiscrepancySection {
  std::string type = "none";  // none | gp_empirical_bayes | gp_explicit | shift_family
  SqExpKernel kernel;         // gp_explicit, or the initial guess for gp_empirical_bayes
  ShiftFamily shift;
  double noise_sd = 0.0;
};

struct TuningSection {
  std::string method = "bootstrap";  // bootstrap | ess | fixed
  BootstrapVariant variant = BootstrapVariant::ParametricPrior;
  int B = 100;
  std::vector<double> w_grid = log_spaced_grid();
  double alpha = 0.1;
  std::uint64_t seed = 1;
  IntervalMethod interval = IntervalMethod::Laplace;
  SelectionPolicy policy = SelectionPolicy::SplineRoot;
  double block_length = 0.0;
  double w = 1.0;  // method = fixed
  int n_iter = 4000;
  int n_burn = 1000;
};

struct SamplerSection {
  int n_iter = 20000;
  int n_burn = 5000;
};

struct EnsembleSection {
  ConsensusScaling scaling = ConsensusScaling::AcrossExperiments;
  double tol = 1e-10;
  int max_iter = 500;
  /// Multiply each subset's loss scale by K (subsets of one experiment).
  bool loss_multiplier = false;
};

/// One calibration run. Parsed from JSON; every section is validated and
/// unknown keys are rejected before any computation starts.
struct RunConfig {
  std::vector<ExperimentSource> data;
  ModelSection model;
  std::vector<PriorEntry> prior;
  LossSection loss;
  DiscrepancySection discrepancy;
  TuningSection tuning;
  SamplerSection sampler;
  EnsembleSection ensemble;
  std::string output_directory = "out";
  std::filesystem::path base_directory;  // not serialized

  static RunConfig from_json(const Json& j, const std::filesystem::path& base_directory = {});
  static RunConfig load(const std::filesystem::path& path);
  Json to_json() const;

  ModelPtr make_model() const;
  ParameterPrior make_prior() const;
  LossFunction make_loss(const Eigen::VectorXd& expected_discrepancy) const;
  DiscrepancyPrior make_discrepancy(const SqExpKernel& kernel) const;
  BootstrapConfig make_bootstrap() const;
  std::filesystem::path resolve(const std::string& path) const;
};

}  // namespace gibbscal
