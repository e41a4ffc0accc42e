#include <CLI11.hpp>

#include <iostream>

#include "gibbscal/commands.hpp"
#include "gibbscal/serialize.hpp"

#ifndef GIBBSCAL_GOLDEN_DIR
#define GIBBSCAL_GOLDEN_DIR ""
#endif

int main(int argc, char** argv) {
  using namespace gibbscal;
  CLI::App app{"Gibbs posterior calibration with tuned loss scale"};
  app.require_subcommand(1);

  std::filesystem::path config;
  CalibrateOptions cal;
  std::uint64_t seed = 0;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate every experiment listed in a config file");
  calibrate->add_option("config", config, "JSON config")->required();
  auto* seed_opt = calibrate->add_option("--seed", seed, "Override tuning.seed");
  calibrate->add_option("--output", cal.output, "Output directory (overrides outputs.directory)");
  calibrate->add_option("--threads", cal.threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);

  std::filesystem::path manifest;
  std::filesystem::path combine_out = ".";
  std::string scaling;
  auto* combine = app.add_subcommand("combine", "Combine Gaussian posterior summaries into a consensus");
  combine->add_option("manifest", manifest, "Calibration manifest or summary list")->required();
  combine->add_option("--scaling", scaling, "within_experiment or across_experiments");
  combine->add_option("--output", combine_out, "Output directory");

  ReproduceOptions rep;
  rep.golden_dir = GIBBSCAL_GOLDEN_DIR;
  int n_mc = 0;
  auto* reproduce = app.add_subcommand("reproduce", "Rerun a reference experiment");
  reproduce->add_option("target", rep.target, "toy, simulation-table or ensemble-demo")->required();
  reproduce->add_option("--output", rep.output, "Output directory");
  reproduce->add_option("--golden", rep.golden_dir, "Directory of golden outputs for --check");
  reproduce->add_flag("--check", rep.check, "Compare against reference values and exit 3 on mismatch");
  reproduce->add_option("--threads", rep.threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  auto* n_mc_opt = reproduce->add_option("--n-mc", n_mc, "Monte Carlo replications (simulation-table)")
                       ->check(CLI::PositiveNumber);
  reproduce->add_flag("--with-fixed", rep.with_fixed, "Also run the fixed-tuning rows (simulation-table)");
  std::string policy;
  reproduce->add_option("--policy", policy, "Loss-scale selection rule (simulation-table)")
      ->check(CLI::IsMember({"threshold", "spline_root"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*calibrate) {
    if (*seed_opt) cal.seed = seed;
    return cmd_calibrate(config, cal, std::cout, std::cerr);
  }
  if (*combine) {
    std::optional<ConsensusScaling> s;
    if (!scaling.empty()) {
      try {
        s = consensus_scaling_from_string(scaling);
      } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
      }
    }
    return cmd_combine(manifest, s, combine_out, std::cout, std::cerr);
  }
  if (*n_mc_opt) rep.n_mc = n_mc;
  if (!policy.empty()) rep.policy = policy == "threshold" ? SelectionPolicy::Threshold : SelectionPolicy::SplineRoot;
  return cmd_reproduce(rep, std::cout, std::cerr);
}
