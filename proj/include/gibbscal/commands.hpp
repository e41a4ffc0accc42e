#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "gibbscal/ensemble_wasp.hpp"
#include "gibbscal/errors.hpp"
#include "gibbscal/scale_tuning.hpp"

namespace gibbscal {

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitNumeric = 3 };

int exit_code_for(ErrorKind kind);

struct CalibrateOptions {
  std::optional<std::uint64_t> seed;  // overrides tuning.seed
  std::optional<std::filesystem::path> output;
  int threads = 1;
};

/// Runs the per-experiment pipeline of a config file and writes posterior,
/// coverage and summary files plus a manifest. On failure prints an error
/// JSON to `err` (and error.json in the output directory when known).
int cmd_calibrate(const std::filesystem::path& config, const CalibrateOptions& options, std::ostream& out,
                  std::ostream& err);

/// Reads the summaries listed in a manifest (a calibrate manifest or
/// {"summaries": [paths], "scaling": ...}) and writes consensus.json and
/// comparison.csv into `output`.
int cmd_combine(const std::filesystem::path& manifest, std::optional<ConsensusScaling> scaling,
                const std::filesystem::path& output, std::ostream& out, std::ostream& err);

struct ReproduceOptions {
  std::string target;  // toy | simulation-table | ensemble-demo
  std::filesystem::path output = "reproduce";
  std::filesystem::path golden_dir;
  bool check = false;
  int threads = 1;
  std::optional<int> n_mc;
  bool with_fixed = false;  // simulation-table: also run the fixed-tuning rows
  std::optional<SelectionPolicy> policy;  // simulation-table: overrides the study's selection rule
};

int cmd_reproduce(const ReproduceOptions& options, std::ostream& out, std::ostream& err);

}  // namespace gibbscal
