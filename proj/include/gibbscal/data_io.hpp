#pragma once

#include <filesystem>
#include <string>

#include "gibbscal/model.hpp"

namespace gibbscal {

/// Reads a CSV with header `x,y`. Rejects missing columns, unparsable
/// numbers and non-increasing x with ErrorKind::Data.
ExperimentData read_experiment_csv(const std::filesystem::path& path, std::string id = {});
ExperimentData parse_experiment_csv(const std::string& text, std::string id);
std::string experiment_csv(const ExperimentData& data);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Writes via a sibling temp file and rename, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace gibbscal
