#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gibbscal {

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
  Structural,      // dimension mismatch, rank deficiency
  Domain,          // argument outside the mathematical domain
  Configuration,   // invalid user-supplied settings
  Data,            // unreadable or malformed input data
  Initialization,  // sampler could not find a finite starting point
  Optimization,    // every optimizer restart failed
  Conditioning,    // numerically singular matrix
  Precision,       // too few draws for the requested statistic
  Tuning,          // loss-scale selection failed
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace gibbscal
