#pragma once

#include <functional>
#include <optional>

#include "gibbscal/errors.hpp"

/// Kind of the gibbscal::Error thrown by fn, or nullopt if it returns.
inline std::optional<gibbscal::ErrorKind> error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const gibbscal::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}
