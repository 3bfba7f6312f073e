#pragma once

#include <functional>
#include <optional>

#include "iiss/errors.hpp"

/// Error code raised by fn, or nullopt when it returns normally.
inline std::optional<iiss::ErrorCode> error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const iiss::Error& e) {
    return e.code();
  }
  return std::nullopt;
}
