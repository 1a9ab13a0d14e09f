// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#pragma once

#include <stdexcept>
#include <string>

namespace ginar {

enum class ErrorCode {
  kInvalidArgument = 1,
  kShapeMismatch = 2,
  kNonFinite = 3,
  kDataFormat = 4,
  kIo = 5,
  kState = 6,
};

/// Single exception type for the core; the C layer maps `code()` onto its
/// status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string &what) {
  if (!cond)
    throw Error(code, what);
}

} // namespace ginar
