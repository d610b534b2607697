// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgeseizure {

enum class Errc {
  InvalidArgument,
  DimensionMismatch,
  AccumulatorOverflow,
  BadMagic,
  UnsupportedVersion,
  ShapeMismatch,
  TruncatedFile,
  ChecksumMismatch,
  BadHeader,
  ChannelCountMismatch,
  OverlappingAnnotations,
  UnsupportedFamily,
  MissingClass,
  ClassTooSmall,
  EmptyInput,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Single exception type for the library; `code()` tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace edgeseizure
