#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace streetnet {

enum class ErrorCode {
  DegeneratePolygon,
  MalformedInput,
  EmptyNetwork,
  NoQualifyingEdges,
  NonConvergence,
  InsufficientSamples,
  DegenerateInput,
  EmptyInput,
  ZeroBaseAnc,
  HttpError,
  Timeout,
  RateLimited,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every library failure is reported through this exception; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace streetnet
