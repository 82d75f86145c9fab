#include "streetnet/error.hpp"

namespace streetnet {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::EmptyNetwork: return "EmptyNetwork";
    case ErrorCode::NoQualifyingEdges: return "NoQualifyingEdges";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ZeroBaseAnc: return "ZeroBaseAnc";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace streetnet
