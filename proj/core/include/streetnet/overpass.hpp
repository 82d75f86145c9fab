#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "streetnet/geo.hpp"
#include "streetnet/osm.hpp"

namespace streetnet::io {

inline constexpr const char* kDefaultOverpassEndpoint = "https://overpass-api.de/api/interpreter";
/// Environment variable that overrides the default endpoint.
inline constexpr const char* kEndpointEnvVar = "STREETNET_OVERPASS_ENDPOINT";

/// Endpoint from the environment override, else the public default.
std::string default_endpoint();

struct OverpassOptions {
  std::string endpoint = default_endpoint();
  double timeout_s = 180.0;
  int retries = 3;
  /// First backoff delay; doubles on every retry unless the server sends Retry-After.
  double backoff_s = 1.0;
  std::filesystem::path cache_dir = ".streetnet-cache";
  /// Serve only from cache; a miss is an IoError.
  bool offline = false;
  /// Concurrent requests allowed per endpoint.
  int max_concurrent = 1;
  /// Replaceable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(double seconds)> sleep;
};

struct FetchResult {
  osm::RawOsmData data;
  bool from_cache = false;
  int network_calls = 0;
  int retries_used = 0;
  std::string cache_key;
};

/// Overpass QL selecting filtered highway ways inside each boundary part plus their nodes.
std::string build_overpass_query(const geo::MultiPolygon& boundary, const osm::WayFilter& filter,
                                 int timeout_s);

/// Hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Fetches (or loads from cache) the raw network for a boundary. Responses are cached under
/// cache_dir/<sha256(endpoint + query)>.json with a checksum file; a checksum mismatch is
/// treated as a miss. 429 and 5xx responses and transport timeouts are retried with
/// exponential backoff up to `retries` times.
/// Errors: HttpError, Timeout, RateLimited, MalformedInput, IoError (offline miss).
FetchResult overpass_fetch(const geo::MultiPolygon& boundary, const osm::WayFilter& filter,
                           const OverpassOptions& options);

}  // namespace streetnet::io
