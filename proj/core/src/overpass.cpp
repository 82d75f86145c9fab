#include "streetnet/overpass.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>

#include "streetnet/error.hpp"
#include "streetnet/format.hpp"

namespace streetnet::io {
namespace {

class EndpointGate {
 public:
  void acquire(int limit) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return active_ < std::max(1, limit); });
    ++active_;
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int active_ = 0;
};

EndpointGate& gate_for(const std::string& endpoint) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::unique_ptr<EndpointGate>> gates;
  std::lock_guard lock(registry_mutex);
  auto& slot = gates[endpoint];
  if (!slot) slot = std::make_unique<EndpointGate>();
  return *slot;
}

struct GateLease {
  GateLease(EndpointGate& g, int limit) : gate(g) { gate.acquire(limit); }
  ~GateLease() { gate.release(); }
  GateLease(const GateLease&) = delete;
  GateLease& operator=(const GateLease&) = delete;
  EndpointGate& gate;
};

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

std::string regex_alternation(const std::set<std::string>& values) {
  std::string out = "^(";
  bool first = true;
  for (const std::string& v : values) {
    if (!first) out += '|';
    first = false;
    out += v;
  }
  return out + ")$";
}

struct Url {
  std::string scheme_host_port;
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "bad endpoint URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

double retry_after_seconds(const httplib::Response& res, double fallback) {
  if (!res.has_header("Retry-After")) return fallback;
  const std::string v = res.get_header_value("Retry-After");
  char* end = nullptr;
  const double s = std::strtod(v.c_str(), &end);
  return end != v.c_str() && s >= 0.0 ? s : fallback;
}

}  // namespace

std::string default_endpoint() {
  if (const char* env = std::getenv(kEndpointEnvVar); env != nullptr && *env != '\0') return env;
  return kDefaultOverpassEndpoint;
}

std::string build_overpass_query(const geo::MultiPolygon& boundary, const osm::WayFilter& filter,
                                 int timeout_s) {
  std::set<std::string> highways = filter.include_highway_tags;
  if (filter.include_service_roads) highways.insert("service");
  std::string selector = "[\"highway\"~\"" + regex_alternation(highways) + "\"][\"area\"!~\"yes\"]";
  if (!filter.exclude_access_values.empty()) {
    selector += "[\"access\"!~\"" + regex_alternation(filter.exclude_access_values) + "\"]";
  }
  std::string q = "[out:json][timeout:" + std::to_string(timeout_s) + "];(";
  for (const geo::Polygon& part : boundary.parts) {
    std::string poly;
    for (const geo::GeoPoint& p : part.exterior) {
      if (!poly.empty()) poly += ' ';
      poly += format_number(p.lat) + ' ' + format_number(p.lon);
    }
    q += "way" + selector + "(poly:\"" + poly + "\");";
  }
  q += ");(._;>;);out;";
  return q;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

FetchResult overpass_fetch(const geo::MultiPolygon& boundary, const osm::WayFilter& filter,
                           const OverpassOptions& options) {
  filter.validate();
  const std::string query =
      build_overpass_query(boundary, filter, static_cast<int>(std::lround(options.timeout_s)));
  FetchResult result;
  result.cache_key = sha256_hex(options.endpoint + "\n" + query);
  const auto body_path = options.cache_dir / (result.cache_key + ".json");
  const auto sum_path = options.cache_dir / (result.cache_key + ".sha256");

  if (auto cached = read_file(body_path)) {
    auto checksum = read_file(sum_path);
    if (checksum && checksum->substr(0, 64) == sha256_hex(*cached)) {
      result.data = osm::parse_overpass_json(*cached, "overpass-cache:" + result.cache_key);
      result.from_cache = true;
      return result;
    }
  }
  if (options.offline) {
    throw Error(ErrorCode::IoError, "offline mode and no valid cache entry " + result.cache_key);
  }

  auto sleep = options.sleep ? options.sleep : [](double s) {
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };
  const Url url = split_url(options.endpoint);
  GateLease lease(gate_for(options.endpoint), options.max_concurrent);

  httplib::Client client(url.scheme_host_port);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(options.timeout_s));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const std::string form = "data=" + httplib::detail::encode_url(query);
  double backoff = options.backoff_s;
  ErrorCode last_code = ErrorCode::HttpError;
  std::string last_message;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    if (attempt > 0) ++result.retries_used;
    ++result.network_calls;
    auto res = client.Post(url.path, form, "application/x-www-form-urlencoded");
    double wait = backoff;
    if (!res) {
      const auto err = res.error();
      last_code = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ||
                          err == httplib::Error::Write
                      ? ErrorCode::Timeout
                      : ErrorCode::HttpError;
      last_message = "request failed: " + httplib::to_string(err);
    } else if (res->status == 200) {
      result.data = osm::parse_overpass_json(res->body, "overpass:" + options.endpoint);
      write_file(body_path, res->body);
      write_file(sum_path, sha256_hex(res->body) + "\n");
      return result;
    } else if (res->status == 429) {
      last_code = ErrorCode::RateLimited;
      last_message = "rate limited (HTTP 429)";
      wait = retry_after_seconds(*res, backoff);
    } else if (res->status >= 500) {
      last_code = res->status == 504 ? ErrorCode::Timeout : ErrorCode::HttpError;
      last_message = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      wait = retry_after_seconds(*res, backoff);
    } else {
      throw Error(ErrorCode::HttpError,
                  "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    if (attempt < options.retries) {
      sleep(wait);
      backoff *= 2.0;
    }
  }
  throw Error(last_code, last_message + " after " + std::to_string(options.retries) + " retries");
}

}  // namespace streetnet::io
