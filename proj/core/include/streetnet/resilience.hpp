#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "streetnet/graph.hpp"

namespace streetnet::resilience {

/// Internally node-disjoint path counts on the directed simple projection of a graph.
/// Each node except the query endpoints is split into in/out halves joined by a unit arc;
/// every street arc has unit capacity. Max flow by repeated BFS augmentation.
/// Holds per-query scratch space, so use one instance per thread.
class ConnectivitySolver {
 public:
  explicit ConnectivitySolver(const net::StreetGraph& g);

  std::size_t size() const noexcept { return node_count_; }

  /// Max number of internally node-disjoint directed paths between node indices
  /// (ascending node id order). Returns 0 when t is unreachable from s. s must differ from t.
  int connectivity(std::size_t s, std::size_t t);

 private:
  struct Arc {
    std::uint32_t head;
    std::uint32_t rev;
    int cap;
  };

  void add_arc(std::uint32_t from, std::uint32_t to);
  bool augment(std::uint32_t source, std::uint32_t sink);

  std::size_t node_count_ = 0;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<int> out_degree_;
  std::vector<int> in_degree_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> touched_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t generation_ = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> parent_;
  std::vector<std::uint32_t> queue_;
};

/// Convenience wrapper taking node ids. Throws DegenerateInput if s == t.
int node_connectivity(const net::StreetGraph& g, net::NodeId s, net::NodeId t);

enum class AncMode { Auto, Exact, Sampled };

struct AncOptions {
  AncMode mode = AncMode::Auto;
  /// Auto mode evaluates all ordered pairs when n(n-1) fits within this budget and samples
  /// this many pairs otherwise.
  std::uint64_t sample_limit = 50'000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct AncResult {
  double value = 0.0;
  AncMode mode = AncMode::Exact;  // Exact or Sampled
  std::uint64_t pairs_evaluated = 0;
  std::optional<double> std_error;  // sampled mode only
};

/// Mean node connectivity over ordered pairs (s -> t and t -> s are separate pairs).
/// Sampling draws distinct ordered pairs uniformly without replacement; the standard error
/// includes the finite-population correction. Deterministic for a given seed.
/// Throws DegenerateInput for n < 2.
AncResult average_node_connectivity(const net::StreetGraph& g, const AncOptions& options = {});

struct ConversionGain {
  double gain = 0.0;  // ANC(all streets two-way) / ANC(g) - 1
  AncResult directed;
  AncResult bidirectional;
};

/// Relative ANC increase when every one-way street is made two-way, evaluated with the same
/// mode, seed and budget on both graphs. Throws ZeroBaseAnc when ANC(g) is 0.
ConversionGain oneway_conversion_gain(const net::StreetGraph& g, const AncOptions& options = {});

}  // namespace streetnet::resilience
