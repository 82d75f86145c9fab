#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "streetnet/geo.hpp"
#include "streetnet/osm.hpp"

namespace streetnet::net {

using NodeId = osm::OsmId;
using EdgeId = std::uint64_t;

inline constexpr int kStreetsUnset = -1;

struct NodeAttr {
  geo::GeoPoint location;
  int streets_per_node = kStreetsUnset;
  /// First or last node of a source way; such nodes always survive simplification.
  bool way_endpoint = false;

  friend bool operator==(const NodeAttr&, const NodeAttr&) = default;
};

struct Edge {
  EdgeId id = 0;
  NodeId u = 0;
  NodeId v = 0;
  double length_m = 0.0;
  /// Polyline from u to v, endpoints included.
  std::vector<geo::GeoPoint> geometry;
  bool oneway = false;
  /// The opposite direction of the same physical street, if the street is two-way.
  std::optional<EdgeId> reversed_twin;
  /// Set when the edge has zero length (distinct nodes at identical coordinates).
  bool zero_length = false;

  bool is_self_loop() const noexcept { return u == v; }

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Spatially embedded directed multigraph. Parallel edges and self-loops are allowed.
struct StreetGraph {
  std::map<NodeId, NodeAttr> nodes;
  std::vector<Edge> edges;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }
  double total_length_m() const noexcept;
  std::unordered_map<EdgeId, std::size_t> edge_index() const;

  friend bool operator==(const StreetGraph&, const StreetGraph&) = default;
};

struct NodeTypeHistogram {
  /// streets-per-node value -> number of nodes with that value
  std::map<int, std::size_t> counts;

  std::size_t total() const noexcept;
  double proportion(int streets) const noexcept;

  friend bool operator==(const NodeTypeHistogram&, const NodeTypeHistogram&) = default;
};

/// Turns each retained way into a chain of directed edges between consecutive node refs.
/// Two-way streets emit both directions as twins; `oneway=yes|true|1` emits forward only,
/// `oneway=-1|reverse` reverse only, and `junction=roundabout` without a oneway tag counts
/// as one-way. Throws EmptyNetwork if no edge results.
StreetGraph build_graph(const osm::RawOsmData& data);

/// Removes interstitial nodes and merges the edge chains through them. A node is kept (an
/// endpoint) if it is a way endpoint, has a self-loop, does not have exactly two distinct
/// neighbors, or its edges form neither a one-way through path (in 1, out 1) nor a
/// two-way through path (in 2, out 2, twinned). Cycles made only of interstitial nodes
/// collapse to self-loops at their smallest node id. Output edges are ordered by id.
/// Idempotent.
StreetGraph simplify(const StreetGraph& g);

/// True if simplify() would remove the node.
bool is_interstitial(const StreetGraph& g, NodeId node);

/// Counts physical streets at every node: a twin pair counts once, a one-way edge once,
/// and a self-loop twice at its node. Stores the counts on the graph and returns the histogram.
NodeTypeHistogram compute_streets_per_node(StreetGraph& g);

/// Histogram of the stored streets_per_node values.
NodeTypeHistogram node_type_histogram(const StreetGraph& g);

/// Keeps nodes inside the boundary (boundary points count as inside) and edges whose
/// endpoints are both kept. Stored street counts are left untouched.
/// Throws EmptyNetwork if no node remains.
StreetGraph truncate(const StreetGraph& g, const geo::PreparedBoundary& boundary);
StreetGraph truncate(const StreetGraph& g, const geo::Polygon& boundary);

/// Collapses each twin pair to a single edge (the one with the smaller id).
StreetGraph to_undirected(const StreetGraph& g);

/// Gives every edge without a twin a reversed twin, making every street two-way.
StreetGraph complete_twins(const StreetGraph& g);

/// Index-based adjacency for the measure algorithms. Node indices follow ascending NodeId.
struct CompactGraph {
  struct Arc {
    std::uint32_t node;  // other endpoint
    std::uint32_t edge;  // index into StreetGraph::edges
    double length_m;
  };

  std::vector<NodeId> ids;
  std::vector<std::size_t> out_offsets;
  std::vector<Arc> out_arcs;
  std::vector<std::size_t> in_offsets;
  std::vector<Arc> in_arcs;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t index_of(NodeId id) const;

  struct Range {
    const Arc* first;
    const Arc* last;
    const Arc* begin() const noexcept { return first; }
    const Arc* end() const noexcept { return last; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(last - first); }
  };
  Range out(std::size_t i) const noexcept {
    return {out_arcs.data() + out_offsets[i], out_arcs.data() + out_offsets[i + 1]};
  }
  Range in(std::size_t i) const noexcept {
    return {in_arcs.data() + in_offsets[i], in_arcs.data() + in_offsets[i + 1]};
  }
};

CompactGraph compact(const StreetGraph& g);

}  // namespace streetnet::net
