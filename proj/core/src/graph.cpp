#include "streetnet/graph.hpp"

#include <algorithm>
#include <set>

#include "streetnet/error.hpp"

namespace streetnet::net {
namespace {

enum class Direction { Both, Forward, Reverse };

Direction way_direction(const osm::Tags& tags) {
  if (auto it = tags.find("oneway"); it != tags.end()) {
    const std::string& v = it->second;
    if (v == "yes" || v == "true" || v == "1") return Direction::Forward;
    if (v == "-1" || v == "reverse") return Direction::Reverse;
    return Direction::Both;
  }
  if (auto it = tags.find("junction"); it != tags.end() && it->second == "roundabout") {
    return Direction::Forward;
  }
  return Direction::Both;
}

// Per-node incidence used by the simplification rules.
struct Incidence {
  std::vector<std::size_t> out;  // edge indices
  std::vector<std::size_t> in;
  std::set<NodeId> neighbors;    // undirected, self excluded
  bool self_loop = false;
};

std::map<NodeId, Incidence> incidence(const StreetGraph& g) {
  std::map<NodeId, Incidence> inc;
  for (const auto& [id, attr] : g.nodes) inc[id];
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    inc[e.u].out.push_back(i);
    inc[e.v].in.push_back(i);
    if (e.u == e.v) {
      inc[e.u].self_loop = true;
    } else {
      inc[e.u].neighbors.insert(e.v);
      inc[e.v].neighbors.insert(e.u);
    }
  }
  return inc;
}

bool interstitial(const StreetGraph& g, const std::unordered_map<EdgeId, std::size_t>& by_id,
                  NodeId node, const Incidence& inc) {
  if (g.nodes.at(node).way_endpoint || inc.self_loop || inc.neighbors.size() != 2) return false;
  if (inc.in.size() == 1 && inc.out.size() == 1) {
    const Edge& in = g.edges[inc.in.front()];
    const Edge& out = g.edges[inc.out.front()];
    return !in.reversed_twin && !out.reversed_twin && in.u != out.v;
  }
  if (inc.in.size() == 2 && inc.out.size() == 2) {
    const Edge& a = g.edges[inc.out[0]];
    const Edge& b = g.edges[inc.out[1]];
    if (a.v == b.v) return false;
    for (std::size_t out_index : inc.out) {
      const Edge& e = g.edges[out_index];
      if (!e.reversed_twin) return false;
      auto twin = by_id.find(*e.reversed_twin);
      if (twin == by_id.end()) return false;
      if (std::find(inc.in.begin(), inc.in.end(), twin->second) == inc.in.end()) return false;
    }
    return true;
  }
  return false;
}

}  // namespace

double StreetGraph::total_length_m() const noexcept {
  double total = 0.0;
  for (const Edge& e : edges) total += e.length_m;
  return total;
}

std::unordered_map<EdgeId, std::size_t> StreetGraph::edge_index() const {
  std::unordered_map<EdgeId, std::size_t> index;
  index.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) index.emplace(edges[i].id, i);
  return index;
}

std::size_t NodeTypeHistogram::total() const noexcept {
  std::size_t sum = 0;
  for (const auto& [streets, count] : counts) sum += count;
  return sum;
}

double NodeTypeHistogram::proportion(int streets) const noexcept {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  auto it = counts.find(streets);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(n);
}

StreetGraph build_graph(const osm::RawOsmData& data) {
  StreetGraph g;
  EdgeId next_id = 0;

  auto add_edge = [&](NodeId u, NodeId v, bool oneway) -> std::size_t {
    const geo::GeoPoint a = data.nodes.at(u).location;
    const geo::GeoPoint b = data.nodes.at(v).location;
    Edge e;
    e.id = next_id++;
    e.u = u;
    e.v = v;
    e.geometry = {a, b};
    e.length_m = geo::haversine_m(a, b);
    e.oneway = oneway;
    e.zero_length = e.length_m == 0.0;
    g.edges.push_back(std::move(e));
    return g.edges.size() - 1;
  };

  for (const osm::OsmWay& way : data.ways) {
    std::vector<NodeId> refs;
    for (NodeId ref : way.node_refs) {
      if (!data.nodes.contains(ref)) continue;
      if (refs.empty() || refs.back() != ref) refs.push_back(ref);
    }
    if (refs.size() < 2) continue;

    for (NodeId ref : refs) g.nodes.try_emplace(ref, NodeAttr{data.nodes.at(ref).location});
    g.nodes[refs.front()].way_endpoint = true;
    g.nodes[refs.back()].way_endpoint = true;

    const Direction dir = way_direction(way.tags);
    for (std::size_t i = 0; i + 1 < refs.size(); ++i) {
      const NodeId a = refs[i];
      const NodeId b = refs[i + 1];
      switch (dir) {
        case Direction::Forward:
          add_edge(a, b, true);
          break;
        case Direction::Reverse:
          add_edge(b, a, true);
          break;
        case Direction::Both: {
          const std::size_t fwd = add_edge(a, b, false);
          const std::size_t rev = add_edge(b, a, false);
          g.edges[fwd].reversed_twin = g.edges[rev].id;
          g.edges[rev].reversed_twin = g.edges[fwd].id;
          break;
        }
      }
    }
  }
  if (g.edges.empty()) throw Error(ErrorCode::EmptyNetwork, "no street edges in the input data");
  return g;
}

bool is_interstitial(const StreetGraph& g, NodeId node) {
  const auto inc = incidence(g);
  return interstitial(g, g.edge_index(), node, inc.at(node));
}

StreetGraph simplify(const StreetGraph& g) {
  const auto by_id = g.edge_index();
  const auto inc = incidence(g);

  std::set<NodeId> endpoints;
  for (const auto& [id, node_inc] : inc) {
    if (!interstitial(g, by_id, id, node_inc)) endpoints.insert(id);
  }

  EdgeId next_id = 0;
  for (const Edge& e : g.edges) next_id = std::max(next_id, e.id + 1);

  StreetGraph out;
  std::vector<bool> visited(g.edges.size(), false);
  // original first edge id of each chain -> index in out.edges, plus the chain's last edge
  std::unordered_map<EdgeId, std::size_t> chain_by_first;
  std::vector<std::size_t> chain_last;

  auto walk_from = [&](NodeId start) {
    for (std::size_t first : inc.at(start).out) {
      if (visited[first]) continue;
      std::vector<std::size_t> chain{first};
      visited[first] = true;
      NodeId prev = start;
      NodeId cur = g.edges[first].v;
      while (!endpoints.contains(cur)) {
        const Incidence& ci = inc.at(cur);
        std::size_t next = ci.out.front();
        if (ci.out.size() == 2 && g.edges[next].v == prev) next = ci.out[1];
        if (visited[next]) break;
        visited[next] = true;
        chain.push_back(next);
        prev = cur;
        cur = g.edges[next].v;
      }

      Edge merged;
      if (chain.size() == 1) {
        merged = g.edges[first];
      } else {
        const Edge& head = g.edges[first];
        merged.id = next_id++;
        merged.u = head.u;
        merged.v = g.edges[chain.back()].v;
        merged.oneway = head.oneway;
        merged.geometry = head.geometry;
        merged.length_m = 0.0;
        for (std::size_t idx : chain) {
          const Edge& part = g.edges[idx];
          merged.length_m += part.length_m;
          if (&part != &head) {
            merged.geometry.insert(merged.geometry.end(), part.geometry.begin() + 1,
                                   part.geometry.end());
          }
        }
      }
      merged.reversed_twin.reset();
      merged.zero_length = merged.length_m == 0.0;
      chain_by_first.emplace(g.edges[first].id, out.edges.size());
      chain_last.push_back(chain.back());
      out.edges.push_back(std::move(merged));
    }
  };

  for (NodeId id : endpoints) walk_from(id);

  // Leftover edges lie on cycles of interstitial nodes; anchor each at its smallest node.
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (visited[i]) continue;
    NodeId anchor = g.edges[i].u;
    NodeId cur = g.edges[i].v;
    NodeId prev = g.edges[i].u;
    while (cur != g.edges[i].u) {
      anchor = std::min(anchor, cur);
      const Incidence& ci = inc.at(cur);
      std::size_t next = ci.out.front();
      if (ci.out.size() == 2 && g.edges[next].v == prev) next = ci.out[1];
      prev = cur;
      cur = g.edges[next].v;
    }
    endpoints.insert(anchor);
    walk_from(anchor);
  }

  for (std::size_t k = 0; k < out.edges.size(); ++k) {
    const Edge& last = g.edges[chain_last[k]];
    if (!last.reversed_twin) continue;
    auto twin_chain = chain_by_first.find(*last.reversed_twin);
    if (twin_chain != chain_by_first.end()) {
      out.edges[k].reversed_twin = out.edges[twin_chain->second].id;
    }
  }

  std::sort(out.edges.begin(), out.edges.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
  for (NodeId id : endpoints) out.nodes.emplace(id, g.nodes.at(id));
  return out;
}

NodeTypeHistogram compute_streets_per_node(StreetGraph& g) {
  std::map<NodeId, int> streets;
  for (const auto& [id, attr] : g.nodes) streets[id] = 0;
  const auto by_id = g.edge_index();
  for (const Edge& e : g.edges) {
    if (e.reversed_twin && *e.reversed_twin < e.id && by_id.contains(*e.reversed_twin)) continue;
    streets[e.u] += 1;
    streets[e.v] += 1;
  }
  for (auto& [id, attr] : g.nodes) attr.streets_per_node = streets[id];
  return node_type_histogram(g);
}

NodeTypeHistogram node_type_histogram(const StreetGraph& g) {
  NodeTypeHistogram h;
  for (const auto& [id, attr] : g.nodes) ++h.counts[attr.streets_per_node];
  return h;
}

StreetGraph truncate(const StreetGraph& g, const geo::PreparedBoundary& boundary) {
  StreetGraph out;
  for (const auto& [id, attr] : g.nodes) {
    if (boundary.contains(attr.location)) out.nodes.emplace(id, attr);
  }
  if (out.nodes.empty()) throw Error(ErrorCode::EmptyNetwork, "no nodes inside the boundary");
  for (const Edge& e : g.edges) {
    if (out.nodes.contains(e.u) && out.nodes.contains(e.v)) out.edges.push_back(e);
  }
  return out;
}

StreetGraph truncate(const StreetGraph& g, const geo::Polygon& boundary) {
  return truncate(g, geo::PreparedBoundary(boundary));
}

StreetGraph to_undirected(const StreetGraph& g) {
  StreetGraph out;
  out.nodes = g.nodes;
  const auto by_id = g.edge_index();
  for (const Edge& e : g.edges) {
    if (e.reversed_twin && *e.reversed_twin < e.id && by_id.contains(*e.reversed_twin)) continue;
    Edge copy = e;
    copy.reversed_twin.reset();
    out.edges.push_back(std::move(copy));
  }
  return out;
}

StreetGraph complete_twins(const StreetGraph& g) {
  StreetGraph out = g;
  const auto by_id = g.edge_index();
  EdgeId next_id = 0;
  for (const Edge& e : g.edges) next_id = std::max(next_id, e.id + 1);
  const std::size_t original = out.edges.size();
  for (std::size_t i = 0; i < original; ++i) {
    if (out.edges[i].reversed_twin && by_id.contains(*out.edges[i].reversed_twin)) continue;
    Edge rev = out.edges[i];
    rev.id = next_id++;
    std::swap(rev.u, rev.v);
    std::reverse(rev.geometry.begin(), rev.geometry.end());
    rev.oneway = false;
    rev.reversed_twin = out.edges[i].id;
    out.edges[i].oneway = false;
    out.edges[i].reversed_twin = rev.id;
    out.edges.push_back(std::move(rev));
  }
  return out;
}

std::size_t CompactGraph::index_of(NodeId id) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) throw Error(ErrorCode::MalformedInput, "unknown node id");
  return static_cast<std::size_t>(it - ids.begin());
}

CompactGraph compact(const StreetGraph& g) {
  CompactGraph c;
  c.ids.reserve(g.nodes.size());
  for (const auto& [id, attr] : g.nodes) c.ids.push_back(id);
  const std::size_t n = c.ids.size();

  std::vector<std::uint32_t> src(g.edges.size());
  std::vector<std::uint32_t> dst(g.edges.size());
  c.out_offsets.assign(n + 1, 0);
  c.in_offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    src[i] = static_cast<std::uint32_t>(c.index_of(g.edges[i].u));
    dst[i] = static_cast<std::uint32_t>(c.index_of(g.edges[i].v));
    ++c.out_offsets[src[i] + 1];
    ++c.in_offsets[dst[i] + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    c.out_offsets[i + 1] += c.out_offsets[i];
    c.in_offsets[i + 1] += c.in_offsets[i];
  }
  c.out_arcs.resize(g.edges.size());
  c.in_arcs.resize(g.edges.size());
  std::vector<std::size_t> out_fill(c.out_offsets.begin(), c.out_offsets.end() - 1);
  std::vector<std::size_t> in_fill(c.in_offsets.begin(), c.in_offsets.end() - 1);
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto edge = static_cast<std::uint32_t>(i);
    c.out_arcs[out_fill[src[i]]++] = {dst[i], edge, g.edges[i].length_m};
    c.in_arcs[in_fill[dst[i]]++] = {src[i], edge, g.edges[i].length_m};
  }
  return c;
}

}  // namespace streetnet::net
