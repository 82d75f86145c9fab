// Graph builders shared by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "streetnet/geo.hpp"
#include "streetnet/graph.hpp"

namespace testing {

using streetnet::geo::GeoPoint;
using streetnet::net::EdgeId;
using streetnet::net::NodeId;
using streetnet::net::StreetGraph;

// Point reached by moving east/north from the equator origin. Pure east or pure north
// offsets are exact great-circle distances on the equator and the prime meridian.
inline GeoPoint equator_offset(double east_m, double north_m) {
  constexpr double r = streetnet::geo::kEarthRadiusM;
  return {north_m / r * 180.0 / std::numbers::pi, east_m / r * 180.0 / std::numbers::pi};
}

class GraphBuilder {
 public:
  StreetGraph g;

  NodeId node(NodeId id, GeoPoint at = {}) {
    g.nodes[id].location = at;
    return id;
  }

  // Adds u->v with straight geometry; `length` < 0 means the great-circle distance.
  EdgeId arc(NodeId u, NodeId v, double length = -1.0) {
    streetnet::net::Edge e;
    e.id = next_id_++;
    e.u = u;
    e.v = v;
    e.geometry = {g.nodes.at(u).location, g.nodes.at(v).location};
    e.length_m = length >= 0.0 ? length : streetnet::geo::haversine_m(e.geometry[0], e.geometry[1]);
    e.oneway = true;
    g.edges.push_back(e);
    return e.id;
  }

  // Adds a two-way street as a twin pair.
  std::pair<EdgeId, EdgeId> street(NodeId u, NodeId v, double length = -1.0) {
    const EdgeId a = arc(u, v, length);
    const EdgeId b = arc(v, u, length);
    g.edges[g.edges.size() - 2].reversed_twin = b;
    g.edges[g.edges.size() - 2].oneway = false;
    g.edges.back().reversed_twin = a;
    g.edges.back().oneway = false;
    return {a, b};
  }

 private:
  EdgeId next_id_ = 1;
};

// rows x cols two-way grid at the equator with exact `spacing` metre blocks.
inline StreetGraph grid(int rows, int cols, double spacing = 100.0) {
  GraphBuilder b;
  auto id = [cols](int i, int j) { return static_cast<NodeId>(i * cols + j + 1); };
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) b.node(id(i, j), equator_offset(j * spacing, i * spacing));
  }
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (j + 1 < cols) b.street(id(i, j), id(i, j + 1));
      if (i + 1 < rows) b.street(id(i, j), id(i + 1, j));
    }
  }
  return b.g;
}

// Random weighted digraph with parallel edges and the occasional self-loop. Lengths are
// small integers so equal-length shortest paths are common.
inline StreetGraph random_digraph(std::mt19937_64& rng, int n, double edge_prob, int max_len = 5) {
  GraphBuilder b;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, max_len);
  for (int i = 0; i < n; ++i) b.node(i + 1, equator_offset(i * 10.0, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        if (coin(rng) < 0.02) b.arc(i + 1, j + 1, len(rng));
        continue;
      }
      if (coin(rng) < edge_prob) {
        b.arc(i + 1, j + 1, len(rng));
        if (coin(rng) < 0.1) b.arc(i + 1, j + 1, len(rng));
      }
    }
  }
  return b.g;
}

}  // namespace testing
