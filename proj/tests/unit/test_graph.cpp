#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "graphs.hpp"
#include "oracles.hpp"
#include "streetnet/error.hpp"
#include "streetnet/graph.hpp"

using namespace streetnet;
using namespace streetnet::net;
using testing::equator_offset;
using testing::onode;
using testing::data;
using testing::oway;
using testing::random_fixture;

namespace {

bool has_edge(const StreetGraph& g, NodeId u, NodeId v) {
  return std::any_of(g.edges.begin(), g.edges.end(), [&](const Edge& e) { return e.u == u && e.v == v; });
}

}  // namespace

TEST_CASE("two-way way a-b-c yields twin pairs") {
  const StreetGraph g = build_graph(data({onode(1, 0), onode(2, 50), onode(3, 120)}, {oway(7, {1, 2, 3})}));
  CHECK(g.edge_count() == 4);
  CHECK(has_edge(g, 1, 2));
  CHECK(has_edge(g, 2, 1));
  CHECK(has_edge(g, 2, 3));
  CHECK(has_edge(g, 3, 2));
  const auto idx = g.edge_index();
  for (const Edge& e : g.edges) {
    REQUIRE(e.reversed_twin);
    const Edge& t = g.edges[idx.at(*e.reversed_twin)];
    CHECK(t.u == e.v);
    CHECK(t.v == e.u);
    CHECK(t.reversed_twin == e.id);
    CHECK_FALSE(e.oneway);
  }
  CHECK(g.nodes.at(1).way_endpoint);
  CHECK_FALSE(g.nodes.at(2).way_endpoint);
  CHECK(g.total_length_m() == doctest::Approx(240.0).epsilon(1e-9));
}

TEST_CASE("oneway tags") {
  const auto nodes = std::vector{onode(1, 0), onode(2, 50), onode(3, 120)};
  const StreetGraph fwd = build_graph(data(nodes, {oway(7, {1, 2, 3}, {{"oneway", "yes"}})}));
  CHECK(fwd.edge_count() == 2);
  CHECK(has_edge(fwd, 1, 2));
  CHECK(has_edge(fwd, 2, 3));
  CHECK(std::all_of(fwd.edges.begin(), fwd.edges.end(), [](const Edge& e) { return e.oneway && !e.reversed_twin; }));

  const StreetGraph rev = build_graph(data(nodes, {oway(7, {1, 2, 3}, {{"oneway", "-1"}})}));
  CHECK(rev.edge_count() == 2);
  CHECK(has_edge(rev, 3, 2));
  CHECK(has_edge(rev, 2, 1));

  const StreetGraph ring = build_graph(data(nodes, {oway(7, {1, 2, 3, 1}, {{"junction", "roundabout"}})}));
  CHECK(ring.edge_count() == 3);
  const StreetGraph two = build_graph(data(nodes, {oway(7, {1, 2, 3, 1}, {{"junction", "roundabout"}, {"oneway", "no"}})}));
  CHECK(two.edge_count() == 6);
}

TEST_CASE("empty input is an error") {
  CHECK_THROWS_AS(build_graph(data({onode(1, 0)}, {})), Error);
}

TEST_CASE("closed two-way loop collapses to self-loops at its endpoint") {
  const StreetGraph g =
      build_graph(data({onode(1, 0), onode(2, 100), onode(3, 50, 80)}, {oway(7, {1, 2, 3, 1})}));
  CHECK(g.edge_count() == 6);
  CHECK(std::none_of(g.edges.begin(), g.edges.end(), [](const Edge& e) { return e.is_self_loop(); }));

  const StreetGraph s = simplify(g);
  CHECK(s.node_count() == 1);
  REQUIRE(s.edge_count() == 2);
  for (const Edge& e : s.edges) {
    CHECK(e.is_self_loop());
    CHECK(e.u == 1);
    CHECK(e.reversed_twin);
    CHECK(e.geometry.size() == 4);
  }
  CHECK(s.total_length_m() == doctest::Approx(g.total_length_m()).epsilon(1e-12));
}

TEST_CASE("interstitial node on a two-way path is removed") {
  const StreetGraph g = build_graph(data({onode(1, 0), onode(2, 50), onode(3, 120)}, {oway(7, {1, 2, 3})}));
  CHECK(is_interstitial(g, 2));
  CHECK_FALSE(is_interstitial(g, 1));
  const StreetGraph s = simplify(g);
  CHECK(s.node_count() == 2);
  CHECK_FALSE(s.nodes.contains(2));
  REQUIRE(s.edge_count() == 2);
  for (const Edge& e : s.edges) {
    CHECK(e.length_m == doctest::Approx(120.0).epsilon(1e-9));
    CHECK(e.geometry.size() == 3);
    CHECK(e.reversed_twin);
  }
  CHECK(has_edge(s, 1, 3));
  CHECK(has_edge(s, 3, 1));
}

TEST_CASE("a 4-way crossing survives simplification") {
  const StreetGraph g = build_graph(data({onode(1, -50), onode(2, 0), onode(3, 50), onode(4, 0, 50), onode(5, 0, -50)},
                                         {oway(7, {1, 2, 3}), oway(8, {4, 2, 5})}));
  CHECK_FALSE(is_interstitial(g, 2));
  CHECK(simplify(g).nodes.contains(2));
}

TEST_CASE("one-way triangle") {
  SUBCASE("as one closed way: self-loop at the way endpoint") {
    const StreetGraph g = build_graph(
        data({onode(5, 0), onode(2, 100), onode(9, 50, 80)}, {oway(7, {2, 9, 5, 2}, {{"oneway", "yes"}})}));
    const StreetGraph s = simplify(g);
    CHECK(s.node_count() == 1);
    REQUIRE(s.edge_count() == 1);
    CHECK(s.edges[0].u == 2);
    CHECK(s.edges[0].is_self_loop());
    CHECK(s.edges[0].oneway);
  }
  SUBCASE("without way endpoints: self-loop at the smallest id") {
    testing::GraphBuilder b;
    b.node(5, equator_offset(0, 0));
    b.node(2, equator_offset(100, 0));
    b.node(9, equator_offset(50, 80));
    b.arc(5, 2);
    b.arc(2, 9);
    b.arc(9, 5);
    const StreetGraph s = simplify(b.g);
    REQUIRE(s.edge_count() == 1);
    CHECK(s.edges[0].u == 2);
    CHECK(s.total_length_m() == doctest::Approx(b.g.total_length_m()).epsilon(1e-12));
  }
  SUBCASE("three separate ways: every node is a way endpoint") {
    const StreetGraph g = build_graph(data({onode(5, 0), onode(2, 100), onode(9, 50, 80)},
                                           {oway(1, {5, 2}, {{"oneway", "yes"}}), oway(2, {2, 9}, {{"oneway", "yes"}}),
                                            oway(3, {9, 5}, {{"oneway", "yes"}})}));
    CHECK(simplify(g) == g);
  }
}

TEST_CASE("a street changing from one-way to two-way keeps the transition node") {
  const StreetGraph g = build_graph(data({onode(1, 0), onode(2, 50), onode(3, 100), onode(4, 150)},
                                         {oway(7, {1, 2}, {{"oneway", "yes"}}), oway(8, {2, 3, 4})}));
  const StreetGraph s = simplify(g);
  CHECK(s.nodes.contains(2));
  CHECK_FALSE(s.nodes.contains(3));
}

TEST_CASE("streets per node") {
  StreetGraph g = testing::grid(3, 3);
  const NodeTypeHistogram h = compute_streets_per_node(g);
  CHECK(g.nodes.at(5).streets_per_node == 4);  // interior
  CHECK(g.nodes.at(1).streets_per_node == 2);  // corner
  CHECK(g.nodes.at(2).streets_per_node == 3);
  CHECK(h.counts.at(4) == 1);
  CHECK(h.counts.at(3) == 4);
  CHECK(h.counts.at(2) == 4);
  CHECK(h.total() == 9);
  CHECK(h == node_type_histogram(g));

  testing::GraphBuilder b;
  b.node(1, equator_offset(0, 0));
  b.node(2, equator_offset(100, 0));
  b.node(3, equator_offset(200, 0));
  b.node(4, equator_offset(100, 60));
  b.street(1, 2);
  b.street(2, 3);
  b.street(2, 4);
  b.arc(3, 3, 80.0);  // one-way loop
  b.street(1, 1, 90.0);  // two-way loop
  compute_streets_per_node(b.g);
  CHECK(b.g.nodes.at(4).streets_per_node == 1);  // cul-de-sac head
  CHECK(b.g.nodes.at(3).streets_per_node == 3);  // through street end plus a loop
  CHECK(b.g.nodes.at(1).streets_per_node == 3);
  CHECK(b.g.nodes.at(2).streets_per_node == 3);
}

TEST_CASE("through street plus self-loop counts four") {
  testing::GraphBuilder b;
  b.node(1, equator_offset(0, 0));
  b.node(2, equator_offset(100, 0));
  b.node(3, equator_offset(200, 0));
  b.street(1, 2);
  b.street(2, 3);
  b.street(2, 2, 150.0);
  compute_streets_per_node(b.g);
  CHECK(b.g.nodes.at(2).streets_per_node == 4);
}

TEST_CASE("truncation keeps pre-truncation street counts") {
  StreetGraph g = testing::grid(3, 3);
  compute_streets_per_node(g);
  const geo::Polygon everything =
      geo::make_polygon({equator_offset(-10, -10), equator_offset(300, -10), equator_offset(300, 300), equator_offset(-10, 300)});
  CHECK(truncate(g, everything) == g);

  // Drop the top row (ids 7, 8, 9).
  const geo::Polygon lower =
      geo::make_polygon({equator_offset(-10, -10), equator_offset(300, -10), equator_offset(300, 150), equator_offset(-10, 150)});
  const StreetGraph t = truncate(g, lower);
  CHECK(t.node_count() == 6);
  CHECK(t.edge_count() == 2 * 7);
  CHECK(t.nodes.at(4).streets_per_node == 3);
  CHECK(t.nodes.at(5).streets_per_node == 4);

  const geo::Polygon far = geo::make_polygon({{10, 10}, {10, 10.01}, {10.01, 10.01}, {10.01, 10}});
  CHECK_THROWS_AS(truncate(g, far), Error);

  const geo::PreparedBoundary prepared(lower);
  std::set<NodeId> expected;
  for (const auto& [id, attr] : g.nodes) {
    if (geo::contains(lower, attr.location)) expected.insert(id);
  }
  std::set<NodeId> kept;
  for (const auto& [id, attr] : truncate(g, prepared).nodes) kept.insert(id);
  CHECK(kept == expected);
}

TEST_CASE("undirected view") {
  const StreetGraph g = build_graph(data({onode(1, 0), onode(2, 50), onode(3, 120)}, {oway(7, {1, 2, 3})}));
  const StreetGraph u = to_undirected(g);
  CHECK(u.edge_count() == 2);
  CHECK(u.total_length_m() == doctest::Approx(g.total_length_m() / 2));

  const StreetGraph ow =
      build_graph(data({onode(1, 0), onode(2, 50), onode(3, 120)}, {oway(7, {1, 2, 3}, {{"oneway", "yes"}})}));
  CHECK(to_undirected(ow).edge_count() == ow.edge_count());

  const StreetGraph mixed = build_graph(data({onode(1, 0), onode(2, 50), onode(3, 120), onode(4, 200)},
                                             {oway(7, {1, 2, 3}), oway(8, {3, 4}, {{"oneway", "yes"}}),
                                              oway(9, {4, 1}, {{"oneway", "yes"}})}));
  CHECK(to_undirected(mixed).edge_count() == 2 + 2);

  const StreetGraph full = complete_twins(mixed);
  CHECK(full.edge_count() == 8);
  CHECK(std::all_of(full.edges.begin(), full.edges.end(), [](const Edge& e) { return e.reversed_twin && !e.oneway; }));
  CHECK(to_undirected(full).edge_count() == 4);
}

TEST_CASE("compact adjacency") {
  const StreetGraph g = build_graph(data({onode(30, 0), onode(10, 50), onode(20, 120)},
                                         {oway(7, {30, 10, 20}, {{"oneway", "yes"}})}));
  const CompactGraph c = compact(g);
  REQUIRE(c.size() == 3);
  CHECK(c.ids == std::vector<NodeId>{10, 20, 30});
  CHECK(c.index_of(30) == 2);
  CHECK(c.out(2).size() == 1);
  CHECK(c.out(2).begin()->node == 0);
  CHECK(c.in(1).size() == 1);
  CHECK(c.in(1).begin()->node == 0);
  CHECK(c.out(1).size() == 0);
}

TEST_CASE("simplification properties on random fixtures") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const osm::RawOsmData raw = random_fixture(rng);
    StreetGraph g;
    try {
      g = build_graph(raw);
    } catch (const Error&) {
      continue;
    }
    ++checked;
    const StreetGraph s = simplify(g);
    CHECK(std::abs(s.total_length_m() - g.total_length_m()) <= 1e-6 * g.total_length_m());
    CHECK(simplify(s) == s);
    for (const auto& [id, attr] : s.nodes) CHECK_FALSE(is_interstitial(s, id));

    // Every non-interstitial node of the input survives.
    for (const auto& [id, attr] : g.nodes) {
      if (!is_interstitial(g, id)) CHECK(s.nodes.contains(id));
    }

    // Twins stay consistent.
    const auto idx = s.edge_index();
    for (const Edge& e : s.edges) {
      CHECK(e.length_m >= 0.0);
      CHECK(e.geometry.front() == s.nodes.at(e.u).location);
      CHECK(e.geometry.back() == s.nodes.at(e.v).location);
      if (e.reversed_twin) {
        const Edge& t = s.edges[idx.at(*e.reversed_twin)];
        CHECK(t.reversed_twin == e.id);
        CHECK(t.u == e.v);
        CHECK(t.length_m == doctest::Approx(e.length_m).epsilon(1e-12));
      }
    }

    // Street-count handshake: degree sum equals twice the undirected edge count.
    StreetGraph counted = s;
    const NodeTypeHistogram h = compute_streets_per_node(counted);
    std::size_t sum = 0;
    for (const auto& [streets, count] : h.counts) sum += static_cast<std::size_t>(streets) * count;
    CHECK(sum == 2 * to_undirected(counted).edge_count());
  }
  CHECK(checked >= 95);
}
