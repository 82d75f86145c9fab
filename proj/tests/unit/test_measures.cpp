#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "graphs.hpp"
#include "oracles.hpp"
#include "streetnet/error.hpp"
#include "streetnet/measures.hpp"

using namespace streetnet;
using namespace streetnet::measures;
using testing::equator_offset;
using testing::GraphBuilder;
using testing::kInf;
using testing::brute_force_betweenness;
using testing::dense_pagerank;

namespace {

std::pair<double, double> brute_force_clustering(const net::StreetGraph& g) {
  const net::CompactGraph c = net::compact(g);
  const std::size_t n = c.size();
  std::vector<std::vector<double>> w(n, std::vector<double>(n, kInf));
  double max_len = 0.0;
  for (const net::Edge& e : g.edges) {
    if (e.is_self_loop()) continue;
    const std::size_t u = c.index_of(e.u), v = c.index_of(e.v);
    w[u][v] = w[v][u] = std::min(w[u][v], e.length_m);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (w[i][j] != kInf) max_len = std::max(max_len, w[i][j]);
    }
  }
  double sum = 0.0, wsum = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t k = 0;
    for (std::size_t a = 0; a < n; ++a) k += w[v][a] != kInf;
    if (k < 2) continue;
    double tri = 0.0, wtri = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (w[v][a] == kInf || w[v][b] == kInf || w[a][b] == kInf) continue;
        tri += 1.0;
        wtri += std::cbrt(w[v][a] / max_len * w[v][b] / max_len * w[a][b] / max_len);
      }
    }
    const double pairs = static_cast<double>(k * (k - 1)) / 2.0;
    sum += tri / pairs;
    wsum += wtri / pairs;
  }
  return {sum / static_cast<double>(n), wsum / static_cast<double>(n)};
}

net::StreetGraph star(int leaves) {
  GraphBuilder b;
  b.node(1, equator_offset(0, 0));
  for (int i = 0; i < leaves; ++i) {
    const double a = 2.0 * std::numbers::pi * i / leaves;
    b.node(i + 2, equator_offset(100 * std::cos(a), 100 * std::sin(a)));
    b.street(1, i + 2);
  }
  return b.g;
}

net::StreetGraph complete(int n) {
  GraphBuilder b;
  for (int i = 0; i < n; ++i) b.node(i + 1, equator_offset(i * 50.0, (i % 2) * 40.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) b.street(i + 1, j + 1, 100.0);
  }
  return b.g;
}

net::StreetGraph with_streets(net::StreetGraph g) {
  net::compute_streets_per_node(g);
  return g;
}

}  // namespace

TEST_CASE("5x5 grid metric measures") {
  const net::StreetGraph g = with_streets(testing::grid(5, 5));
  const MeasureReport r = metric_measures(g, 0.16);
  CHECK(r.n == 25);
  CHECK(r.m == 80);
  CHECK(r.intersection_count == 25);
  CHECK(r.street_segment_count == 40);
  CHECK(r.avg_street_segment_length_m == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(r.total_street_length_km == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(r.total_edge_length_km == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(r.avg_streets_per_node == 3.2);
  CHECK(r.prop_4way == 0.36);
  CHECK(r.prop_3way == 0.48);
  CHECK(r.prop_deadends == 0.0);
  CHECK(r.node_density_per_km2 == doctest::Approx(25 / 0.16));
  CHECK(r.street_density_km_per_km2 == doctest::Approx(4.0 / 0.16));
}

TEST_CASE("single two-way edge densities") {
  GraphBuilder b;
  b.node(1, equator_offset(0, 0));
  b.node(2, equator_offset(120, 0));
  b.street(1, 2, 120.0);
  const MeasureReport r = metric_measures(with_streets(b.g), 1.0);
  CHECK(r.street_density_km_per_km2 == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(r.edge_density_km_per_km2 == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(r.prop_deadends == 1.0);
  CHECK(r.intersection_count == 0);
}

TEST_CASE("metric measure errors") {
  CHECK_THROWS_AS(metric_measures(net::StreetGraph{}, 1.0), Error);
  const net::StreetGraph g = with_streets(testing::grid(2, 2));
  CHECK_THROWS_AS(metric_measures(g, 0.0), Error);
  CHECK_THROWS_AS(metric_measures(testing::grid(2, 2), 1.0), Error);  // street counts unset
}

TEST_CASE("circuity is a ratio of sums") {
  CHECK(avg_circuity(testing::grid(4, 4)) == doctest::Approx(1.0).epsilon(1e-12));

  GraphBuilder b;
  b.node(1, equator_offset(0, 0));
  b.node(2, equator_offset(100, 0));
  b.node(3, equator_offset(100, 300));
  b.node(4, equator_offset(-50, 0));
  b.arc(1, 2, 110.0);
  CHECK(avg_circuity(b.g) == doctest::Approx(1.10).epsilon(1e-9));
  b.arc(2, 3, 300.0);
  b.arc(1, 4, 100.0);
  b.arc(3, 3, 40.0);  // self-loop, ignored
  const double expected = (110.0 + 300.0 + 100.0) / (100.0 + 300.0 + 50.0);
  const double mean_of_ratios = (1.1 + 1.0 + 2.0) / 3.0;
  CHECK(avg_circuity(b.g) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::abs(avg_circuity(b.g) - mean_of_ratios) > 0.1);

  GraphBuilder loops;
  loops.node(1, equator_offset(0, 0));
  loops.arc(1, 1, 50.0);
  CHECK_THROWS_AS(avg_circuity(loops.g), Error);
}

TEST_CASE("circuity is invariant under relabeling and small translation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> extra(0.0, 30.0);
  GraphBuilder b;
  for (int i = 0; i < 6; ++i) b.node(i + 1, equator_offset(i * 73.0, (i * i) % 5 * 41.0));
  for (int i = 1; i < 6; ++i) b.arc(i, i + 1, -1.0);
  for (auto& e : b.g.edges) e.length_m += extra(rng);
  const double base = avg_circuity(b.g);

  net::StreetGraph relabeled;
  for (const auto& [id, attr] : b.g.nodes) relabeled.nodes[100 - id] = attr;
  for (net::Edge e : b.g.edges) {
    e.u = 100 - e.u;
    e.v = 100 - e.v;
    relabeled.edges.push_back(e);
  }
  CHECK(avg_circuity(relabeled) == doctest::Approx(base).epsilon(1e-12));

  net::StreetGraph moved = b.g;
  for (auto& [id, attr] : moved.nodes) {
    attr.location.lat += 0.001;
    attr.location.lon += 0.002;
  }
  CHECK(std::abs(avg_circuity(moved) - base) < 1e-6);
}

TEST_CASE("degree measures") {
  GraphBuilder cyc;
  for (int i = 1; i <= 3; ++i) cyc.node(i, equator_offset(i * 100.0, (i == 2) * 80.0));
  cyc.arc(1, 2);
  cyc.arc(2, 3);
  cyc.arc(3, 1);
  const DegreeMeasures d3 = degree_measures(cyc.g);
  CHECK(d3.avg_node_degree == 2.0);
  CHECK(*d3.avg_degree_centrality == 1.0);

  CHECK(degree_measures(testing::grid(5, 5)).avg_node_degree == doctest::Approx(6.4).epsilon(1e-12));
  CHECK(degree_measures(star(4)).avg_neighborhood_degree == doctest::Approx(6.8).epsilon(1e-12));

  GraphBuilder loop;
  loop.node(1, equator_offset(0, 0));
  loop.arc(1, 1, 10.0);
  const DegreeMeasures dl = degree_measures(loop.g);
  CHECK(dl.avg_node_degree == 2.0);
  CHECK_FALSE(dl.avg_degree_centrality.has_value());
}

TEST_CASE("weighted neighborhood degree uses inverse lengths") {
  // Path a - b - c with lengths 100 and 300: b sees a (deg 2) and c (deg 2); a and c see b (deg 4).
  GraphBuilder b;
  b.node(1, equator_offset(0, 0));
  b.node(2, equator_offset(100, 0));
  b.node(3, equator_offset(400, 0));
  b.node(4, equator_offset(100, 100));
  b.street(1, 2, 100.0);
  b.street(2, 3, 300.0);
  b.street(2, 4, 50.0);
  b.street(1, 2, 200.0);  // parallel street, the shorter one sets the weight
  const DegreeMeasures d = degree_measures(b.g);
  // degrees: 1 -> 4, 2 -> 8, 3 -> 2, 4 -> 2
  const double w12 = 1.0 / 100, w23 = 1.0 / 300, w24 = 1.0 / 50;
  const double node2 = (w12 * 4 + w23 * 2 + w24 * 2) / (w12 + w23 + w24);
  CHECK(d.avg_weighted_neighborhood_degree == doctest::Approx((8 + node2 + 8 + 8) / 4.0).epsilon(1e-12));
  CHECK(d.avg_neighborhood_degree == doctest::Approx((8 + (4 + 2 + 2) / 3.0 + 8 + 8) / 4.0).epsilon(1e-12));
}

TEST_CASE("clustering") {
  const ClusteringResult tri = clustering(complete(3));
  CHECK(tri.avg_clustering == 1.0);
  CHECK(tri.avg_weighted_clustering == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(clustering(star(4)).avg_clustering == 0.0);
  CHECK(clustering(net::StreetGraph{}).avg_clustering == 0.0);

  // 4-cycle with one chord: two triangles sharing the chord.
  GraphBuilder b;
  for (int i = 1; i <= 4; ++i) b.node(i, equator_offset((i == 2 || i == 3) * 100.0, (i >= 3) * 100.0));
  b.street(1, 2, 100.0);
  b.street(2, 3, 100.0);
  b.street(3, 4, 100.0);
  b.street(4, 1, 100.0);
  b.street(1, 3, 141.0);
  const auto [cc, wcc] = brute_force_clustering(b.g);
  const ClusteringResult r = clustering(b.g);
  CHECK(r.avg_clustering == doctest::Approx(cc).epsilon(1e-12));
  CHECK(r.avg_clustering == doctest::Approx((1.0 + 2.0 / 3 + 1.0 + 2.0 / 3) / 4).epsilon(1e-12));
  CHECK(r.avg_weighted_clustering == doctest::Approx(wcc).epsilon(1e-12));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const net::StreetGraph g = testing::random_digraph(rng, 12, 0.3, 9);
    const auto [bc, bw] = brute_force_clustering(g);
    const ClusteringResult res = clustering(g);
    CHECK(res.avg_clustering == doctest::Approx(bc).epsilon(1e-12));
    CHECK(res.avg_weighted_clustering == doctest::Approx(bw).epsilon(1e-12));
  }
}

TEST_CASE("pagerank examples") {
  GraphBuilder cyc;
  for (int i = 1; i <= 3; ++i) cyc.node(i, equator_offset(i * 100.0, 0));
  cyc.street(1, 2);
  cyc.street(2, 3);
  cyc.street(3, 1);
  const PageRankResult pr = pagerank(cyc.g);
  for (double v : pr.values) CHECK(std::abs(v - 1.0 / 3.0) < 1e-9);

  GraphBuilder ab;
  ab.node(1, equator_offset(0, 0));
  ab.node(2, equator_offset(100, 0));
  ab.arc(1, 2);
  const PageRankResult r2 = pagerank(ab.g);
  CHECK(r2.values[1] > r2.values[0]);
  CHECK(r2.max_pr >= r2.min_pr);
  CHECK(r2.min_pr > 0.0);

  PageRankOptions tight;
  tight.max_iterations = 2;
  tight.tolerance = 1e-15;
  CHECK_THROWS_AS(pagerank(testing::grid(4, 4), tight), Error);
}

TEST_CASE("pagerank matches a dense linear solve and sums to one") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(2, 50);
  std::uniform_real_distribution<double> density(0.02, 0.3);
  for (int trial = 0; trial < 100; ++trial) {
    const net::StreetGraph g = testing::random_digraph(rng, size(rng), density(rng));
    const PageRankResult pr = pagerank(g);
    CHECK(std::abs(std::accumulate(pr.values.begin(), pr.values.end(), 0.0) - 1.0) <= 1e-9);
    const std::vector<double> oracle = dense_pagerank(g, 0.85);
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(std::abs(pr.values[i] - oracle[i]) <= 1e-7);
  }
}

TEST_CASE("betweenness examples") {
  GraphBuilder path;
  path.node(1, equator_offset(0, 0));
  path.node(2, equator_offset(100, 0));
  path.node(3, equator_offset(200, 0));
  path.street(1, 2);
  path.street(2, 3);
  const BetweennessResult r = betweenness(path.g);
  CHECK(r.values[1] == 1.0);
  CHECK(r.mbc == 1.0);
  CHECK(r.reachable_pair_fraction == 1.0);

  const BetweennessResult k4 = betweenness(complete(4));
  CHECK(k4.mbc == 0.0);

  GraphBuilder split;
  for (int i = 1; i <= 4; ++i) split.node(i, equator_offset(i * 100.0, 0));
  split.street(1, 2);
  split.street(3, 4);
  const BetweennessResult s = betweenness(split.g);
  CHECK(s.reachable_pair_fraction == doctest::Approx(4.0 / 12.0));
  CHECK(s.mbc == 0.0);

  GraphBuilder two;
  two.node(1);
  two.node(2);
  two.arc(1, 2, 1.0);
  CHECK_THROWS_AS(betweenness(two.g), Error);
}

TEST_CASE("betweenness agrees with shortest-path counting on random digraphs") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(3, 40);
  std::uniform_real_distribution<double> density(0.03, 0.25);
  for (int trial = 0; trial < 60; ++trial) {
    const net::StreetGraph g = testing::random_digraph(rng, size(rng), density(rng));
    for (BetweennessWeight w : {BetweennessWeight::Length, BetweennessWeight::Hops}) {
      const auto oracle = brute_force_betweenness(g, w == BetweennessWeight::Hops);
      const BetweennessResult r = betweenness(g, {w, 1});
      REQUIRE(r.values.size() == oracle.size());
      for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(std::abs(r.values[i] - oracle[i]) <= 1e-12);
    }
  }
}

TEST_CASE("threaded betweenness is deterministic") {
  std::mt19937_64 rng(23);
  const net::StreetGraph g = testing::random_digraph(rng, 60, 0.08);
  const BetweennessResult one = betweenness(g, {BetweennessWeight::Length, 1});
  const BetweennessResult four = betweenness(g, {BetweennessWeight::Length, 4});
  const BetweennessResult again = betweenness(g, {BetweennessWeight::Length, 4});
  CHECK(four.values == again.values);
  for (std::size_t i = 0; i < one.values.size(); ++i) CHECK(std::abs(one.values[i] - four.values[i]) <= 1e-12);
}

TEST_CASE("full report on the grid") {
  const net::StreetGraph g = with_streets(testing::grid(5, 5));
  const MeasureReport r = compute_measures(g, 0.16);
  CHECK(std::abs(*r.avg_circuity - 1.0) <= 1e-9);
  CHECK(r.avg_node_degree == doctest::Approx(6.4));
  CHECK(*r.max_pagerank >= *r.min_pagerank);
  CHECK(*r.min_pagerank > 0.0);
  CHECK(r.max_betweenness_centrality.has_value());
  CHECK_FALSE(r.avg_node_connectivity.has_value());
  CHECK(r.prop_deadends + r.prop_3way + r.prop_4way <= 1.0);
  CHECK(r.total_street_length_km <= r.total_edge_length_km);
  CHECK(r.total_edge_length_km <= 2.0 * r.total_street_length_km + 1e-12);
  CHECK(r.total_edge_length_km == doctest::Approx(2.0 * r.total_street_length_km).epsilon(1e-12));

  MeasureOptions no_bc;
  no_bc.compute_betweenness = false;
  CHECK_FALSE(compute_measures(g, 0.16, no_bc).max_betweenness_centrality.has_value());
}

TEST_CASE("report serialization") {
  const MeasureReport r = compute_measures(with_streets(testing::grid(3, 4)), 0.06);
  const std::string json = r.to_json();
  const MeasureReport back = MeasureReport::from_json(json);
  CHECK(back.to_json() == json);
  CHECK(json.find("\"avg_node_connectivity\": null") != std::string::npos);
  CHECK(json.find("\"n\": 12,") != std::string::npos);

  const auto names = MeasureReport::field_names();
  CHECK(names.front() == "n");
  CHECK(names.back() == "avg_node_connectivity");
  CHECK(names.size() == 29);
  const std::string header = MeasureReport::csv_header();
  const std::string row = r.csv_row();
  CHECK(std::count(header.begin(), header.end(), ',') == 28);
  CHECK(std::count(row.begin(), row.end(), ',') == 28);
  CHECK(row.back() == ',');  // ANC undefined -> empty cell

  MeasureReport copy;
  for (const auto& f : r.fields()) CHECK(copy.set_field(f.name, f.value));
  CHECK(copy.to_json() == json);
  CHECK_FALSE(copy.set_field("no_such_field", 1.0));
}

TEST_CASE("number formatting is shortest round trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(100.0) == "100");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(0.0) == "0");
  CHECK(std::stod(format_number(2.0 / 7.0)) == 2.0 / 7.0);
}
