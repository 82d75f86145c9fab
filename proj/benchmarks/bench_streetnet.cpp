#include <benchmark/benchmark.h>

#include <random>

#include "graphs.hpp"
#include "streetnet/graph.hpp"
#include "streetnet/measures.hpp"
#include "streetnet/resilience.hpp"

using namespace streetnet;

namespace {

// side x side jittered lattice; every third street is one-way, the rest two-way.
net::StreetGraph lattice(int side) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> jitter(-8.0, 8.0);
  testing::GraphBuilder b;
  auto id = [side](int i, int j) { return static_cast<net::NodeId>(i * side + j + 1); };
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) b.node(id(i, j), testing::equator_offset(j * 90.0 + jitter(rng), i * 90.0 + jitter(rng)));
  }
  int k = 0;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      for (auto [ni, nj] : {std::pair{i, j + 1}, std::pair{i + 1, j}}) {
        if (ni >= side || nj >= side) continue;
        if (++k % 3 == 0) b.arc(id(i, j), id(ni, nj));
        else b.street(id(i, j), id(ni, nj));
      }
    }
  }
  return b.g;
}

// Lattice with every street split into `pieces` chained edges, for simplification.
net::StreetGraph subdivided(int side, int pieces) {
  const net::StreetGraph base = lattice(side);
  testing::GraphBuilder b;
  for (const auto& [id, attr] : base.nodes) {
    b.node(id, attr.location);
    b.g.nodes[id].way_endpoint = true;
  }
  net::NodeId next = 1'000'000;
  for (const net::Edge& e : base.edges) {
    if (e.reversed_twin && *e.reversed_twin < e.id) continue;
    const geo::GeoPoint a = base.nodes.at(e.u).location, z = base.nodes.at(e.v).location;
    net::NodeId prev = e.u;
    for (int p = 1; p <= pieces; ++p) {
      net::NodeId cur = e.v;
      if (p < pieces) {
        const double t = static_cast<double>(p) / pieces;
        cur = next++;
        b.node(cur, {a.lat + t * (z.lat - a.lat), a.lon + t * (z.lon - a.lon)});
      }
      if (e.reversed_twin) b.street(prev, cur);
      else b.arc(prev, cur);
      prev = cur;
    }
  }
  return b.g;
}

void BM_Betweenness(benchmark::State& state) {
  const net::StreetGraph g = lattice(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(measures::betweenness(g).mbc);
  state.counters["nodes"] = static_cast<double>(g.node_count());
}
BENCHMARK(BM_Betweenness)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_PageRank(benchmark::State& state) {
  const net::StreetGraph g = lattice(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(measures::pagerank(g).max_pr);
  state.counters["nodes"] = static_cast<double>(g.node_count());
}
BENCHMARK(BM_PageRank)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_SampledAnc(benchmark::State& state) {
  const net::StreetGraph g = lattice(static_cast<int>(state.range(0)));
  resilience::AncOptions o;
  o.mode = resilience::AncMode::Sampled;
  o.sample_limit = 1000;
  o.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(resilience::average_node_connectivity(g, o).value);
  state.counters["nodes"] = static_cast<double>(g.node_count());
}
BENCHMARK(BM_SampledAnc)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Simplify(benchmark::State& state) {
  const net::StreetGraph g = subdivided(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(net::simplify(g).edge_count());
  state.counters["edges"] = static_cast<double>(g.edge_count());
}
BENCHMARK(BM_Simplify)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
