#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streetnet/format.hpp"
#include "streetnet/graph.hpp"

namespace streetnet::measures {

/// One row of per-network measures. Optional fields are undefined for some graphs
/// (no qualifying edge for circuity, too few nodes for centralities, ANC not requested).
struct MeasureReport {
  std::size_t n = 0;
  std::size_t m = 0;
  double area_km2 = 0.0;
  std::size_t intersection_count = 0;
  double node_density_per_km2 = 0.0;
  double intersection_density_per_km2 = 0.0;
  double edge_density_km_per_km2 = 0.0;
  double street_density_km_per_km2 = 0.0;
  double total_edge_length_km = 0.0;
  double total_street_length_km = 0.0;
  std::size_t street_segment_count = 0;
  double avg_edge_length_m = 0.0;
  double avg_street_segment_length_m = 0.0;
  std::optional<double> avg_circuity;
  double avg_node_degree = 0.0;
  double avg_streets_per_node = 0.0;
  double prop_deadends = 0.0;
  double prop_3way = 0.0;
  double prop_4way = 0.0;
  double self_loop_proportion = 0.0;
  double avg_clustering_coefficient = 0.0;
  double avg_weighted_clustering_coefficient = 0.0;
  double avg_neighborhood_degree = 0.0;
  double avg_weighted_neighborhood_degree = 0.0;
  std::optional<double> avg_degree_centrality;
  std::optional<double> max_pagerank;
  std::optional<double> min_pagerank;
  std::optional<double> max_betweenness_centrality;
  std::optional<double> avg_node_connectivity;

  struct Field {
    std::string_view name;
    std::optional<double> value;
    bool integral = false;
  };

  /// Every field in canonical order; names are the serialized snake_case keys.
  std::vector<Field> fields() const;
  static std::vector<std::string_view> field_names();

  /// Sets a field by name (used when reading measures.csv back). Returns false for unknown names.
  bool set_field(std::string_view name, std::optional<double> value);

  /// Flat JSON object with one key per field; undefined fields are null.
  std::string to_json() const;
  static MeasureReport from_json(std::string_view text);
  static std::string csv_header();
  std::string csv_row() const;
};

/// Counts, lengths, densities and the streets-per-node proportions. Street figures use the
/// undirected view; intersections are nodes with at least two streets. Requires stored
/// streets_per_node values. Throws EmptyNetwork for a graph without nodes and
/// DegenerateInput for a non-positive area.
MeasureReport metric_measures(const net::StreetGraph& g, double area_km2);

/// Sum of edge lengths over sum of endpoint great-circle distances, skipping self-loops and
/// edges whose endpoints coincide. Throws NoQualifyingEdges.
double avg_circuity(const net::StreetGraph& g);

struct DegreeMeasures {
  double avg_node_degree = 0.0;
  std::optional<double> avg_degree_centrality;  // needs n >= 2
  double avg_neighborhood_degree = 0.0;
  double avg_weighted_neighborhood_degree = 0.0;
};

/// Degree is in-degree plus out-degree (a self-loop adds 2). Neighborhood degree averages the
/// degrees of each node's distinct undirected neighbors; the weighted variant weights each
/// neighbor by 1 / length of the shortest connecting edge.
DegreeMeasures degree_measures(const net::StreetGraph& g);

struct ClusteringResult {
  double avg_clustering = 0.0;
  double avg_weighted_clustering = 0.0;
  std::vector<double> per_node;
  std::vector<double> per_node_weighted;
};

/// Clustering on the undirected simple projection (parallel edges merged with their minimum
/// length, self-loops dropped). The weighted coefficient is the geometric mean of the three
/// triangle edge lengths, each divided by the longest edge in the graph.
ClusteringResult clustering(const net::StreetGraph& g);

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-9;
  int max_iterations = 1000;
};

struct PageRankResult {
  double max_pr = 0.0;
  double min_pr = 0.0;
  std::vector<double> values;  // indexed like CompactGraph (ascending node id)
  int iterations = 0;
  double residual = 0.0;
};

/// Power iteration. Parallel edges add out-weight; dangling nodes spread rank uniformly.
/// Converged when the L1 change drops below tolerance; throws NonConvergence otherwise.
PageRankResult pagerank(const net::StreetGraph& g, const PageRankOptions& options = {});

enum class BetweennessWeight { Length, Hops };

struct BetweennessOptions {
  BetweennessWeight weight = BetweennessWeight::Length;
  unsigned threads = 1;
};

struct BetweennessResult {
  double mbc = 0.0;
  std::vector<double> values;  // indexed like CompactGraph (ascending node id)
  /// Share of ordered (s, t) pairs, s != t, with t reachable from s. Below 1 the graph is
  /// disconnected and the values only cover reachable pairs.
  double reachable_pair_fraction = 0.0;
};

/// Node betweenness by shortest-path dependency accumulation on the directed simple
/// projection, normalized by (n-1)(n-2). Sources are split statically across threads and the
/// partial sums merged in thread order, so results are deterministic for a thread count.
/// Throws DegenerateInput for n < 3.
BetweennessResult betweenness(const net::StreetGraph& g, const BetweennessOptions& options = {});

struct MeasureOptions {
  BetweennessOptions betweenness;
  PageRankOptions pagerank;
  bool compute_betweenness = true;
};

/// Every measure except average node connectivity.
MeasureReport compute_measures(const net::StreetGraph& g, double area_km2,
                               const MeasureOptions& options = {});

}  // namespace streetnet::measures
