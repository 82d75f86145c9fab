#include "streetnet/measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "streetnet/error.hpp"

namespace streetnet::measures {
namespace {

struct FieldSpec {
  std::string_view name;
  bool integral;
  std::function<std::optional<double>(const MeasureReport&)> get;
  std::function<void(MeasureReport&, std::optional<double>)> set;
};

template <typename T>
FieldSpec field(std::string_view name, T MeasureReport::*member) {
  if constexpr (std::is_same_v<T, std::size_t>) {
    return {name, true,
            [member](const MeasureReport& r) -> std::optional<double> {
              return static_cast<double>(r.*member);
            },
            [member](MeasureReport& r, std::optional<double> v) {
              r.*member = v ? static_cast<std::size_t>(std::llround(*v)) : 0;
            }};
  } else if constexpr (std::is_same_v<T, double>) {
    return {name, false,
            [member](const MeasureReport& r) -> std::optional<double> { return r.*member; },
            [member](MeasureReport& r, std::optional<double> v) {
              r.*member = v.value_or(std::numeric_limits<double>::quiet_NaN());
            }};
  } else {
    return {name, false, [member](const MeasureReport& r) { return r.*member; },
            [member](MeasureReport& r, std::optional<double> v) { r.*member = v; }};
  }
}

const std::vector<FieldSpec>& field_specs() {
  using R = MeasureReport;
  static const std::vector<FieldSpec> specs = {
      field("n", &R::n),
      field("m", &R::m),
      field("area_km2", &R::area_km2),
      field("intersection_count", &R::intersection_count),
      field("node_density_per_km2", &R::node_density_per_km2),
      field("intersection_density_per_km2", &R::intersection_density_per_km2),
      field("edge_density_km_per_km2", &R::edge_density_km_per_km2),
      field("street_density_km_per_km2", &R::street_density_km_per_km2),
      field("total_edge_length_km", &R::total_edge_length_km),
      field("total_street_length_km", &R::total_street_length_km),
      field("street_segment_count", &R::street_segment_count),
      field("avg_edge_length_m", &R::avg_edge_length_m),
      field("avg_street_segment_length_m", &R::avg_street_segment_length_m),
      field("avg_circuity", &R::avg_circuity),
      field("avg_node_degree", &R::avg_node_degree),
      field("avg_streets_per_node", &R::avg_streets_per_node),
      field("prop_deadends", &R::prop_deadends),
      field("prop_3way", &R::prop_3way),
      field("prop_4way", &R::prop_4way),
      field("self_loop_proportion", &R::self_loop_proportion),
      field("avg_clustering_coefficient", &R::avg_clustering_coefficient),
      field("avg_weighted_clustering_coefficient", &R::avg_weighted_clustering_coefficient),
      field("avg_neighborhood_degree", &R::avg_neighborhood_degree),
      field("avg_weighted_neighborhood_degree", &R::avg_weighted_neighborhood_degree),
      field("avg_degree_centrality", &R::avg_degree_centrality),
      field("max_pagerank", &R::max_pagerank),
      field("min_pagerank", &R::min_pagerank),
      field("max_betweenness_centrality", &R::max_betweenness_centrality),
      field("avg_node_connectivity", &R::avg_node_connectivity),
  };
  return specs;
}

// Directed simple projection: parallel arcs merged (minimum length), self-loops dropped.
struct SimpleDigraph {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> targets;
  std::vector<double> weights;
};

SimpleDigraph simple_projection(const net::CompactGraph& c, BetweennessWeight weight) {
  SimpleDigraph s;
  const std::size_t n = c.size();
  s.offsets.assign(n + 1, 0);
  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t u = 0; u < n; ++u) {
    row.clear();
    for (const auto& arc : c.out(u)) {
      if (arc.node == u) continue;
      row.emplace_back(arc.node, weight == BetweennessWeight::Hops ? 1.0 : arc.length_m);
    }
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0 && row[i].first == row[i - 1].first) continue;
      s.targets.push_back(row[i].first);
      s.weights.push_back(row[i].second);
    }
    s.offsets[u + 1] = s.targets.size();
  }
  return s;
}

// Single-source dependency accumulation; adds into `acc` and returns reachable target count.
class BrandesWorker {
 public:
  BrandesWorker(const SimpleDigraph& g, std::size_t n, bool unit_weights)
      : g_(g), unit_(unit_weights), dist_(n), sigma_(n), delta_(n), preds_(n) {
    order_.reserve(n);
  }

  std::size_t run(std::size_t source, std::vector<double>& acc) {
    const std::size_t n = dist_.size();
    std::fill(dist_.begin(), dist_.end(), std::numeric_limits<double>::infinity());
    std::fill(sigma_.begin(), sigma_.end(), 0.0);
    std::fill(delta_.begin(), delta_.end(), 0.0);
    for (auto& p : preds_) p.clear();
    order_.clear();

    dist_[source] = 0.0;
    sigma_[source] = 1.0;
    if (unit_) {
      bfs(source);
    } else {
      dijkstra(source);
    }

    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const std::uint32_t w = *it;
      const double coeff = (1.0 + delta_[w]) / sigma_[w];
      for (std::uint32_t v : preds_[w]) delta_[v] += sigma_[v] * coeff;
      if (w != source) acc[w] += delta_[w];
    }
    (void)n;
    return order_.empty() ? 0 : order_.size() - 1;
  }

 private:
  void bfs(std::size_t source) {
    std::size_t head = 0;
    order_.push_back(static_cast<std::uint32_t>(source));
    while (head < order_.size()) {
      const std::uint32_t v = order_[head++];
      for (std::size_t k = g_.offsets[v]; k < g_.offsets[v + 1]; ++k) {
        const std::uint32_t w = g_.targets[k];
        if (std::isinf(dist_[w])) {
          dist_[w] = dist_[v] + 1.0;
          order_.push_back(w);
        }
        if (dist_[w] == dist_[v] + 1.0) {
          sigma_[w] += sigma_[v];
          preds_[w].push_back(v);
        }
      }
    }
  }

  void dijkstra(std::size_t source) {
    using Item = std::pair<double, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<bool>& settled = settled_;
    settled.assign(dist_.size(), false);
    heap.emplace(0.0, static_cast<std::uint32_t>(source));
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (settled[v] || d > dist_[v]) continue;
      settled[v] = true;
      order_.push_back(v);
      for (std::size_t k = g_.offsets[v]; k < g_.offsets[v + 1]; ++k) {
        const std::uint32_t w = g_.targets[k];
        const double nd = d + g_.weights[k];
        if (nd < dist_[w]) {
          dist_[w] = nd;
          sigma_[w] = sigma_[v];
          preds_[w].assign(1, v);
          heap.emplace(nd, w);
        } else if (nd == dist_[w] && !settled[w]) {
          sigma_[w] += sigma_[v];
          preds_[w].push_back(v);
        }
      }
    }
  }

  const SimpleDigraph& g_;
  bool unit_;
  std::vector<double> dist_;
  std::vector<double> sigma_;
  std::vector<double> delta_;
  std::vector<std::vector<std::uint32_t>> preds_;
  std::vector<std::uint32_t> order_;
  std::vector<bool> settled_;
};

// Undirected simple projection with minimum connecting length per neighbor pair.
struct UndirectedSimple {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // sorted by neighbor
};

UndirectedSimple undirected_simple(const net::CompactGraph& c) {
  UndirectedSimple u;
  const std::size_t n = c.size();
  u.adj.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto& row = u.adj[v];
    for (const auto& arc : c.out(v)) {
      if (arc.node != v) row.emplace_back(arc.node, arc.length_m);
    }
    for (const auto& arc : c.in(v)) {
      if (arc.node != v) row.emplace_back(arc.node, arc.length_m);
    }
    std::sort(row.begin(), row.end());
    std::size_t w = 0;
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (w > 0 && row[w - 1].first == row[r].first) continue;  // sorted: first is the minimum
      row[w++] = row[r];
    }
    row.resize(w);
  }
  return u;
}

}  // namespace

std::vector<MeasureReport::Field> MeasureReport::fields() const {
  std::vector<Field> out;
  out.reserve(field_specs().size());
  for (const FieldSpec& spec : field_specs()) out.push_back({spec.name, spec.get(*this), spec.integral});
  return out;
}

std::vector<std::string_view> MeasureReport::field_names() {
  std::vector<std::string_view> names;
  for (const FieldSpec& spec : field_specs()) names.push_back(spec.name);
  return names;
}

bool MeasureReport::set_field(std::string_view name, std::optional<double> value) {
  for (const FieldSpec& spec : field_specs()) {
    if (spec.name == name) {
      spec.set(*this, value);
      return true;
    }
  }
  return false;
}

std::string MeasureReport::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const Field& f : fields()) {
    const std::string key(f.name);
    if (!f.value || !std::isfinite(*f.value)) {
      j[key] = nullptr;
    } else if (f.integral) {
      j[key] = static_cast<std::uint64_t>(*f.value);
    } else {
      j[key] = *f.value;
    }
  }
  return j.dump(2);
}

MeasureReport MeasureReport::from_json(std::string_view text) {
  MeasureReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const FieldSpec& spec : field_specs()) {
      auto it = j.find(std::string(spec.name));
      if (it == j.end() || it->is_null()) {
        spec.set(r, std::nullopt);
      } else {
        spec.set(r, it->get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("measure report JSON: ") + e.what());
  }
  return r;
}

std::string MeasureReport::csv_header() {
  std::string out;
  for (std::string_view name : field_names()) {
    if (!out.empty()) out += ',';
    out += name;
  }
  return out;
}

std::string MeasureReport::csv_row() const {
  std::string out;
  bool first = true;
  for (const Field& f : fields()) {
    if (!first) out += ',';
    first = false;
    if (f.value && std::isfinite(*f.value)) out += format_number(*f.value);
  }
  return out;
}

MeasureReport metric_measures(const net::StreetGraph& g, double area_km2) {
  if (g.nodes.empty()) throw Error(ErrorCode::EmptyNetwork, "graph has no nodes");
  if (!(area_km2 > 0.0)) throw Error(ErrorCode::DegenerateInput, "area must be positive");

  MeasureReport r;
  r.n = g.node_count();
  r.m = g.edge_count();
  r.area_km2 = area_km2;

  const net::StreetGraph undirected = net::to_undirected(g);
  r.total_edge_length_km = g.total_length_m() / 1000.0;
  r.total_street_length_km = undirected.total_length_m() / 1000.0;
  r.street_segment_count = undirected.edge_count();
  r.avg_edge_length_m = r.m ? g.total_length_m() / static_cast<double>(r.m) : 0.0;
  r.avg_street_segment_length_m =
      r.street_segment_count
          ? undirected.total_length_m() / static_cast<double>(r.street_segment_count)
          : 0.0;

  std::size_t deadends = 0, three = 0, four = 0, streets_sum = 0;
  for (const auto& [id, attr] : g.nodes) {
    if (attr.streets_per_node == net::kStreetsUnset) {
      throw Error(ErrorCode::DegenerateInput, "streets_per_node has not been computed");
    }
    streets_sum += static_cast<std::size_t>(attr.streets_per_node);
    if (attr.streets_per_node >= 2) ++r.intersection_count;
    if (attr.streets_per_node == 1) ++deadends;
    if (attr.streets_per_node == 3) ++three;
    if (attr.streets_per_node == 4) ++four;
  }
  const double n = static_cast<double>(r.n);
  r.avg_streets_per_node = static_cast<double>(streets_sum) / n;
  r.prop_deadends = static_cast<double>(deadends) / n;
  r.prop_3way = static_cast<double>(three) / n;
  r.prop_4way = static_cast<double>(four) / n;

  std::size_t loops = 0;
  for (const net::Edge& e : g.edges) loops += e.is_self_loop() ? 1 : 0;
  r.self_loop_proportion = r.m ? static_cast<double>(loops) / static_cast<double>(r.m) : 0.0;

  r.node_density_per_km2 = n / area_km2;
  r.intersection_density_per_km2 = static_cast<double>(r.intersection_count) / area_km2;
  r.edge_density_km_per_km2 = r.total_edge_length_km / area_km2;
  r.street_density_km_per_km2 = r.total_street_length_km / area_km2;
  return r;
}

double avg_circuity(const net::StreetGraph& g) {
  double network = 0.0;
  double straight = 0.0;
  for (const net::Edge& e : g.edges) {
    if (e.is_self_loop()) continue;
    const double gc = geo::haversine_m(g.nodes.at(e.u).location, g.nodes.at(e.v).location);
    if (gc <= 0.0) continue;
    network += e.length_m;
    straight += gc;
  }
  if (straight <= 0.0) throw Error(ErrorCode::NoQualifyingEdges, "no edge with distinct endpoints");
  return network / straight;
}

DegreeMeasures degree_measures(const net::StreetGraph& g) {
  DegreeMeasures out;
  const net::CompactGraph c = net::compact(g);
  const std::size_t n = c.size();
  if (n == 0) return out;

  std::vector<double> degree(n);
  for (std::size_t v = 0; v < n; ++v) degree[v] = static_cast<double>(c.out(v).size() + c.in(v).size());

  const UndirectedSimple u = undirected_simple(c);
  double degree_sum = 0.0, nbr_sum = 0.0, weighted_sum = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    degree_sum += degree[v];
    const auto& row = u.adj[v];
    if (row.empty()) continue;
    double plain = 0.0, wsum = 0.0, wdeg = 0.0;
    for (const auto& [w, len] : row) {
      plain += degree[w];
      if (len > 0.0) {
        wsum += 1.0 / len;
        wdeg += degree[w] / len;
      }
    }
    nbr_sum += plain / static_cast<double>(row.size());
    if (wsum > 0.0) weighted_sum += wdeg / wsum;
  }
  const double dn = static_cast<double>(n);
  out.avg_node_degree = degree_sum / dn;
  out.avg_neighborhood_degree = nbr_sum / dn;
  out.avg_weighted_neighborhood_degree = weighted_sum / dn;
  if (n >= 2) out.avg_degree_centrality = out.avg_node_degree / (dn - 1.0);
  return out;
}

ClusteringResult clustering(const net::StreetGraph& g) {
  ClusteringResult out;
  const net::CompactGraph c = net::compact(g);
  const std::size_t n = c.size();
  if (n == 0) return out;
  const UndirectedSimple u = undirected_simple(c);

  double max_w = 0.0;
  for (const auto& row : u.adj) {
    for (const auto& [w, len] : row) max_w = std::max(max_w, len);
  }

  out.per_node.assign(n, 0.0);
  out.per_node_weighted.assign(n, 0.0);
  // mark[w] holds the normalized weight of edge (v, w) + 1 while v is processed; 0 = not adjacent
  std::vector<double> mark(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& row = u.adj[v];
    const std::size_t k = row.size();
    if (k < 2) continue;
    for (const auto& [w, len] : row) mark[w] = 1.0 + (max_w > 0.0 ? len / max_w : 0.0);
    std::size_t triangles = 0;
    double weighted = 0.0;
    for (const auto& [a, len_va] : row) {
      for (const auto& [b, len_ab] : u.adj[a]) {
        if (b <= a || mark[b] == 0.0) continue;
        ++triangles;
        if (max_w > 0.0) {
          const double w_va = len_va / max_w;
          const double w_vb = mark[b] - 1.0;
          const double w_ab = len_ab / max_w;
          weighted += std::cbrt(w_va * w_vb * w_ab);
        }
      }
    }
    for (const auto& [w, len] : row) mark[w] = 0.0;
    const double pairs = static_cast<double>(k) * static_cast<double>(k - 1);
    out.per_node[v] = 2.0 * static_cast<double>(triangles) / pairs;
    out.per_node_weighted[v] = 2.0 * weighted / pairs;
  }
  double s = 0.0, sw = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    s += out.per_node[v];
    sw += out.per_node_weighted[v];
  }
  out.avg_clustering = s / static_cast<double>(n);
  out.avg_weighted_clustering = sw / static_cast<double>(n);
  return out;
}

PageRankResult pagerank(const net::StreetGraph& g, const PageRankOptions& options) {
  const net::CompactGraph c = net::compact(g);
  const std::size_t n = c.size();
  if (n == 0) throw Error(ErrorCode::EmptyNetwork, "pagerank needs at least one node");
  const double d = options.damping;
  const double dn = static_cast<double>(n);

  std::vector<double> inv_out(n, 0.0);
  std::vector<std::size_t> dangling;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t k = c.out(v).size();
    if (k == 0) {
      dangling.push_back(v);
    } else {
      inv_out[v] = 1.0 / static_cast<double>(k);
    }
  }

  PageRankResult r;
  std::vector<double> x(n, 1.0 / dn), next(n);
  for (int it = 1; it <= options.max_iterations; ++it) {
    double dangling_mass = 0.0;
    for (std::size_t v : dangling) dangling_mass += x[v];
    const double base = (1.0 - d) / dn + d * dangling_mass / dn;
    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double incoming = 0.0;
      for (const auto& arc : c.in(v)) incoming += x[arc.node] * inv_out[arc.node];
      next[v] = base + d * incoming;
      total += next[v];
    }
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      next[v] /= total;
      change += std::abs(next[v] - x[v]);
    }
    x.swap(next);
    r.iterations = it;
    r.residual = change;
    if (change < options.tolerance) {
      r.values = std::move(x);
      auto [lo, hi] = std::minmax_element(r.values.begin(), r.values.end());
      r.min_pr = *lo;
      r.max_pr = *hi;
      return r;
    }
  }
  throw Error(ErrorCode::NonConvergence, "pagerank did not converge in " +
                                             std::to_string(options.max_iterations) +
                                             " iterations; residual " + format_number(r.residual));
}

BetweennessResult betweenness(const net::StreetGraph& g, const BetweennessOptions& options) {
  const net::CompactGraph c = net::compact(g);
  const std::size_t n = c.size();
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "betweenness needs at least 3 nodes");
  const SimpleDigraph s = simple_projection(c, options.weight);
  const bool unit = options.weight == BetweennessWeight::Hops;

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
  std::vector<std::vector<double>> partial(threads, std::vector<double>(n, 0.0));
  std::vector<std::size_t> reachable(threads, 0);
  auto work = [&](unsigned t) {
    BrandesWorker worker(s, n, unit);
    for (std::size_t src = t; src < n; src += threads) reachable[t] += worker.run(src, partial[t]);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }

  BetweennessResult r;
  r.values.assign(n, 0.0);
  std::size_t reach = 0;
  for (unsigned t = 0; t < threads; ++t) {
    reach += reachable[t];
    for (std::size_t v = 0; v < n; ++v) r.values[v] += partial[t][v];
  }
  const double dn = static_cast<double>(n);
  const double scale = 1.0 / ((dn - 1.0) * (dn - 2.0));
  for (double& v : r.values) v *= scale;
  r.mbc = *std::max_element(r.values.begin(), r.values.end());
  r.reachable_pair_fraction = static_cast<double>(reach) / (dn * (dn - 1.0));
  return r;
}

MeasureReport compute_measures(const net::StreetGraph& g, double area_km2,
                               const MeasureOptions& options) {
  MeasureReport r = metric_measures(g, area_km2);
  try {
    r.avg_circuity = avg_circuity(g);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoQualifyingEdges) throw;
  }
  const DegreeMeasures deg = degree_measures(g);
  r.avg_node_degree = deg.avg_node_degree;
  r.avg_degree_centrality = deg.avg_degree_centrality;
  r.avg_neighborhood_degree = deg.avg_neighborhood_degree;
  r.avg_weighted_neighborhood_degree = deg.avg_weighted_neighborhood_degree;

  const ClusteringResult cc = clustering(g);
  r.avg_clustering_coefficient = cc.avg_clustering;
  r.avg_weighted_clustering_coefficient = cc.avg_weighted_clustering;

  const PageRankResult pr = pagerank(g, options.pagerank);
  r.max_pagerank = pr.max_pr;
  r.min_pagerank = pr.min_pr;

  if (options.compute_betweenness && g.node_count() >= 3) {
    r.max_betweenness_centrality = betweenness(g, options.betweenness).mbc;
  }
  return r;
}

}  // namespace streetnet::measures
