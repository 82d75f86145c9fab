#include "streetnet/resilience.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>
#include <unordered_set>

#include "streetnet/error.hpp"

namespace streetnet::resilience {
namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

std::uint32_t in_half(std::size_t v) { return static_cast<std::uint32_t>(2 * v); }
std::uint32_t out_half(std::size_t v) { return static_cast<std::uint32_t>(2 * v + 1); }

std::pair<std::size_t, std::size_t> pair_from_index(std::uint64_t index, std::size_t n) {
  const std::size_t s = static_cast<std::size_t>(index / (n - 1));
  std::size_t t = static_cast<std::size_t>(index % (n - 1));
  if (t >= s) ++t;
  return {s, t};
}

std::vector<std::uint64_t> sample_pairs(std::uint64_t population, std::uint64_t k,
                                        std::uint64_t seed) {
  // Floyd's algorithm: k distinct draws from [0, population).
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k) * 2);
  for (std::uint64_t j = population - k; j < population; ++j) {
    std::uniform_int_distribution<std::uint64_t> dist(0, j);
    const std::uint64_t r = dist(rng);
    if (!chosen.insert(r).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

ConnectivitySolver::ConnectivitySolver(const net::StreetGraph& g) {
  const net::CompactGraph c = net::compact(g);
  node_count_ = c.size();
  arcs_.resize(2 * node_count_);
  out_degree_.assign(node_count_, 0);
  in_degree_.assign(node_count_, 0);
  for (std::size_t v = 0; v < node_count_; ++v) add_arc(in_half(v), out_half(v));

  std::vector<std::uint32_t> targets;
  for (std::size_t u = 0; u < node_count_; ++u) {
    targets.clear();
    for (const auto& arc : c.out(u)) {
      if (arc.node != u) targets.push_back(arc.node);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    for (std::uint32_t v : targets) {
      add_arc(out_half(u), in_half(v));
      ++out_degree_[u];
      ++in_degree_[v];
    }
  }
  stamp_.assign(2 * node_count_, 0);
  parent_.assign(2 * node_count_, {kNone, kNone});
  queue_.reserve(2 * node_count_);
}

void ConnectivitySolver::add_arc(std::uint32_t from, std::uint32_t to) {
  const auto fwd_index = static_cast<std::uint32_t>(arcs_[from].size());
  const auto rev_index = static_cast<std::uint32_t>(arcs_[to].size());
  arcs_[from].push_back({to, rev_index, 1});
  arcs_[to].push_back({from, fwd_index, 0});
}

bool ConnectivitySolver::augment(std::uint32_t source, std::uint32_t sink) {
  if (++generation_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    generation_ = 1;
  }
  queue_.clear();
  queue_.push_back(source);
  stamp_[source] = generation_;
  std::size_t head = 0;
  while (head < queue_.size()) {
    const std::uint32_t x = queue_[head++];
    const auto& row = arcs_[x];
    for (std::uint32_t k = 0; k < row.size(); ++k) {
      const Arc& a = row[k];
      if (a.cap <= 0 || stamp_[a.head] == generation_) continue;
      stamp_[a.head] = generation_;
      parent_[a.head] = {x, k};
      if (a.head == sink) {
        for (std::uint32_t y = sink; y != source;) {
          const auto [px, pk] = parent_[y];
          Arc& fwd = arcs_[px][pk];
          fwd.cap -= 1;
          arcs_[fwd.head][fwd.rev].cap += 1;
          touched_.emplace_back(px, pk);
          y = px;
        }
        return true;
      }
      queue_.push_back(a.head);
    }
  }
  return false;
}

int ConnectivitySolver::connectivity(std::size_t s, std::size_t t) {
  if (s == t) throw Error(ErrorCode::DegenerateInput, "connectivity needs distinct nodes");
  const int bound = std::min(out_degree_[s], in_degree_[t]);
  int flow = 0;
  while (flow < bound && augment(out_half(s), in_half(t))) ++flow;
  // Undo every augmentation of this query in reverse order.
  for (auto it = touched_.rbegin(); it != touched_.rend(); ++it) {
    Arc& fwd = arcs_[it->first][it->second];
    fwd.cap += 1;
    arcs_[fwd.head][fwd.rev].cap -= 1;
  }
  touched_.clear();
  return flow;
}

int node_connectivity(const net::StreetGraph& g, net::NodeId s, net::NodeId t) {
  if (s == t) throw Error(ErrorCode::DegenerateInput, "connectivity needs distinct nodes");
  const net::CompactGraph c = net::compact(g);
  ConnectivitySolver solver(g);
  return solver.connectivity(c.index_of(s), c.index_of(t));
}

AncResult average_node_connectivity(const net::StreetGraph& g, const AncOptions& options) {
  const std::size_t n = g.node_count();
  if (n < 2) throw Error(ErrorCode::DegenerateInput, "ANC needs at least 2 nodes");
  const std::uint64_t population = static_cast<std::uint64_t>(n) * (n - 1);

  bool exact = options.mode == AncMode::Exact ||
               (options.mode == AncMode::Auto && population <= options.sample_limit);
  std::vector<std::uint64_t> pairs;
  if (!exact) {
    const std::uint64_t k = std::min(population, std::max<std::uint64_t>(1, options.sample_limit));
    pairs = sample_pairs(population, k, options.seed);
  }
  const std::uint64_t count = exact ? population : pairs.size();

  const unsigned threads =
      std::max(1u, static_cast<unsigned>(std::min<std::uint64_t>(options.threads, count)));
  std::vector<std::int64_t> sums(threads, 0);
  std::vector<std::int64_t> squares(threads, 0);
  auto work = [&](unsigned t) {
    ConnectivitySolver solver(g);
    for (std::uint64_t i = t; i < count; i += threads) {
      const auto [s, u] = pair_from_index(exact ? i : pairs[i], n);
      const std::int64_t k = solver.connectivity(s, u);
      sums[t] += k;
      squares[t] += k * k;
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }

  std::int64_t sum = 0, sq = 0;
  for (unsigned t = 0; t < threads; ++t) {
    sum += sums[t];
    sq += squares[t];
  }
  AncResult r;
  r.pairs_evaluated = count;
  const double k = static_cast<double>(count);
  r.value = static_cast<double>(sum) / k;
  if (exact) {
    r.mode = AncMode::Exact;
  } else {
    r.mode = AncMode::Sampled;
    double se = 0.0;
    if (count > 1) {
      const double var = (static_cast<double>(sq) - k * r.value * r.value) / (k - 1.0);
      const double pop = static_cast<double>(population);
      const double fpc = pop > 1.0 ? (pop - k) / (pop - 1.0) : 0.0;
      se = std::sqrt(std::max(0.0, var) / k * fpc);
    }
    r.std_error = se;
  }
  return r;
}

ConversionGain oneway_conversion_gain(const net::StreetGraph& g, const AncOptions& options) {
  ConversionGain out;
  out.directed = average_node_connectivity(g, options);
  if (out.directed.value == 0.0) {
    throw Error(ErrorCode::ZeroBaseAnc, "ANC of the directed graph is zero");
  }
  out.bidirectional = average_node_connectivity(net::complete_twins(g), options);
  out.gain = out.bidirectional.value / out.directed.value - 1.0;
  return out;
}

}  // namespace streetnet::resilience
