#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "famsec/delivery.hpp"
#include "famsec/error.hpp"
#include "famsec/rng.hpp"

namespace famsec {

namespace {

using EdgeSet = std::set<std::pair<NodeId, NodeId>>;

bool add_edge(EdgeSet& edges, NodeId a, NodeId b) {
  if (a == b) return false;
  if (a > b) std::swap(a, b);
  return edges.insert({a, b}).second;
}

EdgeSet watts_strogatz(int n, const GeneratorParams& p, Rng& rng) {
  const int half = std::max(1, p.ws_neighbors / 2);
  std::vector<std::pair<NodeId, NodeId>> ring;
  for (int j = 1; j <= half; ++j)
    for (int i = 0; i < n; ++i) ring.push_back({i, (i + j) % n});
  EdgeSet edges;
  for (auto [a, b] : ring) add_edge(edges, a, b);
  for (auto [a, b] : ring) {
    if (rng.uniform() >= p.ws_rewire) continue;
    const NodeId target = static_cast<NodeId>(rng.index(static_cast<std::uint64_t>(n)));
    const auto key = std::minmax(a, b);
    if (target == a || edges.count(std::minmax(a, target))) continue;
    edges.erase({key.first, key.second});
    add_edge(edges, a, target);
  }
  return edges;
}

EdgeSet expected_degree(int n, const GeneratorParams& p, Rng& rng) {
  std::normal_distribution<double> normal(p.degree_mean, p.degree_sd);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& x : w) x = std::clamp(normal(rng.engine()), 1.0, static_cast<double>(n - 1));
  double total = 0.0;
  for (double x : w) total += x;
  EdgeSet edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double prob = std::min(1.0, w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] / total);
      if (rng.uniform() < prob) add_edge(edges, i, j);
    }
  return edges;
}

EdgeSet erdos_renyi(int n, const GeneratorParams& p, Rng& rng) {
  const std::size_t max_edges = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  const std::size_t m = std::min(max_edges, static_cast<std::size_t>(p.edges_per_node * n));
  EdgeSet edges;
  while (edges.size() < m)
    add_edge(edges, static_cast<NodeId>(rng.index(static_cast<std::uint64_t>(n))),
             static_cast<NodeId>(rng.index(static_cast<std::uint64_t>(n))));
  return edges;
}

// Static model: node i carries weight (i+1)^-a with a = 1/(exponent-1);
// endpoints are drawn proportionally to weight until m distinct edges exist.
EdgeSet static_scale_free(int n, const GeneratorParams& p, Rng& rng) {
  const double a = 1.0 / (p.scale_free_exponent - 1.0);
  std::vector<double> cdf(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += std::pow(i + 1.0, -a);
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  const auto draw = [&] {
    const double u = rng.uniform() * acc;
    return static_cast<NodeId>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };
  const std::size_t max_edges = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  const std::size_t m = std::min(max_edges, static_cast<std::size_t>(p.edges_per_node * n));
  EdgeSet edges;
  const std::size_t max_draws = 1000 * m;
  for (std::size_t draws = 0; edges.size() < m && draws < max_draws; ++draws) add_edge(edges, draw(), draw());
  return edges;
}

bool is_connected(int n, const EdgeSet& edges) {
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (NodeId w : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        ++count;
        stack.push_back(w);
      }
  }
  return count == n;
}

}  // namespace

RoadNetwork generate_network(GeneratorKind kind, int node_count, const GeneratorParams& params, std::uint64_t seed) {
  if (node_count < 8 || node_count > 64)
    throw Error(ErrorKind::InvalidArgument, "generated networks need N in [8, 64]");
  if (kind == GeneratorKind::Manual) throw Error(ErrorKind::InvalidArgument, "manual networks are not generated");
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    EdgeSet edges;
    switch (kind) {
      case GeneratorKind::WattsStrogatz: edges = watts_strogatz(node_count, params, rng); break;
      case GeneratorKind::ExpectedDegree: edges = expected_degree(node_count, params, rng); break;
      case GeneratorKind::ErdosRenyi: edges = erdos_renyi(node_count, params, rng); break;
      case GeneratorKind::StaticScaleFree: edges = static_scale_free(node_count, params, rng); break;
      case GeneratorKind::Manual: break;
    }
    if (!is_connected(node_count, edges)) continue;
    return RoadNetwork(node_count, {edges.begin(), edges.end()}, kind, circle_layout(node_count));
  }
  throw Error(ErrorKind::GenerationFailed,
              std::string(to_string(kind)) + " produced no connected graph in 100 attempts");
}

}  // namespace famsec
