#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "famsec/mdp.hpp"

namespace famsec {

using NodeId = std::int32_t;

enum class GeneratorKind { WattsStrogatz, ExpectedDegree, ErdosRenyi, StaticScaleFree, Manual };

std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_from_string(std::string_view name);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Undirected road network. Edges are stored normalized (a < b) and sorted;
/// neighbor lists are ascending.
class RoadNetwork {
 public:
  /// Throws InvalidTask on self-loops, duplicate edges, out-of-range nodes, or
  /// (for generated kinds) a disconnected graph. Manual networks may be
  /// disconnected so crafted fixtures can isolate a pursuer.
  RoadNetwork(int node_count, std::vector<std::pair<NodeId, NodeId>> edges, GeneratorKind generator,
              std::optional<std::vector<Point>> layout = std::nullopt);

  int node_count() const { return n_; }
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<NodeId>& neighbors(NodeId v) const { return adjacency_[static_cast<std::size_t>(v)]; }
  GeneratorKind generator() const { return generator_; }
  const std::optional<std::vector<Point>>& layout() const { return layout_; }
  bool valid_node(NodeId v) const { return v >= 0 && v < n_; }
  bool connected() const;

  /// Hop counts from `source`; -1 for unreachable nodes.
  std::vector<int> bfs_distances(NodeId source) const;

 private:
  int n_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::vector<NodeId>> adjacency_;
  GeneratorKind generator_;
  std::optional<std::vector<Point>> layout_;
};

struct GeneratorParams {
  int ws_neighbors = 4;
  double ws_rewire = 0.3;
  double degree_mean = 4.0;
  double degree_sd = 1.0;
  int edges_per_node = 2;  // Erdos-Renyi and static scale-free: m = edges_per_node * N
  double scale_free_exponent = 2.0;
};

/// Connected random network; resamples with a fresh sub-seed up to 100 times.
/// N must lie in [8, 64]. Throws GenerationFailed.
RoadNetwork generate_network(GeneratorKind kind, int node_count, const GeneratorParams& params,
                             std::uint64_t seed);

/// Deterministic circular layout used for display when none is supplied.
std::vector<Point> circle_layout(int node_count);

/// BFS hop count. Returns -1 when b is unreachable from a (manual networks only).
int shortest_path_distance(const RoadNetwork& network, NodeId a, NodeId b);

struct Rewards {
  double goal = 2000.0;
  double caught = -2000.0;
  double loiter = -200.0;
};

struct DeliveryTask {
  RoadNetwork network;
  NodeId adt_start = 0;
  NodeId mg_start = 1;
  NodeId goal = 2;
  double p_trans = 0.7;
  Rewards rewards{};
  double gamma = 0.95;
  int t_max = 50;
  double mg_pursue_prob = 0.7;
  std::uint64_t seed = 0;

  /// Throws InvalidTask.
  void validate() const;
};

struct Admissibility {
  bool admissible = true;
  std::string reason;  // "edge ratio", "goal too close", "pursuer too close"
};

inline constexpr double kMaxEdgeNodeRatio = 2.5;
inline constexpr int kMinStartDistance = 2;

Admissibility admissible_task(const DeliveryTask& task);

// Joint state encoding: adt * N + mg, with two absorbing ids past N^2.
inline StateId encode_state(NodeId adt, NodeId mg, int n) { return adt * n + mg; }
inline StateId caught_state(int n) { return n * n; }
inline StateId delivered_state(int n) { return n * n + 1; }
inline NodeId adt_node(StateId s, int n) { return s / n; }
inline NodeId mg_node(StateId s, int n) { return s % n; }

/// ADT actions at a node: MoveTo(neighbor) for each neighbor in ascending
/// order, then Stay. The action id is the target node (Stay = current node).
MdpSpec build_mdp(const DeliveryTask& task);

StateId start_state(const DeliveryTask& task);

/// Next node for a pursuing MG: first hop of a BFS shortest path toward
/// `target`, lowest node id among equally short hops. Stays when no path.
NodeId pursuit_step(const RoadNetwork& network, NodeId from, NodeId target);

// ---------------------------------------------------------------------------
// Serialization (versioned, canonical field order)

inline constexpr int kTaskSchemaVersion = 1;

nlohmann::ordered_json network_to_json(const RoadNetwork& network);
RoadNetwork network_from_json(const nlohmann::json& j);
nlohmann::ordered_json task_to_json(const DeliveryTask& task);
/// Throws SchemaVersionMismatch or InvalidTask.
DeliveryTask task_from_json(const nlohmann::json& j);

DeliveryTask load_task(const std::string& path);
void save_task(const DeliveryTask& task, const std::string& path);

}  // namespace famsec
