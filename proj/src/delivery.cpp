#include "famsec/delivery.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "famsec/error.hpp"

namespace famsec {

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::WattsStrogatz: return "watts_strogatz";
    case GeneratorKind::ExpectedDegree: return "expected_degree";
    case GeneratorKind::ErdosRenyi: return "erdos_renyi";
    case GeneratorKind::StaticScaleFree: return "static_scale_free";
    case GeneratorKind::Manual: return "manual";
  }
  return "manual";
}

GeneratorKind generator_from_string(std::string_view name) {
  for (auto k : {GeneratorKind::WattsStrogatz, GeneratorKind::ExpectedDegree, GeneratorKind::ErdosRenyi,
                 GeneratorKind::StaticScaleFree, GeneratorKind::Manual})
    if (to_string(k) == name) return k;
  throw Error(ErrorKind::InvalidArgument, "unknown generator '" + std::string(name) + "'");
}

RoadNetwork::RoadNetwork(int node_count, std::vector<std::pair<NodeId, NodeId>> edges, GeneratorKind generator,
                         std::optional<std::vector<Point>> layout)
    : n_(node_count), generator_(generator), layout_(std::move(layout)) {
  if (n_ < 2) throw Error(ErrorKind::InvalidTask, "network needs at least 2 nodes");
  std::set<std::pair<NodeId, NodeId>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || a >= n_ || b < 0 || b >= n_) throw Error(ErrorKind::InvalidTask, "edge endpoint out of range");
    if (a == b) throw Error(ErrorKind::InvalidTask, "self-loop at node " + std::to_string(a));
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second)
      throw Error(ErrorKind::InvalidTask, "duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
  }
  edges_.assign(seen.begin(), seen.end());
  adjacency_.assign(static_cast<std::size_t>(n_), {});
  for (auto [a, b] : edges_) {
    adjacency_[static_cast<std::size_t>(a)].push_back(b);
    adjacency_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
  if (layout_ && static_cast<int>(layout_->size()) != n_)
    throw Error(ErrorKind::InvalidTask, "layout size does not match node count");
  if (generator_ != GeneratorKind::Manual && !connected())
    throw Error(ErrorKind::InvalidTask, "generated network is not connected");
}

std::vector<int> RoadNetwork::bfs_distances(NodeId source) const {
  std::vector<int> dist(static_cast<std::size_t>(n_), -1);
  std::deque<NodeId> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    for (NodeId w : neighbors(v)) {
      if (dist[static_cast<std::size_t>(w)] >= 0) continue;
      dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
      queue.push_back(w);
    }
  }
  return dist;
}

bool RoadNetwork::connected() const {
  const auto dist = bfs_distances(0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

std::vector<Point> circle_layout(int node_count) {
  std::vector<Point> out(static_cast<std::size_t>(node_count));
  for (int i = 0; i < node_count; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / node_count;
    out[static_cast<std::size_t>(i)] = {std::cos(angle), std::sin(angle)};
  }
  return out;
}

int shortest_path_distance(const RoadNetwork& network, NodeId a, NodeId b) {
  if (!network.valid_node(a) || !network.valid_node(b)) throw Error(ErrorKind::InvalidArgument, "node out of range");
  if (a == b) return 0;
  return network.bfs_distances(a)[static_cast<std::size_t>(b)];
}

void DeliveryTask::validate() const {
  const auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidTask, m); };
  if (!network.valid_node(adt_start) || !network.valid_node(mg_start) || !network.valid_node(goal))
    bad("start or goal node out of range");
  if (adt_start == mg_start) bad("ADT and MG must start on different nodes");
  if (!(p_trans >= 0.0 && p_trans <= 1.0)) bad("p_trans must lie in [0,1]");
  if (!(mg_pursue_prob >= 0.0 && mg_pursue_prob <= 1.0)) bad("mg_pursue_prob must lie in [0,1]");
  if (!(rewards.goal > 0.0 && rewards.caught < 0.0)) bad("rewards must satisfy goal > 0 > caught");
  if (!(rewards.loiter < 0.0)) bad("loiter reward must be negative");
  if (!(gamma >= 0.0 && gamma < 1.0)) bad("gamma must lie in [0,1)");
  if (t_max < 1) bad("t_max must be positive");
}

Admissibility admissible_task(const DeliveryTask& task) {
  const auto& net = task.network;
  const double ratio = static_cast<double>(net.edge_count()) / net.node_count();
  if (ratio > kMaxEdgeNodeRatio) return {false, "edge ratio"};
  const int to_goal = shortest_path_distance(net, task.adt_start, task.goal);
  if (to_goal >= 0 && to_goal < kMinStartDistance) return {false, "goal too close"};
  const int to_mg = shortest_path_distance(net, task.adt_start, task.mg_start);
  if (to_mg >= 0 && to_mg < kMinStartDistance) return {false, "pursuer too close"};
  return {true, {}};
}

NodeId pursuit_step(const RoadNetwork& network, NodeId from, NodeId target) {
  if (from == target) return from;
  const auto dist = network.bfs_distances(target);
  const int here = dist[static_cast<std::size_t>(from)];
  if (here < 0) return from;
  for (NodeId w : network.neighbors(from))  // ascending, so the first hit is the lowest id
    if (dist[static_cast<std::size_t>(w)] == here - 1) return w;
  return from;
}

namespace {

using NodeDist = std::vector<std::pair<NodeId, double>>;

NodeDist adt_motion(const RoadNetwork& net, NodeId at, NodeId chosen, double p_trans) {
  if (chosen == at) return {{at, 1.0}};
  const auto& nb = net.neighbors(at);
  if (nb.size() == 1) return {{chosen, 1.0}};
  NodeDist out;
  const double slip = (1.0 - p_trans) / static_cast<double>(nb.size() - 1);
  for (NodeId w : nb) {
    const double p = (w == chosen) ? p_trans : slip;
    if (p > 0.0) out.push_back({w, p});
  }
  return out;
}

}  // namespace

MdpSpec build_mdp(const DeliveryTask& task) {
  task.validate();
  const auto& net = task.network;
  const int n = net.node_count();
  const auto total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n) + 2;
  const StateId caught = caught_state(n);
  const StateId delivered = delivered_state(n);

  // MG motion depends only on (mg, adt); precompute the pursuit hop table.
  std::vector<std::vector<int>> dist_to(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) dist_to[static_cast<std::size_t>(v)] = net.bfs_distances(v);
  const auto pursue_hop = [&](NodeId mg, NodeId adt) {
    const auto& d = dist_to[static_cast<std::size_t>(adt)];
    const int here = d[static_cast<std::size_t>(mg)];
    if (here <= 0) return mg;
    for (NodeId w : net.neighbors(mg))
      if (d[static_cast<std::size_t>(w)] == here - 1) return w;
    return mg;
  };
  const auto mg_motion = [&](NodeId mg, NodeId adt) {
    std::map<NodeId, double> dist;
    const double q = task.mg_pursue_prob;
    if (q > 0.0) dist[pursue_hop(mg, adt)] += q;
    if (q < 1.0) {
      const auto& nb = net.neighbors(mg);
      if (nb.empty()) {
        dist[mg] += 1.0 - q;
      } else {
        const double each = (1.0 - q) / static_cast<double>(nb.size());
        for (NodeId w : nb) dist[w] += each;
      }
    }
    return NodeDist(dist.begin(), dist.end());
  };

  std::vector<std::vector<ActionEntry>> actions(total);
  std::vector<bool> terminal(total, false);
  terminal[static_cast<std::size_t>(caught)] = true;
  terminal[static_cast<std::size_t>(delivered)] = true;

  for (NodeId adt = 0; adt < n; ++adt) {
    for (NodeId mg = 0; mg < n; ++mg) {
      const auto s = static_cast<std::size_t>(encode_state(adt, mg, n));
      if (adt == mg || adt == task.goal) {
        terminal[s] = true;
        continue;
      }
      const NodeDist mg_next = mg_motion(mg, adt);
      std::vector<NodeId> choices = net.neighbors(adt);
      choices.push_back(adt);  // Stay
      for (NodeId chosen : choices) {
        std::map<StateId, Outcome> merged;
        for (auto [a2, pa] : adt_motion(net, adt, chosen, task.p_trans)) {
          for (auto [m2, pm] : mg_next) {
            StateId next;
            double r;
            if (a2 == m2) {
              next = caught;
              r = task.rewards.caught;
            } else if (a2 == task.goal) {
              next = delivered;
              r = task.rewards.goal;
            } else {
              next = encode_state(a2, m2, n);
              r = task.rewards.loiter;
            }
            auto [it, inserted] = merged.try_emplace(next, Outcome{next, 0.0, r});
            it->second.prob += pa * pm;
          }
        }
        ActionEntry entry{chosen, {}};
        entry.outcomes.reserve(merged.size());
        for (auto& [id, o] : merged) {
          o.prob = std::min(o.prob, 1.0);  // accumulated rounding
          entry.outcomes.push_back(o);
        }
        actions[s].push_back(std::move(entry));
      }
    }
  }
  return MdpSpec(std::move(actions), std::move(terminal), task.gamma);
}

StateId start_state(const DeliveryTask& task) {
  return encode_state(task.adt_start, task.mg_start, task.network.node_count());
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json network_to_json(const RoadNetwork& network) {
  nlohmann::ordered_json j;
  j["n"] = network.node_count();
  auto edges = nlohmann::ordered_json::array();
  for (auto [a, b] : network.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  j["generator"] = std::string(to_string(network.generator()));
  if (network.layout()) {
    auto layout = nlohmann::ordered_json::array();
    for (const auto& p : *network.layout()) layout.push_back({p.x, p.y});
    j["layout"] = std::move(layout);
  }
  return j;
}

RoadNetwork network_from_json(const nlohmann::json& j) {
  try {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
    std::optional<std::vector<Point>> layout;
    if (j.contains("layout") && !j.at("layout").is_null()) {
      layout.emplace();
      for (const auto& p : j.at("layout")) layout->push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    return RoadNetwork(j.at("n").get<int>(), std::move(edges),
                       generator_from_string(j.at("generator").get<std::string>()), std::move(layout));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidTask, std::string("malformed network: ") + e.what());
  }
}

nlohmann::ordered_json task_to_json(const DeliveryTask& task) {
  nlohmann::ordered_json j;
  j["schema_version"] = kTaskSchemaVersion;
  j["network"] = network_to_json(task.network);
  nlohmann::ordered_json t;
  t["adt_start"] = task.adt_start;
  t["mg_start"] = task.mg_start;
  t["goal"] = task.goal;
  t["p_trans"] = task.p_trans;
  t["rewards"] = {{"goal", task.rewards.goal}, {"caught", task.rewards.caught}, {"loiter", task.rewards.loiter}};
  t["gamma"] = task.gamma;
  t["t_max"] = task.t_max;
  t["mg_pursue_prob"] = task.mg_pursue_prob;
  j["task"] = std::move(t);
  j["seed"] = task.seed;
  return j;
}

DeliveryTask task_from_json(const nlohmann::json& j) {
  int version = 0;
  try {
    version = j.at("schema_version").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::InvalidTask, "task document has no schema_version");
  }
  if (version != kTaskSchemaVersion)
    throw Error(ErrorKind::SchemaVersionMismatch, "task schema_version " + std::to_string(version) + " unsupported");
  try {
    const auto& t = j.at("task");
    DeliveryTask task{network_from_json(j.at("network"))};
    task.adt_start = t.at("adt_start").get<NodeId>();
    task.mg_start = t.at("mg_start").get<NodeId>();
    task.goal = t.at("goal").get<NodeId>();
    task.p_trans = t.at("p_trans").get<double>();
    const auto& r = t.at("rewards");
    task.rewards = {r.at("goal").get<double>(), r.at("caught").get<double>(), r.at("loiter").get<double>()};
    task.gamma = t.at("gamma").get<double>();
    task.t_max = t.at("t_max").get<int>();
    task.mg_pursue_prob = t.at("mg_pursue_prob").get<double>();
    task.seed = j.value("seed", std::uint64_t{0});
    task.validate();
    return task;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidTask, std::string("malformed task: ") + e.what());
  }
}

DeliveryTask load_task(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open task file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::CorruptFile, path + ": " + e.what());
  }
  return task_from_json(j);
}

void save_task(const DeliveryTask& task, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  out << task_to_json(task).dump(2) << '\n';
}

}  // namespace famsec
