#include "v2xmec/matching.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "v2xmec/errors.hpp"

namespace v2xmec::matching {

namespace {

bool within_v2v_range(const Vehicle& a, const Vehicle& b, double d_max) {
  const double dist = euclidean(a.pos, b.pos);
  if (dist == 0.0) {
    throw ConfigError("vehicles " + std::to_string(a.id) + " and " + std::to_string(b.id) +
                      " share an exact position");
  }
  if (dist < d_max - kDistanceEps) return true;
  if (std::abs(dist - d_max) <= kDistanceEps) {
    if (a.pos.x == b.pos.x) return true;  // purely lateral offset, neither is in front
    const Vehicle& rear = a.pos.x < b.pos.x ? a : b;
    const Vehicle& front = a.pos.x < b.pos.x ? b : a;
    return rear.velocity > front.velocity;  // pair is closing
  }
  return false;
}

}  // namespace

CandidateGraph build_candidates(const std::vector<Vehicle>& nvs,
                                const std::map<int, SequentialTask>& tasks,
                                const std::vector<Vehicle>& ivs, const ChannelParams& params) {
  CandidateGraph graph;
  graph.nv_ids.reserve(nvs.size());
  graph.iv_ids.reserve(ivs.size());
  for (const auto& iv : ivs) graph.iv_ids.push_back(iv.id);
  std::sort(graph.iv_ids.begin(), graph.iv_ids.end());

  std::vector<const Vehicle*> ivs_by_id;
  ivs_by_id.reserve(ivs.size());
  for (const auto& iv : ivs) ivs_by_id.push_back(&iv);
  std::sort(ivs_by_id.begin(), ivs_by_id.end(),
            [](const Vehicle* a, const Vehicle* b) { return a->id < b->id; });

  for (const auto& nv : nvs) {
    graph.nv_ids.push_back(nv.id);
    auto task_it = tasks.find(nv.id);
    if (task_it == tasks.end()) {
      throw ConfigError("NV " + std::to_string(nv.id) + " has no task");
    }
    const SequentialTask& task = task_it->second;
    const double total = task.total_workload();
    std::vector<int> candidates;
    for (const Vehicle* iv : ivs_by_id) {
      if (!within_v2v_range(nv, *iv, params.d_v2v_max)) continue;
      // IV computing resource screen on the whole task.
      if (!(total / iv->max_cpu < task.deadline)) continue;
      candidates.push_back(iv->id);
    }
    graph.edges[nv.id] = std::move(candidates);
  }
  std::sort(graph.nv_ids.begin(), graph.nv_ids.end());
  return graph;
}

namespace {

struct Augmenter {
  const CandidateGraph& graph;
  std::unordered_map<int, int> iv_match;  // iv id -> nv id
  std::unordered_map<int, int> nv_match;  // nv id -> iv id
  std::unordered_map<int, int> visited;   // iv id -> pass stamp
  int stamp = 0;

  explicit Augmenter(const CandidateGraph& g) : graph(g) {}

  bool try_augment(int nv) {
    auto it = graph.edges.find(nv);
    if (it == graph.edges.end()) return false;
    for (int iv : it->second) {
      if (visited[iv] == stamp) continue;
      visited[iv] = stamp;
      auto owner = iv_match.find(iv);
      if (owner == iv_match.end() || try_augment(owner->second)) {
        iv_match[iv] = nv;
        nv_match[nv] = iv;
        return true;
      }
    }
    return false;
  }
};

}  // namespace

Matching max_match(const CandidateGraph& graph) {
  Augmenter aug(graph);
  for (int nv : graph.nv_ids) {
    ++aug.stamp;
    aug.try_augment(nv);
  }
  Matching result;
  for (int nv : graph.nv_ids) {
    auto it = aug.nv_match.find(nv);
    if (it != aug.nv_match.end()) {
      result.pairs.emplace_back(nv, it->second);
    } else {
      result.unmatched_nvs.push_back(nv);
    }
  }
  return result;
}

void promote_matched(std::vector<Vehicle>& vehicles, const Matching& matching) {
  for (const auto& [nv, iv] : matching.pairs) {
    for (auto& v : vehicles) {
      if (v.id == iv) v.role = Role::HV;
    }
  }
}

}  // namespace v2xmec::matching
