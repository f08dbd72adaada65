// NV-HV matching: candidate identification plus maximum bipartite matching.
#pragma once

#include <map>
#include <utility>
#include <vector>

#include "v2xmec/model.hpp"

namespace v2xmec::matching {

/// Bipartite candidate graph between needing vehicles and idle vehicles.
struct CandidateGraph {
  std::vector<int> nv_ids;
  std::vector<int> iv_ids;
  std::map<int, std::vector<int>> edges;  // nv id -> sorted candidate iv ids
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // (nv id, iv id)
  std::vector<int> unmatched_nvs;
};

/// Two vehicles at distance exactly d_v2v_max compare equal within this band.
inline constexpr double kDistanceEps = 1e-6;

/// Builds the candidate graph.  Edge (n, i) exists iff both hold:
///  - the pair is within V2V range: dist < d_v2v_max, or dist == d_v2v_max
///    (within kDistanceEps) while the rear vehicle (smaller x) is strictly
///    faster than the front one, i.e. the pair is closing;
///  - the IV at full frequency finishes the whole task strictly inside the
///    deadline.
CandidateGraph build_candidates(const std::vector<Vehicle>& nvs,
                                const std::map<int, SequentialTask>& tasks,
                                const std::vector<Vehicle>& ivs, const ChannelParams& params);

/// Maximum-cardinality matching by augmenting paths.  Deterministic: NVs are
/// processed in ascending id, and each augmenting search scans candidate IVs
/// in ascending id.
Matching max_match(const CandidateGraph& graph);

/// Flips the role of every matched IV to HV.
void promote_matched(std::vector<Vehicle>& vehicles, const Matching& matching);

}  // namespace v2xmec::matching
