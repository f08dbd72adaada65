// Comparison policies sharing the solver and validator infrastructure.
#pragma once

#include <cstdint>
#include <string>

#include "v2xmec/model.hpp"
#include "v2xmec/tier1.hpp"
#include "v2xmec/tier2.hpp"

namespace v2xmec::baselines {

enum class PolicyId {
  FOO,              // full offload, optimized frequencies and delay
  POM,              // NV keeps the first half of the subtasks, both at max frequency
  FOM,              // full offload at max HV frequency
  BFM,              // back-and-forth ownership matched to the capacity ratio, max frequency
  T2_EQUAL_EQUAL,   // equal bandwidth shares, equal subtask blocks per RSU
  T2_EQUAL_RANDOM,  // equal bandwidth shares, random split vectors
};

std::string to_string(PolicyId policy);
PolicyId policy_from_string(const std::string& name);

/// Vehicle-tier baseline for one matched pair.  Fixed-frequency policies
/// spend the whole residual deadline on transmission (transmit energy is
/// decreasing in the delay, so this is the cheapest choice available to
/// them).  Raises InfeasibleError when the policy cannot meet the deadline.
tier1::Tier1Plan run_tier1_baseline(PolicyId policy, const Vehicle& nv, const Vehicle& hv,
                                    const SequentialTask& task, const ChannelParams& params);

/// RSU-tier baseline: every uplink gets an equal bandwidth share (re-divided
/// over the NVs actually served) and splits are fixed by the policy; delay
/// and frequencies are still optimized per NV.  The random variant draws its
/// split vectors from the given seed.
tier2::Tier2Plan run_tier2_baseline(PolicyId policy, const tier2::Instance& instance,
                                    std::uint64_t seed, const tier2::SolveOptions& options = {});

/// Contiguous equal-count split: the first (M mod R) RSUs take one extra
/// subtask.
tier2::SplitVector equal_count_split(int subtask_count, int rsu_count);

}  // namespace v2xmec::baselines
