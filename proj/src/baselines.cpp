#include "v2xmec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "v2xmec/errors.hpp"
#include "v2xmec/rng.hpp"

namespace v2xmec::baselines {

std::string to_string(PolicyId policy) {
  switch (policy) {
    case PolicyId::FOO: return "foo";
    case PolicyId::POM: return "pom";
    case PolicyId::FOM: return "fom";
    case PolicyId::BFM: return "bfm";
    case PolicyId::T2_EQUAL_EQUAL: return "t2-equal-equal";
    case PolicyId::T2_EQUAL_RANDOM: return "t2-equal-random";
  }
  throw ConfigError("unknown policy id");
}

PolicyId policy_from_string(const std::string& name) {
  if (name == "foo") return PolicyId::FOO;
  if (name == "pom") return PolicyId::POM;
  if (name == "fom") return PolicyId::FOM;
  if (name == "bfm") return PolicyId::BFM;
  if (name == "t2-equal-equal") return PolicyId::T2_EQUAL_EQUAL;
  if (name == "t2-equal-random") return PolicyId::T2_EQUAL_RANDOM;
  throw ConfigError("unknown policy: " + name);
}

namespace {

// Fixed-frequency plan with a given per-subtask ownership (false = NV).
// Every owner runs flat out; the whole residual deadline goes to the V2V
// transfers, split across them in proportion to their bit counts, which for a
// single shared link makes the total transfer energy equal the single-shot
// formula on the summed bits.
tier1::Tier1Plan fixed_frequency_plan(const Vehicle& nv, const Vehicle& hv,
                                      const SequentialTask& task,
                                      const std::vector<bool>& hv_owned, int split_label,
                                      const ChannelParams& params) {
  const int m_count = task.size();
  tier1::Tier1Plan plan;
  plan.nv_id = nv.id;
  plan.hv_id = hv.id;
  plan.split = split_label;
  plan.hv_owned = hv_owned;
  plan.freqs.resize(static_cast<size_t>(m_count));
  plan.freq_at_cap.assign(static_cast<size_t>(m_count), true);

  double compute_delay = 0.0;
  for (int m = 1; m <= m_count; ++m) {
    const size_t i = static_cast<size_t>(m - 1);
    const bool on_hv = hv_owned[i];
    const double f = on_hv ? hv.max_cpu : nv.max_cpu;
    const double kappa = on_hv ? hv.kappa : nv.kappa;
    plan.freqs[i] = f;
    compute_delay += task.subtasks[i].workload / f;
    const double e = compute_energy(kappa, task.subtasks[i].workload, f);
    if (on_hv) {
      plan.hv_compute_energy += e;
    } else {
      plan.nv_compute_energy += e;
    }
  }

  double transfer_bits = 0.0;
  bool prev_on_hv = false;  // the task input starts on the NV
  for (int m = 1; m <= m_count; ++m) {
    const bool on_hv = hv_owned[static_cast<size_t>(m - 1)];
    if (on_hv != prev_on_hv) transfer_bits += task.bits_into(m);
    prev_on_hv = on_hv;
  }

  const double residual = task.deadline - compute_delay;
  if (transfer_bits > 0.0) {
    if (!(residual > 0.0)) {
      throw InfeasibleError("pair (" + std::to_string(nv.id) + "," + std::to_string(hv.id) +
                            "): full-frequency compute leaves no time to transmit");
    }
    plan.tau_v2v = residual;
    const double gain = v2v_gain(euclidean(nv.pos, hv.pos), params.v2v_fading_for(nv.id));
    try {
      plan.nv_transmit_energy =
          transmit_energy(transfer_bits, residual, params.b_v2v, gain, params.noise_density);
    } catch (const NumericOverflowError&) {
      throw InfeasibleError("pair (" + std::to_string(nv.id) + "," + std::to_string(hv.id) +
                            "): residual transfer window is too small for the data");
    }
  } else {
    if (!(compute_delay <= task.deadline)) {
      throw InfeasibleError("pair (" + std::to_string(nv.id) + "," + std::to_string(hv.id) +
                            "): full-frequency compute exceeds the deadline");
    }
    plan.tau_v2v = 0.0;
    plan.eta_active = true;
  }
  plan.total_delay = compute_delay + plan.tau_v2v;
  plan.weighted_energy = nv.weight * (plan.nv_transmit_energy + plan.nv_compute_energy) +
                         hv.weight * plan.hv_compute_energy;
  return plan;
}

std::vector<bool> prefix_ownership(int m_count, int split) {
  std::vector<bool> hv_owned(static_cast<size_t>(m_count), false);
  for (int m = split; m <= m_count; ++m) hv_owned[static_cast<size_t>(m - 1)] = true;
  return hv_owned;
}

// NV keeps the first ceil(M/2) subtasks; for M == 1 this collapses to a full
// offload so the HV still has a subtask to run.
int pom_split(int m_count) {
  return std::min((m_count + 1) / 2 + 1, m_count);
}

std::vector<bool> bfm_ownership(const Vehicle& nv, const Vehicle& hv, const SequentialTask& task) {
  const int m_count = task.size();
  const double total = task.total_workload();
  const double target_nv_share = nv.max_cpu / (nv.max_cpu + hv.max_cpu);
  std::vector<bool> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned long mask = 0; mask < (1UL << m_count); ++mask) {
    double nv_load = 0.0;
    for (int m = 1; m <= m_count; ++m) {
      if (!(mask & (1UL << (m - 1)))) nv_load += task.subtasks[static_cast<size_t>(m - 1)].workload;
    }
    const double dist = std::abs(nv_load / total - target_nv_share);
    if (dist < best_dist) {
      best_dist = dist;
      best.assign(static_cast<size_t>(m_count), false);
      for (int m = 1; m <= m_count; ++m) {
        best[static_cast<size_t>(m - 1)] = (mask & (1UL << (m - 1))) != 0;
      }
    }
  }
  return best;
}

}  // namespace

tier1::Tier1Plan run_tier1_baseline(PolicyId policy, const Vehicle& nv, const Vehicle& hv,
                                    const SequentialTask& task, const ChannelParams& params) {
  task.validate();
  const int m_count = task.size();
  switch (policy) {
    case PolicyId::FOO:
      return tier1::solve_fixed_split(nv, hv, task, 1, params);
    case PolicyId::FOM:
      return fixed_frequency_plan(nv, hv, task, prefix_ownership(m_count, 1), 1, params);
    case PolicyId::POM: {
      const int split = pom_split(m_count);
      return fixed_frequency_plan(nv, hv, task, prefix_ownership(m_count, split), split, params);
    }
    case PolicyId::BFM: {
      const auto ownership = bfm_ownership(nv, hv, task);
      int first_hv = m_count;  // label only; ownership drives validation
      for (int m = 1; m <= m_count; ++m) {
        if (ownership[static_cast<size_t>(m - 1)]) {
          first_hv = m;
          break;
        }
      }
      return fixed_frequency_plan(nv, hv, task, ownership, first_hv, params);
    }
    default:
      throw ConfigError("policy " + to_string(policy) + " is not a vehicle-tier baseline");
  }
}

tier2::SplitVector equal_count_split(int subtask_count, int rsu_count) {
  tier2::SplitVector split(static_cast<size_t>(rsu_count), 1);
  const int base = subtask_count / rsu_count;
  const int extra = subtask_count % rsu_count;
  int next = 1;
  for (int r = 0; r < rsu_count; ++r) {
    split[static_cast<size_t>(r)] = next;
    next += base + (r < extra ? 1 : 0);
  }
  return split;
}

tier2::Tier2Plan run_tier2_baseline(PolicyId policy, const tier2::Instance& instance,
                                    std::uint64_t seed, const tier2::SolveOptions& options) {
  if (policy != PolicyId::T2_EQUAL_EQUAL && policy != PolicyId::T2_EQUAL_RANDOM) {
    throw ConfigError("policy " + to_string(policy) + " is not an RSU-tier baseline");
  }
  instance.validate();
  const int r_count = static_cast<int>(instance.rsus.size());

  std::map<int, tier2::SplitVector> splits;
  auto engine = rng::make_engine(seed, rng::Stream::baseline);
  std::vector<int> ids;
  for (const auto& nv : instance.nvs) ids.push_back(nv.id);
  std::sort(ids.begin(), ids.end());
  for (int id : ids) {
    const SequentialTask& task = instance.tasks.at(id);
    if (policy == PolicyId::T2_EQUAL_EQUAL) {
      splits[id] = equal_count_split(task.size(), r_count);
    } else {
      // Draw among the assignments the NV can actually run at its equal
      // share; an unservable assignment is no assignment, and dropping the
      // NV would hand the survivors extra bandwidth.
      const double share = instance.params.b_total / static_cast<double>(ids.size());
      std::vector<tier2::SplitVector> feasible;
      for (const auto& split : tier2::enumerate_splits(task.size(), r_count)) {
        if (tier2::split_feasible(instance, id, split, share, options)) feasible.push_back(split);
      }
      if (feasible.empty()) {
        // No servable assignment at all: keep a placeholder so the solve
        // records the failure.
        splits[id] = tier2::SplitVector(static_cast<size_t>(r_count), 1);
        continue;
      }
      splits[id] =
          feasible[static_cast<size_t>(rng::uniform_int(engine, static_cast<int>(feasible.size())))];
    }
  }

  // Equal bandwidth over the NVs actually served: failures shrink the set, so
  // re-divide until it stabilizes.
  std::vector<int> served = ids;
  tier2::Tier2Plan plan;
  for (int round = 0; round < static_cast<int>(ids.size()) + 1; ++round) {
    if (served.empty()) break;
    std::map<int, double> bandwidth;
    for (int id : served) {
      bandwidth[id] = instance.params.b_total / static_cast<double>(served.size());
    }
    tier2::Instance subset = instance;
    subset.nvs.clear();
    for (const auto& nv : instance.nvs) {
      if (std::find(served.begin(), served.end(), nv.id) != served.end()) {
        subset.nvs.push_back(nv);
      }
    }
    plan = tier2::solve_fixed_bandwidth(subset, splits, bandwidth, options);
    if (plan.failures.empty()) break;
    for (const auto& f : plan.failures) {
      served.erase(std::remove(served.begin(), served.end(), f.nv_id), served.end());
    }
  }
  // Report every NV that ended up unserved.
  tier2::Tier2Plan result = plan;
  result.failures.clear();
  for (int id : ids) {
    bool ok = false;
    for (const auto& p : result.nvs) ok = ok || p.nv_id == id;
    if (!ok) result.failures.push_back({id, "infeasible under the equal-allocation baseline"});
  }
  return result;
}

}  // namespace v2xmec::baselines
