// RSU-tier solver: unmatched NVs upload their whole task to the first RSU,
// which computes a prefix of the subtasks and forwards intermediate data down
// the wired RSU chain.  Jointly optimized per NV: the RSU split points, the
// V2I transmission delay, the uplink bandwidth share, and per-subtask CPU
// frequencies; bandwidth couples the NVs through its shared total.
//
// The continuous problem is solved by alternating two closed-form steps: per
// NV, a deadline multiplier pins delay and frequencies (bisection); then a
// global multiplier reallocates bandwidth so the total is exactly exhausted
// (a monotone zero search).  Subchannel counts are then recovered by
// searching the integer points adjacent to the continuous optimum, and the
// split points by per-NV exhaustive sweeps.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "v2xmec/model.hpp"

namespace v2xmec::tier2 {

struct Instance {
  std::vector<Vehicle> nvs;
  std::map<int, SequentialTask> tasks;
  std::vector<Rsu> rsus;          // ordered along +x; rsus[0] is the serving RSU
  std::map<int, double> s_n;      // meters already traveled inside the serving range
  ChannelParams params;

  void validate() const;
};

/// Split points m_1..m_R: RSU r computes subtasks [m_r, m_{r+1}-1] with the
/// implicit m_{R+1} = M+1.  m_1 is pinned to 1 (every subtask runs on some
/// RSU) and the vector is nondecreasing with entries in [1, M+1].
using SplitVector = std::vector<int>;

struct NvPlan {
  int nv_id = -1;
  SplitVector split;
  double tau_v2i = 0.0;     // uplink transmission delay, seconds
  double bandwidth = 0.0;   // continuous uplink bandwidth, Hz
  int subchannels = 0;      // integer allocation; 0 while still continuous
  std::vector<double> freqs;  // per-subtask CPU frequency, Hz
  double lambda = 0.0;      // per-NV deadline multiplier
  bool theta_active = false;  // mobility budget clamps the uplink delay
  bool alpha_active = false;  // tau_max clamps the uplink delay
  bool eta_active = false;    // tau == 0 (zero upload bytes)
  double transmit_energy = 0.0;
  double wired_energy = 0.0;
  double rsu_compute_energy = 0.0;
  double weighted_energy = 0.0;
  double total_delay = 0.0;  // setup + uplink + compute + wired
  int bisect_iterations = 0;
};

struct Failure {
  int nv_id = -1;
  std::string reason;
};

struct Tier2Plan {
  std::vector<NvPlan> nvs;  // ascending nv id
  std::vector<Failure> failures;
  double xi = 0.0;  // bandwidth multiplier at the last allocation step
  int outer_iterations = 0;
  double final_residual = 0.0;              // last max relative change
  std::vector<double> objective_trace;      // objective after each outer step
  double objective() const;
};

struct SolveOptions {
  double convergence_rel = 1e-6;
  int max_outer_iterations = 400;
  int max_split_sweeps = 30;
  // When set, per-NV frequency caps shrink to F_r / (NVs computing on RSU r)
  // so the aggregate per-RSU budget holds by construction.
  bool repair_aggregate_compute = false;
  // solve() ends with the integer subchannel step unless cleared.
  bool discretize = true;
};

inline constexpr double kDeadlineRelTol = 1e-6;
inline constexpr double kBandwidthRelTol = 1e-9;

/// All nondecreasing split vectors with m_1 = 1; their count is
/// C(M + R - 1, R - 1).
std::vector<SplitVector> enumerate_splits(int subtask_count, int rsu_count);

/// Whether one NV can meet its deadline and mobility window under this split.
/// With bandwidth > 0 the delay solve itself is attempted at that share,
/// which additionally screens splits whose residual transmission window is
/// too small to be energy-representable; solvability is monotone in the
/// share, so a pass holds for any larger allocation.
bool split_feasible(const Instance& instance, int nv_id, const SplitVector& split,
                    double bandwidth = 0.0, const SolveOptions& options = {});

/// Evenly loaded split heuristic: split points chosen so each RSU's share of
/// the total workload is as close to uniform as the subtask boundaries allow.
SplitVector balanced_split(const SequentialTask& task, int rsu_count);

/// Alternating optimization of (delay, frequencies) and bandwidth under fixed
/// splits; bandwidth starts from an equal share.  NVs that cannot meet their
/// constraints are reported in failures and excluded from the allocation.
Tier2Plan solve_continuous(const Instance& instance, const std::map<int, SplitVector>& splits,
                           const SolveOptions& options = {});

/// Per-NV deadline solve with splits and bandwidths both pinned (no
/// reallocation step); used by the equal-allocation baselines.
Tier2Plan solve_fixed_bandwidth(const Instance& instance,
                                const std::map<int, SplitVector>& splits,
                                const std::map<int, double>& bandwidth,
                                const SolveOptions& options = {});

/// Rounds the continuous bandwidths to subchannel counts: enumerates the
/// floor/ceil combinations summing to the subchannel budget (every NV keeps
/// at least one subchannel), re-runs the per-NV delay solve for each
/// candidate, and keeps the cheapest.  Bandwidth is not re-balanced.
Tier2Plan discretize_subchannels(const Instance& instance, const Tier2Plan& plan,
                                 const SolveOptions& options = {});

/// Full solve: balanced initial splits, then alternating (per-NV split sweep
/// | continuous re-solve) until splits stop changing, then one final
/// discretization.
Tier2Plan solve(const Instance& instance, const SolveOptions& options = {});

struct ConstraintReport {
  struct Entry {
    std::string constraint;
    int entity = -1;  // nv id or rsu id, -1 for global
    bool pass = false;
    double residual = 0.0;  // positive means violation
  };
  std::vector<Entry> entries;
  bool per_nv_ok = false;      // everything except the aggregate compute budget
  bool aggregate_ok = false;   // per-RSU sum of allocated frequencies
};

/// Checks a plan against every constraint: split shape, deadline, mobility
/// window, delay box, subchannel budget, frequency boxes, and the aggregate
/// per-RSU frequency budget (reported separately, since the per-NV closed
/// form only caps individual allocations).  RSUs with no assigned subtasks
/// must carry zero compute terms.
ConstraintReport validate(const Tier2Plan& plan, const Instance& instance);

}  // namespace v2xmec::tier2
