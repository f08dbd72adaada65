// Vehicle-tier solver: for one NV-HV pair, picks the split index (first
// subtask executed on the HV) and jointly optimizes the V2V transmission
// delay and per-subtask CPU frequencies to minimize weighted energy under the
// task deadline.
//
// For a fixed split the problem is convex; the stationarity conditions give
// the transmission delay in closed form through the Lambert W function and
// each frequency as min(cbrt(lambda / (2 w kappa)), F).  The deadline
// multiplier lambda is pinned by making the deadline tight, via bisection.
// The split is then chosen by exhaustive search.
#pragma once

#include <string>
#include <vector>

#include "v2xmec/model.hpp"

namespace v2xmec::tier1 {

struct Tier1Plan {
  int nv_id = -1;
  int hv_id = -1;
  int split = 1;          // first subtask computed on the HV, in [1, M]
  // Non-prefix assignments (the back-and-forth baseline) list ownership per
  // subtask here; empty means ownership follows the split.
  std::vector<bool> hv_owned;
  double tau_v2v = 0.0;   // V2V transmission delay, seconds
  std::vector<double> freqs;  // per-subtask CPU frequency, Hz
  double lambda = 0.0;    // deadline multiplier at the optimum
  bool eta_active = false;          // tau == 0 (only in the zero-bits case)
  std::vector<bool> freq_at_cap;    // per subtask: frequency pinned at F
  double nv_transmit_energy = 0.0;  // Joules
  double nv_compute_energy = 0.0;
  double hv_compute_energy = 0.0;
  double weighted_energy = 0.0;
  double total_delay = 0.0;
  int bisect_iterations = 0;
};

/// Relative deadline tightness achieved by the solver.
inline constexpr double kDeadlineRelTol = 1e-6;

/// True iff the split can meet the deadline at all, i.e. the compute delay
/// with both devices at full frequency is strictly below it.
bool feasible(const Vehicle& nv, const Vehicle& hv, const SequentialTask& task, int split);

/// Solves the convex subproblem for a fixed split.  Requires feasible(...).
/// Raises InfeasibleError when the deadline cannot be met (including when the
/// multiplier bracket overflows its cap).
Tier1Plan solve_fixed_split(const Vehicle& nv, const Vehicle& hv, const SequentialTask& task,
                            int split, const ChannelParams& params);

/// Exhaustive search over splits; returns the minimum weighted-energy plan,
/// ties broken toward the smaller split.  Raises InfeasibleError when no
/// split is feasible.
Tier1Plan solve(const Vehicle& nv, const Vehicle& hv, const SequentialTask& task,
                const ChannelParams& params);

struct ConstraintCheck {
  std::string name;
  bool pass = false;
  double residual = 0.0;  // positive means violation
};

struct Report {
  std::vector<ConstraintCheck> checks;
  bool ok = false;
};

/// Checks a plan against every constraint of the pair problem: split range,
/// deadline, nonnegative delay, and the per-device frequency boxes.
Report validate(const Tier1Plan& plan, const Vehicle& nv, const Vehicle& hv,
                const SequentialTask& task, const ChannelParams& params);

}  // namespace v2xmec::tier1
