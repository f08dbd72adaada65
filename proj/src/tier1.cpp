#include "v2xmec/tier1.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "v2xmec/errors.hpp"
#include "v2xmec/numerics.hpp"

namespace v2xmec::tier1 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Multiplier searches need far more headroom than the general-purpose
// bracket default: at sub-MHz bandwidths the exponential energy curve pushes
// the deadline multiplier toward ~1e220 while the optimum stays finite in
// double precision.
constexpr double kMultiplierCap = 1e290;

struct PairContext {
  const Vehicle& nv;
  const Vehicle& hv;
  const SequentialTask& task;
  const ChannelParams& params;
  int split;
  double bits;  // data shipped to the HV
  double gain;  // V2V channel gain including fading

  double device_weight(int m) const { return m < split ? nv.weight : hv.weight; }
  double device_kappa(int m) const { return m < split ? nv.kappa : hv.kappa; }
  double device_cap(int m) const { return m < split ? nv.max_cpu : hv.max_cpu; }
};

// Frequency stationarity rule: interior value cbrt(lambda / (2 w kappa)),
// clipped at the device cap.
double kkt_frequency(double lambda, double weight, double kappa, double cap) {
  return std::min(std::cbrt(lambda / (2.0 * weight * kappa)), cap);
}

// Optimal transmission delay for a given deadline multiplier.  Infinite at
// lambda = 0 (the Lambert W argument sits exactly on the branch point).
double kkt_transmit_delay(double bits, double bandwidth, double gain, double weight, double noise,
                          double lambda) {
  const double arg = (gain * lambda / (weight * noise * bandwidth) - 1.0) / std::numbers::e;
  const double denom = bandwidth * (numerics::lambert_w0(arg) + 1.0);
  if (!(denom > 0.0)) return kInf;
  return bits / denom;
}

double total_delay_at(const PairContext& ctx, double lambda) {
  double delay = 0.0;
  if (ctx.bits > 0.0) {
    delay = kkt_transmit_delay(ctx.bits, ctx.params.b_v2v, ctx.gain, ctx.nv.weight,
                               ctx.params.noise_density, lambda);
    if (!std::isfinite(delay)) return kInf;
  }
  for (int m = 1; m <= ctx.task.size(); ++m) {
    const double f = kkt_frequency(lambda, ctx.device_weight(m), ctx.device_kappa(m),
                                   ctx.device_cap(m));
    if (!(f > 0.0)) return kInf;
    delay += ctx.task.subtasks[static_cast<size_t>(m - 1)].workload / f;
  }
  return delay;
}

Tier1Plan plan_at_lambda(const PairContext& ctx, double lambda, int iterations) {
  Tier1Plan plan;
  plan.nv_id = ctx.nv.id;
  plan.hv_id = ctx.hv.id;
  plan.split = ctx.split;
  plan.lambda = lambda;
  plan.bisect_iterations = iterations;

  const int m_count = ctx.task.size();
  plan.freqs.resize(static_cast<size_t>(m_count));
  plan.freq_at_cap.resize(static_cast<size_t>(m_count));
  double compute = 0.0;
  for (int m = 1; m <= m_count; ++m) {
    const double cap = ctx.device_cap(m);
    const double f = kkt_frequency(lambda, ctx.device_weight(m), ctx.device_kappa(m), cap);
    plan.freqs[static_cast<size_t>(m - 1)] = f;
    plan.freq_at_cap[static_cast<size_t>(m - 1)] = f >= cap;
    const double c = ctx.task.subtasks[static_cast<size_t>(m - 1)].workload;
    compute += c / f;
    const double e = compute_energy(ctx.device_kappa(m), c, f);
    if (m < ctx.split) {
      plan.nv_compute_energy += e;
    } else {
      plan.hv_compute_energy += e;
    }
  }

  if (ctx.bits > 0.0) {
    plan.tau_v2v = kkt_transmit_delay(ctx.bits, ctx.params.b_v2v, ctx.gain, ctx.nv.weight,
                                      ctx.params.noise_density, lambda);
    plan.nv_transmit_energy = transmit_energy(ctx.bits, plan.tau_v2v, ctx.params.b_v2v, ctx.gain,
                                              ctx.params.noise_density);
  } else {
    plan.tau_v2v = 0.0;
    plan.eta_active = true;
  }
  plan.total_delay = plan.tau_v2v + compute;
  plan.weighted_energy = ctx.nv.weight * (plan.nv_transmit_energy + plan.nv_compute_energy) +
                         ctx.hv.weight * plan.hv_compute_energy;
  return plan;
}

}  // namespace

bool feasible(const Vehicle& nv, const Vehicle& hv, const SequentialTask& task, int split) {
  if (split < 1 || split > task.size()) return false;
  double min_delay = 0.0;
  for (int m = 1; m <= task.size(); ++m) {
    const double cap = m < split ? nv.max_cpu : hv.max_cpu;
    min_delay += task.subtasks[static_cast<size_t>(m - 1)].workload / cap;
  }
  return min_delay < task.deadline;
}

Tier1Plan solve_fixed_split(const Vehicle& nv, const Vehicle& hv, const SequentialTask& task,
                            int split, const ChannelParams& params) {
  task.validate();
  if (split < 1 || split > task.size()) {
    throw DomainError("solve_fixed_split: split out of range");
  }
  if (!feasible(nv, hv, task, split)) {
    throw InfeasibleError("pair (" + std::to_string(nv.id) + "," + std::to_string(hv.id) +
                          ") split " + std::to_string(split) +
                          ": full-frequency compute delay exceeds the deadline");
  }

  PairContext ctx{nv, hv, task, params, split, task.bits_into(split),
                  v2v_gain(euclidean(nv.pos, hv.pos), params.v2v_fading_for(nv.id))};

  const double deadline = task.deadline;
  // Deadline slack shifted by half the tightness band: bisecting this to
  // +-band/2 leaves the returned multiplier with slack in [0, band], i.e.
  // feasible and tight.  Slack is monotone increasing in lambda, from -inf
  // (zero frequencies) toward deadline - min_compute_delay > 0.
  // Converge well below the documented tightness guarantee so downstream
  // objective comparisons see bisection noise orders of magnitude under it.
  const double band = 1e-4 * kDeadlineRelTol * deadline;
  auto shifted_slack = [&](double lambda) {
    return deadline - 0.5 * band - total_delay_at(ctx, lambda);
  };

  numerics::BracketedRoot bracket;
  try {
    bracket = numerics::expand_upper_bracket(shifted_slack, 0.0, kMultiplierCap);
  } catch (const NumericOverflowError& e) {
    throw InfeasibleError("pair (" + std::to_string(nv.id) + "," + std::to_string(hv.id) +
                          ") split " + std::to_string(split) +
                          ": multiplier bracket overflow (" + e.what() + ")");
  }
  bracket.tolerance = 1e-12 * std::max(1.0, bracket.hi);
  bracket.max_iters = 400;
  const auto result = numerics::bisect_root(shifted_slack, bracket, 0.5 * band);
  return plan_at_lambda(ctx, result.root, result.iterations);
}

Tier1Plan solve(const Vehicle& nv, const Vehicle& hv, const SequentialTask& task,
                const ChannelParams& params) {
  task.validate();
  Tier1Plan best;
  bool found = false;
  std::string reasons;
  for (int split = 1; split <= task.size(); ++split) {
    if (!feasible(nv, hv, task, split)) continue;
    try {
      Tier1Plan plan = solve_fixed_split(nv, hv, task, split, params);
      if (!found || plan.weighted_energy < best.weighted_energy) {
        best = std::move(plan);
        found = true;
      }
    } catch (const InfeasibleError& e) {
      reasons += std::string(reasons.empty() ? "" : "; ") + e.what();
    }
  }
  if (!found) {
    throw InfeasibleError("pair (" + std::to_string(nv.id) + "," + std::to_string(hv.id) +
                          "): no feasible split" + (reasons.empty() ? "" : " (" + reasons + ")"));
  }
  return best;
}

Report validate(const Tier1Plan& plan, const Vehicle& nv, const Vehicle& hv,
                const SequentialTask& task, const ChannelParams& params) {
  (void)params;
  Report report;
  const int m_count = task.size();
  auto add = [&](const std::string& name, bool pass, double residual) {
    report.checks.push_back({name, pass, residual});
  };
  auto on_hv = [&](int m) {
    if (!plan.hv_owned.empty()) return static_cast<bool>(plan.hv_owned[static_cast<size_t>(m - 1)]);
    return m >= plan.split;
  };

  add("split-range", plan.split >= 1 && plan.split <= m_count, 0.0);

  double delay = plan.tau_v2v;
  for (int m = 1; m <= m_count; ++m) {
    delay += task.subtasks[static_cast<size_t>(m - 1)].workload /
             plan.freqs[static_cast<size_t>(m - 1)];
  }
  add("deadline", delay <= task.deadline + 1e-9, delay - task.deadline);

  add("tau-nonnegative", plan.tau_v2v >= 0.0, -plan.tau_v2v);

  bool nv_box = true, hv_box = true;
  double nv_res = 0.0, hv_res = 0.0;
  for (int m = 1; m <= m_count; ++m) {
    const double f = plan.freqs[static_cast<size_t>(m - 1)];
    const double cap = on_hv(m) ? hv.max_cpu : nv.max_cpu;
    const bool ok = f > 0.0 && f <= cap * (1.0 + 1e-12);
    const double res = std::max(f - cap, f > 0.0 ? 0.0 : -f);
    if (on_hv(m)) {
      hv_box = hv_box && ok;
      hv_res = std::max(hv_res, res);
    } else {
      nv_box = nv_box && ok;
      nv_res = std::max(nv_res, res);
    }
  }
  add("nv-frequency-box", nv_box, nv_res);
  add("hv-frequency-box", hv_box, hv_res);

  report.ok = true;
  for (const auto& c : report.checks) report.ok = report.ok && c.pass;
  return report;
}

}  // namespace v2xmec::tier1
