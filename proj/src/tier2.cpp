#include "v2xmec/tier2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "v2xmec/errors.hpp"
#include "v2xmec/numerics.hpp"

namespace v2xmec::tier2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Multiplier searches need far more headroom than the general-purpose
// bracket default: at sub-MHz bandwidths the exponential energy curve pushes
// the deadline multiplier toward ~1e220 while the optimum stays finite in
// double precision.
constexpr double kMultiplierCap = 1e290;

double kkt_frequency(double lambda, double weight, double kappa, double cap) {
  return std::min(std::cbrt(lambda / (2.0 * weight * kappa)), cap);
}

double kkt_transmit_delay(double bits, double bandwidth, double gain, double weight, double noise,
                          double lambda) {
  const double arg = (gain * lambda / (weight * noise * bandwidth) - 1.0) / std::numbers::e;
  const double denom = bandwidth * (numerics::lambert_w0(arg) + 1.0);
  if (!(denom > 0.0)) return kInf;
  return bits / denom;
}

int rsu_computing(const SplitVector& split, int m) {
  int r = 0;
  for (int i = 0; i < static_cast<int>(split.size()); ++i) {
    if (split[static_cast<size_t>(i)] <= m) r = i;
  }
  return r;
}

std::map<int, int> count_compute_loads(const Instance& instance,
                                       const std::map<int, SplitVector>& splits) {
  std::map<int, int> load;
  for (const auto& [nv_id, split] : splits) {
    const auto& task = instance.tasks.at(nv_id);
    std::set<int> used;
    for (int m = 1; m <= task.size(); ++m) used.insert(rsu_computing(split, m));
    for (int r : used) load[r]++;
  }
  return load;
}

enum class ClampSource { none, tau_max, mobility, both };

// Everything about one NV that is fixed once its split vector is chosen.
struct NvContext {
  const Vehicle* nv = nullptr;
  const SequentialTask* task = nullptr;
  SplitVector split;
  std::vector<double> f_cap;      // per subtask frequency cap
  std::vector<double> f_weight;   // per subtask RSU weight
  std::vector<double> f_kappa;    // per subtask RSU kappa
  double upload_bits = 0.0;
  double gain = 0.0;
  double wired_energy = 0.0;           // raw Joules over all hops
  double wired_energy_weighted = 0.0;  // weighted by the sending RSU
  double wired_delay = 0.0;
  double t_eff = 0.0;       // deadline - setup - wired delay
  double tau_clamp = kInf;  // min(tau_max, mobility budget)
  ClampSource clamp_source = ClampSource::none;
  double min_compute = 0.0;
  bool ok = false;
  std::string reason;
};

NvContext build_context(const Instance& instance, const Vehicle& nv, const SequentialTask& task,
                        const SplitVector& split, const std::map<int, int>& compute_load,
                        const SolveOptions& options) {
  NvContext ctx;
  ctx.nv = &nv;
  ctx.task = &task;
  ctx.split = split;
  const int m_count = task.size();
  const int r_count = static_cast<int>(instance.rsus.size());

  ctx.f_cap.resize(static_cast<size_t>(m_count));
  ctx.f_weight.resize(static_cast<size_t>(m_count));
  ctx.f_kappa.resize(static_cast<size_t>(m_count));
  for (int m = 1; m <= m_count; ++m) {
    const int r = rsu_computing(split, m);
    const Rsu& rsu = instance.rsus[static_cast<size_t>(r)];
    double cap = rsu.max_cpu;
    if (options.repair_aggregate_compute) {
      auto it = compute_load.find(r);
      if (it != compute_load.end() && it->second > 0) cap = rsu.max_cpu / it->second;
    }
    const size_t i = static_cast<size_t>(m - 1);
    ctx.f_cap[i] = cap;
    ctx.f_weight[i] = rsu.weight;
    ctx.f_kappa[i] = rsu.kappa;
    ctx.min_compute += task.subtasks[i].workload / cap;
  }

  for (int r = 0; r + 1 < r_count; ++r) {
    const int next_split = split[static_cast<size_t>(r + 1)];
    const double bits = next_split <= m_count ? task.bits_into(next_split) : 0.0;
    const auto hop = wired_transfer(bits, instance.params);
    ctx.wired_energy += hop.energy;
    ctx.wired_energy_weighted += instance.rsus[static_cast<size_t>(r)].weight * hop.energy;
    ctx.wired_delay += hop.delay;
  }

  ctx.upload_bits = task.input_size;
  const Rsu& serving = instance.rsus.front();
  const double dist = v2i_distance(nv.pos, serving, instance.params.v2i_3d_distance);
  ctx.gain = v2i_gain(dist, instance.params.v2i_pathloss_exponent,
                      instance.params.v2i_fading_for(nv.id));

  ctx.t_eff = task.deadline - instance.params.setup_delay - ctx.wired_delay;
  const double s = instance.s_n.at(nv.id);
  const double mobility =
      nv.velocity > 0.0
          ? (serving.service_range - s) / nv.velocity - instance.params.setup_delay
          : kInf;
  const double tau_max = instance.params.tau_max_or(task.deadline);
  ctx.tau_clamp = std::min(tau_max, mobility);
  if (tau_max < mobility) {
    ctx.clamp_source = ClampSource::tau_max;
  } else if (mobility < tau_max) {
    ctx.clamp_source = ClampSource::mobility;
  } else {
    ctx.clamp_source = ClampSource::both;
  }

  if (!(ctx.t_eff > ctx.min_compute)) {
    ctx.reason = "compute plus wired delay exceeds the deadline for this split";
    return ctx;
  }
  if (ctx.upload_bits > 0.0 && !(ctx.tau_clamp > 0.0)) {
    ctx.reason = mobility <= 0.0 ? "NV leaves the serving range before upload can finish"
                                 : "upload delay budget is not positive";
    return ctx;
  }
  ctx.ok = true;
  return ctx;
}

struct InnerResult {
  double tau = 0.0;
  double lambda = 0.0;
  double compute_delay = 0.0;
  std::vector<double> freqs;
  bool clamped = false;
  int iterations = 0;
};

// Per-NV deadline solve at fixed bandwidth: bisects the multiplier until the
// end-to-end delay is tight, with the transmission delay clipped at its cap.
InnerResult solve_inner(const NvContext& ctx, double bandwidth, const ChannelParams& params) {
  const SequentialTask& task = *ctx.task;
  const int m_count = task.size();

  auto tau_at = [&](double lambda) {
    if (ctx.upload_bits <= 0.0) return 0.0;
    const double formula = kkt_transmit_delay(ctx.upload_bits, bandwidth, ctx.gain,
                                              ctx.nv->weight, params.noise_density, lambda);
    return std::min(formula, ctx.tau_clamp);
  };
  auto delay_at = [&](double lambda) {
    double delay = tau_at(lambda);
    if (!std::isfinite(delay)) return kInf;
    for (int m = 1; m <= m_count; ++m) {
      const size_t i = static_cast<size_t>(m - 1);
      const double f = kkt_frequency(lambda, ctx.f_weight[i], ctx.f_kappa[i], ctx.f_cap[i]);
      if (!(f > 0.0)) return kInf;
      delay += task.subtasks[i].workload / f;
    }
    return delay;
  };

  // Converge well below the documented tightness guarantee so the objective
  // trace stays monotone beyond bisection noise.
  const double band = 1e-4 * kDeadlineRelTol * task.deadline;
  auto shifted_slack = [&](double lambda) { return ctx.t_eff - 0.5 * band - delay_at(lambda); };

  numerics::BracketedRoot bracket;
  try {
    bracket = numerics::expand_upper_bracket(shifted_slack, 0.0, kMultiplierCap);
  } catch (const NumericOverflowError& e) {
    throw InfeasibleError("NV " + std::to_string(ctx.nv->id) + ": multiplier bracket overflow (" +
                          e.what() + ")");
  }
  bracket.tolerance = 1e-12 * std::max(1.0, bracket.hi);
  bracket.max_iters = 400;
  const auto result = numerics::bisect_root(shifted_slack, bracket, 0.5 * band);

  InnerResult inner;
  inner.lambda = result.root;
  inner.iterations = result.iterations;
  inner.tau = tau_at(inner.lambda);
  if (ctx.upload_bits > 0.0) {
    const double formula = kkt_transmit_delay(ctx.upload_bits, bandwidth, ctx.gain,
                                              ctx.nv->weight, params.noise_density, inner.lambda);
    inner.clamped = formula > ctx.tau_clamp;
  }
  inner.freqs.resize(static_cast<size_t>(m_count));
  for (int m = 1; m <= m_count; ++m) {
    const size_t i = static_cast<size_t>(m - 1);
    inner.freqs[i] = kkt_frequency(inner.lambda, ctx.f_weight[i], ctx.f_kappa[i], ctx.f_cap[i]);
    inner.compute_delay += task.subtasks[i].workload / inner.freqs[i];
  }
  return inner;
}

NvPlan make_plan(const NvContext& ctx, double bandwidth, const InnerResult& inner,
                 const ChannelParams& params) {
  NvPlan plan;
  plan.nv_id = ctx.nv->id;
  plan.split = ctx.split;
  plan.tau_v2i = inner.tau;
  plan.bandwidth = bandwidth;
  plan.freqs = inner.freqs;
  plan.lambda = inner.lambda;
  plan.bisect_iterations = inner.iterations;
  if (ctx.upload_bits > 0.0) {
    plan.transmit_energy =
        transmit_energy(ctx.upload_bits, inner.tau, bandwidth, ctx.gain, params.noise_density);
    if (inner.clamped) {
      plan.alpha_active =
          ctx.clamp_source == ClampSource::tau_max || ctx.clamp_source == ClampSource::both;
      plan.theta_active =
          ctx.clamp_source == ClampSource::mobility || ctx.clamp_source == ClampSource::both;
    }
  } else {
    plan.eta_active = true;
  }
  plan.wired_energy = ctx.wired_energy;
  double compute_weighted = 0.0;
  for (int m = 1; m <= ctx.task->size(); ++m) {
    const size_t i = static_cast<size_t>(m - 1);
    const double e = compute_energy(ctx.f_kappa[i], ctx.task->subtasks[i].workload, inner.freqs[i]);
    plan.rsu_compute_energy += e;
    compute_weighted += ctx.f_weight[i] * e;
  }
  plan.weighted_energy =
      ctx.nv->weight * plan.transmit_energy + ctx.wired_energy_weighted + compute_weighted;
  plan.total_delay = params.setup_delay + inner.tau + inner.compute_delay + ctx.wired_delay;
  return plan;
}

// Bandwidth share of one NV for a given global multiplier xi, at fixed tau.
double bandwidth_at_xi(const NvContext& ctx, double tau, double xi, const ChannelParams& params) {
  const double arg =
      (xi * ctx.gain / (ctx.nv->weight * params.noise_density * tau) - 1.0) / std::numbers::e;
  const double denom = tau * (numerics::lambert_w0(arg) + 1.0);
  if (!(denom > 0.0)) return kInf;
  return ctx.upload_bits / denom;
}

}  // namespace

void Instance::validate() const {
  if (nvs.empty()) throw ConfigError("tier-2 instance has no NVs");
  if (rsus.empty()) throw ConfigError("tier-2 instance has no RSUs");
  for (size_t r = 1; r < rsus.size(); ++r) {
    if (rsus[r].pos.x < rsus[r - 1].pos.x) throw ConfigError("RSUs must be ordered along +x");
  }
  params.validate();
  const double range = rsus.front().service_range;
  for (const auto& nv : nvs) {
    auto t = tasks.find(nv.id);
    if (t == tasks.end()) throw ConfigError("NV " + std::to_string(nv.id) + " has no task");
    t->second.validate();
    auto s = s_n.find(nv.id);
    if (s == s_n.end()) throw ConfigError("NV " + std::to_string(nv.id) + " has no range offset");
    if (s->second < 0.0 || s->second > range) {
      throw ConfigError("NV " + std::to_string(nv.id) + " range offset outside [0, L]");
    }
  }
}

double Tier2Plan::objective() const {
  double sum = 0.0;
  for (const auto& p : nvs) sum += p.weighted_energy;
  return sum;
}

std::vector<SplitVector> enumerate_splits(int subtask_count, int rsu_count) {
  if (rsu_count < 1) throw DomainError("enumerate_splits: need at least one RSU");
  std::vector<SplitVector> out;
  SplitVector current(static_cast<size_t>(rsu_count), 1);
  if (rsu_count == 1) {
    out.push_back(current);
    return out;
  }
  // Depth-first over nondecreasing tails; position 0 stays pinned at 1.
  auto recurse = [&](auto&& self, int pos) -> void {
    if (pos == rsu_count) {
      out.push_back(current);
      return;
    }
    for (int m = current[static_cast<size_t>(pos - 1)]; m <= subtask_count + 1; ++m) {
      current[static_cast<size_t>(pos)] = m;
      self(self, pos + 1);
    }
  };
  recurse(recurse, 1);
  return out;
}

bool split_feasible(const Instance& instance, int nv_id, const SplitVector& split,
                    double bandwidth, const SolveOptions& options) {
  const Vehicle* nv = nullptr;
  for (const auto& v : instance.nvs) {
    if (v.id == nv_id) nv = &v;
  }
  if (!nv) throw DomainError("split_feasible: unknown NV id");
  const std::map<int, int> no_load;
  const NvContext ctx =
      build_context(instance, *nv, instance.tasks.at(nv_id), split, no_load, options);
  if (!ctx.ok) return false;
  if (bandwidth > 0.0 && ctx.upload_bits > 0.0) {
    try {
      solve_inner(ctx, bandwidth, instance.params);
    } catch (const InfeasibleError&) {
      return false;
    }
  }
  return true;
}

SplitVector balanced_split(const SequentialTask& task, int rsu_count) {
  const int m_count = task.size();
  const double total = task.total_workload();
  SplitVector split(static_cast<size_t>(rsu_count), 1);
  for (int r = 1; r < rsu_count; ++r) {
    const double target = total * r / rsu_count;
    int best_m = split[static_cast<size_t>(r - 1)];
    double best_err = kInf;
    for (int m = split[static_cast<size_t>(r - 1)]; m <= m_count + 1; ++m) {
      const double prefix = m > 1 ? task.workload_between(1, m - 1) : 0.0;
      const double err = std::abs(prefix - target);
      if (err < best_err) {
        best_err = err;
        best_m = m;
      }
    }
    split[static_cast<size_t>(r)] = best_m;
  }
  return split;
}

Tier2Plan solve_continuous(const Instance& instance, const std::map<int, SplitVector>& splits,
                           const SolveOptions& options) {
  instance.validate();
  Tier2Plan plan;

  std::map<int, int> compute_load;
  if (options.repair_aggregate_compute) compute_load = count_compute_loads(instance, splits);

  std::vector<NvContext> served;
  for (const auto& nv : instance.nvs) {
    NvContext ctx = build_context(instance, nv, instance.tasks.at(nv.id), splits.at(nv.id),
                                  compute_load, options);
    if (ctx.ok) {
      served.push_back(std::move(ctx));
    } else {
      plan.failures.push_back({nv.id, ctx.reason});
    }
  }
  std::sort(served.begin(), served.end(),
            [](const NvContext& a, const NvContext& b) { return a.nv->id < b.nv->id; });

  // Alternating loop; NVs that turn out unservable (deadline unreachable even
  // at an astronomic multiplier) are dropped and the allocation restarts.
  const double total_bw = instance.params.b_total;
  std::vector<InnerResult> inner;
  std::vector<double> bandwidth;
  bool restart = true;
  double residual = kInf;
  int iter = 0;
  while (restart) {
    restart = false;
    if (served.empty()) return plan;

    std::vector<size_t> claimants;
    for (size_t i = 0; i < served.size(); ++i) {
      if (served[i].upload_bits > 0.0) claimants.push_back(i);
    }
    bandwidth.assign(served.size(), 0.0);
    for (size_t i : claimants) bandwidth[i] = total_bw / static_cast<double>(claimants.size());
    inner.assign(served.size(), InnerResult{});
    plan.objective_trace.clear();
    std::vector<double> prev_vars;
    residual = kInf;

    for (iter = 1; iter <= options.max_outer_iterations; ++iter) {
      double objective = 0.0;
      try {
        for (size_t i = 0; i < served.size(); ++i) {
          inner[i] = solve_inner(served[i], bandwidth[i], instance.params);
          objective +=
              make_plan(served[i], bandwidth[i], inner[i], instance.params).weighted_energy;
        }
      } catch (const InfeasibleError& e) {
        // Identify and drop the offending NV, then restart the allocation.
        for (size_t i = 0; i < served.size(); ++i) {
          try {
            solve_inner(served[i], bandwidth[i], instance.params);
          } catch (const InfeasibleError&) {
            plan.failures.push_back({served[i].nv->id, e.what()});
            served.erase(served.begin() + static_cast<long>(i));
            break;
          }
        }
        restart = true;
        break;
      }
      plan.objective_trace.push_back(objective);

      std::vector<double> next_bw = bandwidth;
      if (!claimants.empty()) {
        const double band = kBandwidthRelTol * total_bw;
        auto shifted_gap = [&](double xi) {
          double sum = 0.0;
          for (size_t i : claimants) {
            const double b = bandwidth_at_xi(served[i], inner[i].tau, xi, instance.params);
            if (!std::isfinite(b)) return -kInf;
            sum += b;
          }
          return total_bw - 0.5 * band - sum;
        };
        auto bracket = numerics::expand_upper_bracket(shifted_gap, 0.0, kMultiplierCap);
        bracket.tolerance = 1e-15 * std::max(1.0, bracket.hi);
        bracket.max_iters = 400;
        const auto result = numerics::bisect_root(shifted_gap, bracket, 0.5 * band);
        plan.xi = result.root;
        for (size_t i : claimants) {
          next_bw[i] = bandwidth_at_xi(served[i], inner[i].tau, plan.xi, instance.params);
        }
      }

      std::vector<double> vars;
      for (size_t i = 0; i < served.size(); ++i) {
        vars.push_back(inner[i].tau);
        vars.insert(vars.end(), inner[i].freqs.begin(), inner[i].freqs.end());
        vars.push_back(next_bw[i]);
      }
      if (prev_vars.empty()) {
        // First pass: only the bandwidth move is comparable (against the
        // equal-share initialization).
        residual = 0.0;
        for (size_t i = 0; i < served.size(); ++i) {
          residual = std::max(residual, std::abs(next_bw[i] - bandwidth[i]) /
                                            std::max(std::abs(bandwidth[i]), 1.0));
        }
      } else {
        residual = 0.0;
        for (size_t k = 0; k < vars.size(); ++k) {
          residual = std::max(
              residual, std::abs(vars[k] - prev_vars[k]) / std::max(std::abs(prev_vars[k]), 1.0));
        }
      }
      prev_vars = std::move(vars);
      bandwidth = std::move(next_bw);
      if (residual < options.convergence_rel) break;
    }
    if (restart) continue;
    if (residual >= options.convergence_rel) {
      throw NonConvergenceError("tier-2 alternating loop: residual " + std::to_string(residual) +
                                " after " + std::to_string(options.max_outer_iterations) +
                                " iterations");
    }
  }
  plan.outer_iterations = std::min(iter, options.max_outer_iterations);
  plan.final_residual = residual;

  // Consistency pass: re-tighten each deadline against the final bandwidth.
  double objective = 0.0;
  for (size_t i = 0; i < served.size(); ++i) {
    inner[i] = solve_inner(served[i], bandwidth[i], instance.params);
    NvPlan nv_plan = make_plan(served[i], bandwidth[i], inner[i], instance.params);
    objective += nv_plan.weighted_energy;
    plan.nvs.push_back(std::move(nv_plan));
  }
  plan.objective_trace.push_back(objective);
  return plan;
}

Tier2Plan solve_fixed_bandwidth(const Instance& instance,
                                const std::map<int, SplitVector>& splits,
                                const std::map<int, double>& bandwidth,
                                const SolveOptions& options) {
  instance.validate();
  Tier2Plan plan;
  std::map<int, int> compute_load;
  if (options.repair_aggregate_compute) compute_load = count_compute_loads(instance, splits);

  for (const auto& nv : instance.nvs) {
    NvContext ctx = build_context(instance, nv, instance.tasks.at(nv.id), splits.at(nv.id),
                                  compute_load, options);
    if (!ctx.ok) {
      plan.failures.push_back({nv.id, ctx.reason});
      continue;
    }
    const double bw = bandwidth.at(nv.id);
    try {
      const InnerResult inner = solve_inner(ctx, bw, instance.params);
      plan.nvs.push_back(make_plan(ctx, bw, inner, instance.params));
    } catch (const InfeasibleError& e) {
      plan.failures.push_back({nv.id, e.what()});
    }
  }
  std::sort(plan.nvs.begin(), plan.nvs.end(),
            [](const NvPlan& a, const NvPlan& b) { return a.nv_id < b.nv_id; });
  plan.outer_iterations = 1;
  plan.objective_trace.push_back(plan.objective());
  return plan;
}

namespace {

// All floor/ceil roundings of the continuous subchannel shares that sum to
// the full budget with at least one subchannel each, in lexicographic order.
std::vector<std::vector<int>> integer_candidates(const std::vector<double>& shares, int budget) {
  const size_t n = shares.size();
  std::vector<int> lo(n), hi(n);
  for (size_t i = 0; i < n; ++i) {
    const double x = shares[i];
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9) {
      lo[i] = hi[i] = std::max(1, static_cast<int>(r));
    } else {
      lo[i] = std::max(1, static_cast<int>(std::floor(x)));
      hi[i] = std::max(1, static_cast<int>(std::ceil(x)));
    }
  }

  std::vector<std::vector<int>> out;
  std::vector<int> current(n);
  auto recurse = [&](auto&& self, size_t pos, int sum) -> void {
    if (out.size() >= 4096) return;
    if (pos == n) {
      if (sum == budget) out.push_back(current);
      return;
    }
    current[pos] = lo[pos];
    self(self, pos + 1, sum + lo[pos]);
    if (hi[pos] != lo[pos]) {
      current[pos] = hi[pos];
      self(self, pos + 1, sum + hi[pos]);
    }
  };
  recurse(recurse, 0, 0);

  if (out.empty()) {
    // Fallback apportionment by largest fractional part, repaired to the
    // budget while keeping every coordinate positive.
    std::vector<int> base(n);
    std::vector<std::pair<double, size_t>> frac(n);
    int sum = 0;
    for (size_t i = 0; i < n; ++i) {
      base[i] = std::max(1, static_cast<int>(std::floor(shares[i])));
      sum += base[i];
      frac[i] = {shares[i] - std::floor(shares[i]), i};
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (size_t k = 0; sum < budget; ++k) {
      base[frac[k % n].second] += 1;
      ++sum;
    }
    for (size_t guard = 0; sum > budget && guard < 16 * n + 64; ++guard) {
      const size_t idx = frac[n - 1 - (guard % n)].second;
      if (base[idx] > 1) {
        base[idx] -= 1;
        --sum;
      }
    }
    if (sum == budget) out.push_back(base);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Tier2Plan discretize_subchannels(const Instance& instance, const Tier2Plan& plan,
                                 const SolveOptions& options) {
  if (plan.nvs.empty()) return plan;
  const double total_bw = instance.params.b_total;
  double allocated = 0.0;
  for (const auto& p : plan.nvs) allocated += p.bandwidth;
  if (std::abs(allocated - total_bw) > 1e-6 * total_bw) {
    throw DomainError("discretize_subchannels: continuous plan does not exhaust the bandwidth");
  }
  if (static_cast<int>(plan.nvs.size()) > instance.params.num_subchannels) {
    throw InfeasibleError("discretize_subchannels: more NVs than subchannels");
  }

  std::map<int, SplitVector> splits;
  for (const auto& p : plan.nvs) splits[p.nv_id] = p.split;
  std::map<int, int> compute_load;
  if (options.repair_aggregate_compute) compute_load = count_compute_loads(instance, splits);

  // Contexts aligned with plan.nvs order.
  std::vector<NvContext> served;
  for (const auto& p : plan.nvs) {
    const Vehicle* nv = nullptr;
    for (const auto& v : instance.nvs) {
      if (v.id == p.nv_id) nv = &v;
    }
    if (!nv) throw DomainError("discretize_subchannels: plan NV missing from instance");
    served.push_back(build_context(instance, *nv, instance.tasks.at(p.nv_id), p.split,
                                   compute_load, options));
  }

  std::vector<double> shares;
  shares.reserve(plan.nvs.size());
  for (const auto& p : plan.nvs) shares.push_back(p.bandwidth / instance.params.b0);

  const auto candidates = integer_candidates(shares, instance.params.num_subchannels);
  if (candidates.empty()) {
    throw InfeasibleError("discretize_subchannels: no integer point on the budget hyperplane");
  }

  Tier2Plan best = plan;
  double best_objective = kInf;
  for (const auto& counts : candidates) {
    Tier2Plan candidate = plan;
    candidate.nvs.clear();
    double objective = 0.0;
    bool ok = true;
    for (size_t i = 0; i < served.size(); ++i) {
      const double bw = counts[i] * instance.params.b0;
      try {
        const InnerResult inner = solve_inner(served[i], bw, instance.params);
        NvPlan nv_plan = make_plan(served[i], bw, inner, instance.params);
        nv_plan.subchannels = counts[i];
        objective += nv_plan.weighted_energy;
        candidate.nvs.push_back(std::move(nv_plan));
      } catch (const InfeasibleError&) {
        ok = false;
        break;
      }
    }
    if (ok && objective < best_objective) {
      best_objective = objective;
      best = std::move(candidate);
    }
  }
  if (!std::isfinite(best_objective)) {
    throw InfeasibleError("discretize_subchannels: every integer candidate is infeasible");
  }
  return best;
}

Tier2Plan solve(const Instance& instance, const SolveOptions& options) {
  instance.validate();
  const int r_count = static_cast<int>(instance.rsus.size());
  const std::map<int, int> no_load;

  // Initial splits: balanced by workload, falling back to the first feasible
  // vector in enumeration order.
  std::map<int, SplitVector> splits;
  std::vector<Failure> failures;
  std::vector<const Vehicle*> active;
  for (const auto& nv : instance.nvs) {
    const SequentialTask& task = instance.tasks.at(nv.id);
    SplitVector split = balanced_split(task, r_count);
    NvContext ctx = build_context(instance, nv, task, split, no_load, options);
    if (!ctx.ok) {
      bool found = false;
      for (const auto& candidate : enumerate_splits(task.size(), r_count)) {
        NvContext trial = build_context(instance, nv, task, candidate, no_load, options);
        if (trial.ok) {
          split = candidate;
          found = true;
          break;
        }
      }
      if (!found) {
        failures.push_back({nv.id, "no feasible split: " + ctx.reason});
        continue;
      }
    }
    splits[nv.id] = split;
    active.push_back(&nv);
  }

  Tier2Plan plan;
  if (active.empty()) {
    plan.failures = failures;
    return plan;
  }

  Instance reduced = instance;
  reduced.nvs.clear();
  for (const Vehicle* nv : active) reduced.nvs.push_back(*nv);

  bool changed = true;
  for (int sweep = 0; sweep < options.max_split_sweeps && changed; ++sweep) {
    plan = solve_continuous(reduced, splits, options);
    std::map<int, int> compute_load;
    if (options.repair_aggregate_compute) compute_load = count_compute_loads(instance, splits);
    changed = false;
    for (const auto& nv_plan : plan.nvs) {
      const Vehicle* nv = nullptr;
      for (const Vehicle* v : active) {
        if (v->id == nv_plan.nv_id) nv = v;
      }
      const SequentialTask& task = instance.tasks.at(nv_plan.nv_id);
      double best_score = nv_plan.weighted_energy;
      SplitVector best_split = splits.at(nv_plan.nv_id);
      for (const auto& candidate : enumerate_splits(task.size(), r_count)) {
        if (candidate == best_split) continue;
        NvContext ctx = build_context(instance, *nv, task, candidate, compute_load, options);
        if (!ctx.ok) continue;
        try {
          const InnerResult inner = solve_inner(ctx, nv_plan.bandwidth, instance.params);
          const double score =
              make_plan(ctx, nv_plan.bandwidth, inner, instance.params).weighted_energy;
          if (score < best_score * (1.0 - 1e-12)) {
            best_score = score;
            best_split = candidate;
          }
        } catch (const InfeasibleError&) {
          continue;
        }
      }
      if (best_split != splits.at(nv_plan.nv_id)) {
        splits[nv_plan.nv_id] = best_split;
        changed = true;
      }
    }
  }
  if (changed) plan = solve_continuous(reduced, splits, options);

  plan.failures.insert(plan.failures.end(), failures.begin(), failures.end());

  if (options.discretize && !plan.nvs.empty()) {
    plan = discretize_subchannels(reduced, plan, options);
  }

  const auto report = validate(plan, instance);
  if (!report.per_nv_ok) {
    std::string detail;
    for (const auto& e : report.entries) {
      if (!e.pass && e.constraint != "aggregate-rsu-frequency") {
        detail += e.constraint + "(" + std::to_string(e.entity) + ") ";
      }
    }
    throw std::logic_error("tier-2 solve produced an invalid plan: " + detail);
  }
  return plan;
}

ConstraintReport validate(const Tier2Plan& plan, const Instance& instance) {
  ConstraintReport report;
  const int r_count = static_cast<int>(instance.rsus.size());
  auto add = [&](const std::string& constraint, int entity, bool pass, double residual) {
    report.entries.push_back({constraint, entity, pass, residual});
  };

  std::map<int, double> rsu_freq_load;  // worst-case concurrent frequency per RSU
  for (const auto& p : plan.nvs) {
    const SequentialTask& task = instance.tasks.at(p.nv_id);
    const int m_count = task.size();

    bool shape = static_cast<int>(p.split.size()) == r_count && !p.split.empty() &&
                 p.split.front() == 1 && static_cast<int>(p.freqs.size()) == m_count;
    for (size_t r = 0; shape && r < p.split.size(); ++r) {
      if (p.split[r] < 1 || p.split[r] > m_count + 1) shape = false;
      if (r > 0 && p.split[r] < p.split[r - 1]) shape = false;
    }
    add("split-shape", p.nv_id, shape, 0.0);
    if (!shape) continue;

    const auto& params = instance.params;
    double wired_delay = 0.0;
    for (int r = 0; r + 1 < r_count; ++r) {
      const int next_split = p.split[static_cast<size_t>(r + 1)];
      const double bits = next_split <= m_count ? task.bits_into(next_split) : 0.0;
      wired_delay += wired_transfer(bits, params).delay;
    }
    double compute = 0.0;
    for (int m = 1; m <= m_count; ++m) {
      compute += task.subtasks[static_cast<size_t>(m - 1)].workload /
                 p.freqs[static_cast<size_t>(m - 1)];
    }
    const double delay = params.setup_delay + p.tau_v2i + compute + wired_delay;
    add("deadline", p.nv_id, delay <= task.deadline + 1e-9, delay - task.deadline);

    const Vehicle* nv = nullptr;
    for (const auto& v : instance.nvs) {
      if (v.id == p.nv_id) nv = &v;
    }
    const double mobility =
        nv && nv->velocity > 0.0
            ? (instance.rsus.front().service_range - instance.s_n.at(p.nv_id)) / nv->velocity
            : kInf;
    const double upload_done = params.setup_delay + p.tau_v2i;
    add("mobility-window", p.nv_id, upload_done <= mobility + 1e-9, upload_done - mobility);

    const double tau_cap = params.tau_max_or(task.deadline);
    add("tau-box", p.nv_id, p.tau_v2i >= 0.0 && p.tau_v2i <= tau_cap + 1e-9,
        std::max(-p.tau_v2i, p.tau_v2i - tau_cap));

    bool freq_ok = true;
    double freq_res = 0.0;
    for (int m = 1; m <= m_count; ++m) {
      const int r = rsu_computing(p.split, m);
      const double cap = instance.rsus[static_cast<size_t>(r)].max_cpu;
      const double f = p.freqs[static_cast<size_t>(m - 1)];
      if (!(f > 0.0) || f > cap * (1.0 + 1e-12)) freq_ok = false;
      freq_res = std::max(freq_res, f - cap);
    }
    add("frequency-box", p.nv_id, freq_ok, freq_res);

    // Idle blocks must carry no compute: subtask-to-RSU assignment never
    // lands in an empty block, and RSUs past the last subtask see zero wired
    // bits; assert both derived facts.
    double idle_energy = 0.0;
    for (int r = 0; r < r_count; ++r) {
      const int from = p.split[static_cast<size_t>(r)];
      const int to = r + 1 < r_count ? p.split[static_cast<size_t>(r + 1)] : m_count + 1;
      if (from < to) continue;  // nonempty block
      for (int m = 1; m <= m_count; ++m) {
        if (rsu_computing(p.split, m) == r) {
          idle_energy += compute_energy(instance.rsus[static_cast<size_t>(r)].kappa,
                                        task.subtasks[static_cast<size_t>(m - 1)].workload,
                                        p.freqs[static_cast<size_t>(m - 1)]);
        }
      }
    }
    add("idle-rsu-zero", p.nv_id, idle_energy == 0.0, idle_energy);

    // An RSU runs at most one of this NV's subtasks at a time; across NVs the
    // worst case is simultaneous, so charge the max frequency per RSU.
    std::map<int, double> per_rsu_max;
    for (int m = 1; m <= m_count; ++m) {
      const int r = rsu_computing(p.split, m);
      per_rsu_max[r] = std::max(per_rsu_max[r], p.freqs[static_cast<size_t>(m - 1)]);
    }
    for (const auto& [r, f] : per_rsu_max) rsu_freq_load[r] += f;
  }

  if (!plan.nvs.empty() && plan.nvs.front().subchannels > 0) {
    int total = 0;
    bool positive = true;
    for (const auto& p : plan.nvs) {
      total += p.subchannels;
      positive = positive && p.subchannels >= 1;
    }
    add("subchannel-budget", -1, positive && total <= instance.params.num_subchannels,
        static_cast<double>(total - instance.params.num_subchannels));
  }

  report.aggregate_ok = true;
  for (int r = 0; r < r_count; ++r) {
    auto it = rsu_freq_load.find(r);
    if (it == rsu_freq_load.end()) continue;
    const double cap = instance.rsus[static_cast<size_t>(r)].max_cpu;
    const bool pass = it->second <= cap * (1.0 + 1e-12);
    add("aggregate-rsu-frequency", instance.rsus[static_cast<size_t>(r)].id, pass,
        it->second - cap);
    report.aggregate_ok = report.aggregate_ok && pass;
  }

  report.per_nv_ok = true;
  for (const auto& e : report.entries) {
    if (e.constraint != "aggregate-rsu-frequency") report.per_nv_ok = report.per_nv_ok && e.pass;
  }
  return report;
}

}  // namespace v2xmec::tier2
