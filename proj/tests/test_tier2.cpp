#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "v2xmec/errors.hpp"
#include "v2xmec/rng.hpp"
#include "v2xmec/tier2.hpp"

using namespace v2xmec;

namespace {

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Vehicle make_nv(int id, double x, double y = 1.875, double velocity = 25.0) {
  Vehicle v;
  v.id = id;
  v.pos = {x, y};
  v.velocity = velocity;
  v.max_cpu = 5e9;
  v.kappa = 1.5e-23;
  v.role = Role::NV;
  return v;
}

SequentialTask make_task(int owner, std::vector<double> workloads, double input_bits = 8e6,
                         double inter_bits = 1.5e6, double deadline = 0.2) {
  SequentialTask task;
  task.owner = owner;
  task.deadline = deadline;
  task.input_size = input_bits;
  for (size_t i = 0; i < workloads.size(); ++i) {
    task.subtasks.push_back({workloads[i], i + 1 < workloads.size() ? inter_bits : 0.0});
  }
  return task;
}

tier2::Instance make_instance(int nv_count) {
  tier2::Instance instance;
  Rsu first;
  first.id = 0;
  first.pos = {100.0, 0.0};
  first.height = 10.0;
  first.service_range = 200.0;
  first.max_cpu = 8e10;
  first.kappa = 1.6e-23;
  Rsu second = first;
  second.id = 1;
  second.pos = {300.0, 0.0};
  second.max_cpu = 1.1e11;
  second.kappa = 1.2e-23;
  instance.rsus = {first, second};
  for (int i = 0; i < nv_count; ++i) {
    instance.nvs.push_back(make_nv(i, 40.0 + 30.0 * i));
    instance.tasks[i] = make_task(i, {4e8, 6e8, 3e8, 5e8});
    instance.s_n[i] = 40.0 + 30.0 * i;
  }
  instance.params = ChannelParams{};
  return instance;
}

std::map<int, tier2::SplitVector> splits_for(const tier2::Instance& instance,
                                             const tier2::SplitVector& split) {
  std::map<int, tier2::SplitVector> splits;
  for (const auto& nv : instance.nvs) splits[nv.id] = split;
  return splits;
}

}  // namespace

TEST_SUITE("tier2") {

TEST_CASE("split enumeration") {
  const auto three_two = tier2::enumerate_splits(3, 2);
  REQUIRE(three_two.size() == 4);
  CHECK(three_two[0] == tier2::SplitVector{1, 1});
  CHECK(three_two[3] == tier2::SplitVector{1, 4});

  CHECK(tier2::enumerate_splits(5, 1) == std::vector<tier2::SplitVector>{tier2::SplitVector{1}});
  CHECK(tier2::enumerate_splits(2, 3).size() == 6);

  for (int m = 1; m <= 8; ++m) {
    for (int r = 1; r <= 4; ++r) {
      CHECK(static_cast<long long>(tier2::enumerate_splits(m, r).size()) ==
            binomial(m + r - 1, r - 1));
    }
  }
}

TEST_CASE("balanced split tracks the workload") {
  const auto task = make_task(0, {1e8, 1e8, 1e8, 1e8});
  CHECK(tier2::balanced_split(task, 2) == tier2::SplitVector{1, 3});
  const auto heavy_tail = make_task(0, {1e8, 1e8, 1e8, 9e8});
  CHECK(tier2::balanced_split(heavy_tail, 2) == tier2::SplitVector{1, 4});
}

TEST_CASE("single NV takes the whole bandwidth immediately") {
  auto instance = make_instance(1);
  const auto plan = tier2::solve_continuous(instance, splits_for(instance, {1, 5}));
  REQUIRE(plan.nvs.size() == 1);
  CHECK(plan.nvs[0].bandwidth == doctest::Approx(instance.params.b_total).epsilon(1e-6));
  CHECK(plan.outer_iterations <= 2);
}

TEST_CASE("identical NVs share the bandwidth equally") {
  auto instance = make_instance(2);
  instance.nvs[1] = instance.nvs[0];
  instance.nvs[1].id = 1;
  instance.tasks[1] = instance.tasks[0];
  instance.tasks[1].owner = 1;
  instance.s_n[1] = instance.s_n[0];
  const auto plan = tier2::solve_continuous(instance, splits_for(instance, {1, 3}));
  REQUIRE(plan.nvs.size() == 2);
  CHECK(plan.nvs[0].bandwidth == doctest::Approx(instance.params.b_total / 2).epsilon(1e-6));
  CHECK(plan.nvs[1].bandwidth == doctest::Approx(instance.params.b_total / 2).epsilon(1e-6));
}

TEST_CASE("bandwidth is exhausted and deadlines are tight") {
  auto instance = make_instance(3);
  const auto plan = tier2::solve_continuous(instance, splits_for(instance, {1, 5}));
  REQUIRE(plan.nvs.size() == 3);
  double total_bw = 0.0;
  for (const auto& p : plan.nvs) {
    total_bw += p.bandwidth;
    const double deadline = instance.tasks.at(p.nv_id).deadline;
    CHECK(p.total_delay <= deadline + 1e-9);
    CHECK(std::abs(p.total_delay - deadline) <= tier2::kDeadlineRelTol * deadline);
    CHECK_FALSE(p.alpha_active);
    CHECK_FALSE(p.theta_active);
  }
  CHECK(std::abs(total_bw - instance.params.b_total) <= 1e-6 * instance.params.b_total);
  const auto report = tier2::validate(plan, instance);
  CHECK(report.per_nv_ok);
}

TEST_CASE("the objective trace never increases") {
  auto instance = make_instance(3);
  instance.tasks[1] = make_task(1, {8e8, 2e8, 7e8, 1e8}, 1.6e7);
  instance.tasks[2] = make_task(2, {1e8, 1e8, 2e8, 9e8}, 3e6);
  const auto plan = tier2::solve_continuous(instance, splits_for(instance, {1, 5}));
  REQUIRE(plan.objective_trace.size() >= 2);
  for (size_t k = 0; k + 1 < plan.objective_trace.size(); ++k) {
    CHECK(plan.objective_trace[k + 1] <= plan.objective_trace[k] * (1.0 + 1e-9));
  }
}

TEST_CASE("a small delay cap clamps the uplink and flags alpha") {
  auto instance = make_instance(1);
  const auto unclamped = tier2::solve_continuous(instance, splits_for(instance, {1, 5}));
  REQUIRE(unclamped.nvs.size() == 1);
  instance.params.tau_max = unclamped.nvs[0].tau_v2i / 2.0;
  const auto plan = tier2::solve_continuous(instance, splits_for(instance, {1, 5}));
  REQUIRE(plan.nvs.size() == 1);
  CHECK(plan.nvs[0].alpha_active);
  CHECK(plan.nvs[0].tau_v2i == doctest::Approx(*instance.params.tau_max));
  CHECK(plan.nvs[0].total_delay <= instance.tasks.at(0).deadline + 1e-9);
  CHECK(plan.nvs[0].weighted_energy >= unclamped.nvs[0].weighted_energy);
}

TEST_CASE("an NV at the range edge cannot upload and is reported") {
  auto instance = make_instance(2);
  instance.s_n[1] = 200.0;  // leaves the serving range immediately
  const auto plan = tier2::solve_continuous(instance, splits_for(instance, {1, 5}));
  REQUIRE(plan.failures.size() == 1);
  CHECK(plan.failures[0].nv_id == 1);
  REQUIRE(plan.nvs.size() == 1);
  CHECK(plan.nvs[0].nv_id == 0);
  CHECK(plan.nvs[0].bandwidth == doctest::Approx(instance.params.b_total).epsilon(1e-6));
}

TEST_CASE("continuous solve matches the numerical reference") {
  auto gen = rng::make_engine(31, rng::Stream::oracle);
  for (int trial = 0; trial < 3; ++trial) {
    const int nv_count = 1 + rng::uniform_int(gen, 3);
    auto instance = make_instance(nv_count);
    std::map<int, tier2::SplitVector> splits;
    for (int i = 0; i < nv_count; ++i) {
      std::vector<double> loads;
      const int m_count = 2 + rng::uniform_int(gen, 3);
      for (int m = 0; m < m_count; ++m) loads.push_back(rng::uniform(gen, 1e8, 9e8));
      instance.tasks[i] =
          make_task(i, loads, rng::uniform(gen, 2e6, 1.8e7), rng::uniform(gen, 1e5, 2e6));
      splits[i] = tier2::balanced_split(instance.tasks[i], 2);
    }
    const auto plan = tier2::solve_continuous(instance, splits);
    REQUIRE(plan.failures.empty());
    const double reference = oracles::rsu_oracle({instance, splits});
    REQUIRE(reference < oracles::kInf);
    CHECK(plan.objective() <= reference * 1.005);
    CHECK(reference <= plan.objective() * 1.005);
  }
}

TEST_CASE("subchannel rounding matches exhaustive integer search for two NVs") {
  auto instance = make_instance(2);
  instance.params.b0 = 1e7;
  instance.params.num_subchannels = 10;
  instance.tasks[0] = make_task(0, {4e8, 6e8, 3e8, 5e8}, 1.7e7);
  instance.tasks[1] = make_task(1, {2e8, 2e8, 1e8, 2e8}, 4e6);
  const auto splits = splits_for(instance, {1, 5});
  const auto continuous = tier2::solve_continuous(instance, splits);
  REQUIRE(continuous.nvs.size() == 2);
  const auto integer = tier2::discretize_subchannels(instance, continuous);

  double best = oracles::kInf;
  for (int b1 = 1; b1 <= 9; ++b1) {
    std::map<int, double> bw{{0, b1 * instance.params.b0}, {1, (10 - b1) * instance.params.b0}};
    const auto candidate = tier2::solve_fixed_bandwidth(instance, splits, bw);
    if (candidate.nvs.size() == 2) best = std::min(best, candidate.objective());
  }
  CHECK(integer.objective() == doctest::Approx(best).epsilon(1e-9));
  CHECK(integer.objective() >= continuous.objective() * (1.0 - 1e-9));
  int total = 0;
  for (const auto& p : integer.nvs) {
    CHECK(p.subchannels >= 1);
    total += p.subchannels;
  }
  CHECK(total == 10);
}

TEST_CASE("integral shares come back unchanged") {
  auto instance = make_instance(2);
  instance.nvs[1] = instance.nvs[0];
  instance.nvs[1].id = 1;
  instance.tasks[1] = instance.tasks[0];
  instance.tasks[1].owner = 1;
  instance.s_n[1] = instance.s_n[0];
  instance.params.b0 = 1e7;
  instance.params.num_subchannels = 10;
  const auto splits = splits_for(instance, {1, 3});
  const auto continuous = tier2::solve_continuous(instance, splits);
  const auto integer = tier2::discretize_subchannels(instance, continuous);
  for (const auto& p : integer.nvs) {
    CHECK(p.subchannels == 5);
    CHECK(p.bandwidth == doctest::Approx(5e7));
  }
  CHECK(integer.objective() == doctest::Approx(continuous.objective()).epsilon(1e-9));
}

TEST_CASE("more NVs than subchannels is infeasible") {
  auto instance = make_instance(3);
  instance.params.b0 = 5e7;
  instance.params.num_subchannels = 2;
  const auto splits = splits_for(instance, {1, 5});
  const auto continuous = tier2::solve_continuous(instance, splits);
  CHECK_THROWS_AS(tier2::discretize_subchannels(instance, continuous), InfeasibleError);
}

TEST_CASE("expensive wired hops push every subtask onto the serving RSU") {
  auto instance = make_instance(2);
  instance.params.wired_energy_per_bit = 10.0;  // ruinous forwarding cost
  const auto plan = tier2::solve(instance);
  REQUIRE(plan.nvs.size() == 2);
  for (const auto& p : plan.nvs) {
    CHECK(p.split == tier2::SplitVector{1, 5});
    CHECK(p.wired_energy == 0.0);
  }
}

TEST_CASE("a dominant second RSU with free wiring takes everything") {
  auto instance = make_instance(1);
  instance.rsus[1].max_cpu = 1.2e11;
  instance.rsus[1].kappa = 0.8e-23;
  instance.params.wired_energy_per_bit = 1e-12;
  instance.params.wired_delay_per_bit = 1e-12;
  const auto plan = tier2::solve(instance);
  REQUIRE(plan.nvs.size() == 1);
  CHECK(plan.nvs[0].split == tier2::SplitVector{1, 1});
}

TEST_CASE("single-NV split search equals joint enumeration") {
  auto gen = rng::make_engine(37, rng::Stream::oracle);
  for (int trial = 0; trial < 3; ++trial) {
    auto instance = make_instance(1);
    std::vector<double> loads;
    const int m_count = 3 + rng::uniform_int(gen, 2);
    for (int m = 0; m < m_count; ++m) loads.push_back(rng::uniform(gen, 1e8, 9e8));
    instance.tasks[0] =
        make_task(0, loads, rng::uniform(gen, 2e6, 1.8e7), rng::uniform(gen, 1e5, 2e6));

    tier2::SolveOptions options;
    options.discretize = false;
    const auto chosen = tier2::solve(instance, options);
    REQUIRE(chosen.nvs.size() == 1);

    double best = oracles::kInf;
    tier2::SplitVector best_split;
    for (const auto& split : tier2::enumerate_splits(m_count, 2)) {
      try {
        const auto plan = tier2::solve_continuous(instance, splits_for(instance, split));
        if (!plan.nvs.empty() && plan.objective() < best) {
          best = plan.objective();
          best_split = split;
        }
      } catch (const InfeasibleError&) {
      }
    }
    CHECK(chosen.nvs[0].split == best_split);
    CHECK(chosen.objective() == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("validator flags hand-built violations") {
  auto instance = make_instance(2);
  const auto splits = splits_for(instance, {1, 5});
  auto plan = tier2::solve_continuous(instance, splits);
  REQUIRE(plan.nvs.size() == 2);

  SUBCASE("delay cap violation") {
    plan.nvs[0].tau_v2i = 2.0 * instance.params.tau_max_or(instance.tasks.at(0).deadline);
    const auto report = tier2::validate(plan, instance);
    CHECK_FALSE(report.per_nv_ok);
    bool found = false;
    for (const auto& e : report.entries) {
      if (e.constraint == "tau-box" && e.entity == 0) found = !e.pass;
    }
    CHECK(found);
  }

  SUBCASE("aggregate frequency budget is reported separately") {
    for (auto& p : plan.nvs) {
      for (auto& f : p.freqs) f = instance.rsus[0].max_cpu;  // both flat out on RSU 1
    }
    const auto report = tier2::validate(plan, instance);
    CHECK_FALSE(report.aggregate_ok);
    double excess = 0.0;
    for (const auto& e : report.entries) {
      if (e.constraint == "aggregate-rsu-frequency" && e.entity == 0) excess = e.residual;
    }
    CHECK(excess == doctest::Approx(instance.rsus[0].max_cpu).epsilon(1e-9));
  }
}

TEST_CASE("repair mode keeps the aggregate frequency budget") {
  auto instance = make_instance(3);
  for (int i = 0; i < 3; ++i) {
    instance.tasks[i] = make_task(i, {2e9, 2e9, 2e9, 2e9}, 8e6, 1.5e6, 0.2);
  }
  tier2::SolveOptions options;
  options.repair_aggregate_compute = true;
  const auto plan = tier2::solve(instance, options);
  const auto report = tier2::validate(plan, instance);
  CHECK(report.aggregate_ok);
}

}  // TEST_SUITE
