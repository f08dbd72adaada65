#include <doctest.h>

#include <cmath>

#include "v2xmec/baselines.hpp"
#include "v2xmec/errors.hpp"
#include "v2xmec/rng.hpp"

using namespace v2xmec;
using baselines::PolicyId;

namespace {

struct PairFixture {
  Vehicle nv, hv;
  SequentialTask task;
  ChannelParams params;
};

PairFixture make_pair(int subtasks = 4) {
  PairFixture f;
  f.nv.id = 0;
  f.nv.pos = {0.0, 0.0};
  f.nv.velocity = 22.0;
  f.nv.max_cpu = 5e9;
  f.nv.kappa = 1.4e-23;
  f.nv.role = Role::NV;
  f.hv = f.nv;
  f.hv.id = 1;
  f.hv.pos = {20.0, 3.75};
  f.hv.max_cpu = 9e9;
  f.hv.kappa = 1.1e-23;
  f.hv.role = Role::HV;
  f.task.owner = 0;
  f.task.deadline = 0.2;
  f.task.input_size = 3e6;
  for (int m = 0; m < subtasks; ++m) {
    f.task.subtasks.push_back({2e8, m + 1 < subtasks ? 1.5e6 : 0.0});
  }
  return f;
}

tier2::Instance make_instance(int nv_count, int subtasks = 4) {
  tier2::Instance instance;
  Rsu first;
  first.id = 0;
  first.pos = {100.0, 0.0};
  first.height = 10.0;
  first.service_range = 200.0;
  first.max_cpu = 9e10;
  first.kappa = 1.5e-23;
  Rsu second = first;
  second.id = 1;
  second.pos = {300.0, 0.0};
  second.max_cpu = 1.0e11;
  instance.rsus = {first, second};
  for (int i = 0; i < nv_count; ++i) {
    Vehicle v;
    v.id = i;
    v.pos = {50.0 + 20.0 * i, 1.875};
    v.velocity = 25.0;
    v.max_cpu = 5e9;
    v.kappa = 1.5e-23;
    v.role = Role::NV;
    instance.nvs.push_back(v);
    SequentialTask task;
    task.owner = i;
    task.deadline = 0.2;
    task.input_size = 6e6;
    for (int m = 0; m < subtasks; ++m) {
      task.subtasks.push_back({3e8, m + 1 < subtasks ? 1e6 : 0.0});
    }
    instance.tasks[i] = std::move(task);
    instance.s_n[i] = 50.0 + 20.0 * i;
  }
  instance.params = ChannelParams{};
  return instance;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("policy names round-trip") {
  for (auto policy : {PolicyId::FOO, PolicyId::POM, PolicyId::FOM, PolicyId::BFM,
                      PolicyId::T2_EQUAL_EQUAL, PolicyId::T2_EQUAL_RANDOM}) {
    CHECK(baselines::policy_from_string(baselines::to_string(policy)) == policy);
  }
  CHECK_THROWS_AS(baselines::policy_from_string("nope"), ConfigError);
}

TEST_CASE("full offload at maximal frequency uses the helper flat out") {
  const auto f = make_pair(2);
  const auto plan = baselines::run_tier1_baseline(PolicyId::FOM, f.nv, f.hv, f.task, f.params);
  CHECK(plan.split == 1);
  REQUIRE(plan.freqs.size() == 2);
  CHECK(plan.freqs[0] == f.hv.max_cpu);
  CHECK(plan.freqs[1] == f.hv.max_cpu);
  CHECK(plan.nv_compute_energy == 0.0);
  CHECK(plan.total_delay == doctest::Approx(f.task.deadline));
  CHECK(tier1::validate(plan, f.nv, f.hv, f.task, f.params).ok);
}

TEST_CASE("half offload splits the subtasks down the middle") {
  const auto f = make_pair(4);
  const auto plan = baselines::run_tier1_baseline(PolicyId::POM, f.nv, f.hv, f.task, f.params);
  CHECK(plan.split == 3);  // NV runs 1-2, HV runs 3-4
  REQUIRE(plan.freqs.size() == 4);
  CHECK(plan.freqs[0] == f.nv.max_cpu);
  CHECK(plan.freqs[1] == f.nv.max_cpu);
  CHECK(plan.freqs[2] == f.hv.max_cpu);
  CHECK(plan.freqs[3] == f.hv.max_cpu);
  CHECK(tier1::validate(plan, f.nv, f.hv, f.task, f.params).ok);
}

TEST_CASE("full offload with optimized frequency equals the fixed-split solver") {
  const auto f = make_pair(3);
  const auto baseline = baselines::run_tier1_baseline(PolicyId::FOO, f.nv, f.hv, f.task, f.params);
  const auto direct = tier1::solve_fixed_split(f.nv, f.hv, f.task, 1, f.params);
  CHECK(baseline.weighted_energy == doctest::Approx(direct.weighted_energy));
  CHECK(baseline.split == 1);
}

TEST_CASE("back-and-forth matches the capacity ratio and pays each hand-off") {
  auto f = make_pair(2);
  f.nv.max_cpu = 6e9;
  f.hv.max_cpu = 6e9;  // target share 1/2 with equal subtasks
  const auto plan = baselines::run_tier1_baseline(PolicyId::BFM, f.nv, f.hv, f.task, f.params);
  REQUIRE(plan.hv_owned.size() == 2);
  // First exact-ratio pattern in mask order puts subtask 1 on the HV.
  CHECK(plan.hv_owned[0]);
  CHECK_FALSE(plan.hv_owned[1]);
  CHECK(plan.freqs[0] == f.hv.max_cpu);
  CHECK(plan.freqs[1] == f.nv.max_cpu);
  // Two ownership changes: the input ships out, the intermediate ships back.
  const double compute = 2e8 / 6e9 * 2.0;
  CHECK(plan.tau_v2v == doctest::Approx(f.task.deadline - compute));
  const double gain = v2v_gain(euclidean(f.nv.pos, f.hv.pos));
  const double expected = transmit_energy(f.task.input_size + 1.5e6, plan.tau_v2v, f.params.b_v2v,
                                          gain, f.params.noise_density);
  CHECK(plan.nv_transmit_energy == doctest::Approx(expected).epsilon(1e-12));
  CHECK(tier1::validate(plan, f.nv, f.hv, f.task, f.params).ok);
}

TEST_CASE("fixed-frequency compute energy is deadline independent") {
  for (auto policy : {PolicyId::FOM, PolicyId::POM, PolicyId::BFM}) {
    auto f = make_pair(4);
    f.task.deadline = 0.2;
    const auto tight = baselines::run_tier1_baseline(policy, f.nv, f.hv, f.task, f.params);
    f.task.deadline = 0.4;
    const auto loose = baselines::run_tier1_baseline(policy, f.nv, f.hv, f.task, f.params);
    CHECK(tight.nv_compute_energy + tight.hv_compute_energy ==
          doctest::Approx(loose.nv_compute_energy + loose.hv_compute_energy));
    CHECK(loose.nv_transmit_energy < tight.nv_transmit_energy);
  }
}

TEST_CASE("the optimizer never loses to a vehicle-tier baseline") {
  auto gen = rng::make_engine(3, rng::Stream::oracle);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = make_pair(4);
    f.nv.max_cpu = rng::uniform(gen, 2e9, 8e9);
    f.hv.max_cpu = rng::uniform(gen, 4e9, 1e10);
    f.hv.pos.x = rng::uniform(gen, 5.0, 60.0);
    const double budget = rng::uniform(gen, 0.4, 0.8) * f.task.deadline * f.hv.max_cpu;
    for (auto& st : f.task.subtasks) st.workload = budget / 4.0;
    const auto proposed = tier1::solve(f.nv, f.hv, f.task, f.params);
    for (auto policy : {PolicyId::FOO, PolicyId::POM, PolicyId::FOM, PolicyId::BFM}) {
      try {
        const auto plan = baselines::run_tier1_baseline(policy, f.nv, f.hv, f.task, f.params);
        CHECK(proposed.weighted_energy <= plan.weighted_energy * (1.0 + 1e-9));
      } catch (const InfeasibleError&) {
      }
    }
  }
}

TEST_CASE("infeasible fixed-frequency policies raise") {
  auto f = make_pair(2);
  f.nv.max_cpu = 1e9;
  for (auto& st : f.task.subtasks) st.workload = 1.2e8;
  f.task.deadline = 0.05;  // POM's NV half alone busts the deadline margin
  f.task.subtasks[0].workload = 6e7;
  f.task.subtasks[1].workload = 4.4e8;
  CHECK_THROWS_AS(baselines::run_tier1_baseline(PolicyId::POM, f.nv, f.hv, f.task, f.params),
                  InfeasibleError);
}

TEST_CASE("equal-count splits hand out contiguous blocks") {
  CHECK(baselines::equal_count_split(4, 2) == tier2::SplitVector{1, 3});
  CHECK(baselines::equal_count_split(8, 3) == tier2::SplitVector{1, 4, 7});
  CHECK(baselines::equal_count_split(2, 3) == tier2::SplitVector{1, 2, 3});
}

TEST_CASE("equal-equal baseline fixes bandwidth and splits") {
  const auto instance = make_instance(2);
  const auto plan =
      baselines::run_tier2_baseline(PolicyId::T2_EQUAL_EQUAL, instance, 1);
  REQUIRE(plan.nvs.size() == 2);
  for (const auto& p : plan.nvs) {
    CHECK(p.split == tier2::SplitVector{1, 3});
    CHECK(p.bandwidth == doctest::Approx(instance.params.b_total / 2));
  }
  CHECK(tier2::validate(plan, instance).per_nv_ok);
}

TEST_CASE("random baseline is reproducible under a seed") {
  const auto instance = make_instance(3);
  const auto a = baselines::run_tier2_baseline(PolicyId::T2_EQUAL_RANDOM, instance, 9);
  const auto b = baselines::run_tier2_baseline(PolicyId::T2_EQUAL_RANDOM, instance, 9);
  const auto c = baselines::run_tier2_baseline(PolicyId::T2_EQUAL_RANDOM, instance, 10);
  REQUIRE(a.nvs.size() == b.nvs.size());
  for (size_t i = 0; i < a.nvs.size(); ++i) {
    CHECK(a.nvs[i].split == b.nvs[i].split);
    CHECK(a.nvs[i].weighted_energy == b.nvs[i].weighted_energy);
  }
  bool any_difference = false;
  for (size_t i = 0; i < std::min(a.nvs.size(), c.nvs.size()); ++i) {
    any_difference = any_difference || a.nvs[i].split != c.nvs[i].split;
  }
  CHECK(any_difference);
}

TEST_CASE("the optimizer never loses to an RSU-tier baseline") {
  const auto instance = make_instance(3);
  tier2::SolveOptions options;
  options.discretize = false;
  const auto proposed = tier2::solve(instance, options);
  REQUIRE(proposed.nvs.size() == 3);
  for (auto policy : {PolicyId::T2_EQUAL_EQUAL, PolicyId::T2_EQUAL_RANDOM}) {
    const auto baseline = baselines::run_tier2_baseline(policy, instance, 4);
    REQUIRE(baseline.nvs.size() == 3);
    CHECK(proposed.objective() <= baseline.objective() * (1.0 + 1e-6));
  }
}

TEST_CASE("tier mismatches are rejected") {
  const auto f = make_pair(2);
  const auto instance = make_instance(1);
  CHECK_THROWS_AS(
      baselines::run_tier1_baseline(PolicyId::T2_EQUAL_EQUAL, f.nv, f.hv, f.task, f.params),
      ConfigError);
  CHECK_THROWS_AS(baselines::run_tier2_baseline(PolicyId::FOO, instance, 1), ConfigError);
}

}  // TEST_SUITE
