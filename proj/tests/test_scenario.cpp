#include <doctest.h>

#include <cmath>
#include <set>

#include "v2xmec/config.hpp"
#include "v2xmec/errors.hpp"
#include "v2xmec/scenario.hpp"

using namespace v2xmec;

TEST_SUITE("scenario") {

TEST_CASE("generation is deterministic under the seed") {
  scenario::ScenarioConfig config;
  config.seed = 12345;
  const auto a = scenario::generate(config);
  const auto b = scenario::generate(config);
  CHECK(config::scenario_to_json(a).dump() == config::scenario_to_json(b).dump());

  config.seed = 12346;
  const auto c = scenario::generate(config);
  CHECK(config::scenario_to_json(a).dump() != config::scenario_to_json(c).dump());
}

TEST_CASE("zero density produces an empty road") {
  scenario::ScenarioConfig config;
  config.vehicle_density = 0.0;
  const auto s = scenario::generate(config);
  CHECK(s.vehicles.empty());
  CHECK(s.tasks.empty());
  CHECK(s.rsus.size() == static_cast<size_t>(config.rsu_count));
}

TEST_CASE("all draws respect their configured ranges") {
  scenario::ScenarioConfig config;
  std::set<double> lane_centers;
  for (int l = 0; l < config.lanes; ++l) lane_centers.insert((l + 0.5) * config.lane_width);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    config.seed = seed;
    const auto s = scenario::generate(config);
    for (const auto& v : s.vehicles) {
      CHECK(v.pos.x >= 0.0);
      CHECK(v.pos.x <= config.road_length);
      CHECK(lane_centers.count(v.pos.y) == 1);
      CHECK(v.velocity >= config.speed_range[0]);
      CHECK(v.velocity <= config.speed_range[1]);
      CHECK(v.max_cpu >= config.vehicle_cpu_range[0]);
      CHECK(v.max_cpu <= config.vehicle_cpu_range[1]);
      CHECK(v.kappa >= config.vehicle_kappa_range[0]);
      CHECK(v.kappa <= config.vehicle_kappa_range[1]);
      if (v.role == Role::NV) {
        CHECK(s.tasks.count(v.id) == 1);
      } else {
        CHECK(s.tasks.count(v.id) == 0);
      }
    }
    for (const auto& [id, task] : s.tasks) {
      CHECK(task.size() == config.task.subtask_count);
      CHECK(task.input_size >= config.task.data_range[0]);
      CHECK(task.input_size <= config.task.data_range[1]);
      for (int m = 1; m <= task.size(); ++m) {
        const auto& st = task.subtasks[static_cast<size_t>(m - 1)];
        CHECK(st.workload >= config.task.workload_range[0]);
        CHECK(st.workload <= config.task.workload_range[1]);
        if (m < task.size()) {
          CHECK(st.output_size >= config.task.data_range[0]);
          CHECK(st.output_size <= config.task.data_range[1]);
        } else {
          CHECK(st.output_size == 0.0);
        }
      }
    }
    for (const auto& r : s.rsus) {
      CHECK(r.max_cpu >= config.rsu_cpu_range[0]);
      CHECK(r.max_cpu <= config.rsu_cpu_range[1]);
    }
  }
}

TEST_CASE("vehicle counts follow the Poisson intensity") {
  scenario::ScenarioConfig config;
  config.vehicle_density = 0.05;
  config.road_length = 1000.0;
  config.lanes = 3;
  const double expected = 0.05 * 1000.0 * 3.0;  // 150
  double sum = 0.0;
  const int trials = 1000;
  for (int seed = 1; seed <= trials; ++seed) {
    config.seed = static_cast<std::uint64_t>(seed);
    sum += static_cast<double>(scenario::generate(config).vehicles.size());
  }
  const double mean = sum / trials;
  const double sigma_of_mean = std::sqrt(expected / trials);
  CHECK(std::abs(mean - expected) <= 3.0 * sigma_of_mean);
}

TEST_CASE("ids are dense and rsus sit on a regular grid") {
  scenario::ScenarioConfig config;
  config.seed = 7;
  const auto s = scenario::generate(config);
  for (size_t i = 0; i < s.vehicles.size(); ++i) {
    CHECK(s.vehicles[i].id == static_cast<int>(i));
  }
  REQUIRE(s.rsus.size() == 2);
  CHECK(s.rsus[0].pos.x == doctest::Approx(100.0));
  CHECK(s.rsus[1].pos.x == doctest::Approx(300.0));
  CHECK(s.rsus[0].service_range == 200.0);
}

TEST_CASE("resplitting conserves the totals") {
  SequentialTask base;
  base.owner = 3;
  base.deadline = 0.25;
  base.input_size = 5e6;
  base.subtasks = {{1e8, 2e6}, {3e8, 4e6}, {2e8, 0.0}};
  for (int count : {1, 2, 3, 8, 16}) {
    const auto split = scenario::resplit_task(base, count);
    CHECK(split.size() == count);
    CHECK(split.total_workload() == doctest::Approx(base.total_workload()).epsilon(1e-12));
    CHECK(split.input_size == base.input_size);
    CHECK(split.deadline == base.deadline);
    CHECK(split.owner == base.owner);
    for (int m = 1; m < count; ++m) {
      CHECK(split.subtasks[static_cast<size_t>(m - 1)].output_size ==
            doctest::Approx(3e6));  // mean of the base intermediates
    }
    CHECK(split.subtasks.back().output_size == 0.0);
  }
  CHECK_THROWS_AS(scenario::resplit_task(base, 0), ConfigError);
}

TEST_CASE("fading draws are positive and reproducible") {
  scenario::ScenarioConfig config;
  config.seed = 5;
  const auto s = scenario::generate(config);
  ChannelParams a, b;
  scenario::apply_fading(a, s, 99);
  scenario::apply_fading(b, s, 99);
  for (const auto& [id, task] : s.tasks) {
    CHECK(a.v2v_fading.at(id) > 0.0);
    CHECK(a.v2i_fading.at(id) > 0.0);
    CHECK(a.v2v_fading.at(id) == b.v2v_fading.at(id));
  }
  ChannelParams c;
  scenario::apply_fading(c, s, 100);
  bool differs = false;
  for (const auto& [id, h] : a.v2v_fading) differs = differs || h != c.v2v_fading.at(id);
  if (!s.tasks.empty()) CHECK(differs);
}

TEST_CASE("config validation rejects malformed input") {
  scenario::ScenarioConfig config;
  config.lanes = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = scenario::ScenarioConfig{};
  config.nv_fraction = 1.5;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = scenario::ScenarioConfig{};
  config.task.workload_range = {5e8, 1e8};
  CHECK_THROWS_AS(config.validate(), ConfigError);
}

}  // TEST_SUITE
