// Seeded random generation of vehicles, RSUs and tasks.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "v2xmec/model.hpp"

namespace v2xmec::scenario {

struct TaskConfig {
  int subtask_count = 8;
  std::array<double, 2> data_range{1e6, 2e7};        // bits per subtask input
  std::array<double, 2> workload_range{1e6, 1e9};    // cycles per subtask
  double deadline = 0.2;                             // seconds
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  int lanes = 3;
  double lane_width = 3.75;    // meters
  double road_length = 200.0;  // meters, matches the serving RSU range
  double vehicle_density = 0.03;  // vehicles per meter per lane (Poisson intensity)
  std::array<double, 2> speed_range{40.0 / 3.6, 120.0 / 3.6};  // m/s
  double nv_fraction = 0.5;
  std::array<double, 2> vehicle_cpu_range{1e9, 1e10};
  std::array<double, 2> vehicle_kappa_range{1e-23, 2e-23};
  int rsu_count = 2;
  double rsu_spacing = 200.0;
  double rsu_height = 10.0;
  double rsu_service_range = 200.0;
  std::array<double, 2> rsu_cpu_range{6e10, 1.2e11};
  std::array<double, 2> rsu_kappa_range{1e-23, 2e-23};
  TaskConfig task;
  double vehicle_weight = 1.0;
  double rsu_weight = 1.0;

  void validate() const;  // throws ConfigError
};

struct Scenario {
  std::vector<Vehicle> vehicles;          // ascending id
  std::map<int, SequentialTask> tasks;    // one per NV
  std::vector<Rsu> rsus;                  // ordered along +x
};

/// Deterministic under the config seed.  Vehicles are placed per lane as a
/// Poisson process (count then sorted uniform positions); speeds, CPU caps,
/// energy coefficients and the NV/IV role follow per vehicle from the same
/// stream.  Tasks draw per-subtask workloads and input sizes uniformly.  RSUs
/// sit at deterministic positions with drawn capacities.
Scenario generate(const ScenarioConfig& config);

/// One task draw: input size, then per subtask its workload and hand-off
/// size.  Shared by generate() and the controlled single-pair experiments.
SequentialTask draw_task(std::mt19937_64& stream, const TaskConfig& config, int owner);

/// Re-partitions a task into `subtask_count` pieces with the total workload
/// and the task input size conserved: equal workloads, every intermediate
/// hand-off sized at the mean of the base task's intermediates.
SequentialTask resplit_task(const SequentialTask& base, int subtask_count);

/// Draws a unit-mean exponential fading factor per NV for both its V2V link
/// and its V2I uplink, held fixed for the run.
void apply_fading(ChannelParams& params, const Scenario& scenario, std::uint64_t seed);

}  // namespace v2xmec::scenario
