#include "v2xmec/scenario.hpp"

#include <algorithm>
#include <string>

#include "v2xmec/errors.hpp"
#include "v2xmec/rng.hpp"

namespace v2xmec::scenario {

namespace {

void check_range(const std::array<double, 2>& range, const std::string& name, bool positive) {
  if (!(range[0] <= range[1])) throw ConfigError(name + ": empty range");
  if (positive && !(range[0] > 0.0)) throw ConfigError(name + ": must be positive");
}

}  // namespace

void ScenarioConfig::validate() const {
  if (lanes < 1) throw ConfigError("lanes must be at least 1");
  if (!(lane_width > 0.0)) throw ConfigError("lane width must be positive");
  if (!(road_length > 0.0)) throw ConfigError("road length must be positive");
  if (vehicle_density < 0.0) throw ConfigError("vehicle density must be nonnegative");
  if (nv_fraction < 0.0 || nv_fraction > 1.0) throw ConfigError("nv_fraction must be in [0, 1]");
  check_range(speed_range, "speed range", true);
  check_range(vehicle_cpu_range, "vehicle CPU range", true);
  check_range(vehicle_kappa_range, "vehicle kappa range", true);
  check_range(rsu_cpu_range, "RSU CPU range", true);
  check_range(rsu_kappa_range, "RSU kappa range", true);
  check_range(task.data_range, "task data range", false);
  if (task.data_range[0] < 0.0) throw ConfigError("task data range: must be nonnegative");
  check_range(task.workload_range, "task workload range", true);
  if (task.subtask_count < 1) throw ConfigError("subtask count must be at least 1");
  if (!(task.deadline > 0.0)) throw ConfigError("deadline must be positive");
  if (rsu_count < 1) throw ConfigError("need at least one RSU");
  if (!(rsu_spacing > 0.0) || !(rsu_service_range > 0.0)) {
    throw ConfigError("RSU spacing and service range must be positive");
  }
  if (rsu_height < 0.0) throw ConfigError("RSU height must be nonnegative");
  if (!(vehicle_weight >= 0.0) || !(rsu_weight >= 0.0)) {
    throw ConfigError("weights must be nonnegative");
  }
}

Scenario generate(const ScenarioConfig& config) {
  config.validate();
  Scenario scenario;

  auto vehicle_stream = rng::make_engine(config.seed, rng::Stream::vehicles);
  int next_id = 0;
  for (int lane = 0; lane < config.lanes; ++lane) {
    const int count = rng::poisson(vehicle_stream, config.vehicle_density * config.road_length);
    std::vector<double> xs(static_cast<size_t>(count));
    for (auto& x : xs) x = rng::uniform(vehicle_stream, 0.0, config.road_length);
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
      Vehicle v;
      v.id = next_id++;
      v.pos = {x, (lane + 0.5) * config.lane_width};
      v.velocity = rng::uniform(vehicle_stream, config.speed_range[0], config.speed_range[1]);
      v.max_cpu =
          rng::uniform(vehicle_stream, config.vehicle_cpu_range[0], config.vehicle_cpu_range[1]);
      v.kappa = rng::uniform(vehicle_stream, config.vehicle_kappa_range[0],
                             config.vehicle_kappa_range[1]);
      v.weight = config.vehicle_weight;
      v.role = rng::uniform01(vehicle_stream) < config.nv_fraction ? Role::NV : Role::IV;
      scenario.vehicles.push_back(v);
    }
  }

  auto task_stream = rng::make_engine(config.seed, rng::Stream::tasks);
  for (const auto& v : scenario.vehicles) {
    if (v.role != Role::NV) continue;
    scenario.tasks[v.id] = draw_task(task_stream, config.task, v.id);
  }

  auto rsu_stream = rng::make_engine(config.seed, rng::Stream::rsus);
  for (int r = 0; r < config.rsu_count; ++r) {
    Rsu rsu;
    rsu.id = r;
    rsu.pos = {config.rsu_service_range / 2.0 + r * config.rsu_spacing, 0.0};
    rsu.height = config.rsu_height;
    rsu.service_range = config.rsu_service_range;
    rsu.max_cpu = rng::uniform(rsu_stream, config.rsu_cpu_range[0], config.rsu_cpu_range[1]);
    rsu.kappa = rng::uniform(rsu_stream, config.rsu_kappa_range[0], config.rsu_kappa_range[1]);
    rsu.weight = config.rsu_weight;
    scenario.rsus.push_back(rsu);
  }

  return scenario;
}

SequentialTask draw_task(std::mt19937_64& stream, const TaskConfig& config, int owner) {
  SequentialTask task;
  task.owner = owner;
  task.deadline = config.deadline;
  task.input_size = rng::uniform(stream, config.data_range[0], config.data_range[1]);
  task.subtasks.resize(static_cast<size_t>(config.subtask_count));
  for (int m = 0; m < config.subtask_count; ++m) {
    auto& st = task.subtasks[static_cast<size_t>(m)];
    st.workload = rng::uniform(stream, config.workload_range[0], config.workload_range[1]);
    st.output_size = m + 1 < config.subtask_count
                         ? rng::uniform(stream, config.data_range[0], config.data_range[1])
                         : 0.0;  // final results are small enough to ignore
  }
  return task;
}

SequentialTask resplit_task(const SequentialTask& base, int subtask_count) {
  base.validate();
  if (subtask_count < 1) throw ConfigError("resplit_task: need at least one subtask");
  const int base_count = base.size();
  double mean_intermediate = base.input_size;
  if (base_count > 1) {
    double sum = 0.0;
    for (int m = 0; m + 1 < base_count; ++m) {
      sum += base.subtasks[static_cast<size_t>(m)].output_size;
    }
    mean_intermediate = sum / (base_count - 1);
  }

  SequentialTask task;
  task.owner = base.owner;
  task.deadline = base.deadline;
  task.input_size = base.input_size;
  task.subtasks.resize(static_cast<size_t>(subtask_count));
  const double workload = base.total_workload() / subtask_count;
  for (int m = 0; m < subtask_count; ++m) {
    task.subtasks[static_cast<size_t>(m)].workload = workload;
    task.subtasks[static_cast<size_t>(m)].output_size =
        m + 1 < subtask_count ? mean_intermediate : 0.0;
  }
  return task;
}

void apply_fading(ChannelParams& params, const Scenario& scenario, std::uint64_t seed) {
  auto stream = rng::make_engine(seed, rng::Stream::fading);
  for (const auto& v : scenario.vehicles) {
    if (v.role != Role::NV) continue;
    params.v2v_fading[v.id] = rng::exponential(stream);
    params.v2i_fading[v.id] = rng::exponential(stream);
  }
}

}  // namespace v2xmec::scenario
