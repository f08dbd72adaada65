#include "v2xmec/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "v2xmec/errors.hpp"

namespace v2xmec::config {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

double get_number(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(key + " must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(key + " must be an integer");
  return j.at(key).get<int>();
}

bool get_bool(const json& j, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(key + " must be a boolean");
  return j.at(key).get<bool>();
}

// Fallback is already in SI; `scale` converts the parsed config units to SI.
std::array<double, 2> get_range(const json& j, const std::string& key,
                                std::array<double, 2> fallback_si, double scale) {
  if (!j.contains(key)) return fallback_si;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(key + " must be a two-element numeric array");
  }
  return {v[0].get<double>() * scale, v[1].get<double>() * scale};
}

}  // namespace

void RunConfig::validate() const {
  scenario.validate();
  channel.validate();
  if (!(solver.convergence_rel > 0.0)) throw ConfigError("convergence_rel must be positive");
  if (solver.max_outer_iterations < 1) throw ConfigError("max_outer_iterations must be positive");
  if (solver.max_split_sweeps < 1) throw ConfigError("max_split_sweeps must be positive");
}

RunConfig default_config() {
  return RunConfig{};
}

RunConfig config_from_json(const json& j) {
  RunConfig config;
  if (!j.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(j, {"scenario", "channel", "solver"}, "config");

  if (j.contains("scenario")) {
    const auto& s = j.at("scenario");
    reject_unknown(s,
                   {"seed", "lanes", "lane_width_m", "road_length_m",
                    "vehicle_density_per_m_per_lane", "speed_range_kmh", "nv_fraction",
                    "vehicle_cpu_range_ghz", "vehicle_kappa_range", "rsu", "task", "weights"},
                   "scenario");
    auto& sc = config.scenario;
    sc.seed = static_cast<std::uint64_t>(get_number(s, "seed", static_cast<double>(sc.seed)));
    sc.lanes = get_int(s, "lanes", sc.lanes);
    sc.lane_width = get_number(s, "lane_width_m", sc.lane_width);
    sc.road_length = get_number(s, "road_length_m", sc.road_length);
    sc.vehicle_density = get_number(s, "vehicle_density_per_m_per_lane", sc.vehicle_density);
    sc.speed_range = get_range(s, "speed_range_kmh", sc.speed_range, 1.0 / 3.6);
    sc.nv_fraction = get_number(s, "nv_fraction", sc.nv_fraction);
    sc.vehicle_cpu_range = get_range(s, "vehicle_cpu_range_ghz", sc.vehicle_cpu_range, 1e9);
    sc.vehicle_kappa_range = get_range(s, "vehicle_kappa_range", sc.vehicle_kappa_range, 1.0);

    if (s.contains("rsu")) {
      const auto& r = s.at("rsu");
      reject_unknown(
          r, {"count", "spacing_m", "height_m", "service_range_m", "cpu_range_ghz", "kappa_range"},
          "scenario.rsu");
      sc.rsu_count = get_int(r, "count", sc.rsu_count);
      sc.rsu_spacing = get_number(r, "spacing_m", sc.rsu_spacing);
      sc.rsu_height = get_number(r, "height_m", sc.rsu_height);
      sc.rsu_service_range = get_number(r, "service_range_m", sc.rsu_service_range);
      sc.rsu_cpu_range = get_range(r, "cpu_range_ghz", sc.rsu_cpu_range, 1e9);
      sc.rsu_kappa_range = get_range(r, "kappa_range", sc.rsu_kappa_range, 1.0);
    }

    if (s.contains("task")) {
      const auto& t = s.at("task");
      reject_unknown(t, {"subtask_count", "data_range_mb", "workload_range_mcycles", "deadline_s"},
                     "scenario.task");
      sc.task.subtask_count = get_int(t, "subtask_count", sc.task.subtask_count);
      sc.task.data_range = get_range(t, "data_range_mb", sc.task.data_range, 1e6);
      sc.task.workload_range = get_range(t, "workload_range_mcycles", sc.task.workload_range, 1e6);
      sc.task.deadline = get_number(t, "deadline_s", sc.task.deadline);
    }

    if (s.contains("weights")) {
      const auto& w = s.at("weights");
      reject_unknown(w, {"vehicle", "rsu"}, "scenario.weights");
      sc.vehicle_weight = get_number(w, "vehicle", sc.vehicle_weight);
      sc.rsu_weight = get_number(w, "rsu", sc.rsu_weight);
    }
  }

  if (j.contains("channel")) {
    const auto& c = j.at("channel");
    reject_unknown(c,
                   {"v2v_bandwidth_mhz", "system_bandwidth_mhz", "subchannel_mhz",
                    "noise_dbw_per_hz", "v2i_pathloss_exponent", "wired_energy_per_bit_j",
                    "wired_delay_per_bit_s", "v2v_range_m", "setup_delay_s", "tau_max_s",
                    "v2i_3d_distance", "fading"},
                   "channel");
    auto& ch = config.channel;
    ch.b_v2v = get_number(c, "v2v_bandwidth_mhz", ch.b_v2v / 1e6) * 1e6;
    ch.b_total = get_number(c, "system_bandwidth_mhz", ch.b_total / 1e6) * 1e6;
    ch.b0 = get_number(c, "subchannel_mhz", ch.b0 / 1e6) * 1e6;
    ch.num_subchannels = static_cast<int>(std::llround(ch.b_total / ch.b0));
    const double noise_dbw =
        get_number(c, "noise_dbw_per_hz", 10.0 * std::log10(ch.noise_density));
    ch.noise_density = std::pow(10.0, noise_dbw / 10.0);
    ch.v2i_pathloss_exponent = get_number(c, "v2i_pathloss_exponent", ch.v2i_pathloss_exponent);
    ch.wired_energy_per_bit = get_number(c, "wired_energy_per_bit_j", ch.wired_energy_per_bit);
    ch.wired_delay_per_bit = get_number(c, "wired_delay_per_bit_s", ch.wired_delay_per_bit);
    ch.d_v2v_max = get_number(c, "v2v_range_m", ch.d_v2v_max);
    ch.setup_delay = get_number(c, "setup_delay_s", ch.setup_delay);
    if (c.contains("tau_max_s") && !c.at("tau_max_s").is_null()) {
      ch.tau_max = get_number(c, "tau_max_s", 0.0);
    }
    ch.v2i_3d_distance = get_bool(c, "v2i_3d_distance", ch.v2i_3d_distance);
    if (c.contains("fading")) {
      const auto& f = c.at("fading");
      reject_unknown(f, {"enabled", "seed"}, "channel.fading");
      config.fading.enabled = get_bool(f, "enabled", false);
      config.fading.seed = static_cast<std::uint64_t>(get_number(f, "seed", 0.0));
    }
  }

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    reject_unknown(s,
                   {"convergence_rel", "max_outer_iterations", "max_split_sweeps",
                    "repair_aggregate_compute"},
                   "solver");
    config.solver.convergence_rel = get_number(s, "convergence_rel", config.solver.convergence_rel);
    config.solver.max_outer_iterations =
        get_int(s, "max_outer_iterations", config.solver.max_outer_iterations);
    config.solver.max_split_sweeps = get_int(s, "max_split_sweeps", config.solver.max_split_sweeps);
    config.solver.repair_aggregate_compute =
        get_bool(s, "repair_aggregate_compute", config.solver.repair_aggregate_compute);
  }

  config.validate();
  return config;
}

nlohmann::json config_to_json(const RunConfig& config) {
  const auto& sc = config.scenario;
  const auto& ch = config.channel;
  json j;
  j["scenario"] = {
      {"seed", sc.seed},
      {"lanes", sc.lanes},
      {"lane_width_m", sc.lane_width},
      {"road_length_m", sc.road_length},
      {"vehicle_density_per_m_per_lane", sc.vehicle_density},
      {"speed_range_kmh", {sc.speed_range[0] * 3.6, sc.speed_range[1] * 3.6}},
      {"nv_fraction", sc.nv_fraction},
      {"vehicle_cpu_range_ghz", {sc.vehicle_cpu_range[0] / 1e9, sc.vehicle_cpu_range[1] / 1e9}},
      {"vehicle_kappa_range", {sc.vehicle_kappa_range[0], sc.vehicle_kappa_range[1]}},
      {"rsu",
       {{"count", sc.rsu_count},
        {"spacing_m", sc.rsu_spacing},
        {"height_m", sc.rsu_height},
        {"service_range_m", sc.rsu_service_range},
        {"cpu_range_ghz", {sc.rsu_cpu_range[0] / 1e9, sc.rsu_cpu_range[1] / 1e9}},
        {"kappa_range", {sc.rsu_kappa_range[0], sc.rsu_kappa_range[1]}}}},
      {"task",
       {{"subtask_count", sc.task.subtask_count},
        {"data_range_mb", {sc.task.data_range[0] / 1e6, sc.task.data_range[1] / 1e6}},
        {"workload_range_mcycles",
         {sc.task.workload_range[0] / 1e6, sc.task.workload_range[1] / 1e6}},
        {"deadline_s", sc.task.deadline}}},
      {"weights", {{"vehicle", sc.vehicle_weight}, {"rsu", sc.rsu_weight}}},
  };
  j["channel"] = {
      {"v2v_bandwidth_mhz", ch.b_v2v / 1e6},
      {"system_bandwidth_mhz", ch.b_total / 1e6},
      {"subchannel_mhz", ch.b0 / 1e6},
      {"noise_dbw_per_hz", 10.0 * std::log10(ch.noise_density)},
      {"v2i_pathloss_exponent", ch.v2i_pathloss_exponent},
      {"wired_energy_per_bit_j", ch.wired_energy_per_bit},
      {"wired_delay_per_bit_s", ch.wired_delay_per_bit},
      {"v2v_range_m", ch.d_v2v_max},
      {"setup_delay_s", ch.setup_delay},
      {"tau_max_s", ch.tau_max ? json(*ch.tau_max) : json(nullptr)},
      {"v2i_3d_distance", ch.v2i_3d_distance},
      {"fading", {{"enabled", config.fading.enabled}, {"seed", config.fading.seed}}},
  };
  j["solver"] = {
      {"convergence_rel", config.solver.convergence_rel},
      {"max_outer_iterations", config.solver.max_outer_iterations},
      {"max_split_sweeps", config.solver.max_split_sweeps},
      {"repair_aggregate_compute", config.solver.repair_aggregate_compute},
  };
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json scenario_to_json(const scenario::Scenario& s) {
  json vehicles = json::array();
  for (const auto& v : s.vehicles) {
    vehicles.push_back({{"id", v.id},
                        {"x", v.pos.x},
                        {"y", v.pos.y},
                        {"velocity", v.velocity},
                        {"max_cpu", v.max_cpu},
                        {"kappa", v.kappa},
                        {"weight", v.weight},
                        {"role", v.role == Role::NV ? "nv" : (v.role == Role::HV ? "hv" : "iv")}});
  }
  json tasks = json::array();
  for (const auto& [owner, task] : s.tasks) {
    json subtasks = json::array();
    for (const auto& st : task.subtasks) {
      subtasks.push_back({{"workload", st.workload}, {"output_size", st.output_size}});
    }
    tasks.push_back({{"owner", owner},
                     {"input_size", task.input_size},
                     {"deadline", task.deadline},
                     {"subtasks", subtasks}});
  }
  json rsus = json::array();
  for (const auto& r : s.rsus) {
    rsus.push_back({{"id", r.id},
                    {"x", r.pos.x},
                    {"y", r.pos.y},
                    {"height", r.height},
                    {"service_range", r.service_range},
                    {"max_cpu", r.max_cpu},
                    {"kappa", r.kappa},
                    {"weight", r.weight}});
  }
  return json{{"vehicles", vehicles}, {"tasks", tasks}, {"rsus", rsus}};
}

scenario::Scenario scenario_from_json(const nlohmann::json& j) {
  scenario::Scenario s;
  try {
    for (const auto& v : j.at("vehicles")) {
      Vehicle vehicle;
      vehicle.id = v.at("id").get<int>();
      vehicle.pos = {v.at("x").get<double>(), v.at("y").get<double>()};
      vehicle.velocity = v.at("velocity").get<double>();
      vehicle.max_cpu = v.at("max_cpu").get<double>();
      vehicle.kappa = v.at("kappa").get<double>();
      vehicle.weight = v.at("weight").get<double>();
      const auto role = v.at("role").get<std::string>();
      vehicle.role = role == "nv" ? Role::NV : (role == "hv" ? Role::HV : Role::IV);
      s.vehicles.push_back(vehicle);
    }
    for (const auto& t : j.at("tasks")) {
      SequentialTask task;
      task.owner = t.at("owner").get<int>();
      task.input_size = t.at("input_size").get<double>();
      task.deadline = t.at("deadline").get<double>();
      for (const auto& st : t.at("subtasks")) {
        task.subtasks.push_back(
            {st.at("workload").get<double>(), st.at("output_size").get<double>()});
      }
      s.tasks[task.owner] = std::move(task);
    }
    for (const auto& r : j.at("rsus")) {
      Rsu rsu;
      rsu.id = r.at("id").get<int>();
      rsu.pos = {r.at("x").get<double>(), r.at("y").get<double>()};
      rsu.height = r.at("height").get<double>();
      rsu.service_range = r.at("service_range").get<double>();
      rsu.max_cpu = r.at("max_cpu").get<double>();
      rsu.kappa = r.at("kappa").get<double>();
      rsu.weight = r.at("weight").get<double>();
      s.rsus.push_back(rsu);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }
  return s;
}

}  // namespace v2xmec::config
