// Declarative run configuration: JSON with unit-suffixed keys, converted to
// strict SI at load time and validated against a closed schema.
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "v2xmec/model.hpp"
#include "v2xmec/scenario.hpp"
#include "v2xmec/tier2.hpp"

namespace v2xmec::config {

struct FadingConfig {
  bool enabled = false;
  std::uint64_t seed = 0;
};

struct RunConfig {
  scenario::ScenarioConfig scenario;
  ChannelParams channel;
  tier2::SolveOptions solver;
  FadingConfig fading;

  void validate() const;
};

/// All defaults: 3-lane road, 8-subtask tasks in the standard draw ranges,
/// 10 MHz V2V / 100 MHz system bandwidth in 1 MHz subchannels, -140 dBW/Hz
/// noise, 0.2 s deadline.
RunConfig default_config();

/// Parses and validates; unknown keys and out-of-range values raise
/// ConfigError.  Missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);

/// Scenario snapshots for replay: every vehicle, task and RSU field.
nlohmann::json scenario_to_json(const scenario::Scenario& s);
scenario::Scenario scenario_from_json(const nlohmann::json& j);

}  // namespace v2xmec::config
