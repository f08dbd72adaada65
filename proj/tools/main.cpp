// Command-line front end: generate scenarios, solve them, run experiment
// sweeps, summarize results, validate configs.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "v2xmec/config.hpp"
#include "v2xmec/errors.hpp"
#include "v2xmec/harness.hpp"
#include "v2xmec/scenario.hpp"
#include "v2xmec/tier1.hpp"
#include "v2xmec/tier2.hpp"

namespace {

using nlohmann::json;
using namespace v2xmec;

config::RunConfig load_or_default(const std::string& path) {
  return path.empty() ? config::default_config() : config::load_config(path);
}

std::vector<std::uint64_t> parse_seeds(const std::string& arg) {
  // "1..20" or "1,2,7"
  std::vector<std::uint64_t> seeds;
  const auto dots = arg.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = std::stoull(arg.substr(0, dots));
    const std::uint64_t hi = std::stoull(arg.substr(dots + 2));
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  return seeds;
}

int fail_with(const std::string& message) {
  std::cerr << json{{"error", message}}.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-tier V2X edge offloading optimizer and experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_path, scenario_path, experiment, seeds_arg = "1..20";
  std::string parameter, values_arg, in_path;
  std::uint64_t seed = 1;
  int threads = 0;

  auto* gen = app.add_subcommand("generate", "generate a scenario snapshot");
  gen->add_option("--config", config_path, "config JSON path");
  gen->add_option("--seed", seed, "scenario seed");
  gen->add_option("--out", out_path, "snapshot output path (default stdout)");

  auto* solve = app.add_subcommand("solve", "run matching and both tiers on one scenario");
  solve->add_option("--config", config_path, "config JSON path");
  solve->add_option("--seed", seed, "scenario seed");
  solve->add_option("--scenario", scenario_path, "solve a saved snapshot instead of generating");
  solve->add_option("--out", out_path, "plan report output path (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "run an experiment sweep to CSV");
  sweep->add_option("--experiment", experiment, "fig3|fig4|fig5|fig6|fig7|fig8|fig9|custom")
      ->required();
  sweep->add_option("--config", config_path, "config JSON path");
  sweep->add_option("--seeds", seeds_arg, "seed list: 1..20 or 1,2,7");
  sweep->add_option("--out", out_path, "CSV output path (default stdout)");
  sweep->add_option("--threads", threads, "worker threads (default: hardware)");
  sweep->add_option("--parameter", parameter, "custom sweeps: config knob to vary");
  sweep->add_option("--values", values_arg, "comma-separated override of swept values");

  std::string out_dir;
  auto* rep = app.add_subcommand("report", "summarize a sweep CSV");
  rep->add_option("--in", in_path, "CSV path")->required();
  rep->add_option("--out-dir", out_dir, "also write per-experiment summary CSVs here");

  auto* val = app.add_subcommand("validate", "validate a config file");
  val->add_option("--config", config_path, "config JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = load_or_default(config_path);
      cfg.scenario.seed = seed;
      const auto scen = scenario::generate(cfg.scenario);
      json snapshot = config::scenario_to_json(scen);
      snapshot["config"] = config::config_to_json(cfg);
      const std::string text = snapshot.dump(2) + "\n";
      if (out_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) return fail_with("cannot write " + out_path);
        out << text;
      }
      return 0;
    }

    if (solve->parsed()) {
      auto cfg = load_or_default(config_path);
      harness::SystemResult result;
      if (!scenario_path.empty()) {
        std::ifstream in(scenario_path);
        if (!in) return fail_with("cannot open " + scenario_path);
        json snapshot;
        in >> snapshot;
        if (snapshot.contains("config")) cfg = config::config_from_json(snapshot.at("config"));
        result = harness::solve_scenario(cfg, config::scenario_from_json(snapshot));
      } else {
        result = harness::solve_system(cfg, seed);
      }

      json plans = json::array();
      for (const auto& p : result.tier1_plans) {
        plans.push_back({{"nv", p.nv_id},
                         {"hv", p.hv_id},
                         {"split", p.split},
                         {"tau_v2v_s", p.tau_v2v},
                         {"weighted_energy_j", p.weighted_energy},
                         {"total_delay_s", p.total_delay}});
      }
      json t2 = json::array();
      for (const auto& p : result.tier2_plan.nvs) {
        t2.push_back({{"nv", p.nv_id},
                      {"split", p.split},
                      {"tau_v2i_s", p.tau_v2i},
                      {"bandwidth_hz", p.bandwidth},
                      {"subchannels", p.subchannels},
                      {"weighted_energy_j", p.weighted_energy},
                      {"total_delay_s", p.total_delay}});
      }
      json failures = json::array();
      for (const auto& f : result.tier2_plan.failures) {
        failures.push_back({{"nv", f.nv_id}, {"reason", f.reason}});
      }
      const json out_json{{"seed", seed},
                          {"vehicles", result.scenario.vehicles.size()},
                          {"matched_pairs", result.matching.pairs.size()},
                          {"tier1_plans", plans},
                          {"tier2_plans", t2},
                          {"failures", failures},
                          {"served", result.served},
                          {"aec_raw_j", result.aec_raw},
                          {"mean_delay_s", result.mean_delay}};
      const std::string text = out_json.dump(2) + "\n";
      if (out_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) return fail_with("cannot write " + out_path);
        out << text;
      }
      return 0;
    }

    if (sweep->parsed()) {
      auto cfg = load_or_default(config_path);
      auto spec = harness::SweepSpec::for_experiment(experiment);
      spec.seeds = parse_seeds(seeds_arg);
      if (!parameter.empty()) spec.parameter = parameter;
      if (!values_arg.empty()) {
        spec.values.clear();
        std::stringstream ss(values_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          if (!tok.empty()) spec.values.push_back(std::stod(tok));
        }
      }
      spec.output_path = out_path;
      const auto rows = harness::run(spec, cfg, threads);
      if (out_path.empty()) {
        std::cout << harness::to_csv(rows);
      } else {
        harness::write_csv_file(rows, out_path);
        std::cerr << "wrote " << rows.size() << " rows to " << out_path << "\n";
      }
      return 0;
    }

    if (rep->parsed()) {
      std::ifstream in(in_path);
      if (!in) return fail_with("cannot open " + in_path);
      const auto rows = harness::rows_from_csv(in);
      std::cout << harness::report(rows);
      if (!out_dir.empty()) harness::write_figure_summaries(rows, out_dir);
      return 0;
    }

    if (val->parsed()) {
      config::load_config(config_path);
      std::cout << "config ok\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    return fail_with(e.what());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
