// Experiment harness: named sweep protocols, a full two-tier system pass,
// deterministic CSV output and a text report with trend verdicts.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "v2xmec/config.hpp"
#include "v2xmec/matching.hpp"
#include "v2xmec/scenario.hpp"
#include "v2xmec/tier1.hpp"
#include "v2xmec/tier2.hpp"

namespace v2xmec::harness {

struct SweepSpec {
  std::string experiment;  // fig3..fig9 or custom
  std::string parameter;   // custom only: which config knob the values drive
  std::vector<double> values;
  std::vector<double> values2;  // second dimension, empty when unused
  std::vector<std::string> policies;
  std::vector<std::uint64_t> seeds;
  std::string output_path;

  void validate() const;
  /// Built-in protocol for one of the named experiments (values, policies,
  /// seeds 1..20).
  static SweepSpec for_experiment(const std::string& id);
};

struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string policy;
  double value = 0.0;
  double value2 = 0.0;
  // AEC over the tasks every compared policy solved (common set), normalized
  // by reference-over-used bandwidth and raw in Joules; aec_own averages over
  // the tasks this policy alone solved.
  double aec_norm = 0.0;
  double aec_raw = 0.0;
  double aec_own = 0.0;
  double mean_delay = 0.0;
  int matched = 0;
  int infeasible = 0;
  int iterations = 0;
};

/// Executes the sweep over a worker pool (cells keyed by seed); the returned
/// rows are canonically ordered so output is byte-stable for a given spec and
/// config.  Per-cell errors become rows with empty AEC fields, never aborts.
std::vector<ResultRow> run(const SweepSpec& spec, const config::RunConfig& config,
                           int threads = 0);

std::string to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(std::istream& in);
void write_csv_file(const std::vector<ResultRow>& rows, const std::string& path);

/// Mean +- standard error per (policy, value, value2) plus per-experiment
/// trend verdicts.
std::string report(const std::vector<ResultRow>& rows);

/// Writes one aggregated CSV per experiment present in the rows
/// (<dir>/<experiment>_summary.csv) with the per-group mean and standard
/// error of the normalized AEC.
void write_figure_summaries(const std::vector<ResultRow>& rows, const std::string& dir);

/// One full pass over a generated scenario: matching, vehicle-tier solves,
/// RSU-tier solve for the rest.  Pairs whose vehicle-tier solve is infeasible
/// fall through to the RSU tier.
struct SystemResult {
  scenario::Scenario scenario;
  matching::Matching matching;
  std::vector<tier1::Tier1Plan> tier1_plans;
  tier2::Tier2Plan tier2_plan;
  std::vector<int> fallthrough_nvs;
  int served = 0;
  int failed = 0;
  double total_weighted_energy = 0.0;
  double aec_raw = 0.0;     // mean weighted energy per served task
  double mean_delay = 0.0;  // over served tasks
};
SystemResult solve_system(const config::RunConfig& config, std::uint64_t seed);

/// Same pass over an existing scenario (e.g. a saved snapshot).
SystemResult solve_scenario(const config::RunConfig& config, scenario::Scenario scenario);

}  // namespace v2xmec::harness
