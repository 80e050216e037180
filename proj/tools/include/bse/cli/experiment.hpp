#ifndef BSE_CLI_EXPERIMENT_HPP
#define BSE_CLI_EXPERIMENT_HPP

// Experiment configuration: a base scenario, one sweep axis, one or more
// algorithm series, and where to write the results.

#include "bse/bench.hpp"
#include "bse/serialize.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bse::cli {

enum class SweepAxis {
  N,                // n_per_block
  Alpha,            // SOI shape
  Circ,             // SOI circularity
  Blocks,           // M, total sample count held fixed when `total_n` is set
  VariancePattern,  // "A".."D" over M = 5 blocks
  CoupledAlpha,     // background shape alpha, SOI shape alpha + 1
};

const char* to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct Series {
  std::string label;
  Json overrides = Json::object();  // scenario fields applied on top of the base
};

struct ExperimentConfig {
  std::string name = "experiment";
  Json scenario = Json::object();  // base scenario fields
  SweepAxis axis = SweepAxis::N;
  std::vector<Json> values;
  std::size_t total_n = 0;  // Blocks axis: n_per_block = total_n / M when nonzero
  std::vector<Series> series;
  std::vector<std::string> extra_bounds;  // "bice", "cmv", "csv": reference bounds per point
  std::size_t n_trials = 100;
  std::uint64_t seed = 1;
  std::string output = "results/experiment";  // prefix: <output>.json, <output>.csv, <output>_trials.csv

  void validate() const;
};

/// Parses an experiment. "scenario" may name a preset; top-level fields of `j`
/// then override the preset's.
ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& preset_dir);
Json to_json(const ExperimentConfig& cfg);

/// Loads presets/<name>.json; IoError when it does not exist.
Json load_preset(const std::string& name, const std::filesystem::path& preset_dir);
std::vector<std::string> list_presets(const std::filesystem::path& preset_dir);

/// FNV-1a 64 of the canonical (sorted-key) JSON dump, as 16 hex digits.
std::string config_hash(const Json& j);

/// SOI variances of a pattern, normalized to unit mean.
std::vector<double> variance_pattern(const std::string& type, int blocks);

/// Scenario of one (point, series) cell.
ScenarioConfig cell_scenario(const ExperimentConfig& cfg, std::size_t point, std::size_t series);

struct CellResult {
  std::string series;
  Json value;
  TrialStats stats;
  std::vector<std::pair<std::string, CribReport>> extra;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string hash;
  std::vector<CellResult> cells;  // point-major

  Json to_json() const;
  std::string summary_csv() const;
  std::string trials_csv() const;
};

/// Runs every cell. All series of a point share the per-point seed so their
/// trials are paired (same models and data).
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 0);

/// Writes <output>.json, <output>.csv and <output>_trials.csv.
void write_results(const ExperimentResult& res);

}  // namespace bse::cli

#endif
