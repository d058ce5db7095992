#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "iuq/stats.hpp"
#include "iuq/types.hpp"

namespace iuq {

using ordered_json = nlohmann::ordered_json;

/// Everything one end-to-end run needs, parsed from a JSON scenario file.
/// Unknown keys anywhere in the tree are rejected with their path.
struct ScenarioConfig {
  std::string model;  // "affine" | "scalar-exp" | "reflood"
  Eigen::MatrixXd affine_S;  // affine model only

  GaussianParamSpec truth;   // generating distribution for synthesis
  std::vector<DesignPoint> designs;
  Eigen::VectorXd noise_sd;  // size 1 = shared across QoIs
  std::uint64_t seed = 1;

  std::string method;          // empty = generation only
  ordered_json method_options; // validated by the method runner

  int fuq_samples = 1000;
  double envelope_target = 0.95;

  ordered_json raw;  // canonical parsed form, hashed into reports
};

ScenarioConfig parse_scenario(const ordered_json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Build the ModelSpec the config names.
ModelSpec make_scenario_model(const ScenarioConfig& config);

/// FNV-1a over the canonical serialized form; stable across runs.
std::uint64_t fnv1a_hash(const std::string& text);

/// Delimited experiment exchange format. Header:
///   design_label, time_s, qoi_label, value, noise_sd
/// (the time_s column is omitted for scalar-output records).
void write_experiments_csv(const std::filesystem::path& path,
                           const std::vector<ExperimentRecord>& records,
                           const std::vector<std::string>& design_labels);
std::vector<ExperimentRecord> read_experiments_csv(const std::filesystem::path& path,
                                                   const std::vector<DesignPoint>& designs,
                                                   std::vector<std::string>* labels_out);

/// Scenario-level driver used by the CLI: generate -> method -> forward UQ ->
/// envelope -> report. Artifacts land in out_dir; the report is
/// deterministic for a fixed (config, seed).
struct ScenarioOutcome {
  ordered_json report;
  std::filesystem::path report_path;
};

ScenarioOutcome run_scenario(const ScenarioConfig& config,
                             const std::filesystem::path& out_dir, int jobs,
                             bool verbose);

/// Serialize a report tree (schema version "1") to disk, byte-stable.
void emit_report(const ordered_json& report, const std::filesystem::path& path);

}  // namespace iuq
