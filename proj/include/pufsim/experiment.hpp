#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pufsim/config.hpp"
#include "pufsim/metrics.hpp"

namespace pufsim {

struct RoundsRow {
  std::uint64_t seed = 0;
  std::string phase;  // "train" or "recovery"
  std::size_t round = 0;
  double test_acc = 0.0;
  std::optional<double> forget_acc;
  std::optional<double> mia_song;
  std::optional<double> mia_yeom;

  bool operator==(const RoundsRow&) const = default;
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  EfficacyMetrics original;
  EfficacyMetrics unlearned;  // after recovery
  EfficacyMetrics retrained;
  EfficacyDeltas deltas;
  std::size_t recovery_rounds = 0;
  bool recovery_capped = false;
  std::vector<RoundsRow> rows;

  bool operator==(const SeedResult&) const = default;
};

struct ExperimentReport {
  std::string config_json;  // echoed config, re-runnable as-is
  std::string code_version;
  std::vector<SeedResult> seeds;
  std::vector<CostReportEntry> costs;
};

bool operator==(const ExperimentReport& a, const ExperimentReport& b);

// Experiment-derived cost inputs with config overrides applied.
CostInputs cost_inputs_for(const ExperimentConfig& cfg);

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

// Per seed: train original, train the retrain baseline, apply the strategy,
// recover toward the retrained test accuracy, evaluate efficacy; then compute
// the closed-form cost report.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

std::string serialize_report(const ExperimentReport& report);
ExperimentReport parse_report(const std::string& text);

// Writes summary.json, rounds.csv, and costs.csv into dir.
void emit_reports(const ExperimentReport& report, const std::string& dir);

}  // namespace pufsim
