#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pufsim/costs.hpp"
#include "pufsim/engine.hpp"
#include "pufsim/unlearn.hpp"

namespace pufsim {

// Configuration problems; the message always names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SyntheticSpec {
  int num_classes = 2;
  std::size_t feature_dim = 2;
  std::size_t samples_per_class = 100;
  double class_separation = 4.0;
};

struct DatasetSpec {
  enum class Kind { synthetic, file };
  Kind kind = Kind::synthetic;
  SyntheticSpec synthetic;
  std::string path;
};

struct PartitionSpec {
  enum class Kind { iid, lda };
  Kind kind = Kind::iid;
  double alpha = 0.1;              // lda only
  std::size_t min_per_client = 2;  // lda only
};

struct ArchSpec {
  ModelKind kind = ModelKind::logistic;
  std::size_t hidden_dim = 16;  // mlp only
};

struct HyperSpec {
  std::size_t epochs = 1;
  double lr = 0.1;
  std::size_t batch_size = 32;
  double lr_decay = 1.0;
  double eta_s = 1.0;
};

struct UnlearnSpec {
  Strategy strategy = Strategy::puf_special;
  std::vector<std::size_t> targets;
  UnlearnScope scope = UnlearnScope::client;
  double sample_fraction = 0.5;
  double eta_r = 1.0;
  double eta_u = 0.0;  // filled with the per-strategy default when absent
  std::size_t unlearn_epochs = 1;
  bool not_negate_bias = false;
  PgaParams pga;
};

struct RecoverySpec {
  std::size_t max_rounds = 50;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  PartitionSpec partition;
  ArchSpec arch;
  std::size_t clients = 10;
  std::size_t rounds = 10;
  HyperSpec hyper;
  UnlearnSpec unlearn;
  RecoverySpec recovery;
  std::vector<std::uint64_t> seeds;
  // Keyed by CostInputs field name; applied over experiment-derived defaults.
  std::map<std::string, double> cost_inputs;
  std::string output_dir = "out";
  unsigned num_threads = 1;
  // Recovery continues the round-wise lr schedule from this offset; defaults
  // to `rounds` (continue where training stopped).
  std::optional<std::size_t> lr_schedule_offset;

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace pufsim
