#pragma once

#include <cstdint>

#include "pufsim/data.hpp"

namespace pufsim {

struct EfficacyMetrics {
  double test_acc = 0.0;
  double forget_acc = 0.0;
  double mia_song = 0.0;
  double mia_yeom = 0.0;
  bool mia_song_degenerate = false;

  bool operator==(const EfficacyMetrics&) const = default;
};

// Absolute differences vs the retrained model, per metric.
struct EfficacyDeltas {
  double test_acc = 0.0;
  double forget_acc = 0.0;
  double mia_song = 0.0;
  double mia_yeom = 0.0;

  bool operator==(const EfficacyDeltas&) const = default;
};

struct EfficacyReport {
  EfficacyMetrics unlearned;
  EfficacyMetrics retrained;
  EfficacyDeltas deltas;
};

double forget_accuracy(const ParameterVector& w, const LabeledBatch& forget_data);

// Mean per-sample training loss of w over the given clients' data; the Yeom
// attack threshold.
double global_mean_train_loss(const ParameterVector& w, const FederatedDataset& dataset,
                              const std::vector<std::size_t>& client_ids);

// Fraction of forget samples whose loss falls below the mean training loss.
double mia_yeom(const ParameterVector& w, double global_mean_train_loss,
                const LabeledBatch& forget_data);

struct MiaSongResult {
  double success_rate = 0.5;
  double threshold = 0.0;
  bool degenerate = false;
};

// Single-threshold attack on max-softmax confidence: balance seen (retain)
// vs unseen (test) by seeded subsampling, pick the threshold maximizing
// balanced accuracy, report the fraction of forget samples classified seen.
MiaSongResult mia_song(const ParameterVector& w, const LabeledBatch& retain_data,
                       const LabeledBatch& test_data, const LabeledBatch& forget_data,
                       std::uint64_t seed);

EfficacyReport delta_report(const EfficacyMetrics& unlearned, const EfficacyMetrics& retrained);

}  // namespace pufsim
