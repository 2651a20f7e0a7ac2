#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pufsim/param.hpp"

namespace pufsim {

// A batch of labeled samples; inputs are row-major (rows x feature_dim).
struct LabeledBatch {
  std::vector<double> inputs;
  std::vector<int> labels;
  std::size_t feature_dim = 0;

  std::size_t size() const { return labels.size(); }
  const double* row(std::size_t i) const { return inputs.data() + i * feature_dim; }

  void validate(int num_classes) const;
  // Copy of selected rows, in the given order.
  LabeledBatch subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const LabeledBatch&) const = default;
};

enum class ModelKind { logistic, mlp };

struct ModelArch {
  ModelKind kind = ModelKind::logistic;
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;  // mlp only
  std::size_t num_classes = 0;

  void validate() const;
  Schema schema() const;
};

// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] weights, zero biases.
ParameterVector init_model(const ModelArch& arch, std::uint64_t seed);

// Mean cross-entropy over the batch and its analytic gradient. The mlp hidden
// activation is tanh.
std::pair<double, ParameterVector> loss_and_grad(const ParameterVector& w,
                                                 const LabeledBatch& batch);

ParameterVector sgd_step(const ParameterVector& w, const ParameterVector& grad, double lr);

// Fraction of argmax-correct predictions; argmax ties go to the lowest class
// index.
double predict_accuracy(const ParameterVector& w, const LabeledBatch& data);

// Cross-entropy loss of each sample, in batch order.
std::vector<double> per_sample_losses(const ParameterVector& w, const LabeledBatch& data);

// Max-softmax confidence of each sample (used by the confidence-threshold
// membership attack).
std::vector<double> per_sample_confidences(const ParameterVector& w, const LabeledBatch& data);

}  // namespace pufsim
