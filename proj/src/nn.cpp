#include "pufsim/nn.hpp"

#include <algorithm>
#include <cmath>

#include "pufsim/rng.hpp"

namespace pufsim {

void LabeledBatch::validate(int num_classes) const {
  if (feature_dim == 0) throw ShapeError("LabeledBatch: feature_dim must be positive");
  if (inputs.size() != labels.size() * feature_dim) {
    throw ShapeError("LabeledBatch: inputs size does not match labels x feature_dim");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ShapeError("LabeledBatch: label " + std::to_string(y) + " out of range [0, " +
                       std::to_string(num_classes) + ")");
    }
  }
}

LabeledBatch LabeledBatch::subset(const std::vector<std::size_t>& indices) const {
  LabeledBatch out;
  out.feature_dim = feature_dim;
  out.labels.reserve(indices.size());
  out.inputs.reserve(indices.size() * feature_dim);
  for (std::size_t i : indices) {
    if (i >= size()) throw ShapeError("LabeledBatch::subset: index out of range");
    out.labels.push_back(labels[i]);
    out.inputs.insert(out.inputs.end(), row(i), row(i) + feature_dim);
  }
  return out;
}

void ModelArch::validate() const {
  if (feature_dim < 1 || num_classes < 1) {
    throw std::invalid_argument("ModelArch: feature_dim and num_classes must be >= 1");
  }
  if (kind == ModelKind::mlp && hidden_dim < 1) {
    throw std::invalid_argument("ModelArch: mlp requires hidden_dim >= 1");
  }
}

Schema ModelArch::schema() const {
  validate();
  if (kind == ModelKind::logistic) {
    return {{"linear.weight", {num_classes, feature_dim}}, {"linear.bias", {num_classes}}};
  }
  return {{"hidden.weight", {hidden_dim, feature_dim}},
          {"hidden.bias", {hidden_dim}},
          {"output.weight", {num_classes, hidden_dim}},
          {"output.bias", {num_classes}}};
}

ParameterVector init_model(const ModelArch& arch, std::uint64_t seed) {
  Schema schema = arch.schema();
  std::vector<double> values;
  values.reserve(schema_size(schema));
  Rng rng = Rng::stream(seed, "init");
  for (const auto& layer : schema) {
    if (layer.shape.size() == 2) {
      double bound = 1.0 / std::sqrt(static_cast<double>(layer.shape[1]));
      for (std::size_t i = 0; i < layer.size(); ++i) {
        values.push_back(rng.next_uniform(-bound, bound));
      }
    } else {
      values.insert(values.end(), layer.size(), 0.0);  // biases start at zero
    }
  }
  return ParameterVector(std::move(values), std::move(schema));
}

namespace {

struct ModelView {
  bool is_mlp;
  std::size_t d, h, k;
  const double* w1;  // k x d (logistic) or h x d (mlp)
  const double* b1;
  const double* w2 = nullptr;  // k x h
  const double* b2 = nullptr;
};

ModelView view(const ParameterVector& w) {
  ModelView v{};
  if (w.schema.size() == 2) {
    v.is_mlp = false;
    v.k = w.schema[0].shape[0];
    v.d = w.schema[0].shape[1];
    v.w1 = w.values.data();
    v.b1 = w.values.data() + w.layer_offset(1);
  } else if (w.schema.size() == 4) {
    v.is_mlp = true;
    v.h = w.schema[0].shape[0];
    v.d = w.schema[0].shape[1];
    v.k = w.schema[2].shape[0];
    v.w1 = w.values.data();
    v.b1 = w.values.data() + w.layer_offset(1);
    v.w2 = w.values.data() + w.layer_offset(2);
    v.b2 = w.values.data() + w.layer_offset(3);
  } else {
    throw ShapeError("unrecognized parameter schema");
  }
  return v;
}

void check_batch(const ModelView& v, const LabeledBatch& batch) {
  if (batch.size() == 0) throw ShapeError("empty batch");
  if (batch.feature_dim != v.d) {
    throw ShapeError("batch feature_dim " + std::to_string(batch.feature_dim) +
                     " does not match model feature_dim " + std::to_string(v.d));
  }
  batch.validate(static_cast<int>(v.k));
}

// Forward pass for one sample; fills softmax probabilities (size k) and, for
// the mlp, hidden activations (size h).
void forward(const ModelView& v, const double* x, std::vector<double>& hidden,
             std::vector<double>& probs) {
  probs.assign(v.k, 0.0);
  if (v.is_mlp) {
    hidden.assign(v.h, 0.0);
    for (std::size_t j = 0; j < v.h; ++j) {
      double z = v.b1[j];
      for (std::size_t f = 0; f < v.d; ++f) z += v.w1[j * v.d + f] * x[f];
      hidden[j] = std::tanh(z);
    }
    for (std::size_t c = 0; c < v.k; ++c) {
      double z = v.b2[c];
      for (std::size_t j = 0; j < v.h; ++j) z += v.w2[c * v.h + j] * hidden[j];
      probs[c] = z;
    }
  } else {
    for (std::size_t c = 0; c < v.k; ++c) {
      double z = v.b1[c];
      for (std::size_t f = 0; f < v.d; ++f) z += v.w1[c * v.d + f] * x[f];
      probs[c] = z;
    }
  }
  double zmax = *std::max_element(probs.begin(), probs.end());
  double sum = 0.0;
  for (double& p : probs) {
    p = std::exp(p - zmax);
    sum += p;
  }
  for (double& p : probs) p /= sum;
}

}  // namespace

std::pair<double, ParameterVector> loss_and_grad(const ParameterVector& w,
                                                 const LabeledBatch& batch) {
  ModelView v = view(w);
  check_batch(v, batch);

  ParameterVector grad = zeros_like(w);
  double* g1 = grad.values.data();
  double* gb1 = grad.values.data() + grad.layer_offset(1);
  double* g2 = v.is_mlp ? grad.values.data() + grad.layer_offset(2) : nullptr;
  double* gb2 = v.is_mlp ? grad.values.data() + grad.layer_offset(3) : nullptr;

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  std::vector<double> hidden, probs, dlogits(v.k);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double* x = batch.row(i);
    forward(v, x, hidden, probs);
    int y = batch.labels[i];
    loss -= std::log(std::max(probs[y], 1e-300)) * inv_n;
    for (std::size_t c = 0; c < v.k; ++c) {
      dlogits[c] = (probs[c] - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_n;
    }
    if (v.is_mlp) {
      for (std::size_t c = 0; c < v.k; ++c) {
        gb2[c] += dlogits[c];
        for (std::size_t j = 0; j < v.h; ++j) g2[c * v.h + j] += dlogits[c] * hidden[j];
      }
      for (std::size_t j = 0; j < v.h; ++j) {
        double da = 0.0;
        for (std::size_t c = 0; c < v.k; ++c) da += v.w2[c * v.h + j] * dlogits[c];
        double dz = da * (1.0 - hidden[j] * hidden[j]);
        gb1[j] += dz;
        for (std::size_t f = 0; f < v.d; ++f) g1[j * v.d + f] += dz * x[f];
      }
    } else {
      for (std::size_t c = 0; c < v.k; ++c) {
        gb1[c] += dlogits[c];
        for (std::size_t f = 0; f < v.d; ++f) g1[c * v.d + f] += dlogits[c] * x[f];
      }
    }
  }
  grad.require_finite("loss_and_grad");
  return {loss, std::move(grad)};
}

ParameterVector sgd_step(const ParameterVector& w, const ParameterVector& grad, double lr) {
  w.require_same_schema(grad, "sgd_step");
  if (lr <= 0.0) throw std::invalid_argument("sgd_step: lr must be positive");
  ParameterVector out = w;
  axpy(-lr, grad, out);
  out.require_finite("sgd_step");
  return out;
}

double predict_accuracy(const ParameterVector& w, const LabeledBatch& data) {
  ModelView v = view(w);
  check_batch(v, data);
  std::vector<double> hidden, probs;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(v, data.row(i), hidden, probs);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < v.k; ++c) {
      if (probs[c] > probs[arg]) arg = c;  // ties keep the lowest index
    }
    if (static_cast<int>(arg) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<double> per_sample_losses(const ParameterVector& w, const LabeledBatch& data) {
  ModelView v = view(w);
  check_batch(v, data);
  std::vector<double> hidden, probs, out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(v, data.row(i), hidden, probs);
    out[i] = -std::log(std::max(probs[data.labels[i]], 1e-300));
  }
  return out;
}

std::vector<double> per_sample_confidences(const ParameterVector& w, const LabeledBatch& data) {
  ModelView v = view(w);
  check_batch(v, data);
  std::vector<double> hidden, probs, out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(v, data.row(i), hidden, probs);
    out[i] = *std::max_element(probs.begin(), probs.end());
  }
  return out;
}

}  // namespace pufsim
