#include "pufsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pufsim/rng.hpp"

namespace pufsim {

double forget_accuracy(const ParameterVector& w, const LabeledBatch& forget_data) {
  if (forget_data.size() == 0) throw std::invalid_argument("forget_accuracy: empty forget data");
  return predict_accuracy(w, forget_data);
}

double global_mean_train_loss(const ParameterVector& w, const FederatedDataset& dataset,
                              const std::vector<std::size_t>& client_ids) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t id : client_ids) {
    for (double l : per_sample_losses(w, dataset.clients.at(id))) total += l;
    count += dataset.clients.at(id).size();
  }
  if (count == 0) throw std::invalid_argument("global_mean_train_loss: no samples");
  return total / static_cast<double>(count);
}

double mia_yeom(const ParameterVector& w, double global_mean_train_loss,
                const LabeledBatch& forget_data) {
  if (forget_data.size() == 0) throw std::invalid_argument("mia_yeom: empty forget data");
  auto losses = per_sample_losses(w, forget_data);
  std::size_t below = 0;
  for (double l : losses) {
    if (l < global_mean_train_loss) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(losses.size());
}

namespace {

std::vector<double> subsample(const std::vector<double>& v, std::size_t m, Rng& rng) {
  if (v.size() <= m) return v;
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<double> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(v[order[i]]);
  return out;
}

}  // namespace

MiaSongResult mia_song(const ParameterVector& w, const LabeledBatch& retain_data,
                       const LabeledBatch& test_data, const LabeledBatch& forget_data,
                       std::uint64_t seed) {
  if (retain_data.size() == 0 || test_data.size() == 0) {
    throw std::invalid_argument("mia_song: retain and test data must be nonempty");
  }
  std::vector<double> seen = per_sample_confidences(w, retain_data);
  std::vector<double> unseen = per_sample_confidences(w, test_data);

  std::size_t m = std::min(seen.size(), unseen.size());
  Rng rng = Rng::stream(seed, "mia-song-subsample");
  seen = subsample(seen, m, rng);
  unseen = subsample(unseen, m, rng);

  std::vector<double> all = seen;
  all.insert(all.end(), unseen.begin(), unseen.end());
  std::sort(all.begin(), all.end());
  if (all.front() == all.back()) {
    return MiaSongResult{0.5, all.front(), true};
  }

  // Candidate thresholds: midpoints between distinct consecutive confidences,
  // plus one below the minimum. Samples with confidence >= t count as seen.
  std::vector<double> candidates{all.front() - 1.0};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    if (all[i] < all[i + 1]) candidates.push_back(0.5 * (all[i] + all[i + 1]));
  }
  candidates.push_back(all.back() + 1.0);

  double best_t = candidates.front();
  double best_acc = -1.0;
  for (double t : candidates) {
    std::size_t tp = 0, tn = 0;
    for (double c : seen) {
      if (c >= t) ++tp;
    }
    for (double c : unseen) {
      if (c < t) ++tn;
    }
    double balanced = 0.5 * (static_cast<double>(tp) / seen.size() +
                             static_cast<double>(tn) / unseen.size());
    if (balanced > best_acc) {
      best_acc = balanced;
      best_t = t;
    }
  }

  auto forget_conf = per_sample_confidences(w, forget_data);
  std::size_t hit = 0;
  for (double c : forget_conf) {
    if (c >= best_t) ++hit;
  }
  return MiaSongResult{static_cast<double>(hit) / forget_conf.size(), best_t, false};
}

EfficacyReport delta_report(const EfficacyMetrics& unlearned, const EfficacyMetrics& retrained) {
  EfficacyReport rep;
  rep.unlearned = unlearned;
  rep.retrained = retrained;
  rep.deltas.test_acc = std::fabs(unlearned.test_acc - retrained.test_acc);
  rep.deltas.forget_acc = std::fabs(unlearned.forget_acc - retrained.forget_acc);
  rep.deltas.mia_song = std::fabs(unlearned.mia_song - retrained.mia_song);
  rep.deltas.mia_yeom = std::fabs(unlearned.mia_yeom - retrained.mia_yeom);
  return rep;
}

}  // namespace pufsim
