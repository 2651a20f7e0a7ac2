#include "pufsim/unlearn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pufsim/rng.hpp"

namespace pufsim {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::puf_regular: return "puf_regular";
    case Strategy::puf_special: return "puf_special";
    case Strategy::not_first_layer: return "not";
    case Strategy::pga: return "pga";
    case Strategy::natural: return "natural";
    case Strategy::retrain: return "retrain";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "puf_regular") return Strategy::puf_regular;
  if (s == "puf_special") return Strategy::puf_special;
  if (s == "not") return Strategy::not_first_layer;
  if (s == "pga") return Strategy::pga;
  if (s == "natural") return Strategy::natural;
  if (s == "retrain") return Strategy::retrain;
  throw std::invalid_argument("unknown unlearning strategy: " + s);
}

void UnlearnRequest::validate(std::size_t num_clients) const {
  if (targets.empty()) throw std::invalid_argument("UnlearnRequest: targets must be nonempty");
  for (std::size_t t : targets) {
    if (t >= num_clients) {
      throw std::invalid_argument("UnlearnRequest: target " + std::to_string(t) +
                                  " out of range for " + std::to_string(num_clients) +
                                  " clients");
    }
  }
  if (scope == UnlearnScope::sample &&
      (sample_fraction <= 0.0 || sample_fraction >= 1.0)) {
    throw std::invalid_argument("UnlearnRequest: sample fraction must be in (0, 1)");
  }
}

void PgaParams::validate() const {
  if (ascent_epochs < 1 || clip_threshold <= 0.0 || ball_radius < 0.0 ||
      early_stop_loss_threshold <= 0.0 || batch_size < 1 || lr <= 0.0) {
    throw std::invalid_argument("PgaParams: all parameters must be positive");
  }
}

namespace {

void append_batch(LabeledBatch& dst, const LabeledBatch& src) {
  if (dst.feature_dim == 0) dst.feature_dim = src.feature_dim;
  dst.labels.insert(dst.labels.end(), src.labels.begin(), src.labels.end());
  dst.inputs.insert(dst.inputs.end(), src.inputs.begin(), src.inputs.end());
}

bool is_target(const UnlearnRequest& req, std::size_t id) {
  return std::find(req.targets.begin(), req.targets.end(), id) != req.targets.end();
}

}  // namespace

ScopeViews sample_scope_filter(const UnlearnRequest& request, const FederatedDataset& dataset) {
  request.validate(dataset.num_clients());
  ScopeViews views;
  views.unlearn_view = dataset;
  views.recovery_view = dataset;

  if (request.scope == UnlearnScope::client) {
    for (std::size_t id = 0; id < dataset.num_clients(); ++id) {
      if (is_target(request, id)) {
        append_batch(views.forget_data, dataset.clients[id]);
      } else {
        views.recovery_clients.push_back(id);
      }
    }
    if (views.recovery_clients.empty()) {
      throw std::invalid_argument("sample_scope_filter: no clients left for recovery");
    }
    return views;
  }

  // Sample scope: targets train on their forget subset during the unlearning
  // round and contribute only retain data to recovery.
  for (std::size_t id = 0; id < dataset.num_clients(); ++id) {
    views.recovery_clients.push_back(id);
    if (!is_target(request, id)) continue;
    ForgetSplit split =
        select_forget_subset(dataset.clients[id], request.sample_fraction,
                             request.sample_seed, id);
    append_batch(views.forget_data, split.forget);
    views.unlearn_view.clients[id] = std::move(split.forget);
    views.recovery_view.clients[id] = std::move(split.retain);
  }
  return views;
}

ParameterVector puf_regular_round(const ParameterVector& w_t, const FederatedDataset& dataset,
                                  const std::vector<std::size_t>& retained,
                                  const std::vector<std::size_t>& targets, double eta_r,
                                  double eta_u, const HyperParams& hyper, std::uint64_t seed,
                                  std::size_t round_index, unsigned num_threads) {
  if (retained.empty()) {
    throw std::invalid_argument("puf_regular_round: empty retained set (use puf_special)");
  }
  RoundPlan check;
  check.retained = retained;
  check.targets = targets;
  check.mode = RoundMode::puf_regular;
  check.validate();

  std::size_t n = dataset.total_samples(retained) + dataset.total_samples(targets);
  auto plus_updates = run_clients(dataset, retained, w_t, hyper, seed, round_index, num_threads);
  ParameterVector delta_plus = aggregate(plus_updates, n);

  ParameterVector out = w_t;
  axpy(eta_r, delta_plus, out);
  // An empty target set degenerates to a standard round.
  if (!targets.empty()) {
    auto minus_updates = run_clients(dataset, targets, w_t, hyper, seed, round_index, num_threads);
    ParameterVector delta_minus = aggregate(minus_updates, n);
    axpy(-eta_u, delta_minus, out);
  }
  out.require_finite("puf_regular_round");
  return out;
}

ParameterVector puf_special_round(const ParameterVector& w_t, const FederatedDataset& dataset,
                                  const std::vector<std::size_t>& targets, double eta_u,
                                  const HyperParams& hyper, std::uint64_t seed,
                                  std::size_t round_index, unsigned num_threads) {
  if (targets.empty()) throw std::invalid_argument("puf_special_round: empty target set");
  std::size_t n = dataset.total_samples(targets);
  auto updates = run_clients(dataset, targets, w_t, hyper, seed, round_index, num_threads);
  ParameterVector delta_minus = aggregate(updates, n);
  ParameterVector out = w_t;
  axpy(-eta_u, delta_minus, out);
  out.require_finite("puf_special_round");
  return out;
}

ParameterVector not_unlearn(const ParameterVector& w_t, bool negate_bias) {
  if (w_t.schema.empty()) throw std::invalid_argument("not_unlearn: empty schema");
  ParameterVector out = w_t;
  std::size_t end = w_t.schema[0].size();
  for (std::size_t i = 0; i < end; ++i) out.values[i] = -out.values[i];
  if (negate_bias && w_t.schema.size() > 1 && w_t.schema[1].shape.size() == 1) {
    std::size_t off = w_t.layer_offset(1);
    for (std::size_t i = 0; i < w_t.schema[1].size(); ++i) {
      out.values[off + i] = -out.values[off + i];
    }
  }
  return out;
}

ParameterVector pga_unlearn(const ParameterVector& w_t, const LabeledBatch& target_data,
                            const ParameterVector& w_ref, const PgaParams& params,
                            std::uint64_t seed) {
  params.validate();
  if (target_data.size() == 0) throw std::invalid_argument("pga_unlearn: empty target data");
  w_t.require_same_schema(w_ref, "pga_unlearn");

  auto project = [&](ParameterVector& w) {
    ParameterVector diff = w - w_ref;
    double dist = l2_norm(diff);
    if (dist > params.ball_radius) {
      double scale = (dist > 0.0) ? params.ball_radius / dist : 0.0;
      w = w_ref;
      axpy(scale, diff, w);
    }
  };

  ParameterVector w = w_t;
  project(w);
  std::vector<std::size_t> order(target_data.size());
  for (std::size_t epoch = 0; epoch < params.ascent_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(seed, "pga-epoch-shuffle", {epoch});
    rng.shuffle(order);
    for (std::size_t lo = 0; lo < order.size(); lo += params.batch_size) {
      std::size_t hi = std::min(lo + params.batch_size, order.size());
      LabeledBatch batch = target_data.subset({order.begin() + lo, order.begin() + hi});
      auto [loss, grad] = loss_and_grad(w, batch);
      if (!std::isfinite(loss)) throw UnlearnError("pga_unlearn: non-finite loss");
      double gnorm = l2_norm(grad);
      if (gnorm > params.clip_threshold) {
        grad = (params.clip_threshold / gnorm) * grad;
      }
      axpy(params.lr, grad, w);  // ascent
      project(w);
      if (params.early_stop_enabled) {
        auto losses = per_sample_losses(w, target_data);
        double mean = std::accumulate(losses.begin(), losses.end(), 0.0) /
                      static_cast<double>(losses.size());
        if (!std::isfinite(mean)) throw UnlearnError("pga_unlearn: non-finite forget loss");
        if (mean >= params.early_stop_loss_threshold) return w;
      }
    }
  }
  w.require_finite("pga_unlearn");
  return w;
}

ParameterVector make_pga_reference(const ParameterVector& w_t,
                                   const std::optional<ClientUpdate>& last_target_update,
                                   std::size_t n_last) {
  if (!last_target_update.has_value()) {
    throw UnlearnError(
        "make_pga_reference: no stored update for the target client; PGA requires stateful "
        "clients that keep their latest model update");
  }
  if (n_last == 0) throw std::invalid_argument("make_pga_reference: n_last must be positive");
  const ClientUpdate& u = *last_target_update;
  w_t.require_same_schema(u.delta, "make_pga_reference");
  ParameterVector out = w_t;
  axpy(-static_cast<double>(u.weight) / static_cast<double>(n_last), u.delta, out);
  return out;
}

std::pair<ParameterVector, TrainHistory> retrain_baseline(const FederatedDataset& dataset,
                                                          const std::vector<std::size_t>& targets,
                                                          const ModelArch& arch,
                                                          TrainOptions opts, std::uint64_t seed) {
  if (targets.empty()) throw std::invalid_argument("retrain_baseline: empty target set");
  opts.client_ids.clear();
  for (std::size_t id = 0; id < dataset.num_clients(); ++id) {
    if (std::find(targets.begin(), targets.end(), id) == targets.end()) {
      opts.client_ids.push_back(id);
    }
  }
  if (opts.client_ids.empty()) {
    throw std::invalid_argument("retrain_baseline: no clients left after removing targets");
  }
  return train(dataset, arch, opts, seed);
}

std::pair<std::size_t, bool> recovery_rounds_from_curve(const std::vector<double>& test_acc_curve,
                                                        double target) {
  if (test_acc_curve.empty()) {
    throw std::invalid_argument("recovery_rounds_from_curve: empty curve");
  }
  for (std::size_t i = 0; i < test_acc_curve.size(); ++i) {
    if (test_acc_curve[i] >= target) return {i, false};
  }
  return {test_acc_curve.size() - 1, true};
}

RecoveryResult recover(const ParameterVector& w_start, const FederatedDataset& dataset,
                       const std::vector<std::size_t>& clients, const TrainOptions& base_opts,
                       std::size_t max_rounds, double stop_target_acc,
                       const LabeledBatch& forget_data, std::uint64_t seed,
                       const RecoveryObserver& observer) {
  if (max_rounds < 1) throw std::invalid_argument("recover: max_rounds must be >= 1");
  if (clients.empty()) throw std::invalid_argument("recover: no recovery clients");

  RecoveryResult res;
  res.model = w_start;
  auto eval = [&](std::size_t round) {
    RecoveryPoint p;
    p.round = round;
    p.test_accuracy = predict_accuracy(res.model, dataset.test);
    p.forget_accuracy =
        forget_data.size() ? predict_accuracy(res.model, forget_data) : 0.0;
    res.curve.push_back(p);
    if (observer) observer(round, res.model);
    return p.test_accuracy;
  };

  if (eval(0) >= stop_target_acc) {
    res.recovery_rounds = 0;
    return res;
  }
  EngineState state{res.model, &dataset, {}};
  for (std::size_t t = 0; t < max_rounds; ++t) {
    HyperParams h = base_opts.hyper;
    h.lr = base_opts.hyper.lr *
           std::pow(base_opts.lr_decay, static_cast<double>(base_opts.lr_schedule_offset + t));
    RoundPlan plan;
    plan.round_index = base_opts.lr_schedule_offset + t;
    plan.retained = clients;
    plan.eta_s = base_opts.eta_s;
    state = run_round(std::move(state), plan, h, seed, base_opts.num_threads);
    res.model = state.model;
    if (eval(t + 1) >= stop_target_acc) {
      res.recovery_rounds = t + 1;
      return res;
    }
  }
  res.recovery_rounds = max_rounds;
  res.capped = true;
  return res;
}

}  // namespace pufsim
