#include "pufsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "pufsim/rng.hpp"

namespace pufsim {

std::string to_string(RoundMode mode) {
  switch (mode) {
    case RoundMode::standard: return "standard";
    case RoundMode::puf_regular: return "puf_regular";
    case RoundMode::puf_special: return "puf_special";
  }
  return "unknown";
}

void RoundPlan::validate() const {
  for (std::size_t t : targets) {
    if (std::find(retained.begin(), retained.end(), t) != retained.end()) {
      throw std::invalid_argument("RoundPlan: client " + std::to_string(t) +
                                  " is both retained and target");
    }
  }
  if (mode == RoundMode::standard && !targets.empty()) {
    throw std::invalid_argument("RoundPlan: standard mode must have no targets");
  }
  if (mode == RoundMode::puf_special && !retained.empty()) {
    throw std::invalid_argument("RoundPlan: puf_special must have no retained participants");
  }
}

ClientUpdate client_opt(const LabeledBatch& client_data, const ParameterVector& w_t,
                        const HyperParams& hyper, std::uint64_t seed,
                        std::size_t client_id) {
  if (client_data.size() == 0) throw std::invalid_argument("client_opt: empty client data");
  if (hyper.epochs < 1 || hyper.batch_size < 1) {
    throw std::invalid_argument("client_opt: epochs and batch_size must be >= 1");
  }

  ParameterVector w = w_t;
  std::vector<std::size_t> order(client_data.size());
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(seed, "client-epoch-shuffle", {epoch});
    rng.shuffle(order);
    for (std::size_t lo = 0; lo < order.size(); lo += hyper.batch_size) {
      std::size_t hi = std::min(lo + hyper.batch_size, order.size());
      LabeledBatch batch = client_data.subset({order.begin() + lo, order.begin() + hi});
      auto [loss, grad] = loss_and_grad(w, batch);
      (void)loss;
      if (hyper.lr > 0.0) w = sgd_step(w, grad, hyper.lr);
    }
  }
  return ClientUpdate{w - w_t, client_data.size(), client_id};
}

ParameterVector aggregate(const std::vector<ClientUpdate>& updates, std::size_t n) {
  if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
  if (n == 0) throw std::invalid_argument("aggregate: n must be positive");

  std::vector<const ClientUpdate*> ordered;
  ordered.reserve(updates.size());
  for (const auto& u : updates) ordered.push_back(&u);
  std::sort(ordered.begin(), ordered.end(),
            [](const ClientUpdate* a, const ClientUpdate* b) { return a->client_id < b->client_id; });

  ParameterVector sum = zeros_like(ordered.front()->delta);
  for (const ClientUpdate* u : ordered) {
    if (u->weight < 1) throw std::invalid_argument("aggregate: update weight must be >= 1");
    axpy(static_cast<double>(u->weight), u->delta, sum);
  }
  return (1.0 / static_cast<double>(n)) * sum;
}

ParameterVector server_step(const ParameterVector& w_t, const ParameterVector& delta,
                            double eta_s) {
  w_t.require_same_schema(delta, "server_step");
  ParameterVector out = w_t;
  axpy(eta_s, delta, out);
  out.require_finite("server_step");
  return out;
}

std::vector<ClientUpdate> run_clients(const FederatedDataset& dataset,
                                      const std::vector<std::size_t>& client_ids,
                                      const ParameterVector& w_t, const HyperParams& hyper,
                                      std::uint64_t seed, std::size_t round_index,
                                      unsigned num_threads) {
  std::vector<ClientUpdate> updates(client_ids.size());
  auto work = [&](std::size_t i) {
    std::size_t id = client_ids[i];
    std::uint64_t client_seed = Rng::derive_key(seed, "client-opt", {round_index, id});
    updates[i] = client_opt(dataset.clients.at(id), w_t, hyper, client_seed, id);
  };
  if (num_threads <= 1 || client_ids.size() <= 1) {
    for (std::size_t i = 0; i < client_ids.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (client_ids.size() + num_threads - 1) / num_threads;
    for (unsigned t = 0; t < num_threads; ++t) {
      std::size_t lo = t * chunk;
      std::size_t hi = std::min(lo + chunk, client_ids.size());
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return updates;
}

namespace {

double mean_loss_over(const FederatedDataset& dataset,
                      const std::vector<std::size_t>& client_ids, const ParameterVector& w) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t id : client_ids) {
    for (double l : per_sample_losses(w, dataset.clients.at(id))) total += l;
    count += dataset.clients.at(id).size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace

EngineState run_round(EngineState state, const RoundPlan& plan, const HyperParams& hyper,
                      std::uint64_t seed, unsigned num_threads) {
  plan.validate();
  if (plan.mode != RoundMode::standard) {
    throw std::invalid_argument("run_round: only standard rounds; unlearning rounds have "
                                "dedicated drivers");
  }
  if (plan.retained.empty()) {
    throw std::invalid_argument("run_round: standard round needs participants");
  }
  const FederatedDataset& dataset = *state.dataset;
  auto updates = run_clients(dataset, plan.retained, state.model, hyper, seed,
                             plan.round_index, num_threads);
  std::size_t n = dataset.total_samples(plan.retained);
  ParameterVector delta = aggregate(updates, n);
  state.model = server_step(state.model, delta, plan.eta_s);

  RoundRecord rec;
  rec.round_index = plan.round_index;
  rec.test_accuracy = predict_accuracy(state.model, dataset.test);
  rec.mean_train_loss = mean_loss_over(dataset, plan.retained, state.model);
  rec.participants = plan.retained;
  rec.mode = plan.mode;
  if (!state.history.empty() && state.history.back().round_index >= rec.round_index) {
    throw std::invalid_argument("run_round: round indices must be strictly increasing");
  }
  state.history.push_back(std::move(rec));
  return state;
}

std::pair<ParameterVector, TrainHistory> train_from(const FederatedDataset& dataset,
                                                    ParameterVector w_start,
                                                    const TrainOptions& opts,
                                                    std::uint64_t seed) {
  if (opts.rounds < 1) throw std::invalid_argument("train: rounds must be >= 1");
  std::vector<std::size_t> ids = opts.client_ids;
  if (ids.empty()) {
    ids.resize(dataset.num_clients());
    std::iota(ids.begin(), ids.end(), 0);
  }

  EngineState state{std::move(w_start), &dataset, {}};
  for (std::size_t t = 0; t < opts.rounds; ++t) {
    HyperParams h = opts.hyper;
    h.lr = opts.hyper.lr *
           std::pow(opts.lr_decay, static_cast<double>(opts.lr_schedule_offset + t));
    RoundPlan plan;
    plan.round_index = opts.lr_schedule_offset + t;
    plan.retained = ids;
    plan.eta_s = opts.eta_s;
    state = run_round(std::move(state), plan, h, seed, opts.num_threads);
  }
  return {std::move(state.model), std::move(state.history)};
}

std::pair<ParameterVector, TrainHistory> train(const FederatedDataset& dataset,
                                               const ModelArch& arch,
                                               const TrainOptions& opts,
                                               std::uint64_t seed) {
  return train_from(dataset, init_model(arch, seed), opts, seed);
}

}  // namespace pufsim
