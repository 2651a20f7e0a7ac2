#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pufsim/data.hpp"
#include "pufsim/nn.hpp"

namespace pufsim {

// Client update: the local weight delta and its sample-count weight.
struct ClientUpdate {
  ParameterVector delta;
  std::size_t weight = 0;
  std::size_t client_id = 0;
};

enum class RoundMode { standard, puf_regular, puf_special };

std::string to_string(RoundMode mode);

// One round's participation sets and rates. `retained` and `targets` must be
// disjoint; standard rounds have no targets and puf_special has no retained
// participants.
struct RoundPlan {
  std::size_t round_index = 0;
  std::vector<std::size_t> retained;
  std::vector<std::size_t> targets;
  double eta_s = 1.0;
  double eta_r = 1.0;
  double eta_u = 0.0;
  RoundMode mode = RoundMode::standard;

  void validate() const;
};

struct HyperParams {
  std::size_t epochs = 1;
  double lr = 0.1;
  std::size_t batch_size = 32;
};

struct RoundRecord {
  std::size_t round_index = 0;
  double test_accuracy = 0.0;
  double mean_train_loss = 0.0;
  std::vector<std::size_t> participants;
  RoundMode mode = RoundMode::standard;
};

using TrainHistory = std::vector<RoundRecord>;

// Local mini-batch SGD from w_t for `epochs` passes with a fresh seeded
// shuffle per epoch; returns delta = w_final - w_t weighted by |D|.
ClientUpdate client_opt(const LabeledBatch& client_data, const ParameterVector& w_t,
                        const HyperParams& hyper, std::uint64_t seed,
                        std::size_t client_id = 0);

// (1/n) * sum(weight_i * delta_i), summed in ascending client_id order.
// n may exceed the provided subset's total weight (subset aggregation).
ParameterVector aggregate(const std::vector<ClientUpdate>& updates, std::size_t n);

// w_t + eta_s * delta.
ParameterVector server_step(const ParameterVector& w_t, const ParameterVector& delta,
                            double eta_s);

struct EngineState {
  ParameterVector model;
  const FederatedDataset* dataset = nullptr;
  TrainHistory history;
};

// Runs client_opt on a fixed client set with per-(round, client) derived
// seeds; thread count never changes the result.
std::vector<ClientUpdate> run_clients(const FederatedDataset& dataset,
                                      const std::vector<std::size_t>& client_ids,
                                      const ParameterVector& w_t, const HyperParams& hyper,
                                      std::uint64_t seed, std::size_t round_index,
                                      unsigned num_threads = 1);

// One standard FedAvg round over plan.retained.
EngineState run_round(EngineState state, const RoundPlan& plan, const HyperParams& hyper,
                      std::uint64_t seed, unsigned num_threads = 1);

struct TrainOptions {
  std::size_t rounds = 1;
  HyperParams hyper;
  double lr_decay = 1.0;
  double eta_s = 1.0;
  // Rounds already consumed from the lr schedule before this run starts.
  std::size_t lr_schedule_offset = 0;
  unsigned num_threads = 1;
  // Empty means all clients participate every round.
  std::vector<std::size_t> client_ids;
};

std::pair<ParameterVector, TrainHistory> train(const FederatedDataset& dataset,
                                               const ModelArch& arch,
                                               const TrainOptions& opts,
                                               std::uint64_t seed);

// Continues training from an existing model (used by recovery).
std::pair<ParameterVector, TrainHistory> train_from(const FederatedDataset& dataset,
                                                    ParameterVector w_start,
                                                    const TrainOptions& opts,
                                                    std::uint64_t seed);

}  // namespace pufsim
