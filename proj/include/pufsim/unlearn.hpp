#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pufsim/engine.hpp"

namespace pufsim {

class UnlearnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Strategy { puf_regular, puf_special, not_first_layer, pga, natural, retrain };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

enum class UnlearnScope { client, sample };

struct UnlearnRequest {
  std::vector<std::size_t> targets;
  UnlearnScope scope = UnlearnScope::client;
  double sample_fraction = 0.5;       // sample scope only
  std::uint64_t sample_seed = 0;      // sample scope only
  Strategy strategy = Strategy::puf_special;

  void validate(std::size_t num_clients) const;
};

struct PgaParams {
  std::size_t ascent_epochs = 5;
  double clip_threshold = 5.0;
  double ball_radius = 1.0;
  double early_stop_loss_threshold = 6.5;
  std::size_t batch_size = 32;
  double lr = 0.1;
  bool early_stop_enabled = true;

  void validate() const;
};

// Per-round training views induced by the unlearning scope. Target clients
// train on forget data during the unlearning round; recovery uses retain data
// only (sample scope) or excludes targets entirely (client scope).
struct ScopeViews {
  FederatedDataset unlearn_view;       // what clients train on in the unlearning round
  FederatedDataset recovery_view;      // what clients train on during recovery
  std::vector<std::size_t> recovery_clients;
  LabeledBatch forget_data;            // D_u, pooled across targets
};

ScopeViews sample_scope_filter(const UnlearnRequest& request, const FederatedDataset& dataset);

// w_t + eta_r * Delta+ - eta_u * Delta-, with n summed over both sets.
ParameterVector puf_regular_round(const ParameterVector& w_t, const FederatedDataset& dataset,
                                  const std::vector<std::size_t>& retained,
                                  const std::vector<std::size_t>& targets, double eta_r,
                                  double eta_u, const HyperParams& hyper, std::uint64_t seed,
                                  std::size_t round_index, unsigned num_threads = 1);

// w_t - eta_u * Delta-, only targets participate, n over targets.
ParameterVector puf_special_round(const ParameterVector& w_t, const FederatedDataset& dataset,
                                  const std::vector<std::size_t>& targets, double eta_u,
                                  const HyperParams& hyper, std::uint64_t seed,
                                  std::size_t round_index, unsigned num_threads = 1);

// Negates the first layer's weight entries (biases too when negate_bias).
ParameterVector not_unlearn(const ParameterVector& w_t, bool negate_bias = false);

// Mini-batch gradient ascent on the forget data with per-batch gradient-norm
// clipping, projection onto the L2 ball of ball_radius around w_ref, and
// early stop when the mean forget loss reaches the threshold.
ParameterVector pga_unlearn(const ParameterVector& w_t, const LabeledBatch& target_data,
                            const ParameterVector& w_ref, const PgaParams& params,
                            std::uint64_t seed);

// w_ref = w_t - (weight / n_last) * delta of the target's stored last update.
ParameterVector make_pga_reference(const ParameterVector& w_t,
                                   const std::optional<ClientUpdate>& last_target_update,
                                   std::size_t n_last);

// Full from-scratch training with the targets removed from every round.
std::pair<ParameterVector, TrainHistory> retrain_baseline(const FederatedDataset& dataset,
                                                          const std::vector<std::size_t>& targets,
                                                          const ModelArch& arch,
                                                          TrainOptions opts, std::uint64_t seed);

struct RecoveryPoint {
  std::size_t round = 0;  // 0 = before any recovery round
  double test_accuracy = 0.0;
  double forget_accuracy = 0.0;
};

struct RecoveryResult {
  ParameterVector model;
  std::size_t recovery_rounds = 0;
  bool capped = false;
  std::vector<RecoveryPoint> curve;
};

// First index whose accuracy reaches the target; (max index, capped=true)
// when none does. Index 0 is the pre-recovery model.
std::pair<std::size_t, bool> recovery_rounds_from_curve(const std::vector<double>& test_acc_curve,
                                                        double target);

// Standard rounds from w_start over `clients` of `dataset`, evaluated after
// every round; stops at the first round whose test accuracy reaches
// stop_target_acc, or at max_rounds.
// The observer, when set, sees every evaluated model (round 0 included).
using RecoveryObserver = std::function<void(std::size_t round, const ParameterVector& model)>;

RecoveryResult recover(const ParameterVector& w_start, const FederatedDataset& dataset,
                       const std::vector<std::size_t>& clients, const TrainOptions& base_opts,
                       std::size_t max_rounds, double stop_target_acc,
                       const LabeledBatch& forget_data, std::uint64_t seed,
                       const RecoveryObserver& observer = {});

}  // namespace pufsim
