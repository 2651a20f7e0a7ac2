#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pufsim/nn.hpp"

namespace pufsim {

// Malformed dataset container files.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  std::size_t offset;
};

class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FederatedDataset {
  std::vector<LabeledBatch> clients;
  LabeledBatch test;
  int num_classes = 0;

  std::size_t num_clients() const { return clients.size(); }
  // Total training samples across the given client ids.
  std::size_t total_samples(const std::vector<std::size_t>& client_ids) const;
  std::size_t total_samples() const;
  void validate() const;

  bool operator==(const FederatedDataset&) const = default;
};

struct ForgetSplit {
  LabeledBatch forget;
  LabeledBatch retain;
  std::size_t source_client = 0;
};

// Gaussian class clusters with pairwise mean distance >= class_separation,
// balanced labels, 80/20 per-class train/test split.
std::pair<LabeledBatch, LabeledBatch> generate_synthetic(int num_classes,
                                                         std::size_t feature_dim,
                                                         std::size_t samples_per_class,
                                                         double class_separation,
                                                         std::uint64_t seed);

FederatedDataset partition_iid(const LabeledBatch& train, int num_classes,
                               std::size_t num_clients, std::uint64_t seed);

// Per-class Dirichlet(alpha) proportions over clients with multinomial sample
// assignment. The whole partition is resampled (up to retry_cap times) until
// every client holds at least min_per_client samples.
FederatedDataset partition_lda(const LabeledBatch& train, int num_classes,
                               std::size_t num_clients, double alpha,
                               std::size_t min_per_client, std::uint64_t seed,
                               std::size_t retry_cap = 100);

ForgetSplit select_forget_subset(const LabeledBatch& client_data, double fraction,
                                 std::uint64_t seed, std::size_t source_client = 0);

// Self-describing binary container; bit-exact round trips.
void save_dataset(const FederatedDataset& fd, const std::string& path);
FederatedDataset load_dataset(const std::string& path);

}  // namespace pufsim
