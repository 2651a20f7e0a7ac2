#include "pufsim/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "pufsim/rng.hpp"

namespace pufsim {

std::size_t FederatedDataset::total_samples(const std::vector<std::size_t>& client_ids) const {
  std::size_t n = 0;
  for (std::size_t id : client_ids) {
    if (id >= clients.size()) {
      throw std::invalid_argument("FederatedDataset: no client " + std::to_string(id));
    }
    n += clients[id].size();
  }
  return n;
}

std::size_t FederatedDataset::total_samples() const {
  std::size_t n = 0;
  for (const auto& c : clients) n += c.size();
  return n;
}

void FederatedDataset::validate() const {
  if (num_classes < 1) throw PartitionError("FederatedDataset: num_classes must be >= 1");
  if (clients.empty()) throw PartitionError("FederatedDataset: no clients");
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].size() == 0) {
      throw PartitionError("FederatedDataset: client " + std::to_string(i) + " is empty");
    }
    clients[i].validate(num_classes);
  }
  // The test split may be attached after partitioning; an absent one is fine.
  if (test.size() > 0 || test.feature_dim > 0) test.validate(num_classes);
}

std::pair<LabeledBatch, LabeledBatch> generate_synthetic(int num_classes,
                                                         std::size_t feature_dim,
                                                         std::size_t samples_per_class,
                                                         double class_separation,
                                                         std::uint64_t seed) {
  if (num_classes < 1 || feature_dim < 1 || samples_per_class < 1) {
    throw std::invalid_argument("generate_synthetic: all counts must be >= 1");
  }
  Rng rng = Rng::stream(seed, "synthetic-data");

  // Random class means rescaled so the minimum pairwise distance equals
  // class_separation exactly.
  std::vector<double> means(static_cast<std::size_t>(num_classes) * feature_dim);
  double min_dist = 0.0;
  do {
    for (double& m : means) m = rng.next_normal();
    min_dist = std::numeric_limits<double>::infinity();
    for (int a = 0; a < num_classes; ++a) {
      for (int b = a + 1; b < num_classes; ++b) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < feature_dim; ++f) {
          double diff = means[a * feature_dim + f] - means[b * feature_dim + f];
          d2 += diff * diff;
        }
        min_dist = std::min(min_dist, std::sqrt(d2));
      }
    }
  } while (num_classes > 1 && min_dist <= 0.0);
  if (num_classes > 1) {
    double scale = class_separation / min_dist;
    for (double& m : means) m *= scale;
  }

  std::size_t test_per_class = samples_per_class / 5;  // 80/20 split
  LabeledBatch train, test;
  train.feature_dim = test.feature_dim = feature_dim;
  for (int c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < samples_per_class; ++i) {
      LabeledBatch& dst = (i < test_per_class) ? test : train;
      dst.labels.push_back(c);
      for (std::size_t f = 0; f < feature_dim; ++f) {
        dst.inputs.push_back(means[c * feature_dim + f] + rng.next_normal());
      }
    }
  }

  // Shuffle the train split so class order does not leak into partitioning.
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return {train.subset(order), std::move(test)};
}

FederatedDataset partition_iid(const LabeledBatch& train, int num_classes,
                               std::size_t num_clients, std::uint64_t seed) {
  if (num_clients < 1) throw std::invalid_argument("partition_iid: num_clients must be >= 1");
  if (train.size() < num_clients) {
    throw PartitionError("partition_iid: fewer samples than clients");
  }
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(seed, "partition-iid");
  rng.shuffle(order);

  FederatedDataset fd;
  fd.num_classes = num_classes;
  std::size_t n = train.size();
  for (std::size_t i = 0; i < num_clients; ++i) {
    std::size_t lo = i * n / num_clients;
    std::size_t hi = (i + 1) * n / num_clients;
    fd.clients.push_back(train.subset({order.begin() + lo, order.begin() + hi}));
  }
  fd.validate();
  return fd;
}

FederatedDataset partition_lda(const LabeledBatch& train, int num_classes,
                               std::size_t num_clients, double alpha,
                               std::size_t min_per_client, std::uint64_t seed,
                               std::size_t retry_cap) {
  if (alpha <= 0.0) throw std::invalid_argument("partition_lda: alpha must be positive");
  if (num_clients < 1) throw std::invalid_argument("partition_lda: num_clients must be >= 1");
  train.validate(num_classes);

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < train.size(); ++i) by_class[train.labels[i]].push_back(i);

  for (std::size_t attempt = 0; attempt < retry_cap; ++attempt) {
    Rng rng = Rng::stream(seed, "partition-lda", {attempt});
    std::vector<std::vector<std::size_t>> assignment(num_clients);
    for (int c = 0; c < num_classes; ++c) {
      std::vector<double> p = rng.next_dirichlet(alpha, num_clients);
      std::vector<double> cdf(p.size());
      std::partial_sum(p.begin(), p.end(), cdf.begin());
      for (std::size_t idx : by_class[c]) {
        double u = rng.next_double();
        std::size_t client = num_clients - 1;
        for (std::size_t j = 0; j < cdf.size(); ++j) {
          if (u < cdf[j]) {
            client = j;
            break;
          }
        }
        assignment[client].push_back(idx);
      }
    }
    bool feasible = true;
    for (const auto& a : assignment) {
      if (a.size() < min_per_client) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;

    FederatedDataset fd;
    fd.num_classes = num_classes;
    for (const auto& a : assignment) fd.clients.push_back(train.subset(a));
    fd.validate();
    return fd;
  }
  throw PartitionError("partition_lda: could not satisfy min_per_client=" +
                       std::to_string(min_per_client) + " within " +
                       std::to_string(retry_cap) + " attempts (alpha=" +
                       std::to_string(alpha) + ")");
}

ForgetSplit select_forget_subset(const LabeledBatch& client_data, double fraction,
                                 std::uint64_t seed, std::size_t source_client) {
  if (fraction <= 0.0 || fraction >= 1.0) {
    throw std::invalid_argument("select_forget_subset: fraction must be in (0, 1)");
  }
  std::size_t n = client_data.size();
  std::size_t n_forget =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_forget == 0 || n_forget == n) {
    throw std::invalid_argument("select_forget_subset: split would leave an empty side");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(seed, "forget-subset", {source_client});
  rng.shuffle(order);

  ForgetSplit split;
  split.source_client = source_client;
  split.forget = client_data.subset({order.begin(), order.begin() + n_forget});
  split.retain = client_data.subset({order.begin() + n_forget, order.end()});
  return split;
}

// ---- binary container ------------------------------------------------------
//
// Layout (little-endian):
//   magic "PFDS" | version u8 | num_classes i32 | feature_dim u64 |
//   num_clients u64 | client offset table u64[num_clients] |
//   test block | client blocks...
// Each block: count u64 | labels i32[count] | inputs f64[count*feature_dim].

namespace {

constexpr char kMagic[4] = {'P', 'F', 'D', 'S'};
constexpr std::uint8_t kVersion = 1;

struct Writer {
  std::string buf;
  template <typename T>
  void put(T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.append(raw, sizeof(T));
  }
  void put_batch(const LabeledBatch& b) {
    put<std::uint64_t>(b.size());
    for (int y : b.labels) put<std::int32_t>(y);
    for (double x : b.inputs) put<double>(x);
  }
};

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  template <typename T>
  T get() {
    if (pos + sizeof(T) > buf.size()) throw ParseError("truncated dataset file", pos);
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  LabeledBatch get_batch(std::size_t feature_dim) {
    auto count = get<std::uint64_t>();
    if (count > (buf.size() - pos)) throw ParseError("implausible block count", pos);
    LabeledBatch b;
    b.feature_dim = feature_dim;
    b.labels.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) b.labels.push_back(get<std::int32_t>());
    b.inputs.reserve(count * feature_dim);
    for (std::uint64_t i = 0; i < count * feature_dim; ++i) b.inputs.push_back(get<double>());
    return b;
  }
};

}  // namespace

void save_dataset(const FederatedDataset& fd, const std::string& path) {
  fd.validate();
  Writer header, blocks;
  header.buf.append(kMagic, 4);
  header.put<std::uint8_t>(kVersion);
  header.put<std::int32_t>(fd.num_classes);
  header.put<std::uint64_t>(fd.test.feature_dim);
  header.put<std::uint64_t>(fd.clients.size());

  std::size_t table_start = header.buf.size();
  std::size_t blocks_start = table_start + fd.clients.size() * sizeof(std::uint64_t);

  blocks.put_batch(fd.test);
  std::vector<std::uint64_t> offsets;
  for (const auto& c : fd.clients) {
    offsets.push_back(blocks_start + blocks.buf.size());
    blocks.put_batch(c);
  }
  for (std::uint64_t off : offsets) header.put<std::uint64_t>(off);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out << header.buf << blocks.buf;
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

FederatedDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r{buf};
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw ParseError("bad magic, not a dataset container", 0);
  }
  r.pos = 4;
  auto version = r.get<std::uint8_t>();
  if (version != kVersion) throw ParseError("unsupported container version", r.pos - 1);

  FederatedDataset fd;
  fd.num_classes = r.get<std::int32_t>();
  auto feature_dim = r.get<std::uint64_t>();
  auto num_clients = r.get<std::uint64_t>();
  if (num_clients > buf.size()) throw ParseError("implausible client count", r.pos - 8);

  std::vector<std::uint64_t> offsets;
  for (std::uint64_t i = 0; i < num_clients; ++i) offsets.push_back(r.get<std::uint64_t>());

  fd.test = r.get_batch(feature_dim);
  for (std::uint64_t off : offsets) {
    if (off != r.pos) throw ParseError("client offset table inconsistent with data", r.pos);
    fd.clients.push_back(r.get_batch(feature_dim));
  }
  fd.validate();
  return fd;
}

}  // namespace pufsim
