#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace pufsim {

// Counter-based generator built on the splitmix64 finalizer. Output i of a
// stream keyed by k is mix(k + i*GOLDEN), so draws depend only on (key,
// counter) and are reproducible across platforms and thread schedules.
// Streams for distinct purposes are derived by hashing the purpose label and
// any integer qualifiers (round, client id, ...) into the key.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  // Derive a stream key from a root seed, a purpose label, and qualifiers.
  static std::uint64_t derive_key(std::uint64_t seed, std::string_view purpose,
                                  std::initializer_list<std::uint64_t> qualifiers = {});

  static Rng stream(std::uint64_t seed, std::string_view purpose,
                    std::initializer_list<std::uint64_t> qualifiers = {}) {
    return Rng(derive_key(seed, purpose, qualifiers));
  }

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_double();

  // Uniform integer in [0, bound), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t bound);

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi);

  // Standard normal via Box-Muller (the spare is cached).
  double next_normal();

  // Gamma(shape, 1) by Marsaglia-Tsang, with the boost for shape < 1.
  double next_gamma(double shape);

  // Dirichlet(alpha * 1_n) as normalized gammas.
  std::vector<double> next_dirichlet(double alpha, std::size_t n);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pufsim
