#include "pufsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace pufsim {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t Rng::derive_key(std::uint64_t seed, std::string_view purpose,
                              std::initializer_list<std::uint64_t> qualifiers) {
  std::uint64_t k = splitmix64_mix(seed + kGolden);
  k = splitmix64_mix(k ^ fnv1a(purpose));
  for (std::uint64_t q : qualifiers) {
    k = splitmix64_mix(k ^ (q + kGolden));
  }
  return k;
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return splitmix64_mix(key_ + counter_ * kGolden);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::next_below: bound must be positive");
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double Rng::next_uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

double Rng::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = next_double();
  double u2 = next_double();
  while (u1 <= 0.0) u1 = next_double();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

double Rng::next_gamma(double shape) {
  if (shape <= 0.0) throw std::invalid_argument("Rng::next_gamma: shape must be positive");
  if (shape < 1.0) {
    double u = next_double();
    while (u <= 0.0) u = next_double();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = next_normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> Rng::next_dirichlet(double alpha, std::size_t n) {
  std::vector<double> g(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = next_gamma(alpha);
    sum += g[i];
  }
  if (sum <= 0.0) {
    // Extremely small alpha can underflow every gamma draw; fall back to a
    // single random winner, which is the correct limit distribution.
    std::fill(g.begin(), g.end(), 0.0);
    g[static_cast<std::size_t>(next_below(n))] = 1.0;
    return g;
  }
  for (double& x : g) x /= sum;
  return g;
}

}  // namespace pufsim
