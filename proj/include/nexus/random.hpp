#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace nexus {

/// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a 64 over the big-endian serialization of `words`. This is the fixed
/// public hash for shard schedules and id tie-breaking.
std::uint64_t public_hash(std::span<const std::uint64_t> words);

/// Hash of a label, used to fold purpose strings into substream keys.
std::uint64_t label_hash(std::string_view label);

/// Deterministic random stream. Every stream is derived from the run seed and
/// a (purpose, a, b) key, so results do not depend on scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}
  Rng(std::uint64_t seed, std::string_view purpose, std::uint64_t a = 0,
      std::uint64_t b = 0);

  Rng derive(std::string_view purpose, std::uint64_t a = 0,
             std::uint64_t b = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0,1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Bulk N(0, stddev^2) via a ziggurat; a different stream consumption from
  /// repeated normal().
  void fill_normal(std::span<double> out, double stddev = 1.0);
  double gamma(double shape);
  std::uint64_t poisson(double mean);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nexus
