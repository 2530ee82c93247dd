#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace octa {

/// Derive a substream seed from a master seed and a stream name, so every
/// source of randomness (folds, init, mixing, augmentation) hangs off one
/// --seed value but the streams stay independent.
uint64_t substream_seed(uint64_t master_seed, const std::string& name);

/// Seeded random stream. All library randomness flows through this type.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}
  Rng(uint64_t master_seed, const std::string& stream)
      : engine_(substream_seed(master_seed, stream)) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace octa
