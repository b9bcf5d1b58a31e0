#pragma once

#include <cstdint>
#include <random>

#include "crumbs/linalg.hpp"

namespace crumbs {

/// SplitMix64 finalizer of (seed, stream); used to give every chain its own
/// well-separated seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream);

/// Per-chain random source. Not thread-safe; one instance per chain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t master_seed, std::uint64_t stream)
      : Rng(derive_seed(master_seed, stream)) {}

  double uniform();      // [0, 1)
  double normal();       // N(0, 1)
  double exponential();  // Exp(1), inverse CDF
  Vector normal_vector(std::size_t n);
  void fill_normal(std::span<double> out);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace crumbs
