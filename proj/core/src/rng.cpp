#include "crumbs/rng.hpp"

#include <cmath>

namespace crumbs {

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream) {
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

double Rng::exponential() { return -std::log1p(-uniform()); }

Vector Rng::normal_vector(std::size_t n) {
  Vector v(n);
  fill_normal(v);
  return v;
}

void Rng::fill_normal(std::span<double> out) {
  for (double& x : out) x = normal();
}

}  // namespace crumbs
