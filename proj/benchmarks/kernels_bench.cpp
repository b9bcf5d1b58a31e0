// O(p^2) kernels across dimension.

#include <benchmark/benchmark.h>

#include "crumbs/linalg.hpp"
#include "crumbs/rng.hpp"

namespace {

using namespace crumbs;

// Well-conditioned factor: R^T R = I + A A^T / p for a random A.
TriangularFactor random_factor(std::size_t p, Rng& rng) {
  TriangularFactor r = TriangularFactor::scaled_identity(p, 1.0);
  for (std::size_t i = 0; i < 4; ++i) {
    Vector v = rng.normal_vector(p);
    r.rank_one_update(v);
  }
  return r;
}

void BM_RankOneUpdate(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  TriangularFactor r = random_factor(p, rng);
  const Vector v = rng.normal_vector(p);
  for (auto _ : state) {
    TriangularFactor work = r;
    Vector w = v;
    work.rank_one_update(w);
    benchmark::DoNotOptimize(work.data().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RankOneUpdate)->RangeMultiplier(2)->Range(4, 512)->Complexity(benchmark::oNSquared);

void BM_SolveUpper(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const TriangularFactor r = random_factor(p, rng);
  const Vector b = rng.normal_vector(p);
  for (auto _ : state) benchmark::DoNotOptimize(solve_upper(r, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveUpper)->RangeMultiplier(2)->Range(4, 512)->Complexity(benchmark::oNSquared);

void BM_SolveUpperTranspose(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const TriangularFactor r = random_factor(p, rng);
  const Vector b = rng.normal_vector(p);
  for (auto _ : state) benchmark::DoNotOptimize(solve_upper_transpose(r, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveUpperTranspose)->RangeMultiplier(2)->Range(4, 512)->Complexity(benchmark::oNSquared);

// J with p/2 columns.
void BM_ProjectOrthogonal(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  OrthonormalColumns j(p);
  while (j.ncols() < p / 2) {
    append_orthonormal_column_inplace(j, project_orthogonal(j, rng.normal_vector(p)));
  }
  const Vector v = rng.normal_vector(p);
  for (auto _ : state) benchmark::DoNotOptimize(project_orthogonal(j, v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProjectOrthogonal)->RangeMultiplier(2)->Range(4, 512)->Complexity(benchmark::oNSquared);

}  // namespace
