#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "dvauth/eval.hpp"
#include "dvauth/rng.hpp"

namespace {

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  dvauth::Rng rng(1);
  std::vector<double> scores(n);
  std::unique_ptr<bool[]> labels(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = static_cast<double>(rng.below(n / 4 + 1));
    labels[i] = i % 2 == 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dvauth::roc_auc(scores, std::span<const bool>(labels.get(), n)));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RocAuc)->RangeMultiplier(8)->Range(64, 1 << 18)->Complexity();

}  // namespace
