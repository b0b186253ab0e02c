#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "dvauth/deviation.hpp"

namespace {

void BM_AverageDv(benchmark::State& state) {
  dvauth::DvSequence seq;
  seq.vectors = Eigen::MatrixXd::Random(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(dvauth::average_dv(seq).vector.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AverageDv)->Arg(500)->Arg(5000);

void BM_DvSimilarity(benchmark::State& state) {
  const Eigen::VectorXd a = Eigen::VectorXd::Random(state.range(0));
  const Eigen::VectorXd b = Eigen::VectorXd::Random(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dvauth::dv_similarity(a, b));
}
BENCHMARK(BM_DvSimilarity)->Arg(64)->Arg(768);

}  // namespace
