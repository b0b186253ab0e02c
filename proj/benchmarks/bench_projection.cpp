#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "dvauth/projection.hpp"

namespace {

dvauth::SideInputs side(Eigen::Index n, int d) {
  return {Eigen::MatrixXd::Random(n, d), Eigen::MatrixXd::Random(n, d)};
}

// One 128-token segment pair at the default widths.
void BM_ProjectionForward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto model = dvauth::ProjectionModel::initialize(d, 64, 1);
  const dvauth::ProjectionParams params(model);
  const auto k = side(128, d);
  const auto u = side(128, d);
  for (auto _ : state) benchmark::DoNotOptimize(dvauth::forward(params, k, u));
}
BENCHMARK(BM_ProjectionForward)->Arg(64)->Arg(768);

void BM_ProjectionBackward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const dvauth::ProjectionParams params(dvauth::ProjectionModel::initialize(d, 64, 1));
  dvauth::ProjectionParams grad(d, 64);
  const auto k = side(128, d);
  const auto u = side(128, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dvauth::loss_and_gradient(params, k, u, true, grad));
  }
}
BENCHMARK(BM_ProjectionBackward)->Arg(64)->Arg(768);

}  // namespace
