// Serial reference vs OpenMP for each kernel.

#include <benchmark/benchmark.h>

#include "lmdp/fixtures.hpp"
#include "lmdp/kernels.hpp"
#include "lmdp/policy.hpp"

using namespace lmdp;

namespace {

const ModelClass& wide_class() {
  static const ModelClass cls = [] {
    ModelClass c;
    Rng rng(3);
    const Dims d{3, 3, 2, 2, 4, 4};
    for (int i = 0; i < 256; ++i) {
      LmdpPsi th = random_instance(d, rng);
      while (!validate_model(th).ok()) th = random_instance(d, rng);
      c.models.push_back(std::move(th));
    }
    c.truth_index = 0;
    return c;
  }();
  return cls;
}

template <auto Kernel>
void loglik(benchmark::State& state) {
  const ModelClass& cls = wide_class();
  Rng rng(1);
  const auto pi = InformedPolicy::ignoring_side_info(BlindPolicy::uniform(cls.dims().actions));
  const auto rec = sample_episode(cls.models[0], pi, rng);
  std::vector<double> out(cls.size());
  for (auto _ : state) {
    Kernel(cls, rec, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void simulate(benchmark::State& state) {
  const LmdpPsi th = mixed_m2_fixture();
  const auto pi = InformedPolicy::ignoring_side_info(BlindPolicy::uniform(th.dims().actions));
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(th, pi, 7, 0, n));
  state.SetItemsProcessed(state.iterations() * n);
}

template <auto Kernel>
void alpha(benchmark::State& state) {
  const Eigen::MatrixXd e = hard_m8_fixture().hard.emission_matrix();
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(e));
}

template <auto Kernel>
void conditioning(benchmark::State& state) {
  Rng rng(9);
  LmdpPsi th = random_instance({3, 3, 2, 2, 5, 3}, rng);
  while (!validate_model(th).ok()) th = random_instance({3, 3, 2, 2, 5, 3}, rng);
  const PsrOperators ops = build_operators(th);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(ops, 1e8));
}

}  // namespace

BENCHMARK(loglik<serial::loglik_models>)->Name("loglik_models/serial");
BENCHMARK(loglik<omp::loglik_models>)->Name("loglik_models/omp");
BENCHMARK(simulate<serial::simulate_batch>)->Name("simulate_batch/serial")->Arg(20000);
BENCHMARK(simulate<omp::simulate_batch>)->Name("simulate_batch/omp")->Arg(20000);
BENCHMARK(alpha<serial::alpha_patterns>)->Name("alpha_patterns/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(alpha<omp::alpha_patterns>)->Name("alpha_patterns/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(conditioning<serial::conditioning_sweep>)->Name("conditioning_sweep/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(conditioning<omp::conditioning_sweep>)->Name("conditioning_sweep/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
