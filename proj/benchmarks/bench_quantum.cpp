#include <benchmark/benchmark.h>

#include "opinionxf/quantum.hpp"

namespace {

void CircuitExpectation(benchmark::State& state) {
  double t1 = 0.1, t2 = 0.2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(opinionxf::circuit_expectation(t1, t2));
    t1 += 1e-3;
    t2 += 2e-3;
  }
}
BENCHMARK(CircuitExpectation);

}  // namespace

BENCHMARK_MAIN();
