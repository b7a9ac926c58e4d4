#include <benchmark/benchmark.h>

#include "opinionxf/fft.hpp"
#include "opinionxf/rng.hpp"

namespace {

std::vector<double> random_signal(std::size_t d) {
  opinionxf::Pcg32 rng(7);
  std::vector<double> x(d);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

void ForwardTransform(benchmark::State& state) {
  const auto x = random_signal(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto spec = opinionxf::fft(x);
    benchmark::DoNotOptimize(spec.bins.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(ForwardTransform)->RangeMultiplier(2)->Range(16, 2048)->Complexity();

void RoundTrip(benchmark::State& state) {
  const auto x = random_signal(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto back = opinionxf::ifft(opinionxf::fft(x));
    benchmark::DoNotOptimize(back.data());
  }
}
BENCHMARK(RoundTrip)->Arg(128)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
