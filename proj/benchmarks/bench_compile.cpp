#include <benchmark/benchmark.h>

#include "tgc/architecture.hpp"
#include "tgc/compiler.hpp"
#include "tgc/model.hpp"

namespace {

void BM_CompileModel(benchmark::State& state, const char* id, double scale) {
  const auto arch = tgc::resolve_architecture(id, scale);
  const auto s = tgc::public_structure(arch, tgc::random_params(arch, 0.3, 1));
  std::size_t gates = 0;
  for (auto _ : state) {
    auto n = tgc::compile_model(s);
    gates = n.gates.size();
    benchmark::DoNotOptimize(n.gates.data());
  }
  state.counters["gates"] = static_cast<double>(gates);
}
BENCHMARK_CAPTURE(BM_CompileModel, m1_025, "m1", 0.25)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_CompileModel, m1_1, "m1", 1.0)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_CompileModel, m2_1, "m2", 1.0)->Unit(benchmark::kMillisecond);

void BM_Popcount(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    tgc::NetlistBuilder b(n, 0);
    std::vector<tgc::WireId> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = b.client_input(i);
    auto sum = tgc::compile_popcount(b, bits);
    benchmark::DoNotOptimize(sum.data());
  }
}
BENCHMARK(BM_Popcount)->Arg(32)->Arg(784)->Arg(4608);

}  // namespace

BENCHMARK_MAIN();
