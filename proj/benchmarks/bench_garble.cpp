#include <benchmark/benchmark.h>

#include "tgc/compiler.hpp"
#include "tgc/garble.hpp"

namespace {

tgc::Netlist conv_layer() {
  const tgc::ActShape in{16, 16, 16};
  const auto layer = tgc::LayerSpec::conv(tgc::LayerKind::kConv3x3, 16, 1);
  const std::vector<std::uint8_t> mask(16 * 3 * 3 * 16, 1);
  const std::vector<std::int32_t> thresholds(16, 0);
  return tgc::compile_layer(layer, in, mask, thresholds);
}

void BM_Garble(benchmark::State& state) {
  const auto n = conv_layer();
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto g = tgc::garble(n, seed++);
    benchmark::DoNotOptimize(g.circuit.tables.data());
  }
  state.counters["and_per_s"] =
      benchmark::Counter(static_cast<double>(tgc::count_gates(n).non_xor), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Garble)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const auto n = conv_layer();
  const auto g = tgc::garble(n, 7);
  const std::vector<std::uint8_t> client(n.client_inputs.size(), 1), server(n.server_inputs.size(), 0);
  const auto labels = tgc::encode_all_inputs(g.input, n, client, server);
  for (auto _ : state) {
    auto out = tgc::evaluate(g.circuit, n, labels);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["and_per_s"] =
      benchmark::Counter(static_cast<double>(tgc::count_gates(n).non_xor), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

void BM_GateHash(benchmark::State& state) {
  tgc::Block a{1, 2}, b{3, 4};
  std::uint64_t gid = 0;
  for (auto _ : state) {
    a = tgc::gate_hash(a, b, gid++);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_GateHash);

}  // namespace

BENCHMARK_MAIN();
