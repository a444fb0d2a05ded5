#include <benchmark/benchmark.h>

#include <random>

#include "tgc/ot.hpp"

namespace {

void BM_OtBatch(benchmark::State& state, tgc::OtMode mode) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::vector<std::uint8_t> choices(n);
  for (auto& c : choices) c = static_cast<std::uint8_t>(rng() & 1);
  std::vector<std::pair<tgc::Block, tgc::Block>> pairs(n);
  for (auto& p : pairs) p = {tgc::Block{rng(), rng()}, tgc::Block{rng(), rng()}};
  for (auto _ : state) {
    const auto sender = tgc::ot_sender_setup();
    auto round = tgc::ot_receiver_round(mode, choices, sender.A);
    const auto response = tgc::ot_sender_round(mode, sender, pairs, round.request);
    auto got = tgc::ot_receiver_finish(mode, response, round.state, choices);
    benchmark::DoNotOptimize(got.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(n));
}
BENCHMARK_CAPTURE(BM_OtBatch, group, tgc::OtMode::kGroup)->Arg(128)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_OtBatch, simulated, tgc::OtMode::kSimulated)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
