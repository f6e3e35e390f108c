#include <benchmark/benchmark.h>

#include <vector>

#include "clab/commitment.hpp"
#include "clab/equilibrium.hpp"
#include "clab/game.hpp"
#include "clab/learning.hpp"
#include "clab/mediation.hpp"

namespace {

void BM_PayoffLookup(benchmark::State& state) {
  const clab::NormalFormGame game = clab::build_stop_light();
  const clab::ActionProfile profile{1, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(game.payoff(profile, 0));
  }
}
BENCHMARK(BM_PayoffLookup);

void BM_CceEpsilon(benchmark::State& state) {
  const clab::NormalFormGame game = clab::build_stop_light();
  const clab::JointDistribution outcome =
      clab::outcome_distribution(game, clab::build_stop_light_device());
  for (auto _ : state) {
    benchmark::DoNotOptimize(clab::cce_epsilon(game, outcome));
  }
}
BENCHMARK(BM_CceEpsilon);

void BM_CeEpsilon(benchmark::State& state) {
  const clab::NormalFormGame game = clab::build_stop_light();
  const clab::SignalDevice device = clab::build_stop_light_device();
  for (auto _ : state) {
    benchmark::DoNotOptimize(clab::ce_epsilon(game, device));
  }
}
BENCHMARK(BM_CeEpsilon);

// Rounds scale on the x axis; the interesting number is time per round.
void BM_SelfPlayRegretMatching(benchmark::State& state) {
  const clab::NormalFormGame game = clab::build_stop_light();
  const std::vector<clab::LearnerSpec> specs(2);
  const auto rounds = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(clab::run_self_play(game, specs, rounds, 1));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_SelfPlayRegretMatching)->Arg(1000)->Arg(10000);

void BM_SelfPlaySwapRegret(benchmark::State& state) {
  const clab::NormalFormGame game = clab::build_stop_light();
  clab::LearnerSpec spec;
  spec.algo = clab::LearnerAlgo::SwapRegret;
  const std::vector<clab::LearnerSpec> specs(2, spec);
  const auto rounds = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(clab::run_self_play(game, specs, rounds, 1));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_SelfPlaySwapRegret)->Arg(1000)->Arg(5000);

void BM_SimplexProjection(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (i % 7) * 0.3 - 0.8;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(clab::project_to_simplex(v));
  }
}
BENCHMARK(BM_SimplexProjection)->Arg(3)->Arg(64)->Arg(1024);

void BM_ProgramDuel(benchmark::State& state) {
  const clab::ProgramStrategy row = clab::make_naive_matcher(2);
  const clab::ProgramStrategy col = clab::make_anti_matcher(2);
  const auto depth = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(clab::execute_program_pair(row, col, std::nullopt, depth));
  }
}
BENCHMARK(BM_ProgramDuel)->Arg(1)->Arg(4)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
