#include <benchmark/benchmark.h>

#include "hmmop/analytic.hpp"
#include "hmmop/bench.hpp"
#include "hmmop/gaps.hpp"
#include "hmmop/gibbs.hpp"
#include "hmmop/inference.hpp"
#include "hmmop/matching.hpp"

namespace hmmop {
namespace {

HmmModel model_of(int n) {
  Rng rng = make_rng(1, static_cast<std::uint64_t>(n));
  return make_synthetic_degree(std::min(n, 5), rng, n, 0.1);
}

OmittedSentence sentence_of(const HmmModel& m, int length, double p_c, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  auto [x, o] = sample_trajectory(m, length, rng);
  return apply_omission(x, o, OmissionSpec::constant(p_c), rng);
}

void BM_OmitTransform(benchmark::State& state) {
  const Matrix T = model_of(static_cast<int>(state.range(0))).T();
  for (auto _ : state) benchmark::DoNotOptimize(omit_transform(T, 0.5));
}
BENCHMARK(BM_OmitTransform)->Arg(10)->Arg(25)->Arg(100);

// Table build is O(S n^3) and is paid once per sweep.
void BM_BuildGapTables(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int S = static_cast<int>(state.range(1));
  const Matrix T = model_of(n).T();
  const Vector psi = Vector::Constant(n, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(build_gap_tables(T, psi, S));
}
BENCHMARK(BM_BuildGapTables)->Args({10, 27})->Args({25, 27})->Args({25, 60});

// Per-sentence work after the tables exist: linear in K.
void BM_GapsSentenceSweep(benchmark::State& state) {
  const HmmModel m = model_of(25);
  const Vector psi = Vector::Constant(25, 0.5);
  const GapTables tables = build_gap_tables(m.T(), psi, default_s_max(psi), m.initial());
  const OmittedSentence s = sentence_of(m, static_cast<int>(state.range(0)), 0.5, 3);
  GapSeq d = gaps_from_placement(*s.W);
  Rng rng = make_rng(4);
  for (auto _ : state) {
    const StateSeq walk = sample_x_walk(tables, d, s.O, m.emission(), rng);
    d = sample_gaps(tables, walk, rng);
  }
  state.SetComplexityN(static_cast<int64_t>(s.O.size()));
}
BENCHMARK(BM_GapsSentenceSweep)->Arg(60)->Arg(240)->Arg(960)->Complexity();

void BM_SampleXGivenW(benchmark::State& state) {
  const HmmModel m = model_of(25);
  const Vector psi = Vector::Constant(25, 0.5);
  const OmittedSentence s = sentence_of(m, static_cast<int>(state.range(0)), 0.5, 5);
  Rng rng = make_rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(sample_X_given_W(m, s.O, *s.W, *s.N, psi, rng));
}
BENCHMARK(BM_SampleXGivenW)->Arg(60)->Arg(240);

void BM_MatchingSweep(benchmark::State& state) {
  const HmmModel m = model_of(10);
  const Vector psi = Vector::Constant(10, 0.5);
  const OmittedSentence s = sentence_of(m, 60, 0.5, 7);
  Rng rng = make_rng(8);
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mh_sweep_W(*s.W, *s.X, s.O, m.emission(), psi, steps, AcceptanceRule::full_product, rng));
  }
}
BENCHMARK(BM_MatchingSweep)->Arg(1)->Arg(30);

void BM_LabelSequence(benchmark::State& state) {
  const HmmModel m = model_of(10);
  const Vector psi = Vector::Constant(10, 0.5);
  const OmittedSentence s = sentence_of(m, static_cast<int>(state.range(0)), 0.5, 9);
  for (auto _ : state) benchmark::DoNotOptimize(label_sequence(m, s.O, *s.N, psi, 20));
}
BENCHMARK(BM_LabelSequence)->Arg(60)->Arg(120);

}  // namespace
}  // namespace hmmop

BENCHMARK_MAIN();
