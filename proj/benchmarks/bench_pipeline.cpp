#include <random>

#include <benchmark/benchmark.h>

#include "flashguard/fusion.hpp"
#include "flashguard/imaging.hpp"
#include "flashguard/pipeline.hpp"
#include "flashguard/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace flashguard;

namespace {

UserRecord user_of_size(int width, int height) {
  synthetic::CorpusOptions opts;
  opts.width = width;
  opts.height = height;
  std::mt19937_64 rng(11);
  return synthetic::make_user("bench", true, 0.6, opts, rng);
}

void BM_ClassifyUser(benchmark::State& state) {
  const auto user = user_of_size(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  auto bundle = fixture::bundle();
  bundle.motion.n = 16;
  const auto provider = user.provider();
  for (auto _ : state) benchmark::DoNotOptimize(classify_user(user.seq, bundle, provider));
}
BENCHMARK(BM_ClassifyUser)->Args({320, 240})->Args({640, 480})->Unit(benchmark::kMillisecond);

void BM_TargetMap(benchmark::State& state) {
  const auto user = user_of_size(320, 240);
  MotionConfig cfg;
  cfg.n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(target_map(user.seq.frames[0], user.seq.frames[1], cfg));
}
BENCHMARK(BM_TargetMap)->Arg(8)->Arg(16)->Arg(32);

void BM_FuseFrame(benchmark::State& state) {
  const std::vector<BinaryEvidence> evidences{
      {true, 0.87, 0.30}, {false, 0.95, 0.35}, {false, 0.80, 0.40}, {true, 0.75, 0.38}, {false, 0.90, 0.33}};
  const auto skin = mass_from_probability(0.7);
  for (auto _ : state) benchmark::DoNotOptimize(fuse_frame(evidences, skin));
}
BENCHMARK(BM_FuseFrame);

void BM_Combine(benchmark::State& state) {
  const MassFunction a{0.87, 0.13, 0.0}, b{0.95, 0.0, 0.05};
  for (auto _ : state) benchmark::DoNotOptimize(combine(a, b));
}
BENCHMARK(BM_Combine);

}  // namespace
BENCHMARK_MAIN();
