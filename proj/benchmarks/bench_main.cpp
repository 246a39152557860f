#include <benchmark/benchmark.h>

#include "bmapinf/ctmc.hpp"
#include "bmapinf/gth.hpp"
#include "bmapinf/lyapunov.hpp"
#include "bmapinf/model_io.hpp"
#include "bmapinf/rng.hpp"
#include "bmapinf/sim.hpp"

using namespace bmapinf;

namespace {

ValidatedModel corpus(const char* name) {
  return validate(load_model_file(std::string(BMAPINF_MODELS_DIR) + "/" + name).model);
}

void BM_TruncatedBuild(benchmark::State& state) {
  const BmapView v = make_view(corpus("zeta25.json"), QueueSelector::Queue1);
  for (auto _ : state) benchmark::DoNotOptimize(build_truncated(v, state.range(0)));
}
BENCHMARK(BM_TruncatedBuild)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_GthDense(benchmark::State& state) {
  const Matrix q = build_truncated(make_view(corpus("zeta25.json"), QueueSelector::Queue1), state.range(0)).to_dense();
  for (auto _ : state) benchmark::DoNotOptimize(gth_stationary(q));
}
BENCHMARK(BM_GthDense)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_GthProfile(benchmark::State& state) {
  const auto q = build_truncated(make_view(corpus("geometric.json"), QueueSelector::Queue1), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gth_level_profile(q));
}
BENCHMARK(BM_GthProfile)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_DriftVector(benchmark::State& state) {
  const BmapView v = make_view(corpus("logheavy30.json"), QueueSelector::Queue1);
  std::uint64_t k = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(drift_vector(v, k));
    k = k * 3 % 1'000'003;
  }
}
BENCHMARK(BM_DriftVector);

void BM_FosterCertificate(benchmark::State& state) {
  const BmapView v = make_view(corpus("zeta25.json"), QueueSelector::Queue1);
  for (auto _ : state) benchmark::DoNotOptimize(foster_certificate(v));
}
BENCHMARK(BM_FosterCertificate)->Unit(benchmark::kMillisecond);

void BM_BatchSample(benchmark::State& state) {
  const auto b = state.range(0) == 0 ? BatchSizeDistribution::zeta(2.5) : BatchSizeDistribution::log_heavy(1.2);
  Rng rng(7, StreamRole::Dynamics);
  for (auto _ : state) benchmark::DoNotOptimize(b.sample(rng.uniform()));
}
BENCHMARK(BM_BatchSample)->Arg(0)->Arg(1);

void BM_Simulate(benchmark::State& state) {
  const auto m = corpus("geometric.json");
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, 1e4, seed++));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

void BM_Couple(benchmark::State& state) {
  const auto m = corpus("two_class.json");
  CoupleOptions o;
  o.record_epochs = false;
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(couple(m, 1e3, seed++, o));
}
BENCHMARK(BM_Couple)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
