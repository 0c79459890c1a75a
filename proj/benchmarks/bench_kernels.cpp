#include <benchmark/benchmark.h>

#include "mra/correction.hpp"
#include "mra/moments.hpp"
#include "mra/network.hpp"
#include "mra/ring.hpp"
#include "mra/rng.hpp"
#include "mra/spectral.hpp"
#include "mra/trace_verifier.hpp"

using namespace mra;

namespace {

struct RingInput {
  VertexWeightTable wt;
  ComplexTensor t3;
  ComplexTensor u_hat;
  CorrectionTable ones;
};

RingInput ring_input(int p) {
  const auto signals = random_signals(p, 1, 1);
  RingInput in;
  in.t3 = exact_moment(signals, 3, Normalization::sum_over_K);
  in.wt = VertexWeightTable::from_moment(in.t3, 1);
  Stream rng(1, "bench-u");
  auto u = RealTensor::cube(5, static_cast<std::size_t>(p));
  for (auto& v : u.data()) v = rng.normal();
  in.u_hat = tensor_to_fourier(u);
  in.ones = CorrectionTable(p);
  std::fill(in.ones.data().begin(), in.ones.data().end(), 1.0);
  return in;
}

void BM_RingFactorized(benchmark::State& state) {
  const auto in = ring_input(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ring_contract(in.wt, in.u_hat, in.ones));
}
BENCHMARK(BM_RingFactorized)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_RingDirect(benchmark::State& state) {
  const auto in = ring_input(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ring_contract(in.wt, in.u_hat, in.ones, {RingMethod::direct, 1}));
}
BENCHMARK(BM_RingDirect)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_RingCached(benchmark::State& state) {
  const auto in = ring_input(static_cast<int>(state.range(0)));
  const auto g = precompute_G(in.wt, std::size_t{1} << 30);
  for (auto _ : state) benchmark::DoNotOptimize(ring_contract(g, in.u_hat, in.ones));
}
BENCHMARK(BM_RingCached)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GenericRing(benchmark::State& state) {
  const auto in = ring_input(static_cast<int>(state.range(0)));
  const auto net = networks::ring9();
  for (auto _ : state) benchmark::DoNotOptimize(contract(net, {{"T", in.t3}, {"u", in.u_hat}}));
}
BENCHMARK(BM_GenericRing)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_ExpectedS(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(expected_s_table(p));
}
BENCHMARK(BM_ExpectedS)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_SampledS(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const std::vector<double> w(static_cast<std::size_t>(p), 1.0 / p);
  for (auto _ : state) benchmark::DoNotOptimize(sampled_s_table(w));
}
BENCHMARK(BM_SampledS)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_Census(benchmark::State& state) {
  const auto net = build_expanded(1);
  const int p = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(census(net, p).total);
}
BENCHMARK(BM_Census)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_ExtractCandidate(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto signals = random_signals(p, 1, 1);
  const auto theta = signals.real()[0];
  const auto m = build_M(exact_third_moment(signals, Normalization::sum_over_K), outer_power(theta, 5),
                         CorrectionTable::unit(p));
  for (auto _ : state) benchmark::DoNotOptimize(extract_candidate(m));
}
BENCHMARK(BM_ExtractCandidate)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
