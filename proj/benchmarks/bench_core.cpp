// Microbenchmarks for the hot paths: forward prediction, batch gradients,
// ancestral sampling, the memory-bank masking pass, and the audit metrics.
// Build with -DIETAGC_BUILD_BENCHMARKS=ON (requires google-benchmark) and
// run ./benchmarks/ietagc_bench.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "ietagc/audit.hpp"
#include "ietagc/dataset.hpp"
#include "ietagc/denoiser.hpp"
#include "ietagc/diffusion.hpp"
#include "ietagc/memory_bank.hpp"
#include "ietagc/rng.hpp"
#include "ietagc/schedule.hpp"
#include "ietagc/trainer.hpp"

namespace {

using namespace ietagc;

DenoiserArch desk_arch(int d) {
  DenoiserArch a;
  a.d = d;
  a.time_embed = 32;
  a.hidden1 = 128;
  a.hidden2 = 128;
  return a;
}

void BM_forward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Schedule sched = build_schedule(100, 1e-4, 0.02);
  const Denoiser p = Denoiser::random_init(desk_arch(d), 1);
  Rng rng(2);
  const std::vector<double> x = rng.normal_vec(d);
  int t = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(p.forward(x, t));
    t = t % sched.T + 1;
  }
}
BENCHMARK(BM_forward)->Arg(8)->Arg(64);

void BM_batch_gradient(benchmark::State& state) {
  const int d = 8;
  const int batch_size = static_cast<int>(state.range(0));
  const Schedule sched = build_schedule(100, 1e-4, 0.02);
  const Denoiser p = Denoiser::random_init(desk_arch(d), 1);
  Rng rng(3);
  std::vector<Sample> samples(batch_size);
  std::vector<BatchItem> batch(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    samples[i].x = rng.normal_vec(d);
    samples[i].id = i;
    batch[i].sample = &samples[i];
    batch[i].draw.t = 1 + static_cast<int>(rng.uniform_int(sched.T));
    batch[i].draw.epsilon = rng.normal_vec(d);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(loss_gradient(p, batch, sched));
  state.SetItemsProcessed(state.iterations() * batch_size);
}
BENCHMARK(BM_batch_gradient)->Arg(8)->Arg(32)->Arg(128);

void BM_sample_generate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Schedule sched = build_schedule(100, 1e-4, 0.02);
  const Denoiser p = Denoiser::random_init(desk_arch(8), 1);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_generate(p, sched, n, ++seed));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_sample_generate)->Arg(1)->Arg(16);

void BM_bank_mask(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  MemoryBank bank(100, 0.8);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i)
    bank.update(1 + static_cast<int>(rng.uniform_int(100)),
                rng.uniform() * 10.0);
  std::vector<MaskEntry> entries(n);
  for (int i = 0; i < n; ++i) {
    entries[i].sample_id = i;
    entries[i].t = 1 + static_cast<int>(rng.uniform_int(100));
    entries[i].loss = rng.uniform() * 10.0;
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(bank.apply_mask(entries, 0.5, 0));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_bank_mask)->Arg(32)->Arg(512);

void BM_nn_ratio(benchmark::State& state) {
  const int n_train = static_cast<int>(state.range(0));
  const Dataset train = gen_mixture(8, n_train / 8, 8, {}, 5, 0.1);
  Rng rng(6);
  Sample q;
  q.x = rng.normal_vec(8);
  for (auto _ : state)
    benchmark::DoNotOptimize(nn_ratio(q, train, 50));
}
BENCHMARK(BM_nn_ratio)->Arg(512)->Arg(4096);

void BM_frechet(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(7);
  std::vector<Sample> a(256), b(256);
  for (int i = 0; i < 256; ++i) {
    a[i].x = rng.normal_vec(d);
    b[i].x = rng.normal_vec(d);
  }
  for (auto _ : state) benchmark::DoNotOptimize(frechet_distance(a, b));
}
BENCHMARK(BM_frechet)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
