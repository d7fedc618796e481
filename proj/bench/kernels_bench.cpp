#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "sncert/certify_post.hpp"
#include "sncert/envs.hpp"
#include "sncert/kernels.hpp"

using namespace sncert;

namespace {

MlpPolicy random_policy(int nx, int nu, std::vector<int> hidden, double delta, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<Matrix> ws;
  int in = nx;
  for (int h : hidden) {
    Matrix w(h, in);
    for (auto& v : w.reshaped()) v = n01(rng) / std::sqrt(in);
    ws.push_back(w);
    in = h;
  }
  Matrix out(nu, in);
  for (auto& v : out.reshaped()) v = 0.1 * n01(rng) / std::sqrt(in);
  ws.push_back(out);
  return normalize(MlpPolicy(ws, std::vector<double>(hidden.size(), delta), NormalizationMode::Post));
}

Matrix samples(int n, int count, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix xs(n, count);
  for (auto& v : xs.reshaped()) v = u(rng);
  return xs;
}

template <bool Parallel>
void BM_ClosedLoop(benchmark::State& state) {
  const EnvSpec env = make_pendulum();
  const MlpPolicy pi = random_policy(2, 1, {64, 64}, 1.0, 1);
  const Matrix x0s = samples(2, static_cast<int>(state.range(0)), 3.0, 2);
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::closed_loop_final(env.plant, pi, x0s, 400)
                      : kernels::serial::closed_loop_final(env.plant, pi, x0s, 400);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_SectorAudit(benchmark::State& state) {
  const MlpPolicy pi = random_policy(4, 2, {64, 64}, 1.0, 3);
  const SectorBounds sb = propagate_bounds(pi, Vector::Constant(64, 2.0));
  const Matrix xs = samples(4, static_cast<int>(state.range(0)), 1.0, 4);
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::sector_audit(pi, sb.vbar, sb.alpha, xs)
                      : kernels::serial::sector_audit(pi, sb.vbar, sb.alpha, xs);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_FrequencySweep(benchmark::State& state) {
  const EnvSpec env = make_gtm();
  std::vector<double> omegas(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    omegas[i] = 3.14159 * static_cast<double>(i) / static_cast<double>(omegas.size() - 1);
  }
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::frequency_sweep(env.plant.a(), env.plant.b(), omegas)
                      : kernels::serial::frequency_sweep(env.plant.a(), env.plant.b(), omegas);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ClosedLoop<false>)->Name("closed_loop/serial")->Arg(3721)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClosedLoop<true>)->Name("closed_loop/openmp")->Arg(3721)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SectorAudit<false>)->Name("sector_audit/serial")->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SectorAudit<true>)->Name("sector_audit/openmp")->Arg(100000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FrequencySweep<false>)->Name("frequency_sweep/serial")->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FrequencySweep<true>)->Name("frequency_sweep/openmp")->Arg(4096)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
