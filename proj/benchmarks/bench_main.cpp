#include <random>

#include <benchmark/benchmark.h>

#include <hessvessel/frangi.hpp>
#include <hessvessel/hessian.hpp>
#include <hessvessel/hessnet.hpp>
#include <hessvessel/phantom.hpp>
#include <hessvessel/train.hpp>

using namespace hessvessel;

namespace {

Phantom phantom(std::size_t n) {
  RandomTubeOptions o;
  o.noise_sigma = 0.1;
  return make_phantom(random_tube_spec({n, n, n}, o, 1));
}

void BM_EigSym3(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> m(6 * 1024);
  for (auto& x : m) x = u(rng);
  std::size_t i = 0;
  for (auto _ : state) {
    const double* a = &m[6 * (i++ & 1023)];
    benchmark::DoNotOptimize(eig_sym3(a[0], a[1], a[2], a[3], a[4], a[5]));
  }
}
BENCHMARK(BM_EigSym3);

void BM_GaussianSmooth(benchmark::State& state) {
  const Volume v = phantom(static_cast<std::size_t>(state.range(0))).volume;
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_smooth(v, 2.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(v.size()));
}
BENCHMARK(BM_GaussianSmooth)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Frangi(benchmark::State& state) {
  const Volume v = phantom(static_cast<std::size_t>(state.range(0))).volume;
  for (auto _ : state) benchmark::DoNotOptimize(frangi_vesselness(v, FrangiParams{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(v.size()));
}
BENCHMARK(BM_Frangi)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const HessNetConfig cfg;
  const ParamStore ps = init_params(cfg, 1);
  const Volume v = z_normalize(phantom(static_cast<std::size_t>(state.range(0))).volume);
  for (auto _ : state) benchmark::DoNotOptimize(forward(ps, cfg, v));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(v.size()));
}
BENCHMARK(BM_Forward)->Arg(24)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LossAndGradient(benchmark::State& state) {
  const HessNetConfig cfg;
  const ParamStore ps = init_params(cfg, 1);
  const Phantom ph = phantom(static_cast<std::size_t>(state.range(0)));
  const Volume v = z_normalize(ph.volume);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(ps, cfg, v, ph.mask, LossParams{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(v.size()));
}
BENCHMARK(BM_LossAndGradient)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
