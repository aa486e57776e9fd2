#include <benchmark/benchmark.h>

#include "dhff/features.hpp"
#include "dhff/iist.hpp"
#include "dhff/rng.hpp"
#include "dhff/vgg.hpp"

using namespace dhff;

namespace {

template <class T>
Tensor<T> random_image(int n, std::uint64_t seed) {
  Tensor<T> t(3, n, n);
  RngStream rng(seed);
  for (auto& v : t.v) v = static_cast<T>(rng.next_unit());
  return t;
}

const VggWeights& weights() {
  static const VggWeights w = random_base_weights(42);
  return w;
}

}  // namespace

static void BM_VggForward64(benchmark::State& state) {
  const PreparedWeights<float> w = prepare_weights<float>(weights());
  const Tensor<float> img = random_image<float>(64, 1);
  for (auto _ : state) {
    auto cache = vgg_forward(w, img, PoolingMode::Max);
    benchmark::DoNotOptimize(cache.pool_out[4].v.data());
  }
}
BENCHMARK(BM_VggForward64)->Unit(benchmark::kMillisecond);

static void BM_VggForward8Double(benchmark::State& state) {
  const PreparedWeights<double> w = prepare_weights<double>(weights());
  const Tensor<double> img = random_image<double>(8, 1);
  for (auto _ : state) {
    auto cache = vgg_forward(w, img, PoolingMode::Max);
    benchmark::DoNotOptimize(cache.pool_out[4].v.data());
  }
}
BENCHMARK(BM_VggForward8Double)->Unit(benchmark::kMillisecond);

static void BM_Gram512(benchmark::State& state) {
  Tensor<float> f(512, 4, 4);
  RngStream rng(2);
  for (auto& v : f.v) v = float(rng.next_unit());
  for (auto _ : state) {
    auto g = gram(f);
    benchmark::DoNotOptimize(g.v.data());
  }
}
BENCHMARK(BM_Gram512)->Unit(benchmark::kMillisecond);

static void BM_LossAndGrad64(benchmark::State& state) {
  const PreparedWeights<float> w = prepare_weights<float>(weights());
  const Tensor<float> sar = random_image<float>(64, 3);
  const Tensor<float> opt = random_image<float>(64, 4);
  IistConfig cfg;
  const auto ct = content_from_cache(
      vgg_forward(w, sar, cfg.pooling), cfg.content_layer);
  const auto st = style_from_cache(vgg_forward(w, opt, cfg.pooling));
  Tensor<float> grad;
  for (auto _ : state) {
    auto lb = loss_and_grad(sar, ct, st, w, cfg, &grad);
    benchmark::DoNotOptimize(lb.loss);
    benchmark::DoNotOptimize(grad.v.data());
  }
}
BENCHMARK(BM_LossAndGrad64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
