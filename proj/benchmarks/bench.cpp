#include <benchmark/benchmark.h>

#include "octa/augment.hpp"
#include "octa/metrics.hpp"
#include "octa/objectives.hpp"
#include "octa/schedules.hpp"

using namespace octa;

namespace {

ImageArray random_image(Rng& rng, int h, int w) {
  ImageArray img(h, w, 1);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

void BM_SoftDice(benchmark::State& state) {
  Rng rng(1);
  size_t n = static_cast<size_t>(state.range(0));
  Vec pred(n), gt(n);
  for (size_t i = 0; i < n; ++i) {
    pred[i] = rng.uniform();
    gt[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(soft_dice_score(pred, gt));
}
BENCHMARK(BM_SoftDice)->Arg(64 * 64)->Arg(512 * 512);

void BM_CutmixPair(benchmark::State& state) {
  Rng rng(2);
  int size = static_cast<int>(state.range(0));
  ImageArray xi = random_image(rng, size, size);
  ImageArray xj = random_image(rng, size, size);
  std::vector<double> yi = {1.0, 0.0, 0.0}, yj = {0.0, 0.0, 1.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(cutmix_pair(xi, yi, xj, yj, rng.uniform(), rng).lambda_adj);
}
BENCHMARK(BM_CutmixPair)->Arg(64)->Arg(512);

void BM_QuadraticKappa(benchmark::State& state) {
  Rng rng(3);
  int n = static_cast<int>(state.range(0));
  std::vector<int> yt(n), yp(n);
  for (int i = 0; i < n; ++i) {
    yt[i] = rng.uniform_int(0, 2);
    yp[i] = rng.uniform_int(0, 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(quadratic_weighted_kappa(yt, yp, 3));
}
BENCHMARK(BM_QuadraticKappa)->Arg(500)->Arg(5000);

void BM_LrAt(benchmark::State& state) {
  ScheduleSpec spec{ScheduleKind::cosine, 1e-3, 100};
  int epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lr_at(spec, epoch));
    epoch = (epoch + 1) % 100;
  }
}
BENCHMARK(BM_LrAt);

}  // namespace

BENCHMARK_MAIN();
