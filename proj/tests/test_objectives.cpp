#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "octa/objectives.hpp"
#include "octa/rng.hpp"

using namespace octa;

namespace {

Vec random_probs(Rng& rng, size_t n) {
  Vec v(n);
  for (auto& x : v) x = rng.uniform(0.01, 0.99);
  return v;
}

Vec random_mask(Rng& rng, size_t n, double p = 0.5) {
  Vec v(n);
  for (auto& x : v) x = rng.bernoulli(p) ? 1.0 : 0.0;
  return v;
}

}  // namespace

TEST_CASE("soft dice hand values") {
  // 4x4 grid: pred one pixel at (0,0), gt pixels at (0,0) and (0,1)
  Vec pred(16, 0.0), gt(16, 0.0);
  pred[0] = 1.0;
  gt[0] = gt[1] = 1.0;
  CHECK(soft_dice_score(pred, gt) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(soft_iou_score(pred, gt) == doctest::Approx(0.5).epsilon(1e-6));

  // identical nonempty
  CHECK(soft_dice_score(gt, gt) == doctest::Approx(1.0).epsilon(1e-6));
  // empty-vs-empty convention
  Vec zero(16, 0.0);
  CHECK(soft_dice_score(zero, zero) == doctest::Approx(1.0));
  CHECK(soft_iou_score(zero, zero) == doctest::Approx(1.0));
  // disjoint
  Vec pred2(16, 0.0);
  pred2[5] = 1.0;
  CHECK(soft_dice_score(pred2, gt) == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("dice and jaccard batch losses") {
  Vec perfect(16, 0.0);
  perfect[0] = perfect[1] = 1.0;
  Vec one_pixel(16, 0.0);
  one_pixel[0] = 1.0;

  std::vector<Vec> preds = {perfect, one_pixel};
  std::vector<Vec> gts = {perfect, perfect};

  LossValue d = dice_loss(preds, gts);
  CHECK(d.n == 2);
  CHECK(d.value == doctest::Approx(0.16665).epsilon(1e-3));

  LossValue j = jaccard_loss(preds, gts);
  CHECK(j.value == doctest::Approx(0.25).epsilon(1e-3));

  LossValue joint = joint_seg_loss(preds, gts, 1.0, 1.0);
  CHECK(joint.value == doctest::Approx(d.value + j.value).epsilon(1e-12));
  CHECK(joint_seg_loss(preds, gts, 1.0, 0.0).value == doctest::Approx(d.value));
  CHECK(joint_seg_loss(preds, gts, 0.0, 1.0).value == doctest::Approx(j.value));
  CHECK_THROWS_AS(joint_seg_loss(preds, gts, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dice_loss({}, {}), std::invalid_argument);

  // perfect predictions -> 0
  CHECK(dice_loss({perfect}, {perfect}).value == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(jaccard_loss({perfect}, {perfect}).value == doctest::Approx(0.0).epsilon(1e-6));

  // disjoint binary pred vs nonempty gt -> per-sample loss ~ 1
  Vec disjoint(16, 0.0);
  disjoint[10] = 1.0;
  CHECK(dice_loss({disjoint}, {perfect}).value == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("dice equals 2*iou/(1+iou) on random binary masks") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec pred = random_mask(rng, 64);
    Vec gt = random_mask(rng, 64);
    double dice = soft_dice_score(pred, gt);
    double iou = soft_iou_score(pred, gt);
    CHECK(std::abs(dice - 2.0 * iou / (1.0 + iou)) < 1e-9);
  }
}

TEST_CASE("batch losses are permutation invariant") {
  Rng rng(9);
  std::vector<Vec> preds, gts;
  for (int i = 0; i < 4; ++i) {
    preds.push_back(random_probs(rng, 16));
    gts.push_back(random_mask(rng, 16));
  }
  std::vector<Vec> preds_r(preds.rbegin(), preds.rend());
  std::vector<Vec> gts_r(gts.rbegin(), gts.rend());
  CHECK(dice_loss(preds, gts).value == dice_loss(preds_r, gts_r).value);
  CHECK(jaccard_loss(preds, gts).value == jaccard_loss(preds_r, gts_r).value);
}

TEST_CASE("cross entropy hand values") {
  CHECK(cross_entropy({1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}) == doctest::Approx(0.0));
  Vec uniform(3, 1.0 / 3.0);
  CHECK(cross_entropy(uniform, {0.0, 1.0, 0.0}) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(cross_entropy({0.7, 0.2, 0.1}, {0.0, 1.0, 0.0}) ==
        doctest::Approx(-std::log(0.2)).epsilon(1e-9));
}

TEST_CASE("label smoothing") {
  Vec y = {1.0, 0.0, 0.0};
  Vec s = smooth_label(y, 0.1, 3);
  CHECK(s[0] == doctest::Approx(0.9333333333).epsilon(1e-9));
  CHECK(s[1] == doctest::Approx(0.0333333333).epsilon(1e-9));
  CHECK(s[2] == doctest::Approx(0.0333333333).epsilon(1e-9));

  Vec mixed = {0.5, 0.0, 0.5};
  Vec sm = smooth_label(mixed, 0.1, 3);
  CHECK(sm[0] == doctest::Approx(0.4833333333).epsilon(1e-9));
  CHECK(sm[1] == doctest::Approx(0.0333333333).epsilon(1e-9));
  CHECK(sm[2] == doctest::Approx(0.4833333333).epsilon(1e-9));

  // epsilon 0 is identity; output stays on the simplex
  CHECK(smooth_label(mixed, 0.0, 3) == mixed);
  double sum = sm[0] + sm[1] + sm[2];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mix loss reductions") {
  std::vector<Vec> probs = {{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}};
  std::vector<Vec> labels = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};

  // epsilon 0 on unmixed labels equals mean plain CE
  double plain = (cross_entropy(probs[0], labels[0]) + cross_entropy(probs[1], labels[1])) / 2.0;
  CHECK(mix_loss(probs, labels, 0.0).value == doctest::Approx(plain).epsilon(1e-12));

  // CE of a distribution against itself is its entropy (the CE minimum)
  Vec smoothed = smooth_label(labels[0], 0.1, 3);
  double entropy = 0.0;
  for (double p : smoothed) entropy -= p * std::log(p);
  CHECK(mix_loss({smoothed}, {labels[0]}, 0.1).value == doctest::Approx(entropy).epsilon(1e-9));
}

TEST_CASE("joint classification loss decomposition") {
  std::vector<Vec> probs = {{0.6, 0.3, 0.1}};
  std::vector<Vec> labels = {{1.0, 0.0, 0.0}};

  JointClsLoss j = joint_cls_loss(probs, labels, probs, labels, 0.0);
  CHECK(j.total == doctest::Approx(j.clf + j.mix).epsilon(1e-12));
  // mixing disabled with epsilon 0: total is exactly twice plain CE
  CHECK(j.total == doctest::Approx(2.0 * cross_entropy(probs[0], labels[0])).epsilon(1e-12));

  // perfect raw predictions with lambda=1 mixing and epsilon 0 -> 0
  std::vector<Vec> perfect = {{1.0, 0.0, 0.0}};
  JointClsLoss z = joint_cls_loss(perfect, labels, perfect, labels, 0.0);
  CHECK(z.total == doctest::Approx(0.0).epsilon(1e-9));
}

// ---- gradient checks against central finite differences ----

namespace {

/// Relative-error comparison of an analytic gradient against central
/// differences with h = 1e-4.
template <typename LossFn, typename GradFn>
void grad_check(Rng& rng, LossFn loss, GradFn grad, size_t n) {
  Vec pred = random_probs(rng, n);
  Vec gt = random_mask(rng, n);
  Vec g = grad(pred, gt);
  const double h = 1e-4;
  for (size_t i = 0; i < n; ++i) {
    Vec hi = pred, lo = pred;
    hi[i] += h;
    lo[i] -= h;
    double fd = (loss(hi, gt) - loss(lo, gt)) / (2.0 * h);
    double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-8});
    CHECK(std::abs(fd - g[i]) / denom < 1e-3);
  }
}

}  // namespace

TEST_CASE("gradient check: dice loss") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial)
    grad_check(
        rng, [](const Vec& p, const Vec& g) { return 1.0 - soft_dice_score(p, g); },
        [](const Vec& p, const Vec& g) { return dice_loss_grad(p, g); }, 12);
}

TEST_CASE("gradient check: jaccard loss") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial)
    grad_check(
        rng, [](const Vec& p, const Vec& g) { return 1.0 - soft_iou_score(p, g); },
        [](const Vec& p, const Vec& g) { return jaccard_loss_grad(p, g); }, 12);
}

TEST_CASE("gradient check: cross entropy") {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Vec probs = random_probs(rng, 4);
    Vec target(4, 0.0);
    target[rng.uniform_int(0, 3)] = 1.0;
    Vec g = cross_entropy_grad(probs, target);
    const double h = 1e-4;
    for (size_t i = 0; i < probs.size(); ++i) {
      Vec hi = probs, lo = probs;
      hi[i] += h;
      lo[i] -= h;
      double fd = (cross_entropy(hi, target) - cross_entropy(lo, target)) / (2.0 * h);
      double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-8});
      CHECK(std::abs(fd - g[i]) / denom < 1e-3);
    }
  }
}
