#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <hessvessel/error.hpp>
#include <hessvessel/loss.hpp>
#include <hessvessel/optim.hpp>
#include <hessvessel/phantom.hpp>
#include <hessvessel/rng.hpp>
#include <hessvessel/train.hpp>

#include "../oracles/direct.hpp"
#include "../support.hpp"

using namespace hessvessel;

namespace {

const HessNetConfig kReduced{2, 2, 3, {4}, 2, 3};

struct Sample {
  std::vector<double> p;
  std::vector<std::uint8_t> g;
};

Sample random_sample(std::size_t n, std::uint64_t seed, double fg = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::bernoulli_distribution b(fg);
  Sample s{std::vector<double>(n), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    s.p[i] = u(rng);
    s.g[i] = b(rng) ? 1 : 0;
  }
  return s;
}

double oracle_loss(const Sample& s, const LossParams& lp) {
  return oracle::exp_log_tversky_loop(s.p, s.g, lp.tversky_alpha, lp.tversky_beta, lp.gamma_tversky,
                                      lp.gamma_ce, lp.w_tversky, lp.w_ce, lp.smooth);
}

// An 8^3 patch cut from a noisy phantom, z-normalized.
std::pair<Volume, BinaryMask> small_patch(std::uint64_t seed) {
  PhantomSpec spec;
  spec.dims = {8, 8, 8};
  spec.background = 0.1;
  spec.noise_sigma = 0.1;
  spec.seed = seed;
  spec.tubes.push_back({{0.0, 3.5, 4.0}, {7.0, 4.5, 3.0}, 1.6, 1.0});
  Phantom ph = make_phantom(spec);
  return {z_normalize(ph.volume), ph.mask};
}

double rel_err(double a, double f) {
  return std::fabs(a - f) / std::max({std::fabs(a), std::fabs(f), 1e-6});
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("LossParams validation") {
  LossParams lp;
  CHECK_NOTHROW(validate(lp));
  lp.w_tversky = 0.6;
  CHECK_THROWS_AS(validate(lp), ParameterError);
  lp = {};
  lp.smooth = 0.0;
  CHECK_THROWS_AS(validate(lp), ParameterError);
  lp = {};
  lp.gamma_ce = -0.3;
  CHECK_THROWS_AS(validate(lp), ParameterError);
}

TEST_CASE("tversky_index: examples and identities") {
  const Sample s = random_sample(200, 1);
  std::vector<double> perfect(s.g.begin(), s.g.end());
  for (double a : {0.1, 0.3, 0.9})
    for (double b : {0.2, 0.7})
      CHECK(tversky_index(perfect, s.g, a, b, 1.0) == doctest::Approx(1.0).epsilon(1e-15));

  double tp = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < s.p.size(); ++i) {
    tp += s.p[i] * s.g[i];
    sp += s.p[i];
    sg += s.g[i];
  }
  const double dice = (2 * tp + 2.0) / (sp + sg + 2.0);
  CHECK(std::fabs(tversky_index(s.p, s.g, 0.5, 0.5, 1.0) - dice) <= 1e-12);

  // p = 0.5 everywhere, half the voxels foreground: TP = FP = FN = n/4.
  const std::size_t n = 64;
  std::vector<double> half(n, 0.5);
  std::vector<std::uint8_t> g(n, 0);
  for (std::size_t i = 0; i < n / 2; ++i) g[i] = 1;
  const double q = n / 4.0;
  const double closed = (q + 1.0) / (q + 0.3 * q + 0.7 * q + 1.0);
  CHECK(tversky_index(half, g, 0.3, 0.7, 1.0) == doctest::Approx(closed).epsilon(1e-14));
  CHECK(closed == doctest::Approx(17.0 / 33.0).epsilon(1e-14));

  const Volume pv(Dims{4, 4, 4}, {1, 1, 1}, std::vector<float>(64, 0.5f));
  const BinaryMask gm(Dims{4, 4, 4}, g);
  CHECK(tversky_index(pv, gm, 0.3, 0.7, 1.0) == doctest::Approx(closed));
  CHECK_THROWS_AS(tversky_index(pv, BinaryMask(Dims{4, 4, 2}), 0.3, 0.7, 1.0), ShapeError);
}

TEST_CASE("exp_log_tversky_loss: explicit-loop oracle and limits") {
  const LossParams lp;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Sample s = random_sample(64, seed);
    const double l = exp_log_tversky_loss(s.p, s.g, lp);
    CHECK(l == doctest::Approx(oracle_loss(s, lp)).epsilon(1e-12));
    CHECK(l >= 0.0);
  }
  Sample s = random_sample(64, 9);
  for (std::size_t i = 0; i < s.p.size(); ++i) s.p[i] = s.g[i];
  // Exact 0/1 predictions: the Tversky index is 1 and only the clamped
  // cross-entropy term survives, up to the tiny floor on -ln(TI).
  CHECK(tversky_index(s.p, s.g, 0.3, 0.7, 1.0) == 1.0);
  const double limit = 0.5 * std::pow(-std::log(1.0 - kProbEpsilon), 0.3);
  CHECK(exp_log_tversky_loss(s.p, s.g, lp) >= limit);
  CHECK(exp_log_tversky_loss(s.p, s.g, lp) == doctest::Approx(limit).epsilon(0.05));
  CHECK(exp_log_tversky_loss(s.p, s.g, lp) < 0.01);
}

TEST_CASE("exp_log_tversky_loss decreases with the Tversky index at fixed cross-entropy") {
  // Swapping a foreground probability a and background probability b for
  // 1-b and 1-a leaves the cross-entropy mean unchanged but moves TI.
  const LossParams lp;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Sample s = random_sample(50, 100 + trial);
    std::size_t fg = 0, bg = 0;
    while (!s.g[fg]) ++fg;
    while (s.g[bg]) ++bg;
    Sample t = s;
    t.p[fg] = 1.0 - s.p[bg];
    t.p[bg] = 1.0 - s.p[fg];
    const double ti_s = tversky_index(s.p, s.g, lp.tversky_alpha, lp.tversky_beta, lp.smooth);
    const double ti_t = tversky_index(t.p, t.g, lp.tversky_alpha, lp.tversky_beta, lp.smooth);
    if (std::fabs(ti_s - ti_t) < 1e-9) continue;
    const double ls = exp_log_tversky_loss(s.p, s.g, lp), lt = exp_log_tversky_loss(t.p, t.g, lp);
    CHECK((ti_s > ti_t) == (ls < lt));
  }
}

TEST_CASE("loss gradient with respect to logits matches finite differences") {
  const LossParams lp;
  const Sample s = random_sample(27, 4);
  std::vector<double> z(s.p.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::log(s.p[i] / (1.0 - s.p[i]));
  std::vector<double> grad(z.size()), unused(z.size());
  const double l = exp_log_tversky_loss_logits(z, s.g, lp, grad);
  CHECK(l == doctest::Approx(exp_log_tversky_loss(s.p, s.g, lp)).epsilon(1e-10));
  const double h = 1e-6;
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const double fd = (exp_log_tversky_loss_logits(zp, s.g, lp, unused) -
                       exp_log_tversky_loss_logits(zm, s.g, lp, unused)) / (2 * h);
    CHECK(rel_err(grad[i], fd) <= 1e-5);
  }
}

TEST_CASE("backward matches central finite differences in every parameter group") {
  const auto [patch, target] = small_patch(3);
  const LossParams lp;
  const ParamStore ps = init_params(kReduced, 11);
  const LossAndGrad lg = loss_and_gradient(ps, kReduced, patch, target, lp);
  REQUIRE(lg.grad.size() == ps.size());
  CHECK(lg.loss == doctest::Approx(patch_loss(ps, kReduced, patch, target, lp)).epsilon(1e-12));
  CHECK(backward(ps, kReduced, patch, target, lp) == lg.grad);
  for (double g : lg.grad) CHECK(std::isfinite(g));

  const double h = 1e-5;
  double worst = 0.0;
  std::mt19937_64 rng(12);
  for (const auto& e : ps.layout()) {
    // Every bias and a sample of each weight tensor.
    const std::size_t count = std::min<std::size_t>(e.size, 12);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t idx = e.offset + (e.size <= 12 ? k : rng() % e.size);
      ParamStore plus = ps, minus = ps;
      plus.values()[idx] += h;
      minus.values()[idx] -= h;
      const double fd = (patch_loss(plus, kReduced, patch, target, lp) -
                         patch_loss(minus, kReduced, patch, target, lp)) / (2 * h);
      const double err = rel_err(lg.grad[idx], fd);
      worst = std::max(worst, err);
      CHECK_MESSAGE(err <= 1e-4, e.name << "[" << idx - e.offset << "] analytic " << lg.grad[idx]
                                        << " numeric " << fd);
    }
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("backward: zeroed output weights annihilate upstream gradients") {
  const auto [patch, target] = small_patch(4);
  ParamStore ps = init_params(kReduced, 2);
  for (double& w : ps.tensor("head.conv1.weight")) w = 0.0;
  const auto grad = backward(ps, kReduced, patch, target, LossParams{});
  for (const auto& e : ps.layout()) {
    if (e.name.rfind("head.conv1", 0) == 0) continue;
    for (std::size_t i = 0; i < e.size; ++i) CHECK(std::fabs(grad[e.offset + i]) <= 1e-12);
  }
  CHECK(std::fabs(grad[ps.entry("head.conv1.bias").offset]) > 0.0);
}

TEST_CASE("adamw_step: closed forms") {
  AdamWParams hp;
  hp.weight_decay = 0.0;
  SUBCASE("first step") {
    std::vector<double> p{1.0, -2.0, 0.5, 3.0}, g{0.3, -4.0, 1e-3, 0.0};
    const auto p0 = p;
    OptState st(p.size());
    adamw_step(p, g, st, hp);
    CHECK(st.t == 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double expect = -hp.lr * g[i] / (std::fabs(g[i]) + hp.eps);
      CHECK(p[i] - p0[i] == doctest::Approx(expect).epsilon(1e-9));
      CHECK(st.v[i] >= 0.0);
    }
    CHECK(p[0] - p0[0] == doctest::Approx(-hp.lr).epsilon(1e-6));
  }
  SUBCASE("zero gradient is a fixed point") {
    std::vector<double> p{1.0, -2.0}, g{0.0, 0.0};
    OptState st(2);
    for (int i = 0; i < 5; ++i) adamw_step(p, g, st, hp);
    CHECK(p == std::vector<double>{1.0, -2.0});
  }
  SUBCASE("decoupled decay") {
    hp.weight_decay = 0.1;
    std::vector<double> p{1.0, -2.0}, g{0.0, 0.0};
    OptState st(2);
    adamw_step(p, g, st, hp);
    CHECK(p[0] == 1.0 * (1.0 - hp.lr * 0.1));
    CHECK(p[1] == -2.0 * (1.0 - hp.lr * 0.1));
  }
  SUBCASE("length mismatch") {
    std::vector<double> p{1.0}, g{0.0, 0.0};
    OptState st(1);
    CHECK_THROWS_AS(adamw_step(p, g, st, hp), ShapeError);
  }
  SUBCASE("quadratic converges") {
    // f(p) = (p - 3)^2
    std::vector<double> p{-4.0}, g(1);
    OptState st(1);
    hp.lr = 0.05;
    for (int i = 0; i < 500; ++i) {
      g[0] = 2.0 * (p[0] - 3.0);
      adamw_step(p, g, st, hp);
    }
    CHECK(std::fabs(p[0] - 3.0) < 1e-3);
  }
}

TEST_CASE("cosine_warm_restarts_lr") {
  const double hi = 0.02, lo = 1e-5;
  CHECK(cosine_warm_restarts_lr(0.0, 10, 2, hi, lo) == 0.02);
  CHECK(cosine_warm_restarts_lr(5.0, 10, 1, hi, lo) == doctest::Approx((hi + lo) / 2).epsilon(1e-14));
  CHECK(cosine_warm_restarts_lr(10.0, 10, 1, hi, lo) == doctest::Approx(hi).epsilon(1e-14));
  CHECK(cosine_warm_restarts_lr(10.0, 10, 2, hi, lo) == doctest::Approx(hi).epsilon(1e-14));
  CHECK(cosine_warm_restarts_lr(30.0, 10, 2, hi, lo) == doctest::Approx(hi).epsilon(1e-14));
  CHECK(cosine_warm_restarts_lr(20.0, 10, 2, hi, lo) == doctest::Approx((hi + lo) / 2).epsilon(1e-12));
  CHECK(cosine_warm_restarts_lr(9.999999, 10, 2, hi, lo) < 1.001 * lo);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    CHECK(cosine_warm_restarts_lr(t, 7, 1, hi, lo) ==
          doctest::Approx(cosine_warm_restarts_lr(t + 7, 7, 1, hi, lo)).epsilon(1e-9));
    const double lr = cosine_warm_restarts_lr(t, 10, 2, hi, lo);
    CHECK(lr >= lo);
    CHECK(lr <= hi);
  }
  // Monotone within a cycle.
  for (double t = 0.0; t < 9.9; t += 0.1) {
    CHECK(cosine_warm_restarts_lr(t + 0.1, 10, 2, hi, lo) < cosine_warm_restarts_lr(t, 10, 2, hi, lo));
  }
  CHECK_THROWS_AS(cosine_warm_restarts_lr(1.0, 0.0, 1, hi, lo), ParameterError);
  CHECK_THROWS_AS(cosine_warm_restarts_lr(1.0, 10, 0.5, hi, lo), ParameterError);
}

TEST_CASE("sample_patches") {
  const Phantom ph = make_phantom(random_tube_spec({32, 30, 28}, {}, 4));
  TrainConfig tc;
  tc.patch_size = 12;
  tc.patches_per_volume = 10;
  SUBCASE("foreground patches contain vessel voxels") {
    tc.foreground_patch_fraction = 1.0;
    Rng rng(1);
    const PatchSet ps = sample_patches(ph.volume, ph.mask, tc, rng);
    CHECK_FALSE(ps.uniform_fallback);
    REQUIRE(ps.patches.size() == 10);
    for (const auto& p : ps.patches) {
      CHECK(p.target.count() > 0);
      CHECK(p.image.dims() == Dims{12, 12, 12});
      for (int a = 0; a < 3; ++a) CHECK(p.origin[a] + 12 <= ph.volume.dims()[a]);
      CHECK(p.image(3, 4, 5) == ph.volume(p.origin[0] + 3, p.origin[1] + 4, p.origin[2] + 5));
      CHECK(p.target(3, 4, 5) == ph.mask(p.origin[0] + 3, p.origin[1] + 4, p.origin[2] + 5));
    }
  }
  SUBCASE("deterministic under a seed") {
    Rng a(9), b(9);
    const PatchSet pa = sample_patches(ph.volume, ph.mask, tc, a);
    const PatchSet pb = sample_patches(ph.volume, ph.mask, tc, b);
    for (std::size_t i = 0; i < pa.patches.size(); ++i) CHECK(pa.patches[i].origin == pb.patches[i].origin);
  }
  SUBCASE("whole-volume patch") {
    const Volume v = testing_support::random_volume({12, 12, 12}, 3);
    tc.patches_per_volume = 1;
    Rng rng(2);
    const PatchSet ps = sample_patches(v, BinaryMask(v.dims(), 1), tc, rng);
    CHECK(ps.patches[0].origin == std::array<std::size_t, 3>{0, 0, 0});
    CHECK(ps.patches[0].image == v);
  }
  SUBCASE("empty mask falls back to uniform sampling") {
    Rng rng(3);
    const PatchSet ps = sample_patches(ph.volume, BinaryMask(ph.mask.dims()), tc, rng);
    CHECK(ps.uniform_fallback);
    CHECK(ps.patches.size() == 10);
  }
  SUBCASE("patch too large") {
    tc.patch_size = 29;
    Rng rng(4);
    CHECK_THROWS_AS(sample_patches(ph.volume, ph.mask, tc, rng), ShapeError);
  }
}

TEST_CASE("TrainConfig validation") {
  const HessNetConfig cfg;
  TrainConfig tc;
  CHECK_NOTHROW(validate(tc, cfg));
  tc.beta1 = 1.0;
  CHECK_THROWS_AS(validate(tc, cfg), ParameterError);
  tc = {};
  tc.lr_min = 1.0;
  CHECK_THROWS_AS(validate(tc, cfg), ParameterError);
  tc = {};
  tc.patch_size = 3;
  CHECK_THROWS_AS(validate(tc, cfg), ParameterError);
  tc = {};
  tc.t_mult = 0.5;
  CHECK_THROWS_AS(validate(tc, cfg), ParameterError);
}

TEST_CASE("seed derivation is stable") {
  CHECK(epoch_seed(7, SeedStage::kPatches, 3, 2) == derive_seed(7, SeedStage::kPatches, {3, 2}));
  CHECK(derive_seed(7, SeedStage::kPatches, {3, 2}) != derive_seed(7, SeedStage::kPatches, {2, 3}));
  CHECK(derive_seed(7, SeedStage::kGamma) != derive_seed(7, SeedStage::kElastic));
  CHECK(derive_seed(7, SeedStage::kGamma) != derive_seed(8, SeedStage::kGamma));
}

TEST_CASE("train: loss descends and reruns are bit-identical") {
  PhantomSpec spec;
  spec.dims = {24, 24, 24};
  spec.background = 0.2;
  spec.tubes.push_back({{2.0, 6.0, 12.0}, {21.0, 18.0, 12.0}, 2.0, 1.0});
  spec.tubes.push_back({{12.0, 2.0, 4.0}, {12.0, 21.0, 20.0}, 1.5, 1.0});
  const Phantom ph = make_phantom(spec);
  const std::vector<LabeledVolume> pairs{{ph.volume, ph.mask}};
  TrainConfig tc;
  tc.epochs = 12;
  tc.patch_size = 16;
  tc.patches_per_volume = 3;
  tc.t0 = 12;
  tc.t_mult = 1;
  tc.seed = 31;
  std::vector<EpochRecord> seen;
  TrainOptions opts;
  opts.validation = LabeledVolume{ph.volume, ph.mask};
  opts.on_epoch = [&](const EpochRecord& r) { seen.push_back(r); };
  const TrainResult a = train(pairs, kReduced, tc, LossParams{}, opts);
  REQUIRE(a.history.size() == 12);
  CHECK(seen == a.history);
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].epoch == e);
    CHECK(a.history[e].val_dsc.has_value());
  }
  CHECK(a.history[0].lr == tc.lr_max);
  CHECK(a.history.back().mean_loss < a.history.front().mean_loss);
  CHECK(a.opt.t == 12 * 3 * 2);

  const TrainResult b = train(pairs, kReduced, tc, LossParams{}, opts);
  CHECK(b.params == a.params);
  CHECK(b.history == a.history);

  tc.seed = 32;
  const TrainResult c = train(pairs, kReduced, tc, LossParams{});
  CHECK(!(c.params == a.params));
}

TEST_CASE("train: contract errors") {
  TrainConfig tc;
  tc.patch_size = 8;
  CHECK_THROWS_AS(train({}, kReduced, tc, LossParams{}), ParameterError);
  const Volume v = testing_support::random_volume({10, 10, 10}, 1);
  CHECK_THROWS_AS(train({{v, BinaryMask(Dims{10, 10, 9})}}, kReduced, tc, LossParams{}), ShapeError);
}

}  // TEST_SUITE
