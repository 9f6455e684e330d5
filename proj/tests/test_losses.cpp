// Copyright 2026 The hardpair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "grad_fixtures.hpp"
#include "hardpair/error.hpp"
#include "hardpair/losses.hpp"
#include "oracle.hpp"

using namespace hardpair;

namespace {

LossBatch margin_example() {
  // s_00 = 1, s_01 = 0.7 (normal), s_02 = 0.5 (hard).
  LossBatch b;
  b.image = Matrix<double>(3, 3);
  b.text = Matrix<double>(3, 3);
  b.image(0, 0) = 1;
  b.image(1, 1) = 1;
  b.image(2, 2) = 1;
  b.text(0, 0) = 1;
  b.text(1, 0) = 0.7;
  b.text(1, 1) = std::sqrt(1 - 0.49);
  b.text(2, 0) = 0.5;
  b.text(2, 2) = std::sqrt(0.75);
  b.hard = {{2}, {}, {}};
  return b;
}

}  // namespace

TEST_CASE("single-element batch has exactly zero loss and gradient") {
  auto b = fixtures::random_batch(1, 5, 1);
  auto r = clip_loss(b, {});
  CHECK(r.loss == 0.0);
  for (double g : r.grad_image.data()) CHECK(g == 0.0);
  for (double g : r.grad_text.data()) CHECK(g == 0.0);
}

TEST_CASE("2x2 identity batch at temperature 1") {
  LossBatch b;
  b.image = Matrix<double>(2, 2);
  b.text = Matrix<double>(2, 2);
  b.image(0, 0) = b.image(1, 1) = b.text(0, 0) = b.text(1, 1) = 1.0;
  auto r = clip_loss(b, {.temperature = 1.0});
  CHECK(std::abs(r.loss - std::log1p(std::exp(-1.0))) <= 1e-9);
  CHECK(r.loss == doctest::Approx(0.313262).epsilon(1e-6));
}

TEST_CASE("contrastive gradients match central differences") {
  for (double sigma : {0.07, 0.5, 1.0}) {
    for (bool symmetric : {false, true}) {
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        LossConfig c{.temperature = sigma, .margin_weight = 0.0, .symmetric = symmetric};
        auto b = fixtures::random_batch(8, 16, seed);
        auto err = fixtures::gradient_error(b, c, clip_loss, clip_loss_value);
        CHECK(err <= 1e-5);
      }
    }
  }
}

TEST_CASE("margin example: satisfied margin and a single hinge") {
  auto b = margin_example();
  auto r = hnml(b, {});
  CHECK(std::abs(r.loss - 0.2 / 3.0) <= 1e-12);
  CHECK(r.loss == doctest::Approx(0.0667).epsilon(1e-3));

  // Drop the normal negative below the hard one.
  b.text(1, 0) = 0.3;
  b.text(1, 1) = std::sqrt(1 - 0.09);
  CHECK(hnml(b, {}).loss == 0.0);
  b.text(1, 0) = 0.2;
  b.text(1, 1) = std::sqrt(1 - 0.04);
  CHECK(hnml(b, {}).loss == 0.0);
}

TEST_CASE("margin with no anchors is zero with zero gradients") {
  auto b = fixtures::random_batch(6, 4, 3);
  b.hard.assign(6, {});
  auto r = hnml(b, {});
  CHECK(r.loss == 0.0);
  for (double g : r.grad_image.data()) CHECK(g == 0.0);
}

TEST_CASE("margin gradients match central differences away from kinks") {
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; checked < 20; ++seed) {
    auto b = fixtures::random_batch(10, 12, 1000 + seed);
    fixtures::random_hard_mask(b, 2, seed);
    if (fixtures::kink_distance(b) < 1e-4) continue;
    auto margin_value = [](const LossBatch& x, const LossConfig& c) { return hnml(x, c).loss; };
    CHECK(fixtures::gradient_error(b, {}, hnml, margin_value) <= 1e-5);
    ++checked;
  }
}

TEST_CASE("finetune loss reduces and combines") {
  auto b = fixtures::random_batch(8, 6, 77);
  fixtures::random_hard_mask(b, 1, 77);
  auto clip = clip_loss(b, {});
  auto zero = finetune_loss(b, {.margin_weight = 0.0});
  CHECK(zero.loss == clip.loss);
  CHECK(zero.grad_image == clip.grad_image);
  CHECK(zero.grad_text == clip.grad_text);

  auto ex = margin_example();
  ex.hard = {{2}, {}, {}};
  ex.text(1, 0) = 0.3;
  ex.text(1, 1) = std::sqrt(1 - 0.09);
  CHECK(hnml(ex, {}).loss == 0.0);
  CHECK(finetune_loss(ex, {.margin_weight = 1.0}).loss == clip_loss(ex, {}).loss);

  auto ex2 = margin_example();
  double expected = clip_loss_value(ex2, {}) + 2.0 * (0.2 / 3.0);
  auto ft = finetune_loss(ex2, {.margin_weight = 2.0});
  CHECK(std::abs(ft.loss - expected) <= 1e-12);
  auto m = hnml(ex2, {});
  auto c = clip_loss(ex2, {});
  for (std::size_t t = 0; t < ft.grad_image.size(); ++t) {
    CHECK(ft.grad_image.data()[t] == doctest::Approx(c.grad_image.data()[t] + 2.0 * m.grad_image.data()[t]));
    CHECK(ft.grad_text.data()[t] == doctest::Approx(c.grad_text.data()[t] + 2.0 * m.grad_text.data()[t]));
  }
}

TEST_CASE("finetune gradients match central differences") {
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; checked < 10; ++seed) {
    auto b = fixtures::random_batch(12, 8, 5000 + seed);
    fixtures::random_hard_mask(b, 3, seed);
    if (fixtures::kink_distance(b) < 1e-4) continue;
    LossConfig c{.temperature = 0.1, .margin_weight = 1.5};
    auto value = [](const LossBatch& x, const LossConfig& cc) { return finetune_loss(x, cc).loss; };
    CHECK(fixtures::gradient_error(b, c, finetune_loss, value) <= 1e-5);
    ++checked;
  }
}

TEST_CASE("contrastive loss is non-negative and falls as the positive similarity rises") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<double> sim(5, 5);
  for (double& v : sim.data()) v = u(rng);
  LossConfig c{.temperature = 0.2};
  double prev = detail::contrastive_term(sim, c, nullptr);
  CHECK(prev >= 0.0);
  for (int step = 0; step < 5; ++step) {
    for (std::size_t i = 0; i < 5; ++i) sim(i, i) += 0.1;
    double now = detail::contrastive_term(sim, c, nullptr);
    CHECK(now < prev);
    CHECK(now >= 0.0);
    prev = now;
  }
}

TEST_CASE("row shifts leave the stabilized contrastive value unchanged") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<double> sim(6, 6);
  for (double& v : sim.data()) v = u(rng);
  LossConfig c{.temperature = 0.05};
  double base = detail::contrastive_term(sim, c, nullptr);
  Matrix<double> shifted = sim;
  for (std::size_t j = 0; j < 6; ++j) {
    shifted(2, j) += 40.0;
    shifted(4, j) -= 25.0;
  }
  CHECK(detail::contrastive_term(shifted, c, nullptr) == doctest::Approx(base).epsilon(1e-12));
  CHECK(std::isfinite(detail::log_sum_exp({1000.0, 999.0, -1000.0})));
  CHECK(detail::log_sum_exp({1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("margin is zero whenever hard negatives dominate normal ones") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto b = fixtures::random_batch(7, 5, seed);
    fixtures::random_hard_mask(b, 2, seed);
    auto pass = detail::cosine_pass(b);
    bool dominated = true;
    for (std::size_t i = 0; i < 7; ++i) {
      if (b.hard[i].empty()) continue;
      double lo = 2, hi = -2;
      for (std::size_t j : b.hard[i]) lo = std::min(lo, pass.sim(i, j));
      for (std::size_t j = 0; j < 7; ++j) {
        if (j == i || std::find(b.hard[i].begin(), b.hard[i].end(), j) != b.hard[i].end()) continue;
        hi = std::max(hi, pass.sim(i, j));
      }
      dominated = dominated && lo >= hi;
    }
    double loss = hnml(b, {}).loss;
    CHECK(loss >= 0.0);
    if (dominated) CHECK(loss == 0.0);
    if (loss == 0.0) CHECK(dominated);
  }
}

TEST_CASE("non-participating rows get zero gradient") {
  auto b = fixtures::random_batch(6, 4, 21);
  b.hard = {{1, 2}, {}, {}, {}, {}, {}};
  auto r = hnml(b, {});
  // Only image row 0 is an anchor.
  for (std::size_t i = 1; i < 6; ++i) {
    for (double g : r.grad_image.row(i)) CHECK(g == 0.0);
  }
}

TEST_CASE("min ties give the full gradient to the lowest column") {
  LossBatch b;
  b.image = Matrix<double>(4, 2);
  b.text = Matrix<double>(4, 2);
  b.image(0, 0) = 1;
  b.image(1, 1) = b.image(2, 1) = b.image(3, 1) = 1;
  b.text(0, 0) = 1;
  b.text(1, 0) = 0.2;   // hard, ties with 3
  b.text(1, 1) = 1;
  b.text(2, 0) = 1;     // normal, inside the margin
  b.text(2, 1) = 0.1;
  b.text(3, 0) = 0.2;   // hard
  b.text(3, 1) = 1;
  b.hard = {{3, 1}, {}, {}, {}};
  auto pass = detail::cosine_pass(b);
  Matrix<double> g(4, 4);
  detail::margin_term(pass.sim, b.hard, &g);
  CHECK(g(0, 1) < 0.0);
  CHECK(g(0, 3) == 0.0);
  CHECK(g(0, 2) > 0.0);
}

TEST_CASE("invalid configs and batches are rejected") {
  auto b = fixtures::random_batch(3, 2, 0);
  CHECK_THROWS_AS(clip_loss(b, {.temperature = 0.0}), Error);
  CHECK_THROWS_AS(clip_loss(b, {.temperature = -1.0}), Error);
  auto nan = b;
  nan.image(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(clip_loss(nan, {}), Error);
  auto bad = b;
  bad.hard = {{0}, {}, {}};
  CHECK_THROWS_AS(hnml(bad, {}), Error);
  bad.hard = {{5}, {}, {}};
  CHECK_THROWS_AS(hnml(bad, {}), Error);
}
