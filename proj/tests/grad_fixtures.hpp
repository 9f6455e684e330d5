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

// Random loss batches and finite-difference helpers shared by loss tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "hardpair/losses.hpp"
#include "oracle.hpp"

namespace fixtures {

using hardpair::LossBatch;
using hardpair::LossConfig;
using hardpair::LossValueAndGrads;
using hardpair::Matrix;

// Unnormalized rows so the gradient flows through the norm terms too.
inline LossBatch random_batch(std::size_t b, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  LossBatch batch;
  batch.image = Matrix<double>(b, d);
  batch.text = Matrix<double>(b, d);
  for (auto* m : {&batch.image, &batch.text}) {
    for (std::size_t r = 0; r < b; ++r) {
      double s = scale(rng);
      for (double& v : m->row(r)) v = normal(rng) * s;
    }
  }
  return batch;
}

// Roughly half the anchors get `per_anchor` distinct hard columns.
inline void random_hard_mask(LossBatch& batch, std::size_t per_anchor, std::uint64_t seed) {
  const std::size_t b = batch.size();
  std::mt19937_64 rng(seed * 7919 + 1);
  batch.hard.assign(b, {});
  for (std::size_t i = 0; i < b; ++i) {
    if (rng() % 2 == 0 && i != 0) continue;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < b; ++j) {
      if (j != i) cols.push_back(j);
    }
    std::shuffle(cols.begin(), cols.end(), rng);
    cols.resize(std::min(per_anchor, cols.size()));
    batch.hard[i] = cols;
  }
}

// Distance in similarity space to the nearest hinge kink or min tie.
inline double kink_distance(const LossBatch& batch) {
  auto cosd = [&](std::size_t i, std::size_t j) {
    double uv = 0, uu = 0, vv = 0;
    for (std::size_t t = 0; t < batch.image.cols(); ++t) {
      uv += batch.image(i, t) * batch.text(j, t);
      uu += batch.image(i, t) * batch.image(i, t);
      vv += batch.text(j, t) * batch.text(j, t);
    }
    return uv / std::sqrt(uu * vv);
  };
  double dist = 1e9;
  for (std::size_t i = 0; i < batch.hard.size(); ++i) {
    const auto& h = batch.hard[i];
    if (h.empty()) continue;
    std::vector<double> hs;
    for (std::size_t j : h) hs.push_back(cosd(i, j));
    std::sort(hs.begin(), hs.end());
    if (hs.size() > 1) dist = std::min(dist, hs[1] - hs[0]);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (j == i || std::find(h.begin(), h.end(), j) != h.end()) continue;
      dist = std::min(dist, std::abs(cosd(i, j) - hs[0]));
    }
  }
  return dist;
}

using LossFn = std::function<LossValueAndGrads(const LossBatch&, const LossConfig&)>;
using ValueFn = std::function<double(const LossBatch&, const LossConfig&)>;

// Worst normwise relative error over the image and text gradients.
inline double gradient_error(const LossBatch& batch, const LossConfig& config, const LossFn& loss,
                             const ValueFn& value, double h = 1e-5) {
  auto analytic = loss(batch, config);
  auto fd_image = oracle::finite_difference(
      [&](const Matrix<double>& x) {
        LossBatch b = batch;
        b.image = x;
        return value(b, config);
      },
      batch.image, h);
  auto fd_text = oracle::finite_difference(
      [&](const Matrix<double>& x) {
        LossBatch b = batch;
        b.text = x;
        return value(b, config);
      },
      batch.text, h);
  return std::max(oracle::max_relative_error(analytic.grad_image, fd_image),
                  oracle::max_relative_error(analytic.grad_text, fd_text));
}

}  // namespace fixtures
