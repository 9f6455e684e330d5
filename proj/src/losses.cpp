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

#include "hardpair/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hardpair/error.hpp"

namespace hardpair {

void validate(const LossConfig& c) {
  if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) {
    throw Error(ErrorCode::invalid_config, "temperature must be a positive finite number");
  }
  if (!(c.margin_weight >= 0.0) || !std::isfinite(c.margin_weight)) {
    throw Error(ErrorCode::invalid_config, "margin weight must be finite and >= 0");
  }
}

void validate(const LossBatch& batch) {
  const std::size_t b = batch.size();
  if (b == 0) throw Error(ErrorCode::invalid_argument, "empty loss batch");
  if (batch.text.rows() != b || batch.text.cols() != batch.image.cols()) {
    throw Error(ErrorCode::size_mismatch, "image and text batches must both be b x d");
  }
  if (!batch.hard.empty() && batch.hard.size() != b) {
    throw Error(ErrorCode::size_mismatch, "hard mask must have one entry per anchor");
  }
  for (std::size_t i = 0; i < batch.hard.size(); ++i) {
    for (std::size_t j : batch.hard[i]) {
      if (j >= b || j == i) {
        throw Error(ErrorCode::invalid_argument,
                    "hard mask of anchor " + std::to_string(i) + " holds invalid column " +
                        std::to_string(j));
      }
    }
  }
  for (const auto* m : {&batch.image, &batch.text}) {
    for (double v : m->data()) {
      if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "non-finite entry in loss batch");
    }
  }
}

namespace detail {

CosinePass cosine_pass(const LossBatch& batch) {
  validate(batch);
  const std::size_t b = batch.size();
  const std::size_t d = batch.image.cols();
  CosinePass p;
  p.unit_image = batch.image;
  p.unit_text = batch.text;
  p.image_norm.resize(b);
  p.text_norm.resize(b);
  auto unitize = [](Matrix<double>& m, std::vector<double>& norms) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      double acc = 0.0;
      for (double v : row) acc += v * v;
      double n = std::sqrt(acc);
      if (n == 0.0) throw Error(ErrorCode::zero_norm, "zero embedding row " + std::to_string(r));
      norms[r] = n;
      for (double& v : row) v /= n;
    }
  };
  unitize(p.unit_image, p.image_norm);
  unitize(p.unit_text, p.text_norm);
  p.sim = Matrix<double>(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    auto u = p.unit_image.row(i);
    for (std::size_t j = 0; j < b; ++j) {
      auto v = p.unit_text.row(j);
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += u[t] * v[t];
      p.sim(i, j) = dot;
    }
  }
  return p;
}

double log_sum_exp(const std::vector<double>& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double l : logits) acc += std::exp(l - m);
  return m + std::log(acc);
}

namespace {

// One softmax direction. `along_rows` scores anchor i against columns j;
// otherwise anchor j against rows i.
double contrastive_direction(const Matrix<double>& sim, double sigma, bool along_rows,
                             Matrix<double>* grad_sim, double scale) {
  const std::size_t b = sim.rows();
  std::vector<double> logits(b);
  double total = 0.0;
  for (std::size_t a = 0; a < b; ++a) {
    for (std::size_t c = 0; c < b; ++c) logits[c] = (along_rows ? sim(a, c) : sim(c, a)) / sigma;
    double lse = log_sum_exp(logits);
    total += lse - logits[a];
    if (grad_sim) {
      const double w = scale / (sigma * static_cast<double>(b));
      for (std::size_t c = 0; c < b; ++c) {
        double g = std::exp(logits[c] - lse) - (c == a ? 1.0 : 0.0);
        (along_rows ? (*grad_sim)(a, c) : (*grad_sim)(c, a)) += w * g;
      }
    }
  }
  return total / static_cast<double>(b);
}

}  // namespace

double contrastive_term(const Matrix<double>& sim, const LossConfig& config,
                        Matrix<double>* grad_sim, double scale) {
  validate(config);
  if (!config.symmetric) {
    return contrastive_direction(sim, config.temperature, true, grad_sim, scale);
  }
  double a = contrastive_direction(sim, config.temperature, true, grad_sim, 0.5 * scale);
  double b = contrastive_direction(sim, config.temperature, false, grad_sim, 0.5 * scale);
  return 0.5 * (a + b);
}

std::vector<std::size_t> margin_anchors(const LossBatch& batch) {
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < batch.hard.size(); ++i) {
    if (!batch.hard[i].empty()) anchors.push_back(i);
  }
  return anchors;
}

double margin_term(const Matrix<double>& sim, const std::vector<std::vector<std::size_t>>& hard,
                   Matrix<double>* grad_sim, double scale) {
  const std::size_t b = sim.rows();
  std::size_t anchors = 0;
  for (const auto& h : hard) anchors += h.empty() ? 0 : 1;
  if (anchors == 0) return 0.0;

  const double norm = 1.0 / (static_cast<double>(b) * static_cast<double>(anchors));
  std::vector<char> is_hard(b);
  double total = 0.0;
  for (std::size_t i = 0; i < hard.size(); ++i) {
    if (hard[i].empty()) continue;
    // Lowest similarity among the hard negatives; lowest column on ties.
    std::size_t pivot = hard[i].front();
    for (std::size_t j : hard[i]) {
      if (sim(i, j) < sim(i, pivot) || (sim(i, j) == sim(i, pivot) && j < pivot)) pivot = j;
    }
    const double floor = sim(i, pivot);
    std::fill(is_hard.begin(), is_hard.end(), 0);
    for (std::size_t j : hard[i]) is_hard[j] = 1;
    double row = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i || is_hard[j]) continue;
      double gap = sim(i, j) - floor;
      if (gap > 0.0) {
        row += gap;
        if (grad_sim) {
          (*grad_sim)(i, j) += scale * norm;
          (*grad_sim)(i, pivot) -= scale * norm;
        }
      }
    }
    total += row;
  }
  return total * norm;
}

void backprop_cosine(const CosinePass& p, const Matrix<double>& grad_sim,
                     Matrix<double>& grad_image, Matrix<double>& grad_text) {
  const std::size_t b = grad_sim.rows();
  const std::size_t d = p.unit_image.cols();
  grad_image = Matrix<double>(b, d);
  grad_text = Matrix<double>(b, d);
  // Gradients w.r.t. the unit rows first.
  for (std::size_t i = 0; i < b; ++i) {
    auto gi = grad_image.row(i);
    for (std::size_t j = 0; j < b; ++j) {
      double g = grad_sim(i, j);
      if (g == 0.0) continue;
      auto ui = p.unit_image.row(i);
      auto vj = p.unit_text.row(j);
      auto gj = grad_text.row(j);
      for (std::size_t t = 0; t < d; ++t) {
        gi[t] += g * vj[t];
        gj[t] += g * ui[t];
      }
    }
  }
  // d(x/|x|)/dx = (I - u u^T) / |x|.
  auto project = [d](Matrix<double>& g, const Matrix<double>& unit, const std::vector<double>& norm) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto gr = g.row(r);
      auto ur = unit.row(r);
      double radial = 0.0;
      for (std::size_t t = 0; t < d; ++t) radial += gr[t] * ur[t];
      for (std::size_t t = 0; t < d; ++t) gr[t] = (gr[t] - radial * ur[t]) / norm[r];
    }
  };
  project(grad_image, p.unit_image, p.image_norm);
  project(grad_text, p.unit_text, p.text_norm);
}

}  // namespace detail

double clip_loss_value(const LossBatch& batch, const LossConfig& config) {
  auto pass = detail::cosine_pass(batch);
  return detail::contrastive_term(pass.sim, config, nullptr);
}

namespace {

LossValueAndGrads combine(const LossBatch& batch, const LossConfig& config, double clip_weight,
                          double margin_weight) {
  validate(config);
  auto pass = detail::cosine_pass(batch);
  const std::size_t b = batch.size();
  Matrix<double> grad_sim(b, b);
  LossValueAndGrads out;
  if (clip_weight != 0.0) {
    out.loss += clip_weight * detail::contrastive_term(pass.sim, config, &grad_sim, clip_weight);
  }
  if (margin_weight != 0.0 && !batch.hard.empty()) {
    out.loss += margin_weight * detail::margin_term(pass.sim, batch.hard, &grad_sim, margin_weight);
  }
  detail::backprop_cosine(pass, grad_sim, out.grad_image, out.grad_text);
  return out;
}

}  // namespace

LossValueAndGrads clip_loss(const LossBatch& batch, const LossConfig& config) {
  return combine(batch, config, 1.0, 0.0);
}

LossValueAndGrads hnml(const LossBatch& batch, const LossConfig& config) {
  return combine(batch, config, 0.0, 1.0);
}

LossValueAndGrads finetune_loss(const LossBatch& batch, const LossConfig& config) {
  return combine(batch, config, 1.0, config.margin_weight);
}

}  // namespace hardpair
