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

#pragma once

#include <cstddef>
#include <vector>

#include "hardpair/matrix.hpp"

namespace hardpair {

struct LossConfig {
  double temperature = 0.07;
  // Weight of the hard negative margin term in finetune_loss.
  double margin_weight = 1.0;
  // Average image->text and text->image directions instead of image->text only.
  bool symmetric = false;
};

void validate(const LossConfig& config);

// b image rows against b text rows; row i of each is a positive pair.
// hard[i] lists the in-batch columns that are hard negatives of anchor i.
struct LossBatch {
  Matrix<double> image;
  Matrix<double> text;
  std::vector<std::vector<std::size_t>> hard;

  std::size_t size() const noexcept { return image.rows(); }
};

void validate(const LossBatch& batch);

struct LossValueAndGrads {
  double loss = 0.0;
  Matrix<double> grad_image;
  Matrix<double> grad_text;
};

double clip_loss_value(const LossBatch& batch, const LossConfig& config);

LossValueAndGrads clip_loss(const LossBatch& batch, const LossConfig& config);
LossValueAndGrads hnml(const LossBatch& batch, const LossConfig& config);
LossValueAndGrads finetune_loss(const LossBatch& batch, const LossConfig& config);

// Building blocks shared by the three losses. Everything downstream of the
// b x b cosine matrix is expressed through these so the composite loss
// reuses one similarity pass.
namespace detail {

struct CosinePass {
  Matrix<double> unit_image;
  Matrix<double> unit_text;
  std::vector<double> image_norm;
  std::vector<double> text_norm;
  Matrix<double> sim;  // sim(i, j) = cos(image_i, text_j)
};

CosinePass cosine_pass(const LossBatch& batch);

// Contrastive term on a similarity matrix; accumulates scale * dloss/dsim
// into grad_sim when given.
double contrastive_term(const Matrix<double>& sim, const LossConfig& config,
                        Matrix<double>* grad_sim, double scale = 1.0);

// Stabilized log(sum_j exp(logits_j)).
double log_sum_exp(const std::vector<double>& logits);

std::vector<std::size_t> margin_anchors(const LossBatch& batch);

double margin_term(const Matrix<double>& sim,
                   const std::vector<std::vector<std::size_t>>& hard,
                   Matrix<double>* grad_sim, double scale = 1.0);

// Chain rule from dloss/dsim back to the unnormalized embedding rows.
void backprop_cosine(const CosinePass& pass, const Matrix<double>& grad_sim,
                     Matrix<double>& grad_image, Matrix<double>& grad_text);

}  // namespace detail

}  // namespace hardpair
