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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hardpair/embedstore.hpp"
#include "hardpair/matrix.hpp"

namespace hardpair {

enum class Modality { image, text };

std::string_view to_string(Modality m);

double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

// Cached inverse row norms so cosine(i, j) costs one dot product. The result
// is clamped to [-1, 1]. Zero rows are rejected at construction.
class CosineIndex {
 public:
  explicit CosineIndex(const Matrix<float>& rows);

  std::size_t size() const noexcept { return inv_norm_.size(); }
  double similarity(std::size_t i, std::size_t j) const;

 private:
  const Matrix<float>* rows_;
  std::vector<double> inv_norm_;
};

// Sparse thresholded similarity vector of one target against a candidate
// set: only entries with similarity >= threshold are stored.
struct SupportVector {
  std::size_t target = 0;
  Modality modality = Modality::image;
  double threshold = 0.0;
  std::vector<std::size_t> indices;  // ascending
  std::vector<double> values;
};

void check_threshold(double tau);

// `pool` restricts the candidates; the target is dropped from it if present.
SupportVector support_vector(const PairDataset& dataset, std::size_t target,
                             Modality modality, double tau,
                             std::optional<std::span<const std::size_t>> pool = std::nullopt);

}  // namespace hardpair
