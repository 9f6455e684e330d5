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

#include "hardpair/simcore.hpp"

#include <algorithm>
#include <cmath>

#include "hardpair/error.hpp"

namespace hardpair {

std::string_view to_string(Modality m) { return m == Modality::image ? "image" : "text"; }

namespace {

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::invalid_argument, "cosine of vectors with dims " +
                                                 std::to_string(u.size()) + " and " +
                                                 std::to_string(v.size()));
  }
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t t = 0; t < u.size(); ++t) {
    double a = u[t], b = v[t];
    uv += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorCode::zero_norm, "cosine of a zero vector");
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }

CosineIndex::CosineIndex(const Matrix<float>& rows) : rows_(&rows), inv_norm_(rows.rows()) {
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    double acc = 0.0;
    for (float v : rows.row(r)) acc += static_cast<double>(v) * v;
    if (acc == 0.0) {
      throw Error(ErrorCode::zero_norm, "row " + std::to_string(r) + " has zero norm");
    }
    inv_norm_[r] = 1.0 / std::sqrt(acc);
  }
}

double CosineIndex::similarity(std::size_t i, std::size_t j) const {
  auto a = rows_->row(i);
  auto b = rows_->row(j);
  double dot = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) dot += static_cast<double>(a[t]) * b[t];
  return std::clamp(dot * inv_norm_[i] * inv_norm_[j], -1.0, 1.0);
}

void check_threshold(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(ErrorCode::invalid_config, "threshold must lie in [0, 1], got " + std::to_string(tau));
  }
}

SupportVector support_vector(const PairDataset& dataset, std::size_t target, Modality modality,
                             double tau, std::optional<std::span<const std::size_t>> pool) {
  check_threshold(tau);
  const std::size_t n = dataset.size();
  if (target >= n) {
    throw Error(ErrorCode::invalid_argument, "target " + std::to_string(target) + " out of range");
  }
  const Matrix<float>& rows = modality == Modality::image ? dataset.image : dataset.text;
  CosineIndex index(rows);

  std::vector<std::size_t> candidates;
  if (pool) {
    candidates.assign(pool->begin(), pool->end());
    for (std::size_t j : candidates) {
      if (j >= n) throw Error(ErrorCode::invalid_argument, "pool index " + std::to_string(j) + " out of range");
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  } else {
    candidates.resize(n);
    for (std::size_t j = 0; j < n; ++j) candidates[j] = j;
  }

  // Dense pass over the candidate row, sparse result.
  std::vector<double> dense(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    dense[c] = candidates[c] == target ? -2.0 : index.similarity(target, candidates[c]);
  }
  SupportVector sv;
  sv.target = target;
  sv.modality = modality;
  sv.threshold = tau;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (candidates[c] != target && dense[c] >= tau) {
      sv.indices.push_back(candidates[c]);
      sv.values.push_back(dense[c]);
    }
  }
  return sv;
}

}  // namespace hardpair
