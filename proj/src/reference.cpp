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

#include "hardpair/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hardpair/error.hpp"

namespace hardpair::reference {

namespace {

bool ranks_before(const HardPair& a, const HardPair& b) {
  return a.score > b.score || (a.score == b.score && a.index < b.index);
}

HardPairResult top_k_with_noise(std::size_t target, std::vector<HardPair> row, std::size_t k) {
  std::sort(row.begin(), row.end(), ranks_before);
  HardPairResult r;
  r.target = target;
  r.ranked.assign(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k));
  r.noise = std::any_of(r.ranked.begin(), r.ranked.end(),
                        [](const HardPair& h) { return h.score == 0.0; });
  if (r.noise) r.ranked.clear();
  return r;
}

void summarize(MiningReport& report) {
  auto& s = report.summary;
  s.targets = report.results.size();
  s.noise_count = 0;
  for (const auto& r : report.results) s.noise_count += r.noise ? 1 : 0;
  s.noise_fraction = s.targets ? static_cast<double>(s.noise_count) / s.targets : 0.0;
}

double thresholded(double sim, double tau) { return sim < tau ? 0.0 : sim; }

}  // namespace

MiningReport mine_hpm(const PairDataset& dataset, const MiningConfig& config) {
  validate(config);
  const std::size_t n = dataset.size();
  if (n < 2 || config.k >= n) throw Error(ErrorCode::invalid_config, "need 1 <= k < N");
  CosineIndex image(dataset.image);
  CosineIndex text(dataset.text);

  MiningReport report;
  report.method = MiningMethod::hpm;
  report.config = config;
  report.config.pool_size.reset();
  report.summary.pool_size_used = n - 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<HardPair> row;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double si = thresholded(image.similarity(i, j), config.tau_image);
      double st = si == 0.0 ? 0.0 : thresholded(text.similarity(i, j), config.tau_text);
      row.push_back({j, si * st});
    }
    report.results.push_back(top_k_with_noise(i, std::move(row), config.k));
  }
  summarize(report);
  return report;
}

MiningReport mine_fast(const PairDataset& dataset, const MiningConfig& config) {
  validate(config);
  const std::size_t n = dataset.size();
  if (n < 2 || config.k >= n) throw Error(ErrorCode::invalid_config, "need 1 <= k < N");
  if (!config.pool_size) throw Error(ErrorCode::invalid_config, "FastHPM needs a pool size");
  const std::size_t pool_size = std::min(*config.pool_size, n - 1);
  CosineIndex image(dataset.image);
  CosineIndex text(dataset.text);

  MiningReport report;
  report.method = MiningMethod::fast;
  report.config = config;
  report.summary.pool_size_used = pool_size;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<HardPair> row;
    for (std::size_t j : sample_pool(n, i, pool_size, config.seed)) {
      double si = thresholded(image.similarity(i, j), config.tau_image);
      double st = si == 0.0 ? 0.0 : thresholded(text.similarity(i, j), config.tau_text);
      row.push_back({j, si * st});
    }
    report.results.push_back(top_k_with_noise(i, std::move(row), config.k));
  }
  summarize(report);
  return report;
}

MiningReport mine_single_modality(const PairDataset& dataset, Modality modality, std::size_t k) {
  const std::size_t n = dataset.size();
  if (k < 1 || n < 2 || k >= n) throw Error(ErrorCode::invalid_config, "need 1 <= k < N");
  CosineIndex index(modality == Modality::image ? dataset.image : dataset.text);
  MiningReport report;
  report.method = modality == Modality::image ? MiningMethod::image_only : MiningMethod::text_only;
  report.config.k = k;
  report.summary.pool_size_used = n - 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<HardPair> row;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back({j, index.similarity(i, j)});
    }
    std::sort(row.begin(), row.end(), ranks_before);
    HardPairResult r;
    r.target = i;
    r.ranked.assign(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k));
    report.results.push_back(std::move(r));
  }
  summarize(report);
  return report;
}

std::vector<std::size_t> partner_ranks(const Matrix<double>& image, const Matrix<double>& text) {
  const std::size_t n = image.rows();
  std::vector<std::size_t> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<HardPair> row;
    for (std::size_t j = 0; j < n; ++j) row.push_back({j, cosine(image.row(i), text.row(j))});
    std::sort(row.begin(), row.end(), ranks_before);
    auto it = std::find_if(row.begin(), row.end(), [i](const HardPair& h) { return h.index == i; });
    ranks[i] = static_cast<std::size_t>(it - row.begin()) + 1;
  }
  return ranks;
}

}  // namespace hardpair::reference
