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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hardpair/embedstore.hpp"
#include "hardpair/miner.hpp"

namespace hardpair {

struct CriteriaCurve {
  std::string label;
  std::vector<std::size_t> rank;  // 1..k
  std::vector<double> mean_score;
};

struct LabeledReport {
  std::string label;
  const MiningReport* report = nullptr;
};

// Mean rank-r score over non-noise targets, r = 1..k.
std::vector<CriteriaCurve> criteria_curve(const std::vector<LabeledReport>& reports);

// Kendall tau-b between two rankings of ids. Ids missing from one list share
// the tied rank (list length + 1) in that list. Computed with Knight's
// O(n log n) merge-sort algorithm.
double kendall_tau(const std::vector<std::size_t>& ranking_a,
                   const std::vector<std::size_t>& ranking_b);

struct RankSimilarityMatrix {
  std::vector<double> taus;
  Matrix<double> kendall;  // taus.size() square, unit diagonal
  // Targets compared per off-diagonal cell (both minings non-noise).
  Matrix<double> compared;
};

// Mines once per threshold (tau_image = tau_text = tau) and averages the
// per-target Kendall tau-b between top-k rankings over targets that are not
// noise under either threshold. With pool_size set the FastHPM miner is used.
RankSimilarityMatrix tau_sensitivity(const PairDataset& dataset,
                                     const std::vector<double>& taus, std::size_t k,
                                     std::uint64_t seed,
                                     std::optional<std::size_t> pool_size = std::nullopt,
                                     int workers = 0);

std::string format_curves_wide_csv(const std::vector<CriteriaCurve>& curves);
std::string format_curves_long_csv(const std::vector<CriteriaCurve>& curves);
std::string format_rank_similarity_csv(const RankSimilarityMatrix& m);

}  // namespace hardpair
