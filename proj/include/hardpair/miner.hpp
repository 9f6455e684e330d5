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
#include <span>
#include <string>
#include <vector>

#include "hardpair/embedstore.hpp"
#include "hardpair/simcore.hpp"

namespace hardpair {

enum class MiningMethod { hpm, fast, image_only, text_only };

std::string_view to_string(MiningMethod m);
MiningMethod parse_mining_method(std::string_view name);

struct MiningConfig {
  std::size_t k = 50;
  double tau_image = 0.5;
  double tau_text = 0.5;
  // Candidate pool size for FastHPM; ignored by the other methods.
  std::optional<std::size_t> pool_size;
  std::uint64_t seed = 0;
  // 0 selects omp_get_max_threads(). Never changes results.
  int workers = 0;
};

void validate(const MiningConfig& config);

struct HardPair {
  std::size_t index = 0;
  double score = 0.0;

  friend bool operator==(const HardPair&, const HardPair&) = default;
};

struct HardPairResult {
  std::size_t target = 0;
  bool noise = false;
  // Descending by score, ties by ascending index. Empty when noise is set.
  std::vector<HardPair> ranked;

  friend bool operator==(const HardPairResult&, const HardPairResult&) = default;
};

struct MiningSummary {
  std::size_t targets = 0;
  std::size_t noise_count = 0;
  double noise_fraction = 0.0;
  double wall_seconds = 0.0;
  std::size_t pool_size_used = 0;
};

struct MiningReport {
  MiningMethod method = MiningMethod::hpm;
  MiningConfig config;
  std::vector<HardPairResult> results;  // results[i].target == i
  MiningSummary summary;
};

// Thresholded image cosine times thresholded text cosine for each candidate,
// zero when either side is below its threshold.
std::vector<double> score_candidates(const PairDataset& dataset, std::size_t target,
                                     const MiningConfig& config,
                                     std::span<const std::size_t> pool);

// Exact hard pair mining over D \ {i} for every target, parallel over targets.
MiningReport mine_hpm(const PairDataset& dataset, const MiningConfig& config);

// Hard pair mining over a per-target uniform pool of config.pool_size rows.
MiningReport mine_fast(const PairDataset& dataset, const MiningConfig& config);

// Single-modality baselines: top-k by raw image (IM) or text (TM) cosine.
MiningReport mine_im(const PairDataset& dataset, std::size_t k, int workers = 0);
MiningReport mine_tm(const PairDataset& dataset, std::size_t k, int workers = 0);

MiningReport mine(const PairDataset& dataset, MiningMethod method,
                  const MiningConfig& config);

// The candidate pool FastHPM draws for `target`: the first `pool_size`
// positions of a Fisher-Yates shuffle of D \ {target} driven by a substream
// keyed on (seed, target). Shorter pools are prefixes of longer ones.
std::vector<std::size_t> sample_pool(std::size_t num_pairs, std::size_t target,
                                     std::size_t pool_size, std::uint64_t seed);

struct NoisePartition {
  std::vector<std::size_t> clean;
  std::vector<std::size_t> noise;
};

NoisePartition filter_noise(const MiningReport& report);

struct DetectionQuality {
  std::size_t true_positives = 0;
  std::size_t planted = 0;
  std::size_t flagged = 0;
  std::size_t clean_flagged = 0;
  std::size_t clean_total = 0;
  double precision = 0.0;
  double recall = 0.0;
  double clean_flag_rate = 0.0;
};

DetectionQuality score_detection(const NoisePartition& partition,
                                 const std::vector<bool>& planted_mismatch);

int resolve_workers(int requested);

}  // namespace hardpair
