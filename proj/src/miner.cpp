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

#include "hardpair/miner.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <unordered_map>

#include "hardpair/error.hpp"
#include "hardpair/log.hpp"

namespace hardpair {

std::string_view to_string(MiningMethod m) {
  switch (m) {
    case MiningMethod::hpm: return "hpm";
    case MiningMethod::fast: return "fast";
    case MiningMethod::image_only: return "im";
    case MiningMethod::text_only: return "tm";
  }
  return "hpm";
}

MiningMethod parse_mining_method(std::string_view name) {
  if (name == "hpm") return MiningMethod::hpm;
  if (name == "fast" || name == "fasthpm") return MiningMethod::fast;
  if (name == "im") return MiningMethod::image_only;
  if (name == "tm") return MiningMethod::text_only;
  throw Error(ErrorCode::invalid_config, "unknown mining method '" + std::string(name) + "'");
}

int resolve_workers(int requested) {
  if (requested < 0) throw Error(ErrorCode::invalid_config, "workers must be >= 0");
  return requested > 0 ? requested : omp_get_max_threads();
}

void validate(const MiningConfig& c) {
  if (c.k < 1) throw Error(ErrorCode::invalid_config, "k must be >= 1");
  check_threshold(c.tau_image);
  check_threshold(c.tau_text);
  if (c.pool_size) {
    if (*c.pool_size == 0) throw Error(ErrorCode::invalid_config, "pool size must be >= 1");
    if (*c.pool_size < c.k) {
      throw Error(ErrorCode::invalid_config, "pool size " + std::to_string(*c.pool_size) +
                                                 " is smaller than k=" + std::to_string(c.k));
    }
  }
  if (c.workers < 0) throw Error(ErrorCode::invalid_config, "workers must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

bool ranks_before(const HardPair& a, const HardPair& b) {
  return a.score > b.score || (a.score == b.score && a.index < b.index);
}

void check_pairs(const PairDataset& d, std::size_t k) {
  if (d.size() < 2) throw Error(ErrorCode::invalid_argument, "mining needs at least two pairs");
  if (k >= d.size()) {
    throw Error(ErrorCode::invalid_config, "k=" + std::to_string(k) + " must be smaller than N=" +
                                               std::to_string(d.size()));
  }
}

// Product of thresholded image and text cosines.
struct PairScorer {
  const CosineIndex& image;
  const CosineIndex& text;
  double tau_image;
  double tau_text;

  double operator()(std::size_t i, std::size_t j) const {
    double si = image.similarity(i, j);
    if (si < tau_image) return 0.0;
    double st = text.similarity(i, j);
    if (st < tau_text) return 0.0;
    return si * st;
  }
};

// Top-k of the positive-score candidates; noise when fewer than k are
// positive (some top-k entry would be zero).
template <typename ForEachCandidate>
HardPairResult select_hard_pairs(std::size_t target, std::size_t k, const PairScorer& scorer,
                                 ForEachCandidate&& for_each, std::vector<HardPair>& scratch) {
  scratch.clear();
  for_each([&](std::size_t j) {
    double s = scorer(target, j);
    if (s > 0.0) scratch.push_back({j, s});
  });
  HardPairResult r;
  r.target = target;
  if (scratch.size() < k) {
    r.noise = true;
    return r;
  }
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                    scratch.end(), ranks_before);
  r.ranked.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
  return r;
}

auto all_but(std::size_t n, std::size_t target) {
  return [n, target](auto&& visit) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != target) visit(j);
    }
  };
}

auto over(const std::vector<std::size_t>& pool) {
  return [&pool](auto&& visit) {
    for (std::size_t j : pool) visit(j);
  };
}

void finish_summary(MiningReport& report, Clock::time_point start) {
  auto& s = report.summary;
  s.targets = report.results.size();
  s.noise_count = static_cast<std::size_t>(std::count_if(
      report.results.begin(), report.results.end(), [](const auto& r) { return r.noise; }));
  s.noise_fraction = s.targets ? static_cast<double>(s.noise_count) / s.targets : 0.0;
  s.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::vector<double> score_candidates(const PairDataset& dataset, std::size_t target,
                                     const MiningConfig& config,
                                     std::span<const std::size_t> pool) {
  check_threshold(config.tau_image);
  check_threshold(config.tau_text);
  if (target >= dataset.size()) {
    throw Error(ErrorCode::invalid_argument, "target " + std::to_string(target) + " out of range");
  }
  CosineIndex image(dataset.image);
  CosineIndex text(dataset.text);
  PairScorer scorer{image, text, config.tau_image, config.tau_text};
  std::vector<double> scores;
  scores.reserve(pool.size());
  for (std::size_t j : pool) {
    if (j >= dataset.size() || j == target) {
      throw Error(ErrorCode::invalid_argument,
                  "pool entry " + std::to_string(j) + " is out of range or is the target");
    }
    scores.push_back(scorer(target, j));
  }
  return scores;
}

MiningReport mine_hpm(const PairDataset& dataset, const MiningConfig& config) {
  validate(config);
  check_pairs(dataset, config.k);
  auto start = Clock::now();
  CosineIndex image(dataset.image);
  CosineIndex text(dataset.text);
  const PairScorer scorer{image, text, config.tau_image, config.tau_text};
  const std::size_t n = dataset.size();
  const std::size_t k = config.k;

  MiningReport report;
  report.method = MiningMethod::hpm;
  report.config = config;
  report.config.pool_size.reset();
  report.results.resize(n);
  report.summary.pool_size_used = n - 1;

#pragma omp parallel num_threads(resolve_workers(config.workers))
  {
    std::vector<HardPair> scratch;
    scratch.reserve(n);
#pragma omp for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
      report.results[i] = select_hard_pairs(i, k, scorer, all_but(n, i), scratch);
    }
  }
  finish_summary(report, start);
  return report;
}

std::vector<std::size_t> sample_pool(std::size_t num_pairs, std::size_t target,
                                     std::size_t pool_size, std::uint64_t seed) {
  if (target >= num_pairs) {
    throw Error(ErrorCode::invalid_argument, "target " + std::to_string(target) + " out of range");
  }
  const std::size_t universe = num_pairs - 1;
  pool_size = std::min(pool_size, universe);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(target), static_cast<std::uint32_t>(target >> 32),
                    0x706f6f6cu};
  std::mt19937_64 rng(seq);

  // Fisher-Yates over positions 0..universe-1 of D \ {target}. Large pools
  // shuffle a dense array; small ones track only the displaced slots.
  std::vector<std::size_t> out;
  out.reserve(pool_size);
  auto to_index = [target](std::size_t pos) { return pos < target ? pos : pos + 1; };
  if (pool_size * 4 >= universe) {
    std::vector<std::size_t> slots(universe);
    for (std::size_t p = 0; p < universe; ++p) slots[p] = p;
    for (std::size_t t = 0; t < pool_size; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, universe - 1);
      std::swap(slots[t], slots[pick(rng)]);
      out.push_back(to_index(slots[t]));
    }
  } else {
    std::unordered_map<std::size_t, std::size_t> moved;
    auto at = [&](std::size_t p) {
      auto it = moved.find(p);
      return it == moved.end() ? p : it->second;
    };
    for (std::size_t t = 0; t < pool_size; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, universe - 1);
      std::size_t j = pick(rng);
      std::size_t vt = at(t), vj = at(j);
      moved[t] = vj;
      moved[j] = vt;
      out.push_back(to_index(vj));
    }
  }
  return out;
}

MiningReport mine_fast(const PairDataset& dataset, const MiningConfig& config) {
  validate(config);
  if (!config.pool_size) throw Error(ErrorCode::invalid_config, "FastHPM needs a pool size");
  check_pairs(dataset, config.k);
  auto start = Clock::now();
  const std::size_t n = dataset.size();
  const std::size_t k = config.k;
  std::size_t pool_size = *config.pool_size;
  if (pool_size > n - 1) {
    log::write(log::Level::warn, "pool_clamped",
               {{"requested", std::to_string(pool_size)}, {"used", std::to_string(n - 1)}});
    pool_size = n - 1;
  }
  CosineIndex image(dataset.image);
  CosineIndex text(dataset.text);
  const PairScorer scorer{image, text, config.tau_image, config.tau_text};

  MiningReport report;
  report.method = MiningMethod::fast;
  report.config = config;
  report.results.resize(n);
  report.summary.pool_size_used = pool_size;

#pragma omp parallel num_threads(resolve_workers(config.workers))
  {
    std::vector<HardPair> scratch;
    scratch.reserve(pool_size);
#pragma omp for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
      auto pool = sample_pool(n, i, pool_size, config.seed);
      report.results[i] = select_hard_pairs(i, k, scorer, over(pool), scratch);
    }
  }
  finish_summary(report, start);
  return report;
}

namespace {

MiningReport mine_single(const PairDataset& dataset, Modality modality, std::size_t k,
                         int workers) {
  if (k < 1) throw Error(ErrorCode::invalid_config, "k must be >= 1");
  check_pairs(dataset, k);
  auto start = Clock::now();
  const std::size_t n = dataset.size();
  CosineIndex index(modality == Modality::image ? dataset.image : dataset.text);

  MiningReport report;
  report.method = modality == Modality::image ? MiningMethod::image_only : MiningMethod::text_only;
  report.config.k = k;
  report.config.tau_image = 0.0;
  report.config.tau_text = 0.0;
  report.config.workers = workers;
  report.results.resize(n);
  report.summary.pool_size_used = n - 1;

#pragma omp parallel num_threads(resolve_workers(workers))
  {
    std::vector<HardPair> scratch;
    scratch.reserve(n);
#pragma omp for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
      scratch.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) scratch.push_back({j, index.similarity(i, j)});
      }
      std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                        scratch.end(), ranks_before);
      auto& r = report.results[i];
      r.target = i;
      r.ranked.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
    }
  }
  finish_summary(report, start);
  return report;
}

}  // namespace

MiningReport mine_im(const PairDataset& dataset, std::size_t k, int workers) {
  return mine_single(dataset, Modality::image, k, resolve_workers(workers));
}

MiningReport mine_tm(const PairDataset& dataset, std::size_t k, int workers) {
  return mine_single(dataset, Modality::text, k, resolve_workers(workers));
}

MiningReport mine(const PairDataset& dataset, MiningMethod method, const MiningConfig& config) {
  switch (method) {
    case MiningMethod::hpm: return mine_hpm(dataset, config);
    case MiningMethod::fast: return mine_fast(dataset, config);
    case MiningMethod::image_only: return mine_im(dataset, config.k, config.workers);
    case MiningMethod::text_only: return mine_tm(dataset, config.k, config.workers);
  }
  throw Error(ErrorCode::invalid_config, "unknown mining method");
}

NoisePartition filter_noise(const MiningReport& report) {
  NoisePartition p;
  for (const auto& r : report.results) (r.noise ? p.noise : p.clean).push_back(r.target);
  return p;
}

DetectionQuality score_detection(const NoisePartition& partition,
                                 const std::vector<bool>& planted_mismatch) {
  DetectionQuality q;
  const std::size_t n = planted_mismatch.size();
  q.planted = static_cast<std::size_t>(std::count(planted_mismatch.begin(), planted_mismatch.end(), true));
  q.clean_total = n - q.planted;
  q.flagged = partition.noise.size();
  for (std::size_t i : partition.noise) {
    if (i >= n) throw Error(ErrorCode::size_mismatch, "noise id beyond ground truth");
    if (planted_mismatch[i]) {
      ++q.true_positives;
    } else {
      ++q.clean_flagged;
    }
  }
  q.precision = q.flagged ? static_cast<double>(q.true_positives) / q.flagged : 1.0;
  q.recall = q.planted ? static_cast<double>(q.true_positives) / q.planted : 1.0;
  q.clean_flag_rate = q.clean_total ? static_cast<double>(q.clean_flagged) / q.clean_total : 0.0;
  return q;
}

}  // namespace hardpair
