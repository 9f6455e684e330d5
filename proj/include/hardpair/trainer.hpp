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
#include <filesystem>
#include <random>
#include <vector>

#include "hardpair/embedstore.hpp"
#include "hardpair/error.hpp"
#include "hardpair/losses.hpp"
#include "hardpair/miner.hpp"

namespace hardpair {

struct ComposerConfig {
  std::size_t batch_size = 32;
  // Fraction of the base batch used as seeds for hard-pair draws.
  double seed_fraction = 1.0;
  std::size_t hard_per_seed = 1;
  std::uint64_t seed = 0;
};

void validate(const ComposerConfig& config);

struct BatchPlan {
  std::vector<std::size_t> base;
  // Raw hard draws per seed (seed k is base[k]), before dedup.
  std::vector<std::vector<std::size_t>> hard_draws;
  // Base rows first, then surviving hard rows in seed order.
  std::vector<std::size_t> composed;
  // hard_mask[pos] = positions in `composed` of the hard negatives of the
  // anchor at `pos`. Only seed positions can be non-empty.
  std::vector<std::vector<std::size_t>> hard_mask;
};

// Base rows are drawn without replacement from targets the report did not
// flag as noise; hard rows are drawn without replacement from each seed's
// mined list, skipping noise-flagged rows. `report` may be null (every row is
// clean and no hard rows are added).
BatchPlan compose_batch(std::size_t num_pairs, const MiningReport* report,
                        const ComposerConfig& config, std::mt19937_64& rng);
BatchPlan compose_batch(const PairDataset& dataset, const MiningReport* report,
                        const ComposerConfig& config);

// Linear projections followed by row normalization.
struct ToyEncoder {
  Matrix<double> image_proj;  // image_dim x embed_dim
  Matrix<double> text_proj;   // text_dim x embed_dim

  std::size_t embed_dim() const noexcept { return image_proj.cols(); }
  friend bool operator==(const ToyEncoder&, const ToyEncoder&) = default;
};

ToyEncoder random_encoder(std::size_t image_dim, std::size_t text_dim,
                          std::size_t embed_dim, std::uint64_t seed);

// Rows projected but not normalized (the losses normalize internally).
Matrix<double> project(const Matrix<float>& rows, const Matrix<double>& proj,
                       std::span<const std::size_t> which);
Matrix<double> encode(const Matrix<float>& rows, const Matrix<double>& proj);

void save_encoder(const ToyEncoder& encoder, const std::filesystem::path& header_path);
ToyEncoder load_encoder(const std::filesystem::path& header_path);

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t iterations = 100;
  LossConfig loss;
  // composer.seed is ignored here; batches come from the trainer's stream.
  ComposerConfig composer;
  std::uint64_t seed = 0;
  // Stop after this many evaluations without an R@1 gain (0 disables).
  std::size_t early_stop_patience = 0;
  std::size_t eval_every = 50;
};

void validate(const TrainConfig& config);

struct TrainResult {
  ToyEncoder encoder;
  std::vector<double> trace;
  bool early_stopped = false;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& message, std::vector<double> trace)
      : Error(ErrorCode::diverged, message), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

TrainResult train(const PairDataset& dataset, const MiningReport* report,
                  const TrainConfig& config, const ToyEncoder& init);

struct RecallTable {
  std::vector<std::size_t> ks;
  std::vector<double> recall;
};

// Image->text retrieval over the whole dataset: for each image row, every
// text row is ranked by cosine (ties by ascending index) and R@k is the
// fraction of partners ranked within k.
RecallTable eval_retrieval(const ToyEncoder& encoder, const PairDataset& dataset,
                           const std::vector<std::size_t>& ks, int workers = 0);
RecallTable eval_retrieval(const Matrix<double>& image, const Matrix<double>& text,
                           const std::vector<std::size_t>& ks, int workers = 0);

std::vector<std::size_t> partner_ranks(const Matrix<double>& image,
                                       const Matrix<double>& text, int workers = 0);

std::string format_trace_csv(const std::vector<double>& trace);
std::string format_recall_csv(const RecallTable& table);

}  // namespace hardpair
