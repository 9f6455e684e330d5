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

#include "hardpair/trainer.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "hardpair/report_io.hpp"

namespace hardpair {

namespace fs = std::filesystem;

void validate(const ComposerConfig& c) {
  if (c.batch_size < 1) throw Error(ErrorCode::invalid_config, "batch size must be >= 1");
  if (!(c.seed_fraction > 0.0 && c.seed_fraction <= 1.0)) {
    throw Error(ErrorCode::invalid_config, "seed fraction must lie in (0, 1]");
  }
}

void validate(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw Error(ErrorCode::invalid_config, "learning rate must be finite and >= 0");
  }
  if (c.iterations < 1) throw Error(ErrorCode::invalid_config, "iterations must be >= 1");
  if (c.early_stop_patience > 0 && c.eval_every < 1) {
    throw Error(ErrorCode::invalid_config, "eval_every must be >= 1 when early stopping");
  }
  validate(c.loss);
  validate(c.composer);
}

namespace {

// First `count` entries of a Fisher-Yates shuffle of `items` (in place).
void partial_shuffle(std::vector<std::size_t>& items, std::size_t count, std::mt19937_64& rng) {
  for (std::size_t t = 0; t < count; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, items.size() - 1);
    std::swap(items[t], items[pick(rng)]);
  }
  items.resize(count);
}

}  // namespace

BatchPlan compose_batch(std::size_t num_pairs, const MiningReport* report,
                        const ComposerConfig& config, std::mt19937_64& rng) {
  validate(config);
  if (report && report->results.size() != num_pairs) {
    throw Error(ErrorCode::size_mismatch, "report covers " + std::to_string(report->results.size()) +
                                              " targets, dataset has " + std::to_string(num_pairs));
  }
  auto is_noise = [report](std::size_t i) { return report && report->results[i].noise; };

  std::vector<std::size_t> clean;
  clean.reserve(num_pairs);
  for (std::size_t i = 0; i < num_pairs; ++i) {
    if (!is_noise(i)) clean.push_back(i);
  }
  if (clean.empty()) throw Error(ErrorCode::invalid_argument, "no clean targets to sample from");
  if (config.batch_size > clean.size()) {
    throw Error(ErrorCode::invalid_config, "batch size " + std::to_string(config.batch_size) +
                                               " exceeds the " + std::to_string(clean.size()) +
                                               " clean targets");
  }

  BatchPlan plan;
  partial_shuffle(clean, config.batch_size, rng);
  plan.base = std::move(clean);
  plan.composed = plan.base;
  std::unordered_map<std::size_t, std::size_t> position;
  for (std::size_t p = 0; p < plan.base.size(); ++p) position.emplace(plan.base[p], p);

  const auto seeds = std::min<std::size_t>(
      plan.base.size(),
      static_cast<std::size_t>(std::ceil(config.seed_fraction * static_cast<double>(config.batch_size))));
  plan.hard_draws.resize(seeds);
  std::vector<std::vector<std::size_t>> seed_mask(seeds);

  if (report && config.hard_per_seed > 0) {
    for (std::size_t s = 0; s < seeds; ++s) {
      std::vector<std::size_t> pool;
      for (const auto& h : report->results[plan.base[s]].ranked) {
        if (h.index < num_pairs && !is_noise(h.index)) pool.push_back(h.index);
      }
      if (pool.empty()) continue;
      partial_shuffle(pool, std::min(config.hard_per_seed, pool.size()), rng);
      plan.hard_draws[s] = pool;
      for (std::size_t h : pool) {
        // Collisions with rows already in the batch are dropped, not redrawn.
        if (position.contains(h)) continue;
        position.emplace(h, plan.composed.size());
        seed_mask[s].push_back(plan.composed.size());
        plan.composed.push_back(h);
      }
    }
  }
  plan.hard_mask.resize(plan.composed.size());
  for (std::size_t s = 0; s < seeds; ++s) plan.hard_mask[s] = std::move(seed_mask[s]);
  return plan;
}

BatchPlan compose_batch(const PairDataset& dataset, const MiningReport* report,
                        const ComposerConfig& config) {
  std::mt19937_64 rng(config.seed);
  return compose_batch(dataset.size(), report, config, rng);
}

ToyEncoder random_encoder(std::size_t image_dim, std::size_t text_dim, std::size_t embed_dim,
                          std::uint64_t seed) {
  if (image_dim < 1 || text_dim < 1 || embed_dim < 1) {
    throw Error(ErrorCode::invalid_config, "encoder dims must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ToyEncoder e{Matrix<double>(image_dim, embed_dim), Matrix<double>(text_dim, embed_dim)};
  const double si = 1.0 / std::sqrt(static_cast<double>(image_dim));
  const double st = 1.0 / std::sqrt(static_cast<double>(text_dim));
  for (double& v : e.image_proj.data()) v = normal(rng) * si;
  for (double& v : e.text_proj.data()) v = normal(rng) * st;
  return e;
}

Matrix<double> project(const Matrix<float>& rows, const Matrix<double>& proj,
                       std::span<const std::size_t> which) {
  if (rows.cols() != proj.rows()) {
    throw Error(ErrorCode::size_mismatch, "projection expects " + std::to_string(proj.rows()) +
                                              "-d rows, got " + std::to_string(rows.cols()));
  }
  const std::size_t d_in = proj.rows();
  const std::size_t d_out = proj.cols();
  Matrix<double> out(which.size(), d_out);
  for (std::size_t r = 0; r < which.size(); ++r) {
    auto x = rows.row(which[r]);
    auto y = out.row(r);
    for (std::size_t a = 0; a < d_in; ++a) {
      const double xa = x[a];
      auto w = proj.row(a);
      for (std::size_t c = 0; c < d_out; ++c) y[c] += xa * w[c];
    }
  }
  return out;
}

Matrix<double> encode(const Matrix<float>& rows, const Matrix<double>& proj) {
  std::vector<std::size_t> all(rows.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return project(rows, proj, all);
}

namespace {

void accumulate_weight_grad(const Matrix<float>& rows, std::span<const std::size_t> which,
                            const Matrix<double>& grad_out, Matrix<double>& grad_w) {
  const std::size_t d_in = grad_w.rows();
  const std::size_t d_out = grad_w.cols();
  for (std::size_t r = 0; r < which.size(); ++r) {
    auto x = rows.row(which[r]);
    auto g = grad_out.row(r);
    for (std::size_t a = 0; a < d_in; ++a) {
      const double xa = x[a];
      auto w = grad_w.row(a);
      for (std::size_t c = 0; c < d_out; ++c) w[c] += xa * g[c];
    }
  }
}

void descend(Matrix<double>& w, const Matrix<double>& grad, double lr) {
  auto wd = w.data();
  auto gd = grad.data();
  for (std::size_t t = 0; t < wd.size(); ++t) wd[t] -= lr * gd[t];
}

}  // namespace

TrainResult train(const PairDataset& dataset, const MiningReport* report,
                  const TrainConfig& config, const ToyEncoder& init) {
  validate(config);
  if (init.image_proj.rows() != dataset.image_dim() || init.text_proj.rows() != dataset.text_dim() ||
      init.image_proj.cols() != init.text_proj.cols()) {
    throw Error(ErrorCode::size_mismatch, "encoder shape does not match the dataset");
  }
  TrainResult out;
  out.encoder = init;
  std::mt19937_64 rng(config.seed);
  double best_r1 = -1.0;
  std::size_t stale = 0;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    BatchPlan plan = compose_batch(dataset.size(), report, config.composer, rng);
    LossBatch batch;
    batch.image = project(dataset.image, out.encoder.image_proj, plan.composed);
    batch.text = project(dataset.text, out.encoder.text_proj, plan.composed);
    batch.hard = std::move(plan.hard_mask);
    double loss = 0.0;
    LossValueAndGrads grads;
    try {
      grads = finetune_loss(batch, config.loss);
      loss = grads.loss;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::non_finite && e.code() != ErrorCode::zero_norm) throw;
      loss = std::numeric_limits<double>::quiet_NaN();
    }
    out.trace.push_back(loss);
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("loss became non-finite at iteration " + std::to_string(it), out.trace);
    }

    Matrix<double> grad_wi(out.encoder.image_proj.rows(), out.encoder.image_proj.cols());
    Matrix<double> grad_wt(out.encoder.text_proj.rows(), out.encoder.text_proj.cols());
    accumulate_weight_grad(dataset.image, plan.composed, grads.grad_image, grad_wi);
    accumulate_weight_grad(dataset.text, plan.composed, grads.grad_text, grad_wt);
    descend(out.encoder.image_proj, grad_wi, config.learning_rate);
    descend(out.encoder.text_proj, grad_wt, config.learning_rate);

    if (config.early_stop_patience > 0 && (it + 1) % config.eval_every == 0) {
      double r1 = eval_retrieval(out.encoder, dataset, {1}, 1).recall[0];
      if (r1 > best_r1) {
        best_r1 = r1;
        stale = 0;
      } else if (++stale >= config.early_stop_patience) {
        out.early_stopped = true;
        break;
      }
    }
  }
  return out;
}

std::vector<std::size_t> partner_ranks(const Matrix<double>& image, const Matrix<double>& text,
                                       int workers) {
  if (image.rows() != text.rows()) {
    throw Error(ErrorCode::size_mismatch, "image and text row counts differ");
  }
  const std::size_t n = image.rows();
  std::vector<std::size_t> ranks(n);
  const int threads = resolve_workers(workers);
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
  for (std::size_t i = 0; i < n; ++i) {
    const double own = cosine(image.row(i), text.row(i));
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = cosine(image.row(i), text.row(j));
      if (s > own || (s == own && j < i)) ++ahead;
    }
    ranks[i] = ahead + 1;
  }
  return ranks;
}

RecallTable eval_retrieval(const Matrix<double>& image, const Matrix<double>& text,
                           const std::vector<std::size_t>& ks, int workers) {
  if (ks.empty()) throw Error(ErrorCode::invalid_config, "need at least one recall cutoff");
  for (std::size_t k : ks) {
    if (k < 1) throw Error(ErrorCode::invalid_config, "recall cutoffs must be >= 1");
  }
  if (image.rows() == 0) throw Error(ErrorCode::invalid_argument, "cannot evaluate an empty dataset");
  auto ranks = partner_ranks(image, text, workers);
  RecallTable table{ks, {}};
  for (std::size_t k : ks) {
    std::size_t hits = 0;
    for (std::size_t r : ranks) hits += r <= k ? 1 : 0;
    table.recall.push_back(static_cast<double>(hits) / static_cast<double>(ranks.size()));
  }
  return table;
}

RecallTable eval_retrieval(const ToyEncoder& encoder, const PairDataset& dataset,
                           const std::vector<std::size_t>& ks, int workers) {
  return eval_retrieval(encode(dataset.image, encoder.image_proj),
                        encode(dataset.text, encoder.text_proj), ks, workers);
}

void save_encoder(const ToyEncoder& encoder, const fs::path& header_path) {
  fs::path stem = header_path.filename().replace_extension();
  std::string image_file = stem.string() + ".image.f64";
  std::string text_file = stem.string() + ".text.f64";
  fs::path dir = header_path.parent_path();
  write_matrix_f64(encoder.image_proj, dir / image_file);
  write_matrix_f64(encoder.text_proj, dir / text_file);
  nlohmann::json j;
  j["format"] = "hardpair-toy-encoder";
  j["encoding"] = std::string(kFloat64Tag);
  j["image_dim"] = encoder.image_proj.rows();
  j["text_dim"] = encoder.text_proj.rows();
  j["embed_dim"] = encoder.embed_dim();
  j["image_file"] = image_file;
  j["text_file"] = text_file;
  write_file_atomic(header_path, j.dump(2) + "\n");
}

ToyEncoder load_encoder(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + header_path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("encoding").get<std::string>() != kFloat64Tag) {
      throw Error(ErrorCode::format, "encoder checkpoints must be float64-le");
    }
    const auto di = j.at("image_dim").get<std::size_t>();
    const auto dt = j.at("text_dim").get<std::size_t>();
    const auto de = j.at("embed_dim").get<std::size_t>();
    fs::path dir = header_path.parent_path();
    ToyEncoder e;
    e.image_proj = read_matrix_f64(dir / j.at("image_file").get<std::string>(), di, de);
    e.text_proj = read_matrix_f64(dir / j.at("text_file").get<std::string>(), dt, de);
    return e;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format, "malformed encoder header: " + std::string(e.what()));
  }
}

std::string format_trace_csv(const std::vector<double>& trace) {
  std::string out = "iteration,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i) + "," + format_double(trace[i]) + "\n";
  }
  return out;
}

std::string format_recall_csv(const RecallTable& table) {
  std::string out = "k,recall\n";
  for (std::size_t t = 0; t < table.ks.size(); ++t) {
    out += std::to_string(table.ks[t]) + "," + format_double(table.recall[t]) + "\n";
  }
  return out;
}

}  // namespace hardpair
