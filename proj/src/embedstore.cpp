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

#include "hardpair/embedstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hardpair/error.hpp"

namespace hardpair {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian; add byte swapping for this target");

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

template <typename T>
void write_raw(const Matrix<T>& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  auto data = m.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
  if (!out) throw Error(ErrorCode::io, "short write to " + path.string());
}

template <typename T>
Matrix<T> read_raw(const fs::path& path, std::size_t rows, std::size_t cols) {
  std::error_code ec;
  auto bytes = fs::file_size(path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot stat " + path.string());
  std::uintmax_t expected = static_cast<std::uintmax_t>(rows) * cols * sizeof(T);
  if (bytes != expected) {
    throw Error(ErrorCode::size_mismatch,
                path.filename().string() + " holds " + std::to_string(bytes) +
                    " bytes, expected " + std::to_string(expected) + " (" +
                    std::to_string(rows) + "x" + std::to_string(cols) + "x" +
                    std::to_string(sizeof(T)) + ")");
  }
  Matrix<T> m(rows, cols);
  if (expected == 0) return m;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  auto data = m.data();
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected));
  if (!in) throw Error(ErrorCode::io, "short read from " + path.string());
  return m;
}

void check_finite(const Matrix<float>& m, std::string_view what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (float v : m.row(r)) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::non_finite,
                    std::string(what) + " row " + std::to_string(r) + " has a non-finite entry");
      }
    }
  }
}

double row_norm(std::span<const float> row) {
  double acc = 0.0;
  for (float v : row) acc += static_cast<double>(v) * v;
  return std::sqrt(acc);
}

void check_unit(const Matrix<float>& m, std::string_view what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double n = row_norm(m.row(r));
    if (std::abs(n - 1.0) > kUnitNormTolerance) {
      throw Error(n == 0.0 ? ErrorCode::zero_norm : ErrorCode::format,
                  std::string(what) + " row " + std::to_string(r) +
                      " is flagged normalized but has norm " + std::to_string(n));
    }
  }
}

void normalize_rows(Matrix<float>& m, std::string_view what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double n = row_norm(row);
    if (n == 0.0) {
      throw Error(ErrorCode::zero_norm,
                  std::string(what) + " row " + std::to_string(r) + " has zero norm");
    }
    for (float& v : row) v = static_cast<float>(static_cast<double>(v) / n);
  }
}

template <typename Rows>
void normalize_in_place(Rows& row) {
  double acc = 0.0;
  for (double v : row) acc += v * v;
  double n = std::sqrt(acc);
  for (double& v : row) v /= n;
}

}  // namespace

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

Manifest read_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, "malformed manifest " + path.string() + ": " + e.what());
  }
  Manifest m;
  try {
    m.num_pairs = j.at("num_pairs").get<std::size_t>();
    m.image_dim = j.at("image_dim").get<std::size_t>();
    m.text_dim = j.at("text_dim").get<std::size_t>();
    m.encoding = j.value("encoding", std::string(kFloat32Tag));
    m.image_file = j.at("image_file").get<std::string>();
    m.text_file = j.at("text_file").get<std::string>();
    if (j.contains("ids_file") && !j["ids_file"].is_null()) {
      m.ids_file = j["ids_file"].get<std::string>();
    }
    m.normalized = j.value("normalized", false);
    if (j.contains("provenance") && !j["provenance"].is_null()) {
      m.provenance = j["provenance"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, "malformed manifest " + path.string() + ": " + e.what());
  }
  if (m.encoding != kFloat32Tag) {
    throw Error(ErrorCode::format, "unsupported element encoding '" + m.encoding + "'");
  }
  return m;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  json j;
  j["num_pairs"] = m.num_pairs;
  j["image_dim"] = m.image_dim;
  j["text_dim"] = m.text_dim;
  j["encoding"] = m.encoding;
  j["image_file"] = m.image_file;
  j["text_file"] = m.text_file;
  if (m.ids_file) j["ids_file"] = *m.ids_file;
  j["normalized"] = m.normalized;
  if (m.provenance) j["provenance"] = *m.provenance;
  write_file_atomic(path, j.dump(2) + "\n");
}

void validate(const PairDataset& d) {
  if (d.text.rows() != d.image.rows()) {
    throw Error(ErrorCode::size_mismatch, "image has " + std::to_string(d.image.rows()) +
                                              " rows, text has " + std::to_string(d.text.rows()));
  }
  if (d.ids.size() != d.size()) {
    throw Error(ErrorCode::size_mismatch, "expected " + std::to_string(d.size()) + " ids, got " +
                                              std::to_string(d.ids.size()));
  }
  check_finite(d.image, "image");
  check_finite(d.text, "text");
  std::unordered_set<std::string_view> seen;
  for (const auto& id : d.ids) {
    if (!seen.insert(id).second) throw Error(ErrorCode::duplicate_id, "duplicate id '" + id + "'");
  }
  if (d.normalized) {
    check_unit(d.image, "image");
    check_unit(d.text, "text");
  }
}

PairDataset load_dataset(const fs::path& manifest_path, const LoadOptions& options) {
  Manifest m = read_manifest(manifest_path);
  fs::path base = manifest_path.parent_path();
  PairDataset d;
  d.image = read_raw<float>(base / m.image_file, m.num_pairs, m.image_dim);
  d.text = read_raw<float>(base / m.text_file, m.num_pairs, m.text_dim);
  if (m.ids_file) {
    try {
      d.ids = json::parse(read_file(base / *m.ids_file)).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::format, "malformed ids file: " + std::string(e.what()));
    }
  } else {
    d.ids = default_ids(m.num_pairs);
  }
  d.normalized = m.normalized;
  d.provenance = m.provenance.value_or("");
  validate(d);
  if (options.normalize && !d.normalized) d = normalize(std::move(d));
  return d;
}

Manifest save_dataset(const PairDataset& d, const fs::path& dir) {
  validate(d);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
  Manifest m;
  m.num_pairs = d.size();
  m.image_dim = d.image_dim();
  m.text_dim = d.text_dim();
  m.normalized = d.normalized;
  if (!d.provenance.empty()) m.provenance = d.provenance;
  write_raw(d.image, dir / m.image_file);
  write_raw(d.text, dir / m.text_file);
  if (d.ids != default_ids(d.size())) {
    m.ids_file = "ids.json";
    write_file_atomic(dir / *m.ids_file, json(d.ids).dump() + "\n");
  }
  write_manifest(m, dir / "manifest.json");
  return m;
}

PairDataset normalize(PairDataset d) {
  normalize_rows(d.image, "image");
  normalize_rows(d.text, "text");
  d.normalized = true;
  return d;
}

void write_matrix_f32(const Matrix<float>& m, const fs::path& path) { write_raw(m, path); }
void write_matrix_f64(const Matrix<double>& m, const fs::path& path) { write_raw(m, path); }
Matrix<float> read_matrix_f32(const fs::path& path, std::size_t rows, std::size_t cols) {
  return read_raw<float>(path, rows, cols);
}
Matrix<double> read_matrix_f64(const fs::path& path, std::size_t rows, std::size_t cols) {
  return read_raw<double>(path, rows, cols);
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot rename onto " + path.string() + ": " + ec.message());
}

std::size_t SynthTruth::mismatch_count() const {
  return static_cast<std::size_t>(std::count(mismatch.begin(), mismatch.end(), true));
}

namespace {

Matrix<double> make_centers(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix<double> c(count, dim);
  for (double& v : c.data()) v = normal(rng);
  bool orthogonal = count <= dim;
  for (std::size_t r = 0; r < count; ++r) {
    auto row = c.row(r);
    if (orthogonal) {
      // Modified Gram-Schmidt against earlier centers.
      for (std::size_t q = 0; q < r; ++q) {
        auto prev = c.row(q);
        double dot = 0.0;
        for (std::size_t t = 0; t < dim; ++t) dot += row[t] * prev[t];
        for (std::size_t t = 0; t < dim; ++t) row[t] -= dot * prev[t];
      }
    }
    normalize_in_place(row);
  }
  return c;
}

}  // namespace

SynthResult synth_clusters(const SynthConfig& cfg) {
  if (cfg.num_clusters < 1 || cfg.per_cluster < 1) {
    throw Error(ErrorCode::invalid_config, "num_clusters and per_cluster must be >= 1");
  }
  if (cfg.image_dim < 2 || cfg.text_dim < 2) {
    throw Error(ErrorCode::invalid_config, "image_dim and text_dim must be >= 2");
  }
  if (!(cfg.mismatch_fraction >= 0.0 && cfg.mismatch_fraction <= 1.0)) {
    throw Error(ErrorCode::invalid_config, "mismatch_fraction must lie in [0, 1]");
  }
  if (!(cfg.noise_scale >= 0.0) || !std::isfinite(cfg.noise_scale)) {
    throw Error(ErrorCode::invalid_config, "noise_scale must be finite and >= 0");
  }
  const std::size_t n = cfg.num_clusters * cfg.per_cluster;
  const auto mismatches = static_cast<std::size_t>(std::llround(cfg.mismatch_fraction * n));
  if (mismatches > 0 && cfg.num_clusters < 2) {
    throw Error(ErrorCode::invalid_config, "mismatches need at least two clusters");
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  Matrix<double> image_centers = make_centers(cfg.num_clusters, cfg.image_dim, rng);
  Matrix<double> text_centers = make_centers(cfg.num_clusters, cfg.text_dim, rng);
  Matrix<double> text_map(cfg.text_dim, cfg.image_dim);
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(cfg.image_dim));
  for (double& v : text_map.data()) v = normal(rng) * map_scale;

  std::vector<double> shared(cfg.image_dim);
  std::vector<double> img(cfg.image_dim);
  std::vector<double> txt(cfg.text_dim);

  auto draw_member = [&](std::size_t image_cluster, std::size_t text_cluster,
                         std::span<float> img_out, std::span<float> txt_out) {
    for (double& v : shared) v = normal(rng);
    auto ic = image_centers.row(image_cluster);
    auto tc = text_centers.row(text_cluster);
    for (std::size_t t = 0; t < cfg.image_dim; ++t) img[t] = ic[t] + cfg.noise_scale * shared[t];
    for (std::size_t t = 0; t < cfg.text_dim; ++t) {
      double mapped = 0.0;
      auto mrow = text_map.row(t);
      for (std::size_t u = 0; u < cfg.image_dim; ++u) mapped += mrow[u] * shared[u];
      txt[t] = tc[t] + cfg.noise_scale * mapped;
    }
    if (cfg.noise_scale > 0.0) {
      normalize_in_place(img);
      normalize_in_place(txt);
    }
    if (!img_out.empty()) {
      for (std::size_t t = 0; t < cfg.image_dim; ++t) img_out[t] = static_cast<float>(img[t]);
    }
    for (std::size_t t = 0; t < cfg.text_dim; ++t) txt_out[t] = static_cast<float>(txt[t]);
  };

  SynthResult out;
  PairDataset& d = out.dataset;
  d.image = Matrix<float>(n, cfg.image_dim);
  d.text = Matrix<float>(n, cfg.text_dim);
  d.ids = default_ids(n);
  d.normalized = true;
  out.truth.image_label.resize(n);
  out.truth.text_label.resize(n);
  out.truth.mismatch.assign(n, false);

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = i / cfg.per_cluster;
    out.truth.image_label[i] = c;
    out.truth.text_label[i] = c;
    draw_member(c, c, d.image.row(i), d.text.row(i));
  }

  // Partial Fisher-Yates picks the mismatched rows.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t t = 0; t < mismatches; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, n - 1);
    std::swap(order[t], order[pick(rng)]);
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(mismatches));
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i : chosen) {
    std::size_t own = out.truth.image_label[i];
    std::uniform_int_distribution<std::size_t> other(0, cfg.num_clusters - 2);
    std::size_t c = other(rng);
    if (c >= own) ++c;
    out.truth.text_label[i] = c;
    out.truth.mismatch[i] = true;
    draw_member(own, c, {}, d.text.row(i));
  }

  std::ostringstream prov;
  prov << "synth_clusters clusters=" << cfg.num_clusters << " per_cluster=" << cfg.per_cluster
       << " image_dim=" << cfg.image_dim << " text_dim=" << cfg.text_dim
       << " noise_scale=" << cfg.noise_scale << " mismatch_fraction=" << cfg.mismatch_fraction
       << " seed=" << cfg.seed;
  d.provenance = prov.str();
  return out;
}

void save_truth(const SynthTruth& truth, const fs::path& path) {
  json j;
  j["image_label"] = truth.image_label;
  j["text_label"] = truth.text_label;
  j["mismatch"] = truth.mismatch;
  j["mismatch_count"] = truth.mismatch_count();
  write_file_atomic(path, j.dump() + "\n");
}

SynthTruth load_truth(const fs::path& path) {
  try {
    json j = json::parse(read_file(path));
    SynthTruth t;
    t.image_label = j.at("image_label").get<std::vector<std::size_t>>();
    t.text_label = j.at("text_label").get<std::vector<std::size_t>>();
    t.mismatch = j.at("mismatch").get<std::vector<bool>>();
    if (t.image_label.size() != t.mismatch.size() || t.text_label.size() != t.mismatch.size()) {
      throw Error(ErrorCode::format, "truth arrays differ in length");
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, "malformed truth file " + path.string() + ": " + e.what());
  }
}

}  // namespace hardpair
