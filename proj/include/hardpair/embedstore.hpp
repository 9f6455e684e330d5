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
#include <optional>
#include <string>
#include <vector>

#include "hardpair/matrix.hpp"

namespace hardpair {

// N aligned image/text embedding rows. Storage is f32 (the on-disk element
// type); similarity and loss code widens to double.
struct PairDataset {
  Matrix<float> image;
  Matrix<float> text;
  std::vector<std::string> ids;
  bool normalized = false;
  std::string provenance;

  std::size_t size() const noexcept { return image.rows(); }
  std::size_t image_dim() const noexcept { return image.cols(); }
  std::size_t text_dim() const noexcept { return text.cols(); }
};

inline constexpr std::string_view kFloat32Tag = "float32-le";
inline constexpr std::string_view kFloat64Tag = "float64-le";
inline constexpr double kUnitNormTolerance = 1e-6;

struct Manifest {
  std::size_t num_pairs = 0;
  std::size_t image_dim = 0;
  std::size_t text_dim = 0;
  std::string encoding{kFloat32Tag};
  std::string image_file = "image.f32";
  std::string text_file = "text.f32";
  std::optional<std::string> ids_file;
  bool normalized = false;
  std::optional<std::string> provenance;
};

struct LoadOptions {
  // Unit-normalize rows after loading (zero rows then fail).
  bool normalize = false;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Row ids default to the decimal row index.
std::vector<std::string> default_ids(std::size_t n);

// Throws Error on any invariant violation: row count mismatch, non-finite
// entries, duplicate ids, or non-unit rows when `normalized` is set.
void validate(const PairDataset& dataset);

PairDataset load_dataset(const std::filesystem::path& manifest_path,
                         const LoadOptions& options = {});

// Writes manifest.json, image.f32, text.f32 (and ids.json when the ids are
// not the defaults) into `dir`, creating it if necessary.
Manifest save_dataset(const PairDataset& dataset, const std::filesystem::path& dir);

PairDataset normalize(PairDataset dataset);

// Raw little-endian row-major matrix files.
void write_matrix_f32(const Matrix<float>& m, const std::filesystem::path& path);
void write_matrix_f64(const Matrix<double>& m, const std::filesystem::path& path);
Matrix<float> read_matrix_f32(const std::filesystem::path& path, std::size_t rows,
                              std::size_t cols);
Matrix<double> read_matrix_f64(const std::filesystem::path& path, std::size_t rows,
                               std::size_t cols);

// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

struct SynthConfig {
  std::size_t num_clusters = 8;
  std::size_t per_cluster = 32;
  std::size_t image_dim = 16;
  std::size_t text_dim = 16;
  double noise_scale = 0.1;
  double mismatch_fraction = 0.0;
  std::uint64_t seed = 0;
};

// Ground truth for a synthetic dataset. `image_label[i]` is the cluster the
// image row was drawn from; `text_label[i]` differs from it exactly when
// `mismatch[i]` is set.
struct SynthTruth {
  std::vector<std::size_t> image_label;
  std::vector<std::size_t> text_label;
  std::vector<bool> mismatch;

  std::size_t mismatch_count() const;
};

struct SynthResult {
  PairDataset dataset;
  SynthTruth truth;
};

// Clustered pairs. Each cluster has one image center and one text center.
// A pair's image and text perturbations share one Gaussian draw (pushed
// through a fixed random map on the text side), so partners stay paired
// inside a cluster. When num_clusters <= dim the centers are orthonormalized.
// round(mismatch_fraction * N) pairs get their text replaced by a member of a
// different, uniformly chosen cluster.
SynthResult synth_clusters(const SynthConfig& config);

void save_truth(const SynthTruth& truth, const std::filesystem::path& path);
SynthTruth load_truth(const std::filesystem::path& path);

}  // namespace hardpair
