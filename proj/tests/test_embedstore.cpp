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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <filesystem>
#include <fstream>
#include <limits>

#include "hardpair/embedstore.hpp"
#include "hardpair/error.hpp"
#include "oracle.hpp"
#include "temp_dir.hpp"

using namespace hardpair;
namespace fs = std::filesystem;

namespace {

PairDataset three_pairs() {
  return oracle::from_rows({{1, 0}, {1, 0}, {0, 1}}, {{1, 0}, {1, 0}, {0, 1}});
}

void write_bytes(const fs::path& p, std::size_t n) {
  std::ofstream out(p, std::ios::binary);
  std::string zeros(n, '\0');
  out.write(zeros.data(), static_cast<std::streamsize>(n));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("save writes 24-byte matrices for a 3x2 f32 dataset and load recovers them") {
  TempDir dir;
  auto m = save_dataset(three_pairs(), dir.path());
  CHECK(m.num_pairs == 3);
  CHECK(fs::file_size(dir.path() / m.image_file) == 24);
  CHECK(fs::file_size(dir.path() / m.text_file) == 24);
  CHECK_FALSE(m.ids_file.has_value());

  auto back = load_dataset(dir.path() / "manifest.json");
  CHECK(back.size() == 3);
  CHECK(back.image == three_pairs().image);
  CHECK(back.text == three_pairs().text);
  CHECK(back.ids == default_ids(3));
}

TEST_CASE("round trip is bit exact for arbitrary floats and external ids") {
  TempDir dir;
  auto d = oracle::random_dataset(17, 5, 7, 42, false);
  d.ids.clear();
  for (int i = 0; i < 17; ++i) d.ids.push_back("img-" + std::to_string(i * 3));
  d.provenance = "exporter test";
  save_dataset(d, dir.path());
  auto back = load_dataset(dir.path() / "manifest.json");
  CHECK(std::memcmp(back.image.data().data(), d.image.data().data(), d.image.size() * 4) == 0);
  CHECK(std::memcmp(back.text.data().data(), d.text.data().data(), d.text.size() * 4) == 0);
  CHECK(back.ids == d.ids);
  CHECK(back.provenance == "exporter test");
}

TEST_CASE("declared size must match the file length") {
  TempDir dir;
  Manifest m;
  m.num_pairs = 4;
  m.image_dim = 2;
  m.text_dim = 2;
  write_manifest(m, dir.path() / "manifest.json");
  write_bytes(dir.path() / "image.f32", 24);  // 4*2*4 = 32 expected
  write_bytes(dir.path() / "text.f32", 32);
  CHECK(code_of([&] { load_dataset(dir.path() / "manifest.json"); }) == ErrorCode::size_mismatch);
}

TEST_CASE("empty dataset persists as a valid manifest with empty matrices") {
  TempDir dir;
  PairDataset d;
  d.image = Matrix<float>(0, 3);
  d.text = Matrix<float>(0, 4);
  auto m = save_dataset(d, dir.path());
  CHECK(fs::file_size(dir.path() / m.image_file) == 0);
  auto back = load_dataset(dir.path() / "manifest.json");
  CHECK(back.size() == 0);
  CHECK(back.image_dim() == 3);
  CHECK(back.text_dim() == 4);
}

TEST_CASE("load rejects malformed manifests, duplicate ids and non-finite entries") {
  TempDir dir;
  {
    std::ofstream(dir.path() / "bad.json") << "{\"num_pairs\": 3";
    CHECK(code_of([&] { load_dataset(dir.path() / "bad.json"); }) == ErrorCode::format);
  }
  {
    auto d = three_pairs();
    d.ids = {"a", "b", "a"};
    CHECK(code_of([&] { save_dataset(d, dir.path() / "dup"); }) == ErrorCode::duplicate_id);
  }
  {
    auto d = three_pairs();
    d.image(1, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK(code_of([&] { save_dataset(d, dir.path() / "nan"); }) == ErrorCode::non_finite);
    CHECK_FALSE(fs::exists(dir.path() / "nan" / "image.f32"));
  }
  {
    // A NaN written behind the library's back is caught at load.
    save_dataset(three_pairs(), dir.path() / "patched");
    std::fstream f(dir.path() / "patched" / "text.f32", std::ios::in | std::ios::out | std::ios::binary);
    float nan = std::numeric_limits<float>::infinity();
    f.seekp(8);
    f.write(reinterpret_cast<const char*>(&nan), 4);
    f.close();
    CHECK(code_of([&] { load_dataset(dir.path() / "patched" / "manifest.json"); }) ==
          ErrorCode::non_finite);
  }
}

TEST_CASE("normalize maps (3,4) to (0.6,0.8) and is idempotent") {
  auto d = oracle::from_rows({{3, 4}, {0.6f, 0.8f}}, {{1, 0}, {0, 2}});
  auto n = normalize(d);
  CHECK(n.normalized);
  CHECK(n.image(0, 0) == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(n.image(0, 1) == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(n.text(1, 1) == 1.0f);

  auto r = oracle::random_dataset(50, 8, 8, 3, true);
  auto twice = normalize(r);
  for (std::size_t t = 0; t < r.image.size(); ++t) {
    CHECK(std::abs(twice.image.data()[t] - r.image.data()[t]) <= 1e-7);
  }
}

TEST_CASE("normalize reports the zero row index") {
  auto d = oracle::from_rows({{1, 0}, {0, 0}}, {{1, 0}, {0, 1}});
  try {
    normalize(d);
    FAIL("expected zero-norm error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::zero_norm);
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("loading with normalized=true validates unit norms") {
  TempDir dir;
  auto d = oracle::from_rows({{3, 4}}, {{1, 0}});
  save_dataset(d, dir.path());
  auto m = read_manifest(dir.path() / "manifest.json");
  m.normalized = true;
  write_manifest(m, dir.path() / "manifest.json");
  CHECK(code_of([&] { load_dataset(dir.path() / "manifest.json"); }) == ErrorCode::format);

  m.normalized = false;
  write_manifest(m, dir.path() / "manifest.json");
  auto back = load_dataset(dir.path() / "manifest.json", {.normalize = true});
  CHECK(back.normalized);
  CHECK(back.image(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("synth_clusters with zero noise puts every row on its cluster center") {
  SynthConfig c{.num_clusters = 4, .per_cluster = 5, .image_dim = 6, .text_dim = 3,
                .noise_scale = 0.0, .mismatch_fraction = 0.0, .seed = 9};
  auto s = synth_clusters(c);
  REQUIRE(s.dataset.size() == 20);
  CHECK(s.truth.mismatch_count() == 0);
  for (std::size_t i = 0; i < 20; ++i) {
    std::size_t first = (i / 5) * 5;
    CHECK(std::equal(s.dataset.image.row(i).begin(), s.dataset.image.row(i).end(),
                     s.dataset.image.row(first).begin()));
    CHECK(std::equal(s.dataset.text.row(i).begin(), s.dataset.text.row(i).end(),
                     s.dataset.text.row(first).begin()));
    CHECK(s.truth.image_label[i] == i / 5);
  }
  // Orthonormal centers when clusters <= dim.
  CHECK(std::abs(oracle::naive_cosine(s.dataset.image.row(0), s.dataset.image.row(5))) < 1e-6);
  validate(s.dataset);
}

TEST_CASE("synth_clusters is bit deterministic and plants the exact mismatch count") {
  SynthConfig c{.num_clusters = 10, .per_cluster = 100, .image_dim = 8, .text_dim = 8,
                .noise_scale = 0.2, .mismatch_fraction = 0.1, .seed = 5};
  auto a = synth_clusters(c);
  auto b = synth_clusters(c);
  CHECK(a.dataset.image == b.dataset.image);
  CHECK(a.dataset.text == b.dataset.text);
  CHECK(a.truth.mismatch == b.truth.mismatch);
  CHECK(a.truth.mismatch_count() == 100);
  for (std::size_t i = 0; i < 1000; ++i) {
    CHECK((a.truth.image_label[i] != a.truth.text_label[i]) == a.truth.mismatch[i]);
  }
  c.seed = 6;
  CHECK_FALSE(synth_clusters(c).dataset.image == a.dataset.image);
}

TEST_CASE("synth_clusters validates its inputs and the truth sidecar round trips") {
  CHECK(code_of([] { synth_clusters({.mismatch_fraction = 1.5}); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { synth_clusters({.image_dim = 1}); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { synth_clusters({.num_clusters = 1, .mismatch_fraction = 0.5}); }) ==
        ErrorCode::invalid_config);
  TempDir dir;
  auto s = synth_clusters({.num_clusters = 3, .per_cluster = 4, .mismatch_fraction = 0.25, .seed = 1});
  save_truth(s.truth, dir.path() / "truth.json");
  auto t = load_truth(dir.path() / "truth.json");
  CHECK(t.mismatch == s.truth.mismatch);
  CHECK(t.text_label == s.truth.text_label);
  CHECK(t.mismatch_count() == 3);
}
