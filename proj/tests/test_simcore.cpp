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

#include <algorithm>
#include <vector>

#include "hardpair/error.hpp"
#include "hardpair/simcore.hpp"
#include "oracle.hpp"

using namespace hardpair;

TEST_CASE("cosine of axis vectors") {
  std::vector<float> e0{1, 0}, e1{0, 1}, neg{-1, 0};
  CHECK(cosine(std::span<const float>(e0), std::span<const float>(e0)) == 1.0);
  CHECK(cosine(std::span<const float>(e0), std::span<const float>(e1)) == 0.0);
  CHECK(cosine(std::span<const float>(e0), std::span<const float>(neg)) == -1.0);
}

TEST_CASE("cosine rejects zero vectors and dim mismatch") {
  std::vector<float> z{0, 0}, e0{1, 0}, three{1, 0, 0};
  CHECK_THROWS_AS(cosine(std::span<const float>(z), std::span<const float>(e0)), Error);
  CHECK_THROWS_AS(cosine(std::span<const float>(three), std::span<const float>(e0)), Error);
}

TEST_CASE("support vector keeps the duplicate and drops the orthogonal row") {
  auto d = oracle::from_rows({{1, 0}, {1, 0}, {0, 1}}, {{1, 0}, {1, 0}, {0, 1}});
  auto sv = support_vector(d, 0, Modality::image, 0.5);
  CHECK(sv.indices == std::vector<std::size_t>{1});
  CHECK(sv.values == std::vector<double>{1.0});
  CHECK(sv.target == 0);
  CHECK(sv.threshold == 0.5);
}

TEST_CASE("threshold 1 with no duplicates is empty; thresholds outside [0,1] are rejected") {
  auto d = oracle::random_dataset(20, 4, 4, 11);
  CHECK(support_vector(d, 3, Modality::text, 1.0).indices.empty());
  CHECK_THROWS_AS(support_vector(d, 3, Modality::text, 1.0 + 1e-9), Error);
  CHECK_THROWS_AS(support_vector(d, 3, Modality::text, -0.1), Error);
  CHECK_THROWS_AS(support_vector(d, 20, Modality::text, 0.5), Error);
}

TEST_CASE("support vector equals the thresholded dense similarity row") {
  auto d = oracle::random_dataset(64, 6, 5, 2024);
  for (Modality m : {Modality::image, Modality::text}) {
    auto dense = oracle::dense_similarity(m == Modality::image ? d.image : d.text);
    for (std::size_t target : {0u, 17u, 63u}) {
      auto sv = support_vector(d, target, m, 0.3);
      std::vector<std::size_t> expect_idx;
      std::vector<double> expect_val;
      for (std::size_t j = 0; j < 64; ++j) {
        if (j != target && dense(target, j) >= 0.3) {
          expect_idx.push_back(j);
          expect_val.push_back(dense(target, j));
        }
      }
      REQUIRE(sv.indices == expect_idx);
      for (std::size_t t = 0; t < expect_val.size(); ++t) {
        CHECK(sv.values[t] == doctest::Approx(expect_val[t]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("support is monotone in tau, excludes the target, and respects the pool") {
  auto d = oracle::random_dataset(80, 3, 3, 77);
  for (std::size_t target = 0; target < 80; target += 7) {
    std::vector<std::size_t> prev;
    bool first = true;
    for (double tau = 0.0; tau <= 1.0; tau += 0.125) {
      auto sv = support_vector(d, target, Modality::image, tau);
      CHECK(std::find(sv.indices.begin(), sv.indices.end(), target) == sv.indices.end());
      CHECK(std::all_of(sv.values.begin(), sv.values.end(), [&](double v) { return v >= tau; }));
      if (!first) CHECK(std::includes(prev.begin(), prev.end(), sv.indices.begin(), sv.indices.end()));
      prev = sv.indices;
      first = false;
    }
  }
  std::vector<std::size_t> pool{5, 2, 9, 2, 0};
  auto sv = support_vector(d, 2, Modality::text, 0.0, std::span<const std::size_t>(pool));
  for (std::size_t j : sv.indices) CHECK((j == 5 || j == 9 || j == 0));
}

TEST_CASE("cached-norm cosine matches the full formula on unnormalized rows") {
  auto d = oracle::random_dataset(30, 9, 9, 5, false);
  CosineIndex index(d.image);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 30; ++j) {
      CHECK(index.similarity(i, j) == doctest::Approx(oracle::naive_cosine(d.image.row(i), d.image.row(j))).epsilon(1e-12));
    }
  }
}
