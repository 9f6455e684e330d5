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

#include "hardpair/embedstore.hpp"
#include "hardpair/miner.hpp"

// Serial reference kernels. They trade speed for the plainest possible
// control flow (full dense rows, full stable sorts) and are kept as the
// comparison baseline for the OpenMP kernels in tests and benchmarks.
namespace hardpair::reference {

MiningReport mine_hpm(const PairDataset& dataset, const MiningConfig& config);
MiningReport mine_fast(const PairDataset& dataset, const MiningConfig& config);
MiningReport mine_single_modality(const PairDataset& dataset, Modality modality,
                                  std::size_t k);

// Ranks of each image row's partner among all text rows (1-based).
std::vector<std::size_t> partner_ranks(const Matrix<double>& image,
                                       const Matrix<double>& text);

}  // namespace hardpair::reference
