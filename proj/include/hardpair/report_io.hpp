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

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hardpair/miner.hpp"

namespace hardpair {

// One JSON object per target:
//   {"target":3,"noise":false,"hard":[[17,0.81234],[2,0.5]]}
// Scores use the shortest decimal that round-trips the double.
std::string format_report_line(const HardPairResult& result);
std::string format_report(const MiningReport& report);
void write_report(const MiningReport& report, const std::filesystem::path& path);

std::string format_summary(const MiningReport& report);
void write_summary(const MiningReport& report, const std::filesystem::path& path);

// Reads the JSON-lines stream back. Targets must be 0..n-1 in order.
MiningReport read_report(const std::filesystem::path& path);
MiningReport parse_report(std::istream& in);

std::string format_double(double value);

}  // namespace hardpair
