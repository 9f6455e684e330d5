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

#include "hardpair/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hardpair/embedstore.hpp"
#include "hardpair/error.hpp"

namespace hardpair {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error(ErrorCode::format, "cannot format double");
  return std::string(buf, end);
}

std::string format_report_line(const HardPairResult& r) {
  std::string line = "{\"target\":" + std::to_string(r.target) +
                     ",\"noise\":" + (r.noise ? "true" : "false") + ",\"hard\":[";
  for (std::size_t t = 0; t < r.ranked.size(); ++t) {
    if (t) line += ',';
    line += '[';
    line += std::to_string(r.ranked[t].index);
    line += ',';
    line += format_double(r.ranked[t].score);
    line += ']';
  }
  line += "]}";
  return line;
}

std::string format_report(const MiningReport& report) {
  std::string out;
  for (const auto& r : report.results) {
    out += format_report_line(r);
    out += '\n';
  }
  return out;
}

void write_report(const MiningReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, format_report(report));
}

std::string format_summary(const MiningReport& report) {
  const auto& c = report.config;
  const auto& s = report.summary;
  json j;
  j["method"] = std::string(to_string(report.method));
  j["k"] = c.k;
  j["tau_image"] = c.tau_image;
  j["tau_text"] = c.tau_text;
  j["pool_size"] = c.pool_size ? json(*c.pool_size) : json(nullptr);
  j["pool_size_used"] = s.pool_size_used;
  j["seed"] = c.seed;
  j["targets"] = s.targets;
  j["noise_count"] = s.noise_count;
  j["noise_fraction"] = s.noise_fraction;
  j["wall_seconds"] = s.wall_seconds;
  return j.dump(2) + "\n";
}

void write_summary(const MiningReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, format_summary(report));
}

MiningReport parse_report(std::istream& in) {
  MiningReport report;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_k = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      HardPairResult r;
      r.target = j.at("target").get<std::size_t>();
      r.noise = j.at("noise").get<bool>();
      for (const auto& h : j.at("hard")) {
        r.ranked.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>()});
      }
      if (r.target != report.results.size()) {
        throw Error(ErrorCode::format, "line " + std::to_string(lineno) + ": expected target " +
                                           std::to_string(report.results.size()));
      }
      max_k = std::max(max_k, r.ranked.size());
      report.results.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::format, "report line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  report.config.k = max_k;
  auto& s = report.summary;
  s.targets = report.results.size();
  for (const auto& r : report.results) s.noise_count += r.noise ? 1 : 0;
  s.noise_fraction = s.targets ? static_cast<double>(s.noise_count) / s.targets : 0.0;
  return report;
}

MiningReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return parse_report(in);
}

}  // namespace hardpair
