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

#include "hardpair/log.hpp"

#include <atomic>
#include <iostream>
#include <sstream>

#include "hardpair/error.hpp"

namespace hardpair {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::size_mismatch: return "size_mismatch";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::zero_norm: return "zero_norm";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::diverged: return "diverged";
  }
  return "unknown";
}

namespace log {
namespace {

std::atomic<int> g_min_level{static_cast<int>(Level::info)};

std::string_view level_name(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "info";
}

bool needs_quotes(std::string_view value) {
  if (value.empty()) return true;
  for (char c : value) {
    if (c == ' ' || c == '"' || c == '=' || c == '\t') return true;
  }
  return false;
}

}  // namespace

void set_min_level(Level level) { g_min_level = static_cast<int>(level); }

void write(Level level, std::string_view event, std::initializer_list<Field> fields) {
  if (static_cast<int>(level) < g_min_level) return;
  std::ostringstream line;
  line << "level=" << level_name(level) << " event=" << event;
  for (const auto& [key, value] : fields) {
    line << ' ' << key << '=';
    if (needs_quotes(value)) {
      line << '"';
      for (char c : value) {
        if (c == '"' || c == '\\') line << '\\';
        line << (c == '\n' ? ' ' : c);
      }
      line << '"';
    } else {
      line << value;
    }
  }
  line << '\n';
  std::cerr << line.str();
}

}  // namespace log
}  // namespace hardpair
