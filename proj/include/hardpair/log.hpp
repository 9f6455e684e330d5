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

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace hardpair::log {

enum class Level { debug, info, warn, error };

using Field = std::pair<std::string_view, std::string>;

// Writes one line of key=value records to stderr:
//   level=warn event=pool_clamped requested=900 used=255
void write(Level level, std::string_view event, std::initializer_list<Field> fields = {});

void set_min_level(Level level);

}  // namespace hardpair::log
