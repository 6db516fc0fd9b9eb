// Copyright 2026-present the wildset authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace wildset {

inline constexpr const char* kVersion = "0.1.0";

/// Precondition violations: bad dimensions, out-of-range parameters.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operation requested on an object in the wrong lifecycle state
/// (untrained quantizer, unsealed index, ...).
struct InvalidState : std::logic_error {
    using std::logic_error::logic_error;
};

/// Stored data failed validation: out-of-range codes, bad magic, short reads.
struct CorruptData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kSilent = 3 };

void set_level(Level lvl);
Level level();

void warn(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void info(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

}  // namespace log

}  // namespace wildset
