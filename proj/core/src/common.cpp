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

#include "wildset/common.hpp"

#include <cstdarg>
#include <cstdio>

namespace wildset::log {

namespace {
Level g_level = Level::kWarn;

void vlog(const char* tag, const char* fmt, va_list args) {
    std::fprintf(stderr, "[wildset] %s: ", tag);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}
}  // namespace

void set_level(Level lvl) {
    g_level = lvl;
}

Level level() {
    return g_level;
}

void warn(const char* fmt, ...) {
    if (g_level > Level::kWarn) return;
    va_list args;
    va_start(args, fmt);
    vlog("warn", fmt, args);
    va_end(args);
}

void info(const char* fmt, ...) {
    if (g_level > Level::kInfo) return;
    va_list args;
    va_start(args, fmt);
    vlog("info", fmt, args);
    va_end(args);
}

}  // namespace wildset::log
