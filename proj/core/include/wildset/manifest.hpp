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

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace wildset {

/// Wall-clock stage timer.
class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

/// Provenance record written next to every pipeline run's outputs: the
/// digests of everything read and written, the digest of the resolved
/// config, and stage timings. Data artifacts are reproducible byte for
/// byte; the manifest carries the run-varying measurements instead.
struct RunManifest {
    std::string tool;
    std::string tool_version;
    std::string config_digest;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
    std::vector<std::pair<std::string, double>> timings;       // stage, sec
    std::vector<std::pair<std::string, std::string>> notes;

    explicit RunManifest(std::string tool_name);

    void set_config(const std::string& resolved_config_text);
    void add_input(const std::filesystem::path& path);   // hashed now
    void add_output(const std::filesystem::path& path);  // hashed now
    void add_timing(const std::string& stage, double seconds);
    void add_note(const std::string& key, const std::string& value);

    void write(const std::filesystem::path& path) const;
};

}  // namespace wildset
