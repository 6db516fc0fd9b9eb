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

#include "wildset/manifest.hpp"

#include <fstream>

#include "json.hpp"

#include "wildset/common.hpp"
#include "wildset/digest.hpp"

namespace wildset {

RunManifest::RunManifest(std::string tool_name)
    : tool(std::move(tool_name)), tool_version(kVersion) {}

void RunManifest::set_config(const std::string& resolved_config_text) {
    config_digest = sha256_hex(resolved_config_text);
}

void RunManifest::add_input(const std::filesystem::path& path) {
    inputs.emplace_back(path.string(), sha256_file(path.string()));
}

void RunManifest::add_output(const std::filesystem::path& path) {
    outputs.emplace_back(path.string(), sha256_file(path.string()));
}

void RunManifest::add_timing(const std::string& stage, double seconds) {
    timings.emplace_back(stage, seconds);
}

void RunManifest::add_note(const std::string& key, const std::string& value) {
    notes.emplace_back(key, value);
}

void RunManifest::write(const std::filesystem::path& path) const {
    nlohmann::ordered_json j;
    j["tool"] = tool;
    j["version"] = tool_version;
    j["config_digest"] = config_digest;
    auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& [p, digest] : v) {
            arr.push_back({{"path", p}, {"sha256", digest}});
        }
        return arr;
    };
    j["inputs"] = files(inputs);
    j["outputs"] = files(outputs);
    nlohmann::ordered_json t = nlohmann::ordered_json::array();
    for (const auto& [stage, sec] : timings) {
        t.push_back({{"stage", stage}, {"seconds", sec}});
    }
    j["timings"] = t;
    nlohmann::ordered_json n = nlohmann::ordered_json::object();
    for (const auto& [k, v] : notes) n[k] = v;
    j["notes"] = n;

    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path.string());
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace wildset
