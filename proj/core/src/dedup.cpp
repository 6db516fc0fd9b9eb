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

#include "wildset/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "wildset/common.hpp"
#include "wildset/descriptor.hpp"
#include "wildset/kmeans.hpp"

namespace wildset {

void ExactStore::add(uint64_t id, std::span<const float> vec) {
    if (dim_ == 0) {
        if (vec.empty()) throw InvalidArgument("exact store: empty vector");
        dim_ = static_cast<uint32_t>(vec.size());
    }
    if (vec.size() != dim_) {
        throw InvalidArgument("exact store: vector has dim " +
                              std::to_string(vec.size()) + ", store has " +
                              std::to_string(dim_));
    }
    if (slots_.count(id)) {
        throw InvalidArgument("exact store: duplicate id " + std::to_string(id));
    }
    slots_.emplace(id, ids_.size());
    ids_.push_back(id);
    data_.insert(data_.end(), vec.begin(), vec.end());
}

const float* ExactStore::find(uint64_t id) const {
    auto it = slots_.find(id);
    if (it == slots_.end()) return nullptr;
    return data_.data() + it->second * dim_;
}

std::vector<CandidateSet> stage1(std::span<const uint64_t> query_ids,
                                 const ExactStore& raw_queries,
                                 const IvfIndex& index, uint32_t k,
                                 uint64_t nprobe) {
    if (k == 0) throw InvalidArgument("stage1: k must be positive");
    if (nprobe == 0) throw InvalidArgument("stage1: nprobe must be positive");
    const QuantizerSet& q = index.quantizers();
    if (raw_queries.size() > 0 && raw_queries.dim() != q.raw_dim()) {
        throw InvalidArgument("stage1: query store dim " +
                              std::to_string(raw_queries.dim()) +
                              " does not match quantizer input dim " +
                              std::to_string(q.raw_dim()));
    }

    std::vector<CandidateSet> out(query_ids.size());
    const int64_t n = static_cast<int64_t>(query_ids.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int64_t i = 0; i < n; ++i) {
        CandidateSet& cs = out[i];
        cs.query_id = query_ids[i];
        const float* raw = raw_queries.find(cs.query_id);
        if (raw == nullptr) {
            cs.error = "descriptor missing for query " +
                       std::to_string(cs.query_id);
            continue;
        }
        const std::vector<float> rotated =
            q.raw_to_rotated(std::span<const float>(raw, q.raw_dim()));
        // One extra so the query itself can be dropped if indexed.
        auto hits = index.search(rotated, k + 1, nprobe);
        cs.candidates.reserve(hits.size());
        for (const auto& h : hits) {
            if (h.id == cs.query_id) continue;
            cs.candidates.push_back({h.id, h.distance});
        }
        if (cs.candidates.size() > k) cs.candidates.resize(k);
    }
    return out;
}

namespace {

void normalize_copy(std::span<const float> in, std::vector<float>& out) {
    out.assign(in.begin(), in.end());
    l2_normalize(out);
}

}  // namespace

std::vector<DuplicateVerdict> stage2(std::span<const float> query_exact,
                                     const CandidateSet& candidates,
                                     const ExactStore& exact,
                                     double threshold) {
    if (threshold < 0.0) throw InvalidArgument("stage2: negative threshold");
    if (exact.size() > 0 && query_exact.size() != exact.dim()) {
        throw InvalidArgument("stage2: query dim " +
                              std::to_string(query_exact.size()) +
                              " does not match store dim " +
                              std::to_string(exact.dim()));
    }
    std::vector<float> qn;
    normalize_copy(query_exact, qn);

    std::vector<DuplicateVerdict> out;
    out.reserve(candidates.candidates.size());
    std::vector<float> cn;
    for (const Candidate& c : candidates.candidates) {
        DuplicateVerdict v;
        v.query_id = candidates.query_id;
        v.neighbor_id = c.id;
        const float* feat = exact.find(c.id);
        if (feat == nullptr) {
            v.exact_sq_distance = std::numeric_limits<double>::quiet_NaN();
            v.flagged = false;
            v.error = "exact feature missing for candidate " +
                      std::to_string(c.id);
            out.push_back(std::move(v));
            continue;
        }
        normalize_copy(std::span<const float>(feat, exact.dim()), cn);
        v.exact_sq_distance = squared_l2(qn.data(), cn.data(), qn.size());
        v.flagged = v.exact_sq_distance <= threshold;
        out.push_back(std::move(v));
    }
    return out;
}

std::optional<ReviewManifest> review_manifest(
    uint64_t query_id, std::span<const DuplicateVerdict> verdicts, uint32_t n) {
    if (n == 0) throw InvalidArgument("review manifest: n must be positive");
    std::vector<const DuplicateVerdict*> mine;
    bool any_flagged = false;
    for (const auto& v : verdicts) {
        if (v.query_id != query_id) continue;
        if (!v.error.empty()) continue;  // unreviewable, not rankable
        mine.push_back(&v);
        any_flagged = any_flagged || v.flagged;
    }
    if (!any_flagged) return std::nullopt;

    std::sort(mine.begin(), mine.end(),
              [](const DuplicateVerdict* a, const DuplicateVerdict* b) {
                  if (a->exact_sq_distance != b->exact_sq_distance)
                      return a->exact_sq_distance < b->exact_sq_distance;
                  return a->neighbor_id < b->neighbor_id;
              });

    ReviewManifest m;
    m.query_id = query_id;
    m.short_list = mine.size() < n;
    const size_t take = std::min<size_t>(mine.size(), n);
    m.entries.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        m.entries.push_back({mine[i]->neighbor_id, mine[i]->exact_sq_distance,
                             mine[i]->flagged});
    }
    return m;
}

double lower_bound_accuracy(double measured_acc, uint64_t dup_count,
                            uint64_t test_size) {
    if (test_size == 0) {
        throw InvalidArgument("lower_bound_accuracy: empty test set");
    }
    if (measured_acc < 0.0 || measured_acc > 1.0) {
        throw InvalidArgument("lower_bound_accuracy: accuracy out of [0, 1]");
    }
    if (dup_count > test_size) {
        throw InvalidArgument(
            "lower_bound_accuracy: duplicate count exceeds test size");
    }
    double lb = measured_acc -
                static_cast<double>(dup_count) / static_cast<double>(test_size);
    if (lb < 0.0) {
        log::warn("lower_bound_accuracy: bound clamped to zero (acc %.4f, "
                  "%llu/%llu duplicates)",
                  measured_acc, static_cast<unsigned long long>(dup_count),
                  static_cast<unsigned long long>(test_size));
        lb = 0.0;
    }
    return lb;
}

const char* to_string(HumanLabel label) {
    switch (label) {
        case HumanLabel::kUnreviewed: return "unreviewed";
        case HumanLabel::kDuplicate: return "duplicate";
        case HumanLabel::kDistinct: return "distinct";
    }
    throw InvalidArgument("unknown label value");
}

HumanLabel label_from_string(const std::string& s) {
    if (s == "unreviewed") return HumanLabel::kUnreviewed;
    if (s == "duplicate") return HumanLabel::kDuplicate;
    if (s == "distinct") return HumanLabel::kDistinct;
    throw CorruptData("unknown verdict label: " + s);
}

void write_verdicts(const std::filesystem::path& path,
                    std::span<const DuplicateVerdict> verdicts) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path.string());
    for (const auto& v : verdicts) {
        nlohmann::ordered_json j;
        j["query_id"] = v.query_id;
        j["neighbor_id"] = v.neighbor_id;
        if (std::isnan(v.exact_sq_distance)) {
            j["distance"] = nullptr;
        } else {
            j["distance"] = v.exact_sq_distance;
        }
        j["flagged"] = v.flagged;
        j["label"] = to_string(v.label);
        if (!v.error.empty()) j["error"] = v.error;
        f << j.dump() << '\n';
    }
    if (!f) throw IoError("write failed: " + path.string());
}

std::vector<DuplicateVerdict> read_verdicts(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for read: " + path.string());
    std::vector<DuplicateVerdict> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                              ": " + e.what());
        }
        DuplicateVerdict v;
        try {
            v.query_id = j.at("query_id").get<uint64_t>();
            v.neighbor_id = j.at("neighbor_id").get<uint64_t>();
            if (j.at("distance").is_null()) {
                v.exact_sq_distance = std::numeric_limits<double>::quiet_NaN();
            } else {
                v.exact_sq_distance = j.at("distance").get<double>();
            }
            v.flagged = j.at("flagged").get<bool>();
            v.label = label_from_string(j.at("label").get<std::string>());
            if (j.contains("error")) v.error = j["error"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                              ": " + e.what());
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace wildset
