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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wildset/ivf.hpp"

namespace wildset {

/// Uncompressed descriptors addressable by image id, for the exact stage.
class ExactStore {
  public:
    ExactStore() = default;
    explicit ExactStore(uint32_t dim) : dim_(dim) {}

    void add(uint64_t id, std::span<const float> vec);
    /// nullptr when the id is unknown.
    const float* find(uint64_t id) const;

    uint32_t dim() const { return dim_; }
    size_t size() const { return ids_.size(); }
    std::span<const uint64_t> ids() const { return ids_; }

  private:
    uint32_t dim_ = 0;
    std::vector<uint64_t> ids_;
    std::vector<float> data_;
    std::unordered_map<uint64_t, size_t> slots_;
};

struct Candidate {
    uint64_t id = 0;
    double distance = 0.0;  // approximate (ADC)
};

/// Stage-1 output for one query: nearest candidates by approximate
/// distance, the query itself filtered out. A non-empty error means the
/// query could not be processed (the batch continues without it).
struct CandidateSet {
    uint64_t query_id = 0;
    std::vector<Candidate> candidates;  // ascending (distance, id)
    std::string error;
};

enum class HumanLabel : uint8_t { kUnreviewed = 0, kDuplicate = 1, kDistinct = 2 };

struct DuplicateVerdict {
    uint64_t query_id = 0;
    uint64_t neighbor_id = 0;
    double exact_sq_distance = 0.0;  // NaN when unreviewable
    bool flagged = false;            // exact_sq_distance <= threshold
    HumanLabel label = HumanLabel::kUnreviewed;
    std::string error;  // non-empty when the exact feature was missing
};

/// Approximate candidate generation: each query descriptor is whitened,
/// normalized, rotated, and searched against the index. Missing query
/// descriptors produce error records instead of failing the batch.
/// Queries are processed independently; output order follows input order.
std::vector<CandidateSet> stage1(std::span<const uint64_t> query_ids,
                                 const ExactStore& raw_queries,
                                 const IvfIndex& index, uint32_t k = 128,
                                 uint64_t nprobe = 256);

/// Exact re-rank: squared Euclidean distance between the L2-normalized
/// uncompressed descriptors; flagged at distance <= threshold (0.6 on the
/// unit sphere is cosine >= 0.7).
std::vector<DuplicateVerdict> stage2(std::span<const float> query_exact,
                                     const CandidateSet& candidates,
                                     const ExactStore& exact,
                                     double threshold = 0.6);

struct ReviewEntry {
    uint64_t neighbor_id = 0;
    double distance = 0.0;
    bool flagged = false;
};

struct ReviewManifest {
    uint64_t query_id = 0;
    std::vector<ReviewEntry> entries;  // ascending by (distance, id)
    bool short_list = false;           // fewer candidates than requested
};

/// Annotation worklist: the query's n nearest verdicts by exact distance.
/// Queries without a single flagged verdict get no manifest.
std::optional<ReviewManifest> review_manifest(
    uint64_t query_id, std::span<const DuplicateVerdict> verdicts, uint32_t n = 21);

/// Accuracy after treating every test image with a training-set duplicate
/// as misclassified: max(0, measured - dup_count/test_size).
double lower_bound_accuracy(double measured_acc, uint64_t dup_count,
                            uint64_t test_size);

// Line-delimited verdict records (one JSON object per line).
void write_verdicts(const std::filesystem::path& path,
                    std::span<const DuplicateVerdict> verdicts);
std::vector<DuplicateVerdict> read_verdicts(const std::filesystem::path& path);

const char* to_string(HumanLabel label);
HumanLabel label_from_string(const std::string& s);

}  // namespace wildset
