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
#include <unordered_set>
#include <vector>

#include "wildset/hashtag.hpp"

namespace wildset {

struct ImageRecord {
    uint64_t id = 0;
    std::vector<std::string> tags;
};

// Line-delimited {"image_id": ..., "tags": [...]} records.
void write_records(const std::filesystem::path& path,
                   std::span<const ImageRecord> records);
std::vector<ImageRecord> read_records(const std::filesystem::path& path);

/// Per-tag occurrence counts over a record corpus (each tag counted once
/// per image). Counts are always >= 1.
class FrequencyTable {
  public:
    static FrequencyTable from_records(std::span<const ImageRecord> records);
    static FrequencyTable from_counts(std::span<const TagCount> counts);

    const std::vector<TagCount>& entries() const { return entries_; }  // tag asc
    std::optional<size_t> index(const std::string& tag) const;
    uint64_t count(const std::string& tag) const;  // 0 when absent
    uint64_t total_occurrences() const { return total_; }
    uint64_t min_count() const;
    uint64_t max_count() const;
    size_t size() const { return entries_.size(); }

  private:
    std::vector<TagCount> entries_;
    uint64_t total_ = 0;
};

enum class SampleMode { kNatural, kUniform, kSqrt };

SampleMode sample_mode_from_string(const std::string& s);
const char* to_string(SampleMode mode);

/// Per-tag replication factor: natural -> 1; uniform -> max(1, t/f);
/// sqrt -> max(1, sqrt(t/f)).
double replication_factor(uint64_t count, double threshold, SampleMode mode);

/// Replication factors for a whole table, aligned with its entries.
struct ReplicationPlan {
    SampleMode mode = SampleMode::kNatural;
    double threshold = 0.0;
    std::vector<double> tag_r;
};

ReplicationPlan make_plan(const FrequencyTable& freqs, double threshold,
                          SampleMode mode);

/// Finds a threshold whose seeded materialized list length falls within
/// 1% of target_length. The per-image stochastic rounding shares one
/// uniform draw for the copy count and all tag retentions, which makes the
/// length exactly monotone in the threshold, so bisection applies.
double select_threshold(const FrequencyTable& freqs,
                        std::span<const ImageRecord> records,
                        uint64_t target_length, SampleMode mode, uint64_t seed);

/// One training epoch: image id per copy plus a bitmask of which of the
/// record's tags (by position, bit i <-> tags[i]) each copy retains. An
/// image appears round_s(r(I)) times; tag h is kept in round_s(r(h)) of
/// those copies, chosen uniformly; the tag of maximal replication factor is
/// kept in every copy, so no copy is left tagless. The list is shuffled.
struct EpochList {
    std::vector<uint64_t> ids;
    std::vector<uint64_t> masks;
};

EpochList build_epoch_list(std::span<const ImageRecord> records,
                           const FrequencyTable& freqs,
                           const ReplicationPlan& plan, uint64_t seed);

/// Per-tag copy totals and overall length of the epoch list a seed would
/// materialize, computed without materializing it. tag_totals aligns with
/// freqs.entries().
struct EpochStats {
    std::vector<uint64_t> tag_totals;
    uint64_t copies = 0;
};

EpochStats epoch_list_stats(std::span<const ImageRecord> records,
                            const FrequencyTable& freqs,
                            const ReplicationPlan& plan, uint64_t seed);

// Epoch lists persist as two id streams: copies and their tag masks.
void write_epoch_list(const EpochList& list,
                      const std::filesystem::path& ids_path,
                      const std::filesystem::path& masks_path);
EpochList read_epoch_list(const std::filesystem::path& ids_path,
                          const std::filesystem::path& masks_path);

/// Uniform mass over the image's distinct in-vocab tags: k tags, each
/// 1/k. Returns nothing when no tag is in the vocabulary (dropped record).
struct TargetVector {
    std::vector<std::string> tags;  // support, first-occurrence order
    double value = 0.0;             // 1/k
};

std::optional<TargetVector> make_target(
    std::span<const std::string> tags,
    const std::unordered_set<std::string>& vocab);

/// Replaces round(p * total tag occurrences) tag slots, chosen without
/// replacement, with draws from the frequency-weighted marginal
/// renormalized to exclude the tag being replaced. Needs >= 2 tags in the
/// table.
std::vector<ImageRecord> inject_noise(std::span<const ImageRecord> records,
                                      double p, const FrequencyTable& freqs,
                                      uint64_t seed);

}  // namespace wildset
