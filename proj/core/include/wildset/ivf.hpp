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
#include <functional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wildset/quantizer_set.hpp"

namespace wildset {

/// Two-part coarse quantizer: each half of the rotated vector picks one of
/// 2^bits codes; the packed pair addresses one of 4^bits cells. Cells are
/// enumerated nearest-first by merging the two per-half distance tables.
struct CoarseQuantizer {
    const PqCodebook* pq = nullptr;  // m == 2, ksub == 1 << bits
    uint32_t bits = 0;

    uint64_t cell_count() const { return uint64_t(1) << (2 * bits); }

    static uint64_t pack(uint32_t a, uint32_t b, uint32_t bits) {
        return (uint64_t(a) << bits) | b;
    }
    std::pair<uint32_t, uint32_t> unpack(uint64_t cell) const {
        return {uint32_t(cell >> bits), uint32_t(cell & ((uint64_t(1) << bits) - 1))};
    }

    uint64_t cell_of(const float* rotated) const;
    void cell_centroid(uint64_t cell, float* out) const;

    /// The n cells nearest to the query, ordered by ascending summed
    /// squared distance of the two halves; ties order by packed cell id.
    std::vector<uint64_t> nearest_cells(const float* rotated, uint64_t n) const;
};

struct SearchHit {
    uint64_t id = 0;
    double distance = 0.0;
};

enum class DuplicateIds { kReject, kAllow };

/// Inverted file over coarse cells with byte codes for the residuals.
/// Only non-empty cells are materialized, so the cell space can be much
/// larger than the collection.
class IvfIndex {
  public:
    IvfIndex() = default;
    explicit IvfIndex(QuantizerSet quantizers,
                      DuplicateIds duplicates = DuplicateIds::kReject);

    const QuantizerSet& quantizers() const { return quantizers_; }
    CoarseQuantizer coarse() const {
        return {&quantizers_.coarse, quantizers_.coarse_bits};
    }

    /// Adds a vector by its storage codes (decoded and rotated internally).
    void add_storage(uint64_t id, std::span<const uint8_t> storage_code);
    /// Adds a vector already in the rotated space.
    void add_rotated(uint64_t id, std::span<const float> rotated);

    /// Freezes the index: entries are ordered by id within each cell and
    /// further adds are rejected. Searching and saving require this.
    void seal();
    bool sealed() const { return sealed_; }
    size_t size() const { return total_; }
    size_t nonempty_cells() const { return buckets_.size(); }

    struct SearchStats {
        uint64_t cells_probed = 0;
        uint64_t nonempty_probed = 0;
        uint64_t candidates = 0;
    };

    /// Top-k by asymmetric distance: the query's residual against each
    /// probed cell's centroid is tabulated per subspace, candidate
    /// distances are summed lookups. Probing every cell is equivalent to
    /// an exhaustive scan of all codes. Ties order by id.
    std::vector<SearchHit> search(std::span<const float> rotated_query, uint32_t k,
                                  uint64_t probe_cells,
                                  SearchStats* stats = nullptr) const;

    void visit(const std::function<void(uint64_t cell, uint64_t id,
                                        const uint8_t* code)>& fn) const;

    void save(const std::filesystem::path& path) const;
    static IvfIndex load(const std::filesystem::path& path);

  private:
    struct Bucket {
        uint64_t cell = 0;
        std::vector<uint64_t> ids;
        std::vector<uint8_t> codes;  // residual_m bytes per entry
    };

    Bucket& bucket_for(uint64_t cell);

    QuantizerSet quantizers_;
    std::unordered_map<uint64_t, uint32_t> cell_slots_;
    std::vector<Bucket> buckets_;
    std::unordered_set<uint64_t> ids_;
    size_t total_ = 0;
    bool sealed_ = false;
    DuplicateIds duplicates_ = DuplicateIds::kReject;
};

}  // namespace wildset
