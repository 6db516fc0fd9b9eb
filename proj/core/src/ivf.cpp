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

#include "wildset/ivf.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <queue>
#include <string>

#include "wildset/common.hpp"
#include "wildset/kmeans.hpp"

namespace wildset {

// --- coarse quantizer ---------------------------------------------------------

uint64_t CoarseQuantizer::cell_of(const float* rotated) const {
    uint32_t codes[2];
    pq->assign(rotated, codes);
    return pack(codes[0], codes[1], bits);
}

void CoarseQuantizer::cell_centroid(uint64_t cell, float* out) const {
    auto [a, b] = unpack(cell);
    std::memcpy(out, pq->sub_centroid(0, a), pq->dsub * sizeof(float));
    std::memcpy(out + pq->dsub, pq->sub_centroid(1, b), pq->dsub * sizeof(float));
}

std::vector<uint64_t> CoarseQuantizer::nearest_cells(const float* rotated,
                                                     uint64_t n) const {
    const uint32_t ksub = pq->ksub;
    if (n > cell_count()) {
        log::warn("probe count %llu exceeds the %llu cells; clamping",
                  (unsigned long long)n, (unsigned long long)cell_count());
        n = cell_count();
    }

    auto table = pq->adc_table(rotated);
    const double* da = table.data();
    const double* db = table.data() + ksub;

    // Per-half code order: ascending distance, then ascending code.
    std::vector<uint32_t> ord_a(ksub), ord_b(ksub);
    std::iota(ord_a.begin(), ord_a.end(), 0u);
    std::iota(ord_b.begin(), ord_b.end(), 0u);
    auto by = [](const double* d) {
        return [d](uint32_t x, uint32_t y) {
            return d[x] != d[y] ? d[x] < d[y] : x < y;
        };
    };
    std::sort(ord_a.begin(), ord_a.end(), by(da));
    std::sort(ord_b.begin(), ord_b.end(), by(db));

    // Lattice merge of the two sorted lists: pop the cheapest (i, j), then
    // extend right always and down only from the first column, so every
    // pair enters the frontier exactly once.
    struct Node {
        double dist;
        uint64_t cell;
        uint32_t i, j;
    };
    auto worse = [](const Node& x, const Node& y) {
        return x.dist != y.dist ? x.dist > y.dist : x.cell > y.cell;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(worse)> frontier(worse);

    auto make = [&](uint32_t i, uint32_t j) {
        return Node{da[ord_a[i]] + db[ord_b[j]], pack(ord_a[i], ord_b[j], bits), i, j};
    };
    frontier.push(make(0, 0));

    std::vector<uint64_t> out;
    out.reserve(size_t(n));
    while (out.size() < n && !frontier.empty()) {
        Node top = frontier.top();
        frontier.pop();
        out.push_back(top.cell);
        if (top.j + 1 < ksub) frontier.push(make(top.i, top.j + 1));
        if (top.j == 0 && top.i + 1 < ksub) frontier.push(make(top.i + 1, 0));
    }
    return out;
}

// --- index ----------------------------------------------------------------------

IvfIndex::IvfIndex(QuantizerSet quantizers, DuplicateIds duplicates)
    : quantizers_(std::move(quantizers)), duplicates_(duplicates) {
    if (quantizers_.coarse.m != 2) {
        throw InvalidArgument("IvfIndex: coarse codebook must have exactly 2 parts");
    }
    if (quantizers_.coarse.ksub != (uint32_t(1) << quantizers_.coarse_bits)) {
        throw InvalidArgument("IvfIndex: coarse ksub disagrees with coarse_bits");
    }
    if (quantizers_.residual.dim() != quantizers_.coarse.dim()) {
        throw InvalidArgument(
            "IvfIndex: residual and coarse codebooks disagree on dimensionality");
    }
}

IvfIndex::Bucket& IvfIndex::bucket_for(uint64_t cell) {
    auto it = cell_slots_.find(cell);
    if (it != cell_slots_.end()) return buckets_[it->second];
    cell_slots_.emplace(cell, uint32_t(buckets_.size()));
    buckets_.push_back(Bucket{cell, {}, {}});
    return buckets_.back();
}

void IvfIndex::add_storage(uint64_t id, std::span<const uint8_t> storage_code) {
    add_rotated(id, quantizers_.storage_to_rotated(storage_code));
}

void IvfIndex::add_rotated(uint64_t id, std::span<const float> rotated) {
    if (sealed_) throw InvalidState("IvfIndex: sealed, no further adds");
    if (rotated.size() != quantizers_.coarse.dim()) {
        throw InvalidArgument("IvfIndex: expected " +
                              std::to_string(quantizers_.coarse.dim()) +
                              "-d vector, got " + std::to_string(rotated.size()));
    }
    if (!ids_.insert(id).second && duplicates_ == DuplicateIds::kReject) {
        throw InvalidArgument("IvfIndex: duplicate id " + std::to_string(id));
    }

    const uint32_t d = quantizers_.coarse.dim();
    CoarseQuantizer cq = coarse();
    uint64_t cell = cq.cell_of(rotated.data());

    std::vector<float> centroid(d), residual(d);
    cq.cell_centroid(cell, centroid.data());
    for (uint32_t j = 0; j < d; ++j) residual[j] = rotated[j] - centroid[j];

    Bucket& b = bucket_for(cell);
    b.ids.push_back(id);
    size_t at = b.codes.size();
    b.codes.resize(at + quantizers_.residual.m);
    quantizers_.residual.encode(residual.data(), b.codes.data() + at);
    ++total_;
}

void IvfIndex::seal() {
    if (sealed_) return;
    const uint32_t m = quantizers_.residual.m;
    for (Bucket& b : buckets_) {
        std::vector<size_t> order(b.ids.size());
        std::iota(order.begin(), order.end(), size_t(0));
        std::sort(order.begin(), order.end(),
                  [&](size_t x, size_t y) { return b.ids[x] < b.ids[y]; });
        std::vector<uint64_t> ids(b.ids.size());
        std::vector<uint8_t> codes(b.codes.size());
        for (size_t i = 0; i < order.size(); ++i) {
            ids[i] = b.ids[order[i]];
            std::memcpy(codes.data() + i * m, b.codes.data() + order[i] * m, m);
        }
        b.ids = std::move(ids);
        b.codes = std::move(codes);
    }
    sealed_ = true;
}

std::vector<SearchHit> IvfIndex::search(std::span<const float> rotated_query,
                                        uint32_t k, uint64_t probe_cells,
                                        SearchStats* stats) const {
    if (!sealed_) throw InvalidState("IvfIndex: seal before searching");
    if (k < 1) throw InvalidArgument("IvfIndex: k must be >= 1");
    if (probe_cells < 1) throw InvalidArgument("IvfIndex: probe_cells must be >= 1");
    if (rotated_query.size() != quantizers_.coarse.dim()) {
        throw InvalidArgument("IvfIndex: query dimensionality mismatch");
    }

    const uint32_t d = quantizers_.coarse.dim();
    const uint32_t m = quantizers_.residual.m;
    CoarseQuantizer cq = coarse();
    auto cells = cq.nearest_cells(rotated_query.data(), probe_cells);

    // Bounded worst-on-top heap ordered by (distance, id).
    auto worse = [](const SearchHit& x, const SearchHit& y) {
        return x.distance != y.distance ? x.distance < y.distance : x.id < y.id;
    };
    std::priority_queue<SearchHit, std::vector<SearchHit>, decltype(worse)> best(worse);

    SearchStats st;
    std::vector<float> centroid(d), residual(d);
    for (uint64_t cell : cells) {
        ++st.cells_probed;
        auto it = cell_slots_.find(cell);
        if (it == cell_slots_.end()) continue;
        const Bucket& b = buckets_[it->second];
        ++st.nonempty_probed;

        cq.cell_centroid(cell, centroid.data());
        for (uint32_t j = 0; j < d; ++j) {
            residual[j] = rotated_query[j] - centroid[j];
        }
        auto table = quantizers_.residual.adc_table(residual.data());
        for (size_t i = 0; i < b.ids.size(); ++i) {
            ++st.candidates;
            double dist =
                quantizers_.residual.adc_distance(table, b.codes.data() + i * m);
            SearchHit hit{b.ids[i], dist};
            if (best.size() < k) {
                best.push(hit);
            } else if (worse(hit, best.top())) {
                best.pop();
                best.push(hit);
            }
        }
    }

    std::vector<SearchHit> out(best.size());
    for (size_t i = out.size(); i-- > 0;) {
        out[i] = best.top();
        best.pop();
    }
    if (stats) *stats = st;
    return out;
}

void IvfIndex::visit(const std::function<void(uint64_t, uint64_t, const uint8_t*)>& fn)
    const {
    const uint32_t m = quantizers_.residual.m;
    for (const Bucket& b : buckets_) {
        for (size_t i = 0; i < b.ids.size(); ++i) {
            fn(b.cell, b.ids[i], b.codes.data() + i * m);
        }
    }
}

// --- persistence ------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'W', 'S', 'I', '1'};
constexpr uint32_t kVersionTag = 1;
}  // namespace

void IvfIndex::save(const std::filesystem::path& path) const {
    if (!sealed_) throw InvalidState("IvfIndex: seal before saving");

    ByteWriter qw;
    quantizers_.serialize(qw);

    std::vector<uint32_t> order(buckets_.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](uint32_t x, uint32_t y) {
        return buckets_[x].cell < buckets_[y].cell;
    });

    ByteWriter w;
    w.bytes({reinterpret_cast<const uint8_t*>(kMagic), 4});
    w.u32(kVersionTag);
    w.u64(qw.size());  // quantizer section length, so it can be skipped
    w.bytes(qw.data());
    w.u64(total_);
    w.u64(buckets_.size());
    w.u32(quantizers_.residual.m);
    w.u8(duplicates_ == DuplicateIds::kAllow ? 1 : 0);
    for (uint32_t idx : order) {
        w.u64(buckets_[idx].cell);
        w.u64(buckets_[idx].ids.size());
    }
    for (uint32_t idx : order) {
        const Bucket& b = buckets_[idx];
        for (uint64_t id : b.ids) w.u64(id);
        w.bytes(b.codes);
    }
    write_file(path, w.take());
}

IvfIndex IvfIndex::load(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    ByteReader r(bytes);
    r.expect_magic(kMagic, "ivf index");
    uint32_t version = r.u32();
    if (version != kVersionTag) {
        throw CorruptData("ivf index: unsupported version " + std::to_string(version));
    }
    uint64_t qlen = r.u64();
    size_t qstart = r.pos();
    QuantizerSet qs = QuantizerSet::deserialize(r);
    if (r.pos() - qstart != qlen) {
        throw CorruptData("ivf index: quantizer section length mismatch");
    }

    IvfIndex index(std::move(qs));
    uint64_t total = r.u64();
    uint64_t ncells = r.u64();
    uint32_t m = r.u32();
    if (m != index.quantizers_.residual.m) {
        throw CorruptData("ivf index: code width disagrees with the codebook");
    }
    index.duplicates_ = r.u8() ? DuplicateIds::kAllow : DuplicateIds::kReject;

    std::vector<std::pair<uint64_t, uint64_t>> directory(ncells);
    uint64_t check = 0;
    for (auto& [cell, count] : directory) {
        cell = r.u64();
        count = r.u64();
        check += count;
    }
    if (check != total) throw CorruptData("ivf index: directory counts disagree");

    index.buckets_.reserve(ncells);
    for (auto& [cell, count] : directory) {
        Bucket b;
        b.cell = cell;
        b.ids.resize(count);
        for (uint64_t& id : b.ids) id = r.u64();
        b.codes.resize(count * m);
        r.bytes(b.codes);
        if (index.cell_slots_.count(cell)) {
            throw CorruptData("ivf index: duplicate cell in directory");
        }
        index.cell_slots_.emplace(cell, uint32_t(index.buckets_.size()));
        for (uint64_t id : b.ids) {
            if (!index.ids_.insert(id).second &&
                index.duplicates_ == DuplicateIds::kReject) {
                throw CorruptData("ivf index: duplicate id " + std::to_string(id));
            }
        }
        index.buckets_.push_back(std::move(b));
    }
    if (r.remaining() != 0) {
        throw CorruptData("ivf index: trailing bytes in " + path.string());
    }
    index.total_ = total;
    index.sealed_ = true;
    return index;
}

}  // namespace wildset
