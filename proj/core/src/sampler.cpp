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

#include "wildset/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "json.hpp"

#include "wildset/common.hpp"
#include "wildset/io.hpp"
#include "wildset/rng.hpp"

namespace wildset {

void write_records(const std::filesystem::path& path,
                   std::span<const ImageRecord> records) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path.string());
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["image_id"] = r.id;
        j["tags"] = r.tags;
        f << j.dump() << '\n';
    }
    if (!f) throw IoError("write failed: " + path.string());
}

std::vector<ImageRecord> read_records(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for read: " + path.string());
    std::vector<ImageRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        ImageRecord r;
        try {
            auto j = nlohmann::json::parse(line);
            r.id = j.at("image_id").get<uint64_t>();
            r.tags = j.at("tags").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                              ": " + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

FrequencyTable FrequencyTable::from_records(
    std::span<const ImageRecord> records) {
    std::map<std::string, uint64_t> counts;
    std::unordered_set<std::string> seen;
    for (const auto& r : records) {
        seen.clear();
        for (const auto& tag : r.tags) {
            if (tag.empty()) throw InvalidArgument("record with empty tag");
            if (seen.insert(tag).second) ++counts[tag];
        }
    }
    FrequencyTable t;
    t.entries_.reserve(counts.size());
    for (auto& [tag, count] : counts) {
        t.entries_.push_back({tag, count});
        t.total_ += count;
    }
    return t;
}

FrequencyTable FrequencyTable::from_counts(std::span<const TagCount> counts) {
    std::map<std::string, uint64_t> merged;
    for (const auto& tc : counts) {
        if (tc.tag.empty()) throw InvalidArgument("frequency table: empty tag");
        if (tc.count == 0) {
            throw InvalidArgument("frequency table: zero count for tag \"" +
                                  tc.tag + "\"");
        }
        merged[tc.tag] += tc.count;
    }
    FrequencyTable t;
    t.entries_.reserve(merged.size());
    for (auto& [tag, count] : merged) {
        t.entries_.push_back({tag, count});
        t.total_ += count;
    }
    return t;
}

std::optional<size_t> FrequencyTable::index(const std::string& tag) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), tag,
                               [](const TagCount& a, const std::string& b) {
                                   return a.tag < b;
                               });
    if (it == entries_.end() || it->tag != tag) return std::nullopt;
    return static_cast<size_t>(it - entries_.begin());
}

uint64_t FrequencyTable::count(const std::string& tag) const {
    auto idx = index(tag);
    return idx ? entries_[*idx].count : 0;
}

uint64_t FrequencyTable::min_count() const {
    if (entries_.empty()) throw InvalidState("empty frequency table");
    uint64_t m = entries_[0].count;
    for (const auto& e : entries_) m = std::min(m, e.count);
    return m;
}

uint64_t FrequencyTable::max_count() const {
    if (entries_.empty()) throw InvalidState("empty frequency table");
    uint64_t m = entries_[0].count;
    for (const auto& e : entries_) m = std::max(m, e.count);
    return m;
}

SampleMode sample_mode_from_string(const std::string& s) {
    if (s == "natural") return SampleMode::kNatural;
    if (s == "uniform") return SampleMode::kUniform;
    if (s == "sqrt") return SampleMode::kSqrt;
    throw InvalidArgument("unknown sampling mode: " + s);
}

const char* to_string(SampleMode mode) {
    switch (mode) {
        case SampleMode::kNatural: return "natural";
        case SampleMode::kUniform: return "uniform";
        case SampleMode::kSqrt: return "sqrt";
    }
    throw InvalidArgument("unknown sampling mode value");
}

double replication_factor(uint64_t count, double threshold, SampleMode mode) {
    if (count == 0) throw InvalidArgument("replication factor: zero count");
    if (!(threshold > 0.0)) {
        throw InvalidArgument("replication factor: non-positive threshold");
    }
    switch (mode) {
        case SampleMode::kNatural: return 1.0;
        case SampleMode::kUniform:
            return std::max(1.0, threshold / static_cast<double>(count));
        case SampleMode::kSqrt:
            return std::max(1.0,
                            std::sqrt(threshold / static_cast<double>(count)));
    }
    throw InvalidArgument("unknown sampling mode value");
}

ReplicationPlan make_plan(const FrequencyTable& freqs, double threshold,
                          SampleMode mode) {
    ReplicationPlan plan;
    plan.mode = mode;
    plan.threshold = threshold;
    plan.tag_r.reserve(freqs.size());
    for (const auto& e : freqs.entries()) {
        plan.tag_r.push_back(replication_factor(e.count, threshold, mode));
    }
    return plan;
}

namespace {

// floor(r) + Bernoulli(frac(r)) with a shared uniform draw. Monotone in r
// for a fixed u, which is what makes bisection on the threshold exact.
inline uint64_t stochastic_round(double r, double u) {
    const double fl = std::floor(r);
    uint64_t c = static_cast<uint64_t>(fl);
    if (u < r - fl) ++c;
    return c;
}

// Flattened per-position indices into the frequency table, validated
// up front so the parallel passes below cannot throw.
struct CorpusLayout {
    std::vector<uint32_t> tag_index;  // one per tag position, all records
    std::vector<size_t> offsets;      // records.size() + 1
};

CorpusLayout layout_corpus(std::span<const ImageRecord> records,
                           const FrequencyTable& freqs) {
    CorpusLayout lay;
    lay.offsets.reserve(records.size() + 1);
    lay.offsets.push_back(0);
    for (const auto& r : records) {
        if (r.tags.size() > 64) {
            throw InvalidArgument("record " + std::to_string(r.id) +
                                  " has more than 64 tags");
        }
        for (const auto& tag : r.tags) {
            auto idx = freqs.index(tag);
            if (!idx) {
                throw InvalidState("tag \"" + tag +
                                   "\" missing from frequency table");
            }
            lay.tag_index.push_back(static_cast<uint32_t>(*idx));
        }
        lay.offsets.push_back(lay.tag_index.size());
    }
    return lay;
}

void check_plan(const FrequencyTable& freqs, const ReplicationPlan& plan) {
    if (plan.tag_r.size() != freqs.size()) {
        throw InvalidArgument("replication plan covers " +
                              std::to_string(plan.tag_r.size()) +
                              " tags, frequency table has " +
                              std::to_string(freqs.size()));
    }
}

double image_r(const CorpusLayout& lay, const ReplicationPlan& plan, size_t i) {
    double r = 1.0;
    for (size_t p = lay.offsets[i]; p < lay.offsets[i + 1]; ++p) {
        r = std::max(r, plan.tag_r[lay.tag_index[p]]);
    }
    return r;
}

// The first draw of every per-image stream; shared by the copy count and
// all tag retention counts.
std::vector<double> image_uniforms(size_t count, uint64_t seed) {
    std::vector<double> u(count);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(count); ++i) {
        Rng rng(derive_seed(seed, "epoch", static_cast<uint64_t>(i)));
        u[i] = rng.next_double();
    }
    return u;
}

}  // namespace

double select_threshold(const FrequencyTable& freqs,
                        std::span<const ImageRecord> records,
                        uint64_t target_length, SampleMode mode,
                        uint64_t seed) {
    if (records.empty()) throw InvalidArgument("empty record corpus");
    if (freqs.size() == 0) throw InvalidArgument("empty frequency table");
    const uint64_t n = records.size();
    if (target_length < n) {
        throw InvalidArgument("target length " + std::to_string(target_length) +
                              " below corpus size " + std::to_string(n));
    }

    const CorpusLayout lay = layout_corpus(records, freqs);
    const std::vector<double> u = image_uniforms(records.size(), seed);
    // r(I) = max over the image's tags; r is non-increasing in the tag
    // count, so only the rarest tag matters.
    std::vector<uint64_t> min_count(records.size(), 0);
    for (size_t i = 0; i < records.size(); ++i) {
        uint64_t m = 0;
        for (size_t p = lay.offsets[i]; p < lay.offsets[i + 1]; ++p) {
            uint64_t c = freqs.entries()[lay.tag_index[p]].count;
            if (m == 0 || c < m) m = c;
        }
        min_count[i] = m;  // 0 = no tags, r stays 1
    }

    auto length_at = [&](double t) -> uint64_t {
        uint64_t total = 0;
#pragma omp parallel for schedule(static) reduction(+ : total)
        for (int64_t i = 0; i < static_cast<int64_t>(records.size()); ++i) {
            double r = min_count[i] == 0
                           ? 1.0
                           : replication_factor(min_count[i], t, mode);
            total += stochastic_round(r, u[i]);
        }
        return total;
    };
    auto in_band = [&](uint64_t len) {
        const double l = static_cast<double>(len);
        const double tgt = static_cast<double>(target_length);
        return l >= 0.99 * tgt && l <= 1.01 * tgt;
    };

    double lo = static_cast<double>(freqs.min_count());
    uint64_t len_lo = length_at(lo);  // every r is 1 here, so this is n
    if (in_band(len_lo)) return lo;
    if (mode == SampleMode::kNatural) {
        throw InvalidArgument(
            "natural mode keeps the corpus at its original length " +
            std::to_string(n) + "; cannot reach target " +
            std::to_string(target_length));
    }

    double hi = lo;
    uint64_t len_hi = len_lo;
    for (int i = 0; i < 80 && len_hi < target_length; ++i) {
        hi *= 2.0;
        len_hi = length_at(hi);
        if (in_band(len_hi)) return hi;
    }
    if (len_hi < target_length) {
        throw InvalidState("threshold search failed to bracket target length " +
                           std::to_string(target_length));
    }

    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const uint64_t len_mid = length_at(mid);
        if (in_band(len_mid)) return mid;
        if (len_mid < target_length) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw InvalidState(
        "no threshold lands within 1% of target length " +
        std::to_string(target_length) +
        " (the materialized length jumps across the tolerance band)");
}

EpochList build_epoch_list(std::span<const ImageRecord> records,
                           const FrequencyTable& freqs,
                           const ReplicationPlan& plan, uint64_t seed) {
    check_plan(freqs, plan);
    const CorpusLayout lay = layout_corpus(records, freqs);
    const size_t n = records.size();

    // Pass 1: copy counts, which need only the shared per-image draw.
    const std::vector<double> u = image_uniforms(n, seed);
    std::vector<uint64_t> copies(n);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
        copies[i] = stochastic_round(image_r(lay, plan, i), u[i]);
    }
    std::vector<uint64_t> offset(n + 1, 0);
    for (size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + copies[i];

    EpochList list;
    list.ids.resize(offset[n]);
    list.masks.assign(offset[n], 0);

    // Pass 2: per-copy tag retention. Each image replays its own stream, so
    // the result is independent of scheduling.
#pragma omp parallel
    {
        std::vector<uint32_t> uniq_first;  // first position of each unique tag
        std::vector<uint64_t> posmask;     // record positions per unique tag
        std::vector<uint32_t> pick;        // copy indices for subset draws
#pragma omp for schedule(dynamic, 64)
        for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
            const uint64_t c = copies[i];
            uint64_t* mask = list.masks.data() + offset[i];
            for (uint64_t k = 0; k < c; ++k) {
                list.ids[offset[i] + k] = records[i].id;
            }
            const size_t ntags = lay.offsets[i + 1] - lay.offsets[i];
            if (ntags == 0) continue;

            // Group duplicate tag positions; they share one retention.
            uniq_first.clear();
            posmask.clear();
            const uint32_t* tidx = lay.tag_index.data() + lay.offsets[i];
            for (size_t p = 0; p < ntags; ++p) {
                size_t slot = uniq_first.size();
                for (size_t q = 0; q < uniq_first.size(); ++q) {
                    if (tidx[uniq_first[q]] == tidx[p]) {
                        slot = q;
                        break;
                    }
                }
                if (slot == uniq_first.size()) {
                    uniq_first.push_back(static_cast<uint32_t>(p));
                    posmask.push_back(0);
                }
                posmask[slot] |= uint64_t{1} << p;
            }

            Rng rng(derive_seed(seed, "epoch", static_cast<uint64_t>(i)));
            const double ui = rng.next_double();
            for (size_t q = 0; q < uniq_first.size(); ++q) {
                const double r = plan.tag_r[tidx[uniq_first[q]]];
                const uint64_t keep = stochastic_round(r, ui);
                if (keep >= c) {  // the max-r tag always lands here
                    for (uint64_t k = 0; k < c; ++k) mask[k] |= posmask[q];
                    continue;
                }
                pick.resize(c);
                std::iota(pick.begin(), pick.end(), 0);
                for (uint64_t k = 0; k < keep; ++k) {
                    const uint64_t j = k + rng.next_below(c - k);
                    std::swap(pick[k], pick[j]);
                    mask[pick[k]] |= posmask[q];
                }
            }
        }
    }

    Rng srng(derive_seed(seed, "shuffle"));
    for (size_t i = list.ids.size(); i > 1; --i) {
        const size_t j = srng.next_below(i);
        std::swap(list.ids[i - 1], list.ids[j]);
        std::swap(list.masks[i - 1], list.masks[j]);
    }
    return list;
}

EpochStats epoch_list_stats(std::span<const ImageRecord> records,
                            const FrequencyTable& freqs,
                            const ReplicationPlan& plan, uint64_t seed) {
    check_plan(freqs, plan);
    const CorpusLayout lay = layout_corpus(records, freqs);
    const size_t n = records.size();
    const std::vector<double> u = image_uniforms(n, seed);

    EpochStats stats;
    stats.tag_totals.assign(freqs.size(), 0);
#pragma omp parallel
    {
        std::vector<uint64_t> local(freqs.size(), 0);
        uint64_t local_copies = 0;
        std::vector<uint32_t> seen;
#pragma omp for schedule(static)
        for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
            local_copies += stochastic_round(image_r(lay, plan, i), u[i]);
            seen.clear();
            for (size_t p = lay.offsets[i]; p < lay.offsets[i + 1]; ++p) {
                const uint32_t t = lay.tag_index[p];
                if (std::find(seen.begin(), seen.end(), t) != seen.end()) {
                    continue;  // duplicate position, one retention
                }
                seen.push_back(t);
                local[t] += stochastic_round(plan.tag_r[t], u[i]);
            }
        }
#pragma omp critical
        {
            stats.copies += local_copies;
            for (size_t t = 0; t < local.size(); ++t) {
                stats.tag_totals[t] += local[t];
            }
        }
    }
    return stats;
}

void write_epoch_list(const EpochList& list,
                      const std::filesystem::path& ids_path,
                      const std::filesystem::path& masks_path) {
    if (list.ids.size() != list.masks.size()) {
        throw InvalidArgument("epoch list ids/masks length mismatch");
    }
    write_ids(ids_path.string(), list.ids);
    write_ids(masks_path.string(), list.masks);
}

EpochList read_epoch_list(const std::filesystem::path& ids_path,
                          const std::filesystem::path& masks_path) {
    EpochList list;
    list.ids = read_ids(ids_path.string());
    list.masks = read_ids(masks_path.string());
    if (list.ids.size() != list.masks.size()) {
        throw CorruptData("epoch list ids/masks length mismatch: " +
                          ids_path.string() + " vs " + masks_path.string());
    }
    return list;
}

std::optional<TargetVector> make_target(
    std::span<const std::string> tags,
    const std::unordered_set<std::string>& vocab) {
    TargetVector tv;
    std::unordered_set<std::string> seen;
    for (const auto& tag : tags) {
        if (!vocab.count(tag)) continue;
        if (seen.insert(tag).second) tv.tags.push_back(tag);
    }
    if (tv.tags.empty()) return std::nullopt;
    tv.value = 1.0 / static_cast<double>(tv.tags.size());
    return tv;
}

std::vector<ImageRecord> inject_noise(std::span<const ImageRecord> records,
                                      double p, const FrequencyTable& freqs,
                                      uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("noise fraction must lie in [0, 1]");
    }
    if (freqs.size() < 2) {
        throw InvalidArgument(
            "noise injection needs at least 2 tags to exclude the replaced "
            "one");
    }
    std::vector<ImageRecord> out(records.begin(), records.end());

    uint64_t total_slots = 0;
    for (const auto& r : records) total_slots += r.tags.size();
    const uint64_t replace = static_cast<uint64_t>(
        std::llround(p * static_cast<double>(total_slots)));
    if (replace == 0) return out;

    // Slot positions to rewrite, drawn without replacement.
    std::vector<uint64_t> pos(total_slots);
    std::iota(pos.begin(), pos.end(), 0);
    Rng prng(derive_seed(seed, "noise-pos"));
    for (uint64_t i = 0; i < replace; ++i) {
        const uint64_t j = i + prng.next_below(total_slots - i);
        std::swap(pos[i], pos[j]);
    }
    pos.resize(replace);
    std::sort(pos.begin(), pos.end());

    const auto& entries = freqs.entries();
    std::vector<uint64_t> cum(entries.size());
    uint64_t running = 0;
    for (size_t i = 0; i < entries.size(); ++i) {
        running += entries[i].count;
        cum[i] = running;
    }
    const uint64_t weight_total = running;

    Rng drng(derive_seed(seed, "noise-draw"));
    size_t rec = 0;
    uint64_t rec_base = 0;
    for (const uint64_t slot : pos) {
        while (slot >= rec_base + out[rec].tags.size()) {
            rec_base += out[rec].tags.size();
            ++rec;
        }
        std::string& tag = out[rec].tags[slot - rec_base];
        // Draw from the marginal with the replaced tag's mass removed:
        // sample the reduced total, then shift draws at or past the
        // excluded block to skip over it.
        uint64_t v;
        auto idx = freqs.index(tag);
        if (idx) {
            const uint64_t fx = entries[*idx].count;
            v = drng.next_below(weight_total - fx);
            if (v >= cum[*idx] - fx) v += fx;
        } else {
            v = drng.next_below(weight_total);  // zero mass, nothing to skip
        }
        const size_t k = static_cast<size_t>(
            std::upper_bound(cum.begin(), cum.end(), v) - cum.begin());
        tag = entries[k].tag;
    }
    return out;
}

}  // namespace wildset
