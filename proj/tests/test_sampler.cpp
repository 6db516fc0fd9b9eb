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

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "wildset/common.hpp"
#include "wildset/io.hpp"
#include "wildset/rng.hpp"
#include "wildset/sampler.hpp"

using namespace wildset;

namespace {

// Independent restatement of the shared-draw rounding contract: one uniform
// per image, floor plus a Bernoulli on the fraction.
uint64_t oracle_round(double r, double u) {
    return uint64_t(std::floor(r)) + (u < r - std::floor(r) ? 1 : 0);
}

double image_uniform(uint64_t seed, uint64_t index) {
    Rng rng(derive_seed(seed, "epoch", index));
    return rng.next_double();
}

// Zipf-flavored corpus: tag pool "t00".."t19" with rank-decaying usage,
// 1..4 tags per record, unique ids.
std::vector<ImageRecord> make_corpus(size_t n, uint64_t seed) {
    std::vector<ImageRecord> recs(n);
    Rng rng(seed);
    for (size_t i = 0; i < n; ++i) {
        recs[i].id = 1000 + i;
        size_t ntags = 1 + rng.next_below(4);
        for (size_t j = 0; j < ntags; ++j) {
            // quadratic skew toward low ranks
            size_t a = rng.next_below(20), b = rng.next_below(20);
            size_t rank = std::min(a, b);
            std::string tag = "t" + std::string(rank < 10 ? "0" : "") +
                              std::to_string(rank);
            if (std::find(recs[i].tags.begin(), recs[i].tags.end(), tag) ==
                recs[i].tags.end()) {
                recs[i].tags.push_back(tag);
            }
        }
    }
    return recs;
}

struct Materialized {
    std::unordered_map<uint64_t, uint64_t> copies_of;        // id -> copies
    std::map<std::pair<uint64_t, size_t>, uint64_t> kept_of; // (id, pos) -> copies with bit
};

Materialized tally(const EpochList& list,
                   std::span<const ImageRecord> records) {
    std::unordered_map<uint64_t, const ImageRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    Materialized m;
    for (size_t i = 0; i < list.ids.size(); ++i) {
        const uint64_t id = list.ids[i];
        ++m.copies_of[id];
        const ImageRecord* rec = by_id.at(id);
        for (size_t p = 0; p < rec->tags.size(); ++p) {
            if (list.masks[i] >> p & 1) ++m.kept_of[{id, p}];
        }
    }
    return m;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("frequency table counts each tag once per image") {
    std::vector<ImageRecord> recs = {
        {1, {"b", "a", "b"}},  // duplicate position counts once
        {2, {"a"}},
        {3, {"c", "a"}},
        {4, {}},
    };
    FrequencyTable t = FrequencyTable::from_records(recs);
    REQUIRE(t.size() == 3);
    CHECK(t.entries()[0].tag == "a");  // ascending
    CHECK(t.entries()[1].tag == "b");
    CHECK(t.entries()[2].tag == "c");
    CHECK(t.count("a") == 3);
    CHECK(t.count("b") == 1);
    CHECK(t.count("c") == 1);
    CHECK(t.count("zz") == 0);
    CHECK(t.index("b").value() == 1);
    CHECK(!t.index("zz").has_value());
    CHECK(t.total_occurrences() == 5);
    CHECK(t.min_count() == 1);
    CHECK(t.max_count() == 3);

    std::vector<ImageRecord> bad = {{1, {"a", ""}}};
    CHECK_THROWS_AS(FrequencyTable::from_records(bad), InvalidArgument);
}

TEST_CASE("frequency table from counts merges and validates") {
    std::vector<TagCount> counts = {{"b", 2}, {"a", 5}, {"b", 3}};
    FrequencyTable t = FrequencyTable::from_counts(counts);
    CHECK(t.count("b") == 5);
    CHECK(t.count("a") == 5);
    CHECK(t.total_occurrences() == 10);
    std::vector<TagCount> zero = {{"a", 0}};
    CHECK_THROWS_AS(FrequencyTable::from_counts(zero), InvalidArgument);
    std::vector<TagCount> unnamed = {{"", 3}};
    CHECK_THROWS_AS(FrequencyTable::from_counts(unnamed), InvalidArgument);
    FrequencyTable empty = FrequencyTable::from_counts({});
    CHECK_THROWS_AS(empty.min_count(), InvalidState);
}

TEST_CASE("replication factors") {
    CHECK(replication_factor(25, 100, SampleMode::kUniform) == 4.0);
    CHECK(replication_factor(25, 100, SampleMode::kSqrt) == 2.0);
    CHECK(replication_factor(25, 100, SampleMode::kNatural) == 1.0);
    CHECK(replication_factor(400, 100, SampleMode::kUniform) == 1.0);  // clamp
    CHECK(replication_factor(400, 100, SampleMode::kSqrt) == 1.0);
    CHECK_THROWS_AS(replication_factor(0, 100, SampleMode::kUniform),
                    InvalidArgument);
    CHECK_THROWS_AS(replication_factor(25, 0.0, SampleMode::kUniform),
                    InvalidArgument);
    CHECK(sample_mode_from_string("sqrt") == SampleMode::kSqrt);
    CHECK(to_string(SampleMode::kUniform) == std::string("uniform"));
    CHECK_THROWS_AS(sample_mode_from_string("zipf"), InvalidArgument);
}

TEST_CASE("make_plan aligns factors with table entries") {
    std::vector<TagCount> counts = {{"a", 10}, {"b", 40}, {"c", 160}};
    FrequencyTable t = FrequencyTable::from_counts(counts);
    ReplicationPlan plan = make_plan(t, 40.0, SampleMode::kSqrt);
    REQUIRE(plan.tag_r.size() == 3);
    CHECK(plan.tag_r[0] == 2.0);  // sqrt(40/10)
    CHECK(plan.tag_r[1] == 1.0);
    CHECK(plan.tag_r[2] == 1.0);
    CHECK(plan.mode == SampleMode::kSqrt);
    CHECK(plan.threshold == 40.0);
}

TEST_CASE("hand-built plan: copy counts and retention by construction") {
    // f(a)=1, f(b)=3; uniform threshold 3 gives r(a)=3, r(b)=1. The record
    // holding `a` materializes 3 copies; `b` rides along in exactly one.
    std::vector<ImageRecord> recs = {
        {10, {"a", "b"}}, {11, {"b"}}, {12, {"b"}}};
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    ReplicationPlan plan = make_plan(freqs, 3.0, SampleMode::kUniform);
    for (uint64_t seed : {7u, 8u, 9u}) {
        EpochList list = build_epoch_list(recs, freqs, plan, seed);
        REQUIRE(list.ids.size() == 5);
        Materialized m = tally(list, recs);
        CHECK(m.copies_of[10] == 3);
        CHECK(m.copies_of[11] == 1);
        CHECK(m.copies_of[12] == 1);
        CHECK(m.kept_of[{10, 0}] == 3);  // max-r tag in every copy
        CHECK(m.kept_of[{10, 1}] == 1);  // r=1 tag in exactly one
        CHECK(m.kept_of[{11, 0}] == 1);
        CHECK(m.kept_of[{12, 0}] == 1);
    }
}

TEST_CASE("copy counts equal the shared-draw rounding, recomputed externally") {
    std::vector<ImageRecord> recs = make_corpus(400, 51);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    ReplicationPlan plan =
        make_plan(freqs, double(freqs.max_count()), SampleMode::kUniform);
    const uint64_t seed = 99;
    EpochList list = build_epoch_list(recs, freqs, plan, seed);
    Materialized m = tally(list, recs);
    for (size_t i = 0; i < recs.size(); ++i) {
        double r = 1.0;
        for (const auto& tag : recs[i].tags) {
            r = std::max(r, replication_factor(freqs.count(tag),
                                               plan.threshold, plan.mode));
        }
        uint64_t want = oracle_round(r, image_uniform(seed, i));
        CHECK(m.copies_of[recs[i].id] == want);
    }
}

TEST_CASE("per-tag retention equals the shared-draw rounding") {
    std::vector<ImageRecord> recs = make_corpus(300, 52);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    ReplicationPlan plan =
        make_plan(freqs, 0.6 * double(freqs.max_count()), SampleMode::kSqrt);
    const uint64_t seed = 100;
    EpochList list = build_epoch_list(recs, freqs, plan, seed);
    Materialized m = tally(list, recs);
    for (size_t i = 0; i < recs.size(); ++i) {
        const double u = image_uniform(seed, i);
        for (size_t p = 0; p < recs[i].tags.size(); ++p) {
            double r = replication_factor(freqs.count(recs[i].tags[p]),
                                          plan.threshold, plan.mode);
            CHECK(m.kept_of[{recs[i].id, p}] == oracle_round(r, u));
        }
    }
}

TEST_CASE("epoch stats equal the materialized list without materializing") {
    std::vector<ImageRecord> recs = make_corpus(350, 53);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    for (SampleMode mode : {SampleMode::kUniform, SampleMode::kSqrt}) {
        ReplicationPlan plan =
            make_plan(freqs, 0.8 * double(freqs.max_count()), mode);
        for (uint64_t seed : {1u, 2u, 3u}) {
            EpochList list = build_epoch_list(recs, freqs, plan, seed);
            EpochStats stats = epoch_list_stats(recs, freqs, plan, seed);
            CHECK(stats.copies == list.ids.size());
            Materialized m = tally(list, recs);
            std::vector<uint64_t> want(freqs.size(), 0);
            for (const auto& [key, kept] : m.kept_of) {
                // count each unique tag once per record via its first position
                const ImageRecord* rec = nullptr;
                for (const auto& r : recs) {
                    if (r.id == key.first) {
                        rec = &r;
                        break;
                    }
                }
                const std::string& tag = rec->tags[key.second];
                bool first = true;
                for (size_t q = 0; q < key.second; ++q) {
                    if (rec->tags[q] == tag) first = false;
                }
                if (first) want[*freqs.index(tag)] += kept;
            }
            CHECK(stats.tag_totals == want);
        }
    }
}

TEST_CASE("no copy is left tagless and duplicate positions share retention") {
    std::vector<ImageRecord> recs = {
        {1, {"rare", "rare", "common"}},
        {2, {"common"}},
        {3, {"common"}},
        {4, {"common"}},
        {5, {"common", "rare2"}},
        {6, {}},
    };
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    ReplicationPlan plan = make_plan(freqs, 4.0, SampleMode::kUniform);
    std::unordered_map<uint64_t, const ImageRecord*> by_id;
    for (const auto& r : recs) by_id[r.id] = &r;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        EpochList list = build_epoch_list(recs, freqs, plan, seed);
        for (size_t i = 0; i < list.ids.size(); ++i) {
            const ImageRecord* rec = by_id.at(list.ids[i]);
            if (!rec->tags.empty()) CHECK(list.masks[i] != 0);
            if (rec->id == 1) {
                CHECK((list.masks[i] >> 0 & 1) == (list.masks[i] >> 1 & 1));
            }
        }
    }
}

TEST_CASE("epoch lists are seed-deterministic and shuffled") {
    std::vector<ImageRecord> recs = make_corpus(300, 54);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    ReplicationPlan plan =
        make_plan(freqs, double(freqs.max_count()), SampleMode::kUniform);
    EpochList a = build_epoch_list(recs, freqs, plan, 5);
    EpochList b = build_epoch_list(recs, freqs, plan, 5);
    CHECK(a.ids == b.ids);
    CHECK(a.masks == b.masks);
    EpochList c = build_epoch_list(recs, freqs, plan, 6);
    CHECK(a.ids != c.ids);
    // shuffled: not sorted by id (astronomically unlikely for 300+ entries)
    CHECK(!std::is_sorted(a.ids.begin(), a.ids.end()));
}

TEST_CASE("layout validation") {
    std::vector<ImageRecord> recs = {{1, {"a"}}};
    FrequencyTable other = FrequencyTable::from_counts(
        std::vector<TagCount>{{"b", 1}});
    ReplicationPlan plan = make_plan(other, 1.0, SampleMode::kNatural);
    CHECK_THROWS_AS(build_epoch_list(recs, other, plan, 0), InvalidState);

    std::vector<ImageRecord> wide(1);
    wide[0].id = 9;
    for (int i = 0; i < 65; ++i) wide[0].tags.push_back("t" + std::to_string(i));
    FrequencyTable wf = FrequencyTable::from_records(wide);
    ReplicationPlan wp = make_plan(wf, 1.0, SampleMode::kNatural);
    CHECK_THROWS_AS(build_epoch_list(wide, wf, wp, 0), InvalidArgument);

    ReplicationPlan misaligned;
    misaligned.mode = SampleMode::kNatural;
    misaligned.threshold = 1.0;
    misaligned.tag_r = {1.0, 1.0};
    FrequencyTable f1 = FrequencyTable::from_records(recs);
    CHECK_THROWS_AS(build_epoch_list(recs, f1, misaligned, 0), InvalidArgument);
}

TEST_CASE("integer factors materialize exact totals") {
    // 100 single-tag images, uniform threshold 3x the count: r = 3 with no
    // fractional part, so every seed produces exactly 300 copies.
    std::vector<ImageRecord> recs(100);
    for (size_t i = 0; i < 100; ++i) recs[i] = {i, {"only"}};
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    ReplicationPlan plan = make_plan(freqs, 300.0, SampleMode::kUniform);
    for (uint64_t seed : {11u, 12u, 13u}) {
        EpochStats stats = epoch_list_stats(recs, freqs, plan, seed);
        CHECK(stats.copies == 300);
        CHECK(stats.tag_totals[0] == 300);
    }
}

TEST_CASE("materialized length is monotone in the threshold") {
    std::vector<ImageRecord> recs = make_corpus(500, 55);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    const uint64_t seed = 77;
    uint64_t prev = 0;
    for (double t = 1.0; t <= 4096.0; t *= 2.0) {
        ReplicationPlan plan = make_plan(freqs, t, SampleMode::kUniform);
        uint64_t len = epoch_list_stats(recs, freqs, plan, seed).copies;
        CHECK(len >= prev);
        prev = len;
    }
}

TEST_CASE("select_threshold lands within one percent of the target") {
    std::vector<ImageRecord> recs = make_corpus(600, 56);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    const uint64_t n = recs.size();
    const uint64_t seed = 31;
    for (SampleMode mode : {SampleMode::kUniform, SampleMode::kSqrt}) {
        double prev_t = 0.0;
        for (uint64_t mult : {1u, 2u, 5u}) {
            const uint64_t target = n * mult;
            double t = select_threshold(freqs, recs, target, mode, seed);
            ReplicationPlan plan = make_plan(freqs, t, mode);
            uint64_t len = epoch_list_stats(recs, freqs, plan, seed).copies;
            CHECK(double(len) >= 0.99 * double(target));
            CHECK(double(len) <= 1.01 * double(target));
            CHECK(t >= prev_t);  // larger targets need larger thresholds
            prev_t = t;
        }
    }
}

TEST_CASE("select_threshold validates its inputs") {
    std::vector<ImageRecord> recs = make_corpus(100, 57);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    CHECK_THROWS_AS(
        select_threshold(freqs, recs, 50, SampleMode::kUniform, 0),
        InvalidArgument);  // target below corpus size
    CHECK_THROWS_AS(
        select_threshold(freqs, recs, 200, SampleMode::kNatural, 0),
        InvalidArgument);  // natural cannot grow
    CHECK_NOTHROW(
        select_threshold(freqs, recs, 100, SampleMode::kNatural, 0));
    std::vector<ImageRecord> none;
    CHECK_THROWS_AS(
        select_threshold(freqs, none, 100, SampleMode::kUniform, 0),
        InvalidArgument);
}

TEST_CASE("epoch list files round-trip") {
    wtest::TempDir tmp;
    EpochList list;
    list.ids = {5, 3, 5, 9};
    list.masks = {1, 3, 2, 0};
    write_epoch_list(list, tmp.file("e.ids"), tmp.file("e.masks"));
    EpochList back = read_epoch_list(tmp.file("e.ids"), tmp.file("e.masks"));
    CHECK(back.ids == list.ids);
    CHECK(back.masks == list.masks);

    EpochList bad;
    bad.ids = {1};
    CHECK_THROWS_AS(
        write_epoch_list(bad, tmp.file("x.ids"), tmp.file("x.masks")),
        InvalidArgument);
    write_epoch_list(list, tmp.file("l.ids"), tmp.file("l.masks"));
    EpochList shorter;
    shorter.ids = {1, 2};
    shorter.masks = {0, 0};
    write_epoch_list(shorter, tmp.file("s.ids"), tmp.file("s.masks"));
    CHECK_THROWS_AS(read_epoch_list(tmp.file("l.ids"), tmp.file("s.masks")),
                    CorruptData);
}

TEST_CASE("record files round-trip") {
    wtest::TempDir tmp;
    std::vector<ImageRecord> recs = {{7, {"a", "b"}}, {8, {}}, {9, {"z"}}};
    write_records(tmp.file("r.jsonl"), recs);
    auto back = read_records(tmp.file("r.jsonl"));
    REQUIRE(back.size() == 3);
    CHECK(back[0].id == 7);
    CHECK(back[0].tags == std::vector<std::string>{"a", "b"});
    CHECK(back[1].tags.empty());
    CHECK(back[2].tags == std::vector<std::string>{"z"});
    CHECK_THROWS_AS(read_records(tmp.file("nope.jsonl")), IoError);
    write_file(tmp.file("bad.jsonl"), std::vector<uint8_t>{'n', 'o', '\n'});
    CHECK_THROWS_AS(read_records(tmp.file("bad.jsonl")), CorruptData);
}

TEST_CASE("targets spread unit mass over distinct in-vocab tags") {
    std::unordered_set<std::string> vocab = {"a", "b", "c"};
    std::vector<std::string> tags = {"c", "a", "c", "zz", "b"};
    auto tv = make_target(tags, vocab);
    REQUIRE(tv.has_value());
    CHECK(tv->tags == std::vector<std::string>{"c", "a", "b"});
    CHECK(tv->value == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(double(tv->tags.size()) * tv->value == doctest::Approx(1.0).epsilon(1e-12));

    for (size_t k = 1; k <= 20; ++k) {
        std::unordered_set<std::string> v;
        std::vector<std::string> ts;
        for (size_t i = 0; i < k; ++i) {
            v.insert("t" + std::to_string(i));
            ts.push_back("t" + std::to_string(i));
        }
        auto t = make_target(ts, v);
        REQUIRE(t.has_value());
        CHECK(std::abs(double(t->tags.size()) * t->value - 1.0) < 1e-12);
    }

    std::vector<std::string> oov = {"zz", "yy"};
    CHECK(!make_target(oov, vocab).has_value());
    CHECK(!make_target({}, vocab).has_value());
}

TEST_CASE("noise injection replaces the exact slot count, never in kind") {
    std::vector<ImageRecord> recs = make_corpus(500, 58);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    uint64_t slots = 0;
    for (const auto& r : recs) slots += r.tags.size();

    for (double p : {0.10, 0.25}) {
        auto noisy = inject_noise(recs, p, freqs, 4242);
        REQUIRE(noisy.size() == recs.size());
        uint64_t diffs = 0;
        for (size_t i = 0; i < recs.size(); ++i) {
            CHECK(noisy[i].id == recs[i].id);
            REQUIRE(noisy[i].tags.size() == recs[i].tags.size());
            for (size_t j = 0; j < recs[i].tags.size(); ++j) {
                if (noisy[i].tags[j] != recs[i].tags[j]) ++diffs;
            }
        }
        // replacements always pick a different tag, so the diff count is the
        // replacement count itself
        CHECK(diffs == uint64_t(std::llround(p * double(slots))));
    }

    auto same = inject_noise(recs, 0.0, freqs, 4242);
    for (size_t i = 0; i < recs.size(); ++i) CHECK(same[i].tags == recs[i].tags);

    CHECK_THROWS_AS(inject_noise(recs, -0.1, freqs, 0), InvalidArgument);
    CHECK_THROWS_AS(inject_noise(recs, 1.1, freqs, 0), InvalidArgument);
    FrequencyTable tiny =
        FrequencyTable::from_counts(std::vector<TagCount>{{"a", 1}});
    CHECK_THROWS_AS(inject_noise(recs, 0.1, tiny, 0), InvalidArgument);
}

TEST_CASE("noise draws follow the excluded marginal") {
    // Every slot holds tag x; the table adds four decoys with 1:2:3:4 mass.
    // Replacement draws must follow that ratio (chi-square, alpha = 0.01).
    const size_t n = 20000;
    std::vector<ImageRecord> recs(n);
    for (size_t i = 0; i < n; ++i) recs[i] = {i, {"x"}};
    std::vector<TagCount> counts = {
        {"x", 100}, {"a", 100}, {"b", 200}, {"c", 300}, {"d", 400}};
    FrequencyTable freqs = FrequencyTable::from_counts(counts);

    auto noisy = inject_noise(recs, 0.25, freqs, 20260816);
    std::map<std::string, uint64_t> got;
    uint64_t replaced = 0;
    for (size_t i = 0; i < n; ++i) {
        if (noisy[i].tags[0] != "x") {
            ++got[noisy[i].tags[0]];
            ++replaced;
        }
    }
    CHECK(replaced == 5000);
    const double expected[4] = {500, 1000, 1500, 2000};  // 1:2:3:4 of 5000
    const char* names[4] = {"a", "b", "c", "d"};
    double chi2 = 0.0;
    for (int i = 0; i < 4; ++i) {
        double diff = double(got[names[i]]) - expected[i];
        chi2 += diff * diff / expected[i];
    }
    CHECK(chi2 < 11.345);  // df=3 critical value at alpha = 0.01
}

TEST_CASE("noise injection is seed-deterministic") {
    std::vector<ImageRecord> recs = make_corpus(200, 59);
    FrequencyTable freqs = FrequencyTable::from_records(recs);
    auto a = inject_noise(recs, 0.2, freqs, 9);
    auto b = inject_noise(recs, 0.2, freqs, 9);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].tags == b[i].tags);
    auto c = inject_noise(recs, 0.2, freqs, 10);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i) any_diff |= a[i].tags != c[i].tags;
    CHECK(any_diff);
}

}  // TEST_SUITE
