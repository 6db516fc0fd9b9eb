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

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wildset/rng.hpp"
#include "wildset/sampler.hpp"

namespace {

using namespace wildset;

// Zipf-ish corpus: 500 tags, ~2e5 single-tag records.
const std::vector<ImageRecord>& corpus() {
    static const std::vector<ImageRecord> recs = [] {
        const uint32_t n_tags = 500;
        double harmonic = 0.0;
        for (uint32_t r = 1; r <= n_tags; ++r) harmonic += 1.0 / r;
        std::vector<ImageRecord> out;
        uint64_t id = 0;
        char name[16];
        for (uint32_t r = 1; r <= n_tags; ++r) {
            std::snprintf(name, sizeof name, "t%03u", r);
            const auto f = std::max<int64_t>(
                1, llround(2e5 / (harmonic * double(r))));
            for (int64_t i = 0; i < f; ++i) {
                ImageRecord rec;
                rec.id = id++;
                rec.tags.push_back(name);
                out.push_back(std::move(rec));
            }
        }
        return out;
    }();
    return recs;
}

const FrequencyTable& freqs() {
    static const FrequencyTable table = FrequencyTable::from_records(corpus());
    return table;
}

void BM_SelectThreshold(benchmark::State& state) {
    const std::vector<ImageRecord>& recs = corpus();
    const uint64_t target = 2 * recs.size();
    for (auto _ : state) {
        double t =
            select_threshold(freqs(), recs, target, SampleMode::kUniform, 7);
        benchmark::DoNotOptimize(t);
    }
    state.SetItemsProcessed(state.iterations() * int64_t(recs.size()));
}
BENCHMARK(BM_SelectThreshold);

void BM_EpochListStats(benchmark::State& state) {
    const ReplicationPlan plan =
        make_plan(freqs(), double(freqs().max_count()), SampleMode::kSqrt);
    for (auto _ : state) {
        EpochStats stats = epoch_list_stats(corpus(), freqs(), plan, 7);
        benchmark::DoNotOptimize(stats.copies);
    }
    state.SetItemsProcessed(state.iterations() * int64_t(corpus().size()));
}
BENCHMARK(BM_EpochListStats);

void BM_BuildEpochList(benchmark::State& state) {
    const ReplicationPlan plan =
        make_plan(freqs(), double(freqs().max_count()), SampleMode::kSqrt);
    for (auto _ : state) {
        EpochList list = build_epoch_list(corpus(), freqs(), plan, 7);
        benchmark::DoNotOptimize(list.ids.data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t(corpus().size()));
}
BENCHMARK(BM_BuildEpochList);

void BM_InjectNoise(benchmark::State& state) {
    for (auto _ : state) {
        std::vector<ImageRecord> noisy =
            inject_noise(corpus(), 0.25, freqs(), 7);
        benchmark::DoNotOptimize(noisy.data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t(corpus().size()));
}
BENCHMARK(BM_InjectNoise);

}  // namespace
