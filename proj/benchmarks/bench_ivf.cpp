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

#include <cstdint>
#include <span>
#include <vector>

#include "wildset/ivf.hpp"
#include "wildset/pq.hpp"
#include "wildset/quantizer_set.hpp"
#include "wildset/rng.hpp"

namespace {

using namespace wildset;

std::vector<float> gaussian(uint64_t count, uint32_t dim, uint64_t seed) {
    std::vector<float> v(size_t(count) * dim);
    Rng rng(seed);
    for (float& x : v) x = float(rng.next_gaussian());
    return v;
}

constexpr uint64_t kCorpus = 20000;
constexpr uint32_t kRawDim = 128;

const IvfIndex& index_fixture() {
    static const IvfIndex index = [] {
        std::vector<float> data = gaussian(kCorpus, kRawDim, 11);
        QuantizerTrainSpec spec;
        spec.pca_out = 64;
        spec.rotated_dim = 32;
        spec.coarse_bits = 6;
        spec.residual_m = 8;
        spec.residual_ksub = 64;
        spec.opq_alternations = 4;
        spec.kmeans_iters = 10;
        spec.seed = 11;
        IvfIndex idx(train_quantizer_set(data.data(), kCorpus, kRawDim, spec));
        const QuantizerSet& qs = idx.quantizers();
        std::vector<uint8_t> code(qs.whitened_dim());
        for (uint64_t i = 0; i < kCorpus; ++i) {
            std::vector<float> w = qs.raw_to_whitened(
                std::span<const float>(data.data() + i * kRawDim, kRawDim));
            qs.storage.encode(w.data(), code.data());
            idx.add_storage(i, code);
        }
        idx.seal();
        return idx;
    }();
    return index;
}

void BM_Search(benchmark::State& state) {
    const IvfIndex& index = index_fixture();
    const QuantizerSet& qs = index.quantizers();
    const uint64_t nprobe = uint64_t(state.range(0));
    const std::vector<float> raw = gaussian(64, kRawDim, 12);
    std::vector<std::vector<float>> rotated;
    for (int i = 0; i < 64; ++i)
        rotated.push_back(qs.raw_to_rotated(
            std::span<const float>(raw.data() + size_t(i) * kRawDim, kRawDim)));
    size_t next = 0;
    for (auto _ : state) {
        std::vector<SearchHit> hits =
            index.search(rotated[next], 100, nprobe);
        benchmark::DoNotOptimize(hits.data());
        next = (next + 1) % rotated.size();
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Search)->Arg(1)->Arg(16)->Arg(64)->Arg(256)->Arg(4096);

void BM_AdcTable(benchmark::State& state) {
    const QuantizerSet& qs = index_fixture().quantizers();
    const std::vector<float> raw = gaussian(1, kRawDim, 13);
    const std::vector<float> rot =
        qs.raw_to_rotated(std::span<const float>(raw.data(), raw.size()));
    for (auto _ : state) {
        std::vector<double> table = qs.residual.adc_table(rot.data());
        benchmark::DoNotOptimize(table.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AdcTable);

void BM_AdcDistance(benchmark::State& state) {
    const QuantizerSet& qs = index_fixture().quantizers();
    const std::vector<float> raw = gaussian(1, kRawDim, 14);
    const std::vector<float> rot =
        qs.raw_to_rotated(std::span<const float>(raw.data(), raw.size()));
    const std::vector<double> table = qs.residual.adc_table(rot.data());
    Rng rng(15);
    std::vector<uint8_t> codes(size_t(1024) * qs.residual.m);
    for (uint8_t& c : codes) c = uint8_t(rng.next_below(qs.residual.ksub));
    for (auto _ : state) {
        double acc = 0.0;
        for (size_t i = 0; i < 1024; ++i)
            acc += qs.residual.adc_distance(table,
                                            codes.data() + i * qs.residual.m);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_AdcDistance);

}  // namespace
