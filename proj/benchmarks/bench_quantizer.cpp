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

#include "wildset/kmeans.hpp"
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

const QuantizerSet& quantizers() {
    static const QuantizerSet qs = [] {
        std::vector<float> data = gaussian(4000, 128, 1);
        QuantizerTrainSpec spec;
        spec.pca_out = 64;
        spec.rotated_dim = 32;
        spec.coarse_bits = 6;
        spec.residual_m = 8;
        spec.residual_ksub = 64;
        spec.opq_alternations = 4;
        spec.kmeans_iters = 10;
        spec.seed = 1;
        return train_quantizer_set(data.data(), 4000, 128, spec);
    }();
    return qs;
}

void BM_RawToRotated(benchmark::State& state) {
    const QuantizerSet& qs = quantizers();
    const std::vector<float> q = gaussian(1, qs.raw_dim(), 2);
    for (auto _ : state) {
        std::vector<float> rot =
            qs.raw_to_rotated(std::span<const float>(q.data(), q.size()));
        benchmark::DoNotOptimize(rot.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RawToRotated);

void BM_StorageEncode(benchmark::State& state) {
    const QuantizerSet& qs = quantizers();
    const std::vector<float> q = gaussian(1, qs.raw_dim(), 3);
    const std::vector<float> w =
        qs.raw_to_whitened(std::span<const float>(q.data(), q.size()));
    std::vector<uint8_t> code(qs.whitened_dim());
    for (auto _ : state) {
        benchmark::DoNotOptimize(qs.storage.encode(w.data(), code.data()));
        benchmark::DoNotOptimize(code.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StorageEncode);

void BM_StorageToRotated(benchmark::State& state) {
    const QuantizerSet& qs = quantizers();
    const std::vector<float> q = gaussian(1, qs.raw_dim(), 4);
    const std::vector<float> w =
        qs.raw_to_whitened(std::span<const float>(q.data(), q.size()));
    std::vector<uint8_t> code(qs.whitened_dim());
    qs.storage.encode(w.data(), code.data());
    for (auto _ : state) {
        std::vector<float> rot = qs.storage_to_rotated(
            std::span<const uint8_t>(code.data(), code.size()));
        benchmark::DoNotOptimize(rot.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StorageToRotated);

void BM_AssignNearest(benchmark::State& state) {
    const size_t n = size_t(state.range(0));
    const size_t dim = 32, k = 256;
    const std::vector<float> data = gaussian(n, dim, 5);
    const std::vector<float> centroids = gaussian(k, dim, 6);
    std::vector<uint32_t> assign(n);
    for (auto _ : state) {
        assign_nearest(data.data(), n, dim, centroids.data(), k, assign.data());
        benchmark::DoNotOptimize(assign.data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t(n));
}
BENCHMARK(BM_AssignNearest)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
