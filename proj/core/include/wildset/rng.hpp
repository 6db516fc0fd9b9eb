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
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace wildset {

// Deterministic random source. Raw mt19937_64 output is mandated by the
// standard, so all distributions are derived here by hand; the standard
// library distribution objects are implementation-defined and would break
// cross-toolchain reproducibility of seeded pipelines.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1), 53 bits of resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound), unbiased. bound must be > 0.
    uint64_t next_below(uint64_t bound);

    /// Standard normal via Box-Muller.
    double next_gaussian();

    /// Index drawn proportionally to weights[i]; total must be > 0.
    size_t next_weighted(std::span<const double> cumulative_weights);

    /// Fisher-Yates permutation.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

uint64_t splitmix64(uint64_t& state);

/// Stable seed derivation: one root seed, one label per consumer. Extra
/// numeric components (shard ids, image indices) extend the label.
uint64_t derive_seed(uint64_t root, std::string_view label);
uint64_t derive_seed(uint64_t root, std::string_view label, uint64_t index);

}  // namespace wildset
