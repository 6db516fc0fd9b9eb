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

#include "wildset/rng.hpp"

#include <algorithm>
#include <cmath>

#include "wildset/common.hpp"

namespace wildset {

uint64_t Rng::next_below(uint64_t bound) {
    if (bound == 0) throw InvalidArgument("Rng::next_below: bound must be > 0");
    // Rejection sampling on the top of the range keeps the draw unbiased.
    uint64_t threshold = -bound % bound;
    for (;;) {
        uint64_t r = next_u64();
        if (r >= threshold) return r % bound;
    }
}

double Rng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    double mag = std::sqrt(-2.0 * std::log(u1));
    double z0 = mag * std::cos(2.0 * M_PI * u2);
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return z0;
}

size_t Rng::next_weighted(std::span<const double> cumulative_weights) {
    if (cumulative_weights.empty() || cumulative_weights.back() <= 0.0) {
        throw InvalidArgument("Rng::next_weighted: total weight must be > 0");
    }
    double u = next_double() * cumulative_weights.back();
    auto it = std::upper_bound(cumulative_weights.begin(), cumulative_weights.end(), u);
    if (it == cumulative_weights.end()) --it;
    return static_cast<size_t>(it - cumulative_weights.begin());
}

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t root, std::string_view label) {
    // FNV-1a over the label, folded into the root through splitmix rounds.
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    uint64_t state = root ^ h;
    splitmix64(state);
    return splitmix64(state);
}

uint64_t derive_seed(uint64_t root, std::string_view label, uint64_t index) {
    uint64_t state = derive_seed(root, label) ^ (index * 0x9e3779b97f4a7c15ULL);
    return splitmix64(state);
}

}  // namespace wildset
