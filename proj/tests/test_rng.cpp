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
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "wildset/rng.hpp"

using namespace wildset;

TEST_SUITE("rng") {

TEST_CASE("splitmix64 matches the published reference sequence") {
    // First outputs for state 0 from the original public-domain
    // implementation.
    uint64_t state = 0;
    CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
    CHECK(splitmix64(state) == 0x06c45d188009454fULL);
    CHECK(splitmix64(state) == 0xf88bb8a8724c81ecULL);
}

TEST_CASE("identical seeds replay, different seeds diverge") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        uint64_t va = a.next_u64();
        all_equal &= (va == b.next_u64());
        any_diff |= (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("next_double stays in [0, 1)") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        double u = rng.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("next_below respects the bound and hits every residue") {
    Rng rng(11);
    std::set<uint64_t> seen;
    for (int i = 0; i < 10000; ++i) {
        uint64_t v = rng.next_below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK(rng.next_below(1) == 0);
}

TEST_CASE("next_below is unbiased to sampling accuracy") {
    Rng rng(13);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += double(rng.next_below(1000));
    double mean = sum / n;  // expect 499.5, sd of mean ~ 288.7/sqrt(n)
    CHECK(std::abs(mean - 499.5) < 4.0 * 288.675 / std::sqrt(double(n)));
}

TEST_CASE("next_weighted follows the cumulative weights") {
    Rng rng(17);
    std::vector<double> cum = {1.0, 3.0, 6.0};  // masses 1, 2, 3
    const int n = 60000;
    std::vector<int> hits(3, 0);
    for (int i = 0; i < n; ++i) {
        size_t k = rng.next_weighted(cum);
        REQUIRE(k < 3);
        ++hits[k];
    }
    // 4-sigma binomial bounds.
    auto within = [&](int got, double p) {
        double sd = std::sqrt(n * p * (1 - p));
        return std::abs(got - n * p) < 4.0 * sd;
    };
    CHECK(within(hits[0], 1.0 / 6));
    CHECK(within(hits[1], 2.0 / 6));
    CHECK(within(hits[2], 3.0 / 6));
}

TEST_CASE("next_weighted never selects zero-mass entries") {
    Rng rng(19);
    std::vector<double> cum = {1.0, 1.0, 2.0};  // middle entry has mass 0
    for (int i = 0; i < 20000; ++i) CHECK(rng.next_weighted(cum) != 1);
}

TEST_CASE("gaussian moments") {
    Rng rng(23);
    const int n = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double g = rng.next_gaussian();
        s1 += g;
        s2 += g * g;
    }
    double mean = s1 / n;
    double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("shuffle permutes and is seed-stable") {
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> w = v;
    Rng a(29);
    a.shuffle(v);
    std::vector<int> first = v;
    CHECK(v != w);  // astronomically unlikely to be identity
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == w);

    std::vector<int> again(100);
    std::iota(again.begin(), again.end(), 0);
    Rng b(29);
    b.shuffle(again);
    CHECK(again == first);
}

TEST_CASE("shuffle is roughly uniform over 3! orders") {
    std::map<std::vector<int>, int> counts;
    const int n = 12000;
    Rng rng(31);
    for (int i = 0; i < n; ++i) {
        std::vector<int> v = {0, 1, 2};
        uint64_t seed = rng.next_u64();
        Rng s(seed);
        s.shuffle(v);
        counts[v]++;
    }
    CHECK(counts.size() == 6);
    for (const auto& [perm, c] : counts) {
        CHECK(c > n / 6 - 350);  // ~8.6 sigma
        CHECK(c < n / 6 + 350);
    }
}

TEST_CASE("derive_seed separates labels and indices") {
    uint64_t root = 1234;
    CHECK(derive_seed(root, "alpha") == derive_seed(root, "alpha"));
    CHECK(derive_seed(root, "alpha") != derive_seed(root, "beta"));
    CHECK(derive_seed(root, "alpha") != derive_seed(root + 1, "alpha"));
    std::set<uint64_t> seeds;
    for (uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(root, "epoch", i));
    CHECK(seeds.size() == 1000);
    CHECK(derive_seed(root, "epoch", 5) == derive_seed(root, "epoch", 5));
    CHECK(derive_seed(root, "epoch", 5) != derive_seed(root, "shard", 5));
}

}  // TEST_SUITE
