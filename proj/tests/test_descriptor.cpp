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
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "wildset/descriptor.hpp"
#include "wildset/io.hpp"
#include "wildset/rng.hpp"

using namespace wildset;

namespace {

// Oracle: per-region channelwise max with explicit pixel loops, region
// vectors L2-normalized, summed, sum normalized. Independent of the
// library's pooling loops.
std::vector<double> naive_rmac(const FeatureMap& map, int scales) {
    std::vector<RmacRegion> regions =
        rmac_grid(int(map.width), int(map.height), scales);
    std::vector<double> acc(map.channels, 0.0);
    for (const RmacRegion& r : regions) {
        std::vector<double> best(map.channels,
                                 -std::numeric_limits<double>::infinity());
        for (uint32_t c = 0; c < map.channels; ++c)
            for (int y = r.y; y < r.y + r.side; ++y)
                for (int x = r.x; x < r.x + r.side; ++x)
                    best[c] = std::max(best[c], double(map.at(c, y, x)));
        double norm = 0.0;
        for (double v : best) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (uint32_t c = 0; c < map.channels; ++c) acc[c] += best[c] / norm;
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& v : acc) v /= norm;
    return acc;
}

// Column mean / covariance of transformed data, straight double loops.
void mean_cov(const std::vector<float>& rows, size_t count, size_t dim,
              std::vector<double>& mean, std::vector<double>& cov) {
    mean.assign(dim, 0.0);
    cov.assign(dim * dim, 0.0);
    for (size_t i = 0; i < count; ++i)
        for (size_t d = 0; d < dim; ++d) mean[d] += rows[i * dim + d];
    for (double& m : mean) m /= double(count);
    for (size_t i = 0; i < count; ++i)
        for (size_t a = 0; a < dim; ++a)
            for (size_t b = 0; b < dim; ++b)
                cov[a * dim + b] += (rows[i * dim + a] - mean[a]) *
                                    (rows[i * dim + b] - mean[b]);
    for (double& c : cov) c /= double(count);
}

}  // namespace

TEST_SUITE("descriptor") {

TEST_CASE("plan_resize scales the longer side to the target") {
    auto p = plan_resize(800, 600);
    CHECK(p.width == 400);
    CHECK(p.height == 300);
    p = plan_resize(600, 800);
    CHECK(p.width == 300);
    CHECK(p.height == 400);
    p = plan_resize(500, 500);
    CHECK(p.width == 400);
    CHECK(p.height == 400);
    p = plan_resize(200, 100);  // upscale
    CHECK(p.width == 400);
    CHECK(p.height == 200);
    p = plan_resize(400, 299);  // identity on the long side
    CHECK(p.width == 400);
    CHECK(p.height == 299);
}

TEST_CASE("plan_resize rounds half up and clamps to one pixel") {
    auto p = plan_resize(32, 5);  // 5 * 400/32 = 62.5
    CHECK(p.width == 400);
    CHECK(p.height == 63);
    p = plan_resize(4000, 1);  // 0.1 -> clamp
    CHECK(p.width == 400);
    CHECK(p.height == 1);
    CHECK_THROWS_AS(plan_resize(0, 10), InvalidArgument);
    CHECK_THROWS_AS(plan_resize(10, -1), InvalidArgument);
}

TEST_CASE("rmac_grid covers the map with overlapping squares") {
    for (auto [W, H] : {std::pair{13, 7}, {32, 32}, {7, 13}, {40, 9}}) {
        for (int scales : {1, 2, 3}) {
            std::vector<RmacRegion> regions = rmac_grid(W, H, scales);
            REQUIRE(!regions.empty());
            int min_x = W, min_y = H, max_xe = 0, max_ye = 0;
            for (const RmacRegion& r : regions) {
                CHECK(r.side >= 1);
                CHECK(r.x >= 0);
                CHECK(r.y >= 0);
                CHECK(r.x + r.side <= W);
                CHECK(r.y + r.side <= H);
                min_x = std::min(min_x, r.x);
                min_y = std::min(min_y, r.y);
                max_xe = std::max(max_xe, r.x + r.side);
                max_ye = std::max(max_ye, r.y + r.side);
            }
            // The grid reaches every border of the map.
            CHECK(min_x == 0);
            CHECK(min_y == 0);
            CHECK(max_xe == W);
            CHECK(max_ye == H);
        }
    }
}

TEST_CASE("rmac_grid consecutive regions overlap by at least ~40%") {
    std::vector<RmacRegion> regions = rmac_grid(64, 48, 3);
    // Group by (side, y) and check consecutive x positions.
    std::sort(regions.begin(), regions.end(), [](auto& a, auto& b) {
        return std::tie(a.side, a.y, a.x) < std::tie(b.side, b.y, b.x);
    });
    for (size_t i = 1; i < regions.size(); ++i) {
        const auto& a = regions[i - 1];
        const auto& b = regions[i];
        if (a.side == b.side && a.y == b.y) {
            int overlap = a.x + a.side - b.x;
            CHECK(overlap >= int(std::floor(0.39 * a.side)));
        }
    }
}

TEST_CASE("single-scale square map pools to one max-pooled region") {
    std::vector<RmacRegion> regions = rmac_grid(2, 2, 1);
    REQUIRE(regions.size() == 1);
    CHECK(regions[0].x == 0);
    CHECK(regions[0].y == 0);
    CHECK(regions[0].side == 2);
}

TEST_CASE("rmac_pool matches the naive pooling oracle") {
    std::vector<float> values = wtest::gaussian_data(1, size_t(8) * 9 * 13, 99);
    FeatureMap map{8, 9, 13, values};
    for (int scales : {1, 2, 3}) {
        std::vector<float> got = rmac_pool(map, scales);
        std::vector<double> want = naive_rmac(map, scales);
        REQUIRE(got.size() == want.size());
        for (size_t c = 0; c < got.size(); ++c)
            CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-5));
        double norm = 0.0;
        for (float v : got) norm += double(v) * v;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("pca whitening decorrelates to unit covariance") {
    const size_t n = 4000, dim = 8;
    // Correlated data: x = A g, with a fixed random mixing matrix.
    std::vector<float> mix = wtest::gaussian_data(dim, dim, 5);
    std::vector<float> data(n * dim, 0.0f);
    Rng rng(6);
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> g(dim);
        for (auto& v : g) v = rng.next_gaussian();
        for (size_t a = 0; a < dim; ++a) {
            double acc = 1.5;  // nonzero mean
            for (size_t b = 0; b < dim; ++b) acc += mix[a * dim + b] * g[b];
            data[i * dim + a] = float(acc);
        }
    }
    PcaModel pca = pca_train(data.data(), n, dim, dim);
    std::vector<float> out(n * dim);
    for (size_t i = 0; i < n; ++i)
        pca.apply(data.data() + i * dim, out.data() + i * dim);

    std::vector<double> mean, cov;
    mean_cov(out, n, dim, mean, cov);
    for (size_t d = 0; d < dim; ++d) CHECK(std::abs(mean[d]) < 1e-4);
    for (size_t a = 0; a < dim; ++a)
        for (size_t b = 0; b < dim; ++b) {
            double want = a == b ? 1.0 : 0.0;
            CHECK(std::abs(cov[a * dim + b] - want) < 5e-2);
        }
}

TEST_CASE("pca truncation keeps the leading-variance directions") {
    const size_t n = 3000, dim = 6;
    // Variance concentrated on two synthetic axes.
    std::vector<float> data(n * dim, 0.0f);
    Rng rng(8);
    for (size_t i = 0; i < n; ++i) {
        double big = rng.next_gaussian() * 10.0;
        double mid = rng.next_gaussian() * 3.0;
        for (size_t d = 0; d < dim; ++d) {
            double noise = rng.next_gaussian() * 0.01;
            data[i * dim + d] =
                float(noise + (d == 1 ? big : 0.0) + (d == 4 ? mid : 0.0));
        }
    }
    PcaModel pca = pca_train(data.data(), n, dim, 2);
    CHECK(pca.out_dim == 2);
    // Leading basis rows align with axes 1 and 4.
    CHECK(std::abs(pca.basis[1]) > 0.99);
    CHECK(std::abs(pca.basis[dim + 4]) > 0.99);
    // Whitened output still has identity covariance.
    std::vector<float> out(n * 2);
    for (size_t i = 0; i < n; ++i)
        pca.apply(data.data() + i * dim, out.data() + i * 2);
    std::vector<double> mean, cov;
    mean_cov(out, n, 2, mean, cov);
    CHECK(std::abs(cov[0] - 1.0) < 5e-2);
    CHECK(std::abs(cov[3] - 1.0) < 5e-2);
    CHECK(std::abs(cov[1]) < 5e-2);
}

TEST_CASE("pca training is deterministic and sign-canonical") {
    std::vector<float> data = wtest::gaussian_data(500, 10, 77);
    PcaModel a = pca_train(data.data(), 500, 10, 4);
    PcaModel b = pca_train(data.data(), 500, 10, 4);
    CHECK(a.basis == b.basis);
    CHECK(a.mean == b.mean);
    CHECK(a.scale == b.scale);
}

TEST_CASE("pca rejects too-few samples and handles degenerate dims") {
    std::vector<float> data = wtest::gaussian_data(8, 8, 3);
    CHECK_THROWS_AS(pca_train(data.data(), 8, 8, 8), InvalidArgument);

    // A constant dimension must not produce NaN or inf anywhere.
    std::vector<float> flat = wtest::gaussian_data(200, 4, 4);
    for (size_t i = 0; i < 200; ++i) flat[i * 4 + 2] = 5.0f;
    PcaModel pca = pca_train(flat.data(), 200, 4, 4);
    for (float v : pca.basis) CHECK(std::isfinite(v));
    for (float v : pca.scale) CHECK(std::isfinite(v));
    std::vector<float> out(4);
    pca.apply(flat.data(), out.data());
    for (float v : out) CHECK(std::isfinite(v));
}

TEST_CASE("pca serialize round-trips") {
    std::vector<float> data = wtest::gaussian_data(300, 6, 21);
    PcaModel a = pca_train(data.data(), 300, 6, 3);
    ByteWriter w;
    a.serialize(w);
    ByteReader r(w.data());
    PcaModel b = PcaModel::deserialize(r);
    CHECK(a.basis == b.basis);
    CHECK(a.mean == b.mean);
    CHECK(a.scale == b.scale);
    CHECK(a.in_dim == b.in_dim);
    CHECK(a.out_dim == b.out_dim);
}

TEST_CASE("scalar quantizer decodes to bucket midpoints within half a step") {
    std::vector<float> data = wtest::gaussian_data(1000, 5, 31, 2.0);
    ScalarQuantizer sq = ScalarQuantizer::fit(data.data(), 1000, 5);
    CHECK(sq.dim() == 5);
    std::vector<uint8_t> code(5);
    std::vector<float> back(5);
    for (size_t i = 0; i < 1000; ++i) {
        size_t clamped = sq.encode(data.data() + i * 5, code.data());
        CHECK(clamped == 0);  // fitted on this data, nothing out of range
        sq.decode(code.data(), back.data());
        for (size_t d = 0; d < 5; ++d) {
            double step = sq.step[d];
            CHECK(std::abs(back[d] - data[i * 5 + d]) <= step * 0.5 + 1e-6);
        }
    }
}

TEST_CASE("scalar quantizer clamps out-of-range values") {
    std::vector<float> data = {0.0f, 1.0f, 0.5f, 0.25f};  // dim 1, 4 samples
    ScalarQuantizer sq = ScalarQuantizer::fit(data.data(), 4, 1);
    float lo = -5.0f, hi = 7.0f;
    uint8_t code = 0;
    CHECK(sq.encode(&lo, &code) == 1);
    CHECK(code == 0);
    CHECK(sq.encode(&hi, &code) == 1);
    CHECK(code == 255);
    float mid = 0.5f;
    CHECK(sq.encode(&mid, &code) == 0);
}

TEST_CASE("scalar quantizer codes are monotone in the value") {
    std::vector<float> data;
    for (int i = 0; i < 256; ++i) data.push_back(float(i) * 0.1f);
    ScalarQuantizer sq = ScalarQuantizer::fit(data.data(), data.size(), 1);
    uint8_t prev = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        uint8_t c;
        sq.encode(&data[i], &c);
        if (i > 0) CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("scalar quantizer serialize round-trips; constant dims decode to vmin") {
    std::vector<float> data(100 * 2);
    for (size_t i = 0; i < 100; ++i) {
        data[i * 2] = float(i);
        data[i * 2 + 1] = 3.25f;  // constant dim
    }
    ScalarQuantizer sq = ScalarQuantizer::fit(data.data(), 100, 2);
    uint8_t code[2];
    float back[2];
    sq.encode(data.data(), code);
    sq.decode(code, back);
    CHECK(back[1] == 3.25f);

    ByteWriter w;
    sq.serialize(w);
    ByteReader r(w.data());
    ScalarQuantizer sq2 = ScalarQuantizer::deserialize(r);
    CHECK(sq2.vmin == sq.vmin);
    CHECK(sq2.step == sq.step);
}

TEST_CASE("l2_normalize") {
    std::vector<float> v = {3.0f, 4.0f};
    CHECK(l2_normalize(v));
    CHECK(v[0] == doctest::Approx(0.6f));
    CHECK(v[1] == doctest::Approx(0.8f));
    std::vector<float> z = {0.0f, 0.0f};
    CHECK(!l2_normalize(z));
    CHECK(z[0] == 0.0f);
    CHECK(l2_norm(std::span<const float>(v)) == doctest::Approx(1.0));
}

}  // TEST_SUITE
