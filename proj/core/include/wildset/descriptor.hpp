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
#include <span>
#include <vector>

#include "wildset/io.hpp"

namespace wildset {

// ---------------------------------------------------------------------------
// Resize planning. Only the plan is computed; the caller owns pixel work.

struct ResizePlan {
    int width = 0;
    int height = 0;
};

/// Scale so the longer side equals target_long_side, preserving aspect
/// ratio. The shorter side is rounded half-up and clamped to >= 1.
ResizePlan plan_resize(int width, int height, int target_long_side = 400);

// ---------------------------------------------------------------------------
// R-MAC pooling over conv feature maps.

struct FeatureMap {
    uint32_t channels = 0;
    uint32_t height = 0;
    uint32_t width = 0;
    std::span<const float> values;  // channels * height * width, channel-major

    float at(uint32_t c, uint32_t y, uint32_t x) const {
        return values[(size_t(c) * height + y) * width + x];
    }
};

struct RmacRegion {
    int x = 0;      // left
    int y = 0;      // top
    int side = 0;   // square side length
};

/// Multi-scale grid of square regions. At scale s the side is about
/// 2*min(W,H)/(s+1); along each axis regions are spaced so consecutive
/// ones overlap by at least ~40% of the side.
std::vector<RmacRegion> rmac_grid(int width, int height, int scales = 3);

/// Per-region channel-wise max pooling; each region vector is
/// L2-normalized, the region vectors are summed and the sum is
/// L2-normalized. Output has `channels` entries and unit norm.
std::vector<float> rmac_pool(const FeatureMap& map, int scales = 3);

// ---------------------------------------------------------------------------
// PCA whitening.

struct PcaModel {
    uint32_t in_dim = 0;
    uint32_t out_dim = 0;
    std::vector<float> mean;    // in_dim
    std::vector<float> basis;   // out_dim x in_dim, rows = principal directions
    std::vector<float> scale;   // out_dim whitening scales (1/sqrt(floored eigenvalue))
    uint32_t floored_eigenvalues = 0;  // how many hit the floor during training

    /// out[j] = scale[j] * dot(basis_row_j, in - mean)
    void apply(const float* in, float* out) const;
    std::vector<float> apply(std::span<const float> in) const;

    void serialize(ByteWriter& w) const;
    static PcaModel deserialize(ByteReader& r);
};

/// Covariance uses the 1/(n-1) estimator; eigenvalues are floored at
/// eig_floor before the inverse square root. Requires count > out_dim.
PcaModel pca_train(const float* data, size_t count, size_t dim, size_t out_dim,
                   double eig_floor = 1e-10);

// ---------------------------------------------------------------------------
// 8-bit scalar quantization for descriptor storage.

struct ScalarQuantizer {
    std::vector<float> vmin;  // per-dimension lower bound
    std::vector<float> step;  // per-dimension bucket width; 0 on degenerate dims

    /// Per-dimension min/max over the training sample.
    static ScalarQuantizer fit(const float* data, size_t count, size_t dim);

    uint32_t dim() const { return static_cast<uint32_t>(vmin.size()); }

    /// Returns the number of clamped (out-of-range) values.
    size_t encode(const float* v, uint8_t* code) const;
    /// Bucket midpoints; degenerate dimensions decode to vmin.
    void decode(const uint8_t* code, float* v) const;

    void serialize(ByteWriter& w) const;
    static ScalarQuantizer deserialize(ByteReader& r);
};

// ---------------------------------------------------------------------------

/// x /= ||x||; leaves all-zero input untouched and returns false for it.
bool l2_normalize(std::span<float> v);
double l2_norm(std::span<const float> v);

}  // namespace wildset
