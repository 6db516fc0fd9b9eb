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
#include "wildset/pq.hpp"

namespace wildset {

struct OpqTrainParams {
    uint32_t out_dim = 0;        // rotated dimensionality (<= input dim)
    uint32_t m = 0;              // sub-quantizers of the attached codebook
    uint32_t ksub = 256;
    uint32_t alternations = 20;  // rotation updates; 0 = PCA truncation + plain PQ
    uint32_t kmeans_iters = 25;
    double tol = 1e-6;           // early stop on relative objective improvement
    uint64_t seed = 0;
    bool verbose = false;
};

/// Learned orthonormal projection (in_dim x out_dim) plus the product
/// quantizer trained in the rotated space. Training alternates codebook
/// updates (k-means++ once, then warm Lloyd) with the orthogonal Procrustes
/// solution for the rotation; the traced objective is the mean squared
/// reconstruction error of the full round trip, including what the
/// dimensionality reduction itself discards, and never increases.
struct OpqModel {
    uint32_t in_dim = 0;
    uint32_t out_dim = 0;
    std::vector<float> rotation;    // row-major in_dim x out_dim, columns orthonormal
    PqCodebook pq;
    std::vector<double> objective;  // one entry per alternation

    void rotate(const float* in, float* out) const;
    std::vector<float> rotate(std::span<const float> in) const;

    void serialize(ByteWriter& w) const;
    static OpqModel deserialize(ByteReader& r);
};

OpqModel opq_train(const float* data, size_t count, size_t dim,
                   const OpqTrainParams& params);

}  // namespace wildset
