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
#include <vector>

#include "wildset/io.hpp"

namespace wildset {

/// Product quantizer: the input is split into m contiguous blocks of dsub
/// dimensions, each quantized independently against ksub centroids.
struct PqCodebook {
    uint32_t m = 0;
    uint32_t ksub = 0;
    uint32_t dsub = 0;
    std::vector<float> centroids;  // m x ksub x dsub

    uint32_t dim() const { return m * dsub; }

    const float* sub_centroid(uint32_t sub, uint32_t code) const {
        return centroids.data() + (size_t(sub) * ksub + code) * dsub;
    }

    /// Nearest centroid per subspace; ties go to the lower code.
    void assign(const float* x, uint32_t* codes) const;
    /// Byte codes; requires ksub <= 256.
    void encode(const float* x, uint8_t* code) const;
    void decode(const uint8_t* code, float* x) const;
    void decode_idx(const uint32_t* codes, float* x) const;

    /// Per-subspace table of squared distances from the query to every
    /// centroid, laid out m x ksub. Distances of coded vectors then come
    /// from m lookups (see adc_distance).
    std::vector<double> adc_table(const float* query) const;
    double adc_distance(const std::vector<double>& table, const uint8_t* code) const {
        double acc = 0.0;
        for (uint32_t s = 0; s < m; ++s) acc += table[size_t(s) * ksub + code[s]];
        return acc;
    }

    /// Mean squared quantization error over a sample.
    double reconstruction_error(const float* data, size_t count) const;

    void serialize(ByteWriter& w) const;
    static PqCodebook deserialize(ByteReader& r);
};

struct PqTrainParams {
    uint32_t m = 0;
    uint32_t ksub = 0;
    uint32_t max_iters = 25;
    double tol = 1e-6;
    uint64_t seed = 0;
    bool verbose = false;
};

/// Independent k-means per subspace (k-means++ init).
PqCodebook pq_train(const float* data, size_t count, size_t dim,
                    const PqTrainParams& params);

/// Lloyd refinement of an existing codebook on (possibly new) data of the
/// same layout. Warm-starting from the previous centroids never increases
/// the quantization error on the given data.
void pq_retrain(PqCodebook& pq, const float* data, size_t count,
                const PqTrainParams& params);

}  // namespace wildset
