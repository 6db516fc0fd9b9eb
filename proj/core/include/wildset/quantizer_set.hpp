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
#include <filesystem>
#include <span>
#include <vector>

#include "wildset/descriptor.hpp"
#include "wildset/opq.hpp"
#include "wildset/pq.hpp"

namespace wildset {

/// Everything needed to move a descriptor between representations:
///
///   raw float  --pca-->  whitened  --storage------->  u8 codes   (at rest)
///                        whitened  --norm + opq-->    rotated    (search space)
///
/// plus the coarse codebook that partitions the rotated space into cells
/// (two sub-quantizers; the cell id packs both codes) and the residual
/// codebook that encodes what the cell centroid misses. Whitened vectors
/// are L2-normalized before rotation so the squared-distance thresholds
/// downstream live on the unit sphere.
struct QuantizerSet {
    PcaModel pca;
    ScalarQuantizer storage;   // over the whitened space
    OpqModel opq;              // whitened -> rotated
    PqCodebook coarse;         // m = 2, ksub = 2^coarse_bits
    PqCodebook residual;
    uint32_t coarse_bits = 0;

    uint32_t raw_dim() const { return pca.in_dim; }
    uint32_t whitened_dim() const { return pca.out_dim; }
    uint32_t rotated_dim() const { return opq.out_dim; }

    std::vector<float> raw_to_whitened(std::span<const float> raw) const;
    /// L2-normalizes a copy, then rotates.
    std::vector<float> whitened_to_rotated(std::span<const float> whitened) const;
    /// Storage codes back to the rotated search space: decode, normalize, rotate.
    std::vector<float> storage_to_rotated(std::span<const uint8_t> code) const;
    /// The full chain queries share with indexed vectors: whiten, round-trip
    /// through the storage quantizer, normalize, rotate.
    std::vector<float> raw_to_rotated(std::span<const float> raw) const;

    void serialize(ByteWriter& w) const;
    static QuantizerSet deserialize(ByteReader& r);
    void save(const std::filesystem::path& path) const;
    static QuantizerSet load(const std::filesystem::path& path);
};

struct QuantizerTrainSpec {
    uint32_t pca_out = 512;
    uint32_t rotated_dim = 256;
    uint32_t coarse_bits = 14;   // codes per half; cell count is 4^bits
    uint32_t residual_m = 32;
    uint32_t residual_ksub = 256;
    uint32_t opq_alternations = 20;
    uint32_t kmeans_iters = 25;
    double pca_eig_floor = 1e-10;
    uint64_t seed = 0;
    bool verbose = false;
};

/// Full training pass over raw descriptors: PCA whitening, storage range
/// fitting, OPQ, then the coarse codebook on rotated vectors and the
/// residual codebook on what the coarse assignment leaves over.
QuantizerSet train_quantizer_set(const float* raw, size_t count, size_t dim,
                                 const QuantizerTrainSpec& spec);

}  // namespace wildset
