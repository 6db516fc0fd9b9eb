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

#include "wildset/quantizer_set.hpp"

#include <string>

#include "wildset/common.hpp"
#include "wildset/rng.hpp"

namespace wildset {

namespace {
constexpr char kMagic[4] = {'W', 'S', 'Q', '1'};
constexpr uint32_t kVersionTag = 1;
}  // namespace

std::vector<float> QuantizerSet::raw_to_whitened(std::span<const float> raw) const {
    return pca.apply(raw);
}

std::vector<float> QuantizerSet::whitened_to_rotated(
    std::span<const float> whitened) const {
    std::vector<float> unit(whitened.begin(), whitened.end());
    l2_normalize(unit);
    return opq.rotate(std::span<const float>(unit));
}

std::vector<float> QuantizerSet::storage_to_rotated(
    std::span<const uint8_t> code) const {
    if (code.size() != storage.dim()) {
        throw InvalidArgument("storage_to_rotated: expected " +
                              std::to_string(storage.dim()) + " bytes, got " +
                              std::to_string(code.size()));
    }
    std::vector<float> whitened(storage.dim());
    storage.decode(code.data(), whitened.data());
    l2_normalize(whitened);
    return opq.rotate(std::span<const float>(whitened));
}

std::vector<float> QuantizerSet::raw_to_rotated(std::span<const float> raw) const {
    const std::vector<float> whitened = pca.apply(raw);
    std::vector<uint8_t> code(storage.dim());
    storage.encode(whitened.data(), code.data());
    return storage_to_rotated(code);
}

void QuantizerSet::serialize(ByteWriter& w) const {
    w.bytes({reinterpret_cast<const uint8_t*>(kMagic), 4});
    w.u32(kVersionTag);
    w.u32(coarse_bits);
    pca.serialize(w);
    storage.serialize(w);
    opq.serialize(w);
    coarse.serialize(w);
    residual.serialize(w);
}

QuantizerSet QuantizerSet::deserialize(ByteReader& r) {
    r.expect_magic(kMagic, "quantizer set");
    uint32_t version = r.u32();
    if (version != kVersionTag) {
        throw CorruptData("quantizer set: unsupported version " +
                          std::to_string(version));
    }
    QuantizerSet q;
    q.coarse_bits = r.u32();
    q.pca = PcaModel::deserialize(r);
    q.storage = ScalarQuantizer::deserialize(r);
    q.opq = OpqModel::deserialize(r);
    q.coarse = PqCodebook::deserialize(r);
    q.residual = PqCodebook::deserialize(r);
    return q;
}

void QuantizerSet::save(const std::filesystem::path& path) const {
    ByteWriter w;
    serialize(w);
    write_file(path, w.take());
}

QuantizerSet QuantizerSet::load(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    ByteReader r(bytes);
    QuantizerSet q = deserialize(r);
    if (r.remaining() != 0) {
        throw CorruptData("quantizer set: trailing bytes in " + path.string());
    }
    return q;
}

QuantizerSet train_quantizer_set(const float* raw, size_t count, size_t dim,
                                 const QuantizerTrainSpec& spec) {
    if (spec.coarse_bits < 1 || spec.coarse_bits > 16) {
        throw InvalidArgument("train_quantizer_set: coarse_bits must be in [1, 16]");
    }
    if (spec.rotated_dim % 2 != 0) {
        throw InvalidArgument("train_quantizer_set: rotated_dim must be even");
    }
    if (spec.residual_m < 1 || spec.rotated_dim % spec.residual_m != 0) {
        throw InvalidArgument(
            "train_quantizer_set: rotated_dim must be divisible by residual_m");
    }

    QuantizerSet q;
    q.coarse_bits = spec.coarse_bits;

    if (spec.verbose) log::info("quantizers: PCA %zu -> %u", dim, spec.pca_out);
    q.pca = pca_train(raw, count, dim, spec.pca_out, spec.pca_eig_floor);

    std::vector<float> whitened(count * spec.pca_out);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < int64_t(count); ++i) {
        q.pca.apply(raw + size_t(i) * dim, whitened.data() + size_t(i) * spec.pca_out);
    }

    q.storage = ScalarQuantizer::fit(whitened.data(), count, spec.pca_out);

    // Everything downstream of storage sees unit-norm whitened vectors.
    for (size_t i = 0; i < count; ++i) {
        l2_normalize(std::span<float>(whitened.data() + i * spec.pca_out,
                                      spec.pca_out));
    }

    if (spec.verbose) {
        log::info("quantizers: OPQ %u -> %u (%u alternations)", spec.pca_out,
                  spec.rotated_dim, spec.opq_alternations);
    }
    OpqTrainParams op;
    op.out_dim = spec.rotated_dim;
    op.m = spec.residual_m;
    op.ksub = spec.residual_ksub;
    op.alternations = spec.opq_alternations;
    op.kmeans_iters = spec.kmeans_iters;
    op.seed = derive_seed(spec.seed, "opq");
    op.verbose = spec.verbose;
    q.opq = opq_train(whitened.data(), count, spec.pca_out, op);

    std::vector<float> rotated(count * spec.rotated_dim);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < int64_t(count); ++i) {
        q.opq.rotate(whitened.data() + size_t(i) * spec.pca_out,
                     rotated.data() + size_t(i) * spec.rotated_dim);
    }

    if (spec.verbose) {
        log::info("quantizers: coarse codebook 2 x 2^%u", spec.coarse_bits);
    }
    PqTrainParams cp;
    cp.m = 2;
    cp.ksub = uint32_t(1) << spec.coarse_bits;
    cp.max_iters = spec.kmeans_iters;
    cp.seed = derive_seed(spec.seed, "coarse");
    cp.verbose = spec.verbose;
    q.coarse = pq_train(rotated.data(), count, spec.rotated_dim, cp);

    // Residuals against the assigned cell centroid.
    std::vector<float> residuals(count * spec.rotated_dim);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < int64_t(count); ++i) {
        uint32_t codes[2];
        const float* x = rotated.data() + size_t(i) * spec.rotated_dim;
        q.coarse.assign(x, codes);
        std::vector<float> cell(spec.rotated_dim);
        q.coarse.decode_idx(codes, cell.data());
        float* out = residuals.data() + size_t(i) * spec.rotated_dim;
        for (uint32_t j = 0; j < spec.rotated_dim; ++j) out[j] = x[j] - cell[j];
    }

    if (spec.verbose) {
        log::info("quantizers: residual codebook %u x %u", spec.residual_m,
                  spec.residual_ksub);
    }
    PqTrainParams rp;
    rp.m = spec.residual_m;
    rp.ksub = spec.residual_ksub;
    rp.max_iters = spec.kmeans_iters;
    rp.seed = derive_seed(spec.seed, "residual");
    rp.verbose = spec.verbose;
    q.residual = pq_train(residuals.data(), count, spec.rotated_dim, rp);

    return q;
}

}  // namespace wildset
