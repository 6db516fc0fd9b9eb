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

#include "wildset/pq.hpp"

#include <cstring>
#include <string>

#include "wildset/common.hpp"
#include "wildset/kmeans.hpp"
#include "wildset/rng.hpp"

namespace wildset {

void PqCodebook::assign(const float* x, uint32_t* codes) const {
    for (uint32_t s = 0; s < m; ++s) {
        const float* xs = x + size_t(s) * dsub;
        const float* cs = centroids.data() + size_t(s) * ksub * dsub;
        uint32_t best = 0;
        double best_d = squared_l2(xs, cs, dsub);
        for (uint32_t c = 1; c < ksub; ++c) {
            double d = squared_l2(xs, cs + size_t(c) * dsub, dsub);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        codes[s] = best;
    }
}

void PqCodebook::encode(const float* x, uint8_t* code) const {
    if (ksub > 256) {
        throw InvalidState("PqCodebook::encode: byte codes need ksub <= 256, have " +
                           std::to_string(ksub));
    }
    uint32_t idx[256];
    if (m > 256) throw InvalidState("PqCodebook::encode: m too large");
    assign(x, idx);
    for (uint32_t s = 0; s < m; ++s) code[s] = uint8_t(idx[s]);
}

void PqCodebook::decode(const uint8_t* code, float* x) const {
    for (uint32_t s = 0; s < m; ++s) {
        std::memcpy(x + size_t(s) * dsub, sub_centroid(s, code[s]),
                    dsub * sizeof(float));
    }
}

void PqCodebook::decode_idx(const uint32_t* codes, float* x) const {
    for (uint32_t s = 0; s < m; ++s) {
        std::memcpy(x + size_t(s) * dsub, sub_centroid(s, codes[s]),
                    dsub * sizeof(float));
    }
}

std::vector<double> PqCodebook::adc_table(const float* query) const {
    std::vector<double> table(size_t(m) * ksub);
    for (uint32_t s = 0; s < m; ++s) {
        const float* qs = query + size_t(s) * dsub;
        const float* cs = centroids.data() + size_t(s) * ksub * dsub;
        double* ts = table.data() + size_t(s) * ksub;
        for (uint32_t c = 0; c < ksub; ++c) {
            ts[c] = squared_l2(qs, cs + size_t(c) * dsub, dsub);
        }
    }
    return table;
}

double PqCodebook::reconstruction_error(const float* data, size_t count) const {
    const size_t d = dim();
    double total = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : total)
    for (int64_t i = 0; i < int64_t(count); ++i) {
        std::vector<uint32_t> codes(m);
        std::vector<float> rec(d);
        assign(data + size_t(i) * d, codes.data());
        decode_idx(codes.data(), rec.data());
        total += squared_l2(data + size_t(i) * d, rec.data(), d);
    }
    return total / double(count);
}

void PqCodebook::serialize(ByteWriter& w) const {
    w.u32(m);
    w.u32(ksub);
    w.u32(dsub);
    w.f32_array(centroids);
}

PqCodebook PqCodebook::deserialize(ByteReader& r) {
    PqCodebook pq;
    pq.m = r.u32();
    pq.ksub = r.u32();
    pq.dsub = r.u32();
    pq.centroids.resize(size_t(pq.m) * pq.ksub * pq.dsub);
    r.f32_array(pq.centroids);
    return pq;
}

namespace {

void check_params(size_t count, size_t dim, const PqTrainParams& p, const char* who) {
    if (p.m < 1) throw InvalidArgument(std::string(who) + ": m must be >= 1");
    if (p.ksub < 1 || p.ksub > 65536) {
        throw InvalidArgument(std::string(who) + ": ksub must be in [1, 65536]");
    }
    if (dim % p.m != 0) {
        throw InvalidArgument(std::string(who) + ": dim " + std::to_string(dim) +
                              " not divisible by m=" + std::to_string(p.m));
    }
    if (count < p.ksub) {
        throw InvalidArgument(std::string(who) + ": need at least ksub=" +
                              std::to_string(p.ksub) + " training points, got " +
                              std::to_string(count));
    }
}

// Contiguous copy of one subspace across all points.
void gather_sub(const float* data, size_t count, size_t dim, uint32_t dsub,
                uint32_t sub, std::vector<float>& out) {
    out.resize(count * dsub);
    for (size_t i = 0; i < count; ++i) {
        std::memcpy(out.data() + i * dsub, data + i * dim + size_t(sub) * dsub,
                    dsub * sizeof(float));
    }
}

}  // namespace

PqCodebook pq_train(const float* data, size_t count, size_t dim,
                    const PqTrainParams& params) {
    check_params(count, dim, params, "pq_train");
    PqCodebook pq;
    pq.m = params.m;
    pq.ksub = params.ksub;
    pq.dsub = uint32_t(dim / params.m);
    pq.centroids.resize(size_t(pq.m) * pq.ksub * pq.dsub);

    std::vector<float> sub_data;
    for (uint32_t s = 0; s < pq.m; ++s) {
        gather_sub(data, count, dim, pq.dsub, s, sub_data);
        KmeansParams kp;
        kp.k = pq.ksub;
        kp.max_iters = params.max_iters;
        kp.tol = params.tol;
        kp.seed = derive_seed(params.seed, "pq-sub", s);
        kp.verbose = params.verbose;
        auto res = kmeans(sub_data.data(), count, pq.dsub, kp);
        std::memcpy(pq.centroids.data() + size_t(s) * pq.ksub * pq.dsub,
                    res.centroids.data(), res.centroids.size() * sizeof(float));
    }
    return pq;
}

void pq_retrain(PqCodebook& pq, const float* data, size_t count,
                const PqTrainParams& params) {
    PqTrainParams p = params;
    p.m = pq.m;
    p.ksub = pq.ksub;
    check_params(count, pq.dim(), p, "pq_retrain");

    std::vector<float> sub_data;
    for (uint32_t s = 0; s < pq.m; ++s) {
        gather_sub(data, count, pq.dim(), pq.dsub, s, sub_data);
        std::vector<float> init(
            pq.centroids.begin() + size_t(s) * pq.ksub * pq.dsub,
            pq.centroids.begin() + size_t(s + 1) * pq.ksub * pq.dsub);
        KmeansParams kp;
        kp.k = pq.ksub;
        kp.max_iters = p.max_iters;
        kp.tol = p.tol;
        kp.verbose = p.verbose;
        auto res = kmeans_refine(sub_data.data(), count, pq.dsub, std::move(init), kp);
        std::memcpy(pq.centroids.data() + size_t(s) * pq.ksub * pq.dsub,
                    res.centroids.data(), res.centroids.size() * sizeof(float));
    }
}

}  // namespace wildset
