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

#include "wildset/opq.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <string>

#include "wildset/common.hpp"
#include "wildset/rng.hpp"

namespace wildset {

void OpqModel::rotate(const float* in, float* out) const {
    for (uint32_t j = 0; j < out_dim; ++j) {
        double acc = 0.0;
        for (uint32_t i = 0; i < in_dim; ++i) {
            acc += double(in[i]) * rotation[size_t(i) * out_dim + j];
        }
        out[j] = float(acc);
    }
}

std::vector<float> OpqModel::rotate(std::span<const float> in) const {
    if (in.size() != in_dim) {
        throw InvalidArgument("OpqModel::rotate: expected " + std::to_string(in_dim) +
                              "-d input, got " + std::to_string(in.size()));
    }
    std::vector<float> out(out_dim);
    rotate(in.data(), out.data());
    return out;
}

void OpqModel::serialize(ByteWriter& w) const {
    w.u32(in_dim);
    w.u32(out_dim);
    w.f32_array(rotation);
    pq.serialize(w);
}

OpqModel OpqModel::deserialize(ByteReader& r) {
    OpqModel m;
    m.in_dim = r.u32();
    m.out_dim = r.u32();
    m.rotation.resize(size_t(m.in_dim) * m.out_dim);
    r.f32_array(m.rotation);
    m.pq = PqCodebook::deserialize(r);
    return m;
}

OpqModel opq_train(const float* data, size_t count, size_t dim,
                   const OpqTrainParams& params) {
    if (params.out_dim < 1 || params.out_dim > dim) {
        throw InvalidArgument("opq_train: out_dim must be in [1, dim]");
    }
    if (params.m < 1 || params.out_dim % params.m != 0) {
        throw InvalidArgument("opq_train: out_dim must be divisible by m");
    }
    if (count < 2 || count < params.ksub) {
        throw InvalidArgument("opq_train: not enough training points");
    }

    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    const long n = long(count);
    const long d_in = long(dim);
    const long d_out = long(params.out_dim);

    MatrixXd X(n, d_in);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < d_in; ++j) X(i, j) = data[size_t(i) * dim + size_t(j)];
    }
    const double x_sqnorm = X.squaredNorm();

    // Init: principal directions of the (centered) training sample.
    VectorXd mean = X.colwise().mean();
    MatrixXd centered = X.rowwise() - mean.transpose();
    MatrixXd cov = (centered.transpose() * centered) / double(n - 1);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    if (es.info() != Eigen::Success) {
        throw CorruptData("opq_train: eigendecomposition failed");
    }
    MatrixXd R(d_in, d_out);
    for (long j = 0; j < d_out; ++j) R.col(j) = es.eigenvectors().col(d_in - 1 - j);

    OpqModel model;
    model.in_dim = uint32_t(dim);
    model.out_dim = params.out_dim;

    PqTrainParams pqp;
    pqp.m = params.m;
    pqp.ksub = params.ksub;
    pqp.max_iters = params.kmeans_iters;
    pqp.seed = derive_seed(params.seed, "opq-pq");
    pqp.verbose = false;

    std::vector<float> zf(count * params.out_dim);
    std::vector<uint8_t> codes(params.m);
    MatrixXd Y(n, d_out);
    MatrixXd M;  // X^T Y, reused for the Procrustes update

    // Round 0 is the baseline (PCA truncation + plain PQ); each further
    // round applies one rotation update followed by a codebook refresh.
    for (uint32_t alt = 0; alt <= params.alternations; ++alt) {
        if (alt > 0) {
            // R <- U V^T from the thin SVD of X^T Y: the orthonormal map
            // minimizing |X - Y R^T|_F for the codes found last round.
            Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
            R = svd.matrixU() * svd.matrixV().transpose();
        }

        MatrixXd Z = X * R;
        for (long i = 0; i < n; ++i) {
            for (long j = 0; j < d_out; ++j) {
                zf[size_t(i) * params.out_dim + size_t(j)] = float(Z(i, j));
            }
        }
        if (alt == 0) {
            model.pq = pq_train(zf.data(), count, params.out_dim, pqp);
        } else {
            pq_retrain(model.pq, zf.data(), count, pqp);
        }

        std::vector<float> rec(params.out_dim);
        for (long i = 0; i < n; ++i) {
            model.pq.encode(zf.data() + size_t(i) * params.out_dim, codes.data());
            model.pq.decode(codes.data(), rec.data());
            for (long j = 0; j < d_out; ++j) Y(i, j) = rec[size_t(j)];
        }

        M = X.transpose() * Y;
        // |X - Y R^T|^2 = |X|^2 - 2 tr(R^T X^T Y) + |Y|^2, mean per vector.
        double e = (x_sqnorm - 2.0 * (R.array() * M.array()).sum() + Y.squaredNorm()) /
                   double(count);
        model.objective.push_back(e);
        if (params.verbose) {
            log::info("opq: alternation %u objective %.8g", alt, e);
        }
        if (alt > 0) {
            double prev = model.objective[alt - 1];
            if (prev - e <= params.tol * prev) break;
        }
    }

    model.rotation.resize(dim * params.out_dim);
    for (long i = 0; i < d_in; ++i) {
        for (long j = 0; j < d_out; ++j) {
            model.rotation[size_t(i) * params.out_dim + size_t(j)] = float(R(i, j));
        }
    }
    return model;
}

}  // namespace wildset
