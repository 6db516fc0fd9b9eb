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

#include "wildset/descriptor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "wildset/common.hpp"

namespace wildset {

// --- resize plan --------------------------------------------------------------

ResizePlan plan_resize(int width, int height, int target_long_side) {
    if (width < 1 || height < 1) {
        throw InvalidArgument("plan_resize: image dimensions must be >= 1, got " +
                              std::to_string(width) + "x" + std::to_string(height));
    }
    if (target_long_side < 1) {
        throw InvalidArgument("plan_resize: target must be >= 1");
    }
    const bool wide = width >= height;
    const double longer = wide ? width : height;
    const double shorter = wide ? height : width;
    int scaled = static_cast<int>(std::floor(shorter * target_long_side / longer + 0.5));
    scaled = std::max(1, scaled);
    ResizePlan p;
    p.width = wide ? target_long_side : scaled;
    p.height = wide ? scaled : target_long_side;
    return p;
}

// --- R-MAC --------------------------------------------------------------------

namespace {

// Fewest regions along an axis such that consecutive regions keep >= ~40%
// overlap of the region side, then integer positions spread evenly.
std::vector<int> axis_positions(int extent, int side) {
    if (extent <= side) return {0};
    const double max_step = 0.6 * side;
    int n = 1 + static_cast<int>(std::ceil((extent - side) / max_step - 1e-9));
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) {
        pos[i] = static_cast<int>(
            std::floor(double(i) * (extent - side) / (n - 1) + 0.5));
    }
    return pos;
}

}  // namespace

std::vector<RmacRegion> rmac_grid(int width, int height, int scales) {
    if (width < 1) throw InvalidArgument("rmac_grid: degenerate width " + std::to_string(width));
    if (height < 1) throw InvalidArgument("rmac_grid: degenerate height " + std::to_string(height));
    if (scales < 1) throw InvalidArgument("rmac_grid: scales must be >= 1");

    const int short_side = std::min(width, height);
    std::vector<RmacRegion> out;
    for (int s = 1; s <= scales; ++s) {
        int side = static_cast<int>(std::floor(2.0 * short_side / (s + 1) + 0.5));
        side = std::clamp(side, 1, short_side);
        for (int y : axis_positions(height, side)) {
            for (int x : axis_positions(width, side)) {
                out.push_back({x, y, side});
            }
        }
    }
    return out;
}

std::vector<float> rmac_pool(const FeatureMap& map, int scales) {
    if (map.channels < 1) {
        throw InvalidArgument("rmac_pool: degenerate channel count " +
                              std::to_string(map.channels));
    }
    if (map.height < 1) {
        throw InvalidArgument("rmac_pool: degenerate height " + std::to_string(map.height));
    }
    if (map.width < 1) {
        throw InvalidArgument("rmac_pool: degenerate width " + std::to_string(map.width));
    }
    const size_t expect = size_t(map.channels) * map.height * map.width;
    if (map.values.size() != expect) {
        throw InvalidArgument("rmac_pool: value buffer size mismatch");
    }
    for (float v : map.values) {
        if (!std::isfinite(v)) throw InvalidArgument("rmac_pool: non-finite activation");
    }

    const auto regions = rmac_grid(int(map.width), int(map.height), scales);
    const size_t C = map.channels;
    std::vector<double> acc(C, 0.0);
    std::vector<float> region_vec(C);

    for (const auto& r : regions) {
        for (size_t c = 0; c < C; ++c) {
            float m = map.at(uint32_t(c), uint32_t(r.y), uint32_t(r.x));
            for (int y = r.y; y < r.y + r.side; ++y) {
                for (int x = r.x; x < r.x + r.side; ++x) {
                    m = std::max(m, map.at(uint32_t(c), uint32_t(y), uint32_t(x)));
                }
            }
            region_vec[c] = m;
        }
        if (l2_normalize(region_vec)) {
            for (size_t c = 0; c < C; ++c) acc[c] += region_vec[c];
        }
    }

    std::vector<float> out(C);
    for (size_t c = 0; c < C; ++c) out[c] = static_cast<float>(acc[c]);
    l2_normalize(out);
    return out;
}

// --- PCA ------------------------------------------------------------------------

PcaModel pca_train(const float* data, size_t count, size_t dim, size_t out_dim,
                   double eig_floor) {
    if (out_dim < 1 || out_dim > dim) {
        throw InvalidArgument("pca_train: out_dim must be in [1, dim]");
    }
    if (count <= out_dim) {
        throw InvalidArgument("pca_train: need more samples than output dimensions");
    }
    if (eig_floor <= 0) {
        throw InvalidArgument("pca_train: eig_floor must be > 0");
    }

    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    VectorXd mean = VectorXd::Zero(long(dim));
    for (size_t i = 0; i < count; ++i) {
        for (size_t j = 0; j < dim; ++j) mean[long(j)] += data[i * dim + j];
    }
    mean /= double(count);

    // Covariance accumulated blockwise as X_c^T X_c / (n - 1).
    MatrixXd cov = MatrixXd::Zero(long(dim), long(dim));
    const size_t block = 4096;
    MatrixXd chunk;
    for (size_t start = 0; start < count; start += block) {
        size_t rows = std::min(block, count - start);
        chunk.resize(long(rows), long(dim));
        for (size_t i = 0; i < rows; ++i) {
            for (size_t j = 0; j < dim; ++j) {
                chunk(long(i), long(j)) =
                    double(data[(start + i) * dim + j]) - mean[long(j)];
            }
        }
        cov.noalias() += chunk.transpose() * chunk;
    }
    cov /= double(count - 1);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    if (es.info() != Eigen::Success) {
        throw CorruptData("pca_train: eigendecomposition failed");
    }
    // Eigen orders eigenvalues ascending; we want the largest out_dim.
    PcaModel m;
    m.in_dim = uint32_t(dim);
    m.out_dim = uint32_t(out_dim);
    m.mean.resize(dim);
    for (size_t j = 0; j < dim; ++j) m.mean[j] = float(mean[long(j)]);
    m.basis.resize(out_dim * dim);
    m.scale.resize(out_dim);
    for (size_t k = 0; k < out_dim; ++k) {
        long src = long(dim - 1 - k);
        double eig = es.eigenvalues()[src];
        if (eig < eig_floor) {
            eig = eig_floor;
            ++m.floored_eigenvalues;
        }
        m.scale[k] = float(1.0 / std::sqrt(eig));
        VectorXd v = es.eigenvectors().col(src);
        // Canonical sign: largest-magnitude component positive.
        long arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) v = -v;
        for (size_t j = 0; j < dim; ++j) m.basis[k * dim + j] = float(v[long(j)]);
    }
    if (m.floored_eigenvalues > 0) {
        log::warn("pca_train: %u of %zu eigenvalues at the %g floor (rank-deficient sample)",
                  m.floored_eigenvalues, out_dim, eig_floor);
    }
    return m;
}

void PcaModel::apply(const float* in, float* out) const {
    for (size_t k = 0; k < out_dim; ++k) {
        const float* row = basis.data() + k * in_dim;
        double acc = 0.0;
        for (size_t j = 0; j < in_dim; ++j) {
            acc += double(row[j]) * (double(in[j]) - double(mean[j]));
        }
        out[k] = float(acc * scale[k]);
    }
}

std::vector<float> PcaModel::apply(std::span<const float> in) const {
    if (in.size() != in_dim) {
        throw InvalidArgument("PcaModel::apply: expected " + std::to_string(in_dim) +
                              "-d input, got " + std::to_string(in.size()));
    }
    std::vector<float> out(out_dim);
    apply(in.data(), out.data());
    return out;
}

void PcaModel::serialize(ByteWriter& w) const {
    w.u32(in_dim);
    w.u32(out_dim);
    w.u32(floored_eigenvalues);
    w.f32_array(mean);
    w.f32_array(basis);
    w.f32_array(scale);
}

PcaModel PcaModel::deserialize(ByteReader& r) {
    PcaModel m;
    m.in_dim = r.u32();
    m.out_dim = r.u32();
    m.floored_eigenvalues = r.u32();
    m.mean.resize(m.in_dim);
    r.f32_array(m.mean);
    m.basis.resize(size_t(m.out_dim) * m.in_dim);
    r.f32_array(m.basis);
    m.scale.resize(m.out_dim);
    r.f32_array(m.scale);
    return m;
}

// --- scalar quantizer -----------------------------------------------------------

ScalarQuantizer ScalarQuantizer::fit(const float* data, size_t count, size_t dim) {
    if (count == 0 || dim == 0) {
        throw InvalidArgument("ScalarQuantizer::fit: empty training sample");
    }
    ScalarQuantizer q;
    q.vmin.assign(data, data + dim);
    std::vector<float> vmax(data, data + dim);
    for (size_t i = 1; i < count; ++i) {
        const float* row = data + i * dim;
        for (size_t j = 0; j < dim; ++j) {
            q.vmin[j] = std::min(q.vmin[j], row[j]);
            vmax[j] = std::max(vmax[j], row[j]);
        }
    }
    q.step.resize(dim);
    for (size_t j = 0; j < dim; ++j) {
        q.step[j] = (vmax[j] - q.vmin[j]) / 256.0f;
    }
    return q;
}

size_t ScalarQuantizer::encode(const float* v, uint8_t* code) const {
    size_t clamped = 0;
    for (size_t j = 0; j < vmin.size(); ++j) {
        if (step[j] == 0.0f) {
            code[j] = 0;
            if (v[j] != vmin[j]) ++clamped;
            continue;
        }
        float hi = vmin[j] + step[j] * 256.0f;
        if (v[j] < vmin[j] || v[j] > hi) ++clamped;
        double x = std::floor((double(v[j]) - vmin[j]) / step[j]);
        code[j] = uint8_t(std::clamp(x, 0.0, 255.0));
    }
    return clamped;
}

void ScalarQuantizer::decode(const uint8_t* code, float* v) const {
    for (size_t j = 0; j < vmin.size(); ++j) {
        v[j] = (step[j] == 0.0f)
                   ? vmin[j]
                   : vmin[j] + (float(code[j]) + 0.5f) * step[j];
    }
}

void ScalarQuantizer::serialize(ByteWriter& w) const {
    w.u32(dim());
    w.f32_array(vmin);
    w.f32_array(step);
}

ScalarQuantizer ScalarQuantizer::deserialize(ByteReader& r) {
    ScalarQuantizer q;
    uint32_t d = r.u32();
    q.vmin.resize(d);
    r.f32_array(q.vmin);
    q.step.resize(d);
    r.f32_array(q.step);
    return q;
}

// --- vector helpers ---------------------------------------------------------------

double l2_norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) acc += double(x) * x;
    return std::sqrt(acc);
}

bool l2_normalize(std::span<float> v) {
    double n = l2_norm(v);
    if (n == 0.0) return false;
    float inv = float(1.0 / n);
    for (float& x : v) x *= inv;
    return true;
}

}  // namespace wildset
