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

#include "wildset/kmeans.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <string>

#include "wildset/common.hpp"
#include "wildset/rng.hpp"

namespace wildset {

void assign_nearest(const float* data, size_t count, size_t dim,
                    const float* centroids, size_t k,
                    uint32_t* assign, double* dist2) {
    const int64_t n = int64_t(count);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const float* x = data + size_t(i) * dim;
        uint32_t best = 0;
        double best_d = squared_l2(x, centroids, dim);
        for (size_t c = 1; c < k; ++c) {
            double d = squared_l2(x, centroids + c * dim, dim);
            if (d < best_d) {
                best_d = d;
                best = uint32_t(c);
            }
        }
        assign[i] = best;
        if (dist2) dist2[i] = best_d;
    }
}

namespace {

// Seeded k-means++: first pick uniform, the rest proportional to the squared
// distance to the nearest pick so far. A zero total means every remaining
// point coincides with a chosen centroid; the leftover slots are filled with
// uniform picks (necessarily duplicates) and the caller is told.
std::vector<float> plus_plus_init(const float* data, size_t count, size_t dim,
                                  uint32_t k, Rng& rng, bool* duplicates) {
    std::vector<float> centroids(size_t(k) * dim);
    std::vector<double> min_d2(count);

    size_t first = rng.next_below(count);
    std::memcpy(centroids.data(), data + first * dim, dim * sizeof(float));

    const int64_t n = int64_t(count);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        min_d2[i] = squared_l2(data + size_t(i) * dim, centroids.data(), dim);
    }

    std::vector<double> cumulative(count);
    for (uint32_t c = 1; c < k; ++c) {
        double acc = 0.0;
        for (size_t i = 0; i < count; ++i) {
            acc += min_d2[i];
            cumulative[i] = acc;
        }
        size_t pick;
        if (acc == 0.0) {
            if (!*duplicates) {
                *duplicates = true;
                log::warn("kmeans: fewer distinct training points than centroids "
                          "(%u requested); duplicating picks", k);
            }
            pick = rng.next_below(count);
        } else {
            pick = rng.next_weighted(cumulative);
        }
        const float* chosen = data + pick * dim;
        float* dst = centroids.data() + size_t(c) * dim;
        std::memcpy(dst, chosen, dim * sizeof(float));
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            double d = squared_l2(data + size_t(i) * dim, dst, dim);
            if (d < min_d2[i]) min_d2[i] = d;
        }
    }
    return centroids;
}

KmeansResult refine(const float* data, size_t count, size_t dim,
                    std::vector<float> centroids, const KmeansParams& p,
                    bool duplicates) {
    const size_t k = centroids.size() / dim;
    KmeansResult res;
    res.duplicate_centroids = duplicates;
    res.assignments.resize(count);

    std::vector<double> dist2(count);
    std::vector<double> sums(size_t(k) * dim);
    std::vector<size_t> sizes(k);

    double prev = 0.0;
    for (uint32_t iter = 0; iter < p.max_iters; ++iter) {
        assign_nearest(data, count, dim, centroids.data(), k,
                       res.assignments.data(), dist2.data());
        double obj = std::accumulate(dist2.begin(), dist2.end(), 0.0) / double(count);
        res.objective.push_back(obj);
        if (p.verbose) {
            log::info("kmeans: iter %u objective %.8g", iter, obj);
        }
        if (iter > 0 && prev - obj <= p.tol * prev) break;
        if (iter + 1 == p.max_iters) break;
        prev = obj;

        // Means per cluster; serial accumulation keeps the result independent
        // of the thread count.
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(sizes.begin(), sizes.end(), size_t(0));
        for (size_t i = 0; i < count; ++i) {
            uint32_t c = res.assignments[i];
            ++sizes[c];
            const float* x = data + i * dim;
            double* s = sums.data() + size_t(c) * dim;
            for (size_t j = 0; j < dim; ++j) s[j] += x[j];
        }
        for (size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0) continue;
            double inv = 1.0 / double(sizes[c]);
            for (size_t j = 0; j < dim; ++j) {
                centroids[c * dim + j] = float(sums[c * dim + j] * inv);
            }
        }
        // Re-seed each empty cluster from the worst-quantized point. The old
        // assignment's cost is untouched, so the objective stays monotone.
        for (size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            size_t worst = size_t(
                std::max_element(dist2.begin(), dist2.end()) - dist2.begin());
            std::memcpy(centroids.data() + c * dim, data + worst * dim,
                        dim * sizeof(float));
            dist2[worst] = -1.0;  // keep later empties off the same point
        }
    }
    res.centroids = std::move(centroids);
    res.iterations = uint32_t(res.objective.size());
    return res;
}

}  // namespace

KmeansResult kmeans(const float* data, size_t count, size_t dim,
                    const KmeansParams& params) {
    if (params.k < 1) throw InvalidArgument("kmeans: k must be >= 1");
    if (dim < 1) throw InvalidArgument("kmeans: dim must be >= 1");
    if (count < params.k) {
        throw InvalidArgument("kmeans: need at least k training points, got " +
                              std::to_string(count) + " for k=" +
                              std::to_string(params.k));
    }
    Rng rng(derive_seed(params.seed, "kmeans++"));
    bool duplicates = false;
    auto centroids = plus_plus_init(data, count, dim, params.k, rng, &duplicates);
    return refine(data, count, dim, std::move(centroids), params, duplicates);
}

KmeansResult kmeans_refine(const float* data, size_t count, size_t dim,
                           std::vector<float> init_centroids,
                           const KmeansParams& params) {
    if (dim < 1) throw InvalidArgument("kmeans_refine: dim must be >= 1");
    if (init_centroids.empty() || init_centroids.size() % dim != 0) {
        throw InvalidArgument("kmeans_refine: centroid buffer not a multiple of dim");
    }
    size_t k = init_centroids.size() / dim;
    if (params.k != 0 && params.k != k) {
        throw InvalidArgument("kmeans_refine: params.k disagrees with centroid count");
    }
    if (count < 1) throw InvalidArgument("kmeans_refine: empty training set");
    return refine(data, count, dim, std::move(init_centroids), params, false);
}

}  // namespace wildset
