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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wildset {

inline double squared_l2(const float* a, const float* b, size_t dim) {
    double acc = 0.0;
    for (size_t i = 0; i < dim; ++i) {
        double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc;
}

struct KmeansParams {
    uint32_t k = 0;
    uint32_t max_iters = 25;
    double tol = 1e-6;   // stop when relative improvement drops below this
    uint64_t seed = 0;
    bool verbose = false;
};

struct KmeansResult {
    std::vector<float> centroids;       // k x dim
    std::vector<uint32_t> assignments;  // one per training point
    std::vector<double> objective;      // mean squared distance, per iteration
    uint32_t iterations = 0;
    bool duplicate_centroids = false;   // fewer distinct points than centroids
};

/// Nearest centroid per point; ties go to the lower centroid index.
/// dist2 (optional) receives the squared distance to the winner.
void assign_nearest(const float* data, size_t count, size_t dim,
                    const float* centroids, size_t k,
                    uint32_t* assign, double* dist2 = nullptr);

/// Lloyd with seeded k-means++ init. Empty clusters are re-seeded from the
/// point with the largest quantization error, which keeps the per-iteration
/// objective non-increasing. Stops after max_iters or once the relative
/// improvement falls below tol. Centroids, assignments and the last trace
/// entry always describe the same state.
KmeansResult kmeans(const float* data, size_t count, size_t dim,
                    const KmeansParams& params);

/// Same refinement loop but warm-started from caller-provided centroids.
KmeansResult kmeans_refine(const float* data, size_t count, size_t dim,
                           std::vector<float> init_centroids,
                           const KmeansParams& params);

}  // namespace wildset
