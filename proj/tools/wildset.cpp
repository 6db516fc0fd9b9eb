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

// wildset: command line driver for the dataset construction pipeline.
//
// Subcommands cover R-MAC descriptor pooling, quantizer training, inverted
// index build/search, two-stage near-duplicate detection, hashtag
// canonicalization and vocabulary selection, resampled epoch-list
// materialization, target construction, label-noise injection, LR schedule
// planning, and duplicate-rate reporting. Every option may also come from a
// JSON config tree keyed by subcommand name; explicit command line flags
// win over config values. Exit codes: 0 success, 1 validation or runtime
// failure (message names the offending field), 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "wildset/common.hpp"
#include "wildset/dedup.hpp"
#include "wildset/descriptor.hpp"
#include "wildset/digest.hpp"
#include "wildset/hashtag.hpp"
#include "wildset/io.hpp"
#include "wildset/ivf.hpp"
#include "wildset/manifest.hpp"
#include "wildset/quantizer_set.hpp"
#include "wildset/sampler.hpp"
#include "wildset/schedule.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace wildset;

namespace {

unsigned long long ull(uint64_t v) { return static_cast<unsigned long long>(v); }

// ---------------------------------------------------------------------------
// Config tree: {"subcommand": {"option": value, ...}, ...}

json load_config_tree(const std::string& path) {
    if (path.empty()) return json();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    json tree;
    try {
        in >> tree;
    } catch (const json::exception& e) {
        throw CorruptData("config file " + path + ": " + e.what());
    }
    if (!tree.is_object())
        throw InvalidArgument("config root must be a JSON object: " + path);
    return tree;
}

// Fills options that were not given on the command line from one
// subcommand's node of the config tree; rejects unknown keys afterwards.
class ConfigNode {
  public:
    ConfigNode(const json& tree, const std::string& name) : name_(name) {
        if (!tree.is_object() || !tree.contains(name)) return;
        node_ = &tree.at(name);
        if (!node_->is_object())
            throw InvalidArgument("config field '" + name_ + "' must be an object");
    }

    ConfigNode(const json& tree, const std::string& outer, const std::string& inner)
        : name_(outer + "." + inner) {
        if (!tree.is_object() || !tree.contains(outer)) return;
        const json& o = tree.at(outer);
        if (!o.is_object())
            throw InvalidArgument("config field '" + outer + "' must be an object");
        if (!o.contains(inner)) return;
        node_ = &o.at(inner);
        if (!node_->is_object())
            throw InvalidArgument("config field '" + name_ + "' must be an object");
    }

    template <typename T>
    void merge(const CLI::Option* opt, const std::string& key, T& value) {
        known_.insert(key);
        if (opt != nullptr && opt->count() > 0) return;
        if (node_ == nullptr || !node_->contains(key)) return;
        try {
            value = node_->at(key).get<T>();
        } catch (const json::exception&) {
            throw InvalidArgument("config field '" + name_ + "." + key +
                                  "' has the wrong type");
        }
    }

    bool resolved(const CLI::Option* opt, const std::string& key) const {
        return (opt != nullptr && opt->count() > 0) ||
               (node_ != nullptr && node_->contains(key));
    }

    void require(const CLI::Option* opt, const std::string& key) const {
        if (!resolved(opt, key))
            throw InvalidArgument("missing required field: " + key);
    }

    // Call after every merge(): unknown keys are validation failures.
    void finish() const {
        if (node_ == nullptr) return;
        for (auto it = node_->begin(); it != node_->end(); ++it)
            if (known_.find(it.key()) == known_.end())
                throw InvalidArgument("unknown config field: " + name_ + "." + it.key());
    }

  private:
    const json* node_ = nullptr;
    std::string name_;
    std::set<std::string> known_;
};

// ---------------------------------------------------------------------------
// Small IO helpers.

void prepare_out(const fs::path& p) {
    fs::path dir = p.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
}

std::string default_manifest(const std::string& out_path) {
    return out_path + ".manifest.json";
}

VectorMatrix load_f32(const std::string& path, const char* what) {
    VectorMatrix m = read_vectors(path);
    if (m.dtype != Dtype::kF32)
        throw InvalidArgument(std::string(what) +
                              " must hold float32 vectors: " + path);
    return m;
}

std::vector<uint64_t> load_or_iota_ids(const std::string& path, uint64_t count,
                                       const char* what) {
    if (path.empty()) {
        std::vector<uint64_t> ids(count);
        std::iota(ids.begin(), ids.end(), uint64_t{0});
        return ids;
    }
    std::vector<uint64_t> ids = read_ids(path);
    if (ids.size() != count)
        throw InvalidArgument(std::string(what) + ": id count " +
                              std::to_string(ids.size()) + " != vector count " +
                              std::to_string(count));
    return ids;
}

ExactStore build_store(const VectorMatrix& m, std::span<const uint64_t> ids) {
    ExactStore store(m.dim);
    for (uint64_t i = 0; i < m.count; ++i)
        store.add(ids[i], std::span<const float>(m.row_f32(i), m.dim));
    return store;
}

void write_text(const std::string& path, const std::string& text) {
    prepare_out(path);
    write_file(path, std::span<const uint8_t>(
                         reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

void write_jsonl(const std::string& path, const std::vector<ordered_json>& rows) {
    std::string buf;
    for (const ordered_json& r : rows) {
        buf += r.dump();
        buf += '\n';
    }
    write_text(path, buf);
}

std::unordered_set<std::string> read_line_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        out.insert(line);
    }
    return out;
}

// ---------------------------------------------------------------------------
// descriptors: R-MAC pooling over stored conv feature maps.

struct DescriptorsCmd {
    std::string features, out, manifest_path;
    int scales = 3;
    int long_side = 400;
    std::vector<int> plan;  // --plan-resize W H
    CLI::Option *o_features = nullptr, *o_out = nullptr, *o_scales = nullptr,
                *o_long = nullptr, *o_plan = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "descriptors", "Pool conv feature maps into R-MAC descriptors");
        o_features = app->add_option("--features", features,
                                     "feature map container (rank-3 float32)");
        o_out = app->add_option("--out", out, "output descriptor container");
        o_scales = app->add_option("--scales", scales, "R-MAC grid scales")
                       ->capture_default_str();
        o_long = app->add_option("--long-side", long_side,
                                 "target longer side for --plan-resize")
                     ->capture_default_str();
        o_plan = app->add_option("--plan-resize", plan,
                                 "print the resize plan for WIDTH HEIGHT and exit")
                     ->expected(2);
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "descriptors");
        cfg.merge(o_features, "features", features);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_scales, "scales", scales);
        cfg.merge(o_long, "long_side", long_side);
        cfg.merge(o_manifest, "manifest", manifest_path);
        cfg.finish();

        if (!plan.empty()) {
            ResizePlan p = plan_resize(plan[0], plan[1], long_side);
            std::printf("resize %dx%d -> %dx%d\n", plan[0], plan[1], p.width,
                        p.height);
            return 0;
        }
        cfg.require(o_features, "features");
        cfg.require(o_out, "out");

        RunManifest man("descriptors");
        ordered_json resolved{{"features", features},
                              {"out", out},
                              {"scales", scales}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        FeatureMapSet maps = read_feature_maps(features);
        man.add_input(features);
        man.add_timing("read", t_read.seconds());

        // Validate the grid once; per-map pooling then cannot throw.
        (void)rmac_grid(static_cast<int>(maps.width),
                        static_cast<int>(maps.height), scales);

        Stopwatch t_pool;
        VectorMatrix dm;
        dm.dtype = Dtype::kF32;
        dm.dim = maps.channels;
        dm.count = maps.count;
        dm.f32.resize(size_t(maps.count) * maps.channels);
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < static_cast<int64_t>(maps.count); ++i) {
            FeatureMap fm{maps.channels, maps.height, maps.width,
                          std::span<const float>(maps.map(i), maps.map_size())};
            std::vector<float> d = rmac_pool(fm, scales);
            std::copy(d.begin(), d.end(), dm.f32.begin() + i * maps.channels);
        }
        man.add_timing("pool", t_pool.seconds());

        Stopwatch t_write;
        prepare_out(out);
        write_vectors(out, dm);
        man.add_output(out);
        man.add_timing("write", t_write.seconds());
        man.add_note("count", std::to_string(maps.count));

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("pooled %llu maps into %u-d descriptors\n", ull(maps.count),
                    maps.channels);
        return 0;
    }
};

// ---------------------------------------------------------------------------
// train-quantizers: PCA whitening + scalar + OPQ + coarse + residual PQ.

struct TrainQuantizersCmd {
    std::string vectors, out, manifest_path;
    uint64_t seed = 0;
    QuantizerTrainSpec ts;
    CLI::Option *o_vectors = nullptr, *o_out = nullptr, *o_seed = nullptr,
                *o_pca = nullptr, *o_rot = nullptr, *o_cbits = nullptr,
                *o_rm = nullptr, *o_rksub = nullptr, *o_alt = nullptr,
                *o_iters = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "train-quantizers",
            "Train the whitening / scalar / OPQ / coarse / residual chain");
        o_vectors = app->add_option("--vectors", vectors,
                                    "training descriptors (float32)");
        o_out = app->add_option("--out", out, "output quantizer bundle");
        o_seed = app->add_option("--seed", seed, "training seed (required)");
        o_pca = app->add_option("--pca-dim", ts.pca_out, "whitened dimension")
                    ->capture_default_str();
        o_rot = app->add_option("--rotated-dim", ts.rotated_dim,
                                "rotated (search) dimension")
                    ->capture_default_str();
        o_cbits = app->add_option("--coarse-bits", ts.coarse_bits,
                                  "bits per coarse half (cells = 4^bits)")
                      ->capture_default_str();
        o_rm = app->add_option("--residual-m", ts.residual_m,
                               "residual subquantizer count")
                   ->capture_default_str();
        o_rksub = app->add_option("--residual-ksub", ts.residual_ksub,
                                  "residual centroids per subquantizer")
                      ->capture_default_str();
        o_alt = app->add_option("--opq-alternations", ts.opq_alternations,
                                "OPQ rotation updates")
                    ->capture_default_str();
        o_iters = app->add_option("--kmeans-iters", ts.kmeans_iters,
                                  "k-means iterations")
                      ->capture_default_str();
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "train-quantizers");
        cfg.merge(o_vectors, "vectors", vectors);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_seed, "seed", seed);
        cfg.merge(o_pca, "pca_dim", ts.pca_out);
        cfg.merge(o_rot, "rotated_dim", ts.rotated_dim);
        cfg.merge(o_cbits, "coarse_bits", ts.coarse_bits);
        cfg.merge(o_rm, "residual_m", ts.residual_m);
        cfg.merge(o_rksub, "residual_ksub", ts.residual_ksub);
        cfg.merge(o_alt, "opq_alternations", ts.opq_alternations);
        cfg.merge(o_iters, "kmeans_iters", ts.kmeans_iters);
        cfg.merge(o_manifest, "manifest", manifest_path);
        cfg.finish();
        cfg.require(o_vectors, "vectors");
        cfg.require(o_out, "out");
        cfg.require(o_seed, "seed");
        ts.seed = seed;
        ts.verbose = log::level() <= log::Level::kInfo;

        RunManifest man("train-quantizers");
        ordered_json resolved{{"vectors", vectors},
                              {"out", out},
                              {"seed", seed},
                              {"pca_dim", ts.pca_out},
                              {"rotated_dim", ts.rotated_dim},
                              {"coarse_bits", ts.coarse_bits},
                              {"residual_m", ts.residual_m},
                              {"residual_ksub", ts.residual_ksub},
                              {"opq_alternations", ts.opq_alternations},
                              {"kmeans_iters", ts.kmeans_iters}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        VectorMatrix m = load_f32(vectors, "training vectors");
        man.add_input(vectors);
        man.add_timing("read", t_read.seconds());

        Stopwatch t_train;
        QuantizerSet q = train_quantizer_set(m.f32.data(), m.count, m.dim, ts);
        man.add_timing("train", t_train.seconds());

        Stopwatch t_write;
        prepare_out(out);
        q.save(out);
        man.add_output(out);
        man.add_timing("write", t_write.seconds());

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("trained quantizers: %u -> %u -> %u dims, %llu coarse cells\n",
                    q.raw_dim(), q.whitened_dim(), q.rotated_dim(),
                    ull(uint64_t{1} << (2 * q.coarse_bits)));
        return 0;
    }
};

// ---------------------------------------------------------------------------
// index build / index search.

struct IndexBuildCmd {
    std::string quantizers, vectors, ids, out, manifest_path;
    bool allow_duplicates = false;
    CLI::Option *o_q = nullptr, *o_vectors = nullptr, *o_ids = nullptr,
                *o_out = nullptr, *o_allow = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand("build", "Encode vectors into an inverted index");
        o_q = app->add_option("--quantizers", quantizers, "trained quantizer bundle");
        o_vectors = app->add_option(
            "--vectors", vectors,
            "corpus vectors: float32 descriptors or uint8 storage codes");
        o_ids = app->add_option("--ids", ids, "image ids (default: 0..n-1)");
        o_out = app->add_option("--out", out, "output index file");
        o_allow = app->add_flag("--allow-duplicate-ids", allow_duplicates,
                                "permit repeated image ids");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "index", "build");
        cfg.merge(o_q, "quantizers", quantizers);
        cfg.merge(o_vectors, "vectors", vectors);
        cfg.merge(o_ids, "ids", ids);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_allow, "allow_duplicate_ids", allow_duplicates);
        cfg.merge(o_manifest, "manifest", manifest_path);
        cfg.finish();
        cfg.require(o_q, "quantizers");
        cfg.require(o_vectors, "vectors");
        cfg.require(o_out, "out");

        RunManifest man("index-build");
        ordered_json resolved{{"quantizers", quantizers},
                              {"vectors", vectors},
                              {"ids", ids},
                              {"out", out},
                              {"allow_duplicate_ids", allow_duplicates}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        IvfIndex index(QuantizerSet::load(quantizers),
                       allow_duplicates ? DuplicateIds::kAllow
                                        : DuplicateIds::kReject);
        man.add_input(quantizers);
        VectorMatrix m = read_vectors(vectors);
        man.add_input(vectors);
        std::vector<uint64_t> image_ids = load_or_iota_ids(ids, m.count, "ids");
        if (!ids.empty()) man.add_input(ids);
        man.add_timing("read", t_read.seconds());

        const QuantizerSet& qs = index.quantizers();
        Stopwatch t_add;
        if (m.dtype == Dtype::kU8) {
            if (m.dim != qs.whitened_dim())
                throw InvalidArgument(
                    "storage code dim " + std::to_string(m.dim) +
                    " != quantizer storage dim " + std::to_string(qs.whitened_dim()));
            for (uint64_t i = 0; i < m.count; ++i)
                index.add_storage(image_ids[i],
                                  std::span<const uint8_t>(m.row_u8(i), m.dim));
        } else if (m.dtype == Dtype::kF32) {
            if (m.dim != qs.raw_dim())
                throw InvalidArgument("descriptor dim " + std::to_string(m.dim) +
                                      " != quantizer raw dim " +
                                      std::to_string(qs.raw_dim()));
            const uint32_t wd = qs.whitened_dim();
            std::vector<uint8_t> codes(size_t(m.count) * wd);
            int64_t clamped = 0;
#pragma omp parallel for schedule(static) reduction(+ : clamped)
            for (int64_t i = 0; i < static_cast<int64_t>(m.count); ++i) {
                std::vector<float> w =
                    qs.raw_to_whitened({m.row_f32(i), m.dim});
                clamped += static_cast<int64_t>(
                    qs.storage.encode(w.data(), codes.data() + size_t(i) * wd));
            }
            if (clamped > 0)
                log::warn("scalar quantizer clamped %lld dimensions",
                          static_cast<long long>(clamped));
            for (uint64_t i = 0; i < m.count; ++i)
                index.add_storage(image_ids[i],
                                  std::span<const uint8_t>(codes.data() + i * wd, wd));
        } else {
            throw InvalidArgument(
                "index vectors must be float32 descriptors or uint8 storage codes");
        }
        index.seal();
        man.add_timing("encode", t_add.seconds());

        Stopwatch t_write;
        prepare_out(out);
        index.save(out);
        man.add_output(out);
        man.add_timing("write", t_write.seconds());
        man.add_note("count", std::to_string(index.size()));
        man.add_note("nonempty_cells", std::to_string(index.nonempty_cells()));

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("indexed %llu vectors into %llu nonempty cells\n",
                    ull(index.size()), ull(index.nonempty_cells()));
        return 0;
    }
};

struct IndexSearchCmd {
    std::string index_path, queries, query_ids, out, manifest_path;
    uint32_t k = 128;
    uint64_t nprobe = 256;
    CLI::Option *o_index = nullptr, *o_queries = nullptr, *o_qids = nullptr,
                *o_k = nullptr, *o_nprobe = nullptr, *o_out = nullptr,
                *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand("search", "ADC search over an inverted index");
        o_index = app->add_option("--index", index_path, "index file");
        o_queries = app->add_option("--queries", queries,
                                    "query descriptors (float32, raw space)");
        o_qids = app->add_option("--query-ids", query_ids,
                                 "query ids (default: 0..n-1)");
        o_k = app->add_option("--k", k, "neighbors per query")->capture_default_str();
        o_nprobe = app->add_option("--nprobe", nprobe, "cells to probe (0 = all)")
                       ->capture_default_str();
        o_out = app->add_option("--out", out, "output hits (JSONL)");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "index", "search");
        cfg.merge(o_index, "index", index_path);
        cfg.merge(o_queries, "queries", queries);
        cfg.merge(o_qids, "query_ids", query_ids);
        cfg.merge(o_k, "k", k);
        cfg.merge(o_nprobe, "nprobe", nprobe);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_manifest, "manifest", manifest_path);
        cfg.finish();
        cfg.require(o_index, "index");
        cfg.require(o_queries, "queries");
        cfg.require(o_out, "out");
        if (k == 0) throw InvalidArgument("k must be positive");

        RunManifest man("index-search");
        ordered_json resolved{{"index", index_path}, {"queries", queries},
                              {"query_ids", query_ids}, {"k", k},
                              {"nprobe", nprobe},       {"out", out}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        IvfIndex index = IvfIndex::load(index_path);
        man.add_input(index_path);
        VectorMatrix qm = load_f32(queries, "queries");
        man.add_input(queries);
        if (qm.dim != index.quantizers().raw_dim())
            throw InvalidArgument("query dim " + std::to_string(qm.dim) +
                                  " != quantizer raw dim " +
                                  std::to_string(index.quantizers().raw_dim()));
        std::vector<uint64_t> qids =
            load_or_iota_ids(query_ids, qm.count, "query_ids");
        if (!query_ids.empty()) man.add_input(query_ids);
        man.add_timing("read", t_read.seconds());

        const uint64_t probe =
            nprobe == 0 ? index.coarse().cell_count() : nprobe;
        Stopwatch t_search;
        std::vector<std::vector<SearchHit>> hits(qm.count);
        std::vector<IvfIndex::SearchStats> stats(qm.count);
#pragma omp parallel for schedule(dynamic, 1)
        for (int64_t i = 0; i < static_cast<int64_t>(qm.count); ++i) {
            std::vector<float> rot =
                index.quantizers().raw_to_rotated({qm.row_f32(i), qm.dim});
            hits[i] = index.search(rot, k, probe, &stats[i]);
        }
        man.add_timing("search", t_search.seconds());

        Stopwatch t_write;
        std::vector<ordered_json> rows;
        rows.reserve(qm.count);
        for (uint64_t i = 0; i < qm.count; ++i) {
            ordered_json row;
            row["query_id"] = qids[i];
            ordered_json hs = ordered_json::array();
            for (const SearchHit& h : hits[i])
                hs.push_back(ordered_json{{"id", h.id}, {"distance", h.distance}});
            row["hits"] = std::move(hs);
            row["cells_probed"] = stats[i].cells_probed;
            row["candidates"] = stats[i].candidates;
            rows.push_back(std::move(row));
        }
        write_jsonl(out, rows);
        man.add_output(out);
        man.add_timing("write", t_write.seconds());

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("searched %llu queries (k=%u, nprobe=%llu)\n", ull(qm.count), k,
                    ull(probe));
        return 0;
    }
};

// ---------------------------------------------------------------------------
// dedup: stage-1 candidate generation + stage-2 exact re-rank.

struct DedupCmd {
    std::string index_path, queries, query_ids, exact, exact_ids;
    std::string query_exact, query_exact_ids;
    std::string out, review_out, manifest_path;
    uint32_t k = 128;
    uint64_t nprobe = 256;
    double threshold = 0.6;
    uint32_t review_n = 21;
    CLI::Option *o_index = nullptr, *o_queries = nullptr, *o_qids = nullptr,
                *o_exact = nullptr, *o_eids = nullptr, *o_qexact = nullptr,
                *o_qeids = nullptr, *o_out = nullptr, *o_review = nullptr,
                *o_review_n = nullptr, *o_k = nullptr, *o_nprobe = nullptr,
                *o_threshold = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "dedup", "Two-stage near-duplicate detection against an index");
        o_index = app->add_option("--index", index_path, "corpus index file");
        o_queries = app->add_option("--queries", queries,
                                    "query descriptors (float32, raw space)");
        o_qids = app->add_option("--query-ids", query_ids,
                                 "query ids (default: 0..n-1)");
        o_exact = app->add_option("--exact", exact,
                                  "uncompressed corpus features for re-ranking");
        o_eids = app->add_option("--exact-ids", exact_ids,
                                 "corpus feature ids (default: 0..n-1)");
        o_qexact = app->add_option("--query-exact", query_exact,
                                   "uncompressed query features "
                                   "(default: --exact store)");
        o_qeids = app->add_option("--query-exact-ids", query_exact_ids,
                                  "query feature ids (default: 0..n-1)");
        o_k = app->add_option("--k", k, "candidates per query")->capture_default_str();
        o_nprobe = app->add_option("--nprobe", nprobe, "cells to probe (0 = all)")
                       ->capture_default_str();
        o_threshold = app->add_option("--threshold", threshold,
                                      "squared distance flag threshold")
                          ->capture_default_str();
        o_out = app->add_option("--out", out, "output verdicts (JSONL)");
        o_review = app->add_option("--review-out", review_out,
                                   "annotation worklists (JSONL)");
        o_review_n = app->add_option("--review-n", review_n,
                                     "nearest verdicts per worklist")
                         ->capture_default_str();
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "dedup");
        cfg.merge(o_index, "index", index_path);
        cfg.merge(o_queries, "queries", queries);
        cfg.merge(o_qids, "query_ids", query_ids);
        cfg.merge(o_exact, "exact", exact);
        cfg.merge(o_eids, "exact_ids", exact_ids);
        cfg.merge(o_qexact, "query_exact", query_exact);
        cfg.merge(o_qeids, "query_exact_ids", query_exact_ids);
        cfg.merge(o_k, "k", k);
        cfg.merge(o_nprobe, "nprobe", nprobe);
        cfg.merge(o_threshold, "threshold", threshold);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_review, "review_out", review_out);
        cfg.merge(o_review_n, "review_n", review_n);
        cfg.merge(o_manifest, "manifest", manifest_path);
        cfg.finish();
        cfg.require(o_index, "index");
        cfg.require(o_queries, "queries");
        cfg.require(o_exact, "exact");
        cfg.require(o_out, "out");
        if (k == 0) throw InvalidArgument("k must be positive");

        RunManifest man("dedup");
        ordered_json resolved{
            {"index", index_path}, {"queries", queries},
            {"query_ids", query_ids}, {"exact", exact},
            {"exact_ids", exact_ids}, {"query_exact", query_exact},
            {"query_exact_ids", query_exact_ids}, {"k", k},
            {"nprobe", nprobe}, {"threshold", threshold},
            {"review_out", review_out}, {"review_n", review_n},
            {"out", out}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        IvfIndex index = IvfIndex::load(index_path);
        man.add_input(index_path);
        VectorMatrix qm = load_f32(queries, "queries");
        man.add_input(queries);
        std::vector<uint64_t> qids =
            load_or_iota_ids(query_ids, qm.count, "query_ids");
        if (!query_ids.empty()) man.add_input(query_ids);
        ExactStore qstore = build_store(qm, qids);

        VectorMatrix em = load_f32(exact, "exact features");
        man.add_input(exact);
        std::vector<uint64_t> eids =
            load_or_iota_ids(exact_ids, em.count, "exact_ids");
        if (!exact_ids.empty()) man.add_input(exact_ids);
        ExactStore estore = build_store(em, eids);

        ExactStore qestore_owned;
        const ExactStore* qestore = &estore;
        if (!query_exact.empty()) {
            VectorMatrix qem = load_f32(query_exact, "query exact features");
            man.add_input(query_exact);
            std::vector<uint64_t> qeids =
                load_or_iota_ids(query_exact_ids, qem.count, "query_exact_ids");
            if (!query_exact_ids.empty()) man.add_input(query_exact_ids);
            qestore_owned = build_store(qem, qeids);
            qestore = &qestore_owned;
        }
        man.add_timing("read", t_read.seconds());

        const uint64_t probe =
            nprobe == 0 ? index.coarse().cell_count() : nprobe;
        Stopwatch t_s1;
        std::vector<CandidateSet> candidates = stage1(qids, qstore, index, k, probe);
        man.add_timing("stage1", t_s1.seconds());

        Stopwatch t_s2;
        std::vector<DuplicateVerdict> verdicts;
        uint64_t stage1_errors = 0, missing_query_exact = 0;
        for (const CandidateSet& cs : candidates) {
            if (!cs.error.empty()) {
                ++stage1_errors;
                log::warn("%s", cs.error.c_str());
                continue;
            }
            const float* qe = qestore->find(cs.query_id);
            if (qe == nullptr) {
                ++missing_query_exact;
                for (const Candidate& c : cs.candidates) {
                    DuplicateVerdict v;
                    v.query_id = cs.query_id;
                    v.neighbor_id = c.id;
                    v.exact_sq_distance = std::nan("");
                    v.error = "exact feature missing for query " +
                              std::to_string(cs.query_id);
                    verdicts.push_back(std::move(v));
                }
                continue;
            }
            std::vector<DuplicateVerdict> vs = stage2(
                std::span<const float>(qe, qestore->dim()), cs, estore, threshold);
            verdicts.insert(verdicts.end(), std::make_move_iterator(vs.begin()),
                            std::make_move_iterator(vs.end()));
        }
        man.add_timing("stage2", t_s2.seconds());

        Stopwatch t_write;
        prepare_out(out);
        write_verdicts(out, verdicts);
        man.add_output(out);

        std::set<uint64_t> flagged_queries;
        uint64_t flagged_pairs = 0;
        for (const DuplicateVerdict& v : verdicts)
            if (v.flagged) {
                ++flagged_pairs;
                flagged_queries.insert(v.query_id);
            }

        if (!review_out.empty()) {
            std::vector<ordered_json> rows;
            std::unordered_set<uint64_t> seen;
            for (const DuplicateVerdict& v : verdicts) {
                if (!seen.insert(v.query_id).second) continue;
                std::optional<ReviewManifest> rm =
                    review_manifest(v.query_id, verdicts, review_n);
                if (!rm) continue;
                ordered_json row;
                row["query_id"] = rm->query_id;
                row["short_list"] = rm->short_list;
                ordered_json entries = ordered_json::array();
                for (const ReviewEntry& e : rm->entries)
                    entries.push_back(ordered_json{{"neighbor_id", e.neighbor_id},
                                                   {"distance", e.distance},
                                                   {"flagged", e.flagged}});
                row["entries"] = std::move(entries);
                rows.push_back(std::move(row));
            }
            write_jsonl(review_out, rows);
            man.add_output(review_out);
        }
        man.add_timing("write", t_write.seconds());
        man.add_note("flagged_queries", std::to_string(flagged_queries.size()));
        man.add_note("flagged_pairs", std::to_string(flagged_pairs));
        man.add_note("stage1_errors", std::to_string(stage1_errors));
        man.add_note("missing_query_exact", std::to_string(missing_query_exact));

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("flagged %zu of %llu queries (%.2f%%), %llu pairs\n",
                    flagged_queries.size(), ull(qm.count),
                    qm.count ? 100.0 * double(flagged_queries.size()) / double(qm.count)
                             : 0.0,
                    ull(flagged_pairs));
        return 0;
    }
};

// ---------------------------------------------------------------------------
// canonicalize / vocab.

struct CanonicalizeCmd {
    std::string tags, synsets, out, manifest_path;
    CLI::Option *o_tags = nullptr, *o_synsets = nullptr, *o_out = nullptr,
                *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "canonicalize", "Merge hashtags that share a matched-synset set");
        o_tags = app->add_option("--tags", tags, "tag counts (TSV)");
        o_synsets = app->add_option("--synsets", synsets, "term->synsets db (TSV)");
        o_out = app->add_option("--out", out, "output canonical map (TSV)");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "canonicalize");
        cfg.merge(o_tags, "tags", tags);
        cfg.merge(o_synsets, "synsets", synsets);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_manifest, "manifest", manifest_path);
        cfg.finish();
        cfg.require(o_tags, "tags");
        cfg.require(o_synsets, "synsets");
        cfg.require(o_out, "out");

        RunManifest man("canonicalize");
        ordered_json resolved{{"tags", tags}, {"synsets", synsets}, {"out", out}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        std::vector<TagCount> counts = read_tag_counts(tags);
        man.add_input(tags);
        SynsetDb db = SynsetDb::load_tsv(synsets);
        man.add_input(synsets);
        man.add_timing("read", t_read.seconds());

        Stopwatch t_merge;
        CanonicalMap cm = canonical_merge(counts, db);
        man.add_timing("merge", t_merge.seconds());

        Stopwatch t_write;
        prepare_out(out);
        write_canonical_map(out, cm);
        man.add_output(out);
        man.add_timing("write", t_write.seconds());
        man.add_note("groups", std::to_string(cm.groups.size()));

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("%zu tags -> %zu canonical groups\n", counts.size(),
                    cm.groups.size());
        return 0;
    }
};

struct VocabCmd {
    std::string tags, synsets, seed_synsets, out, manifest_path;
    uint64_t top_n = 0;
    CLI::Option *o_tags = nullptr, *o_synsets = nullptr, *o_seeds = nullptr,
                *o_top = nullptr, *o_out = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "vocab", "Select the hashtag vocabulary matching a seed synset set");
        o_tags = app->add_option("--tags", tags, "tag counts (TSV)");
        o_synsets = app->add_option("--synsets", synsets, "term->synsets db (TSV)");
        o_seeds = app->add_option("--seed-synsets", seed_synsets,
                                  "file of seed synset ids, one per line");
        o_top = app->add_option("--top-n", top_n, "keep the n most frequent tags");
        o_out = app->add_option("--out", out, "output vocabulary (TSV)");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "vocab");
        cfg.merge(o_tags, "tags", tags);
        cfg.merge(o_synsets, "synsets", synsets);
        cfg.merge(o_seeds, "seed_synsets", seed_synsets);
        cfg.merge(o_top, "top_n", top_n);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_manifest, "manifest", manifest_path);
        bool have_top = cfg.resolved(o_top, "top_n");
        cfg.finish();
        cfg.require(o_tags, "tags");
        cfg.require(o_synsets, "synsets");
        cfg.require(o_seeds, "seed_synsets");
        cfg.require(o_out, "out");

        RunManifest man("vocab");
        ordered_json resolved{{"tags", tags},
                              {"synsets", synsets},
                              {"seed_synsets", seed_synsets},
                              {"top_n", have_top ? ordered_json(top_n)
                                                 : ordered_json(nullptr)},
                              {"out", out}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        std::vector<TagCount> counts = read_tag_counts(tags);
        man.add_input(tags);
        SynsetDb db = SynsetDb::load_tsv(synsets);
        man.add_input(synsets);
        std::unordered_set<std::string> seeds = read_line_set(seed_synsets);
        man.add_input(seed_synsets);
        man.add_timing("read", t_read.seconds());

        Stopwatch t_select;
        std::optional<uint64_t> tn =
            have_top ? std::optional<uint64_t>(top_n) : std::nullopt;
        std::vector<TagCount> vocab = select_vocab(counts, db, seeds, tn);
        man.add_timing("select", t_select.seconds());

        Stopwatch t_write;
        prepare_out(out);
        write_tag_counts(out, vocab);
        man.add_output(out);
        man.add_timing("write", t_write.seconds());
        man.add_note("vocab_size", std::to_string(vocab.size()));

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("selected %zu of %zu tags\n", vocab.size(), counts.size());
        return 0;
    }
};

// ---------------------------------------------------------------------------
// resample: materialize one resampled training epoch.

struct ResampleCmd {
    std::string records, mode = "uniform", out_ids, out_masks, manifest_path;
    uint64_t seed = 0;
    double threshold = 0.0;
    uint64_t target_length = 0;
    CLI::Option *o_records = nullptr, *o_mode = nullptr, *o_seed = nullptr,
                *o_threshold = nullptr, *o_target = nullptr, *o_ids = nullptr,
                *o_masks = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "resample", "Materialize a frequency-resampled training epoch");
        o_records = app->add_option("--records", records, "image records (JSONL)");
        o_mode = app->add_option("--mode", mode, "natural | uniform | sqrt")
                     ->capture_default_str();
        o_seed = app->add_option("--seed", seed, "epoch seed (required)");
        o_threshold = app->add_option("--threshold", threshold,
                                      "replication threshold t");
        o_target = app->add_option("--target-length", target_length,
                                   "pick t so the epoch has ~this many copies");
        o_ids = app->add_option("--out-ids", out_ids, "output copy id stream");
        o_masks = app->add_option("--out-masks", out_masks,
                                  "output tag-retention mask stream");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "resample");
        cfg.merge(o_records, "records", records);
        cfg.merge(o_mode, "mode", mode);
        cfg.merge(o_seed, "seed", seed);
        cfg.merge(o_threshold, "threshold", threshold);
        cfg.merge(o_target, "target_length", target_length);
        cfg.merge(o_ids, "out_ids", out_ids);
        cfg.merge(o_masks, "out_masks", out_masks);
        cfg.merge(o_manifest, "manifest", manifest_path);
        bool have_t = cfg.resolved(o_threshold, "threshold");
        bool have_len = cfg.resolved(o_target, "target_length");
        cfg.finish();
        cfg.require(o_records, "records");
        cfg.require(o_seed, "seed");
        cfg.require(o_ids, "out_ids");
        cfg.require(o_masks, "out_masks");

        SampleMode m = sample_mode_from_string(mode);
        if (m != SampleMode::kNatural && have_t == have_len)
            throw InvalidArgument(
                have_t ? "give exactly one of threshold and target_length"
                       : "missing required field: threshold (or target_length)");

        RunManifest man("resample");
        ordered_json resolved{{"records", records},
                              {"mode", mode},
                              {"seed", seed},
                              {"threshold", have_t ? ordered_json(threshold)
                                                   : ordered_json(nullptr)},
                              {"target_length",
                               have_len ? ordered_json(target_length)
                                        : ordered_json(nullptr)},
                              {"out_ids", out_ids},
                              {"out_masks", out_masks}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        std::vector<ImageRecord> recs = read_records(records);
        if (recs.empty())
            throw InvalidArgument("empty record corpus: " + records);
        man.add_input(records);
        FrequencyTable freqs = FrequencyTable::from_records(recs);
        man.add_timing("read", t_read.seconds());

        Stopwatch t_plan;
        double t;
        if (have_t) {
            t = threshold;
        } else if (have_len) {
            t = select_threshold(freqs, recs, target_length, m, seed);
            log::info("selected threshold %.6g for target length %llu", t,
                      ull(target_length));
        } else {
            t = static_cast<double>(freqs.max_count());  // natural: r == 1 anyway
        }
        ReplicationPlan plan = make_plan(freqs, t, m);
        man.add_timing("plan", t_plan.seconds());

        Stopwatch t_build;
        EpochList list = build_epoch_list(recs, freqs, plan, seed);
        man.add_timing("build", t_build.seconds());

        Stopwatch t_write;
        prepare_out(out_ids);
        prepare_out(out_masks);
        write_epoch_list(list, out_ids, out_masks);
        man.add_output(out_ids);
        man.add_output(out_masks);
        man.add_timing("write", t_write.seconds());
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", t);
            man.add_note("threshold", buf);
        }
        man.add_note("copies", std::to_string(list.ids.size()));

        std::string mp =
            manifest_path.empty() ? default_manifest(out_ids) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("materialized %zu copies of %zu images (threshold %g)\n",
                    list.ids.size(), recs.size(), t);
        return 0;
    }
};

// ---------------------------------------------------------------------------
// targets: per-image uniform label mass over in-vocabulary tags.

struct TargetsCmd {
    std::string records, vocab, canonical_map, out, manifest_path;
    CLI::Option *o_records = nullptr, *o_vocab = nullptr, *o_cmap = nullptr,
                *o_out = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "targets", "Build per-image 1/k label targets over a vocabulary");
        o_records = app->add_option("--records", records, "image records (JSONL)");
        o_vocab = app->add_option("--vocab", vocab, "vocabulary (TSV)");
        o_cmap = app->add_option("--canonical-map", canonical_map,
                                 "canonical map (TSV) applied before lookup");
        o_out = app->add_option("--out", out, "output targets (JSONL)");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "targets");
        cfg.merge(o_records, "records", records);
        cfg.merge(o_vocab, "vocab", vocab);
        cfg.merge(o_cmap, "canonical_map", canonical_map);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_manifest, "manifest", manifest_path);
        cfg.finish();
        cfg.require(o_records, "records");
        cfg.require(o_vocab, "vocab");
        cfg.require(o_out, "out");

        RunManifest man("targets");
        ordered_json resolved{{"records", records},
                              {"vocab", vocab},
                              {"canonical_map", canonical_map},
                              {"out", out}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        std::vector<ImageRecord> recs = read_records(records);
        man.add_input(records);
        std::vector<TagCount> vlist = read_tag_counts(vocab);
        man.add_input(vocab);
        std::unordered_set<std::string> vset;
        for (const TagCount& tc : vlist) vset.insert(tc.tag);
        std::optional<CanonicalMap> cmap;
        if (!canonical_map.empty()) {
            cmap = read_canonical_map(canonical_map);
            man.add_input(canonical_map);
        }
        man.add_timing("read", t_read.seconds());

        Stopwatch t_build;
        std::vector<ordered_json> rows;
        rows.reserve(recs.size());
        uint64_t dropped = 0;
        for (const ImageRecord& r : recs) {
            std::optional<TargetVector> tgt;
            if (cmap) {
                std::vector<std::string> mapped = relabel(r.tags, *cmap, vset);
                tgt = make_target(mapped, vset);
            } else {
                tgt = make_target(r.tags, vset);
            }
            if (!tgt) {
                ++dropped;
                continue;
            }
            rows.push_back(ordered_json{
                {"image_id", r.id}, {"tags", tgt->tags}, {"value", tgt->value}});
        }
        man.add_timing("build", t_build.seconds());

        Stopwatch t_write;
        write_jsonl(out, rows);
        man.add_output(out);
        man.add_timing("write", t_write.seconds());
        man.add_note("emitted", std::to_string(rows.size()));
        man.add_note("dropped", std::to_string(dropped));

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("targets: %zu emitted, %llu dropped (no in-vocab tag)\n",
                    rows.size(), ull(dropped));
        return 0;
    }
};

// ---------------------------------------------------------------------------
// noise: frequency-weighted label replacement.

struct NoiseCmd {
    std::string records, counts, out, manifest_path;
    double p = 0.0;
    uint64_t seed = 0;
    CLI::Option *o_records = nullptr, *o_counts = nullptr, *o_p = nullptr,
                *o_seed = nullptr, *o_out = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "noise", "Replace a fraction of tag slots with marginal draws");
        o_records = app->add_option("--records", records, "image records (JSONL)");
        o_p = app->add_option("--p", p, "fraction of tag slots to replace");
        o_seed = app->add_option("--seed", seed, "replacement seed (required)");
        o_counts = app->add_option("--counts", counts,
                                   "marginal tag counts (TSV, default: from records)");
        o_out = app->add_option("--out", out, "output records (JSONL)");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "noise");
        cfg.merge(o_records, "records", records);
        cfg.merge(o_p, "p", p);
        cfg.merge(o_seed, "seed", seed);
        cfg.merge(o_counts, "counts", counts);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_manifest, "manifest", manifest_path);
        bool have_p = cfg.resolved(o_p, "p");
        cfg.finish();
        cfg.require(o_records, "records");
        if (!have_p) throw InvalidArgument("missing required field: p");
        cfg.require(o_seed, "seed");
        cfg.require(o_out, "out");

        RunManifest man("noise");
        ordered_json resolved{{"records", records},
                              {"p", p},
                              {"seed", seed},
                              {"counts", counts},
                              {"out", out}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        std::vector<ImageRecord> recs = read_records(records);
        if (recs.empty())
            throw InvalidArgument("empty record corpus: " + records);
        man.add_input(records);
        FrequencyTable freqs;
        if (!counts.empty()) {
            freqs = FrequencyTable::from_counts(read_tag_counts(counts));
            man.add_input(counts);
        } else {
            freqs = FrequencyTable::from_records(recs);
        }
        man.add_timing("read", t_read.seconds());

        Stopwatch t_inject;
        std::vector<ImageRecord> noised = inject_noise(recs, p, freqs, seed);
        man.add_timing("inject", t_inject.seconds());

        uint64_t total_slots = 0;
        for (const ImageRecord& r : recs) total_slots += r.tags.size();
        uint64_t replaced = static_cast<uint64_t>(std::llround(p * double(total_slots)));

        Stopwatch t_write;
        prepare_out(out);
        write_records(out, noised);
        man.add_output(out);
        man.add_timing("write", t_write.seconds());
        man.add_note("replaced", std::to_string(replaced));
        man.add_note("total_slots", std::to_string(total_slots));

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        std::printf("replaced %llu of %llu tag slots\n", ull(replaced),
                    ull(total_slots));
        return 0;
    }
};

// ---------------------------------------------------------------------------
// schedule: LR plan presets and interpolation.

struct ScheduleCmd {
    std::string preset_name, family, json_out, manifest_path;
    double dataset_size = 0.0;
    uint64_t minibatch = 0;
    uint64_t warmup = 0;
    uint64_t lr_at_images = 0;
    bool list = false;
    CLI::Option *o_preset = nullptr, *o_size = nullptr, *o_family = nullptr,
                *o_mb = nullptr, *o_warmup = nullptr, *o_lr_at = nullptr,
                *o_json = nullptr, *o_list = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand("schedule",
                                    "Print or export a learning-rate plan");
        o_preset = app->add_option("--preset", preset_name, "named preset");
        o_list = app->add_flag("--list", list, "list preset names and exit");
        o_size = app->add_option("--dataset-size", dataset_size,
                                 "images in a hashtag corpus (with --family)");
        o_family = app->add_option("--family", family,
                                   "label-space family: 1.5k | 17k");
        o_mb = app->add_option("--minibatch", minibatch, "override minibatch size");
        o_warmup = app->add_option("--warmup-images", warmup,
                                   "override warm-up image count");
        o_lr_at = app->add_option("--lr-at", lr_at_images,
                                  "also print the LR after this many images");
        o_json = app->add_option("--json", json_out, "write the plan as JSON");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "schedule");
        cfg.merge(o_preset, "preset", preset_name);
        cfg.merge(o_size, "dataset_size", dataset_size);
        cfg.merge(o_family, "family", family);
        cfg.merge(o_mb, "minibatch", minibatch);
        cfg.merge(o_warmup, "warmup_images", warmup);
        cfg.merge(o_lr_at, "lr_at", lr_at_images);
        cfg.merge(o_json, "json", json_out);
        cfg.merge(o_manifest, "manifest", manifest_path);
        bool have_preset = cfg.resolved(o_preset, "preset");
        bool have_size = cfg.resolved(o_size, "dataset_size");
        bool have_mb = cfg.resolved(o_mb, "minibatch");
        bool have_warmup = cfg.resolved(o_warmup, "warmup_images");
        bool have_lr_at = cfg.resolved(o_lr_at, "lr_at");
        cfg.finish();

        if (list) {
            for (const std::string& n : preset_names()) std::printf("%s\n", n.c_str());
            return 0;
        }
        if (have_preset && have_size)
            throw InvalidArgument("give either preset or dataset_size, not both");
        ScheduleSpec s;
        if (have_preset) {
            s = preset(preset_name);
        } else if (have_size) {
            if (!cfg.resolved(o_family, "family"))
                throw InvalidArgument("missing required field: family");
            s = ig_preset(dataset_size, family);
        } else {
            throw InvalidArgument("missing required field: preset");
        }
        if (have_mb) s.minibatch = minibatch;
        if (have_warmup) s.warmup_images = warmup;
        validate(s);

        std::printf("schedule %s\n", s.name.c_str());
        std::printf("peak LR %g\n", peak_lr(s));
        if (!s.step_epochs.empty()) {
            std::printf("steps [");
            for (size_t i = 0; i < s.step_epochs.size(); ++i)
                std::printf(i ? ", %g" : "%g", s.step_epochs[i]);
            std::printf("] epochs, decay %g\n", s.decay_factor);
        } else {
            std::printf("decays %u x %g, equally spaced\n", s.n_decays,
                        s.decay_factor);
        }
        std::printf("total images %llu, warmup %llu\n", ull(s.total_images),
                    ull(s.warmup_images));
        std::printf("weight decay %g\n", s.weight_decay);
        if (have_lr_at)
            std::printf("lr at %llu images: %g\n", ull(lr_at_images),
                        lr_at(lr_at_images, s));

        if (!json_out.empty()) {
            write_text(json_out, schedule_json(s));
            RunManifest man("schedule");
            ordered_json resolved{
                {"preset", have_preset ? ordered_json(preset_name) : ordered_json(nullptr)},
                {"dataset_size", have_size ? ordered_json(dataset_size) : ordered_json(nullptr)},
                {"family", family},
                {"minibatch", have_mb ? ordered_json(minibatch) : ordered_json(nullptr)},
                {"warmup_images", have_warmup ? ordered_json(warmup) : ordered_json(nullptr)},
                {"json", json_out}};
            man.set_config(resolved.dump(2));
            man.add_output(json_out);
            std::string mp =
                manifest_path.empty() ? default_manifest(json_out) : manifest_path;
            prepare_out(mp);
            man.write(mp);
        }
        return 0;
    }
};

// ---------------------------------------------------------------------------
// report: duplicate statistics and accuracy lower bound from verdicts.

struct ReportCmd {
    std::string verdicts, out, manifest_path;
    uint64_t test_size = 0;
    double accuracy = -1.0;  // percent
    CLI::Option *o_verdicts = nullptr, *o_size = nullptr, *o_acc = nullptr,
                *o_out = nullptr, *o_manifest = nullptr;
    CLI::App* app = nullptr;

    void setup(CLI::App& parent) {
        app = parent.add_subcommand(
            "report", "Summarize verdicts into duplicate rates and bounds");
        o_verdicts = app->add_option("--verdicts", verdicts, "verdicts (JSONL)");
        o_size = app->add_option("--test-size", test_size, "test set image count");
        o_acc = app->add_option("--accuracy", accuracy,
                                "measured accuracy in percent (e.g. 84.2)");
        o_out = app->add_option("--out", out, "output report (JSON)");
        o_manifest = app->add_option("--manifest", manifest_path, "manifest path");
    }

    int run(const json& tree) {
        ConfigNode cfg(tree, "report");
        cfg.merge(o_verdicts, "verdicts", verdicts);
        cfg.merge(o_size, "test_size", test_size);
        cfg.merge(o_acc, "accuracy", accuracy);
        cfg.merge(o_out, "out", out);
        cfg.merge(o_manifest, "manifest", manifest_path);
        bool have_acc = cfg.resolved(o_acc, "accuracy");
        cfg.finish();
        cfg.require(o_verdicts, "verdicts");
        cfg.require(o_size, "test_size");
        cfg.require(o_out, "out");
        if (test_size == 0) throw InvalidArgument("test_size must be positive");
        if (have_acc && (accuracy < 0.0 || accuracy > 100.0))
            throw InvalidArgument("accuracy must be a percentage in [0, 100]");

        RunManifest man("report");
        ordered_json resolved{{"verdicts", verdicts},
                              {"test_size", test_size},
                              {"accuracy", have_acc ? ordered_json(accuracy)
                                                    : ordered_json(nullptr)},
                              {"out", out}};
        man.set_config(resolved.dump(2));

        Stopwatch t_read;
        std::vector<DuplicateVerdict> vs = read_verdicts(verdicts);
        man.add_input(verdicts);
        man.add_timing("read", t_read.seconds());

        std::set<uint64_t> queries, flagged_q, confirmed_q;
        uint64_t flagged_pairs = 0;
        bool any_labels = false;
        for (const DuplicateVerdict& v : vs) {
            queries.insert(v.query_id);
            if (v.flagged) {
                ++flagged_pairs;
                flagged_q.insert(v.query_id);
            }
            if (v.label != HumanLabel::kUnreviewed) any_labels = true;
            if (v.label == HumanLabel::kDuplicate) confirmed_q.insert(v.query_id);
        }
        const uint64_t dup_count =
            any_labels ? confirmed_q.size() : flagged_q.size();
        const char* basis = any_labels ? "reviewed" : "flagged";

        char pct[32];
        std::snprintf(pct, sizeof pct, "%.2f%%",
                      100.0 * double(dup_count) / double(test_size));

        ordered_json rep{{"queries", queries.size()},
                         {"flagged_queries", flagged_q.size()},
                         {"flagged_pairs", flagged_pairs},
                         {"confirmed_queries", confirmed_q.size()},
                         {"basis", basis},
                         {"duplicates", dup_count},
                         {"test_size", test_size},
                         {"duplicate_percent", pct}};
        std::printf("duplicates %llu of %llu test images (%s, %s)\n",
                    ull(dup_count), ull(test_size), pct, basis);
        if (have_acc) {
            double lb = lower_bound_accuracy(accuracy / 100.0, dup_count, test_size);
            char disp[32];
            std::snprintf(disp, sizeof disp, "%.1f%%", 100.0 * lb);
            rep["measured_accuracy_percent"] = accuracy;
            rep["lower_bound_accuracy"] = lb;
            rep["lower_bound_display"] = disp;
            std::printf("measured accuracy %.1f%% -> lower bound %s\n", accuracy,
                        disp);
        }

        Stopwatch t_write;
        write_text(out, rep.dump(2) + "\n");
        man.add_output(out);
        man.add_timing("write", t_write.seconds());

        std::string mp = manifest_path.empty() ? default_manifest(out) : manifest_path;
        prepare_out(mp);
        man.write(mp);
        return 0;
    }
};

void apply_thread_env() {
    const char* env = std::getenv("WILDSET_THREADS");
    if (env == nullptr || *env == '\0') return;
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) {
        log::warn("ignoring invalid WILDSET_THREADS value '%s'", env);
        return;
    }
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(n));
#else
    (void)n;
#endif
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wildset: hashtag-supervised dataset construction toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough(true);

    std::string config_path;
    bool quiet = false;
    app.add_option("--config", config_path,
                   "JSON config tree keyed by subcommand; flags win");
    app.add_flag("--quiet", quiet, "suppress informational output");

    DescriptorsCmd descriptors;
    TrainQuantizersCmd train_quantizers;
    CLI::App* index_app =
        app.add_subcommand("index", "Build or search an inverted index");
    index_app->require_subcommand(1);
    index_app->fallthrough(true);
    IndexBuildCmd index_build;
    IndexSearchCmd index_search;
    DedupCmd dedup;
    CanonicalizeCmd canonicalize;
    VocabCmd vocab;
    ResampleCmd resample;
    TargetsCmd targets;
    NoiseCmd noise;
    ScheduleCmd schedule;
    ReportCmd report;

    descriptors.setup(app);
    train_quantizers.setup(app);
    index_build.setup(*index_app);
    index_search.setup(*index_app);
    dedup.setup(app);
    canonicalize.setup(app);
    vocab.setup(app);
    resample.setup(app);
    targets.setup(app);
    noise.setup(app);
    schedule.setup(app);
    report.setup(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);  // prints the usage error
        return 2;
    }

    if (quiet) log::set_level(log::Level::kWarn);
    apply_thread_env();

    try {
        json tree = load_config_tree(config_path);
        if (descriptors.app->parsed()) return descriptors.run(tree);
        if (train_quantizers.app->parsed()) return train_quantizers.run(tree);
        if (index_app->parsed()) {
            if (index_build.app->parsed()) return index_build.run(tree);
            if (index_search.app->parsed()) return index_search.run(tree);
        }
        if (dedup.app->parsed()) return dedup.run(tree);
        if (canonicalize.app->parsed()) return canonicalize.run(tree);
        if (vocab.app->parsed()) return vocab.run(tree);
        if (resample.app->parsed()) return resample.run(tree);
        if (targets.app->parsed()) return targets.run(tree);
        if (noise.app->parsed()) return noise.run(tree);
        if (schedule.app->parsed()) return schedule.run(tree);
        if (report.app->parsed()) return report.run(tree);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "wildset: error: %s\n", e.what());
        return 1;
    }
    return 0;
}
