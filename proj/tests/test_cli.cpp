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

// End-to-end checks against the wildset binary: exit codes, printed
// summaries, config-file merging, and byte-stable artifacts across reruns.

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"
#include "wildset/dedup.hpp"
#include "wildset/digest.hpp"
#include "wildset/io.hpp"

#ifndef WILDSET_CLI_PATH
#error "WILDSET_CLI_PATH must point at the wildset binary"
#endif

using namespace wildset;

namespace {

// Runs the CLI through the shell, captures stdout+stderr into `capture`,
// and returns the process exit status.
int run_cli(const std::string& args, const std::string& capture,
            const std::string& env = "") {
    std::string cmd;
    if (!env.empty()) cmd += env + " ";
    cmd += std::string(WILDSET_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::vector<uint8_t> data = read_file(path);
    return std::string(data.begin(), data.end());
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

void write_text(const std::string& path, const std::string& text) {
    write_file(path, std::span<const uint8_t>(
                         reinterpret_cast<const uint8_t*>(text.data()),
                         text.size()));
}

void write_f32_matrix(const std::string& path, const std::vector<float>& data,
                      uint64_t count, uint32_t dim) {
    VectorMatrix m;
    m.dtype = Dtype::kF32;
    m.dim = dim;
    m.count = count;
    m.f32 = data;
    write_vectors(path, m);
}

}  // namespace

TEST_CASE("cli: schedule preset prints derived settings") {
    wtest::TempDir td;
    std::string cap = td.file("out.txt");
    CHECK(run_cli("schedule --preset in1k --minibatch 3072", cap) == 0);
    std::string out = slurp(cap);
    CHECK(contains(out, "peak LR 1.2"));
    CHECK(contains(out, "steps [30, 30, 30, 10] epochs, decay 0.1"));
}

TEST_CASE("cli: version, usage errors, and validation errors") {
    wtest::TempDir td;
    std::string cap = td.file("out.txt");

    CHECK(run_cli("--version", cap) == 0);
    CHECK(contains(slurp(cap), "0.1.0"));

    // Unknown subcommand, missing subcommand, unknown flag: usage errors.
    CHECK(run_cli("frobnicate", cap) == 2);
    CHECK(run_cli("", cap) == 2);
    CHECK(run_cli("schedule --no-such-flag", cap) == 2);

    // Required field absent from both flags and config: validation error,
    // reported by field name.
    CHECK(run_cli("train-quantizers --vectors a.wsd --out q.bin", cap) == 1);
    CHECK(contains(slurp(cap), "missing required field: seed"));
}

TEST_CASE("cli: config file supplies defaults and flags win") {
    wtest::TempDir td;
    std::string cap = td.file("out.txt");

    // Values come entirely from the config tree; nodes for other
    // subcommands are ignored.
    std::string cfg1 = td.file("cfg1.json");
    write_text(cfg1,
               "{\"schedule\": {\"preset\": \"in1k\", \"minibatch\": 3072},\n"
               " \"noise\": {\"p\": 0.25}}\n");
    CHECK(run_cli("--config " + cfg1 + " schedule", cap) == 0);
    CHECK(contains(slurp(cap), "peak LR 1.2"));

    // A flag given on the command line overrides the config value.
    std::string cfg2 = td.file("cfg2.json");
    write_text(cfg2, "{\"schedule\": {\"preset\": \"in1k\", \"minibatch\": 8064}}\n");
    CHECK(run_cli("--config " + cfg2 + " schedule --minibatch 3072", cap) == 0);
    CHECK(contains(slurp(cap), "peak LR 1.2"));

    // Unknown keys inside a consumed node are rejected, not ignored.
    std::string cfg3 = td.file("cfg3.json");
    write_text(cfg3, "{\"schedule\": {\"presett\": \"in1k\"}}\n");
    CHECK(run_cli("--config " + cfg3 + " schedule", cap) == 1);
    CHECK(contains(slurp(cap), "unknown config field: schedule.presett"));

    // Type mismatches are rejected too.
    std::string cfg4 = td.file("cfg4.json");
    write_text(cfg4, "{\"schedule\": {\"preset\": \"in1k\", \"minibatch\": \"many\"}}\n");
    CHECK(run_cli("--config " + cfg4 + " schedule", cap) == 1);
    std::string out = slurp(cap);
    CHECK(contains(out, "schedule.minibatch"));
    CHECK(contains(out, "wrong type"));
}

TEST_CASE("cli: thread override env var is accepted") {
    wtest::TempDir td;
    std::string cap = td.file("out.txt");
    CHECK(run_cli("schedule --preset in1k", cap, "WILDSET_THREADS=2") == 0);
    // An unparseable value warns but does not abort the run.
    CHECK(run_cli("schedule --preset in1k", cap, "WILDSET_THREADS=bogus") == 0);
}

TEST_CASE("cli: resample names an empty input corpus") {
    wtest::TempDir td;
    std::string cap = td.file("out.txt");
    std::string records = td.file("records.jsonl");
    write_text(records, "");
    int rc = run_cli("resample --records " + records +
                         " --mode natural --seed 1 --out-ids " + td.file("ids") +
                         " --out-masks " + td.file("masks"),
                     cap);
    CHECK(rc == 1);
    std::string out = slurp(cap);
    CHECK(contains(out, "empty record corpus"));
    CHECK(contains(out, records));
}

TEST_CASE("cli: report summarizes verdicts and lower-bounds accuracy") {
    wtest::TempDir td;
    std::string cap = td.file("out.txt");

    // 150 flagged queries, none human-reviewed yet.
    std::vector<DuplicateVerdict> vs(150);
    for (int i = 0; i < 150; ++i) {
        vs[i].query_id = uint64_t(i);
        vs[i].neighbor_id = 100000 + uint64_t(i);
        vs[i].exact_sq_distance = 0.25;
        vs[i].flagged = true;
    }
    std::string verdicts = td.file("verdicts.jsonl");
    write_verdicts(verdicts, vs);

    std::string rep = td.file("report.json");
    CHECK(run_cli("report --verdicts " + verdicts +
                      " --test-size 50000 --accuracy 84.2 --out " + rep,
                  cap) == 0);
    CHECK(contains(slurp(cap), "83.9%"));

    nlohmann::json j = nlohmann::json::parse(slurp(rep));
    CHECK(j["queries"].get<uint64_t>() == 150);
    CHECK(j["flagged_queries"].get<uint64_t>() == 150);
    CHECK(j["flagged_pairs"].get<uint64_t>() == 150);
    CHECK(j["basis"].get<std::string>() == "flagged");
    CHECK(j["duplicates"].get<uint64_t>() == 150);
    CHECK(j["test_size"].get<uint64_t>() == 50000);
    CHECK(j["duplicate_percent"].get<std::string>() == "0.30%");
    CHECK(j["measured_accuracy_percent"].get<double>() == doctest::Approx(84.2));
    CHECK(j["lower_bound_display"].get<std::string>() == "83.9%");
}

TEST_CASE("cli: identical configs produce identical artifacts") {
    wtest::TempDir td;
    std::string cap = td.file("out.txt");

    const uint32_t dim = 24;
    const uint64_t n_train = 300, n_query = 40;
    std::vector<float> train = wtest::gaussian_data(n_train, dim, 41);
    std::vector<float> queries = wtest::gaussian_data(n_query, dim, 42);
    // Plant near-duplicates: the first 10 queries are scaled copies of
    // corpus rows, so dedup has something to flag after normalization.
    // Offset by 100 so planted pairs never share an id with their query
    // (stage 1 drops same-id hits as self-matches).
    for (uint64_t i = 0; i < 10; ++i)
        for (uint32_t d = 0; d < dim; ++d)
            queries[i * dim + d] = train[(100 + i) * dim + d] * 1.001f;

    std::string train_path = td.file("train.wsd");
    std::string query_path = td.file("queries.wsd");
    write_f32_matrix(train_path, train, n_train, dim);
    write_f32_matrix(query_path, queries, n_query, dim);

    auto run_chain = [&](const std::string& dir) {
        REQUIRE(run_cli("train-quantizers --vectors " + train_path + " --out " +
                            dir + "/q.bin --seed 7 --pca-dim 16 --rotated-dim 8"
                            " --coarse-bits 3 --residual-m 4 --residual-ksub 16"
                            " --opq-alternations 2 --kmeans-iters 6",
                        cap) == 0);
        REQUIRE(run_cli("index build --quantizers " + dir + "/q.bin --vectors " +
                            train_path + " --out " + dir + "/index.bin",
                        cap) == 0);
        REQUIRE(run_cli("index search --index " + dir + "/index.bin --queries " +
                            query_path + " --k 5 --nprobe 0 --out " + dir +
                            "/hits.jsonl",
                        cap) == 0);
        REQUIRE(run_cli("dedup --index " + dir + "/index.bin --queries " +
                            query_path + " --exact " + train_path +
                            " --query-exact " + query_path +
                            " --k 8 --nprobe 0 --threshold 0.6 --out " + dir +
                            "/verdicts.jsonl --review-out " + dir +
                            "/review.jsonl",
                        cap) == 0);
    };

    std::string r1 = td.file("run1"), r2 = td.file("run2");
    run_chain(r1);
    run_chain(r2);

    // Data artifacts must be byte-identical; manifests carry timings and
    // are exempt.
    for (const char* name :
         {"q.bin", "index.bin", "hits.jsonl", "verdicts.jsonl", "review.jsonl"}) {
        CAPTURE(name);
        CHECK(sha256_file(r1 + "/" + std::string(name)) ==
              sha256_file(r2 + "/" + std::string(name)));
    }

    // The planted copies actually got flagged.
    std::vector<DuplicateVerdict> vs = read_verdicts(r1 + "/verdicts.jsonl");
    size_t flagged = 0;
    for (const DuplicateVerdict& v : vs) flagged += v.flagged ? 1 : 0;
    CHECK(flagged >= 10);

    // Search output is well-formed JSONL with the expected hit count.
    std::string hits = slurp(r1 + "/hits.jsonl");
    nlohmann::json first = nlohmann::json::parse(hits.substr(0, hits.find('\n')));
    CHECK(first["hits"].size() == 5);
    CHECK(first["cells_probed"].get<uint64_t>() == 64);
}
