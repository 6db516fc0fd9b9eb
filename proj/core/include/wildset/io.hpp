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
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "wildset/common.hpp"

namespace wildset {

// Little-endian byte stream helpers shared by every on-disk format.
// All multi-byte values are serialized explicitly so files are identical
// across platforms.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f32(float v);
    void f64(double v);
    void bytes(std::span<const uint8_t> data);
    void f32_array(std::span<const float> data);
    void str(const std::string& s);  // u32 length + bytes

    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

private:
    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8();
    uint16_t u16();
    uint32_t u32();
    uint64_t u64();
    float f32();
    double f64();
    void bytes(std::span<uint8_t> out);
    void f32_array(std::span<float> out);
    std::string str();
    void expect_magic(const char magic[4], const char* what);

    size_t remaining() const { return data_.size() - pos_; }
    size_t pos() const { return pos_; }

private:
    void need(size_t n);
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

void write_file(const std::string& path, std::span<const uint8_t> data);
std::vector<uint8_t> read_file(const std::string& path);

// ---------------------------------------------------------------------------
// Descriptor container ("WSD1"): header {magic, dtype u8, rank u8, pad u16,
// dims rank x u32, count u64}, then for 8-bit files the per-dimension
// min/step side tables, then the row-major payload. Rank 1 holds flat
// vectors, rank 3 holds conv feature maps (channels, height, width).

enum class Dtype : uint8_t { kF32 = 0, kU8 = 1, kU64 = 2 };

struct VectorMatrix {
    Dtype dtype = Dtype::kF32;
    uint32_t dim = 0;
    uint64_t count = 0;
    std::vector<float> f32;    // count * dim when dtype == kF32
    std::vector<uint8_t> u8;   // count * dim when dtype == kU8
    std::vector<uint64_t> u64; // count * dim when dtype == kU64
    std::vector<float> qmin;   // dim, only for kU8
    std::vector<float> qstep;  // dim, only for kU8

    const float* row_f32(uint64_t i) const { return f32.data() + i * dim; }
    const uint8_t* row_u8(uint64_t i) const { return u8.data() + i * dim; }
};

struct FeatureMapSet {
    uint32_t channels = 0, height = 0, width = 0;
    uint64_t count = 0;
    std::vector<float> values;  // count * channels * height * width

    size_t map_size() const {
        return size_t(channels) * height * width;
    }
    const float* map(uint64_t i) const { return values.data() + i * map_size(); }
};

void write_vectors(const std::string& path, const VectorMatrix& m);
VectorMatrix read_vectors(const std::string& path);

void write_feature_maps(const std::string& path, const FeatureMapSet& s);
FeatureMapSet read_feature_maps(const std::string& path);

// id streams reuse the rank-1 container with dtype kU64 and dim 1
void write_ids(const std::string& path, std::span<const uint64_t> ids);
std::vector<uint64_t> read_ids(const std::string& path);

}  // namespace wildset
