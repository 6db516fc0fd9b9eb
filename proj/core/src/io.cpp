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

#include "wildset/io.hpp"

#include <bit>
#include <fstream>
#include <limits>

namespace wildset {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

namespace {
constexpr char kVectorMagic[4] = {'W', 'S', 'D', '1'};
}

// --- ByteWriter -------------------------------------------------------------

void ByteWriter::u16(uint16_t v) {
    buf_.push_back(uint8_t(v));
    buf_.push_back(uint8_t(v >> 8));
}

void ByteWriter::u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
}

void ByteWriter::u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
}

void ByteWriter::f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
}

void ByteWriter::f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
}

void ByteWriter::bytes(std::span<const uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
}

void ByteWriter::f32_array(std::span<const float> data) {
    if constexpr (std::endian::native == std::endian::little) {
        const auto* p = reinterpret_cast<const uint8_t*>(data.data());
        buf_.insert(buf_.end(), p, p + data.size() * 4);
    } else {
        for (float v : data) f32(v);
    }
}

void ByteWriter::str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes({reinterpret_cast<const uint8_t*>(s.data()), s.size()});
}

// --- ByteReader -------------------------------------------------------------

void ByteReader::need(size_t n) {
    if (pos_ + n > data_.size()) {
        throw CorruptData("byte stream truncated: need " + std::to_string(n) +
                          " bytes at offset " + std::to_string(pos_));
    }
}

uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

uint16_t ByteReader::u16() {
    need(2);
    uint16_t v = uint16_t(data_[pos_]) | uint16_t(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
}

uint32_t ByteReader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

uint64_t ByteReader::u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}

float ByteReader::f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

double ByteReader::f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void ByteReader::bytes(std::span<uint8_t> out) {
    need(out.size());
    std::memcpy(out.data(), data_.data() + pos_, out.size());
    pos_ += out.size();
}

void ByteReader::f32_array(std::span<float> out) {
    need(out.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), data_.data() + pos_, out.size() * 4);
        pos_ += out.size() * 4;
    } else {
        for (float& v : out) v = f32();
    }
}

std::string ByteReader::str() {
    uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
}

void ByteReader::expect_magic(const char magic[4], const char* what) {
    need(4);
    if (std::memcmp(data_.data() + pos_, magic, 4) != 0) {
        throw CorruptData(std::string(what) + ": bad magic");
    }
    pos_ += 4;
}

// --- files ------------------------------------------------------------------

void write_file(const std::string& path, std::span<const uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failed: " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open: " + path);
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<uint8_t> buf(static_cast<size_t>(size));
    in.read(reinterpret_cast<char*>(buf.data()), size);
    if (!in) throw IoError("read failed: " + path);
    return buf;
}

// --- WSD1 container ----------------------------------------------------------

namespace {

void write_container_header(ByteWriter& w, Dtype dtype,
                            std::span<const uint32_t> dims, uint64_t count) {
    w.bytes({reinterpret_cast<const uint8_t*>(kVectorMagic), 4});
    w.u8(static_cast<uint8_t>(dtype));
    w.u8(static_cast<uint8_t>(dims.size()));
    w.u16(0);
    for (uint32_t d : dims) w.u32(d);
    w.u64(count);
}

struct ContainerHeader {
    Dtype dtype;
    std::vector<uint32_t> dims;
    uint64_t count;
};

ContainerHeader read_container_header(ByteReader& r) {
    r.expect_magic(kVectorMagic, "descriptor container");
    ContainerHeader h;
    uint8_t dtype = r.u8();
    if (dtype > 2) throw CorruptData("descriptor container: unknown dtype");
    h.dtype = static_cast<Dtype>(dtype);
    uint8_t rank = r.u8();
    if (rank != 1 && rank != 3) {
        throw CorruptData("descriptor container: unsupported rank " +
                          std::to_string(rank));
    }
    r.u16();  // pad
    h.dims.resize(rank);
    for (auto& d : h.dims) {
        d = r.u32();
        if (d == 0) throw CorruptData("descriptor container: zero dimension");
    }
    h.count = r.u64();
    return h;
}

}  // namespace

void write_vectors(const std::string& path, const VectorMatrix& m) {
    if (m.dim == 0) throw InvalidArgument("write_vectors: dim must be > 0");
    ByteWriter w;
    uint32_t dims[1] = {m.dim};
    write_container_header(w, m.dtype, dims, m.count);
    size_t n = size_t(m.count) * m.dim;
    switch (m.dtype) {
        case Dtype::kF32:
            if (m.f32.size() != n) throw InvalidArgument("write_vectors: payload size mismatch");
            w.f32_array(m.f32);
            break;
        case Dtype::kU8:
            if (m.u8.size() != n || m.qmin.size() != m.dim || m.qstep.size() != m.dim)
                throw InvalidArgument("write_vectors: payload/side-table size mismatch");
            w.f32_array(m.qmin);
            w.f32_array(m.qstep);
            w.bytes(m.u8);
            break;
        case Dtype::kU64:
            if (m.u64.size() != n) throw InvalidArgument("write_vectors: payload size mismatch");
            for (uint64_t v : m.u64) w.u64(v);
            break;
    }
    write_file(path, w.data());
}

VectorMatrix read_vectors(const std::string& path) {
    auto bytes = read_file(path);
    ByteReader r(bytes);
    auto h = read_container_header(r);
    if (h.dims.size() != 1) {
        throw CorruptData("read_vectors: expected rank-1 container in " + path);
    }
    VectorMatrix m;
    m.dtype = h.dtype;
    m.dim = h.dims[0];
    m.count = h.count;
    size_t n = size_t(m.count) * m.dim;
    switch (m.dtype) {
        case Dtype::kF32:
            m.f32.resize(n);
            r.f32_array(m.f32);
            break;
        case Dtype::kU8:
            m.qmin.resize(m.dim);
            m.qstep.resize(m.dim);
            r.f32_array(m.qmin);
            r.f32_array(m.qstep);
            m.u8.resize(n);
            r.bytes(m.u8);
            break;
        case Dtype::kU64:
            m.u64.resize(n);
            for (auto& v : m.u64) v = r.u64();
            break;
    }
    if (r.remaining() != 0) {
        throw CorruptData("read_vectors: trailing bytes in " + path);
    }
    return m;
}

void write_feature_maps(const std::string& path, const FeatureMapSet& s) {
    if (s.channels == 0 || s.height == 0 || s.width == 0) {
        throw InvalidArgument("write_feature_maps: all dimensions must be > 0");
    }
    if (s.values.size() != s.count * s.map_size()) {
        throw InvalidArgument("write_feature_maps: payload size mismatch");
    }
    ByteWriter w;
    uint32_t dims[3] = {s.channels, s.height, s.width};
    write_container_header(w, Dtype::kF32, dims, s.count);
    w.f32_array(s.values);
    write_file(path, w.data());
}

FeatureMapSet read_feature_maps(const std::string& path) {
    auto bytes = read_file(path);
    ByteReader r(bytes);
    auto h = read_container_header(r);
    if (h.dims.size() != 3 || h.dtype != Dtype::kF32) {
        throw CorruptData("read_feature_maps: expected rank-3 f32 container in " + path);
    }
    FeatureMapSet s;
    s.channels = h.dims[0];
    s.height = h.dims[1];
    s.width = h.dims[2];
    s.count = h.count;
    s.values.resize(s.count * s.map_size());
    r.f32_array(s.values);
    if (r.remaining() != 0) {
        throw CorruptData("read_feature_maps: trailing bytes in " + path);
    }
    return s;
}

void write_ids(const std::string& path, std::span<const uint64_t> ids) {
    VectorMatrix m;
    m.dtype = Dtype::kU64;
    m.dim = 1;
    m.count = ids.size();
    m.u64.assign(ids.begin(), ids.end());
    write_vectors(path, m);
}

std::vector<uint64_t> read_ids(const std::string& path) {
    auto m = read_vectors(path);
    if (m.dtype != Dtype::kU64 || m.dim != 1) {
        throw CorruptData("read_ids: expected u64 dim-1 container in " + path);
    }
    return std::move(m.u64);
}

}  // namespace wildset
