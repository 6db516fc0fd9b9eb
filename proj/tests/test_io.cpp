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

#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "wildset/digest.hpp"
#include "wildset/io.hpp"

using namespace wildset;

TEST_SUITE("io") {

TEST_CASE("byte stream round-trips every scalar type") {
    ByteWriter w;
    w.u8(0xAB);
    w.u16(0x1234);
    w.u32(0xDEADBEEF);
    w.u64(0x0123456789ABCDEFULL);
    w.f32(3.5f);
    w.f64(-2.25);
    w.str("hello");
    std::vector<float> arr = {1.0f, -0.5f, 100.25f};
    w.f32_array(arr);

    ByteReader r(w.data());
    CHECK(r.u8() == 0xAB);
    CHECK(r.u16() == 0x1234);
    CHECK(r.u32() == 0xDEADBEEF);
    CHECK(r.u64() == 0x0123456789ABCDEFULL);
    CHECK(r.f32() == 3.5f);
    CHECK(r.f64() == -2.25);
    CHECK(r.str() == "hello");
    std::vector<float> back(3);
    r.f32_array(back);
    CHECK(back == arr);
    CHECK(r.remaining() == 0);
}

TEST_CASE("serialization is little-endian") {
    ByteWriter w;
    w.u32(0x01020304);
    REQUIRE(w.size() == 4);
    CHECK(w.data()[0] == 0x04);
    CHECK(w.data()[1] == 0x03);
    CHECK(w.data()[2] == 0x02);
    CHECK(w.data()[3] == 0x01);
}

TEST_CASE("short reads and bad magic are corrupt data") {
    ByteWriter w;
    w.u16(7);
    ByteReader r(w.data());
    (void)r.u16();
    CHECK_THROWS_AS((void)r.u32(), CorruptData);

    ByteWriter m;
    m.u8('W');
    m.u8('S');
    m.u8('X');
    m.u8('1');
    ByteReader r2(m.data());
    const char want[4] = {'W', 'S', 'D', '1'};
    CHECK_THROWS_AS(r2.expect_magic(want, "vector container"), CorruptData);
}

TEST_CASE("write_file and read_file round-trip; missing file is an error") {
    wtest::TempDir tmp;
    std::vector<uint8_t> payload = {0, 1, 2, 255, 128, 7};
    write_file(tmp.file("blob.bin"), payload);
    CHECK(read_file(tmp.file("blob.bin")) == payload);
    CHECK_THROWS_AS(read_file(tmp.file("nope.bin")), IoError);
}

TEST_CASE("float vector container round-trips") {
    wtest::TempDir tmp;
    VectorMatrix m;
    m.dtype = Dtype::kF32;
    m.dim = 3;
    m.count = 2;
    m.f32 = {1.0f, 2.0f, 3.0f, -4.0f, 0.5f, 1e-3f};
    write_vectors(tmp.file("v.wsd"), m);
    VectorMatrix back = read_vectors(tmp.file("v.wsd"));
    CHECK(back.dtype == Dtype::kF32);
    CHECK(back.dim == 3);
    CHECK(back.count == 2);
    CHECK(back.f32 == m.f32);
}

TEST_CASE("quantized vector container keeps the side tables") {
    wtest::TempDir tmp;
    VectorMatrix m;
    m.dtype = Dtype::kU8;
    m.dim = 2;
    m.count = 3;
    m.u8 = {0, 255, 10, 20, 128, 1};
    m.qmin = {-1.0f, 2.0f};
    m.qstep = {0.25f, 0.125f};
    write_vectors(tmp.file("q.wsd"), m);
    VectorMatrix back = read_vectors(tmp.file("q.wsd"));
    CHECK(back.dtype == Dtype::kU8);
    CHECK(back.u8 == m.u8);
    CHECK(back.qmin == m.qmin);
    CHECK(back.qstep == m.qstep);
}

TEST_CASE("truncated container is corrupt data") {
    wtest::TempDir tmp;
    VectorMatrix m;
    m.dtype = Dtype::kF32;
    m.dim = 4;
    m.count = 4;
    m.f32.assign(16, 1.0f);
    write_vectors(tmp.file("v.wsd"), m);
    std::vector<uint8_t> raw = read_file(tmp.file("v.wsd"));
    raw.resize(raw.size() - 5);
    write_file(tmp.file("cut.wsd"), raw);
    CHECK_THROWS_AS(read_vectors(tmp.file("cut.wsd")), CorruptData);
}

TEST_CASE("feature map container round-trips") {
    wtest::TempDir tmp;
    FeatureMapSet s;
    s.channels = 2;
    s.height = 3;
    s.width = 4;
    s.count = 2;
    s.values.resize(size_t(2) * 2 * 3 * 4);
    for (size_t i = 0; i < s.values.size(); ++i) s.values[i] = float(i) * 0.5f;
    write_feature_maps(tmp.file("f.wsd"), s);
    FeatureMapSet back = read_feature_maps(tmp.file("f.wsd"));
    CHECK(back.channels == 2);
    CHECK(back.height == 3);
    CHECK(back.width == 4);
    CHECK(back.count == 2);
    CHECK(back.values == s.values);
    CHECK(back.map(1)[0] == s.values[s.map_size()]);
}

TEST_CASE("id stream round-trips") {
    wtest::TempDir tmp;
    std::vector<uint64_t> ids = {0, 42, 1ULL << 60, 7};
    write_ids(tmp.file("ids.wsd"), ids);
    CHECK(read_ids(tmp.file("ids.wsd")) == ids);
}

TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex(std::string("")) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    wtest::TempDir tmp;
    write_file(tmp.file("abc.txt"),
               std::span<const uint8_t>(
                   reinterpret_cast<const uint8_t*>("abc"), 3));
    CHECK(sha256_file(tmp.file("abc.txt")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // TEST_SUITE
