// Copyright 2026 The tsw Authors
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

#include <catch2/catch_amalgamated.hpp>
#include <zlib.h>

#include "tsw/geo.hpp"
#include "tsw/geometry.hpp"
#include "tsw/png.hpp"
#include "tsw/rng.hpp"
#include "tsw/sha256.hpp"
#include "tsw/xml.hpp"

using namespace tsw;
using Catch::Approx;

TEST_CASE("haversine basics") {
  GeoPoint a{42.0, -83.7};
  CHECK(haversine_m(a, a) == 0.0);
  // One milli-degree of latitude on the reference sphere.
  GeoPoint b{42.001, -83.7};
  CHECK(haversine_m(a, b) == Approx(111.1949266446).epsilon(1e-9));
  CHECK(haversine_m(a, b) == Approx(haversine_m(b, a)));
}

TEST_CASE("local projection matches the tangent-plane formulas") {
  LocalProjection proj{{42.0, -83.7}};
  Vec2 o = proj.to_xy(proj.origin);
  CHECK(o.x == 0.0);
  CHECK(o.y == 0.0);

  // dlat = +0.001 deg -> y = R * dlat_rad
  Vec2 north = proj.to_xy({42.001, -83.7});
  CHECK(north.y == Approx(111.1949266446).epsilon(1e-10));
  CHECK(north.x == Approx(0.0).margin(1e-12));

  // dlon = +0.001 deg at origin latitude 60 -> x scaled by cos(60) = 0.5
  LocalProjection proj60{{60.0, 10.0}};
  Vec2 east = proj60.to_xy({60.0, 10.001});
  CHECK(east.x == Approx(55.5974633223).epsilon(1e-10));
  CHECK(east.y == Approx(0.0).margin(1e-12));
}

TEST_CASE("projection is invertible to 1e-9 degrees") {
  LocalProjection proj{{42.31674, -83.70770}};
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    GeoPoint p{proj.origin.lat + rng.uniform(-0.02, 0.02),
               proj.origin.lon + rng.uniform(-0.02, 0.02)};
    GeoPoint q = proj.to_geo(proj.to_xy(p));
    CHECK(std::abs(q.lat - p.lat) < 1e-9);
    CHECK(std::abs(q.lon - p.lon) < 1e-9);
  }
}

TEST_CASE("projection range check") {
  LocalProjection proj{{42.0, -83.7}};
  CHECK_NOTHROW(proj.check_in_range({42.4, -83.7}));
  CHECK_THROWS_AS(proj.check_in_range({43.0, -83.7}), Error);
}

TEST_CASE("polyline length, sampling and projection") {
  std::vector<Vec2> pts{{0, 0}, {3, 0}, {3, 4}};
  CHECK(polyline_length(pts) == Approx(7.0));
  Vec2 p = polyline_point_at(pts, 5.0);
  CHECK(p.x == Approx(3.0));
  CHECK(p.y == Approx(2.0));
  CHECK(polyline_heading_at(pts, 1.0) == Approx(0.0));
  CHECK(polyline_heading_at(pts, 5.0) == Approx(kPi / 2));
  CHECK(polyline_project(pts, {3.5, 2.0}) == Approx(5.0));
  CHECK(point_polyline_dist({3.5, 2.0}, pts) == Approx(0.5));
}

TEST_CASE("offset polyline straight line") {
  std::vector<Vec2> pts{{0, 0}, {10, 0}};
  auto right = offset_polyline(pts, 1.75);
  CHECK(right[0].y == Approx(-1.75));  // +x travel, right side is -y
  CHECK(right[1].y == Approx(-1.75));
  auto left = offset_polyline(pts, -1.75);
  CHECK(left[0].y == Approx(1.75));
}

TEST_CASE("offset polyline preserves circle arc length within 2%") {
  // Inscribed 64-gon of radius 30 m, offset outward (left of CCW travel).
  std::vector<Vec2> circle;
  const int n = 64;
  for (int i = 0; i <= n; ++i) {
    double a = 2.0 * kPi * i / n;
    circle.push_back({30.0 * std::cos(a), 30.0 * std::sin(a)});
  }
  for (double d : {1.75, 3.5}) {
    auto outer = offset_polyline(circle, d);  // CCW travel: right side is radially outward
    double expect = 2.0 * kPi * (30.0 + d);
    CHECK(polyline_length(outer) == Approx(expect).epsilon(0.02));
    auto inner = offset_polyline(circle, -d);
    CHECK(polyline_length(inner) == Approx(2.0 * kPi * (30.0 - d)).epsilon(0.02));
  }
}

TEST_CASE("obb overlap") {
  Obb2 a{{0, 0}, 0.0, 2.25, 0.9};
  Obb2 b{{5, 0}, 0.0, 2.25, 0.9};
  CHECK_FALSE(obb_overlap(a, b));
  Obb2 c{{4.0, 0}, 0.0, 2.25, 0.9};
  CHECK(obb_overlap(a, c));
  Obb2 d{{0, 1.9}, kPi / 2, 2.25, 0.9};  // crossing orientation, touching region
  CHECK(obb_overlap(a, d));
  Obb2 e{{0, 3.2}, kPi / 2, 2.25, 0.9};
  CHECK_FALSE(obb_overlap(a, e));
}

TEST_CASE("rng determinism and distribution sanity") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    double x = a.uniform01();
    CHECK(x == b.uniform01());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(a.uniform01() != c.uniform01());

  Rng r(7);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += r.exponential(2.0);
  CHECK(sum / n == Approx(0.5).epsilon(0.02));
}

TEST_CASE("seed derivation separates stages and streams") {
  CHECK(derive_seed(42, "demand") != derive_seed(42, "sim"));
  CHECK(derive_seed(42, "demand", 0) != derive_seed(42, "demand", 1));
  CHECK(derive_seed(42, "demand") == derive_seed(42, "demand"));
}

TEST_CASE("xml parse and write round trip") {
  const char* text = R"(<?xml version="1.0"?>
<!-- comment -->
<root a="1" b="x &amp; y">
  <child k="v&quot;q"/>
  <child k="2"><grand/></child>
</root>)";
  XmlElement root = xml_parse(text);
  CHECK(root.name == "root");
  REQUIRE(root.attr("b") != nullptr);
  CHECK(*root.attr("b") == "x & y");
  REQUIRE(root.children.size() == 2);
  CHECK(*root.children[0].attr("k") == "v\"q");

  std::string written = xml_write(root);
  XmlElement again = xml_parse(written);
  CHECK(xml_write(again) == written);
}

TEST_CASE("xml malformed inputs") {
  CHECK_THROWS_AS(xml_parse("<a><b></a>"), Error);
  CHECK_THROWS_AS(xml_parse("<a"), Error);
  CHECK_THROWS_AS(xml_parse("no tags"), Error);
  CHECK_THROWS_AS(xml_parse("<a x=1/>"), Error);
  try {
    xml_parse("<a><b></a>");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::malformed_xml);
  }
}

TEST_CASE("sha256 standard vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  std::string million(1000000, 'a');
  CHECK(sha256_hex(million) == "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

namespace {

// Minimal PNG chunk walk; returns the concatenated IDAT payload.
std::vector<uint8_t> extract_idat(const std::vector<uint8_t>& png) {
  REQUIRE(png.size() > 8);
  std::vector<uint8_t> idat;
  size_t pos = 8;
  while (pos + 8 <= png.size()) {
    uint32_t len = (uint32_t(png[pos]) << 24) | (uint32_t(png[pos + 1]) << 16) |
                   (uint32_t(png[pos + 2]) << 8) | uint32_t(png[pos + 3]);
    std::string type(png.begin() + pos + 4, png.begin() + pos + 8);
    if (type == "IDAT")
      idat.insert(idat.end(), png.begin() + pos + 8, png.begin() + pos + 8 + len);
    pos += 12 + len;
  }
  return idat;
}

}  // namespace

TEST_CASE("png stream decodes with zlib to the filtered scanlines") {
  const int w = 37, h = 23;
  std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3, 0);
  Rng rng(5);
  for (auto& b : rgb) b = static_cast<uint8_t>(rng.next_u64() & 0xFF);
  // Some long runs to exercise the match path.
  std::fill(rgb.begin() + 100, rgb.begin() + 900, 0x2A);

  auto png = png::encode_rgb8(rgb.data(), w, h);
  auto idat = extract_idat(png);

  std::vector<uint8_t> expect;
  for (int y = 0; y < h; ++y) {
    expect.push_back(0);
    expect.insert(expect.end(), rgb.begin() + static_cast<size_t>(y) * w * 3,
                  rgb.begin() + static_cast<size_t>(y + 1) * w * 3);
  }

  std::vector<uint8_t> inflated(expect.size());
  uLongf out_len = inflated.size();
  int rc = uncompress(inflated.data(), &out_len, idat.data(), idat.size());
  REQUIRE(rc == Z_OK);
  REQUIRE(out_len == expect.size());
  CHECK(inflated == expect);
}

TEST_CASE("png encoding is deterministic and compresses black frames hard") {
  const int w = 640, h = 360;
  std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3, 0);
  auto a = png::encode_rgb8(rgb.data(), w, h);
  auto b = png::encode_rgb8(rgb.data(), w, h);
  CHECK(a == b);
  CHECK(a.size() < 10000);

  auto idat = extract_idat(a);
  std::vector<uint8_t> inflated(static_cast<size_t>(h) * (w * 3 + 1));
  uLongf out_len = inflated.size();
  REQUIRE(uncompress(inflated.data(), &out_len, idat.data(), idat.size()) == Z_OK);
  CHECK(out_len == inflated.size());
}
