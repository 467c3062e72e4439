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

#include "support.hpp"
#include "tsw/map_source.hpp"
#include "tsw/osm.hpp"
#include "tsw/rng.hpp"

using namespace tsw;
using Catch::Approx;

namespace {

GeoGraph load(const std::string& name) { return parse_osm(test::read_fixture(name)); }

// Exhaustive simple-path enumeration between two nodes; independent oracle for
// the routing tie rule on small graphs.
struct BruteRoute {
  std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;

  explicit BruteRoute(const GeoGraph& g) {
    for (const auto& [wid, way] : g.ways) {
      for (size_t i = 1; i < way.node_refs.size(); ++i) {
        NodeId a = way.node_refs[i - 1], b = way.node_refs[i];
        double len = haversine_m(g.nodes.at(a), g.nodes.at(b));
        adj[a].emplace_back(b, len);
        adj[b].emplace_back(a, len);
      }
    }
  }

  void dfs(NodeId cur, NodeId dest, std::vector<NodeId>& path, std::set<NodeId>& seen, double len,
           std::vector<std::pair<double, std::vector<NodeId>>>& out) {
    if (cur == dest) {
      out.emplace_back(len, path);
      return;
    }
    for (auto [next, w] : adj[cur]) {
      if (seen.count(next)) continue;
      seen.insert(next);
      path.push_back(next);
      dfs(next, dest, path, seen, len + w, out);
      path.pop_back();
      seen.erase(next);
    }
  }

  std::pair<double, std::vector<NodeId>> best(NodeId o, NodeId d) {
    std::vector<std::pair<double, std::vector<NodeId>>> all;
    std::vector<NodeId> path{o};
    std::set<NodeId> seen{o};
    dfs(o, d, path, seen, 0.0, all);
    REQUIRE(!all.empty());
    double min_len = all[0].first;
    for (auto& [len, p] : all) min_len = std::min(min_len, len);
    // Same tolerance as the implementation's tie rule.
    std::vector<NodeId>* pick = nullptr;
    for (auto& [len, p] : all) {
      if (len <= min_len + 1e-6 && (!pick || p < *pick)) pick = &p;
    }
    return {min_len, *pick};
  }
};

}  // namespace

TEST_CASE("parse keeps exactly the highway ways of the roundabout fixture") {
  GeoGraph g = load("roundabout.osm");
  CHECK(g.ways.size() == 5);          // circle + four approaches; waterway dropped
  CHECK(g.signals.empty());
  CHECK(g.warnings == 0);
  CHECK(g.nodes.size() == 16);        // waterway nodes pruned
  CHECK(g.ways.at(1).is_roundabout());
  CHECK(g.ways.at(2).highway() == "residential");
}

TEST_CASE("parse drops dangling node references with a warning") {
  const char* xml = R"(<osm version="0.6">
    <node id="1" lat="0.0" lon="0.0"/>
    <node id="2" lat="0.0" lon="0.001"/>
    <way id="1"><nd ref="1"/><nd ref="99"/><nd ref="2"/><tag k="highway" v="residential"/></way>
  </osm>)";
  GeoGraph g = parse_osm(xml);
  CHECK(g.warnings == 1);
  REQUIRE(g.ways.count(1) == 1);
  CHECK(g.ways.at(1).node_refs == std::vector<NodeId>{1, 2});
}

TEST_CASE("parse rejects extracts without highway ways") {
  const char* xml = R"(<osm version="0.6">
    <node id="1" lat="0.0" lon="0.0"/>
    <node id="2" lat="0.0" lon="0.001"/>
    <way id="1"><nd ref="1"/><nd ref="2"/><tag k="waterway" v="stream"/></way>
  </osm>)";
  try {
    parse_osm(xml);
    FAIL("expected EmptyExtract");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_extract);
  }
}

TEST_CASE("parse rejects malformed xml") {
  try {
    parse_osm("<osm><node id=");
    FAIL("expected MalformedXml");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::malformed_xml);
  }
}

TEST_CASE("parse-serialize-parse is a fixed point") {
  for (const char* fixture : {"roundabout.osm", "line4.osm", "grid3.osm"}) {
    GeoGraph g = load(fixture);
    std::string canon = serialize_osm(g);
    GeoGraph g2 = parse_osm(canon);
    CHECK(g2 == g);
    CHECK(serialize_osm(g2) == canon);
  }
}

TEST_CASE("parse is pure: identical bytes give identical graphs") {
  std::string bytes = test::read_fixture("roundabout.osm");
  CHECK(parse_osm(bytes) == parse_osm(bytes));
  CHECK(serialize_osm(parse_osm(bytes)) == serialize_osm(parse_osm(bytes)));
}

TEST_CASE("clip_radius with superset radius is the identity") {
  GeoGraph g = load("roundabout.osm");
  GeoGraph c = clip_radius(g, {42.0, -83.7}, 100000.0);
  CHECK(c == g);
}

TEST_CASE("clip_radius tight around one approach keeps only that way") {
  GeoGraph g = load("roundabout.osm");
  // Outer node of the east approach (node 12). Every node of every other way
  // is at least 100 m away; node 11 (50 m) is outside a 10 m radius, so the
  // approach is truncated at it.
  GeoGraph c = clip_radius(g, {42.0, -83.6984873}, 10.0);
  REQUIRE(c.ways.size() == 1);
  REQUIRE(c.ways.count(2) == 1);
  CHECK(c.ways.at(2).node_refs == std::vector<NodeId>{12, 11});
}

TEST_CASE("clip_radius rejects non-positive radius") {
  GeoGraph g = load("roundabout.osm");
  CHECK_THROWS_AS(clip_radius(g, {42.0, -83.7}, 0.0), Error);
}

TEST_CASE("clip_radius is monotone in the radius (way-id set inclusion)") {
  GeoGraph g = load("roundabout.osm");
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    GeoPoint center{42.0 + rng.uniform(-0.002, 0.002), -83.7 + rng.uniform(-0.002, 0.002)};
    double r1 = rng.uniform(5.0, 200.0);
    double r2 = r1 + rng.uniform(0.0, 200.0);
    std::set<WayId> w1, w2;
    try {
      for (const auto& [id, w] : clip_radius(g, center, r1).ways) w1.insert(id);
    } catch (const Error&) {
      continue;  // empty inner clip: trivially included
    }
    for (const auto& [id, w] : clip_radius(g, center, r2).ways) w2.insert(id);
    CHECK(std::includes(w2.begin(), w2.end(), w1.begin(), w1.end()));
  }
}

TEST_CASE("filter_road_types") {
  GeoGraph g = load("roundabout.osm");
  SECTION("all present classes is the identity") {
    GeoGraph f = filter_road_types(g, {"primary", "residential"});
    CHECK(f == g);
  }
  SECTION("roundabout selects the junction=roundabout way") {
    GeoGraph f = filter_road_types(g, {"roundabout"});
    REQUIRE(f.ways.size() == 1);
    CHECK(f.ways.count(1) == 1);
  }
  SECTION("absent class is an empty extract") {
    try {
      filter_road_types(g, {"motorway"});
      FAIL("expected EmptyExtract");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_extract);
    }
  }
  SECTION("empty set rejected") {
    CHECK_THROWS_AS(filter_road_types(g, {}), Error);
  }
}

TEST_CASE("find_route on the unique-path line fixture") {
  GeoGraph g = load("line4.osm");
  auto path = find_route(g, {41.5, -83.0}, {41.5, -82.9963977});
  CHECK(path == std::vector<NodeId>{1, 2, 3, 4});
}

TEST_CASE("route with origin == dest is a zero-length path whose corridor touches the node") {
  GeoGraph g = load("grid3.osm");
  GeoGraph c = shortest_route(g, {0.0, 7.0}, {0.0, 7.0}, 10.0);
  // Node 4 belongs to ways 2 (middle row) and 4 (west column).
  CHECK(c.ways.count(2) == 1);
  CHECK(c.ways.count(4) == 1);
  CHECK(c.ways.size() == 2);
}

TEST_CASE("equal-length paths resolve to the lexicographically smallest sequence") {
  GeoGraph g = load("grid3.osm");
  auto path = find_route(g, {-0.0008993, 7.0}, {0.0008993, 7.0017986});
  BruteRoute oracle(g);
  auto [best_len, best_path] = oracle.best(1, 9);
  CHECK(path == best_path);
  CHECK(path == std::vector<NodeId>{1, 2, 3, 6, 9});
}

TEST_CASE("routing never beats the brute-force enumeration") {
  Rng rng(3);
  for (const char* fixture : {"grid3.osm", "roundabout.osm", "line4.osm"}) {
    GeoGraph g = load(fixture);
    BruteRoute oracle(g);
    std::vector<NodeId> ids;
    for (const auto& [id, p] : g.nodes) ids.push_back(id);
    for (int trial = 0; trial < 10; ++trial) {
      NodeId o = ids[rng.uniform_int(0, static_cast<int64_t>(ids.size()) - 1)];
      NodeId d = ids[rng.uniform_int(0, static_cast<int64_t>(ids.size()) - 1)];
      if (o == d) continue;
      auto path = find_route(g, g.nodes.at(o), g.nodes.at(d));
      auto [best_len, best_path] = oracle.best(o, d);
      double len = 0.0;
      for (size_t i = 1; i < path.size(); ++i)
        len += haversine_m(g.nodes.at(path[i - 1]), g.nodes.at(path[i]));
      CHECK(len <= best_len + 1e-6);
      CHECK(path == best_path);
    }
  }
}

TEST_CASE("route errors") {
  GeoGraph g = load("line4.osm");
  SECTION("NoSnap beyond 250 m") {
    try {
      find_route(g, {41.6, -83.0}, {41.5, -82.9963977});
      FAIL("expected NoSnap");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::no_snap);
    }
  }
  SECTION("Unreachable across disconnected components") {
    const char* xml = R"(<osm version="0.6">
      <node id="1" lat="0.0" lon="0.0"/><node id="2" lat="0.0" lon="0.001"/>
      <node id="3" lat="0.01" lon="0.0"/><node id="4" lat="0.01" lon="0.001"/>
      <way id="1"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>
      <way id="2"><nd ref="3"/><nd ref="4"/><tag k="highway" v="residential"/></way>
    </osm>)";
    GeoGraph d = parse_osm(xml);
    try {
      find_route(d, {0.0, 0.0}, {0.01, 0.001});
      FAIL("expected Unreachable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unreachable);
    }
  }
}

TEST_CASE("retrieval queries validate and apply") {
  GeoGraph g = load("roundabout.osm");

  RetrievalQuery radius;
  radius.mode = RetrievalQuery::Mode::radius;
  radius.center = {42.0, -83.7};
  radius.radius_m = 6000.0;
  CHECK_THROWS_AS(radius.validate(), Error);  // resource guard
  radius.radius_m = 500.0;
  CHECK(apply_query(g, radius) == g);

  RetrievalQuery region;
  region.mode = RetrievalQuery::Mode::region;
  region.bbox_sw = {41.999, -83.701};
  region.bbox_ne = {42.001, -83.699};
  region.road_types = {"roundabout", "residential"};
  GeoGraph r = apply_query(g, region);
  CHECK(r.ways.count(1) == 1);

  RetrievalQuery bad_region = region;
  bad_region.bbox_sw = region.bbox_ne;
  bad_region.bbox_ne = region.bbox_sw;
  CHECK_THROWS_AS(bad_region.validate(), Error);

  RetrievalQuery route;
  route.mode = RetrievalQuery::Mode::route;
  route.route_origin = {42.0, -83.6984873};
  route.route_dest = {42.0, -83.7015127};
  route.corridor_m = 30.0;
  GeoGraph corridor = apply_query(g, route);
  CHECK(corridor.ways.count(2) == 1);  // east approach
  CHECK(corridor.ways.count(4) == 1);  // west approach
  CHECK(corridor.ways.count(1) == 1);  // circle

  route.route_dest = route.route_origin;
  CHECK_THROWS_AS(route.validate(), Error);
}

TEST_CASE("file map source round trips through retrieval") {
  FileMapSource src(test::data_path("roundabout.osm"));
  RetrievalQuery q;
  q.mode = RetrievalQuery::Mode::radius;
  q.center = {42.0, -83.7};
  q.radius_m = 400.0;
  GeoGraph g = apply_query(parse_osm(src.fetch(q)), q);
  CHECK(g.ways.size() == 5);
}

TEST_CASE("overpass query construction") {
  OverpassMapSource src("http://localhost:1");
  RetrievalQuery q;
  q.mode = RetrievalQuery::Mode::radius;
  q.center = {42.0, -83.7};
  q.radius_m = 500.0;
  std::string query = src.build_query(q);
  CHECK(query.find("way[\"highway\"]") != std::string::npos);
  CHECK(query.find("out body") != std::string::npos);
  // HTTP disabled in test builds.
  CHECK_THROWS_AS(src.fetch(q), Error);
}
