#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "graphs.hpp"
#include "streetnet/error.hpp"
#include "streetnet/geo.hpp"

using namespace streetnet;
using namespace streetnet::geo;

namespace {

// Square of the given side in metres, centered on `center`, built in the plane.
Polygon planar_square(GeoPoint center, double side_m) {
  const LocalProjection proj(center);
  const double h = side_m / 2.0;
  return make_polygon({proj.unproject({-h, -h}), proj.unproject({h, -h}), proj.unproject({h, h}),
                       proj.unproject({-h, h})});
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("haversine reference distances") {
  CHECK(haversine_m({0, 0}, {0, 0}) == 0.0);
  // Quarter meridian is pi R / 2.
  CHECK(haversine_m({0, 0}, {0, 90}) == doctest::Approx(10'007'557.535177).epsilon(1e-12));
  CHECK(std::abs(haversine_m({0, 0}, {0, 90}) - 10'007'557.0) < 1.0);
  // Values from a separate haversine implementation with the same radius.
  CHECK(haversine_m({37.7749, -122.4194}, {37.7849, -122.4194}) ==
        doctest::Approx(1111.950837241845).epsilon(1e-10));
  CHECK(haversine_m({51.5, -0.12}, {48.85, 2.35}) == doctest::Approx(343128.362543501).epsilon(1e-10));
}

TEST_CASE("haversine is symmetric and satisfies the triangle inequality") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat(-89.0, 89.0);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  for (int i = 0; i < 2000; ++i) {
    const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)}, c{lat(rng), lon(rng)};
    CHECK(haversine_m(a, b) == haversine_m(b, a));
    CHECK(haversine_m(a, c) <= (haversine_m(a, b) + haversine_m(b, c)) * (1.0 + 1e-6));
  }
}

TEST_CASE("path length sums the segments") {
  const std::vector<GeoPoint> pts = {testing::equator_offset(0, 0), testing::equator_offset(100, 0),
                                     testing::equator_offset(100, 50)};
  CHECK(path_length_m(pts) == doctest::Approx(150.0).epsilon(1e-9));
  CHECK(path_length_m(std::span<const GeoPoint>{}) == 0.0);
}

TEST_CASE("coordinates are validated") {
  CHECK(is_valid({45, 170}));
  CHECK_FALSE(is_valid({91, 0}));
  CHECK_FALSE(is_valid({std::nan(""), 0}));
  CHECK(normalized({10, 190}).lon == doctest::Approx(-170));
  CHECK_THROWS_AS(normalized({95, 0}), Error);
}

TEST_CASE("area of a 0.01 degree equatorial square") {
  const Polygon sq = make_polygon({{0, 0}, {0, 0.01}, {0.01, 0.01}, {0.01, 0}});
  const double expected = std::pow(0.01 * std::numbers::pi * kEarthRadiusM / 180.0, 2) / 1e6;
  CHECK(rel(polygon_area_km2(sq), expected) < 0.005);
  CHECK(polygon_area_km2(sq) == doctest::Approx(1.236).epsilon(0.005));
}

TEST_CASE("a hole covering half the polygon halves its area") {
  const Ring outer = {{0, 0}, {0, 0.02}, {0.01, 0.02}, {0.01, 0}};
  // 0.008 x 0.0125 degrees: half of the 0.01 x 0.02 exterior.
  const Ring inner = {{0.001, 0.00375}, {0.001, 0.01625}, {0.009, 0.01625}, {0.009, 0.00375}};
  const double solid = polygon_area_km2(make_polygon(outer));
  const double holed = polygon_area_km2(make_polygon(outer, {inner}));
  CHECK(rel(holed, solid / 2.0) < 1e-6);
  CHECK(holed == doctest::Approx(solid - polygon_area_km2(make_polygon(inner))).epsilon(1e-9));
}

TEST_CASE("degenerate polygons are rejected") {
  CHECK_THROWS_AS(make_polygon({{0, 0}, {0, 1}, {0, 1}}), Error);
  CHECK_THROWS_AS(make_polygon({{0, 0}, {0, 1}, {0, 2}}), Error);  // collinear, zero area
  try {
    make_polygon({{0, 0}, {1, 1}, {0, 1}, {1, 0}});  // bow tie
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneratePolygon);
  }
  // A closing duplicate vertex is fine.
  CHECK(make_polygon({{0, 0}, {0, 1}, {1, 1}, {0, 0}}).exterior.size() == 3);
}

TEST_CASE("area is invariant under ring rotation and reversal") {
  Ring ring = {{40.0, -88.0}, {40.01, -87.995}, {40.02, -88.01}, {40.012, -88.02}, {40.003, -88.015}};
  const double base = polygon_area_km2(make_polygon(ring));
  for (std::size_t k = 0; k < ring.size(); ++k) {
    std::rotate(ring.begin(), ring.begin() + 1, ring.end());
    CHECK(rel(polygon_area_km2(make_polygon(ring)), base) < 1e-9);
    Ring rev(ring.rbegin(), ring.rend());
    CHECK(rel(polygon_area_km2(make_polygon(rev)), base) < 1e-9);
  }
}

TEST_CASE("equal-area projection round trip") {
  const LocalProjection proj({42.0, -71.0});
  for (double x : {-5000.0, 0.0, 1234.5}) {
    for (double y : {-3000.0, 10.0, 8000.0}) {
      const PlanarPoint p = proj.project(proj.unproject({x, y}));
      CHECK(p.x == doctest::Approx(x).epsilon(1e-9));
      CHECK(p.y == doctest::Approx(y).epsilon(1e-9));
    }
  }
}

TEST_CASE("buffering a 1 km square by 500 m matches the Minkowski sum") {
  const Polygon sq = planar_square({45.0, 10.0}, 1000.0);
  const double expected = 1.0 + 4.0 * 0.5 + std::numbers::pi * 0.25;
  CHECK(rel(polygon_area_km2(buffer_polygon(sq, 500.0)), expected) < 0.02);
}

TEST_CASE("buffer contains the input and composes") {
  const Polygon p = make_polygon({{40.0, -88.0}, {40.01, -87.995}, {40.02, -88.01}, {40.012, -88.02}});
  const Polygon tiny = buffer_polygon(p, 1e-3);
  for (const GeoPoint& v : p.exterior) CHECK(contains(tiny, v));
  for (double a : {50.0, 200.0}) {
    for (double b : {100.0, 400.0}) {
      const double twice = polygon_area_km2(buffer_polygon(buffer_polygon(p, a), b));
      const double once = polygon_area_km2(buffer_polygon(p, a + b));
      CHECK(twice >= once * 0.98);
    }
  }
  CHECK(polygon_area_km2(buffer_polygon(p, 0.0)) == doctest::Approx(polygon_area_km2(p)));
  CHECK_THROWS_AS(buffer_polygon(p, -1.0), Error);
}

TEST_CASE("point in polygon") {
  const Polygon sq = planar_square({0.0, 0.0}, 1000.0);
  CHECK(contains(sq, {0.0, 0.0}));
  const LocalProjection proj({0.0, 0.0});
  // 1 mm outside the east edge, constructed in the same projection.
  CHECK_FALSE(contains(sq, proj.unproject({500.001, 0.0})));
  CHECK(contains(sq, proj.unproject({499.999, 0.0})));
  // Vertices and edges count as inside.
  CHECK(contains(sq, sq.exterior[0]));

  const Polygon holed = make_polygon(sq.exterior, {planar_square({0.0, 0.0}, 200.0).exterior});
  CHECK_FALSE(contains(holed, {0.0, 0.0}));
  CHECK(contains(holed, proj.unproject({300.0, 0.0})));
  const PreparedBoundary prepared(holed);
  CHECK_FALSE(prepared.contains({0.0, 0.0}));
  CHECK(prepared.contains(proj.unproject({300.0, 0.0})));
  CHECK_FALSE(prepared.contains(proj.unproject({600.0, 0.0})));
}

TEST_CASE("prepared boundary agrees with contains on random points") {
  const Polygon p = make_polygon({{40.0, -88.01}, {40.0, -87.99}, {40.02, -87.99}, {40.01, -88.0}, {40.02, -88.01}});
  const PreparedBoundary prepared(p);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lat(39.99, 40.03), lon(-88.03, -87.99);
  int inside = 0;
  for (int i = 0; i < 3000; ++i) {
    const GeoPoint q{lat(rng), lon(rng)};
    CHECK(prepared.contains(q) == contains(p, q));
    inside += contains(p, q);
  }
  CHECK(inside > 100);
}

TEST_CASE("GeoJSON boundaries") {
  const std::string fc = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[10,45],[10.01,45],[10.01,45.01],[10,45.01],[10,45]]]}},
    {"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}},
    {"type":"Feature","properties":{},"geometry":{"type":"MultiPolygon","coordinates":[[[[11,45],[11.01,45],[11.01,45.01],[11,45]]]]}}]})";
  const MultiPolygon mp = read_geojson_boundary(fc);
  REQUIRE(mp.parts.size() == 2);
  CHECK(mp.parts[0].exterior.front() == GeoPoint{45, 10});
  const MultiPolygon again = read_geojson_boundary(write_geojson_boundary(mp));
  REQUIRE(again.parts.size() == 2);
  CHECK(again.parts[0].exterior == mp.parts[0].exterior);
  CHECK(area_km2(again) == doctest::Approx(area_km2(mp)).epsilon(1e-12));

  CHECK_THROWS_AS(read_geojson_boundary("{not json"), Error);
  CHECK_THROWS_AS(read_geojson_boundary(R"({"type":"Point","coordinates":[0,0]})"), Error);
}
