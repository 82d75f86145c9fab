#include "streetnet/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <nlohmann/json.hpp>

#include "streetnet/error.hpp"

namespace streetnet::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kBoundaryToleranceM = 1e-6;
constexpr int kArcSegmentsPerCircle = 32;

using PlanarRing = std::vector<PlanarPoint>;

double signed_area(const PlanarRing& ring) {
  double twice = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const PlanarPoint& a = ring[i];
    const PlanarPoint& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

PlanarRing project_ring(const LocalProjection& proj, const Ring& ring) {
  PlanarRing out;
  out.reserve(ring.size());
  for (const GeoPoint& p : ring) out.push_back(proj.project(p));
  return out;
}

double orientation(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool on_segment_box(PlanarPoint a, PlanarPoint b, PlanarPoint p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0) - (v < 0); }

bool segments_intersect(PlanarPoint p1, PlanarPoint p2, PlanarPoint q1, PlanarPoint q2) {
  const int d1 = sign(orientation(q1, q2, p1));
  const int d2 = sign(orientation(q1, q2, p2));
  const int d3 = sign(orientation(p1, p2, q1));
  const int d4 = sign(orientation(p1, p2, q2));
  if (d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0) return true;
  if (d1 == 0 && on_segment_box(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment_box(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment_box(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment_box(p1, p2, q2)) return true;
  return false;
}

bool ring_self_intersects(const PlanarRing& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const PlanarPoint a1 = ring[i];
    const PlanarPoint a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      const PlanarPoint b1 = ring[j];
      const PlanarPoint b2 = ring[(j + 1) % n];
      if (std::max(a1.x, a2.x) < std::min(b1.x, b2.x) || std::max(b1.x, b2.x) < std::min(a1.x, a2.x) ||
          std::max(a1.y, a2.y) < std::min(b1.y, b2.y) || std::max(b1.y, b2.y) < std::min(a1.y, a2.y)) {
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return true;
    }
  }
  return false;
}

double point_segment_distance(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

enum class RingSide { Inside, Outside, Boundary };

RingSide locate(const PlanarRing& ring, PlanarPoint p) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const PlanarPoint a = ring[i];
    const PlanarPoint b = ring[j];
    if (point_segment_distance(p, a, b) <= kBoundaryToleranceM) return RingSide::Boundary;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside ? RingSide::Inside : RingSide::Outside;
}

std::size_t distinct_count(const Ring& ring) {
  std::vector<GeoPoint> pts = ring;
  std::sort(pts.begin(), pts.end(), [](const GeoPoint& a, const GeoPoint& b) {
    return a.lat < b.lat || (a.lat == b.lat && a.lon < b.lon);
  });
  return static_cast<std::size_t>(std::unique(pts.begin(), pts.end()) - pts.begin());
}

Ring close_implicitly(Ring ring) {
  while (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  for (GeoPoint& p : ring) p = normalized(p);
  return ring;
}

void check_ring(const Ring& ring, const char* which) {
  if (ring.size() < 3 || distinct_count(ring) < 3) {
    throw Error(ErrorCode::DegeneratePolygon,
                std::string(which) + " ring needs at least 3 distinct vertices");
  }
}

GeoPoint vertex_mean(const std::vector<const Ring*>& rings) {
  double lat = 0.0;
  double lon = 0.0;
  std::size_t count = 0;
  for (const Ring* r : rings) {
    for (const GeoPoint& p : *r) {
      lat += p.lat;
      lon += p.lon;
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::DegeneratePolygon, "polygon has no vertices");
  return GeoPoint{lat / static_cast<double>(count), lon / static_cast<double>(count)};
}

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgMultiPolygon = bg::model::multi_polygon<BgPolygon>;

BgPolygon to_boost(const LocalProjection& proj, const Polygon& p) {
  BgPolygon out;
  auto fill = [&](const Ring& ring, auto& target) {
    for (const GeoPoint& g : ring) {
      const PlanarPoint q = proj.project(g);
      target.emplace_back(q.x, q.y);
    }
    target.push_back(target.front());
  };
  fill(p.exterior, out.outer());
  for (const Ring& hole : p.holes) {
    out.inners().emplace_back();
    fill(hole, out.inners().back());
  }
  bg::correct(out);
  return out;
}

template <typename BgRing>
Ring from_boost(const LocalProjection& proj, const BgRing& ring) {
  Ring out;
  out.reserve(ring.size());
  for (const BgPoint& q : ring) out.push_back(proj.unproject(PlanarPoint{q.x(), q.y()}));
  return close_implicitly(std::move(out));
}

std::vector<Polygon> polygons_from_geometry(const nlohmann::json& geometry) {
  auto read_ring = [](const nlohmann::json& coords) {
    Ring ring;
    for (const auto& c : coords) {
      if (!c.is_array() || c.size() < 2) throw Error(ErrorCode::MalformedInput, "bad GeoJSON position");
      ring.push_back(GeoPoint{c[1].get<double>(), c[0].get<double>()});
    }
    return ring;
  };
  auto read_polygon = [&](const nlohmann::json& rings) {
    if (!rings.is_array() || rings.empty()) {
      throw Error(ErrorCode::MalformedInput, "GeoJSON polygon has no rings");
    }
    Ring exterior = read_ring(rings[0]);
    std::vector<Ring> holes;
    for (std::size_t i = 1; i < rings.size(); ++i) holes.push_back(read_ring(rings[i]));
    return make_polygon(std::move(exterior), std::move(holes));
  };

  const std::string type = geometry.value("type", "");
  std::vector<Polygon> out;
  if (type == "Polygon") {
    out.push_back(read_polygon(geometry.at("coordinates")));
  } else if (type == "MultiPolygon") {
    for (const auto& poly : geometry.at("coordinates")) out.push_back(read_polygon(poly));
  } else if (type == "GeometryCollection") {
    for (const auto& g : geometry.at("geometries")) {
      auto parts = polygons_from_geometry(g);
      out.insert(out.end(), parts.begin(), parts.end());
    }
  }
  return out;
}

}  // namespace

bool is_valid(GeoPoint p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

GeoPoint normalized(GeoPoint p) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0) {
    throw Error(ErrorCode::MalformedInput, "coordinate out of range");
  }
  if (p.lon < -180.0 || p.lon > 180.0) {
    p.lon = std::remainder(p.lon, 360.0);
  }
  return p;
}

double haversine_m(GeoPoint a, GeoPoint b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  // Symmetric in a and b: each term is invariant under swapping the endpoints.
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double path_length_m(std::span<const GeoPoint> points) noexcept {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += haversine_m(points[i - 1], points[i]);
  return total;
}

LocalProjection::LocalProjection(GeoPoint origin)
    : origin_(origin),
      lat0_rad_(origin.lat * kDegToRad),
      lon0_rad_(origin.lon * kDegToRad),
      sin_lat0_(std::sin(lat0_rad_)),
      cos_lat0_(std::cos(lat0_rad_)) {}

LocalProjection LocalProjection::centered_on(const Polygon& p) {
  return LocalProjection(vertex_mean({&p.exterior}));
}

LocalProjection LocalProjection::centered_on(const MultiPolygon& mp) {
  std::vector<const Ring*> rings;
  for (const Polygon& p : mp.parts) rings.push_back(&p.exterior);
  return LocalProjection(vertex_mean(rings));
}

PlanarPoint LocalProjection::project(GeoPoint p) const noexcept {
  const double lat = p.lat * kDegToRad;
  const double dlon = p.lon * kDegToRad - lon0_rad_;
  const double sin_lat = std::sin(lat);
  const double cos_lat = std::cos(lat);
  const double cos_dlon = std::cos(dlon);
  const double denom = 1.0 + sin_lat0_ * sin_lat + cos_lat0_ * cos_lat * cos_dlon;
  const double k = std::sqrt(2.0 / denom);
  return PlanarPoint{kEarthRadiusM * k * cos_lat * std::sin(dlon),
                     kEarthRadiusM * k * (cos_lat0_ * sin_lat - sin_lat0_ * cos_lat * cos_dlon)};
}

GeoPoint LocalProjection::unproject(PlanarPoint p) const noexcept {
  const double rho = std::hypot(p.x, p.y);
  if (rho == 0.0) return origin_;
  const double c = 2.0 * std::asin(std::min(1.0, rho / (2.0 * kEarthRadiusM)));
  const double sin_c = std::sin(c);
  const double cos_c = std::cos(c);
  const double lat = std::asin(cos_c * sin_lat0_ + p.y * sin_c * cos_lat0_ / rho);
  const double lon =
      lon0_rad_ + std::atan2(p.x * sin_c, rho * cos_lat0_ * cos_c - p.y * sin_lat0_ * sin_c);
  GeoPoint out{lat * kRadToDeg, lon * kRadToDeg};
  if (out.lon > 180.0 || out.lon < -180.0) out.lon = std::remainder(out.lon, 360.0);
  return out;
}

void validate(const Polygon& p) {
  check_ring(p.exterior, "exterior");
  for (const Ring& h : p.holes) check_ring(h, "hole");
  const LocalProjection proj = LocalProjection::centered_on(p);
  const PlanarRing ext = project_ring(proj, p.exterior);
  if (signed_area(ext) == 0.0) throw Error(ErrorCode::DegeneratePolygon, "exterior ring has zero area");
  if (ring_self_intersects(ext)) {
    throw Error(ErrorCode::DegeneratePolygon, "exterior ring self-intersects");
  }
}

Polygon make_polygon(Ring exterior, std::vector<Ring> holes) {
  Polygon p;
  p.exterior = close_implicitly(std::move(exterior));
  for (Ring& h : holes) p.holes.push_back(close_implicitly(std::move(h)));
  validate(p);
  return p;
}

double polygon_area_km2(const Polygon& p) {
  check_ring(p.exterior, "exterior");
  const LocalProjection proj = LocalProjection::centered_on(p);
  double area = std::abs(signed_area(project_ring(proj, p.exterior)));
  for (const Ring& h : p.holes) {
    check_ring(h, "hole");
    area -= std::abs(signed_area(project_ring(proj, h)));
  }
  if (!(area > 0.0)) throw Error(ErrorCode::DegeneratePolygon, "polygon area is not positive");
  return area / 1e6;
}

double area_km2(const MultiPolygon& mp) {
  if (mp.parts.empty()) throw Error(ErrorCode::DegeneratePolygon, "boundary has no polygons");
  double total = 0.0;
  for (const Polygon& p : mp.parts) total += polygon_area_km2(p);
  return total;
}

Polygon buffer_polygon(const Polygon& p, double dist_m) {
  if (!(dist_m >= 0.0)) throw Error(ErrorCode::ConfigError, "buffer distance must be non-negative");
  validate(p);
  if (dist_m == 0.0) return p;

  const LocalProjection proj = LocalProjection::centered_on(p);
  const BgPolygon input = to_boost(proj, p);

  BgMultiPolygon result;
  bg::strategy::buffer::distance_symmetric<double> distance(dist_m);
  bg::strategy::buffer::side_straight side;
  bg::strategy::buffer::join_round join(kArcSegmentsPerCircle);
  bg::strategy::buffer::end_round end(kArcSegmentsPerCircle);
  bg::strategy::buffer::point_circle circle(kArcSegmentsPerCircle);
  bg::buffer(input, result, distance, side, join, end, circle);
  if (result.empty()) throw Error(ErrorCode::DegeneratePolygon, "buffer produced no geometry");

  // An outward buffer of a connected polygon is connected; keep the largest piece in case of
  // numerical slivers.
  const auto largest = std::max_element(result.begin(), result.end(), [](const auto& a, const auto& b) {
    return bg::area(a) < bg::area(b);
  });
  Polygon out;
  out.exterior = from_boost(proj, largest->outer());
  for (const auto& inner : largest->inners()) out.holes.push_back(from_boost(proj, inner));
  return out;
}

MultiPolygon buffer(const MultiPolygon& mp, double dist_m) {
  MultiPolygon out;
  out.parts.reserve(mp.parts.size());
  for (const Polygon& p : mp.parts) out.parts.push_back(buffer_polygon(p, dist_m));
  return out;
}

bool contains(const Polygon& p, GeoPoint pt) { return PreparedBoundary(p).contains(pt); }

PreparedBoundary::PreparedBoundary(const Polygon& p) : PreparedBoundary(MultiPolygon{{p}}) {}

PreparedBoundary::PreparedBoundary(const MultiPolygon& mp)
    : projection_(LocalProjection::centered_on(mp)) {
  for (const Polygon& p : mp.parts) {
    PlanarPolygon pp;
    pp.exterior = project_ring(projection_, p.exterior);
    for (const Ring& h : p.holes) pp.holes.push_back(project_ring(projection_, h));
    pp.min_x = pp.min_y = std::numeric_limits<double>::infinity();
    pp.max_x = pp.max_y = -std::numeric_limits<double>::infinity();
    for (const PlanarPoint& q : pp.exterior) {
      pp.min_x = std::min(pp.min_x, q.x);
      pp.max_x = std::max(pp.max_x, q.x);
      pp.min_y = std::min(pp.min_y, q.y);
      pp.max_y = std::max(pp.max_y, q.y);
    }
    parts_.push_back(std::move(pp));
  }
}

bool PreparedBoundary::contains(GeoPoint pt) const {
  const PlanarPoint q = projection_.project(pt);
  for (const PlanarPolygon& part : parts_) {
    const double tol = kBoundaryToleranceM;
    if (q.x < part.min_x - tol || q.x > part.max_x + tol || q.y < part.min_y - tol ||
        q.y > part.max_y + tol) {
      continue;
    }
    const RingSide ext = locate(part.exterior, q);
    if (ext == RingSide::Outside) continue;
    if (ext == RingSide::Boundary) return true;
    bool in_hole = false;
    for (const PlanarRing& hole : part.holes) {
      if (locate(hole, q) == RingSide::Inside) {
        in_hole = true;
        break;
      }
    }
    if (!in_hole) return true;
  }
  return false;
}

MultiPolygon read_geojson_boundary(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("GeoJSON parse error: ") + e.what());
  }
  MultiPolygon out;
  try {
    const std::string type = doc.value("type", "");
    if (type == "FeatureCollection") {
      for (const auto& feature : doc.at("features")) {
        if (feature.contains("geometry") && !feature["geometry"].is_null()) {
          auto parts = polygons_from_geometry(feature["geometry"]);
          out.parts.insert(out.parts.end(), parts.begin(), parts.end());
        }
      }
    } else if (type == "Feature") {
      out.parts = polygons_from_geometry(doc.at("geometry"));
    } else {
      out.parts = polygons_from_geometry(doc);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("GeoJSON structure error: ") + e.what());
  }
  if (out.parts.empty()) throw Error(ErrorCode::MalformedInput, "GeoJSON contains no polygon geometry");
  return out;
}

std::string write_geojson_boundary(const MultiPolygon& mp) {
  auto ring_json = [](const Ring& ring) {
    nlohmann::json r = nlohmann::json::array();
    for (const GeoPoint& p : ring) r.push_back({p.lon, p.lat});
    if (!ring.empty()) r.push_back({ring.front().lon, ring.front().lat});
    return r;
  };
  nlohmann::json coords = nlohmann::json::array();
  for (const Polygon& p : mp.parts) {
    nlohmann::json poly = nlohmann::json::array();
    poly.push_back(ring_json(p.exterior));
    for (const Ring& h : p.holes) poly.push_back(ring_json(h));
    coords.push_back(std::move(poly));
  }
  return nlohmann::json{{"type", "MultiPolygon"}, {"coordinates", coords}}.dump();
}

}  // namespace streetnet::geo
