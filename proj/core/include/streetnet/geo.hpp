#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streetnet::geo {

/// Mean Earth radius in meters; every distance, area and buffer uses this sphere.
inline constexpr double kEarthRadiusM = 6'371'009.0;

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(GeoPoint p) noexcept;

/// Wraps longitude into [-180, 180]. Throws MalformedInput if latitude is out of range
/// or either coordinate is not finite.
GeoPoint normalized(GeoPoint p);

/// Great-circle distance on the mean-radius sphere.
double haversine_m(GeoPoint a, GeoPoint b) noexcept;

/// Sum of haversine distances between consecutive points.
double path_length_m(std::span<const GeoPoint> points) noexcept;

/// A ring is implicitly closed: the last vertex connects back to the first. A trailing
/// duplicate of the first vertex is accepted on input and stripped by make_polygon().
using Ring = std::vector<GeoPoint>;

struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
};

/// Several polygons treated as their union (a network is built over all parts together).
struct MultiPolygon {
  std::vector<Polygon> parts;
};

/// Normalizes ring closure and validates the polygon. Throws DegeneratePolygon when a ring
/// has fewer than three distinct vertices, zero area, or the exterior self-intersects.
Polygon make_polygon(Ring exterior, std::vector<Ring> holes = {});

/// Validation used by make_polygon(); exposed for values built by hand.
void validate(const Polygon& p);

struct PlanarPoint {
  double x = 0.0;  // meters east of origin
  double y = 0.0;  // meters north of origin
};

/// Spherical Lambert azimuthal equal-area projection centered on an origin. Areas are
/// preserved exactly on the sphere; distance distortion is below 0.02% within 100 km.
class LocalProjection {
 public:
  explicit LocalProjection(GeoPoint origin);

  /// Projection centered on the mean of the exterior vertices of every part.
  static LocalProjection centered_on(const Polygon& p);
  static LocalProjection centered_on(const MultiPolygon& mp);

  PlanarPoint project(GeoPoint p) const noexcept;
  GeoPoint unproject(PlanarPoint p) const noexcept;
  GeoPoint origin() const noexcept { return origin_; }

 private:
  GeoPoint origin_;
  double lat0_rad_;
  double lon0_rad_;
  double sin_lat0_;
  double cos_lat0_;
};

/// Exterior area minus hole areas, by the shoelace formula in a local projection.
/// Throws DegeneratePolygon if the result is not positive.
double polygon_area_km2(const Polygon& p);
double area_km2(const MultiPolygon& mp);

/// Outward buffer computed in a local projection with round joins (8 segments per 90 degrees).
/// Throws DegeneratePolygon for invalid input or ConfigError for a negative distance.
Polygon buffer_polygon(const Polygon& p, double dist_m);
MultiPolygon buffer(const MultiPolygon& mp, double dist_m);

/// Point-in-polygon by ray casting in projected coordinates. Points inside holes are outside;
/// points on any ring boundary (within 1 micrometer) count as inside.
bool contains(const Polygon& p, GeoPoint pt);

/// Boundary projected once for repeated containment queries (graph truncation, way clipping).
class PreparedBoundary {
 public:
  explicit PreparedBoundary(const MultiPolygon& mp);
  explicit PreparedBoundary(const Polygon& p);

  bool contains(GeoPoint pt) const;
  const LocalProjection& projection() const noexcept { return projection_; }

 private:
  struct PlanarPolygon {
    std::vector<PlanarPoint> exterior;
    std::vector<std::vector<PlanarPoint>> holes;
    double min_x, min_y, max_x, max_y;
  };

  LocalProjection projection_;
  std::vector<PlanarPolygon> parts_;
};

/// Reads Polygon / MultiPolygon geometry from GeoJSON text: a bare geometry, a Feature, or a
/// FeatureCollection (all polygonal features are unioned). Throws MalformedInput or
/// DegeneratePolygon.
MultiPolygon read_geojson_boundary(std::string_view text);

/// Serializes a boundary as a GeoJSON MultiPolygon geometry.
std::string write_geojson_boundary(const MultiPolygon& mp);

}  // namespace streetnet::geo
