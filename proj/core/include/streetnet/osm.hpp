#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "streetnet/geo.hpp"

namespace streetnet::osm {

using OsmId = std::int64_t;
using Tags = std::map<std::string, std::string>;

struct OsmNode {
  OsmId id = 0;
  geo::GeoPoint location;
  Tags tags;

  friend bool operator==(const OsmNode&, const OsmNode&) = default;
};

struct OsmWay {
  OsmId id = 0;
  std::vector<OsmId> node_refs;
  Tags tags;

  friend bool operator==(const OsmWay&, const OsmWay&) = default;
};

struct RawOsmData {
  std::map<OsmId, OsmNode> nodes;
  std::vector<OsmWay> ways;
  std::string provenance;
  /// Node references dropped by resolve() because no node with that id exists.
  std::size_t unresolved_refs = 0;

  /// Field-for-field equality of the OSM content; provenance is not compared.
  bool same_content(const RawOsmData& other) const {
    return nodes == other.nodes && ways == other.ways;
  }
};

/// OSM XML v0.6. Gzip input is detected by its magic bytes and inflated first. Relations and
/// other elements are ignored. Ways keep unresolved refs until resolve(). Throws
/// MalformedInput with line/column context, including for truncated documents.
RawOsmData parse_osm_xml(std::string_view bytes, std::string provenance = {});

/// Overpass API JSON (`{"elements": [...]}`). Elements other than node and way are skipped.
RawOsmData parse_overpass_json(std::string_view bytes, std::string provenance = {});

/// Picks the parser from content: gzip or '<' → XML, '{' → Overpass JSON.
RawOsmData parse_any(std::string_view bytes, std::string provenance = {});

/// Reads and parses a file (.osm, .osm.gz, .json). Throws IoError if unreadable.
RawOsmData load_file(const std::string& path);

/// Drops references to missing nodes (counting them in unresolved_refs), then drops ways
/// left with fewer than two refs.
RawOsmData resolve(RawOsmData data);

struct WayFilter {
  std::set<std::string> include_highway_tags;
  std::set<std::string> exclude_highway_tags;
  std::set<std::string> exclude_access_values;
  bool include_service_roads = false;

  /// Conventional public drive network: motorways through residential streets, with
  /// footpaths, tracks and construction excluded and private/no access dropped.
  static WayFilter drivable(bool include_service_roads = false);

  /// Throws ConfigError when include and exclude sets overlap.
  void validate() const;
};

struct FilterStats {
  std::size_t retained = 0;
  std::size_t no_highway = 0;
  std::size_t excluded_highway = 0;
  std::size_t not_included = 0;
  std::size_t service = 0;
  std::size_t area = 0;
  std::size_t access = 0;

  std::size_t dropped() const {
    return no_highway + excluded_highway + not_included + service + area + access;
  }
};

struct FilterResult {
  RawOsmData data;
  FilterStats stats;
};

/// True if the way passes the filter; the reason counter is bumped otherwise.
bool way_passes(const OsmWay& way, const WayFilter& filter, FilterStats* stats = nullptr);

/// Keeps ways that pass the filter and the nodes they reference. Idempotent.
FilterResult filter_drivable(const RawOsmData& data, const WayFilter& filter);

}  // namespace streetnet::osm
