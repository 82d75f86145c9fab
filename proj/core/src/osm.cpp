#include "streetnet/osm.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include <expat.h>
#include <zlib.h>
#include <nlohmann/json.hpp>

#include "streetnet/error.hpp"

namespace streetnet::osm {
namespace {

bool is_gzip(std::string_view bytes) {
  return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
         static_cast<unsigned char>(bytes[1]) == 0x8b;
}

std::string gunzip(std::string_view bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw Error(ErrorCode::MalformedInput, "cannot initialise gzip decoder");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  zs.avail_in = static_cast<uInt>(bytes.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorCode::MalformedInput, "corrupt or truncated gzip stream");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::MalformedInput, "truncated gzip stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

struct XmlState {
  XML_Parser parser = nullptr;
  RawOsmData data;
  int depth = 0;
  bool saw_root = false;
  enum class In { None, Node, Way } in = In::None;
  OsmNode node;
  OsmWay way;
  std::string error;

  void fail(std::string message) {
    if (!error.empty()) return;
    error = std::move(message) + " at line " +
            std::to_string(XML_GetCurrentLineNumber(parser)) + ", column " +
            std::to_string(XML_GetCurrentColumnNumber(parser));
    XML_StopParser(parser, XML_FALSE);
  }
};

const char* find_attr(const char** attrs, const char* name) {
  for (std::size_t i = 0; attrs[i] != nullptr; i += 2) {
    if (std::strcmp(attrs[i], name) == 0) return attrs[i + 1];
  }
  return nullptr;
}

void XMLCALL on_start(void* user, const char* name, const char** attrs) {
  auto& st = *static_cast<XmlState*>(user);
  ++st.depth;
  if (st.depth == 1) {
    if (std::strcmp(name, "osm") != 0) st.fail("root element is not <osm>");
    st.saw_root = true;
    return;
  }
  if (st.depth == 2) {
    const bool is_node = std::strcmp(name, "node") == 0;
    const bool is_way = std::strcmp(name, "way") == 0;
    if (!is_node && !is_way) return;
    const char* id = find_attr(attrs, "id");
    auto parsed_id = id ? parse_number<OsmId>(id) : std::nullopt;
    if (!parsed_id) return st.fail(std::string("missing or invalid id on <") + name + ">");
    if (is_node) {
      const char* lat = find_attr(attrs, "lat");
      const char* lon = find_attr(attrs, "lon");
      auto plat = lat ? parse_number<double>(lat) : std::nullopt;
      auto plon = lon ? parse_number<double>(lon) : std::nullopt;
      if (!plat || !plon) return st.fail("missing or invalid lat/lon on <node>");
      const geo::GeoPoint loc{*plat, *plon};
      if (!geo::is_valid(loc)) return st.fail("node coordinate out of range");
      st.node = OsmNode{*parsed_id, loc, {}};
      st.in = XmlState::In::Node;
    } else {
      st.way = OsmWay{*parsed_id, {}, {}};
      st.in = XmlState::In::Way;
    }
    return;
  }
  if (st.depth == 3 && st.in != XmlState::In::None) {
    if (std::strcmp(name, "tag") == 0) {
      const char* k = find_attr(attrs, "k");
      const char* v = find_attr(attrs, "v");
      if (!k || !v) return st.fail("<tag> without k/v");
      Tags& tags = st.in == XmlState::In::Node ? st.node.tags : st.way.tags;
      tags[k] = v;
    } else if (std::strcmp(name, "nd") == 0 && st.in == XmlState::In::Way) {
      const char* ref = find_attr(attrs, "ref");
      auto parsed = ref ? parse_number<OsmId>(ref) : std::nullopt;
      if (!parsed) return st.fail("<nd> without valid ref");
      st.way.node_refs.push_back(*parsed);
    }
  }
}

void XMLCALL on_end(void* user, const char* /*name*/) {
  auto& st = *static_cast<XmlState*>(user);
  if (st.depth == 2) {
    if (st.in == XmlState::In::Node) {
      const OsmId id = st.node.id;
      st.data.nodes.insert_or_assign(id, std::move(st.node));
    } else if (st.in == XmlState::In::Way) {
      st.data.ways.push_back(std::move(st.way));
    }
    st.in = XmlState::In::None;
  }
  --st.depth;
}

Tags read_tags(const nlohmann::json& element) {
  Tags tags;
  if (auto it = element.find("tags"); it != element.end() && it->is_object()) {
    for (const auto& [k, v] : it->items()) {
      tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return tags;
}

}  // namespace

RawOsmData parse_osm_xml(std::string_view bytes, std::string provenance) {
  std::string inflated;
  if (is_gzip(bytes)) {
    inflated = gunzip(bytes);
    bytes = inflated;
  }

  XmlState st;
  st.parser = XML_ParserCreate("UTF-8");
  if (st.parser == nullptr) throw Error(ErrorCode::MalformedInput, "cannot create XML parser");
  XML_SetUserData(st.parser, &st);
  XML_SetElementHandler(st.parser, on_start, on_end);

  // Feed in chunks to stay within expat's int length limit.
  constexpr std::size_t kChunk = 1 << 24;
  XML_Status status = XML_STATUS_OK;
  std::size_t offset = 0;
  do {
    const std::size_t len = std::min(kChunk, bytes.size() - offset);
    const bool last = offset + len == bytes.size();
    status = XML_Parse(st.parser, bytes.data() + offset, static_cast<int>(len), last);
    offset += len;
  } while (status == XML_STATUS_OK && offset < bytes.size());

  std::string error = st.error;
  if (error.empty() && status != XML_STATUS_OK) {
    error = std::string("XML error: ") + XML_ErrorString(XML_GetErrorCode(st.parser)) +
            " at line " + std::to_string(XML_GetCurrentLineNumber(st.parser)) + ", column " +
            std::to_string(XML_GetCurrentColumnNumber(st.parser));
  }
  XML_ParserFree(st.parser);
  if (!error.empty()) throw Error(ErrorCode::MalformedInput, error);
  if (!st.saw_root) throw Error(ErrorCode::MalformedInput, "empty XML document");

  st.data.provenance = std::move(provenance);
  return std::move(st.data);
}

RawOsmData parse_overpass_json(std::string_view bytes, std::string provenance) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, std::string("JSON parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("elements") || !doc["elements"].is_array()) {
    throw Error(ErrorCode::MalformedInput, "Overpass JSON lacks an elements array");
  }

  RawOsmData data;
  data.provenance = std::move(provenance);
  std::size_t index = 0;
  try {
    for (const auto& el : doc["elements"]) {
      const std::string type = el.value("type", "");
      if (type == "node") {
        OsmNode node{el.at("id").get<OsmId>(),
                     geo::GeoPoint{el.at("lat").get<double>(), el.at("lon").get<double>()},
                     read_tags(el)};
        if (!geo::is_valid(node.location)) {
          throw Error(ErrorCode::MalformedInput,
                      "node coordinate out of range in element " + std::to_string(index));
        }
        data.nodes.insert_or_assign(node.id, std::move(node));
      } else if (type == "way") {
        OsmWay way{el.at("id").get<OsmId>(), {}, read_tags(el)};
        if (auto it = el.find("nodes"); it != el.end()) {
          way.node_refs = it->get<std::vector<OsmId>>();
        }
        data.ways.push_back(std::move(way));
      }
      ++index;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput,
                "bad element " + std::to_string(index) + ": " + e.what());
  }
  return data;
}

RawOsmData parse_any(std::string_view bytes, std::string provenance) {
  if (is_gzip(bytes)) return parse_osm_xml(bytes, std::move(provenance));
  const auto first = bytes.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw Error(ErrorCode::MalformedInput, "empty input");
  if (bytes[first] == '{') return parse_overpass_json(bytes, std::move(provenance));
  return parse_osm_xml(bytes, std::move(provenance));
}

RawOsmData load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_any(ss.str(), path);
}

RawOsmData resolve(RawOsmData data) {
  std::vector<OsmWay> kept;
  kept.reserve(data.ways.size());
  for (OsmWay& way : data.ways) {
    auto missing = [&](OsmId ref) { return !data.nodes.contains(ref); };
    const auto before = way.node_refs.size();
    std::erase_if(way.node_refs, missing);
    data.unresolved_refs += before - way.node_refs.size();
    if (way.node_refs.size() >= 2) kept.push_back(std::move(way));
  }
  data.ways = std::move(kept);
  return data;
}

WayFilter WayFilter::drivable(bool include_service_roads) {
  WayFilter f;
  f.include_highway_tags = {"motorway",      "motorway_link", "trunk",         "trunk_link",
                            "primary",       "primary_link",  "secondary",     "secondary_link",
                            "tertiary",      "tertiary_link", "unclassified",  "residential",
                            "living_street", "road"};
  f.exclude_highway_tags = {"footway", "path",         "cycleway", "pedestrian", "steps",
                            "track",   "bridleway",    "corridor", "construction",
                            "proposed", "abandoned",   "platform", "raceway"};
  f.exclude_access_values = {"private", "no"};
  f.include_service_roads = include_service_roads;
  return f;
}

void WayFilter::validate() const {
  for (const std::string& tag : include_highway_tags) {
    if (exclude_highway_tags.contains(tag)) {
      throw Error(ErrorCode::ConfigError, "highway tag '" + tag + "' is both included and excluded");
    }
  }
}

bool way_passes(const OsmWay& way, const WayFilter& filter, FilterStats* stats) {
  auto reject = [&](std::size_t FilterStats::*counter) {
    if (stats) ++(stats->*counter);
    return false;
  };
  const auto highway = way.tags.find("highway");
  if (highway == way.tags.end()) return reject(&FilterStats::no_highway);
  const std::string& hw = highway->second;
  if (filter.exclude_highway_tags.contains(hw)) return reject(&FilterStats::excluded_highway);
  if (hw == "service") {
    if (!filter.include_service_roads) return reject(&FilterStats::service);
  } else if (!filter.include_highway_tags.contains(hw)) {
    return reject(&FilterStats::not_included);
  }
  if (auto area = way.tags.find("area"); area != way.tags.end() && area->second == "yes") {
    return reject(&FilterStats::area);
  }
  if (auto access = way.tags.find("access");
      access != way.tags.end() && filter.exclude_access_values.contains(access->second)) {
    return reject(&FilterStats::access);
  }
  if (stats) ++stats->retained;
  return true;
}

FilterResult filter_drivable(const RawOsmData& data, const WayFilter& filter) {
  filter.validate();
  FilterResult result;
  result.data.provenance = data.provenance;
  result.data.unresolved_refs = data.unresolved_refs;
  for (const OsmWay& way : data.ways) {
    if (!way_passes(way, filter, &result.stats)) continue;
    for (OsmId ref : way.node_refs) {
      if (auto it = data.nodes.find(ref); it != data.nodes.end()) {
        result.data.nodes.emplace(ref, it->second);
      }
    }
    result.data.ways.push_back(way);
  }
  return result;
}

}  // namespace streetnet::osm
