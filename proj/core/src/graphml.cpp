#include "streetnet/graphml.hpp"

#include <charconv>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>

#include <expat.h>

#include "streetnet/error.hpp"

namespace streetnet::io {
namespace {

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string geometry_string(const std::vector<geo::GeoPoint>& pts) {
  std::string out;
  for (const geo::GeoPoint& p : pts) {
    if (!out.empty()) out += ' ';
    out += num(p.lon);
    out += ',';
    out += num(p.lat);
  }
  return out;
}

template <typename T>
std::optional<T> parse_as(std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

struct Reader {
  XML_Parser parser = nullptr;
  std::map<std::string, std::string> key_names;  // key id -> attr.name
  net::StreetGraph g;
  std::string error;
  bool directed_seen = false;

  enum class In { None, Node, Edge } in = In::None;
  net::NodeId node_id = 0;
  net::NodeAttr node;
  bool has_lat = false, has_lon = false;
  net::Edge edge;
  bool has_length = false;
  bool has_edge_id = false;
  std::string data_key;
  std::string text;
  bool in_data = false;

  void fail(const std::string& message) {
    if (!error.empty()) return;
    error = message + " at line " + std::to_string(XML_GetCurrentLineNumber(parser));
    XML_StopParser(parser, XML_FALSE);
  }
};

const char* attr(const char** attrs, const char* name) {
  for (std::size_t i = 0; attrs[i] != nullptr; i += 2) {
    if (std::strcmp(attrs[i], name) == 0) return attrs[i + 1];
  }
  return nullptr;
}

void XMLCALL on_start(void* user, const char* name, const char** attrs) {
  auto& r = *static_cast<Reader*>(user);
  if (std::strcmp(name, "key") == 0) {
    const char* id = attr(attrs, "id");
    const char* an = attr(attrs, "attr.name");
    if (id && an) r.key_names[id] = an;
  } else if (std::strcmp(name, "graph") == 0) {
    const char* def = attr(attrs, "edgedefault");
    if (!def || std::strcmp(def, "directed") != 0) return r.fail("graph is not directed");
    r.directed_seen = true;
  } else if (std::strcmp(name, "node") == 0) {
    const char* id = attr(attrs, "id");
    auto parsed = id ? parse_as<net::NodeId>(id) : std::nullopt;
    if (!parsed) return r.fail("node without integer id");
    r.in = Reader::In::Node;
    r.node_id = *parsed;
    r.node = net::NodeAttr{};
    r.has_lat = r.has_lon = false;
  } else if (std::strcmp(name, "edge") == 0) {
    const char* s = attr(attrs, "source");
    const char* t = attr(attrs, "target");
    auto u = s ? parse_as<net::NodeId>(s) : std::nullopt;
    auto v = t ? parse_as<net::NodeId>(t) : std::nullopt;
    if (!u || !v) return r.fail("edge without integer source/target");
    r.in = Reader::In::Edge;
    r.edge = net::Edge{};
    r.edge.u = *u;
    r.edge.v = *v;
    r.has_length = false;
    r.has_edge_id = false;
  } else if (std::strcmp(name, "data") == 0) {
    const char* key = attr(attrs, "key");
    if (!key) return r.fail("data without key");
    auto it = r.key_names.find(key);
    r.data_key = it == r.key_names.end() ? key : it->second;
    r.text.clear();
    r.in_data = true;
  }
}

void XMLCALL on_text(void* user, const char* s, int len) {
  auto& r = *static_cast<Reader*>(user);
  if (r.in_data) r.text.append(s, static_cast<std::size_t>(len));
}

bool parse_bool(const std::string& s) { return s == "true" || s == "1" || s == "True"; }

void apply_node_data(Reader& r) {
  const std::string& k = r.data_key;
  if (k == "lat" || k == "lon") {
    auto v = parse_as<double>(r.text);
    if (!v) return r.fail("bad " + k);
    (k == "lat" ? r.node.location.lat : r.node.location.lon) = *v;
    (k == "lat" ? r.has_lat : r.has_lon) = true;
  } else if (k == "streets_per_node") {
    auto v = parse_as<int>(r.text);
    if (!v) return r.fail("bad streets_per_node");
    r.node.streets_per_node = *v;
  } else if (k == "way_endpoint") {
    r.node.way_endpoint = parse_bool(r.text);
  }
}

std::optional<std::vector<geo::GeoPoint>> parse_geometry(const std::string& s) {
  std::vector<geo::GeoPoint> pts;
  std::istringstream in(s);
  std::string token;
  while (in >> token) {
    const auto comma = token.find(',');
    if (comma == std::string::npos) return std::nullopt;
    auto lon = parse_as<double>(std::string_view(token).substr(0, comma));
    auto lat = parse_as<double>(std::string_view(token).substr(comma + 1));
    if (!lon || !lat) return std::nullopt;
    pts.push_back({*lat, *lon});
  }
  return pts;
}

void apply_edge_data(Reader& r) {
  const std::string& k = r.data_key;
  if (k == "edge_id") {
    auto v = parse_as<net::EdgeId>(r.text);
    if (!v) return r.fail("bad edge_id");
    r.edge.id = *v;
    r.has_edge_id = true;
  } else if (k == "length_m" || k == "length") {
    auto v = parse_as<double>(r.text);
    if (!v) return r.fail("bad length");
    r.edge.length_m = *v;
    r.has_length = true;
  } else if (k == "oneway") {
    r.edge.oneway = parse_bool(r.text);
  } else if (k == "geometry") {
    auto pts = parse_geometry(r.text);
    if (!pts) return r.fail("bad geometry");
    r.edge.geometry = std::move(*pts);
  } else if (k == "reversed_twin") {
    auto v = parse_as<net::EdgeId>(r.text);
    if (!v) return r.fail("bad reversed_twin");
    r.edge.reversed_twin = *v;
  } else if (k == "zero_length") {
    r.edge.zero_length = parse_bool(r.text);
  }
}

void XMLCALL on_end(void* user, const char* name) {
  auto& r = *static_cast<Reader*>(user);
  if (std::strcmp(name, "data") == 0) {
    r.in_data = false;
    if (r.in == Reader::In::Node) apply_node_data(r);
    if (r.in == Reader::In::Edge) apply_edge_data(r);
  } else if (std::strcmp(name, "node") == 0) {
    if (!r.has_lat || !r.has_lon) return r.fail("node without lat/lon");
    r.g.nodes.insert_or_assign(r.node_id, r.node);
    r.in = Reader::In::None;
  } else if (std::strcmp(name, "edge") == 0) {
    net::Edge& e = r.edge;
    if (e.geometry.empty()) {
      auto u = r.g.nodes.find(e.u);
      auto v = r.g.nodes.find(e.v);
      if (u == r.g.nodes.end() || v == r.g.nodes.end()) return r.fail("edge references unknown node");
      e.geometry = {u->second.location, v->second.location};
    }
    if (!r.has_edge_id) e.id = r.g.edges.size();
    if (!r.has_length) e.length_m = geo::path_length_m(e.geometry);
    r.g.edges.push_back(std::move(e));
    r.in = Reader::In::None;
  }
}

}  // namespace

std::string export_graphml(const net::StreetGraph& g) {
  std::string out;
  out.reserve(256 + g.nodes.size() * 160 + g.edges.size() * 300);
  out +=
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" "
      "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
      "xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
      "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
      "  <key id=\"lat\" for=\"node\" attr.name=\"lat\" attr.type=\"double\"/>\n"
      "  <key id=\"lon\" for=\"node\" attr.name=\"lon\" attr.type=\"double\"/>\n"
      "  <key id=\"streets_per_node\" for=\"node\" attr.name=\"streets_per_node\" attr.type=\"int\"/>\n"
      "  <key id=\"way_endpoint\" for=\"node\" attr.name=\"way_endpoint\" attr.type=\"boolean\"/>\n"
      "  <key id=\"edge_id\" for=\"edge\" attr.name=\"edge_id\" attr.type=\"long\"/>\n"
      "  <key id=\"length_m\" for=\"edge\" attr.name=\"length_m\" attr.type=\"double\"/>\n"
      "  <key id=\"oneway\" for=\"edge\" attr.name=\"oneway\" attr.type=\"boolean\"/>\n"
      "  <key id=\"geometry\" for=\"edge\" attr.name=\"geometry\" attr.type=\"string\"/>\n"
      "  <key id=\"reversed_twin\" for=\"edge\" attr.name=\"reversed_twin\" attr.type=\"long\"/>\n"
      "  <key id=\"zero_length\" for=\"edge\" attr.name=\"zero_length\" attr.type=\"boolean\"/>\n"
      "  <graph id=\"G\" edgedefault=\"directed\">\n";
  for (const auto& [id, attr] : g.nodes) {
    out += "    <node id=\"" + std::to_string(id) + "\">";
    out += "<data key=\"lat\">" + num(attr.location.lat) + "</data>";
    out += "<data key=\"lon\">" + num(attr.location.lon) + "</data>";
    if (attr.streets_per_node != net::kStreetsUnset) {
      out += "<data key=\"streets_per_node\">" + std::to_string(attr.streets_per_node) + "</data>";
    }
    out += std::string("<data key=\"way_endpoint\">") + (attr.way_endpoint ? "true" : "false") + "</data>";
    out += "</node>\n";
  }
  for (const net::Edge& e : g.edges) {
    out += "    <edge id=\"e" + std::to_string(e.id) + "\" source=\"" + std::to_string(e.u) +
           "\" target=\"" + std::to_string(e.v) + "\">";
    out += "<data key=\"edge_id\">" + std::to_string(e.id) + "</data>";
    out += "<data key=\"length_m\">" + num(e.length_m) + "</data>";
    out += std::string("<data key=\"oneway\">") + (e.oneway ? "true" : "false") + "</data>";
    out += "<data key=\"geometry\">" + geometry_string(e.geometry) + "</data>";
    if (e.reversed_twin) {
      out += "<data key=\"reversed_twin\">" + std::to_string(*e.reversed_twin) + "</data>";
    }
    out += std::string("<data key=\"zero_length\">") + (e.zero_length ? "true" : "false") + "</data>";
    out += "</edge>\n";
  }
  out += "  </graph>\n</graphml>\n";
  return out;
}

net::StreetGraph import_graphml(std::string_view text) {
  Reader r;
  r.parser = XML_ParserCreate("UTF-8");
  if (r.parser == nullptr) throw Error(ErrorCode::MalformedInput, "cannot create XML parser");
  XML_SetUserData(r.parser, &r);
  XML_SetElementHandler(r.parser, on_start, on_end);
  XML_SetCharacterDataHandler(r.parser, on_text);
  const XML_Status status = XML_Parse(r.parser, text.data(), static_cast<int>(text.size()), XML_TRUE);
  std::string error = r.error;
  if (error.empty() && status != XML_STATUS_OK) {
    error = std::string("GraphML XML error: ") + XML_ErrorString(XML_GetErrorCode(r.parser)) +
            " at line " + std::to_string(XML_GetCurrentLineNumber(r.parser));
  }
  XML_ParserFree(r.parser);
  if (!error.empty()) throw Error(ErrorCode::MalformedInput, error);
  if (!r.directed_seen) throw Error(ErrorCode::MalformedInput, "GraphML has no directed graph");
  for (const net::Edge& e : r.g.edges) {
    if (!r.g.nodes.contains(e.u) || !r.g.nodes.contains(e.v)) {
      throw Error(ErrorCode::MalformedInput, "edge references unknown node");
    }
  }
  return std::move(r.g);
}

}  // namespace streetnet::io
