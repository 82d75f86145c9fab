#pragma once

#include <string>
#include <string_view>

#include "streetnet/graph.hpp"

namespace streetnet::io {

/// GraphML 1.0 with a directed <graph>. Node data: lat, lon, streets_per_node (omitted when
/// unset), way_endpoint. Edge data: edge_id, length_m, oneway, geometry ("lon,lat lon,lat ..."),
/// reversed_twin (omitted when absent), zero_length. Numbers use the shortest representation
/// that reads back to the same double, so import(export(g)) == g.
std::string export_graphml(const net::StreetGraph& g);

/// Throws MalformedInput on invalid XML, unknown node references or an undirected graph.
net::StreetGraph import_graphml(std::string_view text);

}  // namespace streetnet::io
