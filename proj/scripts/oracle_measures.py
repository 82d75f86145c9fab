#!/usr/bin/env python3
"""Recompute a site's measure report from its exported GraphML with networkx.

Usage: oracle_measures.py GRAPHML BOUNDARY_GEOJSON REPORT_JSON [--anc]

Compares every field of REPORT_JSON against an independent computation and exits
nonzero on any mismatch. avg_node_connectivity is checked only with --anc, where
the report must have been produced in exact mode.
"""
import json
import math
import sys

import networkx as nx

R = 6_371_009.0


def haversine(a, b):
    (lat1, lon1), (lat2, lon2) = a, b
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * R * math.asin(math.sqrt(h))


def spherical_area_km2(ring):
    # Sum of signed edge-to-equator excesses: tan(E/2) = tan(dl/2) (t1 + t2) / (1 + t1 t2),
    # t = tan(lat/2). Exact on the sphere for great-circle edges.
    pts = [(math.radians(lat), math.radians(lon)) for lon, lat in ring]
    if pts[0] == pts[-1]:
        pts = pts[:-1]
    total = 0.0
    for i in range(len(pts)):
        (p1, l1), (p2, l2) = pts[i], pts[(i + 1) % len(pts)]
        t1, t2 = math.tan(p1 / 2), math.tan(p2 / 2)
        total += 2 * math.atan(math.tan((l2 - l1) / 2) * (t1 + t2) / (1 + t1 * t2))
    return abs(total) * R * R / 1e6


def load_boundary(path):
    doc = json.load(open(path))
    geoms = []
    if doc["type"] == "FeatureCollection":
        geoms = [f["geometry"] for f in doc["features"]]
    elif doc["type"] == "Feature":
        geoms = [doc["geometry"]]
    else:
        geoms = [doc]
    area = 0.0
    for g in geoms:
        polys = [g["coordinates"]] if g["type"] == "Polygon" else g["coordinates"]
        for poly in polys:
            area += spherical_area_km2(poly[0]) - sum(spherical_area_km2(h) for h in poly[1:])
    return area


def compute(graphml, boundary, with_anc):
    G = nx.read_graphml(graphml, force_multigraph=True)
    pos = {u: (d["lat"], d["lon"]) for u, d in G.nodes(data=True)}
    n, m = G.number_of_nodes(), G.number_of_edges()
    area = load_boundary(boundary)
    out = {"n": n, "m": m, "area_km2": area}

    edges = list(G.edges(keys=True, data=True))
    total_edge = sum(d["length_m"] for *_, d in edges)
    by_id = {int(d["edge_id"]): d for *_, d in edges}
    street = [d for d in by_id.values()
              if "reversed_twin" not in d or int(d["edge_id"]) < int(d["reversed_twin"])
              or int(d["reversed_twin"]) not in by_id]
    total_street = sum(d["length_m"] for d in street)
    spn = {u: d["streets_per_node"] for u, d in G.nodes(data=True)}
    inter = sum(1 for v in spn.values() if v >= 2)
    out.update({
        "intersection_count": inter,
        "node_density_per_km2": n / area,
        "intersection_density_per_km2": inter / area,
        "edge_density_km_per_km2": total_edge / 1000 / area,
        "street_density_km_per_km2": total_street / 1000 / area,
        "total_edge_length_km": total_edge / 1000,
        "total_street_length_km": total_street / 1000,
        "street_segment_count": len(street),
        "avg_edge_length_m": total_edge / m,
        "avg_street_segment_length_m": total_street / len(street),
    })

    num = den = 0.0
    for u, v, _, d in edges:
        if u == v:
            continue
        gc = haversine(pos[u], pos[v])
        if gc == 0:
            continue
        num += d["length_m"]
        den += gc
    out["avg_circuity"] = num / den

    deg = dict(G.degree())
    out["avg_node_degree"] = sum(deg.values()) / n
    out["avg_streets_per_node"] = sum(spn.values()) / n
    out["prop_deadends"] = sum(1 for v in spn.values() if v == 1) / n
    out["prop_3way"] = sum(1 for v in spn.values() if v == 3) / n
    out["prop_4way"] = sum(1 for v in spn.values() if v == 4) / n
    out["self_loop_proportion"] = sum(1 for u, v, *_ in edges if u == v) / m

    U = nx.Graph()
    U.add_nodes_from(G.nodes)
    for u, v, _, d in edges:
        if u == v:
            continue
        w = d["length_m"]
        if U.has_edge(u, v):
            U[u][v]["length"] = min(U[u][v]["length"], w)
        else:
            U.add_edge(u, v, length=w)
    out["avg_clustering_coefficient"] = sum(nx.clustering(U).values()) / n
    out["avg_weighted_clustering_coefficient"] = sum(nx.clustering(U, weight="length").values()) / n

    nd, wnd = [], []
    for u in G.nodes:
        nbrs = list(U.neighbors(u))
        if not nbrs:
            nd.append(0.0)
            wnd.append(0.0)
            continue
        nd.append(sum(deg[v] for v in nbrs) / len(nbrs))
        ws = [1.0 / U[u][v]["length"] for v in nbrs]
        wnd.append(sum(w * deg[v] for w, v in zip(ws, nbrs)) / sum(ws))
    out["avg_neighborhood_degree"] = sum(nd) / n
    out["avg_weighted_neighborhood_degree"] = sum(wnd) / n
    out["avg_degree_centrality"] = sum(d / (n - 1) for d in deg.values()) / n

    pr = nx.pagerank(G, alpha=0.85, tol=1e-12, max_iter=10000, weight=None)
    out["max_pagerank"] = max(pr.values())
    out["min_pagerank"] = min(pr.values())

    D = nx.DiGraph()
    D.add_nodes_from(G.nodes)
    for u, v, _, d in edges:
        if u == v:
            continue
        w = d["length_m"]
        if D.has_edge(u, v):
            D[u][v]["length"] = min(D[u][v]["length"], w)
        else:
            D.add_edge(u, v, length=w)
    bc = nx.betweenness_centrality(D, weight="length", normalized=True)
    out["max_betweenness_centrality"] = max(bc.values())
    if with_anc:
        out["avg_node_connectivity"] = nx.average_node_connectivity(D)
    return out


def main():
    graphml, boundary, report_path = sys.argv[1:4]
    with_anc = "--anc" in sys.argv[4:]
    report = json.load(open(report_path))
    oracle = compute(graphml, boundary, with_anc)
    bad = 0
    for key, want in oracle.items():
        got = report.get(key)
        # The report's boundary edges are straight in an equal-area projection, the
        # oracle's are great circles, so area-derived fields agree only to ~1e-8.
        tol = 1e-6 if key in ("max_pagerank", "min_pagerank", "area_km2") or "density" in key else 1e-9
        ok = got is not None and math.isclose(got, want, rel_tol=tol, abs_tol=1e-12)
        print(f"{'ok  ' if ok else 'FAIL'} {key}: report={got} oracle={want}")
        bad += not ok
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
