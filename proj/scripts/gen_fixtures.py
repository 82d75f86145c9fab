#!/usr/bin/env python3
"""Generate the synthetic small-town fixture corpus under data/fixtures/.

Every town is a jittered street grid with curved streets, culs-de-sac, one-way
streets, a roundabout, and ways the drivable filter must drop (service roads,
footways, area=yes, private access). The street grid extends past the town
boundary so buffering and truncation both matter. Output is deterministic.
"""
import json
import math
import pathlib
import random

R = 6_371_009.0
ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures"

TOWNS = [
    # name, rows, cols, spacing_m, lat, lon, seed
    ("ashford", 7, 8, 110.0, 40.10, -88.20, 1),
    ("bexley", 8, 8, 95.0, 41.52, -90.55, 2),
    ("cedar_falls", 9, 10, 120.0, 42.53, -92.45, 3),
    ("dunmore", 10, 10, 100.0, 41.42, -75.63, 4),
    ("elmira", 11, 12, 105.0, 42.09, -76.81, 5),
    ("fairview", 12, 13, 90.0, 39.63, -86.12, 6),
    ("glenwood", 13, 14, 115.0, 39.55, -107.32, 7),
    ("hartley", 14, 15, 100.0, 43.18, -95.47, 8),
    ("irondale", 15, 16, 95.0, 33.54, -86.71, 9),
    ("jasper", 16, 17, 110.0, 30.92, -94.00, 10),
    ("kenton", 8, 11, 130.0, 40.65, -83.61, 11),
    ("linden", 18, 18, 100.0, 32.30, -87.80, 12),
]


class Town:
    def __init__(self, lat0, lon0, seed):
        self.lat0, self.lon0 = lat0, lon0
        self.rng = random.Random(seed)
        self.nodes = []  # (id, lat, lon)
        self.ways = []  # (id, refs, tags)
        self.next_node = 1000
        self.next_way = 5000

    def to_deg(self, x, y):
        lat = self.lat0 + math.degrees(y / R)
        lon = self.lon0 + math.degrees(x / (R * math.cos(math.radians(self.lat0))))
        return round(lat, 7), round(lon, 7)

    def node(self, x, y):
        nid = self.next_node
        self.next_node += 1
        lat, lon = self.to_deg(x, y)
        self.nodes.append((nid, lat, lon))
        return nid

    def way(self, refs, **tags):
        wid = self.next_way
        self.next_way += 1
        self.ways.append((wid, refs, tags))
        return wid


def build_town(rows, cols, spacing, lat0, lon0, seed):
    t = Town(lat0, lon0, seed)
    rng = t.rng
    grid = {}
    pos = {}
    for i in range(rows):
        for j in range(cols):
            x = j * spacing + rng.uniform(-6, 6)
            y = i * spacing + rng.uniform(-6, 6)
            pos[(i, j)] = (x, y)
            grid[(i, j)] = t.node(x, y)

    def segment_refs(a, b, curve):
        refs = [grid[a]]
        if curve:
            (x0, y0), (x1, y1) = pos[a], pos[b]
            dx, dy = x1 - x0, y1 - y0
            length = math.hypot(dx, dy)
            nx, ny = -dy / length, dx / length
            bulge = rng.uniform(8, 20) * rng.choice((-1, 1))
            for k in (1, 2, 3):
                f = k / 4
                off = bulge * math.sin(math.pi * f)
                refs.append(t.node(x0 + dx * f + nx * off, y0 + dy * f + ny * off))
        refs.append(grid[b])
        return refs

    classes = ["residential"] * 6 + ["tertiary", "secondary", "unclassified"]

    def street(cells):
        hw = rng.choice(classes)
        oneway = rng.random() < 0.15
        run = []
        for a, b in zip(cells, cells[1:]):
            if rng.random() < 0.08:
                if len(run) > 1:
                    emit(run, hw, oneway)
                run = []
                continue
            seg = segment_refs(a, b, rng.random() < 0.2)
            run = run + seg[1:] if run else seg
        if len(run) > 1:
            emit(run, hw, oneway)

    def emit(refs, hw, oneway):
        tags = {"highway": hw, "name": f"Street {len(t.ways)}"}
        if oneway:
            if rng.random() < 0.3:
                tags["oneway"] = "-1"
            else:
                tags["oneway"] = "yes"
        t.way(refs, **tags)

    for i in range(rows):
        street([(i, j) for j in range(cols)])
    for j in range(cols):
        street([(i, j) for i in range(rows)])

    # Culs-de-sac hanging into blocks.
    for _ in range(max(2, rows * cols // 8)):
        i, j = rng.randrange(rows - 1), rng.randrange(cols - 1)
        x, y = pos[(i, j)]
        depth = rng.uniform(0.3, 0.45) * spacing
        mid = t.node(x + depth * 0.5, y + depth * 0.55)
        end = t.node(x + depth, y + depth * 0.9)
        t.way([grid[(i, j)], mid, end], highway="residential")

    # Roundabout replacing nothing, tied to a grid corner by a stub.
    ci, cj = rows // 2, cols // 2
    cx, cy = pos[(ci, cj)]
    cx += spacing * 0.5
    cy += spacing * 0.5
    ring = [t.node(cx + 18 * math.cos(a), cy + 18 * math.sin(a))
            for a in [k * math.pi / 3 for k in range(6)]]
    t.way(ring + [ring[0]], highway="residential", junction="roundabout")
    t.way([ring[3], grid[(ci, cj)]], highway="residential")
    t.way([ring[0], grid[(ci, cj + 1)]], highway="residential")

    # Ways the drivable filter drops.
    for _ in range(max(2, rows * cols // 10)):
        i, j = rng.randrange(rows - 1), rng.randrange(cols - 1)
        x, y = pos[(i, j)]
        a = t.node(x + spacing * 0.2, y + spacing * 0.3)
        b = t.node(x + spacing * 0.45, y + spacing * 0.35)
        t.way([grid[(i, j)], a, b], highway="service", service="driveway")
    for _ in range(max(2, rows * cols // 12)):
        i, j = rng.randrange(rows - 1), rng.randrange(cols - 1)
        t.way([grid[(i, j)], grid[(i + 1, j + 1)]], highway="footway")
    i, j = rng.randrange(rows - 1), rng.randrange(cols - 1)
    x, y = pos[(i, j)]
    plaza = [t.node(x + dx, y + dy) for dx, dy in ((20, 20), (50, 20), (50, 45), (20, 45))]
    t.way(plaza + [plaza[0]], highway="pedestrian", area="yes")
    x, y = pos[(rows - 1, cols - 1)]
    p1 = t.node(x + 40, y + 30)
    p2 = t.node(x + 80, y + 35)
    t.way([grid[(rows - 1, cols - 1)], p1, p2], highway="residential", access="private")

    # A road far outside any buffer.
    far = [t.node(-3000 - 100 * k, -3000) for k in range(4)]
    t.way(far, highway="primary")

    # Town boundary: inset 1.5 blocks from the grid extents.
    inset = 1.0 * spacing
    x0, y0 = inset, inset
    x1, y1 = (cols - 1) * spacing - inset, (rows - 1) * spacing - inset
    if x1 <= x0:
        x0, x1 = 0.3 * spacing, (cols - 1) * spacing - 0.3 * spacing
    if y1 <= y0:
        y0, y1 = 0.3 * spacing, (rows - 1) * spacing - 0.3 * spacing
    corners = [t.to_deg(x0, y0), t.to_deg(x1, y0), t.to_deg(x1, y1), t.to_deg(x0, y1)]
    return t, corners


def write_osm(path, town):
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             '<osm version="0.6" generator="gen_fixtures">']
    for nid, lat, lon in town.nodes:
        lines.append(f'  <node id="{nid}" lat="{lat:.7f}" lon="{lon:.7f}"/>')
    for wid, refs, tags in town.ways:
        lines.append(f'  <way id="{wid}">')
        lines.extend(f'    <nd ref="{r}"/>' for r in refs)
        lines.extend(f'    <tag k="{k}" v="{v}"/>' for k, v in sorted(tags.items()))
        lines.append('  </way>')
    lines.append('</osm>')
    path.write_text("\n".join(lines) + "\n")


def write_boundary(path, corners, name):
    ring = [[lon, lat] for lat, lon in corners]
    ring.append(ring[0])
    doc = {"type": "FeatureCollection", "features": [{
        "type": "Feature", "properties": {"name": name},
        "geometry": {"type": "Polygon", "coordinates": [ring]}}]}
    path.write_text(json.dumps(doc, indent=2) + "\n")


def main():
    (ROOT / "osm").mkdir(parents=True, exist_ok=True)
    (ROOT / "boundaries").mkdir(parents=True, exist_ok=True)
    sites = []
    for name, rows, cols, spacing, lat, lon, seed in TOWNS:
        town, corners = build_town(rows, cols, spacing, lat, lon, seed)
        write_osm(ROOT / "osm" / f"{name}.osm", town)
        write_boundary(ROOT / "boundaries" / f"{name}.geojson", corners, name)
        sites.append({"site_id": name, "boundary": f"boundaries/{name}.geojson",
                      "buffer_m": 500, "source": f"osm/{name}.osm"})

    options = {"anc": "sampled", "betweenness": "length", "pagerank_damping": 0.85,
               "sample_limit": 2000, "seed": 42, "jobs": 0, "offline": True}
    manifest = {"output_dir": "out", "options": options, "sites": sites}
    (ROOT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    # Poisoned corpus: two good sites, a truncated extract and a boundary with no data.
    text = (ROOT / "osm" / "ashford.osm").read_text()
    (ROOT / "osm" / "poisoned.osm").write_text(text[: len(text) // 2])
    lat, lon = 10.0, 10.0
    d = 0.005
    write_boundary(ROOT / "boundaries" / "nowhere.geojson",
                   [(lat, lon), (lat, lon + d), (lat + d, lon + d), (lat + d, lon)], "nowhere")
    poisoned = {"output_dir": "out-poisoned", "options": dict(options, anc="off"), "sites": [
        sites[0], sites[1],
        {"site_id": "poisoned", "boundary": "boundaries/ashford.geojson", "source": "osm/poisoned.osm"},
        {"site_id": "nowhere", "boundary": "boundaries/nowhere.geojson", "source": "osm/bexley.osm"},
        sites[2],
    ]}
    (ROOT / "manifest_poisoned.json").write_text(json.dumps(poisoned, indent=2) + "\n")


if __name__ == "__main__":
    main()
