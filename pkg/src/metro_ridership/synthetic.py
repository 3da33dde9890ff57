"""Synthetic metro city generator.

Produces a self-consistent set of input files (stations, edges, POIs,
population raster, one week of ridership) shaped like a real system: several
straight lines crossing near the centre, transfer stations where lines meet,
denser land use toward the centre, and one hub station with outsized
ridership. Useful for demos, tests and timing runs.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from pathlib import Path

import numpy as np

from . import features as feat
from . import ingest, network
from .geo import EARTH_RADIUS_M, haversine_km

CENTER = network.TAIPEI_CITY_HALL
SPACING_M = 1100.0
MERGE_M = 400.0
WEEK = [dt.date(2015, 10, 12) + dt.timedelta(days=i) for i in range(7)]

# expected POIs per station catchment at the centre, per category
POI_RATES = {
    "residence": 9.0,
    "hotel": 14.0,
    "shopping": 8.0,
    "school": 14.0,
    "office": 5.0,
    "bank": 20.0,
    "hospital": 8.0,
    "university": 2.0,
    "bus_station": 25.0,
}


def _to_latlon(x_m: float, y_m: float) -> tuple[float, float]:
    lat0, lon0 = CENTER
    lat = lat0 + math.degrees(y_m / EARTH_RADIUS_M)
    lon = lon0 + math.degrees(x_m / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
    return lat, lon


def _layout(n_stations: int, n_lines: int, rng: np.random.Generator):
    """Grow lines outward from the centre until ``n_stations`` distinct stations exist."""
    if n_stations < 3:
        raise ValueError("need at least 3 stations")
    angles = [math.pi * i / n_lines + rng.uniform(-0.15, 0.15) for i in range(n_lines)]
    offsets = [rng.uniform(-600, 600) for _ in range(n_lines)]
    points: list[tuple[float, float]] = []
    lines: list[list[int]] = [[] for _ in range(n_lines)]

    def place(x, y, line):
        for idx, (px, py) in enumerate(points):
            if math.hypot(px - x, py - y) < MERGE_M and idx not in lines[line]:
                return idx
        points.append((x, y))
        return len(points) - 1

    step = 0
    while len(points) < n_stations:
        if step > n_stations:
            break
        for line in range(n_lines):
            for direction in ((1,) if step == 0 else (1, -1)):
                if len(points) >= n_stations:
                    break
                a = angles[line]
                along = direction * step * SPACING_M
                x = along * math.cos(a) - offsets[line] * math.sin(a)
                y = along * math.sin(a) + offsets[line] * math.cos(a)
                idx = place(x, y, line)
                if direction == 1:
                    lines[line].append(idx)
                else:
                    lines[line].insert(0, idx)
        step += 1
    return points, lines


def _connected(n: int, lines) -> bool:
    adj = {i: set() for i in range(n)}
    for members in lines:
        for a, b in zip(members, members[1:]):
            adj[a].add(b)
            adj[b].add(a)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()] - seen:
            seen.add(w)
            stack.append(w)
    return len(seen) == n


def make_city(n_stations: int = 108, seed: int = 0, n_lines: int | None = None):
    """Return ``(stations, edges, pois, grid, records)`` for a synthetic city."""
    rng = np.random.default_rng(seed)
    if n_lines is None:
        n_lines = max(2, min(5, n_stations // 20))
    # redraw until the lines form one connected network
    for _ in range(1000):
        points, lines = _layout(n_stations, n_lines, rng)
        if _connected(len(points), lines):
            break
    else:
        raise ValueError(f"could not lay out a connected network of {n_stations} stations")

    line_opened = [dt.date(1996, 3, 28) + dt.timedelta(days=int(rng.integers(0, 6000))) for _ in lines]
    opened: dict[int, dt.date] = {}
    for li, members in enumerate(lines):
        for idx in members:
            opened[idx] = min(opened.get(idx, line_opened[li]), line_opened[li])
    # most recent extension: the outermost station of the last line
    opened[lines[-1][-1]] = dt.date(2015, 9, 19)

    hub = min(range(len(points)), key=lambda i: math.hypot(points[i][0] + 2500, points[i][1] - 500))
    stations = []
    for i, (x, y) in enumerate(points):
        lat, lon = _to_latlon(x, y)
        name = "Main Station" if i == hub else f"Station {i + 1}"
        stations.append(ingest.Station(f"S{i + 1:03d}", name, round(lat, 6), round(lon, 6), opened[i], i == hub))
    stations = ingest.StationTable(tuple(stations))

    seen = set()
    edges = []
    for members in lines:
        for a, b in zip(members, members[1:]):
            key = frozenset((a, b))
            if a != b and key not in seen:
                seen.add(key)
                edges.append(ingest.Edge(stations[a].station_id, stations[b].station_id))
    edges = ingest.EdgeList(tuple(edges))

    pois = []
    for s, (x, y) in zip(stations, points):
        weight = math.exp(-math.hypot(x, y) / 8000.0)
        for cat, rate in POI_RATES.items():
            # scattered over a 700 m disc, 1.96x the 500 m catchment area
            k = int(rng.poisson(rate * (0.3 + weight) * 1.96))
            r = 700.0 * np.sqrt(rng.uniform(0, 1, k))
            th = rng.uniform(0, 2 * math.pi, k)
            for dx, dy in zip(r * np.cos(th), r * np.sin(th)):
                lat, lon = _to_latlon(x + dx, y + dy)
                pois.append(ingest.Poi(f"P{len(pois) + 1:06d}", cat, round(lat, 6), round(lon, 6)))
    pois = ingest.PoiTable(tuple(pois))

    lats = [s.lat for s in stations]
    lons = [s.lon for s in stations]
    cell = 0.002
    lat0 = math.floor((min(lats) - 0.01) / cell) * cell
    lon0 = math.floor((min(lons) - 0.01) / cell) * cell
    nrows = int(math.ceil((max(lats) + 0.01 - lat0) / cell))
    ncols = int(math.ceil((max(lons) + 0.01 - lon0) / cell))
    tmp = ingest.PopulationGrid(lat0, lon0, cell, nrows, ncols, np.zeros((nrows, ncols)))
    clat, clon = tmp.cell_centers()
    dist = haversine_km(clat, clon, CENTER[0], CENTER[1])
    values = np.round(rng.gamma(4.0, 1.0, (nrows, ncols)) * 2.5 * np.exp(-dist / 9.0), 4)
    nodata = -9999.0
    values[rng.uniform(0, 1, values.shape) < 0.002] = nodata
    grid = ingest.PopulationGrid(round(lat0, 6), round(lon0, 6), cell, nrows, ncols, values, nodata)

    graph = network.build_graph(stations, edges)
    m = feat.assemble_feature_matrix(
        stations, pois, grid,
        network.degree_centrality(graph), network.betweenness_centrality(graph),
        network.distance_to_center(stations, CENTER),
    )
    col = m.column
    weekday_mu = (
        2000 + 600 * col("Shopping") + 900 * col("Office") + 350 * col("Bus") + 40 * col("Pop")
        - 400 * col("Dis_to_center") + 2.5 * col("Days_open") + 30000 * col("Betweenness")
    )
    weekend_mu = (
        1500 + 1100 * col("Shopping") + 300 * col("Bus") - 500 * col("Dis_to_center") + 3.0 * col("Days_open")
    )
    hub_boost = np.where(col("Trans_hub") == 1.0, 8.0, 1.0)
    records = []
    for i, s in enumerate(stations):
        for day in WEEK:
            mu = weekday_mu[i] if day.weekday() < 5 else weekend_mu[i]
            mu = max(mu, 500.0) * hub_boost[i] * rng.lognormal(0.0, 0.25)
            share = rng.uniform(0.45, 0.55)
            records.append(
                ingest.RidershipRecord(s.station_id, day, int(round(mu * share / 2)), int(round(mu * (1 - share) / 2)))
            )
    return stations, edges, pois, grid, ingest.RidershipRecords(tuple(records))


def bundled_fixture(name: str = "toy10") -> Path:
    """Directory of a fixture shipped with the package (holds ``config.json``)."""
    return Path(__file__).resolve().parent / "fixtures" / name


def write_city(out_dir, n_stations: int = 108, seed: int = 0, config_overrides: dict | None = None) -> Path:
    """Write the synthetic inputs and a ``config.json`` referring to them. Returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stations, edges, pois, grid, records = make_city(n_stations, seed)
    ingest.write_stations(stations, out / "stations.csv")
    ingest.write_edges(edges, out / "edges.csv")
    ingest.write_pois(pois, out / "pois.csv")
    ingest.write_population_grid(grid, out / "population.asc")
    ingest.write_ridership(records, out / "ridership.csv")
    config = {
        "stations": "stations.csv",
        "edges": "edges.csv",
        "pois": "pois.csv",
        "population": "population.asc",
        "ridership": "ridership.csv",
        "out_dir": "out",
    }
    config.update(config_overrides or {})
    path = out / "config.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path
