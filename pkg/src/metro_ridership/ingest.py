"""Loading and validation of the input tables, plus ridership aggregation.

All loaders return immutable tables. Row numbers in error messages are file
line numbers (the header is line 1).
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DataError

POI_CATEGORIES = (
    "residence",
    "hotel",
    "shopping",
    "school",
    "office",
    "bank",
    "hospital",
    "university",
    "bus_station",
)

STATION_FIELDS = ("station_id", "name", "lat", "lon", "opened_date", "is_hub")
EDGE_FIELDS = ("from_id", "to_id")
POI_FIELDS = ("poi_id", "category", "lat", "lon")
RIDERSHIP_FIELDS = ("station_id", "date", "boardings", "alightings")

# Monday=0 ... Sunday=6, as datetime.date.weekday()
DEFAULT_WEEKDAYS = frozenset(range(5))


@dataclass(frozen=True)
class Station:
    station_id: str
    name: str
    lat: float
    lon: float
    opened_date: dt.date
    is_hub: bool = False


@dataclass(frozen=True)
class StationTable:
    stations: tuple[Station, ...]

    def __len__(self) -> int:
        return len(self.stations)

    def __iter__(self) -> Iterator[Station]:
        return iter(self.stations)

    def __getitem__(self, i: int) -> Station:
        return self.stations[i]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.station_id for s in self.stations)

    def by_id(self, station_id: str) -> Station:
        for s in self.stations:
            if s.station_id == station_id:
                return s
        raise KeyError(station_id)

    @property
    def hub_ids(self) -> frozenset[str]:
        return frozenset(s.station_id for s in self.stations if s.is_hub)


@dataclass(frozen=True)
class Edge:
    from_id: str
    to_id: str


@dataclass(frozen=True)
class EdgeList:
    edges: tuple[Edge, ...]

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.edges)


@dataclass(frozen=True)
class Poi:
    poi_id: str
    category: str
    lat: float
    lon: float


@dataclass(frozen=True)
class PoiTable:
    pois: tuple[Poi, ...]

    def __len__(self) -> int:
        return len(self.pois)

    def __iter__(self) -> Iterator[Poi]:
        return iter(self.pois)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lat, lon, category code) arrays; codes index POI_CATEGORIES."""
        code = {c: i for i, c in enumerate(POI_CATEGORIES)}
        lat = np.array([p.lat for p in self.pois], dtype=float)
        lon = np.array([p.lon for p in self.pois], dtype=float)
        cat = np.array([code[p.category] for p in self.pois], dtype=int)
        return lat, lon, cat


@dataclass(frozen=True, eq=False)
class PopulationGrid:
    """Raster of persons per cell.

    ``values[0]`` is the northernmost row, as stored in ESRI ASCII files.
    No-data cells are kept as the sentinel in ``values`` and masked by
    :attr:`nodata_mask`.
    """

    origin_lat: float
    origin_lon: float
    cell_size: float
    nrows: int
    ncols: int
    values: np.ndarray
    nodata: float | None = None

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def nodata_mask(self) -> np.ndarray:
        if self.nodata is None:
            return np.zeros(self.values.shape, dtype=bool)
        return self.values == self.nodata

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(lat, lon) arrays of cell centres, each shaped (nrows, ncols)."""
        rows = np.arange(self.nrows)
        cols = np.arange(self.ncols)
        lat = self.origin_lat + (self.nrows - rows - 0.5) * self.cell_size
        lon = self.origin_lon + (cols + 0.5) * self.cell_size
        return np.meshgrid(lat, lon, indexing="ij")

    def contains(self, lat: float, lon: float) -> bool:
        return (
            self.origin_lat <= lat <= self.origin_lat + self.nrows * self.cell_size
            and self.origin_lon <= lon <= self.origin_lon + self.ncols * self.cell_size
        )

    def __eq__(self, other):
        if not isinstance(other, PopulationGrid):
            return NotImplemented
        return (
            (self.origin_lat, self.origin_lon, self.cell_size, self.nrows, self.ncols, self.nodata)
            == (other.origin_lat, other.origin_lon, other.cell_size, other.nrows, other.ncols, other.nodata)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class RidershipRecord:
    station_id: str
    date: dt.date
    boardings: int
    alightings: int


@dataclass(frozen=True)
class RidershipRecords:
    records: tuple[RidershipRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[RidershipRecord]:
        return iter(self.records)

    def dates_by_station(self) -> dict[str, list[dt.date]]:
        out: dict[str, list[dt.date]] = {}
        for r in self.records:
            out.setdefault(r.station_id, []).append(r.date)
        return out


RESPONSES = (
    "weekday_ridership",
    "weekday_boarding",
    "weekday_alighting",
    "weekend_ridership",
    "weekend_boarding",
    "weekend_alighting",
)


@dataclass(frozen=True)
class StationRidership:
    weekday_boarding: float
    weekday_alighting: float
    weekday_ridership: float
    weekend_boarding: float
    weekend_alighting: float
    weekend_ridership: float


@dataclass(frozen=True)
class RidershipSummary:
    """Average daily counts per station, keyed by station id."""

    by_station: Mapping[str, StationRidership] = field(default_factory=dict)

    def __getitem__(self, station_id: str) -> StationRidership:
        return self.by_station[station_id]

    def __contains__(self, station_id) -> bool:
        return station_id in self.by_station

    def __len__(self) -> int:
        return len(self.by_station)

    def response(self, name: str, station_ids: Iterable[str]) -> np.ndarray:
        """One dependent variable as a vector aligned to ``station_ids``."""
        if name not in RESPONSES:
            raise KeyError(f"unknown response {name!r}")
        out = []
        for sid in station_ids:
            if sid not in self.by_station:
                raise DataError(f"no ridership records for station {sid!r}")
            out.append(getattr(self.by_station[sid], name))
        return np.asarray(out, dtype=float)

    def system_totals(self) -> dict[str, float]:
        return {
            name: math.fsum(getattr(r, name) for r in self.by_station.values())
            for name in RESPONSES
        }


# ---------------------------------------------------------------------------
# CSV plumbing


def _open_rows(path, fields: tuple[str, ...]) -> Iterator[tuple[int, dict[str, str]]]:
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", path=path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise DataError("empty file (no header row)", path=path)
        header = [h.strip() for h in header]
        if sorted(header) != sorted(fields) or len(header) != len(set(header)):
            raise DataError(
                f"header {header} does not match expected columns {list(fields)}", path=path
            )
        reader.fieldnames = header
        for row in reader:
            if None in row or any(v is None for v in row.values()):
                raise DataError("wrong number of fields", path=path, row=reader.line_num)
            yield reader.line_num, {k: v.strip() for k, v in row.items()}


def _parse_float(raw: str, *, path, row, name) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"not a number: {raw!r}", path=path, row=row, field=name) from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value: {raw!r}", path=path, row=row, field=name)
    return value


def _parse_lat_lon(row: dict[str, str], *, path, line) -> tuple[float, float]:
    lat = _parse_float(row["lat"], path=path, row=line, name="lat")
    lon = _parse_float(row["lon"], path=path, row=line, name="lon")
    if not -90.0 <= lat <= 90.0:
        raise DataError(f"latitude {lat} outside [-90, 90]", path=path, row=line, field="lat")
    if not -180.0 <= lon <= 180.0:
        raise DataError(f"longitude {lon} outside [-180, 180]", path=path, row=line, field="lon")
    return lat, lon


def _parse_date(raw: str, *, path, row, name) -> dt.date:
    try:
        return dt.date.fromisoformat(raw)
    except ValueError:
        raise DataError(f"not an ISO-8601 date: {raw!r}", path=path, row=row, field=name) from None


def _parse_count(raw: str, *, path, row, name) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise DataError(f"not an integer count: {raw!r}", path=path, row=row, field=name) from None
    if value < 0:
        raise DataError(f"negative count {value}", path=path, row=row, field=name)
    return value


def _require_id(raw: str, *, path, row, name) -> str:
    if not raw:
        raise DataError("empty identifier", path=path, row=row, field=name)
    return raw


# ---------------------------------------------------------------------------
# loaders


def load_stations(path, reference_date: dt.date | None = None) -> StationTable:
    """Read ``stations.csv``.

    If ``reference_date`` is given, every station must have opened on or
    before it.
    """
    stations = []
    seen: set[str] = set()
    for line, row in _open_rows(path, STATION_FIELDS):
        sid = _require_id(row["station_id"], path=path, row=line, name="station_id")
        if sid in seen:
            raise DataError(f"duplicate station_id {sid!r}", path=path, row=line, field="station_id")
        seen.add(sid)
        lat, lon = _parse_lat_lon(row, path=path, line=line)
        opened = _parse_date(row["opened_date"], path=path, row=line, name="opened_date")
        if reference_date is not None and opened > reference_date:
            raise DataError(
                f"opened_date {opened} is after reference date {reference_date}",
                path=path, row=line, field="opened_date",
            )
        if row["is_hub"] not in ("0", "1"):
            raise DataError(f"is_hub must be 0 or 1, got {row['is_hub']!r}", path=path, row=line, field="is_hub")
        stations.append(Station(sid, row["name"], lat, lon, opened, row["is_hub"] == "1"))
    if not stations:
        raise DataError("no stations", path=path)
    return StationTable(tuple(stations))


def load_edges(path, stations: StationTable) -> EdgeList:
    """Read ``edges.csv``; segments are undirected, so (A,B) and (B,A) are duplicates."""
    known = set(stations.ids)
    edges = []
    seen: set[frozenset[str]] = set()
    for line, row in _open_rows(path, EDGE_FIELDS):
        a = _require_id(row["from_id"], path=path, row=line, name="from_id")
        b = _require_id(row["to_id"], path=path, row=line, name="to_id")
        for name, sid in (("from_id", a), ("to_id", b)):
            if sid not in known:
                raise DataError(f"unknown station {sid!r}", path=path, row=line, field=name)
        if a == b:
            raise DataError(f"self-loop on {a!r}", path=path, row=line)
        key = frozenset((a, b))
        if key in seen:
            raise DataError(f"duplicate segment {a!r}-{b!r}", path=path, row=line)
        seen.add(key)
        edges.append(Edge(a, b))
    return EdgeList(tuple(edges))


def load_pois(path) -> PoiTable:
    pois = []
    seen: set[str] = set()
    for line, row in _open_rows(path, POI_FIELDS):
        pid = _require_id(row["poi_id"], path=path, row=line, name="poi_id")
        if pid in seen:
            raise DataError(f"duplicate poi_id {pid!r}", path=path, row=line, field="poi_id")
        seen.add(pid)
        cat = row["category"]
        if cat not in POI_CATEGORIES:
            raise DataError(f"unknown category {cat!r}", path=path, row=line, field="category")
        lat, lon = _parse_lat_lon(row, path=path, line=line)
        pois.append(Poi(pid, cat, lat, lon))
    return PoiTable(tuple(pois))


def load_ridership(path, stations: StationTable | None = None) -> RidershipRecords:
    known = set(stations.ids) if stations is not None else None
    records = []
    seen: set[tuple[str, dt.date]] = set()
    for line, row in _open_rows(path, RIDERSHIP_FIELDS):
        sid = _require_id(row["station_id"], path=path, row=line, name="station_id")
        if known is not None and sid not in known:
            raise DataError(f"unknown station {sid!r}", path=path, row=line, field="station_id")
        day = _parse_date(row["date"], path=path, row=line, name="date")
        if (sid, day) in seen:
            raise DataError(f"duplicate record for ({sid}, {day})", path=path, row=line)
        seen.add((sid, day))
        b = _parse_count(row["boardings"], path=path, row=line, name="boardings")
        a = _parse_count(row["alightings"], path=path, row=line, name="alightings")
        records.append(RidershipRecord(sid, day, b, a))
    if not records:
        raise DataError("no ridership records", path=path)
    return RidershipRecords(tuple(records))


_ASC_KEYS = ("ncols", "nrows", "cellsize")


def load_population_grid(path) -> PopulationGrid:
    """Read an ESRI ASCII grid (``.asc``).

    Both the ``xllcorner``/``yllcorner`` and ``xllcenter``/``yllcenter``
    header forms are accepted; the grid origin is stored as the lower-left
    corner.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", path=path)
    tokens_by_line = [ln.split() for ln in path.read_text(encoding="utf-8").splitlines()]
    header: dict[str, str] = {}
    i = 0
    while i < len(tokens_by_line):
        toks = tokens_by_line[i]
        if not toks:
            i += 1
            continue
        if toks[0][0].isalpha():
            if len(toks) != 2:
                raise DataError(f"malformed header line {' '.join(toks)!r}", path=path, row=i + 1)
            header[toks[0].lower()] = toks[1]
            i += 1
        else:
            break
    for key in _ASC_KEYS:
        if key not in header:
            raise DataError(f"missing header key {key!r}", path=path)
    try:
        ncols = int(header["ncols"])
        nrows = int(header["nrows"])
        cell = float(header["cellsize"])
        nodata = float(header["nodata_value"]) if "nodata_value" in header else None
        if "xllcorner" in header and "yllcorner" in header:
            lon0 = float(header["xllcorner"])
            lat0 = float(header["yllcorner"])
        elif "xllcenter" in header and "yllcenter" in header:
            lon0 = float(header["xllcenter"]) - cell / 2.0
            lat0 = float(header["yllcenter"]) - cell / 2.0
        else:
            raise DataError("header needs xllcorner/yllcorner or xllcenter/yllcenter", path=path)
    except ValueError as exc:
        raise DataError(f"bad header value ({exc})", path=path) from None
    if nrows < 1 or ncols < 1:
        raise DataError(f"grid dimensions must be >= 1, got {nrows}x{ncols}", path=path)
    if not cell > 0:
        raise DataError(f"cellsize must be positive, got {cell}", path=path)

    flat = [t for toks in tokens_by_line[i:] for t in toks]
    if len(flat) != nrows * ncols:
        raise DataError(
            f"dimension mismatch: header says {nrows}x{ncols}={nrows * ncols} values, found {len(flat)}",
            path=path,
        )
    try:
        values = np.array([float(t) for t in flat], dtype=float).reshape(nrows, ncols)
    except ValueError as exc:
        raise DataError(f"bad cell value ({exc})", path=path) from None
    valid = values if nodata is None else values[values != nodata]
    if not np.all(np.isfinite(valid)) or np.any(valid < 0):
        raise DataError("cell values must be finite and non-negative (or the no-data sentinel)", path=path)
    return PopulationGrid(lat0, lon0, cell, nrows, ncols, values, nodata)


# ---------------------------------------------------------------------------
# writers (used for exports and round-trip tests)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_stations(table: StationTable, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATION_FIELDS)
        for s in table:
            w.writerow([s.station_id, s.name, _fmt(s.lat), _fmt(s.lon), s.opened_date.isoformat(), int(s.is_hub)])


def write_edges(edges: EdgeList, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_FIELDS)
        for e in edges:
            w.writerow([e.from_id, e.to_id])


def write_pois(pois: PoiTable, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POI_FIELDS)
        for p in pois:
            w.writerow([p.poi_id, p.category, _fmt(p.lat), _fmt(p.lon)])


def write_ridership(records: RidershipRecords, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RIDERSHIP_FIELDS)
        for r in records:
            w.writerow([r.station_id, r.date.isoformat(), r.boardings, r.alightings])


def write_population_grid(grid: PopulationGrid, path) -> None:
    lines = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {_fmt(grid.origin_lon)}",
        f"yllcorner {_fmt(grid.origin_lat)}",
        f"cellsize {_fmt(grid.cell_size)}",
    ]
    if grid.nodata is not None:
        lines.append(f"NODATA_value {_fmt(grid.nodata)}")
    for row in grid.values:
        lines.append(" ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# aggregation


def aggregate_ridership(
    records: RidershipRecords, weekday_set: Iterable[int] = DEFAULT_WEEKDAYS
) -> RidershipSummary:
    """Average daily boardings/alightings per station over weekday and weekend dates.

    ``weekday_set`` holds ``date.weekday()`` numbers (Monday=0) that count
    as weekdays; every other date counts as weekend.
    """
    weekday_set = frozenset(weekday_set)
    buckets: dict[str, dict[str, list[tuple[int, int]]]] = {}
    for r in records:
        kind = "weekday" if r.date.weekday() in weekday_set else "weekend"
        buckets.setdefault(r.station_id, {"weekday": [], "weekend": []})[kind].append(
            (r.boardings, r.alightings)
        )

    out: dict[str, StationRidership] = {}
    for sid in sorted(buckets):
        means = {}
        for kind in ("weekday", "weekend"):
            rows = buckets[sid][kind]
            if not rows:
                raise DataError(f"station {sid!r} has no {kind} records")
            n = len(rows)
            # fsum is correctly rounded, so the means do not depend on record order
            b = math.fsum(x for x, _ in rows) / n
            a = math.fsum(y for _, y in rows) / n
            means[f"{kind}_boarding"] = b
            means[f"{kind}_alighting"] = a
            means[f"{kind}_ridership"] = b + a
        out[sid] = StationRidership(**means)
    return RidershipSummary(out)
