"""Explanatory-variable matrix built from 500 m pedestrian catchments.

Catchment membership is boundary-inclusive (distance <= radius) for both
POIs and population-grid cell centres. Population is the plain sum of the
cells whose centre falls inside the buffer; no area weighting.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError
from .geo import haversine_m
from .ingest import POI_CATEGORIES, PoiTable, PopulationGrid, RidershipSummary, Station, StationTable
from .network import CentralityVector

log = logging.getLogger(__name__)

# POI category -> feature column
CATEGORY_COLUMNS = {
    "residence": "Residence",
    "hotel": "Hotel",
    "shopping": "Shopping",
    "school": "School",
    "office": "Office",
    "bank": "Bank",
    "bus_station": "Bus",
    "hospital": "Hospital",
    "university": "University",
}

FEATURE_COLUMNS = (
    "Residence",
    "Hotel",
    "Shopping",
    "School",
    "Office",
    "Bank",
    "Bus",
    "Hospital",
    "University",
    "Pop",
    "Days_open",
    "Dis_to_center",
    "Degree",
    "Betweenness",
    "Trans_hub",
)
COUNT_COLUMNS = FEATURE_COLUMNS[:9]

TRANSFORMS = {
    "identity": lambda x: x,
    "log1p": np.log1p,
}

DEFAULT_REFERENCE_DATE = dt.date(2015, 10, 15)


@dataclass(frozen=True)
class CatchmentSpec:
    radius_m: float = 500.0

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ValueError(f"radius_m must be positive, got {self.radius_m}")


@dataclass
class CatchmentDiagnostics:
    """Tally of raster cells and stations that needed special handling."""

    nodata_cells: int = 0
    outside_stations: list[str] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    station_ids: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray
    transforms: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column names")
        if self.values.shape != (len(self.station_ids), len(self.columns)):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.station_ids)} stations x {len(self.columns)} columns"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix has missing or non-finite cells")
        self.values.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def transform_of(self, name: str) -> str:
        return self.transforms.get(name, "identity")

    def select(self, names) -> np.ndarray:
        idx = [self.columns.index(n) for n in names]
        return self.values[:, idx]

    def with_column(self, name: str, values) -> "FeatureMatrix":
        values = np.asarray(values, dtype=float)
        data = np.array(self.values, copy=True)
        if name in self.columns:
            data[:, self.columns.index(name)] = values
            cols = self.columns
        else:
            data = np.column_stack([data, values])
            cols = self.columns + (name,)
        return FeatureMatrix(self.station_ids, cols, data, dict(self.transforms))

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.station_ids == other.station_ids
            and self.columns == other.columns
            and dict(self.transforms) == dict(other.transforms)
            and np.array_equal(self.values, other.values)
        )


def catchment_count(station: Station, pois: PoiTable, spec: CatchmentSpec = CatchmentSpec()) -> dict[str, int]:
    if len(pois) == 0:
        return dict.fromkeys(POI_CATEGORIES, 0)
    lat, lon, cat = pois.arrays
    inside = haversine_m(station.lat, station.lon, lat, lon) <= spec.radius_m
    tally = np.bincount(cat[inside], minlength=len(POI_CATEGORIES))
    return {c: int(k) for c, k in zip(POI_CATEGORIES, tally)}


def population_in_catchment(
    station: Station,
    grid: PopulationGrid,
    spec: CatchmentSpec = CatchmentSpec(),
    diagnostics: CatchmentDiagnostics | None = None,
) -> float:
    """Sum of grid cells whose centre lies within the catchment radius.

    A station outside the raster extent yields 0 and is logged (and recorded
    in ``diagnostics`` when given). No-data cells contribute 0.
    """
    if not grid.contains(station.lat, station.lon):
        log.warning("station %s lies outside the population grid; Pop set to 0", station.station_id)
        if diagnostics is not None:
            diagnostics.outside_stations.append(station.station_id)
        return 0.0
    clat, clon = grid.cell_centers()
    inside = haversine_m(station.lat, station.lon, clat, clon) <= spec.radius_m
    nodata = grid.nodata_mask
    if diagnostics is not None:
        diagnostics.nodata_cells += int(np.count_nonzero(inside & nodata))
    return math.fsum(grid.values[inside & ~nodata])


def days_since_opening(station: Station, reference_date: dt.date = DEFAULT_REFERENCE_DATE) -> int:
    if station.opened_date > reference_date:
        raise DataError(
            f"station {station.station_id!r} opened {station.opened_date}, after reference date {reference_date}"
        )
    return (reference_date - station.opened_date).days


def assemble_feature_matrix(
    stations: StationTable,
    pois: PoiTable,
    grid: PopulationGrid,
    degree: CentralityVector,
    betweenness: CentralityVector,
    dis_to_center: Mapping[str, float],
    spec: CatchmentSpec = CatchmentSpec(),
    reference_date: dt.date = DEFAULT_REFERENCE_DATE,
    hub_ids=None,
    diagnostics: CatchmentDiagnostics | None = None,
) -> FeatureMatrix:
    """One row per station (StationTable order), all fifteen columns.

    ``hub_ids`` defaults to the stations flagged ``is_hub`` in the table.
    """
    hubs = stations.hub_ids if hub_ids is None else frozenset(hub_ids)
    unknown = hubs - set(stations.ids)
    if unknown:
        raise DataError(f"hub ids not in station table: {sorted(unknown)}")
    rows = []
    for s in stations:
        counts = catchment_count(s, pois, spec)
        row = {CATEGORY_COLUMNS[c]: float(k) for c, k in counts.items()}
        row["Pop"] = population_in_catchment(s, grid, spec, diagnostics)
        row["Days_open"] = float(days_since_opening(s, reference_date))
        row["Dis_to_center"] = float(dis_to_center[s.station_id])
        row["Degree"] = float(degree[s.station_id])
        row["Betweenness"] = float(betweenness[s.station_id])
        row["Trans_hub"] = 1.0 if s.station_id in hubs else 0.0
        rows.append([row[c] for c in FEATURE_COLUMNS])
    values = np.array(rows, dtype=float).reshape(len(stations), len(FEATURE_COLUMNS))
    return FeatureMatrix(stations.ids, FEATURE_COLUMNS, values)


def transform(matrix: FeatureMatrix, config: Mapping[str, str]) -> FeatureMatrix:
    """Apply per-column transforms (``identity`` or ``log1p``) to a copy.

    Transforms are applied to the raw values; a column already tagged with a
    non-identity transform cannot be transformed again.
    """
    data = np.array(matrix.values, copy=True)
    tags = dict(matrix.transforms)
    for name, kind in config.items():
        if name not in matrix.columns:
            raise KeyError(f"unknown column {name!r}")
        if kind not in TRANSFORMS:
            raise ValueError(f"unknown transform {kind!r} for column {name!r}")
        if kind == "identity":
            continue
        if matrix.transform_of(name) != "identity":
            raise ValueError(f"column {name!r} is already transformed ({matrix.transform_of(name)})")
        j = matrix.columns.index(name)
        if np.any(data[:, j] < 0):
            raise ValueError(f"{kind} requires non-negative values; column {name!r} has negatives")
        data[:, j] = TRANSFORMS[kind](data[:, j])
        tags[name] = kind
    return FeatureMatrix(matrix.station_ids, matrix.columns, data, tags)


def column_summary(matrix: FeatureMatrix) -> list[tuple[str, float, float, float]]:
    """(column, min, mean, max) per column, the layout of a variables summary table."""
    out = []
    for j, name in enumerate(matrix.columns):
        col = matrix.values[:, j]
        mean = math.fsum(col) / len(col)
        # fsum mean can land a hair outside [min, max] only through rounding; clamp
        out.append((name, float(col.min()), float(min(max(mean, col.min()), col.max())), float(col.max())))
    return out


def scatterplot_matrix_data(
    matrix: FeatureMatrix,
    responses: RidershipSummary | None = None,
    response_names=(),
    columns=None,
) -> list[tuple[str, str, str, float, float]]:
    """Long-format rows ``(var_x, var_y, station_id, x, y)`` for every ordered variable pair.

    Variables are ``columns`` (default: every matrix column) followed by the
    requested response names.
    """
    names = list(matrix.columns if columns is None else columns)
    data = {n: matrix.column(n) for n in names}
    for r in response_names:
        if responses is None:
            raise ValueError("response names given without a RidershipSummary")
        data[r] = responses.response(r, matrix.station_ids)
        names.append(r)
    rows = []
    for vx in names:
        for vy in names:
            for i, sid in enumerate(matrix.station_ids):
                rows.append((vx, vy, sid, float(data[vx][i]), float(data[vy][i])))
    return rows


def write_features(matrix: FeatureMatrix, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["station_id", *matrix.columns])
        for sid, row in zip(matrix.station_ids, matrix.values):
            w.writerow([sid, *[repr(float(v)) for v in row]])


def write_summary(matrix: FeatureMatrix, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column", "min", "mean", "max"])
        for name, lo, mean, hi in column_summary(matrix):
            w.writerow([name, repr(lo), repr(float(mean)), repr(hi)])


def write_scatter_data(rows, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["var_x", "var_y", "station_id", "x", "y"])
        for vx, vy, sid, x, y in rows:
            w.writerow([vx, vy, sid, repr(x), repr(y)])
