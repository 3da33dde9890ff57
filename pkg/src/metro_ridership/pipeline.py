"""End-to-end run: inputs -> features -> six models -> report bundle.

Per dependent variable the steps are

1. backward stepwise over the candidate predictors (no hub dummy);
2. influence measures on that model, flags listed as hub suggestions;
3. backward stepwise again with ``Trans_hub`` offered as a candidate;
4. k-fold cross-validated R² of the final selected model.

Output layout::

    out/features.csv summary.csv centralities.csv scatter_data.csv responses.csv
    out/model_<response>/report.json report.txt selection_trace.json cv.json influence.csv
    out/manifest.json
"""

from __future__ import annotations

import contextlib
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import features as feat
from . import ingest, network
from .config import PipelineConfig, validate_config
from .diagnostics import HUB_COLUMN, Thresholds, add_hub_dummy, flag_influential, influence_measures, write_influence_csv
from .errors import ConfigError, RidershipError
from .regress import DesignMatrix
from .report import dump_json, model_report, render_text
from .selection import backward_stepwise, cross_validated_r2

log = logging.getLogger(__name__)

BASE_CANDIDATES = tuple(c for c in feat.FEATURE_COLUMNS if c != HUB_COLUMN)


class StageError(RidershipError):
    """An error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)
        super().__init__(f"{stage}: {cause}")

    def to_dict(self) -> dict:
        return {"stage": self.stage, "error": str(self.cause), "type": type(self.cause).__name__}


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (RidershipError, ValueError, KeyError) as exc:
        raise StageError(name, exc) from exc


@dataclass
class Inputs:
    stations: ingest.StationTable
    edges: ingest.EdgeList
    pois: ingest.PoiTable
    grid: ingest.PopulationGrid
    ridership: ingest.RidershipSummary


@dataclass
class SharedResults:
    matrix: feat.FeatureMatrix
    degree: network.CentralityVector
    betweenness: network.CentralityVector
    diagnostics: feat.CatchmentDiagnostics
    responses: ingest.RidershipSummary


@dataclass
class Bundle:
    out_dir: Path
    files: list[str] = field(default_factory=list)
    models: dict[str, dict] = field(default_factory=dict)

    def track(self, path: Path) -> Path:
        self.files.append(path.relative_to(self.out_dir).as_posix())
        return path


def load_inputs(cfg: PipelineConfig) -> Inputs:
    with stage("ingest/stations"):
        stations = ingest.load_stations(cfg.stations, cfg.reference_date)
    with stage("ingest/edges"):
        edges = ingest.load_edges(cfg.edges, stations)
    with stage("ingest/pois"):
        pois = ingest.load_pois(cfg.pois)
    with stage("ingest/population"):
        grid = ingest.load_population_grid(cfg.population)
    with stage("ingest/ridership"):
        records = ingest.load_ridership(cfg.ridership, stations)
        summary = ingest.aggregate_ridership(records, cfg.weekdays)
        missing = [s for s in stations.ids if s not in summary]
        if missing:
            raise ingest.DataError(f"stations without ridership records: {missing}")
    return Inputs(stations, edges, pois, grid, summary)


def build_features(cfg: PipelineConfig, inputs: Inputs) -> SharedResults:
    with stage("network"):
        graph = network.build_graph(inputs.stations, inputs.edges)
        degree = network.degree_centrality(graph)
        betweenness = network.betweenness_centrality(graph)
        dist = network.distance_to_center(inputs.stations, cfg.center)
    with stage("features"):
        diag = feat.CatchmentDiagnostics()
        matrix = feat.assemble_feature_matrix(
            inputs.stations, inputs.pois, inputs.grid, degree, betweenness, dist,
            feat.CatchmentSpec(cfg.radius_m), cfg.reference_date, diagnostics=diag,
        )
        if cfg.hub_ids is not None:
            matrix = add_hub_dummy(matrix, cfg.hub_ids)
        matrix = feat.transform(matrix, cfg.transforms)
    return SharedResults(matrix, degree, betweenness, diag, inputs.ridership)


def write_shared(shared: SharedResults, bundle: Bundle) -> None:
    out = bundle.out_dir
    m = shared.matrix
    with stage("export/shared"):
        feat.write_features(m, bundle.track(out / "features.csv"))
        feat.write_summary(m, bundle.track(out / "summary.csv"))
        network.write_centralities(bundle.track(out / "centralities.csv"), m.station_ids, shared.degree, shared.betweenness)
        rows = feat.scatterplot_matrix_data(m, shared.responses, ingest.RESPONSES)
        feat.write_scatter_data(rows, bundle.track(out / "scatter_data.csv"))
        with bundle.track(out / "responses.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["station_id", *ingest.RESPONSES])
            cols = [shared.responses.response(r, m.station_ids) for r in ingest.RESPONSES]
            for i, sid in enumerate(m.station_ids):
                w.writerow([sid, *[repr(float(c[i])) for c in cols]])


def _usable(matrix: feat.FeatureMatrix, names) -> tuple[list[str], list[str]]:
    keep, constant = [], []
    for c in names:
        col = matrix.column(c)
        (constant if np.all(col == col[0]) else keep).append(c)
    return keep, constant


def run_model(cfg: PipelineConfig, shared: SharedResults, response: str, number: int, bundle: Bundle) -> dict:
    m = shared.matrix
    ids = m.station_ids
    y = shared.responses.response(response, ids)
    candidates, constant = _usable(m, cfg.candidates or BASE_CANDIDATES)
    has_hub = bool(_usable(m, [HUB_COLUMN])[0])

    with stage(f"model/{response}/stepwise"):
        X0 = DesignMatrix.build(m.select(candidates), candidates)
        pre = backward_stepwise(X0, y)
    with stage(f"model/{response}/influence"):
        thresholds = Thresholds(cfg.cooks_factor, cfg.studentized, cfg.leverage_factor)
        influence = flag_influential(influence_measures(pre.fit, ids), thresholds)
    with stage(f"model/{response}/hub_refit"):
        if has_hub:
            names = [*candidates, HUB_COLUMN]
            final = backward_stepwise(DesignMatrix.build(m.select(names), names), y)
        else:
            final = pre
    with stage(f"model/{response}/cv"):
        Xf = DesignMatrix.build(m.select(final.selected), final.selected)
        cv = cross_validated_r2(Xf, y, cfg.cv_folds, cfg.cv_seed, drop_aliased=True)

    flagged = [r for r in influence.rows if r.flagged]
    extra = {
        "model": number,
        "excluded_constant": constant,
        "hub_dummy": {
            "included_as_candidate": has_hub,
            "hub_ids": [s for s, v in zip(ids, m.column(HUB_COLUMN)) if v == 1.0],
        },
        "pre_hub_model": {
            "selected": list(pre.selected),
            "r_squared": pre.fit.r2,
            "adj_r_squared": pre.fit.adj_r2,
            "aic": pre.fit.aic_profile,
        },
        "influence_flags": [
            {"station_id": r.station_id, "reasons": list(r.reasons), "cooks_distance": r.cooks_distance}
            for r in flagged
        ],
        "suggested_hubs": [r.station_id for r in flagged if "cooks_distance" in r.reasons],
    }
    report = model_report(final.fit, cv, response=response, extra=extra)

    with stage(f"model/{response}/export"):
        d = bundle.out_dir / f"model_{response}"
        d.mkdir(parents=True, exist_ok=True)
        dump_json(report, bundle.track(d / "report.json"))
        bundle.track(d / "report.txt").write_text(
            render_text(report, f"Model {number}: {response}"), encoding="utf-8"
        )
        dump_json({"pre_hub": pre.to_dict(), "final": final.to_dict()}, bundle.track(d / "selection_trace.json"))
        dump_json(cv.to_dict(), bundle.track(d / "cv.json"))
        write_influence_csv(influence, bundle.track(d / "influence.csv"))
    return report


def _check(cfg: PipelineConfig) -> None:
    errors = validate_config(cfg)
    if errors:
        raise StageError("config", ConfigError("; ".join(errors)))


def run_features(cfg: PipelineConfig) -> Bundle:
    """Load inputs and write only the shared exports."""
    _check(cfg)
    bundle = Bundle(Path(cfg.out_dir))
    bundle.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        shared = build_features(cfg, load_inputs(cfg))
        write_shared(shared, bundle)
    except StageError as exc:
        _write_manifest(bundle, exc)
        raise
    _write_manifest(bundle)
    return bundle


def run_pipeline(cfg: PipelineConfig) -> Bundle:
    _check(cfg)
    bundle = Bundle(Path(cfg.out_dir))
    bundle.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        shared = build_features(cfg, load_inputs(cfg))
        write_shared(shared, bundle)
        for number, response in enumerate(ingest.RESPONSES, start=1):
            bundle.models[response] = run_model(cfg, shared, response, number, bundle)
    except StageError as exc:
        _write_manifest(bundle, exc)
        raise
    _write_manifest(bundle)
    return bundle


def _write_manifest(bundle: Bundle, error: StageError | None = None) -> None:
    manifest = {
        "status": "ok" if error is None else "error",
        "files": list(bundle.files),
        "models": {
            r: {
                "selected": [c["variable"] for c in rep["coefficients"][1:]],
                "r_squared": rep["diagnostics"]["r_squared"],
                "cv_r_squared": rep["diagnostics"]["cv_r_squared"],
            }
            for r, rep in bundle.models.items()
        },
    }
    if error is not None:
        manifest["error"] = error.to_dict()
    dump_json(manifest, bundle.out_dir / "manifest.json")
