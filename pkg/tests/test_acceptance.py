"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary (see ``conftest.py``) and by ``python tests/test_acceptance.py``.
"""

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import (  # noqa: E402
    MAIN_ROW,
    brute_force_betweenness,
    graph_from_edges,
    loo_cooks,
    naive_greedy,
    normal_equations,
    planted_support,
    random_connected_edges,
    random_design,
    taipei_main_fixture,
)
from metro_ridership import features as feat  # noqa: E402
from metro_ridership import network  # noqa: E402
from metro_ridership.diagnostics import flag_influential, influence_measures  # noqa: E402
from metro_ridership.geo import haversine_km  # noqa: E402
from metro_ridership.regress import DesignMatrix, fit_ols  # noqa: E402
from metro_ridership.selection import CvResult, backward_stepwise, cross_validated_r2  # noqa: E402
from metro_ridership.synthetic import make_city  # noqa: E402

RESULTS: list[str] = []


def record(number, title, ok, detail=""):
    line = f"AC-{number:02d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def rel_close(a, b, rel):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return bool(np.all(np.abs(a - b) <= rel * np.maximum(np.abs(a), np.abs(b))))


def test_ac01_ols_oracle():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    bad = 0
    for _ in range(200):
        k = int(rng.integers(1, 9))
        n = int(rng.integers(max(10, k + 3), 101))
        X, y = random_design(rng, n, k)
        fit = fit_ols(X, y)
        ref = normal_equations(X, y)
        pairs = [(fit.coefficients, ref["beta"]), (fit.std_errors, ref["se"]), (fit.r2, ref["r2"]), (fit.f_stat, ref["f"])]
        for got, want in pairs:
            err = np.max(np.abs(np.asarray(got) - want) / np.abs(want))
            worst = max(worst, float(err))
            bad += not rel_close(got, want, 1e-8)
    elapsed = time.perf_counter() - start
    record(1, "OLS matches normal equations on 200 instances", bad == 0 and elapsed < 5.0,
           f"max rel err {worst:.1e}, {elapsed:.2f} s")


def test_ac02_degree_anchor():
    stations, edges, *_ = make_city(108, seed=0)
    g = network.build_graph(stations, edges)
    deg = network.degree_centrality(g)
    terminal = next(v for v in g.nodes if len(g.neighbors(v)) == 1)
    transfer = next(v for v in g.nodes if len(g.neighbors(v)) == 4)
    lo, hi = min(deg.values.values()), max(deg.values.values())
    ok = (
        g.n == 108
        and deg[terminal] == 2 / 107 and deg[transfer] == 8 / 107
        and round(lo, 5) == 0.01869 and round(hi, 5) == 0.07477
        and round(deg[terminal], 6) == 0.018692 and round(deg[transfer], 6) == 0.074766
    )
    record(2, "degree centrality 2/107 and 8/107 on a 108-node graph", ok, f"min {lo:.6f}, max {hi:.6f}")


def test_ac03_betweenness_oracle():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 8))
        g = graph_from_edges(n, random_connected_edges(rng, n))
        oracle = brute_force_betweenness(g)
        b = network.betweenness_centrality(g)
        for v in g.nodes:
            worst = max(worst, abs(b[v] - float(oracle[v]) / ((n - 1) * (n - 2))))
    ends = []
    for n in range(3, 8):
        path = network.betweenness_centrality(graph_from_edges(n, [(i, i + 1) for i in range(n - 1)]))
        ends += [path["v0"], path[f"v{n - 1}"]]
    record(3, "betweenness matches brute force on 100 graphs, path ends 0",
           worst <= 1e-12 and all(e == 0.0 for e in ends), f"max abs err {worst:.1e}")


def test_ac04_degrees_of_freedom():
    rng = np.random.default_rng(4)
    dfs = [fit_ols(*random_design(rng, 108, k)).df_resid for k in (8, 5)]
    record(4, "residual DF 99 (k=8) and 102 (k=5) at n=108", dfs == [99, 102], f"got {dfs}")


def test_ac05_cooks_distance():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(10, 201))
        X, y = random_design(rng, n, int(rng.integers(1, 7)))
        formula = influence_measures(fit_ols(X, y)).column("cooks_distance")
        loo = loo_cooks(X, y)
        worst = max(worst, float(np.max(np.abs(formula - loo) / np.abs(loo))))
    X, y, ids = taipei_main_fixture()
    rep = flag_influential(influence_measures(fit_ols(X, y), ids))
    over = [r.station_id for r in rep if r.cooks_distance > 4 / 108]
    record(5, "Cook's distance equals leave-one-out; Taipei Main is the unique D > 4/n",
           worst <= 1e-9 and over == [ids[MAIN_ROW]], f"max rel err {worst:.1e}, flagged {over}")


def test_ac06_stepwise_oracle():
    rng = np.random.default_rng(6)
    mismatches = 0
    removals = 0
    for _ in range(100):
        k = int(rng.integers(1, 9))
        n = int(rng.integers(k + 12, 120))
        Z = rng.normal(size=(n, k))
        y = Z @ ((rng.random(k) < 0.5) * rng.normal(size=k)) + rng.normal(size=n)
        X = DesignMatrix.build(Z, [f"x{j + 1}" for j in range(k)])
        trace = backward_stepwise(X, y)
        oracle, final = naive_greedy(X, y)
        same = [s.removed for s in trace.steps] == [r for r, _ in oracle] and list(trace.selected) == final
        for step, (_, cands) in zip(trace.steps, oracle):
            same &= list(step.candidates) == list(cands)
            same &= all(math.isclose(step.candidates[c], cands[c], rel_tol=1e-12, abs_tol=1e-9) for c in cands)
        mismatches += not same
        removals += len(trace.removed)
    X, y = planted_support()
    planted = backward_stepwise(X, y).selected
    record(6, "stepwise trace equals naive greedy on 100 instances; planted support recovered",
           mismatches == 0 and planted == ("x1", "x2"),
           f"{mismatches} mismatches, {removals} removals checked, planted -> {sorted(planted)}")


def test_ac07_cv_identity():
    rng = np.random.default_rng(7)
    exact = True
    for _ in range(30):
        X, y = random_design(rng, int(rng.integers(20, 80)), int(rng.integers(1, 5)))
        res = cross_validated_r2(X, y, k=10, seed=int(rng.integers(1 << 31)))
        exact &= res.change == res.r2 - res.cv_r2
    reported = [CvResult(10, 0, np.zeros(1), 0.7179995, 0.7829), CvResult(10, 0, np.zeros(1), 0.7620926, 0.8146)]
    exact &= [round(p.change, 7) for p in reported] == [0.0649005, 0.0525074]
    Z = rng.normal(size=(40, 3))
    lin = cross_validated_r2(DesignMatrix.build(Z, ["a", "b", "c"]), 2 + Z @ [1.0, -3.0, 0.5], k=10, seed=1)
    ok = exact and abs(lin.cv_r2 - 1) <= 1e-12 and abs(lin.change) <= 1e-12
    record(7, "change = R2 - cv_r2 exactly; exact-linear data gives cv_r2 = 1",
           ok, f"linear cv_r2 - 1 = {lin.cv_r2 - 1:.1e}")


def test_ac08_hub_monotonicity():
    rng = np.random.default_rng(8)
    worst = math.inf
    checks = 0
    for _ in range(50):
        n = int(rng.integers(15, 120))
        k = int(rng.integers(1, 7))
        X, y = random_design(rng, n, k)
        hub = np.zeros(n)
        hub[rng.choice(n, int(rng.integers(1, 4)), replace=False)] = 1.0
        y = y + hub * rng.normal(scale=50)
        for r in range(k + 1):
            subset = [nm for nm in X.predictors if rng.random() < 0.6][:r]
            base = fit_ols(X.subset(subset), y)
            Xh = DesignMatrix.build(np.column_stack([X.subset(subset).values[:, 1:], hub]), [*subset, "Trans_hub"])
            worst = min(worst, fit_ols(Xh, y).r2 - base.r2)
            checks += 1
    record(8, "adding Trans_hub never lowers R2 (50 instances)", worst >= -1e-12,
           f"{checks} nested fits, min gain {worst:.1e}")


def test_ac09_pipeline(tmp_path):
    import test_pipeline as tp
    from metro_ridership.config import load_config
    from metro_ridership.pipeline import run_pipeline
    from metro_ridership.synthetic import write_city

    tp.run_toy(tmp_path / "a")
    tp.run_toy(tmp_path / "b")
    a, b = tp.bundle_bytes(tmp_path / "a"), tp.bundle_bytes(tmp_path / "b")
    identical = a == b and len(a) > 30
    golden = tp.bundle_bytes(tp.GOLDEN)
    golden_ok = sorted(a) == sorted(golden)
    for name in golden:
        if name.endswith(".json") and golden_ok:
            try:
                tp.compare_json(json.loads(a[name]), json.loads(golden[name]), name)
            except AssertionError:
                golden_ok = False
        elif name.endswith(".csv") and golden_ok:
            g, w = tp.read_csv(tmp_path / "a" / name), tp.read_csv(tp.GOLDEN / name)
            golden_ok = len(g) == len(w) and all(
                len(rg) == len(rw) and all(tp.same_value(x, y) for x, y in zip(rg, rw)) for rg, rw in zip(g, w)
            )
    cfg = load_config(write_city(tmp_path / "city", n_stations=108, seed=0))
    cfg.out_dir = tmp_path / "city_out"
    start = time.perf_counter()
    bundle = run_pipeline(cfg)
    elapsed = time.perf_counter() - start
    ns = {rep["diagnostics"]["n"] for rep in bundle.models.values()}
    record(9, "toy bundle byte-identical across runs and equal to golden; 108-station run < 1 s",
           identical and golden_ok and elapsed < 1.0 and ns == {108},
           f"identical={identical}, golden={golden_ok}, 108-station run {elapsed:.3f} s")


def test_ac10_invariant_suite():
    rng = np.random.default_rng(10)
    cases = failures = 0

    for _ in range(300):
        n = int(rng.integers(10, 80))
        k = int(rng.integers(1, 7))
        X, y = random_design(rng, n, k)
        fit = fit_ols(X, y)
        tol = 1e-8 * np.linalg.norm(y) * np.linalg.norm(X.values, axis=0)
        ok = np.all(np.abs(X.values.T @ fit.residuals) <= tol)
        ok &= abs(fit.hat.sum() - (k + 1)) <= 1e-8
        cases += 1
        failures += not ok

    for _ in range(200):
        X, y = random_design(rng, int(rng.integers(12, 60)), 3)
        c = float(10 ** rng.uniform(-3, 3))
        vals = np.array(X.values)
        j = int(rng.integers(1, 4))
        vals[:, j] *= c
        a, b = fit_ols(X, y), fit_ols(DesignMatrix(vals, X.names), y)
        da = influence_measures(a).column("cooks_distance")
        db = influence_measures(b).column("cooks_distance")
        scale = np.abs(y).max()
        ok = np.allclose(a.fitted, b.fitted, rtol=1e-10, atol=1e-10 * scale)
        ok &= math.isclose(a.r2, b.r2, rel_tol=1e-10) and math.isclose(a.f_stat, b.f_stat, rel_tol=1e-10)
        ok &= np.allclose(da, db, rtol=1e-10, atol=1e-14)
        cases += 1
        failures += not ok

    stations, _, pois, *_ = make_city(60, seed=10)
    for s in stations:
        for r_small, r_big in ((300, 500), (500, 600), (600, 1000)):
            small = feat.catchment_count(s, pois, feat.CatchmentSpec(r_small))
            big = feat.catchment_count(s, pois, feat.CatchmentSpec(r_big))
            cases += 1
            failures += not all(big[c] >= small[c] for c in small)

    lat = rng.uniform(-89, 89, size=(400, 3))
    lon = rng.uniform(-180, 180, size=(400, 3))
    for (a1, a2, a3), (o1, o2, o3) in zip(lat, lon):
        ab = haversine_km(a1, o1, a2, o2)
        ok = abs(ab - haversine_km(a2, o2, a1, o1)) <= 1e-9
        ok &= ab <= haversine_km(a1, o1, a3, o3) + haversine_km(a3, o3, a2, o2) + 1e-9
        cases += 1
        failures += not ok

    record(10, "invariant suite (orthogonality, sum h, scaling, catchment, haversine)",
           failures == 0 and cases >= 1000, f"{cases} cases, {failures} failures")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
