"""Model report serialisation: JSON document and fixed-width text table."""

from __future__ import annotations

import json
import math
from pathlib import Path

from .regress import SIGNIF_LEGEND, OlsFit
from .selection import CvResult


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON.

    Non-finite floats become the strings ``"Infinity"``, ``"-Infinity"`` and
    ``"NaN"`` so the output stays strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return jsonable(obj.tolist())
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dump_json(obj, path) -> None:
    # float repr is the shortest string that round-trips, so values are lossless
    text = json.dumps(jsonable(obj), indent=2, sort_keys=False, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def model_report(fit: OlsFit, cv: CvResult | None = None, *, response: str = "", extra=None) -> dict:
    coefs = [
        {
            "variable": name,
            "estimate": float(b),
            "std_error": float(se),
            "t_value": float(t),
            "p_value": float(p),
            "signif": code,
        }
        for name, b, se, t, p, code in zip(
            fit.names, fit.coefficients, fit.std_errors, fit.t_values, fit.p_values, fit.signif
        )
    ]
    diag = {
        "residual_standard_error": fit.sigma,
        "n": fit.n,
        "r_squared": fit.r2,
        "df": fit.df_resid,
        "adj_r_squared": fit.adj_r2,
        "f_statistic": fit.f_stat,
        "f_df": [fit.k, fit.df_resid],
        "f_p_value": fit.f_pvalue,
        "aic": fit.aic_profile if fit.rss > 0 else math.nan,
        "aic_full": fit.aic_full if fit.rss > 0 else math.nan,
    }
    if cv is not None:
        diag["cv_folds"] = cv.k
        diag["cv_r_squared"] = cv.cv_r2
        diag["change"] = cv.change
    out = {"response": response, "coefficients": coefs, "diagnostics": diag}
    if extra:
        out.update(extra)
    return out


def fmt_sci(x: float) -> str:
    """Four significant digits in scientific notation, e.g. ``1.333e+03``."""
    if not math.isfinite(x):
        return str(x)
    return f"{x:.3e}"


def fmt_fixed(x: float) -> str:
    if not math.isfinite(x):
        return str(x)
    return f"{x:.4f}"


def fmt_p(p: float, floor: float = 2e-16) -> str:
    if not math.isfinite(p):
        return str(p)
    if p < floor:
        return f"< {floor:g}"
    return f"{p:.4g}"


def render_text(report: dict, title: str = "") -> str:
    rows = report["coefficients"]
    d = report["diagnostics"]
    header = ("Explanatory variables", "Estimate", "Standard error", "t(Est/SE)", "Pr(>|t|)", "")
    body = [
        (r["variable"], fmt_sci(r["estimate"]), fmt_sci(r["std_error"]), fmt_fixed(r["t_value"]),
         fmt_p(r["p_value"]), r["signif"])
        for r in rows
    ]
    widths = [max(len(str(line[i])) for line in [header, *body]) for i in range(len(header))]

    def line(cells):
        first = str(cells[0]).ljust(widths[0])
        rest = [str(c).rjust(w) for c, w in zip(cells[1:-1], widths[1:-1])]
        return "  ".join([first, *rest, str(cells[-1])]).rstrip()

    out = []
    if title:
        out += [title, "=" * len(title)]
    out.append(line(header))
    out += [line(b) for b in body]
    out.append(SIGNIF_LEGEND)
    out.append("")
    pairs = [
        ("Residual standard error", f"{d['residual_standard_error']:.4g}", "n", str(d["n"])),
        ("R-square", fmt_fixed(d["r_squared"]), "DF", str(d["df"])),
        ("Adjusted R-square", fmt_fixed(d["adj_r_squared"]), "F-statistic", f"{d['f_statistic']:.4g}"),
    ]
    if "cv_r_squared" in d:
        pairs.append((f"{d['cv_folds']} Fold Cross-Validated R-square", f"{d['cv_r_squared']:.7f}",
                      "P-value", fmt_p(d["f_p_value"], 2.2e-16)))
        pairs.append(("Change", f"{d['change']:.7f}", "AIC", f"{d['aic']:.3f}"))
    else:
        pairs.append(("P-value", fmt_p(d["f_p_value"], 2.2e-16), "AIC", f"{d['aic']:.3f}"))
    lw = max(len(p[0]) for p in pairs)
    vw = max(len(p[1]) for p in pairs)
    rw = max(len(p[2]) for p in pairs)
    out.append("Diagnostic")
    for a, b, c, e in pairs:
        out.append(f"{a.ljust(lw)}  {b.rjust(vw)}    {c.ljust(rw)}  {e}")
    return "\n".join(out) + "\n"
