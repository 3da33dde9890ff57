"""Ordinary least squares with the usual inferential output.

The solve goes through a column-pivoted QR factorisation of the design
matrix; the normal equations are never formed. Tail probabilities come from
``scipy.special.stdtr`` and ``fdtrc`` (Cephes routines built on the
regularised incomplete beta function).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy import special

from .errors import NumericalError, RankDeficientError

INTERCEPT = "Intercept"

# |R_jj| below this fraction of the largest |R_jj| marks a dependent column
RANK_TOL = 1e-10

SIGNIF_LEGEND = "Signif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1"


def significance_code(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    if p < 0.1:
        return "."
    return " "


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Design matrix whose first column is the intercept."""

    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise ValueError(f"shape {self.values.shape} does not match {len(self.names)} names")
        if not self.names or self.names[0] != INTERCEPT:
            raise ValueError("first column must be the intercept")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate column names")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("design matrix has non-finite entries")
        if not np.all(self.values[:, 0] == 1.0):
            raise ValueError("intercept column must be constant 1")
        self.values.setflags(write=False)

    @classmethod
    def build(cls, predictors, names: Sequence[str]) -> "DesignMatrix":
        """Prepend an intercept column to an ``n x k`` predictor array."""
        predictors = np.asarray(predictors, dtype=float)
        if predictors.ndim == 1:
            predictors = predictors[:, None]
        n = predictors.shape[0]
        return cls(np.column_stack([np.ones(n), predictors]), (INTERCEPT, *names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        """Number of predictors, excluding the intercept."""
        return self.values.shape[1] - 1

    @property
    def predictors(self) -> tuple[str, ...]:
        return self.names[1:]

    def subset(self, names: Sequence[str]) -> "DesignMatrix":
        idx = [0] + [self.names.index(nm) for nm in names]
        return DesignMatrix(self.values[:, idx], (INTERCEPT, *names))

    def drop(self, name: str) -> "DesignMatrix":
        if name == INTERCEPT:
            raise ValueError("the intercept cannot be dropped")
        return self.subset([nm for nm in self.predictors if nm != name])

    def rows(self, index) -> "DesignMatrix":
        return DesignMatrix(self.values[index], self.names)


@dataclass(frozen=True, eq=False)
class OlsFit:
    names: tuple[str, ...]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    hat: np.ndarray
    rss: float
    tss: float
    sigma: float
    n: int
    k: int
    r2: float
    adj_r2: float
    f_stat: float
    f_pvalue: float

    @property
    def df_resid(self) -> int:
        return self.n - self.k - 1

    @property
    def signif(self) -> list[str]:
        return [significance_code(p) for p in self.p_values]

    @property
    def aic_profile(self) -> float:
        return aic(self, "profile")

    @property
    def aic_full(self) -> float:
        return aic(self, "full")

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])


def _qr_solve(X: DesignMatrix, y: np.ndarray):
    """Least-squares core shared by :func:`fit_ols` and :func:`residual_ss`."""
    n, p = X.values.shape
    if y.shape != (n,):
        raise ValueError(f"response has shape {y.shape}, expected ({n},)")
    if not np.all(np.isfinite(y)):
        raise ValueError("response has non-finite entries")
    if n <= p:
        raise NumericalError(f"need more rows than parameters: n={n}, parameters={p}")

    Q, R, perm = scipy.linalg.qr(X.values, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag[0] > 0 else 0
    if rank < p:
        dependent = [X.names[j] for j in perm[rank:]]
        raise RankDeficientError(
            f"design matrix is rank deficient; dependent columns: {', '.join(dependent)}", dependent
        )
    beta = np.empty(p)
    beta[perm] = scipy.linalg.solve_triangular(R, Q.T @ y)
    resid = y - X.values @ beta
    return Q, R, perm, beta, resid


def residual_ss(X: DesignMatrix, y) -> float:
    """RSS of the least-squares fit, without the inferential extras."""
    *_, resid = _qr_solve(X, np.asarray(y, dtype=float))
    return float(resid @ resid)


def fit_ols(X: DesignMatrix, y) -> OlsFit:
    y = np.asarray(y, dtype=float)
    Q, R, perm, beta, resid = _qr_solve(X, y)
    n, p = X.values.shape
    k = p - 1
    r_inv = scipy.linalg.solve_triangular(R, np.eye(p))
    cov_p = r_inv @ r_inv.T
    cov = np.empty((p, p))
    cov[np.ix_(perm, perm)] = cov_p

    fitted = y - resid
    rss = float(resid @ resid)
    ybar = math.fsum(y) / n
    tss = float(np.sum((y - ybar) ** 2))
    df = n - p
    s2 = rss / df
    sigma = math.sqrt(s2)
    se = np.sqrt(s2 * np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    pvals = 2.0 * special.stdtr(df, -np.abs(t))

    r2 = 1.0 - rss / tss if tss > 0 else math.nan
    adj = 1.0 - (1.0 - r2) * (n - 1) / df
    if k > 0 and rss > 0:
        f = ((tss - rss) / k) / s2
        f_p = float(special.fdtrc(k, df, f))
    elif k > 0:
        f, f_p = math.inf, 0.0
    else:
        f, f_p = math.nan, math.nan

    return OlsFit(
        names=X.names,
        coefficients=beta,
        std_errors=se,
        t_values=t,
        p_values=pvals,
        fitted=fitted,
        residuals=resid,
        hat=np.sum(Q * Q, axis=1),
        rss=rss,
        tss=tss,
        sigma=sigma,
        n=n,
        k=k,
        r2=r2,
        adj_r2=adj,
        f_stat=float(f),
        f_pvalue=f_p,
    )


def predict(fit: OlsFit, X_new: DesignMatrix) -> np.ndarray:
    if tuple(X_new.names) != tuple(fit.names):
        raise ValueError(f"columns {list(X_new.names)} do not match fitted columns {list(fit.names)}")
    return X_new.values @ fit.coefficients


def aic(fit: OlsFit, variant: str = "profile") -> float:
    """Akaike information criterion of a Gaussian linear model.

    ``profile``: ``n ln(RSS/n) + 2(k+1)``, the form used for stepwise
    comparisons. ``full``: the complete Gaussian log-likelihood form
    ``n ln(2 pi RSS/n) + n + 2(k+2)``, which counts the error variance as a
    parameter. At fixed n the two differ by ``n ln(2 pi) + n + 2``.
    """
    return aic_from_rss(fit.rss, fit.n, fit.k, variant)


def aic_from_rss(rss: float, n: int, k: int, variant: str = "profile") -> float:
    if rss <= 0:
        raise NumericalError("AIC undefined for a perfect fit (RSS = 0)")
    if variant == "profile":
        return n * math.log(rss / n) + 2 * (k + 1)
    if variant == "full":
        return n * math.log(2 * math.pi * rss / n) + n + 2 * (k + 2)
    raise ValueError(f"unknown AIC variant {variant!r}")
