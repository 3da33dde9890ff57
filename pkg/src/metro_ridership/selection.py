"""Backward stepwise elimination by AIC, and k-fold cross-validated R²."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, RankDeficientError
from .regress import DesignMatrix, OlsFit, aic, aic_from_rss, fit_ols, predict, residual_ss

DEFAULT_SEED = 20151012


@dataclass(frozen=True)
class Step:
    removed: str | None
    aic_before: float
    candidates: dict[str, float]
    aic_after: float

    @property
    def is_stop(self) -> bool:
        return self.removed is None

    def to_dict(self) -> dict:
        return {
            "removed": self.removed if self.removed is not None else "stop",
            "aic_before": self.aic_before,
            "candidates": [{"variable": v, "aic": a} for v, a in self.candidates.items()],
            "aic_after": self.aic_after,
        }


@dataclass(frozen=True, eq=False)
class SelectionTrace:
    initial: tuple[str, ...]
    steps: tuple[Step, ...]
    selected: tuple[str, ...]
    fit: OlsFit

    @property
    def removed(self) -> tuple[str, ...]:
        return tuple(s.removed for s in self.steps if s.removed is not None)

    def to_dict(self) -> dict:
        return {
            "criterion": "profile AIC",
            "initial": list(self.initial),
            "steps": [s.to_dict() for s in self.steps],
            "selected": list(self.selected),
        }


def backward_stepwise(X: DesignMatrix, y) -> SelectionTrace:
    """Greedy backward elimination starting from every column of ``X``.

    Each step fits every model with one predictor removed. The removal with
    the lowest AIC is taken if it is strictly below the current AIC; ties go
    to the earliest column. The intercept is never a candidate.
    """
    current = fit_ols(X, y)
    current_aic = aic(current)
    names = list(X.predictors)
    steps = []
    while True:
        candidates = {}
        for nm in names:
            rss = residual_ss(X.subset([c for c in names if c != nm]), y)
            candidates[nm] = aic_from_rss(rss, X.n, len(names) - 1)
        best = None
        for nm, a in candidates.items():
            if best is None or a < candidates[best]:
                best = nm
        if best is None or not candidates[best] < current_aic:
            steps.append(Step(None, current_aic, candidates, current_aic))
            break
        names.remove(best)
        current = fit_ols(X.subset(names), y)
        new_aic = aic(current)
        steps.append(Step(best, current_aic, candidates, new_aic))
        current_aic = new_aic
    return SelectionTrace(X.predictors, tuple(steps), tuple(names), current)


@dataclass(frozen=True, eq=False)
class CvResult:
    k: int
    seed: int | None
    folds: np.ndarray
    cv_r2: float
    r2: float
    change: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "change", self.r2 - self.cv_r2)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": [int(f) for f in self.folds],
            "cv_r2": self.cv_r2,
            "r2": self.r2,
            "change": self.change,
        }


def fold_assignment(n: int, k: int, seed: int) -> np.ndarray:
    """Fold label per row.

    Row indices are shuffled with numpy's PCG64 generator seeded by
    ``seed`` (``Generator.permutation``, a Fisher-Yates shuffle); the
    shuffled order is cut into ``k`` contiguous blocks whose sizes differ by
    at most one, larger blocks first.
    """
    if k < 2 or n < k:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=int)
    for f, block in enumerate(np.array_split(order, k)):
        folds[block] = f
    return folds


def cv_r2_from_folds(X: DesignMatrix, y, folds, drop_aliased: bool = False) -> float:
    """Out-of-fold R² for a given fold labelling.

    A rank-deficient training fold is an error unless ``drop_aliased`` is
    set, in which case the dependent columns are left out of that fold's fit
    (their coefficients count as zero when predicting the held-out rows).
    This is what happens to a dummy whose only 1 sits in the held-out fold.
    """
    y = np.asarray(y, dtype=float)
    folds = np.asarray(folds)
    pred = np.empty_like(y)
    for f in np.unique(folds):
        test = folds == f
        train_X = X.rows(~test)
        try:
            fit = fit_ols(train_X, y[~test])
        except RankDeficientError as exc:
            if not drop_aliased:
                raise RankDeficientError(f"fold {int(f)}: training set not fittable ({exc})", exc.columns) from exc
            keep = [c for c in X.predictors if c not in exc.columns]
            fit = fit_ols(train_X.subset(keep), y[~test])
            pred[test] = predict(fit, X.rows(test).subset(keep))
            continue
        except NumericalError as exc:
            raise NumericalError(f"fold {int(f)}: training set not fittable ({exc})") from exc
        pred[test] = predict(fit, X.rows(test))
    press = float(np.sum((y - pred) ** 2))
    tss = float(np.sum((y - math.fsum(y) / len(y)) ** 2))
    return 1.0 - press / tss


def cross_validated_r2(
    X: DesignMatrix, y, k: int = 10, seed: int = DEFAULT_SEED, drop_aliased: bool = False
) -> CvResult:
    folds = fold_assignment(X.n, k, seed)
    cv = cv_r2_from_folds(X, y, folds, drop_aliased)
    r2 = fit_ols(X, y).r2
    return CvResult(k=k, seed=seed, folds=folds, cv_r2=cv, r2=r2)
