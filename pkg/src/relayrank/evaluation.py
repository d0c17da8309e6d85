"""Train/test splitting, RMSE and the model x leg experiment grid."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, RelayRankError, ValidationError
from .models import MODEL_NAMES, GpPolicy, TrainingSet, fit_model, round_half_away
from .rng import substream
from .simulator import RaceTable

__all__ = [
    "SplitSpec",
    "RmseEntry",
    "RmseReport",
    "CurveRow",
    "ExperimentResult",
    "train_size",
    "split_train_test",
    "rmse",
    "run_experiment",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train fraction must lie in (0, 1), got {self.train_fraction}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class RmseEntry:
    model: str
    leg: int
    train_fraction: float
    rmse: float
    v: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class RmseReport:
    entries: list[RmseEntry] = field(default_factory=list)

    def get(self, model: str, leg: int, train_fraction: float | None = None) -> RmseEntry:
        for e in self.entries:
            if e.model == model and e.leg == leg and (train_fraction is None or e.train_fraction == train_fraction):
                return e
        raise KeyError((model, leg, train_fraction))

    def rmse(self, model: str, leg: int, train_fraction: float | None = None) -> float:
        return self.get(model, leg, train_fraction).rmse

    @property
    def failures(self) -> list[RmseEntry]:
        return [e for e in self.entries if not e.ok]


@dataclass(frozen=True)
class CurveRow:
    time: float
    true_place: int
    predictions: dict[str, int]


@dataclass
class ExperimentResult:
    report: RmseReport
    curves: dict[int, list[CurveRow]]
    train_idx: np.ndarray
    test_idx: np.ndarray


def train_size(n: int, train_fraction: float) -> int:
    return int(round_half_away(train_fraction * n))


def split_train_test(table_or_n: RaceTable | int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Random without-replacement partition into ``c`` training and ``n - c``
    test rows, ``c = round(train_fraction * n)``. Both index arrays are sorted.
    """
    n = table_or_n if isinstance(table_or_n, (int, np.integer)) else table_or_n.n
    c = train_size(n, spec.train_fraction)
    if c < 2 or n - c < 1:
        raise ConfigError(f"train fraction {spec.train_fraction} of n={n} gives c={c}, v={n - c}; need c >= 2, v >= 1")
    perm = substream(spec.seed, "split").permutation(n)
    return np.sort(perm[:c]), np.sort(perm[c:])


def rmse(y_true: Sequence[float], y_pred: Sequence[float]) -> float:
    t = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if t.shape != p.shape:
        raise ValidationError(f"length mismatch: {t.size} true vs {p.size} predicted")
    if t.size == 0:
        raise ValidationError("cannot compute RMSE of an empty sample")
    return math.sqrt(float(np.mean((t - p) ** 2)))


def _cell(table, train_idx, test_idx, model, leg, fraction, ridge_lambda, gp_policy):
    x = table.changeover(leg)
    try:
        fitted = fit_model(
            model,
            TrainingSet(x[train_idx], table.places[train_idx], leg),
            ridge_lambda=ridge_lambda,
            gp_policy=gp_policy,
        )
        pred = fitted.predict_many(x[test_idx])
    except (RelayRankError, ValueError, ArithmeticError) as exc:
        log.warning("cell %s/leg %d failed: %s", model, leg, exc)
        return RmseEntry(model, leg, fraction, math.nan, test_idx.size, f"{type(exc).__name__}: {exc}"), None
    return RmseEntry(model, leg, fraction, rmse(table.places[test_idx], pred), test_idx.size), pred


def run_experiment(
    table: RaceTable,
    spec: SplitSpec,
    models: Iterable[str] = MODEL_NAMES,
    *,
    ridge_lambda: float = 1.0,
    gp_policy: GpPolicy = "optimize",
    workers: int = 1,
) -> ExperimentResult:
    """Fit every model at every changeover on one shared split and score it.

    A failing cell is recorded with ``rmse = nan`` and its error message; the
    rest of the grid still runs. Output order is fixed (model order as in
    ``MODEL_NAMES``, then leg) whatever order the cells finish in.
    """
    models = list(dict.fromkeys(models))
    unknown = [m for m in models if m not in MODEL_NAMES]
    if unknown:
        raise ConfigError(f"unknown model(s) {unknown}; choose from {', '.join(MODEL_NAMES)}")
    models.sort(key=MODEL_NAMES.index)

    train_idx, test_idx = split_train_test(table, spec)
    cells = [(model, leg) for model in models for leg in range(1, table.m + 1)]

    def run(cell):
        return cell, _cell(table, train_idx, test_idx, *cell, spec.train_fraction, ridge_lambda, gp_policy)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(run, cells))
    else:
        results = dict(map(run, cells))

    report = RmseReport([results[c][0] for c in cells])
    curves: dict[int, list[CurveRow]] = {}
    for leg in range(1, table.m + 1):
        x = table.changeover(leg)[test_idx]
        order = np.argsort(x, kind="stable")
        rows = []
        for j in order:
            preds = {m: int(results[(m, leg)][1][j]) for m in models if results[(m, leg)][1] is not None}
            rows.append(CurveRow(float(x[j]), int(table.places[test_idx[j]]), preds))
        curves[leg] = rows
    return ExperimentResult(report, curves, train_idx, test_idx)
