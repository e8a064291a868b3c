"""Evaluation harness: one-class split, Gmean, per-attack breakdowns, and
hyperparameter grid search. Anomaly is the positive class throughout."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np

from .features import LABEL_NORMAL
from .models import (KernelSpec, LINEAR, config_digest, fit_model,
                     median_heuristic, model_tag, predict)
from .models.api import AnyModel, LABEL_ANOMALY


@dataclass(frozen=True)
class SplitSpec:
    """70/30-style split; training takes normal rows only (the one-class
    contract), everything else goes to test. ``stratify`` names that
    contract and cannot be turned off."""

    train_fraction: float = 0.7
    seed: int = 0
    stratify: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if not self.stratify:
            raise ValueError("normal-only training is the one-class contract; "
                             "stratify cannot be disabled")


def split(X, labels: Sequence[str], spec: SplitSpec = SplitSpec()
          ) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Returns (train_X, test_X, test_labels); train rows are all normal."""
    X = np.asarray(X, dtype=float)
    labels = list(labels)
    if X.shape[0] != len(labels):
        raise ValueError("labels length must match rows")
    normal_idx = np.flatnonzero(np.array([lab == LABEL_NORMAL for lab in labels]))
    if normal_idx.size < 2:
        raise ValueError("split needs at least 2 normal rows")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(normal_idx)
    n_train = int(round(normal_idx.size * spec.train_fraction))
    n_train = min(max(n_train, 1), normal_idx.size - 1)
    train_idx = np.sort(perm[:n_train])
    train_set = set(train_idx.tolist())
    test_idx = np.array([i for i in range(X.shape[0]) if i not in train_set])
    return X[train_idx], X[test_idx], [labels[i] for i in test_idx]


def gmean(tp: int, tn: int, fp: int, fn: int) -> float:
    """sqrt(TPR * TNR); raises when either class is empty."""
    if tp + fn == 0:
        raise ValueError("no positive (anomalous) samples: TPR undefined")
    if tn + fp == 0:
        raise ValueError("no negative (normal) samples: TNR undefined")
    tpr = tp / (tp + fn)
    tnr = tn / (tn + fp)
    return math.sqrt(tpr * tnr)


@dataclass
class EvalReport:
    """Confusion counts plus Gmean, overall and per attack kind."""

    tp: int
    tn: int
    fp: int
    fn: int
    tpr: float
    tnr: float
    gmean: float
    per_attack: dict[str, float] = field(default_factory=dict)
    model_tag: str = ""
    config_hash: str = ""

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn,
                "tpr": self.tpr, "tnr": self.tnr, "gmean": self.gmean,
                "per_attack": dict(self.per_attack),
                "model_tag": self.model_tag, "config_hash": self.config_hash}


def _confusion(pred_anomaly: np.ndarray, true_anomaly: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(np.sum(pred_anomaly & true_anomaly))
    tn = int(np.sum(~pred_anomaly & ~true_anomaly))
    fp = int(np.sum(pred_anomaly & ~true_anomaly))
    fn = int(np.sum(~pred_anomaly & true_anomaly))
    return tp, tn, fp, fn


def evaluate(model: AnyModel, X_test, labels: Sequence[str]) -> EvalReport:
    """Score the test set; per-attack Gmeans reuse all normal test rows."""
    X_test = np.asarray(X_test, dtype=float)
    labels = list(labels)
    if X_test.shape[0] != len(labels):
        raise ValueError("labels length must match rows")
    true_anomaly = np.array([lab != LABEL_NORMAL for lab in labels])
    if true_anomaly.all() or not true_anomaly.any():
        raise ValueError("test set must contain both normal and anomalous rows")
    pred_anomaly = predict(model, X_test) == LABEL_ANOMALY
    tp, tn, fp, fn = _confusion(pred_anomaly, true_anomaly)
    per_attack = {}
    for kind in sorted({lab for lab in labels if lab != LABEL_NORMAL}):
        subset = np.array([lab == LABEL_NORMAL or lab == kind for lab in labels])
        per_attack[kind] = gmean(*_confusion(pred_anomaly[subset],
                                             true_anomaly[subset]))
    return EvalReport(tp, tn, fp, fn,
                      tpr=tp / (tp + fn), tnr=tn / (tn + fp),
                      gmean=gmean(tp, tn, fp, fn), per_attack=per_attack,
                      model_tag=model_tag(model), config_hash=config_digest(model))


# paper-shaped report: one row per model variant, one column per attack
REPORT_COLUMNS = ("model", "normal", "random_id", "replay", "zero_id")


def write_report_table(sink: IO[str], reports: Sequence[EvalReport]) -> None:
    """CSV mirroring the per-attack result tables; "normal" is the Gmean on
    the full mixed test set."""
    sink.write(",".join(REPORT_COLUMNS) + "\n")
    for rpt in reports:
        cells = [rpt.model_tag, f"{rpt.gmean:.4f}"]
        for kind in REPORT_COLUMNS[2:]:
            value = rpt.per_attack.get(kind)
            cells.append("" if value is None else f"{value:.4f}")
        sink.write(",".join(cells) + "\n")


DEFAULT_GRIDS: Mapping[str, Mapping[str, tuple]] = {
    "svdd": {"C": (0.05, 0.1, 0.2, 0.5, 1.0)},
    "ssvdd": {"C": (0.05, 0.1, 0.2, 0.5, 1.0), "d": (2, 5, 10),
              "beta": (1e-3, 1e-2, 1e-1)},
    "esvdd": {"C": (0.05, 0.1, 0.2, 0.5, 1.0)},
    "gesvdd": {"C": (0.05, 0.1, 0.2, 0.5, 1.0)},
    "ocsvm": {"nu": (0.05, 0.1, 0.2)},
    "geocsvm": {"nu": (0.05, 0.1, 0.2)},
}

SIGMA_SCALES = (0.5, 1.0, 2.0)


def default_sigma_grid(train_X) -> tuple[float, ...]:
    """rbf bandwidth grid: {0.5, 1, 2} x the median heuristic of the
    training data. Feed the values into a grid's "sigma" key."""
    base = median_heuristic(np.asarray(train_X, dtype=float))
    return tuple(scale * base for scale in SIGMA_SCALES)


@dataclass
class GridSearchResult:
    best_config: dict
    best_gmean: float
    table: list[tuple[dict, float | None, str | None]]


def expand_grid(grid: Mapping[str, Sequence] | Sequence[Mapping]) -> list[dict]:
    """Materialize a {param: values} grid (or pass through a config list) in
    deterministic order."""
    if isinstance(grid, Mapping):
        if not grid:
            return []
        keys = sorted(grid)
        return [dict(zip(keys, combo))
                for combo in itertools.product(*(grid[k] for k in keys))]
    return [dict(cfg) for cfg in grid]


def _tie_key(config: dict) -> tuple:
    inf = math.inf
    c = config.get("C", config.get("nu", inf))
    return (c, config.get("d", inf), config.get("sigma", inf))


def grid_search(family: str, grid, train_X, validation: tuple[np.ndarray, Sequence[str]],
                *, kernel: KernelSpec = LINEAR, scaler=None) -> GridSearchResult:
    """Exhaustive sweep scored by validation Gmean.

    The validation set must be carved from training normals plus synthetic
    attacks, never the final test set. Ties go to the smaller C (nu), then
    smaller d, then smaller sigma. Single-cell failures are recorded in the
    table; only an all-fail sweep raises.
    """
    configs = expand_grid(grid)
    if not configs:
        raise ValueError("empty hyperparameter grid")
    val_X, val_labels = validation
    table: list[tuple[dict, float | None, str | None]] = []
    best: tuple[float, tuple, dict] | None = None
    for config in configs:
        params = dict(config)
        cell_kernel = kernel
        if "sigma" in params:
            cell_kernel = KernelSpec(kernel.kind, params.pop("sigma"))
        try:
            model = fit_model(family, train_X, kernel=cell_kernel,
                              scaler=scaler, **params)
            score = evaluate(model, val_X, val_labels).gmean
        except (ValueError, RuntimeError) as err:
            table.append((config, None, str(err)))
            continue
        table.append((config, score, None))
        key = (-score, _tie_key(config))
        if best is None or key < (-best[0], best[1]):
            best = (score, _tie_key(config), config)
    if best is None:
        raise RuntimeError("every grid cell failed to fit")
    return GridSearchResult(best_config=dict(best[2]), best_gmean=best[0],
                            table=table)
