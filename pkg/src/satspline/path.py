"""Warm-started regularization paths and holdout selection of tau.

Fits are run over an increasing tau grid, each initialized from the
previous solution (which stays feasible because the feasible sets are
nested).  Model selection follows a random-holdout protocol: split off a
validation set, pick the tau minimizing the holdout metric, optionally
repeat over several random splits and average the per-trial winners.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .losses import LossSpec
from .measures import Dataset, GamModel
from .solver import FitConfig, FitReport, fit_gam


def rmse(pred: np.ndarray, y: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.sqrt(np.mean((pred - y) ** 2)))


def mse(pred: np.ndarray, y: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.mean((pred - y) ** 2))


def error_rate(pred: np.ndarray, y: np.ndarray) -> float:
    """Misclassification rate at threshold 0 for labels in {-1, +1}."""
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    labels = np.where(pred > 0.0, 1.0, -1.0)
    return float(np.mean(labels != y))


METRICS = {"rmse": rmse, "mse": mse, "error_rate": error_rate}


def metric_for_loss(loss: LossSpec, metric: str = "auto"):
    if metric == "auto":
        metric = "error_rate" if loss.kind == "logistic" else "rmse"
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(METRICS)}")
    return metric, METRICS[metric]


def default_tau_grid(tau_min: float, tau_max: float, count: int) -> np.ndarray:
    """Geometrically spaced grid including both endpoints."""
    if not (0 < tau_min < tau_max):
        raise ValueError(f"need 0 < tau_min < tau_max, got ({tau_min}, {tau_max})")
    if count < 2:
        raise ValueError(f"grid needs at least 2 points, got {count}")
    return np.geomspace(tau_min, tau_max, count)


def auto_tau_grid(y: np.ndarray, count: int = 50) -> np.ndarray:
    """Heuristic grid: the top end roughly reaches the interpolation regime
    for square loss, the bottom end is four decades below."""
    y = np.asarray(y, dtype=float)
    spread = float(np.std(y))
    tau_max = 4.0 * y.size * max(spread, 1e-12)
    return default_tau_grid(tau_max / 1e4, tau_max, count)


@dataclass(frozen=True)
class PathEntry:
    tau: float
    model: GamModel
    train_objective: float
    val_metric: float | None
    atom_counts: tuple[int, ...]
    n_features_selected: int
    report: FitReport


@dataclass(frozen=True)
class PathResult:
    entries: tuple[PathEntry, ...]
    metric_name: str | None = None

    @property
    def taus(self) -> np.ndarray:
        return np.asarray([e.tau for e in self.entries])

    def best_entry(self) -> PathEntry:
        scored = [e for e in self.entries if e.val_metric is not None]
        if not scored:
            raise ValueError("no validation metrics recorded on this path")
        return min(scored, key=lambda e: (e.val_metric, e.tau))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["tau", "train_objective", "val_metric", "n_atoms", "n_features_selected"])
        for e in self.entries:
            writer.writerow(
                [
                    format(e.tau, ".17g"),
                    format(e.train_objective, ".17g"),
                    "" if e.val_metric is None else format(e.val_metric, ".17g"),
                    sum(e.atom_counts),
                    e.n_features_selected,
                ]
            )
        return buf.getvalue()


def fit_path(
    data: Dataset,
    loss: LossSpec,
    taus,
    cfg: FitConfig,
    val_data: Dataset | None = None,
    scaling: list[tuple[float, float]] | None = None,
    metric: str = "auto",
    warm_start: bool = True,
) -> PathResult:
    """Fit the model at every tau in ascending order with warm starts.

    ``data`` and ``val_data`` live in the same pre-scaled space: validation
    predictions are computed with ``evaluate_scaled``, bypassing the
    raw-space affine maps stamped into the models.
    """
    taus = np.asarray(list(taus), dtype=float)
    if taus.size == 0:
        raise ValueError("tau grid is empty")
    if np.any(taus <= 0):
        raise ValueError("taus must be positive")
    if np.any(np.diff(taus) <= 0):
        raise ValueError("taus must be strictly increasing")
    metric_name, metric_fn = metric_for_loss(loss, metric)

    entries = []
    prev_model: GamModel | None = None
    for tau in taus:
        cfg_tau = replace(cfg, tau=float(tau))
        try:
            model, report = fit_gam(
                data, loss, cfg_tau, scaling=scaling,
                init_model=prev_model if warm_start else None,
            )
        except Exception as exc:
            raise RuntimeError(f"fit failed at tau={tau:.6g}: {exc}") from exc
        val = None
        if val_data is not None:
            val = metric_fn(model.evaluate_scaled(val_data.X), val_data.y)
        entries.append(
            PathEntry(
                tau=float(tau),
                model=model,
                train_objective=report.objectives[-1],
                val_metric=val,
                atom_counts=tuple(model.atom_counts),
                n_features_selected=len(model.selected_features()),
                report=report,
            )
        )
        prev_model = model
    return PathResult(tuple(entries), metric_name)


def split_holdout(n: int, holdout_fraction: float, rng: np.random.Generator):
    """Deterministic random split; returns (train_idx, holdout_idx)."""
    if not (0.0 < holdout_fraction < 1.0):
        raise ValueError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")
    n_hold = int(round(n * holdout_fraction))
    if n_hold < 2:
        raise ValueError(f"holdout of {n_hold} samples is too small (need >= 2)")
    if n - n_hold < 1:
        raise ValueError("holdout leaves no training data")
    perm = rng.permutation(n)
    return np.sort(perm[n_hold:]), np.sort(perm[:n_hold])


def subset_dataset(data: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(data.X[idx], data.y[idx], data.feature_names)


def holdout_select(
    data: Dataset,
    loss: LossSpec,
    taus,
    holdout_fraction: float,
    seed: int,
    cfg: FitConfig,
    scaling: list[tuple[float, float]] | None = None,
    metric: str = "auto",
    trials: int = 1,
) -> tuple[float, PathResult]:
    """Pick tau by random-holdout validation.

    With ``trials > 1`` the split is redrawn that many times and the
    returned tau is the mean of the per-trial winners; the returned path is
    the one from the first trial.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    best_taus = []
    first_path: PathResult | None = None
    for trial_seed in seeds:
        rng = np.random.default_rng(trial_seed)
        train_idx, hold_idx = split_holdout(data.n_samples, holdout_fraction, rng)
        path = fit_path(
            subset_dataset(data, train_idx), loss, taus, cfg,
            val_data=subset_dataset(data, hold_idx), scaling=scaling, metric=metric,
        )
        best_taus.append(path.best_entry().tau)
        if first_path is None:
            first_path = path
    assert first_path is not None
    return float(np.mean(best_taus)), first_path
