"""Atomic measures, spline and additive models, feature scaling, serialization.

A fitted function is represented by its discrete second derivative: a signed
atomic measure on [0, 1].  Degree-1 models expand the measure against hinge
functions (x - t)_+; degree-2 models use squared hinges (x - t)_+^2 and
saturate to a linear function on the right instead of a constant.

Models and measures are immutable after construction and safe to share
across threads for evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .losses import LossSpec

#: Weights below this magnitude are considered numerically zero by default.
DEFAULT_PRUNE_THRESHOLD = 1e-10

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a serialized model is malformed or has a bad version."""


def hinge_basis(x: np.ndarray, knots: np.ndarray, degree: int) -> np.ndarray:
    """Evaluate (x - t)_+^degree for every sample/knot pair, shape (n, k)."""
    x = np.asarray(x, dtype=float)
    knots = np.asarray(knots, dtype=float)
    d = np.maximum(x[:, None] - knots[None, :], 0.0)
    if degree == 1:
        return d
    if degree == 2:
        return d * d
    raise ValueError(f"degree must be 1 or 2, got {degree}")


@dataclass(frozen=True)
class AtomicMeasure:
    """A finite signed measure sum_j w_j * delta_{t_j} with t_j in [0, 1].

    Locations are kept strictly increasing; duplicates passed to the
    constructor are merged by summing their weights.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        t = np.atleast_1d(np.array(self.locations, dtype=float, copy=True))
        w = np.atleast_1d(np.array(self.weights, dtype=float, copy=True))
        if t.shape != w.shape or t.ndim != 1:
            raise ValueError("locations and weights must be 1-D arrays of equal length")
        if t.size and (not np.all(np.isfinite(t)) or not np.all(np.isfinite(w))):
            raise ValueError("atom locations and weights must be finite")
        if t.size and (t.min() < 0.0 or t.max() > 1.0):
            raise ValueError("atom locations must lie in [0, 1]")
        if t.size:
            order = np.argsort(t, kind="stable")
            t, w = t[order], w[order]
            if t.size > 1 and np.any(np.diff(t) == 0.0):
                uniq, inverse = np.unique(t, return_inverse=True)
                merged = np.zeros_like(uniq)
                np.add.at(merged, inverse, w)
                t, w = uniq, merged
        t.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "locations", t)
        object.__setattr__(self, "weights", w)

    @classmethod
    def empty(cls) -> "AtomicMeasure":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def from_atoms(cls, atoms) -> "AtomicMeasure":
        atoms = list(atoms)
        if not atoms:
            return cls.empty()
        t, w = zip(*atoms)
        return cls(np.asarray(t, dtype=float), np.asarray(w, dtype=float))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(t), float(w)) for t, w in zip(self.locations, self.weights)]

    def __len__(self) -> int:
        return int(self.locations.size)

    @property
    def is_empty(self) -> bool:
        return self.locations.size == 0

    def total_mass(self) -> float:
        return math.fsum(self.weights.tolist())

    def l1_norm(self) -> float:
        return math.fsum(abs(w) for w in self.weights.tolist())

    def scaled(self, alpha: float) -> "AtomicMeasure":
        return AtomicMeasure(self.locations.copy(), alpha * self.weights)


def combine_measures(alpha: float, mu1: AtomicMeasure, beta: float, mu2: AtomicMeasure) -> AtomicMeasure:
    """The measure alpha*mu1 + beta*mu2 (atom lists merged with scaled weights)."""
    return AtomicMeasure(
        np.concatenate([mu1.locations, mu2.locations]),
        np.concatenate([alpha * mu1.weights, beta * mu2.weights]),
    )


def eval_spline(measure: AtomicMeasure, c: float, x, degree: int = 1):
    """Evaluate c + sum_j w_j (x - t_j)_+^degree at scalar or array ``x``.

    Defined for all real x.  With zero net mass the degree-1 function is
    constant outside [0, 1]; the degree-2 function is constant on the left
    and linear on the right.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if measure.is_empty:
        out = np.full(x_arr.shape, float(c))
    else:
        out = c + hinge_basis(x_arr, measure.locations, degree) @ measure.weights
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out[0])
    return out


def prune(measure: AtomicMeasure, threshold: float = DEFAULT_PRUNE_THRESHOLD) -> AtomicMeasure:
    """Drop atoms with |w| < threshold after merging duplicate locations."""
    if threshold < 0:
        raise ValueError(f"prune threshold must be nonnegative, got {threshold}")
    keep = np.abs(measure.weights) >= threshold
    return AtomicMeasure(measure.locations[keep], measure.weights[keep])


# ---------------------------------------------------------------------------
# Feature scaling
# ---------------------------------------------------------------------------

def fit_scaling(X: np.ndarray) -> list[tuple[float, float]]:
    """Per-column (min, max) so training features map onto [0, 1].

    Constant columns are flagged by min == max; they map everything to 0.5
    and can never receive knots.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.size == 0:
        raise ValueError("cannot fit scaling on an empty dataset")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite to fit scaling")
    return [(float(col.min()), float(col.max())) for col in X.T]


def apply_scaling(maps: list[tuple[float, float]], X: np.ndarray) -> np.ndarray:
    """Apply stored affine maps columnwise; test data may land outside [0, 1]."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(maps):
        raise ValueError(f"expected {len(maps)} feature columns, got {X.shape[1]}")
    out = np.empty_like(X)
    for d, (lo, hi) in enumerate(maps):
        if hi > lo:
            out[:, d] = (X[:, d] - lo) / (hi - lo)
        else:
            out[:, d] = 0.5
    return out


def unscale_value(scale_map: tuple[float, float], s: np.ndarray) -> np.ndarray:
    """Invert a scaling map (constant columns return their single value)."""
    lo, hi = scale_map
    s = np.asarray(s, dtype=float)
    if hi > lo:
        return lo + s * (hi - lo)
    return np.full_like(s, lo)


def identity_scaling(n_features: int) -> list[tuple[float, float]]:
    return [(0.0, 1.0)] * n_features


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

def _validate_common(degree: int, tau: float) -> None:
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree}")
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"tau must be a nonnegative real, got {tau}")


@dataclass(frozen=True)
class SplineModel:
    """A univariate saturating spline: offset plus one atomic measure."""

    offset: float
    measure: AtomicMeasure
    degree: int = 1
    tau: float = 0.0
    loss: LossSpec = field(default_factory=lambda: LossSpec("square"))

    def __post_init__(self) -> None:
        _validate_common(self.degree, self.tau)
        if self.measure.l1_norm() > self.tau + 1e-9:
            raise ValueError(
                f"measure total variation {self.measure.l1_norm():.3g} exceeds tau={self.tau:.3g}"
            )

    def evaluate(self, x):
        return eval_spline(self.measure, self.offset, x, self.degree)

    __call__ = evaluate

    @property
    def n_atoms(self) -> int:
        return len(self.measure)


@dataclass(frozen=True)
class GamModel:
    """Additive model: offset plus one atomic measure per (scaled) feature."""

    offset: float
    measures: tuple[AtomicMeasure, ...]
    scaling: tuple[tuple[float, float], ...]
    degree: int = 1
    tau: float = 0.0
    loss: LossSpec = field(default_factory=lambda: LossSpec("square"))
    feature_names: tuple[str | None, ...] | None = None

    def __post_init__(self) -> None:
        _validate_common(self.degree, self.tau)
        measures = tuple(self.measures)
        scaling = tuple((float(lo), float(hi)) for lo, hi in self.scaling)
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "scaling", scaling)
        if len(scaling) != len(measures):
            raise ValueError("need one scaling map per feature measure")
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != len(measures):
                raise ValueError("need one name per feature")
            object.__setattr__(self, "feature_names", names)
        for d, mu in enumerate(measures):
            if abs(mu.total_mass()) > 1e-9:
                raise ValueError(f"feature {d} measure has net mass {mu.total_mass():.3g}; must be 0")
        total_tv = math.fsum(mu.l1_norm() for mu in measures)
        if total_tv > self.tau + 1e-9:
            raise ValueError(f"total variation {total_tv:.3g} exceeds tau={self.tau:.3g}")

    @property
    def n_features(self) -> int:
        return len(self.measures)

    def coordinate_values(self, d: int, x_scaled):
        """The d-th coordinate function on the scaled axis (no offset)."""
        return eval_spline(self.measures[d], 0.0, x_scaled, self.degree)

    def evaluate(self, X_raw):
        X_raw = np.atleast_2d(np.asarray(X_raw, dtype=float))
        if X_raw.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X_raw.shape[1]}")
        return self.evaluate_scaled(apply_scaling(list(self.scaling), X_raw))

    def evaluate_scaled(self, X_scaled):
        """Evaluate on features already mapped to the training [0, 1] axes."""
        Xs = np.atleast_2d(np.asarray(X_scaled, dtype=float))
        if Xs.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {Xs.shape[1]}")
        out = np.full(Xs.shape[0], self.offset)
        for d, mu in enumerate(self.measures):
            if not mu.is_empty:
                out += hinge_basis(Xs[:, d], mu.locations, self.degree) @ mu.weights
        return out

    __call__ = evaluate

    def selected_features(self) -> list[int]:
        return [d for d, mu in enumerate(self.measures) if not mu.is_empty]

    @property
    def atom_counts(self) -> list[int]:
        return [len(mu) for mu in self.measures]


@dataclass(frozen=True)
class Dataset:
    """A design matrix plus responses; no missing values allowed."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        X = np.atleast_2d(np.array(self.X, dtype=float, copy=True))
        y = np.array(self.y, dtype=float, copy=True).ravel()
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("dataset needs at least one row and one feature")
        if X.shape[0] != y.size:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise ValueError("feature_names length must match the number of columns")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_samples(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])


# ---------------------------------------------------------------------------
# Serialization (JSON, format_version 1)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atoms_json(mu: AtomicMeasure) -> str:
    parts = [f'{{"t":{_fmt(t)},"w":{_fmt(w)}}}' for t, w in zip(mu.locations, mu.weights)]
    return "[" + ",".join(parts) + "]"


def _feature_json(index: int, name: str | None, scale: tuple[float, float], mu: AtomicMeasure) -> str:
    name_s = json.dumps(name) if name is not None else "null"
    return (
        f'{{"index":{index},"name":{name_s},'
        f'"scale":{{"min":{_fmt(scale[0])},"max":{_fmt(scale[1])}}},'
        f'"atoms":{_atoms_json(mu)}}}'
    )


def serialize_model(model: SplineModel | GamModel) -> bytes:
    """Serialize a model to canonical JSON bytes (17 significant digits)."""
    loss = model.loss
    delta_s = _fmt(loss.delta) if loss.delta is not None else "null"
    if isinstance(model, SplineModel):
        kind = "spline"
        features = [_feature_json(0, None, (0.0, 1.0), model.measure)]
    elif isinstance(model, GamModel):
        kind = "gam"
        names = model.feature_names or (None,) * model.n_features
        features = [
            _feature_json(d, names[d], model.scaling[d], model.measures[d])
            for d in range(model.n_features)
        ]
    else:
        raise TypeError(f"cannot serialize object of type {type(model).__name__}")
    text = (
        f'{{"format_version":{MODEL_FORMAT_VERSION},"kind":"{kind}",'
        f'"degree":{model.degree},"tau":{_fmt(model.tau)},'
        f'"loss":{{"kind":"{loss.kind}","delta":{delta_s}}},'
        f'"offset":{_fmt(model.offset)},'
        f'"features":[{",".join(features)}]}}'
    )
    return text.encode("utf-8")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ModelFormatError(msg)


def deserialize_model(data: bytes | str) -> SplineModel | GamModel:
    """Parse model JSON, enforcing the format version and model invariants."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from exc
    _require(isinstance(obj, dict), "top-level JSON value must be an object")
    version = obj.get("format_version")
    _require(version == MODEL_FORMAT_VERSION, f"unsupported format_version {version!r}")
    kind = obj.get("kind")
    _require(kind in ("spline", "gam"), f"unknown model kind {kind!r}")
    try:
        degree = int(obj["degree"])
        tau = float(obj["tau"])
        loss_obj = obj["loss"]
        delta = loss_obj.get("delta")
        loss = LossSpec(loss_obj["kind"], float(delta) if delta is not None else None)
        offset = float(obj["offset"])
        features = obj["features"]
        _require(isinstance(features, list) and features, "features must be a non-empty list")
        measures, scaling, names = [], [], []
        for f in features:
            atoms = [(float(a["t"]), float(a["w"])) for a in f["atoms"]]
            measures.append(AtomicMeasure.from_atoms(atoms))
            scale = f.get("scale") or {}
            scaling.append((float(scale.get("min", 0.0)), float(scale.get("max", 1.0))))
            names.append(f.get("name"))
        if kind == "spline":
            _require(len(features) == 1, "spline models carry exactly one feature entry")
            return SplineModel(offset=offset, measure=measures[0], degree=degree, tau=tau, loss=loss)
        feature_names = tuple(names) if any(n is not None for n in names) else None
        return GamModel(
            offset=offset,
            measures=tuple(measures),
            scaling=tuple(scaling),
            degree=degree,
            tau=tau,
            loss=loss,
            feature_names=feature_names,
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
