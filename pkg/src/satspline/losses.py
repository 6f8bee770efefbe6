"""Pointwise loss functions and the aggregate data-fit term.

Three losses are supported, all convex and twice differentiable in the
fitted value: square, logistic (labels in {-1, +1}) and pseudo-Huber.
The aggregate objective is the unweighted sum over data points; no 1/n
normalization is applied, so regularization levels keep the same meaning
regardless of how the caller batches data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOSS_KINDS = ("square", "logistic", "pseudo_huber")

#: Default transition parameter for the robust-regression mode.  The
#: crossover between quadratic and linear behavior happens near sqrt(delta).
DEFAULT_PSEUDO_HUBER_DELTA = 0.0015


@dataclass(frozen=True)
class LossSpec:
    """Selects a pointwise loss; ``delta`` applies to pseudo-Huber only."""

    kind: str
    delta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.kind == "pseudo_huber":
            delta = self.delta if self.delta is not None else DEFAULT_PSEUDO_HUBER_DELTA
            if not np.isfinite(delta) or delta <= 0:
                raise ValueError(f"pseudo_huber requires delta > 0, got {delta}")
            object.__setattr__(self, "delta", float(delta))
        elif self.delta is not None:
            raise ValueError(f"delta is only meaningful for pseudo_huber, not {self.kind!r}")

    @property
    def is_classification(self) -> bool:
        return self.kind == "logistic"


SQUARE = LossSpec("square")
LOGISTIC = LossSpec("logistic")


def _sigmoid(t: np.ndarray) -> np.ndarray:
    # tanh form is accurate for both signs without overflow
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def _check_logistic_labels(y: np.ndarray) -> None:
    if not np.all(np.isin(y, (-1.0, 1.0))):
        bad = np.unique(y[~np.isin(y, (-1.0, 1.0))])
        raise ValueError(f"logistic loss requires labels in {{-1, +1}}; found {bad[:5]}")


def loss_value(spec: LossSpec, z, y):
    """Pointwise loss, elementwise over broadcastable ``z`` and ``y``."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.kind == "square":
        return 0.5 * (z - y) ** 2
    if spec.kind == "logistic":
        _check_logistic_labels(y)
        m = z * y
        # log(1 + exp(-m)) = max(0, -m) + log1p(exp(-|m|))
        return np.maximum(0.0, -m) + np.log1p(np.exp(-np.abs(m)))
    u = z - y
    root = np.sqrt(1.0 + u * u / spec.delta)
    return spec.delta * (root - 1.0)


def loss_grad(spec: LossSpec, z, y):
    """First derivative of the loss in the fitted value."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.kind == "square":
        return z - y
    if spec.kind == "logistic":
        _check_logistic_labels(y)
        return -y * _sigmoid(-z * y)
    u = z - y
    return u / np.sqrt(1.0 + u * u / spec.delta)


def loss_hess(spec: LossSpec, z, y):
    """Second derivative of the loss in the fitted value (strictly positive)."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.kind == "square":
        return np.ones_like(z)
    if spec.kind == "logistic":
        _check_logistic_labels(y)
        s = _sigmoid(z * y)
        return s * (1.0 - s)
    u = z - y
    return (1.0 + u * u / spec.delta) ** -1.5


def objective_and_gradient(spec: LossSpec, fitted: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Total loss and its gradient with respect to the fitted values."""
    fitted = np.asarray(fitted, dtype=float)
    y = np.asarray(y, dtype=float)
    if fitted.shape != y.shape:
        raise ValueError(f"fitted values and responses differ in shape: {fitted.shape} vs {y.shape}")
    return float(np.sum(loss_value(spec, fitted, y))), loss_grad(spec, fitted, y)


def objective_gradient_hessian(
    spec: LossSpec, fitted: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """As :func:`objective_and_gradient` plus the diagonal Hessian."""
    value, grad = objective_and_gradient(spec, fitted, y)
    return value, grad, loss_hess(spec, fitted, y)
