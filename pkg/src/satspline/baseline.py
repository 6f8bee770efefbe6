"""Gridded saturating-hinge basis plus a penalized lasso solve.

An independent cross-check for the main solver: fix a grid of knots per
feature, expand each feature in "saturating hinge" functions
s_j(x) = (x - t_j)_+ - (x - t_k)_+ (flat beyond the last knot t_k), and
solve an l1-penalized fit by proximal gradient.  Dropping the k-th basis
function encodes the zero-slope-at-t_k constraint exactly, so converting
coefficients back to hinge weights always yields zero net mass per feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import LossSpec, loss_grad, loss_value
from .measures import AtomicMeasure, GamModel, identity_scaling


@dataclass(frozen=True)
class SaturatingHingeBasis:
    """Knot grids per feature and the layout of the expanded design matrix.

    Feature d with k_d knots contributes columns for s_1 .. s_{k_d - 1};
    ``offsets[d]`` is the first column index of feature d's block.
    """

    knots: tuple[np.ndarray, ...]
    offsets: tuple[int, ...]

    @property
    def n_columns(self) -> int:
        return self.offsets[-1]

    @property
    def n_features(self) -> int:
        return len(self.knots)

    def feature_slice(self, d: int) -> slice:
        return slice(self.offsets[d], self.offsets[d + 1])


def uniform_knots(count: int) -> np.ndarray:
    """Evenly spaced knots on [0, 1] including the endpoints."""
    if count < 2:
        raise ValueError(f"need at least 2 knots per feature, got {count}")
    return np.linspace(0.0, 1.0, count)


def build_basis(X_scaled: np.ndarray, knots_per_feature) -> tuple[np.ndarray, SaturatingHingeBasis]:
    """Evaluate every saturating hinge at every sample.

    ``knots_per_feature`` is an int (uniform grid for all features) or a
    list of knot arrays, each ascending within [0, 1] with >= 2 entries.
    """
    X = np.atleast_2d(np.asarray(X_scaled, dtype=float))
    n, D = X.shape
    if isinstance(knots_per_feature, (int, np.integer)):
        grids = [uniform_knots(int(knots_per_feature)) for _ in range(D)]
    else:
        grids = [np.asarray(kn, dtype=float) for kn in knots_per_feature]
        if len(grids) != D:
            raise ValueError(f"expected {D} knot grids, got {len(grids)}")
    offsets = [0]
    blocks = []
    for d, t in enumerate(grids):
        if t.size < 2:
            raise ValueError(f"feature {d} has fewer than 2 knots")
        if np.any(np.diff(t) <= 0) or t.min() < 0.0 or t.max() > 1.0:
            raise ValueError(f"feature {d} knots must be ascending within [0, 1]")
        col = X[:, d][:, None]
        hinges = np.maximum(col - t[None, :], 0.0)
        blocks.append(hinges[:, :-1] - hinges[:, -1:])
        offsets.append(offsets[-1] + t.size - 1)
    design = np.hstack(blocks) if blocks else np.zeros((n, 0))
    basis = SaturatingHingeBasis(tuple(grids), tuple(offsets))
    return design, basis


def _soft_threshold(v: np.ndarray, amount: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - amount, 0.0)


def fit_lasso(
    design: np.ndarray,
    y: np.ndarray,
    loss: LossSpec,
    lam: float,
    *,
    theta0: np.ndarray | None = None,
    intercept0: float = 0.0,
    max_iters: int = 50_000,
    tol: float = 1e-10,
) -> tuple[np.ndarray, float, dict]:
    """Proximal gradient with backtracking on sum-loss + lam * ||theta||_1.

    The intercept is unpenalized.  Stops when the relative objective
    decrease stays below ``tol`` or the prox-gradient step is null.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    D = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(y, dtype=float)
    n, m = D.shape
    theta = np.zeros(m) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    b = float(intercept0)

    def objective(th, bb):
        return float(np.sum(loss_value(loss, bb + D @ th, y))) + lam * float(np.abs(th).sum())

    def smooth_value_grad(th, bb):
        z = bb + D @ th
        f = float(np.sum(loss_value(loss, z, y)))
        g = loss_grad(loss, z, y)
        return f, D.T @ g, float(g.sum())

    step = 1.0
    F = objective(theta, b)
    stall = 0
    for it in range(max_iters):
        f, g_th, g_b = smooth_value_grad(theta, b)
        while True:
            theta_new = _soft_threshold(theta - step * g_th, step * lam)
            b_new = b - step * g_b
            dz = D @ (theta_new - theta) + (b_new - b)
            f_new = float(np.sum(loss_value(loss, (b + D @ theta) + dz, y)))
            quad = (
                f
                + float(g_th @ (theta_new - theta))
                + g_b * (b_new - b)
                + 0.5 / step * (float(np.sum((theta_new - theta) ** 2)) + (b_new - b) ** 2)
            )
            if f_new <= quad + 1e-12 * max(1.0, abs(f)):
                break
            step *= 0.5
            if step < 1e-18:
                raise RuntimeError("proximal gradient step underflow; problem badly scaled")
        theta, b = theta_new, b_new
        F_new = f_new + lam * float(np.abs(theta).sum())
        if F - F_new <= tol * max(1.0, abs(F_new)):
            stall += 1
            if stall >= 5:
                F = F_new
                break
        else:
            stall = 0
        F = F_new
        step *= 2.0  # let the step grow back so backtracking stays adaptive
    return theta, b, {"iterations": it + 1, "objective": F}


def baseline_to_model(
    theta: np.ndarray,
    intercept: float,
    basis: SaturatingHingeBasis,
    loss: LossSpec,
    scaling: list[tuple[float, float]] | None = None,
    degree: int = 1,
) -> GamModel:
    """Convert basis coefficients to hinge atoms (last knot absorbs -sum).

    The induced measure has exactly zero net mass per feature, so the result
    is a saturating additive model comparable with the main solver's output.
    """
    theta = np.asarray(theta, dtype=float)
    measures = []
    for d in range(basis.n_features):
        th = theta[basis.feature_slice(d)]
        t = basis.knots[d]
        w_last = -float(th.sum())
        locs, weights = [], []
        for tj, wj in zip(t[:-1], th):
            if wj != 0.0:
                locs.append(float(tj))
                weights.append(float(wj))
        if w_last != 0.0:
            locs.append(float(t[-1]))
            weights.append(w_last)
        measures.append(
            AtomicMeasure(np.asarray(locs), np.asarray(weights)) if locs else AtomicMeasure.empty()
        )
    total_tv = sum(mu.l1_norm() for mu in measures)
    return GamModel(
        offset=float(intercept),
        measures=tuple(measures),
        scaling=tuple(scaling) if scaling is not None else tuple(identity_scaling(basis.n_features)),
        degree=degree,
        tau=total_tv,
        loss=loss,
    )


def fit_lasso_path(
    design: np.ndarray,
    y: np.ndarray,
    loss: LossSpec,
    lambdas,
    **kwargs,
) -> list[tuple[float, np.ndarray, float, dict]]:
    """Solve the penalized problem for each lambda, warm-starting in order."""
    lambdas = np.asarray(list(lambdas), dtype=float)
    if np.any(lambdas < 0):
        raise ValueError("lambdas must be nonnegative")
    results = []
    theta, b = None, 0.0
    for lam in np.sort(lambdas)[::-1]:  # large to small: solutions grow smoothly
        theta, b, info = fit_lasso(design, y, loss, float(lam), theta0=theta, intercept0=b, **kwargs)
        results.append((float(lam), theta.copy(), b, info))
    return results[::-1]
