"""Linear minimization oracles over the feasible set of measures.

The linearized subproblem at gradient g asks for the measure s with zero net
mass and total variation at most tau minimizing the correlation
integral of <g, psi(t)> against s, where psi(t) stacks the (x_i - t)_+
basis values.  Its solution can always be taken as two opposite point
masses of weight tau/2, located at the minimizer and maximizer of the
hinge correlation.  For degree 1 the correlation is piecewise linear in t,
so candidate locations are exactly the data values plus 0; for degree 2 it
is piecewise quadratic and per-interval vertices join the candidate list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import AtomicMeasure


@dataclass(frozen=True)
class ConditionalGradient:
    """Outcome of one LMO call: a two-atom proposal or the zero measure.

    ``spread`` is min_t <g, psi(t)> + min_t <g, -psi(t)>; it is nonpositive
    whenever a nonzero proposal exists, and the proposal's linearized
    objective is (tau/2) * spread.
    """

    feature: int
    t_plus: float
    t_minus: float
    spread: float
    s_star: AtomicMeasure

    @property
    def is_zero(self) -> bool:
        return self.s_star.is_empty

    def objective_value(self, tau: float) -> float:
        return 0.0 if self.is_zero else 0.5 * tau * self.spread


@dataclass(frozen=True)
class GapCertificate:
    """A computable upper bound on the suboptimality of the current iterate."""

    gap: float


class HingeCorrelator:
    """Suffix-sum evaluation of t -> sum_{x_i >= t} g_i (x_i - t)^degree.

    Precompute is one O(n) pass; each query costs O(log n) via binary search.
    """

    def __init__(self, g: np.ndarray, x_sorted: np.ndarray, degree: int = 1):
        g = np.asarray(g, dtype=float)
        x = np.asarray(x_sorted, dtype=float)
        if g.shape != x.shape or g.ndim != 1:
            raise ValueError("g and x_sorted must be 1-D arrays of equal length")
        if x.size == 0:
            raise ValueError("empty data")
        if degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {degree}")
        self.x = x
        self.degree = degree
        # suffix[k] = sum over i >= k; one trailing zero so suffix[n] == 0
        def suffix(v):
            out = np.zeros(v.size + 1)
            out[:-1] = np.cumsum(v[::-1])[::-1]
            return out

        self._s0 = suffix(g)
        self._s1 = suffix(g * x)
        self._s2 = suffix(g * x * x) if degree == 2 else None

    def query_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        idx = np.searchsorted(self.x, ts, side="left")
        if self.degree == 1:
            return self._s1[idx] - ts * self._s0[idx]
        return self._s2[idx] - 2.0 * ts * self._s1[idx] + ts * ts * self._s0[idx]

    def query(self, t: float) -> float:
        return float(self.query_many(np.asarray([t]))[0])

    def suffix_sums_at(self, t: float) -> tuple[float, float, float]:
        """(sum g, sum g*x, sum g*x^2) over the active set {i : x_i > t-ish}."""
        idx = int(np.searchsorted(self.x, t, side="right"))
        s2 = float(self._s2[idx]) if self._s2 is not None else 0.0
        return float(self._s0[idx]), float(self._s1[idx]), s2


def hinge_correlation(g: np.ndarray, x_sorted: np.ndarray, t: float, degree: int = 1) -> float:
    """Correlation of the gradient with a single hinge at ``t``."""
    return HingeCorrelator(g, x_sorted, degree).query(t)


def _record_stats(stats: dict | None, n: int, n_evals: int) -> None:
    if stats is not None:
        stats["n"] = int(n)
        stats["candidate_evaluations"] = stats.get("candidate_evaluations", 0) + int(n_evals)


def _check_lmo_inputs(g: np.ndarray, x_sorted: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    g = np.asarray(g, dtype=float)
    x = np.asarray(x_sorted, dtype=float)
    if x.size == 0:
        raise ValueError("empty data")
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    if x.size > 1 and np.any(np.diff(x) < 0):
        raise ValueError("x_sorted must be ascending")
    return g, x


def _build_cg(feature: int, tau: float, cands: np.ndarray, vals: np.ndarray) -> ConditionalGradient:
    i_plus = int(np.argmin(vals))   # first occurrence = smallest t on ties
    i_minus = int(np.argmax(vals))
    t_plus = float(cands[i_plus])
    t_minus = float(cands[i_minus])
    spread = float(vals[i_plus] - vals[i_minus])
    if spread >= 0.0 or tau == 0.0:
        return ConditionalGradient(feature, t_plus, t_minus, spread, AtomicMeasure.empty())
    s_star = AtomicMeasure(np.array([t_plus, t_minus]), np.array([0.5 * tau, -0.5 * tau]))
    return ConditionalGradient(feature, t_plus, t_minus, spread, s_star)


def lmo_univariate(
    g: np.ndarray, x_sorted: np.ndarray, tau: float, stats: dict | None = None
) -> ConditionalGradient:
    """Exact degree-1 LMO; candidates are the data values plus 0.

    The correlation is piecewise linear between consecutive data points and
    vanishes for t at or beyond the largest one, so scanning candidates is
    a global minimization.  Ties break toward the smallest location.
    """
    g, x = _check_lmo_inputs(g, x_sorted, tau)
    corr = HingeCorrelator(g, x, degree=1)
    cands = np.concatenate(([0.0], x))
    vals = corr.query_many(cands)
    _record_stats(stats, x.size, cands.size)
    return _build_cg(0, tau, cands, vals)


def lmo_degree2(
    g: np.ndarray, x_sorted: np.ndarray, tau: float, stats: dict | None = None
) -> ConditionalGradient:
    """Exact degree-2 LMO via per-interval quadratic vertices.

    Between consecutive data points the correlation is a quadratic in t, so
    the global extrema over [0, 1] lie at interval endpoints or at interior
    stationary points; both are enumerated, no gridding.
    """
    g, x = _check_lmo_inputs(g, x_sorted, tau)
    corr = HingeCorrelator(g, x, degree=2)
    edges = np.unique(np.concatenate(([0.0], x, [1.0])))
    cands = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        s0, s1, _ = corr.suffix_sums_at(a)
        # d/dt [s2 - 2 t s1 + t^2 s0] = 0 at t = s1/s0
        if s0 != 0.0:
            v = s1 / s0
            if a < v < b:
                cands.append(v)
        cands.append(b)
    cands = np.asarray(cands)
    vals = corr.query_many(cands)
    _record_stats(stats, x.size, cands.size)
    return _build_cg(0, tau, cands, vals)


class SortedColumns:
    """Per-feature sort orders of a scaled design matrix, computed once."""

    def __init__(self, X_scaled: np.ndarray):
        X = np.atleast_2d(np.asarray(X_scaled, dtype=float))
        if X.shape[0] == 0:
            raise ValueError("empty data")
        self.X = X
        self.orders = [np.argsort(X[:, d], kind="stable") for d in range(X.shape[1])]
        self.sorted_cols = [X[self.orders[d], d] for d in range(X.shape[1])]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def column(self, d: int) -> np.ndarray:
        return self.X[:, d]


def lmo_gam(
    g: np.ndarray, cols: SortedColumns, tau: float, degree: int = 1, stats: dict | None = None
) -> ConditionalGradient:
    """Best two-atom proposal across features: minimal spread, ties to the
    smallest feature index."""
    lmo = lmo_univariate if degree == 1 else lmo_degree2
    best: ConditionalGradient | None = None
    for d in range(cols.n_features):
        order = cols.orders[d]
        cg = lmo(np.asarray(g, dtype=float)[order], cols.sorted_cols[d], tau, stats=stats)
        cg = ConditionalGradient(d, cg.t_plus, cg.t_minus, cg.spread, cg.s_star)
        if best is None or cg.spread < best.spread:
            best = cg
    assert best is not None
    return best


def evaluate_proposal(cg: ConditionalGradient, X_scaled: np.ndarray, degree: int = 1) -> np.ndarray:
    """Fitted values of the proposal measure at the (scaled) data points."""
    X = np.atleast_2d(np.asarray(X_scaled, dtype=float))
    if cg.is_zero:
        return np.zeros(X.shape[0])
    col = X[:, cg.feature]
    w = cg.s_star.weights
    t = cg.s_star.locations
    vals = np.zeros(X.shape[0])
    for tj, wj in zip(t, w):
        h = np.maximum(col - tj, 0.0)
        vals += wj * (h if degree == 1 else h * h)
    return vals


def duality_gap(
    g: np.ndarray,
    X_scaled: np.ndarray,
    cg: ConditionalGradient,
    mu_fit_values: np.ndarray,
    degree: int = 1,
) -> GapCertificate:
    """gap = -<g, E_x s_star - E_x mu>, evaluated from the two hinges.

    Valid as a suboptimality bound when ``cg`` came from an LMO at the same
    gradient g and the offset is kept optimal at the current iterate.
    """
    g = np.asarray(g, dtype=float)
    s_fit = evaluate_proposal(cg, X_scaled, degree)
    raw = -float(g @ (s_fit - np.asarray(mu_fit_values, dtype=float)))
    if raw < -1e-12 * max(1.0, float(np.abs(g).sum())):
        raise ValueError(f"negative duality gap {raw:.3e}; proposal does not match the gradient")
    return GapCertificate(max(raw, 0.0))
