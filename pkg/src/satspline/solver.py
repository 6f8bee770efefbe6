"""Fully-corrective conditional gradient fitting.

The outer loop alternates an exact LMO (two new candidate knots) with a
full re-optimization of all active weights and the offset, then prunes
knots whose weights have collapsed.  The weight subproblem is solved by a
proximal Newton scheme: build the local quadratic model of the loss in
fitted-value space, minimize it over the constraint polytope
{per-feature net mass 0, total l1 <= tau} with the standard conditional
gradient method and exact line search, take a unit Newton step, and halve
it only if the true objective would increase.

Every iterate is feasible: weight vectors are convex combinations of
polytope vertices (tau/2)(e_i - e_j) with both indices in one feature
group, so per-feature net mass stays at roundoff level and the l1 norm
never exceeds tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .losses import (
    LossSpec,
    _check_logistic_labels,
    loss_hess,
    objective_and_gradient,
    objective_gradient_hessian,
)
from .measures import (
    AtomicMeasure,
    Dataset,
    GamModel,
    SplineModel,
    hinge_basis,
    identity_scaling,
)
from .oracle import ConditionalGradient, SortedColumns, duality_gap, lmo_gam


@dataclass(frozen=True)
class FitConfig:
    """Regularization level and solver tolerances.

    ``gap_tol`` and ``inner_gap_tol`` are relative to max(1, objective) so
    stopping behaves the same across losses and data scales.
    """

    tau: float
    gap_tol: float = 1e-6
    max_outer_iters: int = 500
    newton_iters: int = 20
    inner_cgm_iters: int = 200
    inner_gap_tol: float = 1e-9
    prune_threshold: float = 1e-10
    knot_move: bool = False
    degree: int = 1

    def __post_init__(self) -> None:
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        for name in ("gap_tol", "inner_gap_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_outer_iters", "newton_iters", "inner_cgm_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.prune_threshold < 0:
            raise ValueError("prune_threshold must be nonnegative")
        if self.degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {self.degree}")


@dataclass
class FitReport:
    """Per-iteration trace plus the termination certificate."""

    objectives: list[float] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)
    atom_counts: list[int] = field(default_factory=list)
    l1_norms: list[float] = field(default_factory=list)
    max_abs_masses: list[float] = field(default_factory=list)
    termination: str = "max_iters"
    gap_threshold: float = float("nan")
    final_gap: float = float("nan")
    inner_nonconverged_rounds: int = 0

    @property
    def n_iterations(self) -> int:
        return len(self.objectives)

    @property
    def converged(self) -> bool:
        return self.termination in ("gap_tol", "tau_zero")

    def to_dict(self) -> dict:
        return {
            "objectives": self.objectives,
            "gaps": self.gaps,
            "atom_counts": self.atom_counts,
            "termination": self.termination,
            "converged": self.converged,
            "gap_threshold": self.gap_threshold,
            "final_gap": self.final_gap,
            "inner_nonconverged_rounds": self.inner_nonconverged_rounds,
        }


# ---------------------------------------------------------------------------
# Inner weight subproblem
# ---------------------------------------------------------------------------

def lmo_weights(grad_w: np.ndarray, groups: np.ndarray, tau: float) -> np.ndarray:
    """Vertex of {per-group 1'w = 0, ||w||_1 <= tau} minimizing <grad_w, w>.

    Vertices are (tau/2)(e_i - e_j) with i, j in the same group; the zero
    vector is returned when no pair has negative value.  Groups with fewer
    than two knots contribute no vertex.
    """
    grad_w = np.asarray(grad_w, dtype=float)
    groups = np.asarray(groups)
    out = np.zeros_like(grad_w)
    pick = _best_vertex(grad_w, groups, tau)
    if pick is not None:
        i, j, _ = pick
        out[i] = 0.5 * tau
        out[j] = -0.5 * tau
    return out


def _best_vertex(grad_w: np.ndarray, groups: np.ndarray, tau: float):
    """(i, j, value) of the best same-group vertex, or None if none is negative."""
    if grad_w.size == 0 or tau == 0.0:
        return None
    best = None
    for gid in np.unique(groups):
        idx = np.flatnonzero(groups == gid)
        if idx.size < 2:
            continue
        sub = grad_w[idx]
        i = idx[int(np.argmin(sub))]
        j = idx[int(np.argmax(sub))]
        value = 0.5 * tau * (grad_w[i] - grad_w[j])
        if best is None or value < best[2]:
            best = (int(i), int(j), float(value))
    if best is None or best[2] >= 0.0:
        return None
    return best


def _quad_value(g0, h, u, c, z0) -> float:
    e = u + c - z0
    return float(g0 @ e + 0.5 * (h @ (e * e)))


def _solve_face_kkt(Phi, groups, h, b_lin, support, sign_vec):
    """Equality-constrained minimizer of the quadratic model on one face.

    Unknowns are (w restricted to ``support``, offset shift).  Constraints:
    zero net mass per feature group present in the support, plus, when
    ``sign_vec`` is given, sum(sign * w) = tau encoded in its last entry.
    Returns (w_support, c) or None on a singular system.
    """
    J = np.hstack([Phi[:, support], np.ones((Phi.shape[0], 1))])
    H = J.T @ (h[:, None] * J)
    b = J.T @ b_lin
    group_ids = np.unique(groups[support])
    rows = []
    rhs = []
    for gid in group_ids:
        row = np.zeros(support.size + 1)
        row[:-1] = (groups[support] == gid).astype(float)
        rows.append(row)
        rhs.append(0.0)
    if sign_vec is not None:
        sign_row = np.concatenate([sign_vec[:-1], [0.0]])
        rows.append(sign_row)
        rhs.append(sign_vec[-1])
    A = np.vstack(rows)
    rhs = np.asarray(rhs)
    m = H.shape[0]
    kkt = np.zeros((m + A.shape[0], m + A.shape[0]))
    kkt[:m, :m] = H
    kkt[:m, m:] = A.T
    kkt[m:, :m] = A
    target = np.concatenate([-b, rhs])
    sol = np.linalg.lstsq(kkt, target, rcond=None)[0][:m]
    if not np.all(np.isfinite(sol)):
        return None
    return sol[:-1], float(sol[-1])


def _face_polish(Phi, groups, tau, g0, h, w, u, c, z0):
    """Exactly re-optimize the quadratic model over the face lattice spanned
    by the current support (active-set refinement of the conditional
    gradient iterate).

    First tries the mass-constrained solve alone; if its l1 norm exceeds
    tau, re-solves on the l1 boundary with the current sign pattern,
    dropping coordinates whose weights try to cross zero (Lawson-Hanson
    style).  A candidate is accepted only when it is feasible and strictly
    decreases the model, so the certificates and monotonicity of the outer
    method are untouched.  Returns (w, u, c) or None.
    """
    S = np.flatnonzero(w != 0.0)
    if S.size == 0:
        return None
    q_cur = _quad_value(g0, h, u, c, z0)
    b_lin = g0 - h * z0
    candidate = None

    out = _solve_face_kkt(Phi, groups, h, b_lin, S, None)
    if out is not None:
        w_S, c_new = out
        if float(np.abs(w_S).sum()) <= tau * (1.0 + 1e-12):
            candidate = (S, w_S, c_new)
    if candidate is None:
        sigma_full = np.sign(w)
        S_work = S.copy()
        for _ in range(S.size):
            if S_work.size == 0:
                break
            sign_vec = np.concatenate([sigma_full[S_work], [tau]])
            out = _solve_face_kkt(Phi, groups, h, b_lin, S_work, sign_vec)
            if out is None:
                break
            w_S, c_new = out
            flipped = sigma_full[S_work] * w_S < -1e-14 * max(1.0, tau)
            if not np.any(flipped):
                candidate = (S_work, w_S, c_new)
                break
            S_work = S_work[~flipped]
    if candidate is None:
        return None
    S_fin, w_S, c_new = candidate
    w_new = np.zeros_like(w)
    w_new[S_fin] = w_S
    l1 = float(np.abs(w_new).sum())
    if l1 > tau:
        if l1 > tau * (1.0 + 1e-12):
            return None
        w_new *= tau / l1
    u_new = Phi[:, S_fin] @ w_new[S_fin]
    q_new = _quad_value(g0, h, u_new, c_new, z0)
    if q_new <= q_cur - 1e-15 * max(1.0, abs(q_cur)):
        return w_new, u_new, c_new
    return None


def _minimize_quadratic_model(
    Phi: np.ndarray,
    groups: np.ndarray,
    tau: float,
    g0: np.ndarray,
    h: np.ndarray,
    w: np.ndarray,
    u: np.ndarray,
    c: float,
    z0: np.ndarray,
    max_iters: int,
    gap_tol: float,
):
    """Conditional gradient with exact line search on the local quadratic model.

    State is tracked in fitted-value space: u = Phi @ w.  The offset is an
    unconstrained variable and is minimized in closed form each iteration.
    Periodic face polishes (see :func:`_face_polish`) jump to the exact
    optimum of the support identified so far; the vertex LMO still provides
    the duality-gap certificate used for termination.
    Returns (w, u, c, converged).
    """
    w = w.copy()
    u = u.copy()
    h_sum = float(h.sum())
    converged = False
    q_prev = _quad_value(g0, h, u, c, z0)
    stalled = 0
    for it in range(max_iters):
        e = u + c - z0
        rho = g0 + h * e
        if h_sum > 0.0:
            dc = -float(rho.sum()) / h_sum
            if dc != 0.0:
                c += dc
                rho = rho + h * dc
        grad_w = Phi.T @ rho
        pick = _best_vertex(grad_w, groups, tau)
        if pick is None:
            target_val = 0.0
            phi_v = np.zeros_like(u)
        else:
            i, j, target_val = pick
            phi_v = 0.5 * tau * (Phi[:, i] - Phi[:, j])
        inner_gap = float(grad_w @ w) - target_val
        if inner_gap <= gap_tol:
            converged = True
            break
        dir_fit = phi_v - u
        num = target_val - float(grad_w @ w)  # <grad, v - w>
        den = float(h @ (dir_fit * dir_fit))
        gamma = 1.0 if den <= 0.0 else min(1.0, max(0.0, -num / den))
        if gamma == 0.0:
            converged = True
            break
        w *= 1.0 - gamma
        if pick is not None:
            amt = gamma * 0.5 * tau
            w[i] += amt
            w[j] -= amt
        u = (1.0 - gamma) * u + gamma * phi_v
        if it % 5 == 1:
            polished = _face_polish(Phi, groups, tau, g0, h, w, u, c, z0)
            if polished is not None:
                w, u, c = polished
        q_now = _quad_value(g0, h, u, c, z0)
        stalled = stalled + 1 if q_prev - q_now <= 1e-15 * max(1.0, abs(q_now)) else 0
        q_prev = q_now
        if stalled >= 3:
            break
    return w, u, c, converged


def fully_corrective(
    knots,
    X_scaled: np.ndarray,
    y: np.ndarray,
    loss: LossSpec,
    tau: float,
    warm_w: np.ndarray | None = None,
    warm_c: float = 0.0,
    *,
    degree: int = 1,
    newton_iters: int = 20,
    inner_cgm_iters: int = 200,
    inner_gap_tol: float = 1e-9,
):
    """Re-optimize all weights and the offset over a fixed knot support.

    ``knots`` is a sequence of (feature, location) pairs.  Returns
    (weights, offset, info); info records whether the last inner solve met
    its gap tolerance.
    """
    X = np.atleast_2d(np.asarray(X_scaled, dtype=float))
    y = np.asarray(y, dtype=float)
    knots = list(knots)
    k = len(knots)
    if k:
        groups = np.asarray([d for d, _ in knots])
        Phi = np.column_stack(
            [hinge_basis(X[:, d], np.asarray([t]), degree)[:, 0] for d, t in knots]
        )
    else:
        groups = np.empty(0, dtype=int)
        Phi = np.zeros((X.shape[0], 0))

    w = np.zeros(k) if warm_w is None else np.asarray(warm_w, dtype=float).copy()
    if w.size != k:
        raise ValueError(f"warm_weights has length {w.size}, expected {k}")
    l1 = float(np.abs(w).sum())
    if l1 > tau and l1 > 0.0:
        w *= tau / l1
    c = float(warm_c)
    u = Phi @ w

    info = {"newton_rounds": 0, "inner_converged": True, "nonconverged_rounds": 0}
    obj_prev = float("inf")
    for _ in range(newton_iters):
        z0 = u + c
        L0, g0, h = objective_gradient_hessian(loss, z0, y)
        tol = inner_gap_tol * max(1.0, abs(L0))
        w_new, u_new, c_new, inner_ok = _minimize_quadratic_model(
            Phi, groups, tau, g0, h, w, u, c, z0, inner_cgm_iters, tol
        )
        info["newton_rounds"] += 1
        info["inner_converged"] = inner_ok
        if not inner_ok:
            info["nonconverged_rounds"] += 1
        # unit Newton step, halved only if the true objective increases
        accepted = False
        beta = 1.0
        for _ in range(11):
            w_try = w + beta * (w_new - w)
            u_try = u + beta * (u_new - u)
            c_try = c + beta * (c_new - c)
            L_try, _ = objective_and_gradient(loss, u_try + c_try, y)
            if L_try <= L0 + 1e-12 * max(1.0, abs(L0)):
                accepted = True
                break
            beta *= 0.5
        if not accepted:
            break
        w, u, c, L_now = w_try, u_try, c_try, L_try
        if obj_prev - L_now <= 1e-12 * max(1.0, abs(L_now)):
            break
        obj_prev = L_now
    return w, c, info


def best_constant(loss: LossSpec, y: np.ndarray, iters: int = 60) -> float:
    """The constant minimizing the total loss (Newton with halving)."""
    y = np.asarray(y, dtype=float)
    c = float(np.mean(y)) if loss.kind != "logistic" else 0.0
    L, _ = objective_and_gradient(loss, np.full(y.shape, c), y)
    for _ in range(iters):
        z = np.full(y.shape, c)
        g = objective_and_gradient(loss, z, y)[1]
        h = float(np.sum(loss_hess(loss, z, y)))
        g_sum = float(g.sum())
        if h <= 0.0 or abs(g_sum) <= 1e-14 * max(1.0, abs(L)):
            break
        step = -g_sum / h
        for _ in range(30):
            L_try, _ = objective_and_gradient(loss, np.full(y.shape, c + step), y)
            if L_try <= L + 1e-15 * max(1.0, abs(L)):
                break
            step *= 0.5
        c += step
        L = L_try
    return c


# ---------------------------------------------------------------------------
# Outer loop
# ---------------------------------------------------------------------------

@dataclass
class _FitState:
    knots: list[tuple[int, float]]
    w: np.ndarray
    c: float


def _fitted(state: _FitState, X: np.ndarray, degree: int) -> np.ndarray:
    if not state.knots:
        return np.zeros(X.shape[0])
    Phi = np.column_stack(
        [hinge_basis(X[:, d], np.asarray([t]), degree)[:, 0] for d, t in state.knots]
    )
    return Phi @ state.w


def _prune_state(state: _FitState, threshold: float) -> None:
    """Drop collapsed knots; rebalance each touched feature's net mass onto
    its largest remaining atom so saturation never drifts."""
    if not state.knots:
        return
    keep = np.abs(state.w) >= threshold
    if np.all(keep):
        return
    dropped_features = {state.knots[i][0] for i in np.flatnonzero(~keep)}
    state.knots = [kn for kn, k in zip(state.knots, keep) if k]
    state.w = state.w[keep]
    groups = np.asarray([d for d, _ in state.knots], dtype=int)
    for d in dropped_features:
        idx = np.flatnonzero(groups == d)
        if idx.size == 0:
            continue
        mass = math.fsum(state.w[idx].tolist())
        if mass != 0.0:
            state.w[idx[int(np.argmax(np.abs(state.w[idx])))]] -= mass


def _feature_masses(state: _FitState, n_features: int) -> np.ndarray:
    masses = np.zeros(n_features)
    for (d, _), wj in zip(state.knots, state.w):
        masses[d] += wj
    return masses


def _measures_from_state(state: _FitState, n_features: int) -> tuple[AtomicMeasure, ...]:
    per_t: list[list[float]] = [[] for _ in range(n_features)]
    per_w: list[list[float]] = [[] for _ in range(n_features)]
    for (d, t), wj in zip(state.knots, state.w):
        per_t[d].append(t)
        per_w[d].append(wj)
    return tuple(
        AtomicMeasure(np.asarray(ts), np.asarray(ws)) if ts else AtomicMeasure.empty()
        for ts, ws in zip(per_t, per_w)
    )


def _knot_move_pass(
    state: _FitState,
    X: np.ndarray,
    y: np.ndarray,
    loss: LossSpec,
    cfg: FitConfig,
    current_objective: float,
) -> float:
    """Try moving each knot to the adjacent data values on its feature,
    keeping a move only when the re-solved objective strictly decreases."""
    obj = current_objective
    for j in range(len(state.knots)):
        if j >= len(state.knots):
            break
        d, t = state.knots[j]
        col = np.unique(X[:, d])
        pos = np.searchsorted(col, t)
        candidates = []
        if pos > 0 and col[pos - 1] < t:
            candidates.append(float(col[pos - 1]))
        right = pos + 1 if pos < col.size and col[pos] == t else pos
        if right < col.size and col[right] > t:
            candidates.append(float(col[right]))
        for t_new in candidates:
            trial = [(dd, (t_new if i == j else tt)) for i, (dd, tt) in enumerate(state.knots)]
            merged: dict[tuple[int, float], float] = {}
            for kn, wj in zip(trial, state.w):
                merged[kn] = merged.get(kn, 0.0) + wj
            trial_knots = list(merged)
            trial_w = np.asarray([merged[kn] for kn in trial_knots])
            w_new, c_new, _ = fully_corrective(
                trial_knots, X, y, loss, cfg.tau, trial_w, state.c,
                degree=cfg.degree, newton_iters=cfg.newton_iters,
                inner_cgm_iters=cfg.inner_cgm_iters, inner_gap_tol=cfg.inner_gap_tol,
            )
            trial_state = _FitState(trial_knots, w_new, c_new)
            L_new, _ = objective_and_gradient(loss, _fitted(trial_state, X, cfg.degree) + c_new, y)
            if L_new < obj - 1e-12 * max(1.0, abs(obj)):
                state.knots, state.w, state.c = trial_state.knots, trial_state.w, trial_state.c
                obj = L_new
                break
    return obj


def _fit_engine(
    X: np.ndarray,
    y: np.ndarray,
    loss: LossSpec,
    cfg: FitConfig,
    init: _FitState | None = None,
) -> tuple[_FitState, FitReport]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("fit data must be finite")
    if X.shape[0] != y.size:
        raise ValueError("X and y disagree on the number of samples")
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise ValueError("features must be scaled to [0, 1] before fitting")
    if loss.kind == "logistic":
        _check_logistic_labels(y)

    # the outer gap cannot beat the precision of the inner solves, so tighten
    # the inner tolerance whenever an unusually small outer tolerance is asked
    inner_tol = min(cfg.inner_gap_tol, 0.1 * cfg.gap_tol)

    report = FitReport()
    if cfg.tau == 0.0:
        c = best_constant(loss, y)
        state = _FitState([], np.zeros(0), c)
        L, _ = objective_and_gradient(loss, np.full(y.shape, c), y)
        report.objectives.append(L)
        report.gaps.append(0.0)
        report.atom_counts.append(0)
        report.l1_norms.append(0.0)
        report.max_abs_masses.append(0.0)
        report.termination = "tau_zero"
        report.gap_threshold = cfg.gap_tol
        report.final_gap = 0.0
        return state, report

    cols = SortedColumns(X)
    if init is None:
        state = _FitState([], np.zeros(0), best_constant(loss, y))
    else:
        state = _FitState(list(init.knots), np.asarray(init.w, dtype=float).copy(), init.c)
        l1 = float(np.abs(state.w).sum())
        if l1 > cfg.tau and l1 > 0.0:
            state.w *= cfg.tau / l1
        state.w, state.c, _ = fully_corrective(
            state.knots, X, y, loss, cfg.tau, state.w, state.c,
            degree=cfg.degree, newton_iters=cfg.newton_iters,
            inner_cgm_iters=cfg.inner_cgm_iters, inner_gap_tol=inner_tol,
        )
        _prune_state(state, cfg.prune_threshold)

    tol = float("nan")
    terminated = False
    for m in range(cfg.max_outer_iters):
        u = _fitted(state, X, cfg.degree)
        L, g = objective_and_gradient(loss, u + state.c, y)
        cg = lmo_gam(g, cols, cfg.tau, degree=cfg.degree)
        gap = duality_gap(g, X, cg, u, degree=cfg.degree).gap
        report.objectives.append(L)
        report.gaps.append(gap)
        report.atom_counts.append(len(state.knots))
        report.l1_norms.append(float(np.abs(state.w).sum()))
        masses = _feature_masses(state, X.shape[1])
        report.max_abs_masses.append(float(np.max(np.abs(masses))) if masses.size else 0.0)
        if m == 0:
            tol = cfg.gap_tol * max(1.0, abs(L))
            report.gap_threshold = tol
        if gap <= tol:
            report.termination = "gap_tol"
            terminated = True
            break
        if not cg.is_zero:
            for t in (cg.t_plus, cg.t_minus):
                key = (cg.feature, float(t))
                if key not in state.knots:
                    state.knots.append(key)
                    state.w = np.append(state.w, 0.0)
        state.w, state.c, info = fully_corrective(
            state.knots, X, y, loss, cfg.tau, state.w, state.c,
            degree=cfg.degree, newton_iters=cfg.newton_iters,
            inner_cgm_iters=cfg.inner_cgm_iters, inner_gap_tol=inner_tol,
        )
        if not info["inner_converged"]:
            report.inner_nonconverged_rounds += 1
        _prune_state(state, cfg.prune_threshold)
        if cfg.knot_move and cfg.degree == 1:
            L_cur, _ = objective_and_gradient(loss, _fitted(state, X, cfg.degree) + state.c, y)
            _knot_move_pass(state, X, y, loss, cfg, L_cur)

    if not terminated:
        # trace entry for the final iterate so the certificate matches the model
        u = _fitted(state, X, cfg.degree)
        L, g = objective_and_gradient(loss, u + state.c, y)
        cg = lmo_gam(g, cols, cfg.tau, degree=cfg.degree)
        gap = duality_gap(g, X, cg, u, degree=cfg.degree).gap
        report.objectives.append(L)
        report.gaps.append(gap)
        report.atom_counts.append(len(state.knots))
        report.l1_norms.append(float(np.abs(state.w).sum()))
        masses = _feature_masses(state, X.shape[1])
        report.max_abs_masses.append(float(np.max(np.abs(masses))) if masses.size else 0.0)
        report.termination = "gap_tol" if gap <= tol else "max_iters"
    report.final_gap = report.gaps[-1]
    return state, report


def _state_from_measures(measures, offset: float) -> _FitState:
    knots: list[tuple[int, float]] = []
    weights: list[float] = []
    for d, mu in enumerate(measures):
        for t, wj in zip(mu.locations, mu.weights):
            knots.append((d, float(t)))
            weights.append(float(wj))
    return _FitState(knots, np.asarray(weights), float(offset))


def fit_univariate(
    data: tuple[np.ndarray, np.ndarray],
    loss: LossSpec,
    cfg: FitConfig,
    init_model: SplineModel | None = None,
) -> tuple[SplineModel, FitReport]:
    """Fit a saturating spline to (x, y) with x already scaled into [0, 1]."""
    x, y = data
    x = np.asarray(x, dtype=float).ravel()
    init = _state_from_measures([init_model.measure], init_model.offset) if init_model else None
    state, report = _fit_engine(x[:, None], y, loss, cfg, init)
    measure = _measures_from_state(state, 1)[0]
    model = SplineModel(offset=state.c, measure=measure, degree=cfg.degree, tau=cfg.tau, loss=loss)
    return model, report


def fit_gam(
    data: Dataset,
    loss: LossSpec,
    cfg: FitConfig,
    scaling: list[tuple[float, float]] | None = None,
    init_model: GamModel | None = None,
) -> tuple[GamModel, FitReport]:
    """Fit an additive model to a pre-scaled Dataset (features in [0, 1]).

    ``scaling`` is stamped into the returned model so raw data can be fed to
    it later; pass the maps used to scale the training features.
    """
    init = _state_from_measures(init_model.measures, init_model.offset) if init_model else None
    state, report = _fit_engine(data.X, data.y, loss, cfg, init)
    measures = _measures_from_state(state, data.n_features)
    model = GamModel(
        offset=state.c,
        measures=measures,
        scaling=tuple(scaling) if scaling is not None else tuple(identity_scaling(data.n_features)),
        degree=cfg.degree,
        tau=cfg.tau,
        loss=loss,
        feature_names=data.feature_names,
    )
    return model, report


def knot_move(model: SplineModel | GamModel, data, loss: LossSpec) -> SplineModel | GamModel:
    """Optional post-step: greedily move knots to adjacent data values.

    Accepts only moves that strictly decrease the objective after a weight
    re-solve, so the objective never increases and no atoms are added.
    Degree-1 models only.
    """
    if model.degree != 1:
        raise ValueError("knot moves are defined for degree-1 models only")
    if isinstance(model, SplineModel):
        x, y = data
        X = np.asarray(x, dtype=float).ravel()[:, None]
        y = np.asarray(y, dtype=float)
        state = _state_from_measures([model.measure], model.offset)
    else:
        X, y = data.X, data.y
        state = _state_from_measures(model.measures, model.offset)
    cfg = FitConfig(tau=model.tau, degree=model.degree)
    L, _ = objective_and_gradient(loss, _fitted(state, X, 1) + state.c, y)
    _knot_move_pass(state, X, y, loss, cfg, L)
    if isinstance(model, SplineModel):
        return SplineModel(
            offset=state.c,
            measure=_measures_from_state(state, 1)[0],
            degree=1,
            tau=model.tau,
            loss=loss,
        )
    return GamModel(
        offset=state.c,
        measures=_measures_from_state(state, X.shape[1]),
        scaling=model.scaling,
        degree=1,
        tau=model.tau,
        loss=loss,
        feature_names=model.feature_names,
    )
