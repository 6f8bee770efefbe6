"""Command-line front end: CSV in, fitted models and curve data out.

Subcommands: fit, predict, path, cv, baseline, export-curves.  All
randomness (validation splits) flows from --seed; identical inputs and
seed produce byte-identical outputs.  Exit codes: 0 success, 2 input or
validation error, 3 solver stopped at the iteration cap with the gap
above tolerance (outputs are still written, flagged "converged": false).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .baseline import baseline_to_model, build_basis, fit_lasso_path
from .losses import DEFAULT_PSEUDO_HUBER_DELTA, LossSpec
from .measures import (
    Dataset,
    GamModel,
    ModelFormatError,
    SplineModel,
    apply_scaling,
    deserialize_model,
    fit_scaling,
    serialize_model,
    unscale_value,
)
from .path import (
    auto_tau_grid,
    default_tau_grid,
    fit_path,
    holdout_select,
    split_holdout,
    subset_dataset,
)
from .solver import FitConfig, fit_gam


class CliInputError(ValueError):
    """Input or flag validation problem; maps to exit code 2."""


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def ingest_csv(path: str | Path, target_column: str) -> Dataset:
    """Read a numeric CSV with a header row into a Dataset.

    The target column is split out as the response; all other columns
    become features.  Categorical integer codes pass through as numbers.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CliInputError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(text.splitlines()))
    rows = [r for r in rows if r]
    if not rows:
        raise CliInputError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if target_column not in header:
        raise CliInputError(f"target column {target_column!r} not found; header has {header}")
    t_idx = header.index(target_column)
    feature_names = tuple(h for i, h in enumerate(header) if i != t_idx)
    if not feature_names:
        raise CliInputError("no feature columns besides the target")
    data = []
    ys = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CliInputError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        parsed = []
        for name, cell in zip(header, row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise CliInputError(
                    f"non-numeric value {cell.strip()!r} at line {lineno}, column {name!r}"
                ) from None
        ys.append(parsed[t_idx])
        data.append([v for i, v in enumerate(parsed) if i != t_idx])
    if not data:
        raise CliInputError(f"{path} has a header but no data rows")
    try:
        return Dataset(np.asarray(data), np.asarray(ys), feature_names)
    except ValueError as exc:
        raise CliInputError(str(exc)) from exc


def check_labels(loss: LossSpec, y: np.ndarray) -> None:
    if loss.kind != "logistic":
        return
    values = set(np.unique(y).tolist())
    if values <= {0.0, 1.0}:
        raise CliInputError(
            "logistic loss uses labels in {-1, +1}; found {0, 1} — remap 0 to -1 first"
        )
    if not values <= {-1.0, 1.0}:
        raise CliInputError(f"logistic loss uses labels in {{-1, +1}}; found {sorted(values)[:5]}")


# ---------------------------------------------------------------------------
# Shared flag handling
# ---------------------------------------------------------------------------

def _loss_from_args(args) -> LossSpec:
    kind = args.loss.replace("-", "_")
    if args.delta is not None and kind != "pseudo_huber":
        raise CliInputError("--delta only applies to --loss pseudo-huber")
    if kind == "pseudo_huber":
        return LossSpec(kind, args.delta if args.delta is not None else DEFAULT_PSEUDO_HUBER_DELTA)
    return LossSpec(kind)


def _config_from_args(args, tau: float) -> FitConfig:
    return FitConfig(
        tau=tau,
        gap_tol=args.gap_tol,
        max_outer_iters=args.max_iters,
        degree=args.degree,
    )


def _tau_grid_from_args(args, y: np.ndarray) -> np.ndarray:
    given_range = args.tau_min is not None or args.tau_max is not None
    if args.tau is not None and given_range:
        raise CliInputError("give either --tau or a --tau-min/--tau-max range, not both")
    if args.tau is not None:
        return np.asarray([args.tau])
    if given_range:
        if args.tau_min is None or args.tau_max is None:
            raise CliInputError("--tau-min and --tau-max must be given together")
        return default_tau_grid(args.tau_min, args.tau_max, args.num_tau)
    return auto_tau_grid(y, args.num_tau)


def _write_bytes(path: str | Path, payload: bytes) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(payload)


def _write_text(path: str | Path, payload: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(payload, encoding="utf-8")


def _report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=1)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_fit(args) -> int:
    loss = _loss_from_args(args)
    data = ingest_csv(args.input, args.target)
    check_labels(loss, data.y)
    if args.tau is None:
        raise CliInputError("fit requires --tau (use the path/cv subcommands to sweep)")
    maps = fit_scaling(data.X)
    scaled = Dataset(apply_scaling(maps, data.X), data.y, data.feature_names)
    cfg = _config_from_args(args, args.tau)
    model, report = fit_gam(scaled, loss, cfg, scaling=maps)
    out = Path(args.out)
    _write_bytes(out, serialize_model(model))
    _write_text(out.with_suffix(out.suffix + ".report.json"), _report_json(report))
    print(f"fit: objective {report.objectives[-1]:.8g}, gap {report.final_gap:.3g}, "
          f"atoms {sum(model.atom_counts)}, features {len(model.selected_features())}/{model.n_features}")
    return 0 if report.converged else 3


def cmd_predict(args) -> int:
    try:
        model = deserialize_model(Path(args.model).read_bytes())
    except (OSError, ModelFormatError) as exc:
        raise CliInputError(f"cannot load model: {exc}") from exc
    if isinstance(model, SplineModel):
        model = GamModel(
            offset=model.offset, measures=(model.measure,), scaling=((0.0, 1.0),),
            degree=model.degree, tau=model.tau, loss=model.loss,
        )
    X = _feature_matrix_for_model(model, args)
    preds = model.evaluate(X)
    lines = ["row_index,prediction"]
    lines += [f"{i},{format(p, '.17g')}" for i, p in enumerate(preds)]
    _write_text(args.out, "\n".join(lines) + "\n")
    print(f"predict: wrote {len(preds)} predictions to {args.out}")
    return 0


def _feature_matrix_for_model(model: GamModel, args) -> np.ndarray:
    """Select feature columns from the input CSV, by name when possible."""
    path = Path(args.input)
    try:
        rows = [r for r in csv.reader(path.read_text(encoding="utf-8").splitlines()) if r]
    except OSError as exc:
        raise CliInputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise CliInputError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    names = model.feature_names
    if names is not None and all(n in header for n in names):
        col_idx = [header.index(n) for n in names]
    else:
        keep = [i for i, h in enumerate(header) if h != args.target]
        if len(keep) != model.n_features:
            raise CliInputError(
                f"model expects {model.n_features} features but {path} provides {len(keep)}"
            )
        col_idx = keep
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        vals = []
        for i in col_idx:
            try:
                vals.append(float(row[i]))
            except (ValueError, IndexError):
                raise CliInputError(
                    f"non-numeric or missing value at line {lineno}, column {header[i]!r}"
                ) from None
        out.append(vals)
    if not out:
        raise CliInputError(f"{path} has no data rows")
    return np.asarray(out)


def _load_scaled(args):
    """Common preamble: ingest, validate labels, scale, build the tau grid."""
    loss = _loss_from_args(args)
    data = ingest_csv(args.input, args.target)
    check_labels(loss, data.y)
    maps = fit_scaling(data.X)
    scaled = Dataset(apply_scaling(maps, data.X), data.y, data.feature_names)
    taus = _tau_grid_from_args(args, data.y)
    cfg = _config_from_args(args, float(taus[0]))
    return loss, scaled, maps, taus, cfg


def cmd_path(args) -> int:
    loss, scaled, maps, taus, cfg = _load_scaled(args)
    if args.holdout_fraction > 0:
        rng = np.random.default_rng(np.random.SeedSequence(args.seed).spawn(1)[0])
        train_idx, hold_idx = split_holdout(scaled.n_samples, args.holdout_fraction, rng)
        result = fit_path(
            subset_dataset(scaled, train_idx), loss, taus, cfg,
            val_data=subset_dataset(scaled, hold_idx), scaling=maps,
        )
    else:
        result = fit_path(scaled, loss, taus, cfg, scaling=maps)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_text(out_dir / "path.csv", result.to_csv())
    for i, entry in enumerate(result.entries):
        _write_bytes(out_dir / f"model_{i:03d}.json", serialize_model(entry.model))
    print(f"path: wrote {len(result.entries)} models and path.csv to {out_dir}")
    return 0


def cmd_cv(args) -> int:
    loss, scaled, maps, taus, cfg = _load_scaled(args)
    best_tau, path_result = holdout_select(
        scaled, loss, taus, args.holdout_fraction, args.seed, cfg,
        scaling=maps, trials=args.trials,
    )
    model, report = fit_gam(scaled, loss, replace(cfg, tau=float(best_tau)), scaling=maps)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_bytes(out_dir / "model.json", serialize_model(model))
    _write_text(out_dir / "path.csv", path_result.to_csv())
    summary = {
        "best_tau": best_tau,
        "trials": args.trials,
        "holdout_fraction": args.holdout_fraction,
        "seed": args.seed,
        "metric": path_result.metric_name,
        "final_objective": report.objectives[-1],
        "converged": report.converged,
        "n_features_selected": len(model.selected_features()),
    }
    _write_text(out_dir / "cv.json", json.dumps(summary, indent=1))
    print(f"cv: best tau {best_tau:.6g}, selected {summary['n_features_selected']} features")
    return 0 if report.converged else 3


def cmd_baseline(args) -> int:
    loss = _loss_from_args(args)
    data = ingest_csv(args.input, args.target)
    check_labels(loss, data.y)
    maps = fit_scaling(data.X)
    Xs = apply_scaling(maps, data.X)
    design, basis = build_basis(Xs, args.knots_per_feature)
    try:
        lambdas = [float(v) for v in args.lambda_grid.split(",") if v.strip()]
    except ValueError as exc:
        raise CliInputError(f"bad --lambda-grid: {exc}") from exc
    if not lambdas:
        raise CliInputError("--lambda-grid must list at least one value")
    results = fit_lasso_path(design, data.y, loss, lambdas)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["lambda,train_objective,tau_equivalent,n_atoms"]
    for i, (lam, theta, intercept, info) in enumerate(results):
        model = baseline_to_model(theta, intercept, basis, loss, scaling=maps)
        _write_bytes(out_dir / f"baseline_{i:03d}.json", serialize_model(model))
        lines.append(
            f"{format(lam, '.17g')},{format(info['objective'], '.17g')},"
            f"{format(model.tau, '.17g')},{sum(model.atom_counts)}"
        )
    _write_text(out_dir / "baseline.csv", "\n".join(lines) + "\n")
    print(f"baseline: wrote {len(results)} fits to {out_dir}")
    return 0


def cmd_export_curves(args) -> int:
    try:
        model = deserialize_model(Path(args.model).read_bytes())
    except (OSError, ModelFormatError) as exc:
        raise CliInputError(f"cannot load model: {exc}") from exc
    if isinstance(model, SplineModel):
        model = GamModel(
            offset=model.offset, measures=(model.measure,), scaling=((0.0, 1.0),),
            degree=model.degree, tau=model.tau, loss=model.loss,
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(-0.1, 1.1, args.grid_points)
    for d in range(model.n_features):
        mu = model.measures[d]
        xs = np.unique(np.concatenate([grid, mu.locations]))
        vals = model.coordinate_values(d, xs)
        raw = unscale_value(model.scaling[d], xs)
        knot_set = set(mu.locations.tolist())
        lines = ["x_scaled,x_raw,value,is_knot"]
        for xv, rv, fv in zip(xs, raw, np.atleast_1d(vals)):
            lines.append(
                f"{format(xv, '.17g')},{format(rv, '.17g')},{format(fv, '.17g')},"
                f"{1 if xv in knot_set else 0}"
            )
        name = None
        if model.feature_names is not None:
            name = model.feature_names[d]
        stem = f"curves_feature_{d:03d}" + (f"_{name}" if name else "")
        _write_text(out_dir / f"{stem}.csv", "\n".join(lines) + "\n")
    print(f"export-curves: wrote {model.n_features} files to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_shared_flags(p: argparse.ArgumentParser, *, needs_input: bool = True) -> None:
    if needs_input:
        p.add_argument("--input", required=True, help="input CSV with a header row")
        p.add_argument("--target", required=True, help="name of the response column")
    p.add_argument("--loss", choices=["square", "logistic", "pseudo-huber"], default="square")
    p.add_argument("--delta", type=float, default=None,
                   help=f"pseudo-Huber transition (default {DEFAULT_PSEUDO_HUBER_DELTA})")
    p.add_argument("--degree", type=int, choices=[1, 2], default=1)
    p.add_argument("--tau", type=float, default=None, help="regularization level")
    p.add_argument("--tau-min", type=float, default=None)
    p.add_argument("--tau-max", type=float, default=None)
    p.add_argument("--num-tau", type=int, default=50)
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file (fit/predict) or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satspline",
        description="Fit saturating splines and sparse additive models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one model at a fixed tau")
    _add_shared_flags(p_fit)

    p_pred = sub.add_parser("predict", help="apply a fitted model to new rows")
    p_pred.add_argument("--model", required=True, help="model JSON produced by fit/cv")
    p_pred.add_argument("--input", required=True)
    p_pred.add_argument("--target", default=None, help="response column to ignore, if present")
    p_pred.add_argument("--out", required=True)

    p_path = sub.add_parser("path", help="fit a warm-started regularization path")
    _add_shared_flags(p_path)
    p_path.add_argument("--holdout-fraction", type=float, default=0.0,
                        help="if > 0, score each tau on a held-out split")

    p_cv = sub.add_parser("cv", help="select tau by random holdout and refit")
    _add_shared_flags(p_cv)
    p_cv.add_argument("--holdout-fraction", type=float, default=0.2)
    p_cv.add_argument("--trials", type=int, default=1,
                      help="number of random splits; best tau is the mean of the winners")

    p_base = sub.add_parser("baseline", help="gridded saturating-hinge lasso cross-check")
    _add_shared_flags(p_base)
    p_base.add_argument("--knots-per-feature", type=int, default=20)
    p_base.add_argument("--lambda-grid", default="0.01,0.1,1,10,100",
                        help="comma-separated penalty levels")

    p_exp = sub.add_parser("export-curves", help="sample fitted coordinate functions to CSV")
    p_exp.add_argument("--model", required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--grid-points", type=int, default=256)
    return parser


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "path": cmd_path,
    "cv": cmd_cv,
    "baseline": cmd_baseline,
    "export-curves": cmd_export_curves,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CliInputError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
