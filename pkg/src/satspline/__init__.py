"""Saturating splines and sparse additive models.

Fits degree-1 splines that extend as constants outside [0, 1] (and
degree-2 splines that saturate to linear) by a fully-corrective
conditional gradient method over signed atomic measures.  Knot locations
and, in the additive-model case, active features are selected by the
optimization itself under a single total-variation budget.
"""

from .baseline import (
    SaturatingHingeBasis,
    baseline_to_model,
    build_basis,
    fit_lasso,
    fit_lasso_path,
    uniform_knots,
)
from .losses import (
    DEFAULT_PSEUDO_HUBER_DELTA,
    LossSpec,
    loss_grad,
    loss_hess,
    loss_value,
    objective_and_gradient,
)
from .measures import (
    AtomicMeasure,
    Dataset,
    GamModel,
    ModelFormatError,
    SplineModel,
    apply_scaling,
    combine_measures,
    deserialize_model,
    eval_spline,
    fit_scaling,
    hinge_basis,
    prune,
    serialize_model,
)
from .oracle import (
    ConditionalGradient,
    GapCertificate,
    HingeCorrelator,
    SortedColumns,
    duality_gap,
    hinge_correlation,
    lmo_degree2,
    lmo_gam,
    lmo_univariate,
)
from .path import (
    PathEntry,
    PathResult,
    auto_tau_grid,
    default_tau_grid,
    error_rate,
    fit_path,
    holdout_select,
    mse,
    rmse,
)
from .solver import (
    FitConfig,
    FitReport,
    best_constant,
    fit_gam,
    fit_univariate,
    fully_corrective,
    knot_move,
    lmo_weights,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "ConditionalGradient",
    "Dataset",
    "DEFAULT_PSEUDO_HUBER_DELTA",
    "FitConfig",
    "FitReport",
    "GamModel",
    "GapCertificate",
    "HingeCorrelator",
    "LossSpec",
    "ModelFormatError",
    "PathEntry",
    "PathResult",
    "SaturatingHingeBasis",
    "SortedColumns",
    "SplineModel",
    "apply_scaling",
    "auto_tau_grid",
    "baseline_to_model",
    "best_constant",
    "build_basis",
    "combine_measures",
    "default_tau_grid",
    "deserialize_model",
    "duality_gap",
    "error_rate",
    "eval_spline",
    "fit_gam",
    "fit_lasso",
    "fit_lasso_path",
    "fit_path",
    "fit_scaling",
    "fit_univariate",
    "fully_corrective",
    "hinge_basis",
    "hinge_correlation",
    "holdout_select",
    "knot_move",
    "lmo_degree2",
    "lmo_gam",
    "lmo_univariate",
    "lmo_weights",
    "loss_grad",
    "loss_hess",
    "loss_value",
    "mse",
    "objective_and_gradient",
    "prune",
    "rmse",
    "serialize_model",
    "uniform_knots",
]
