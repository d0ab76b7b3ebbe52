"""Cellwise-robust multivariate statistics.

Cell flagging (marginal filter and DDC-lite), robust location, covariance
and plug-in regression, executable cellwise breakdown attacks, and robust
correspondence analysis, with CSV input and JSON/SVG output.
"""

from .breakdown import (
    AttackResult,
    BreakdownCurve,
    breakdown_curve,
    contaminate,
    contamination_probability,
    empirical_breakdown,
    hyperplane_attack_location,
    implosion_attack,
    regression_attack,
    spread_placement,
)
from .ca import (
    CASolution,
    ContingencyTable,
    CorrespondenceAnalysis,
    biplot,
    classical_ca,
    profile_matrix,
    robust_ca,
    robust_pca_zero_center,
)
from .detect import DEFAULT_CUTOFF, CellFlagger, CellFlags, cellmap, ddc, flag_univariate
from .estimate import (
    CellwiseCovariance,
    classical,
    coordwise_location,
    em_mle,
    pairwise_cov,
    spatial_median,
    two_step_cov,
)
from .exceptions import (
    CellwiseError,
    ConvergenceError,
    DegenerateScaleError,
    ParseError,
    SingularMatrixError,
)
from .io import read_csv, write_csv, write_json
from .matrix import CovModel, DataMatrix, SVDResult, mahalanobis_sq, psd_repair, svd
from .regress import PlugInRegressor, RegFit, ar_design, ar_fit, plugin_regression
from .univariate import mad, qn, robust_scale, spearman_corr, univariate_mcd

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
