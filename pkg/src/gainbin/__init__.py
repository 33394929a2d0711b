"""Gain-matrix conditioning for MPC steady-state models.

Detects ill-conditioned submatrices with RGA and SVD scans and repairs them
by snapping scaled gains onto a geometric bin grid derived from an RGA
threshold.
"""
from .analysis import (
    AnalysisSummary,
    PairMetrics,
    ScanResult,
    SubmatrixMetrics,
    Thresholds,
    analyze,
    collinear_pairs,
    enumerate_pairs,
    higher_order_scan,
)
from .binning import (
    BinGrid,
    ConditioningPolicy,
    ConditioningResult,
    build_grid,
    condition_matrix,
    max_relative_change,
    select_targets,
    snap,
)
from .model_io import (
    CV,
    MV,
    GainModel,
    ModelFormatError,
    ValidationReport,
    dump_model,
    load_model,
    parse_model,
    save_model,
    validate_model,
)
from .numerics import SingularSpectrum, condition_number, singular_values
from .report import parse_report, serialize_report
from .rga import lambda_2x2, lambda_signed, rga_number, unity_scale
from .scaling import ScaledGainMatrix, typical_move_scale, unscale

__version__ = "0.1.0"
