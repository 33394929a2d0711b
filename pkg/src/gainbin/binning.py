"""Bin-grid conditioning of a typical-move scaled gain matrix.

For an RGA threshold ``t`` let ``k = 1 - 1/t``. The permitted gain
magnitudes are the geometric sequence ``B_i = k**i`` (``B_0 = 1``). Any 2x2
whose four magnitudes all sit on the grid has a magnitude ratio
``|g12 g21| / |g11 g22| = k**d`` for an integer ``d``: ``d = 0`` is exactly
collinear and ``|d| >= 1`` keeps the RGA number at or below ``t``. Snapping a
gain to its nearest boundary moves it by at most
``(1/t) / (2 - 1/t)`` relative, the worst case being the midpoint of the
first interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .analysis import AnalysisSummary, Thresholds, analyze
from .model_io import GainModel
from .rga import ZERO_TOL, ratio_for_threshold
from .scaling import ScaledGainMatrix, typical_move_scale, unscale

# gains this close (relative) to a boundary are treated as already on it
ON_GRID_RTOL = 1e-12

SELECTION_MODES = ("rga_flagged", "rga_or_cn_flagged", "all_nonzero", "explicit")


class GridCoverageError(ValueError):
    """The gain lies outside the range covered by the grid."""


@dataclass(frozen=True, eq=False)
class BinGrid:
    rga_threshold: float
    ratio: float
    boundaries: np.ndarray
    b0: float = 1.0

    @property
    def n(self) -> int:
        """Number of bins (one fewer than the number of boundaries)."""
        return len(self.boundaries) - 1

    @property
    def widths(self) -> np.ndarray:
        return self.boundaries[:-1] - self.boundaries[1:]

    def boundary(self, i: int) -> float:
        return self.b0 * self.ratio ** i


def _check_threshold(rga_threshold):
    if not (math.isfinite(rga_threshold) and rga_threshold > 1.0):
        raise ValueError(f"rga_threshold must be a finite number > 1, got {rga_threshold}")


def build_grid(rga_threshold: float, min_magnitude: float | None = None, n: int | None = None) -> BinGrid:
    """Boundaries ``1, k, k**2, ..., k**n`` for ``k = 1 - 1/rga_threshold``.

    Give either ``min_magnitude`` (``n`` becomes the smallest integer with
    ``k**n <= min_magnitude``) or an explicit bin count ``n``.
    """
    _check_threshold(rga_threshold)
    k = ratio_for_threshold(rga_threshold)
    if n is None:
        if min_magnitude is None:
            raise ValueError("build_grid needs min_magnitude or n")
        if not 0.0 < min_magnitude <= 1.0:
            raise ValueError(f"min_magnitude must lie in (0, 1], got {min_magnitude}")
        n = max(0, math.ceil(math.log(min_magnitude) / math.log(k)))
        # the log estimate can be one off either way
        while k ** n > min_magnitude:
            n += 1
        while n > 0 and k ** (n - 1) <= min_magnitude:
            n -= 1
    elif n < 0:
        raise ValueError("n must be non-negative")
    b = k ** np.arange(n + 1, dtype=float)
    b.setflags(write=False)
    return BinGrid(rga_threshold, k, b)


def max_relative_change(rga_threshold: float) -> float:
    """Worst-case snap change in percent: ``100 * (1/t) / (2 - 1/t)``."""
    _check_threshold(rga_threshold)
    inv = 1.0 / rga_threshold
    return 100.0 * inv / (2.0 - inv)


class Snap(NamedTuple):
    binned: float
    bin_index: int
    change_pct: float


def snap(g: float, grid: BinGrid) -> Snap:
    """Move ``g`` to the nearest grid boundary, keeping its sign.

    A gain in ``[B_{i+1}, B_i)`` goes up to ``B_i`` only if it lies strictly
    above the interval midpoint; a gain exactly at the midpoint goes down.
    """
    a = abs(g)
    if a == 0.0 or not math.isfinite(a):
        raise ValueError(f"cannot snap gain {g}")
    b = grid.boundaries
    j = int(round(math.log(a / grid.b0) / math.log(grid.ratio)))
    if 0 <= j <= grid.n and abs(a - b[j]) <= ON_GRID_RTOL * b[j]:
        return Snap(math.copysign(float(b[j]), g), j, 0.0)
    if a > b[0]:
        raise GridCoverageError(f"|{g}| exceeds the top boundary {b[0]}")
    if a < b[-1]:
        raise GridCoverageError(f"|{g}| lies below the last boundary {b[-1]}; extend the grid")
    i = min(max(j - 1, 0), grid.n - 1)
    while b[i + 1] > a:
        i += 1
    while b[i] <= a:
        i -= 1
    hi, lo = b[i], b[i + 1]
    if a > (hi + lo) / 2.0:
        out, idx = hi, i
    else:
        out, idx = lo, i + 1
    binned = math.copysign(float(out), g)
    return Snap(binned, idx, (binned - g) / g * 100.0)


@dataclass(frozen=True)
class ConditioningPolicy:
    thresholds: Thresholds = field(default_factory=Thresholds)
    selection_mode: str = "rga_flagged"
    include: frozenset = frozenset()
    exclude: frozenset = frozenset()

    def __post_init__(self):
        if self.selection_mode not in SELECTION_MODES:
            raise ValueError(f"selection_mode must be one of {SELECTION_MODES}")
        object.__setattr__(self, "include", frozenset(tuple(c) for c in self.include))
        object.__setattr__(self, "exclude", frozenset(tuple(c) for c in self.exclude))
        both = self.include & self.exclude
        if both:
            raise ValueError(f"cells both included and excluded: {sorted(both)}")


def select_targets(scaled: ScaledGainMatrix, pairs, policy: ConditioningPolicy) -> set[tuple[str, str]]:
    """Cells (cv name, mv name) to snap, according to ``policy``."""
    cvs, mvs = list(scaled.cv_names), list(scaled.mv_names)
    for cv, mv in policy.include | policy.exclude:
        if cv not in cvs:
            raise KeyError(f"unknown CV {cv!r}")
        if mv not in mvs:
            raise KeyError(f"unknown MV {mv!r}")
    values = scaled.values
    mode = policy.selection_mode
    cells: set[tuple[int, int]] = set()
    if mode == "all_nonzero":
        cells = {(int(i), int(j)) for i, j in zip(*np.nonzero(np.abs(values) >= ZERO_TOL))}
    elif mode in ("rga_flagged", "rga_or_cn_flagged"):
        for p in pairs:
            if p.rga_flagged or (mode == "rga_or_cn_flagged" and p.cn_flagged):
                cells.update(p.cells())
    names = {(cvs[i], mvs[j]) for i, j in cells}
    names |= set(policy.include)
    names -= set(policy.exclude)
    return {(cv, mv) for cv, mv in names if abs(values[cvs.index(cv), mvs.index(mv)]) >= ZERO_TOL}


@dataclass(frozen=True, eq=False)
class ConditioningResult:
    model: GainModel
    scaled: ScaledGainMatrix
    grid: BinGrid
    targets: frozenset
    binned: np.ndarray
    bin_index: np.ndarray  # -1 where the gain was not selected
    change_pct: np.ndarray
    engineering: np.ndarray
    flags_before: AnalysisSummary
    flags_after: AnalysisSummary
    policy: ConditioningPolicy

    @property
    def adjusted(self) -> np.ndarray:
        return self.change_pct != 0.0

    @property
    def selected(self) -> np.ndarray:
        return self.bin_index >= 0

    def to_model(self) -> GainModel:
        """The conditioned model in engineering units (same names and move sizes)."""
        return self.model.with_gains(self.engineering)


def condition_matrix(model: GainModel, policy: ConditioningPolicy | None = None, orders=None) -> ConditioningResult:
    """Scale, flag, snap the selected gains to the bin grid, and re-analyse.

    ``orders`` is forwarded to :func:`gainbin.analysis.analyze` for both the
    before and after summaries.
    """
    policy = policy or ConditioningPolicy()
    th = policy.thresholds
    scaled = typical_move_scale(model)
    before = analyze(scaled, th, orders)
    targets = select_targets(scaled, before.pairs, policy)
    cvs, mvs = list(scaled.cv_names), list(scaled.mv_names)
    cells = sorted((cvs.index(cv), mvs.index(mv)) for cv, mv in targets)

    values = scaled.values
    if cells:
        min_mag = min(abs(values[i, j]) for i, j in cells)
        grid = build_grid(th.rga_threshold, min_magnitude=min(min_mag, 1.0))
    else:
        grid = build_grid(th.rga_threshold, n=0)

    binned = np.array(values, dtype=float, copy=True)
    bin_index = np.full(values.shape, -1, dtype=np.int64)
    change = np.zeros(values.shape)
    for i, j in cells:
        s = snap(values[i, j], grid)
        binned[i, j] = s.binned
        bin_index[i, j] = s.bin_index
        change[i, j] = s.change_pct

    # untouched gains are copied verbatim so they survive the unscale exactly
    engineering = np.where(change != 0.0, unscale(scaled, binned), model.gains)
    after = analyze(binned, th, orders, scaled.mv_names, scaled.cv_names)
    return ConditioningResult(
        model=model,
        scaled=scaled,
        grid=grid,
        targets=frozenset(targets),
        binned=binned,
        bin_index=bin_index,
        change_pct=change,
        engineering=engineering,
        flags_before=before,
        flags_after=after,
        policy=policy,
    )

