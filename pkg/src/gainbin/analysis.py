"""Exhaustive submatrix scans of a (scaled) gain matrix.

Every 2x2 submatrix is scored by condition number and RGA number; every
k x k submatrix (k >= 3) by condition number only. All enumerations are in
lexicographic order of (MV index tuple, CV index tuple).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rga as _rga
from .numerics import (
    DEFAULT_SINGULAR_TOL,
    batch_singular_values,
    condition_from_singular_values,
    index_sets,
)
from .scaling import ScaledGainMatrix

# pairs pinned to the grid sit at the threshold up to rounding; they are not "above" it
RGA_FLAG_RTOL = 1e-9


@dataclass(frozen=True)
class Thresholds:
    rga_threshold: float = 12.0
    cn_threshold: float = 59.0
    cn_higher_threshold: float = 100.0
    singular_tol: float = DEFAULT_SINGULAR_TOL

    def __post_init__(self):
        for name in ("rga_threshold", "cn_threshold", "cn_higher_threshold"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 1.0):
                raise ValueError(f"{name} must be a finite number > 1, got {v}")
        if not 0.0 < self.singular_tol < 1e-6:
            raise ValueError(f"singular_tol must lie in (0, 1e-6), got {self.singular_tol}")


@dataclass(frozen=True)
class PairMetrics:
    mv_pair: tuple[int, int]
    cv_pair: tuple[int, int]
    cond: float
    rga_number: float
    rga_flagged: bool
    cn_flagged: bool
    degenerate: str = _rga.NONE
    lam: float = math.nan
    structural: bool = False
    mv_names: tuple[str, str] | None = None
    cv_names: tuple[str, str] | None = None

    @property
    def flagged(self) -> bool:
        return self.rga_flagged or self.cn_flagged

    @property
    def collinear(self) -> bool:
        return math.isinf(self.cond)

    def cells(self) -> list[tuple[int, int]]:
        """(cv, mv) index pairs of the four gains."""
        return [(i, j) for i in self.cv_pair for j in self.mv_pair]


@dataclass(frozen=True)
class SubmatrixMetrics:
    mv_set: tuple[int, ...]
    cv_set: tuple[int, ...]
    cond: float
    mv_names: tuple[str, ...] | None = None
    cv_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.mv_set) != len(self.cv_set) or len(self.mv_set) < 3:
            raise ValueError("SubmatrixMetrics needs equal MV/CV sets of size >= 3")

    @property
    def k(self) -> int:
        return len(self.mv_set)


@dataclass(frozen=True)
class ScanResult:
    """Outcome of a k x k scan.

    Iterating (or indexing) yields the flagged submatrices only; the singular
    and unflagged ones are counted.
    """

    k: int
    threshold: float
    flagged: tuple[SubmatrixMetrics, ...]
    n_singular: int
    n_below: int

    @property
    def total(self) -> int:
        return len(self.flagged) + self.n_singular + self.n_below

    def __iter__(self):
        return iter(self.flagged)

    def __len__(self):
        return len(self.flagged)

    def __getitem__(self, i):
        return self.flagged[i]


def _unpack(scaled, mv_names=None, cv_names=None):
    if isinstance(scaled, ScaledGainMatrix):
        return np.asarray(scaled.values, dtype=float), scaled.mv_names, scaled.cv_names
    return np.asarray(scaled, dtype=float), mv_names, cv_names


def _subsets(values, k):
    n_cv, n_mv = values.shape
    return index_sets(n_cv, k), index_sets(n_mv, k)


def enumerate_pairs(scaled, th: Thresholds | None = None, mv_names=None, cv_names=None) -> list[PairMetrics]:
    """Score every 2x2 submatrix; one record per (MV pair, CV pair)."""
    th = th or Thresholds()
    values, mv_names, cv_names = _unpack(scaled, mv_names, cv_names)
    if values.ndim != 2 or min(values.shape) < 2:
        return []
    rows, cols = _subsets(values, 2)
    sv = batch_singular_values(values, rows, cols)
    cond = condition_from_singular_values(sv, th.singular_tol)

    # (nc, nr) grids of the four corners, flattened in the same order as sv
    ci = cols[:, None, :]
    ri = rows[None, :, :]
    g11 = values[ri[..., 0], ci[..., 0]].ravel()
    g12 = values[ri[..., 0], ci[..., 1]].ravel()
    g21 = values[ri[..., 1], ci[..., 0]].ravel()
    g22 = values[ri[..., 1], ci[..., 1]].ravel()
    lam, number, code = _rga.rga_numbers(g11, g12, g21, g22)

    nz = lambda g: np.abs(g) >= _rga.ZERO_TOL  # noqa: E731
    structural = ~((nz(g11) | nz(g12)) & (nz(g21) | nz(g22)) & (nz(g11) | nz(g21)) & (nz(g12) | nz(g22)))
    rga_flag = (code == 0) & np.isfinite(number) & (number >= th.rga_threshold * (1.0 + RGA_FLAG_RTOL))
    cn_flag = np.isfinite(cond) & (cond >= th.cn_threshold)

    out = []
    n = 0
    for c in cols:
        mvp = (int(c[0]), int(c[1]))
        for r in rows:
            cvp = (int(r[0]), int(r[1]))
            out.append(PairMetrics(
                mv_pair=mvp,
                cv_pair=cvp,
                cond=float(cond[n]),
                rga_number=float(number[n]),
                rga_flagged=bool(rga_flag[n]),
                cn_flagged=bool(cn_flag[n]),
                degenerate=_rga.DEGENERATE_KINDS[code[n]],
                lam=float(lam[n]),
                structural=bool(structural[n]),
                mv_names=None if mv_names is None else (mv_names[mvp[0]], mv_names[mvp[1]]),
                cv_names=None if cv_names is None else (cv_names[cvp[0]], cv_names[cvp[1]]),
            ))
            n += 1
    return out


def collinear_pairs(values, singular_tol: float = DEFAULT_SINGULAR_TOL):
    """(mv_pair, cv_pair) of every 2x2 submatrix with a vanishing determinant.

    A pair counts when ``|det| < singular_tol * (product of its two largest
    entry magnitudes)`` and each of its rows and columns holds a non-zero
    entry; submatrices with a zero row or column are structural, not
    collinear, and are left out.
    """
    values = _unpack(values)[0]
    if values.ndim != 2 or min(values.shape) < 2:
        return []
    rows, cols = _subsets(values, 2)
    ci = cols[:, None, :]
    ri = rows[None, :, :]
    g11 = values[ri[..., 0], ci[..., 0]]
    g12 = values[ri[..., 0], ci[..., 1]]
    g21 = values[ri[..., 1], ci[..., 0]]
    g22 = values[ri[..., 1], ci[..., 1]]
    det = np.abs(g11 * g22 - g12 * g21)
    mags = np.sort(np.abs(np.stack([g11, g12, g21, g22], axis=-1)), axis=-1)
    scale = mags[..., 3] * mags[..., 2]
    nz = lambda g: np.abs(g) >= _rga.ZERO_TOL  # noqa: E731
    full = (nz(g11) | nz(g12)) & (nz(g21) | nz(g22)) & (nz(g11) | nz(g21)) & (nz(g12) | nz(g22))
    hit = full & (det < singular_tol * scale)
    out = []
    for a, c in enumerate(cols):
        for b, r in enumerate(rows):
            if hit[a, b]:
                out.append(((int(c[0]), int(c[1])), (int(r[0]), int(r[1]))))
    return out


def higher_order_scan(values, k: int, cn_threshold: float = 100.0,
                      singular_tol: float = DEFAULT_SINGULAR_TOL,
                      mv_names=None, cv_names=None) -> ScanResult:
    """Condition numbers of every k x k submatrix; keeps the finite ones above ``cn_threshold``."""
    values, mv_names, cv_names = _unpack(values, mv_names, cv_names)
    n_cv, n_mv = values.shape
    if not 3 <= k <= min(n_cv, n_mv):
        raise ValueError(f"k must satisfy 3 <= k <= {min(n_cv, n_mv)}, got {k}")
    rows, cols = _subsets(values, k)
    cond = condition_from_singular_values(batch_singular_values(values, rows, cols), singular_tol)
    singular = np.isinf(cond)
    hit = ~singular & (cond > cn_threshold)
    flagged = []
    n = 0
    for c in cols:
        for r in rows:
            if hit[n]:
                mvs = tuple(int(x) for x in c)
                cvs = tuple(int(x) for x in r)
                flagged.append(SubmatrixMetrics(
                    mvs, cvs, float(cond[n]),
                    None if mv_names is None else tuple(mv_names[x] for x in mvs),
                    None if cv_names is None else tuple(cv_names[x] for x in cvs),
                ))
            n += 1
    return ScanResult(k, cn_threshold, tuple(flagged), int(singular.sum()), int((~singular & ~hit).sum()))


@dataclass(frozen=True)
class AnalysisSummary:
    """Pair records plus collinear pairs and higher-order scans of one matrix."""

    pairs: tuple[PairMetrics, ...]
    collinear: tuple
    higher: dict = field(default_factory=dict)
    thresholds: Thresholds = field(default_factory=Thresholds)
    mv_names: tuple[str, ...] | None = None
    cv_names: tuple[str, ...] | None = None

    @property
    def rga_flagged(self) -> list[PairMetrics]:
        return [p for p in self.pairs if p.rga_flagged]

    @property
    def cn_flagged(self) -> list[PairMetrics]:
        return [p for p in self.pairs if p.cn_flagged]

    @property
    def flagged(self) -> list[PairMetrics]:
        return [p for p in self.pairs if p.flagged]

    def counts(self) -> dict:
        out = {
            "pairs": len(self.pairs),
            "rga_flagged": len(self.rga_flagged),
            "cn_flagged": len(self.cn_flagged),
            "collinear": len(self.collinear),
        }
        for k, scan in sorted(self.higher.items()):
            out[f"cn_{k}x{k}"] = len(scan)
        return out


def analyze(scaled, th: Thresholds | None = None, orders=None, mv_names=None, cv_names=None) -> AnalysisSummary:
    """Run the pair scan, collinear detection and k x k scans.

    ``orders`` defaults to every k from 3 to min(n_cv, n_mv); pass an empty
    tuple to skip the higher-order work.
    """
    th = th or Thresholds()
    values, mv_names, cv_names = _unpack(scaled, mv_names, cv_names)
    if orders is None:
        orders = range(3, min(values.shape) + 1)
    higher = {
        k: higher_order_scan(values, k, th.cn_higher_threshold, th.singular_tol, mv_names, cv_names)
        for k in orders
    }
    return AnalysisSummary(
        pairs=tuple(enumerate_pairs(values, th, mv_names, cv_names)),
        collinear=tuple(collinear_pairs(values, th.singular_tol)),
        higher=higher,
        thresholds=th,
        mv_names=None if mv_names is None else tuple(mv_names),
        cv_names=None if cv_names is None else tuple(cv_names),
    )
