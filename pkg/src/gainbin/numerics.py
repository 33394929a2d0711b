"""Singular values and condition numbers of small dense matrices.

The kernel is a one-sided (Hestenes) Jacobi SVD. It orthogonalises the
columns of a tall copy of the matrix with plane rotations; the singular
values are then the column norms. Jacobi is slower than bidiagonalisation
but computes small singular values to high relative accuracy, which is what
matters when telling near-collinear gain pairs apart from exact ones.

Two interchangeable paths exist for batch work:

* ``_scan_jit``: explicit loops, compiled with numba when available;
* ``_scan_numpy``: the same rotations vectorised across the batch axis.

:func:`batch_singular_values` picks the compiled path unless
``GAINBIN_DISABLE_JIT`` is set.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._jit import HAVE_NUMBA, njit

DEFAULT_SINGULAR_TOL = 1e-12

_ROT_TOL = 1e-15
_MAX_SWEEPS = 60


@dataclass(frozen=True)
class SingularSpectrum:
    """Descending singular values of a matrix (U and V are not kept)."""

    values: np.ndarray

    @property
    def largest(self) -> float:
        return float(self.values[0])

    @property
    def smallest(self) -> float:
        return float(self.values[-1])

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values.tolist())


# --------------------------------------------------------------------------
# compiled kernel
# --------------------------------------------------------------------------

@njit
def _jacobi_sv(a):
    """Singular values of ``a`` (m x n, m >= n), descending. Overwrites ``a``."""
    m, n = a.shape
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha += a[i, p] * a[i, p]
                    beta += a[i, q] * a[i, q]
                    gamma += a[i, p] * a[i, q]
                if abs(gamma) <= _ROT_TOL * np.sqrt(alpha) * np.sqrt(beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = 1.0 / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                    if zeta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    ap = a[i, p]
                    aq = a[i, q]
                    a[i, p] = c * ap - s * aq
                    a[i, q] = s * ap + c * aq
        if not rotated:
            break
    sv = np.empty(n)
    for j in range(n):
        acc = 0.0
        for i in range(m):
            acc += a[i, j] * a[i, j]
        sv[j] = np.sqrt(acc)
    return np.sort(sv)[::-1].copy()


@njit
def _scan_jit(values, rows, cols):
    nr, kr = rows.shape
    nc, kc = cols.shape
    tall = kr >= kc
    m = kr if tall else kc
    n = kc if tall else kr
    out = np.empty((nc * nr, n))
    work = np.empty((m, n))
    idx = 0
    for c in range(nc):
        for r in range(nr):
            for i in range(kr):
                for j in range(kc):
                    if tall:
                        work[i, j] = values[rows[r, i], cols[c, j]]
                    else:
                        work[j, i] = values[rows[r, i], cols[c, j]]
            out[idx, :] = _jacobi_sv(work)
            idx += 1
    return out


# --------------------------------------------------------------------------
# numpy fallback
# --------------------------------------------------------------------------

def _jacobi_sv_numpy(stack):
    """Batched one-sided Jacobi over ``stack`` of shape (B, m, n), m >= n."""
    a = np.array(stack, dtype=float, copy=True)
    n = a.shape[2]
    pairs = list(combinations(range(n), 2))
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p, q in pairs:
            ap = a[:, :, p]
            aq = a[:, :, q]
            alpha = np.einsum("bi,bi->b", ap, ap)
            beta = np.einsum("bi,bi->b", aq, aq)
            gamma = np.einsum("bi,bi->b", ap, aq)
            active = np.abs(gamma) > _ROT_TOL * np.sqrt(alpha) * np.sqrt(beta)
            if not active.any():
                continue
            rotated = True
            g = np.where(active, gamma, 1.0)
            with np.errstate(over="ignore"):
                zeta = np.where(active, (beta - alpha) / (2.0 * g), 0.0)
            big = np.abs(zeta) > 1e150
            safe = np.where(big, 0.0, zeta)
            t = np.copysign(1.0 / (np.abs(safe) + np.sqrt(1.0 + safe * safe)), safe)
            t = np.where(big, 0.5 / np.where(big, zeta, 1.0), t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            new_p = c[:, None] * ap - s[:, None] * aq
            new_q = s[:, None] * ap + c[:, None] * aq
            a[:, :, p] = new_p
            a[:, :, q] = new_q
        if not rotated:
            break
    sv = np.sqrt(np.einsum("bij,bij->bj", a, a))
    return -np.sort(-sv, axis=1)


def _scan_numpy(values, rows, cols):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    # (nc, nr, kr, kc) -> flatten in (col-set, row-set) order
    sub = values[rows[None, :, :, None], cols[:, None, None, :]]
    sub = sub.reshape(-1, rows.shape[1], cols.shape[1])
    if rows.shape[1] < cols.shape[1]:
        sub = np.swapaxes(sub, 1, 2)
    if sub.shape[0] == 0:
        return np.empty((0, min(rows.shape[1], cols.shape[1])))
    return _jacobi_sv_numpy(sub)


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------

def batch_singular_values(values, rows, cols, use_jit: bool | None = None) -> np.ndarray:
    """Singular values of every submatrix ``values[rows[r]][:, cols[c]]``.

    ``rows`` is an (nr, kr) integer array of row-index tuples and ``cols`` an
    (nc, kc) array of column-index tuples. The result has one row per
    submatrix, ordered column-set major (all row sets for ``cols[0]`` first),
    each row holding min(kr, kc) values in descending order.
    """
    values = np.ascontiguousarray(values, dtype=float)
    rows = np.ascontiguousarray(rows, dtype=np.int64).reshape(len(rows), -1)
    cols = np.ascontiguousarray(cols, dtype=np.int64).reshape(len(cols), -1)
    if use_jit is None:
        use_jit = HAVE_NUMBA
    # power-of-two rescale (exact) keeps squared column norms clear of
    # underflow and overflow
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    e = int(np.frexp(peak)[1]) if 0.0 < peak < np.inf else 0
    if e:
        values = np.ldexp(values, -e)
    sv = _scan_jit(values, rows, cols) if use_jit else _scan_numpy(values, rows, cols)
    return np.ldexp(sv, e) if e else sv


def singular_values(m) -> SingularSpectrum:
    """Singular values of a finite, non-empty real matrix.

    >>> singular_values([[3.0, 0.0], [0.0, 0.0]]).values.tolist()
    [3.0, 0.0]
    """
    a = np.array(m, dtype=float, ndmin=2)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("singular_values needs a non-empty 2-D matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("singular_values needs finite entries")
    rows = np.arange(a.shape[0])[None, :]
    cols = np.arange(a.shape[1])[None, :]
    return SingularSpectrum(batch_singular_values(a, rows, cols)[0])


def condition_from_singular_values(sv, singular_tol: float = DEFAULT_SINGULAR_TOL):
    """Vectorised sigma_max / sigma_min over the last axis.

    Rows whose smallest value falls below ``singular_tol * sigma_max`` (this
    includes all-zero rows) map to ``inf``.
    """
    sv = np.asarray(sv, dtype=float)
    hi = sv[..., 0]
    lo = sv[..., -1]
    singular = (hi == 0.0) | (lo < singular_tol * hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(singular, np.inf, hi / np.where(singular, 1.0, lo))
    # sigma_max == sigma_min must give exactly 1
    return np.where(~singular & (hi == lo), 1.0, cond)


def condition_status(m, singular_tol: float = DEFAULT_SINGULAR_TOL) -> tuple[float, str]:
    """Condition number plus a status tag: ``"ok"``, ``"singular"`` or ``"zero_matrix"``."""
    spec = singular_values(m)
    if spec.largest == 0.0:
        return float("inf"), "zero_matrix"
    cond = float(condition_from_singular_values(spec.values, singular_tol))
    return cond, ("singular" if np.isinf(cond) else "ok")


def condition_number(m, singular_tol: float = DEFAULT_SINGULAR_TOL) -> float:
    """sigma_max / sigma_min, or ``inf`` for matrices singular to ``singular_tol``."""
    return condition_status(m, singular_tol)[0]


def index_sets(n: int, k: int) -> np.ndarray:
    """All k-subsets of ``range(n)`` in lexicographic order, as an (N, k) array."""
    combos = list(combinations(range(n), k))
    if not combos:
        return np.empty((0, k), dtype=np.int64)
    return np.array(combos, dtype=np.int64)
