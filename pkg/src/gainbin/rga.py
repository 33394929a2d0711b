"""Relative gain of 2x2 gain submatrices.

For ``G = [[g11, g12], [g21, g22]]`` the relative gain is
``lambda = 1 / (1 - g12*g21 / (g11*g22))``. The flagging scalar uses the
magnitude ratio ``r = |g12*g21| / |g11*g22|`` and reports
``max(|lambda|, |1 - lambda|)``, which is symmetric under swapping the two
rows or the two columns and never drops below 0.5. The signed variant is
kept for the unity-scaling and ratio identities.

Three kinds of pair are degenerate and never flagged:

* ``decoupled_zero``: exactly one of the products ``g11*g22`` and
  ``g12*g21`` is zero; lambda is 1 (off-diagonal zero) or 0 (diagonal zero);
* ``singular_zero``: both products are zero, so the submatrix is
  structurally singular; lambda is undefined (NaN) and the number is inf;
* ``collinear``: no zeros but ``r == 1`` to within ``COLLINEAR_TOL``;
  lambda and the number are both inf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ZERO_TOL = 1e-12
COLLINEAR_TOL = 1e-12

NONE = "none"
DECOUPLED_ZERO = "decoupled_zero"
SINGULAR_ZERO = "singular_zero"
COLLINEAR = "collinear"
DEGENERATE_KINDS = (NONE, DECOUPLED_ZERO, SINGULAR_ZERO, COLLINEAR)


@dataclass(frozen=True)
class Rga2x2:
    lam: float
    rga_number: float
    degenerate: str = NONE

    @property
    def collinear(self) -> bool:
        return self.degenerate == COLLINEAR


def _is_zero(g):
    return abs(g) < ZERO_TOL


def rga_2x2(g11, g12, g21, g22) -> Rga2x2:
    """Relative gain record for one 2x2 submatrix (magnitude convention)."""
    diag_zero = _is_zero(g11) or _is_zero(g22)
    off_zero = _is_zero(g12) or _is_zero(g21)
    if diag_zero and off_zero:
        return Rga2x2(math.nan, math.inf, SINGULAR_ZERO)
    if off_zero:
        return Rga2x2(1.0, 1.0, DECOUPLED_ZERO)
    if diag_zero:
        return Rga2x2(0.0, 1.0, DECOUPLED_ZERO)
    r = abs(g12 * g21) / abs(g11 * g22)
    if abs(1.0 - r) <= COLLINEAR_TOL:
        return Rga2x2(math.inf, math.inf, COLLINEAR)
    lam = 1.0 / (1.0 - r)
    return Rga2x2(lam, max(abs(lam), abs(1.0 - lam)), NONE)


def lambda_2x2(g11, g12, g21, g22) -> float:
    """Relative gain with the magnitude ratio; ``inf`` when collinear."""
    return rga_2x2(g11, g12, g21, g22).lam


def rga_number(g11, g12, g21, g22) -> float:
    """``max(|lambda|, |1 - lambda|)``; ``inf`` iff collinear or structurally singular."""
    return rga_2x2(g11, g12, g21, g22).rga_number


def lambda_signed(g11, g12, g21, g22) -> float:
    """Relative gain with the signed ratio ``g12*g21 / (g11*g22)``."""
    if _is_zero(g11) or _is_zero(g22):
        raise ValueError("signed relative gain needs non-zero diagonal gains")
    ratio = (g12 * g21) / (g11 * g22)
    if abs(1.0 - ratio) <= COLLINEAR_TOL:
        return math.inf
    return 1.0 / (1.0 - ratio)


def unity_scale(g11, g12, g21, g22) -> tuple[np.ndarray, float]:
    """Rescale a 2x2 so three gains become 1; returns ``(K, k)``.

    ``K = diag(1/g11, 1/g21) @ G @ diag(1, g21/g22) = [[1, k], [1, 1]]`` with
    ``k = g12*g21 / (g11*g22) = 1 - 1/lambda_signed``.
    """
    if any(_is_zero(g) for g in (g11, g12, g21, g22)):
        raise ValueError("unity scaling needs four non-zero gains")
    k = (g12 * g21) / (g11 * g22)
    return np.array([[1.0, k], [1.0, 1.0]]), k


def ratio_for_threshold(rga_threshold: float) -> float:
    """Unity-scaled off-diagonal gain ``k = 1 - 1/threshold`` that yields that relative gain."""
    return 1.0 - 1.0 / rga_threshold


def rga_numbers(g11, g12, g21, g22):
    """Vectorised :func:`rga_2x2` over arrays.

    Returns ``(lam, number, degenerate_code)`` where the code indexes
    :data:`DEGENERATE_KINDS`.
    """
    g11, g12, g21, g22 = (np.asarray(g, dtype=float) for g in (g11, g12, g21, g22))
    z11, z12, z21, z22 = (np.abs(g) < ZERO_TOL for g in (g11, g12, g21, g22))
    diag_zero = z11 | z22
    off_zero = z12 | z21
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(g12 * g21) / np.abs(g11 * g22)
        collinear = ~diag_zero & ~off_zero & (np.abs(1.0 - r) <= COLLINEAR_TOL)
        lam = 1.0 / (1.0 - r)
    code = np.zeros(g11.shape, dtype=np.int8)
    code[collinear] = 3
    code[diag_zero ^ off_zero] = 1
    code[diag_zero & off_zero] = 2
    lam = np.where(collinear, np.inf, lam)
    lam = np.where(off_zero & ~diag_zero, 1.0, lam)
    lam = np.where(diag_zero & ~off_zero, 0.0, lam)
    lam = np.where(diag_zero & off_zero, np.nan, lam)
    with np.errstate(invalid="ignore"):
        number = np.maximum(np.abs(lam), np.abs(1.0 - lam))
    number = np.where(code == 2, np.inf, number)
    number = np.where(code == 3, np.inf, number)
    return lam, number, code
