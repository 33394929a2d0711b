"""Typical-move scaling and its inverse.

Columns are multiplied by the MV move sizes, then each CV row is divided by
its largest resulting magnitude so that every non-zero row peaks at exactly
+/-1. The two diagonal scalings are kept so that a modified scaled matrix can
be mapped back to engineering units without recomputing them.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model_io import GainModel


class ZeroRowWarning(UserWarning):
    """A CV row has no non-zero gains; it is left at zero with unit scale."""


@dataclass(frozen=True, eq=False)
class ScaledGainMatrix:
    values: np.ndarray
    col_scales: np.ndarray
    row_scales: np.ndarray
    mv_names: tuple[str, ...]
    cv_names: tuple[str, ...]
    zero_rows: tuple[int, ...] = ()

    @property
    def shape(self):
        return self.values.shape

    def recompute(self, gains) -> np.ndarray:
        """``row_scales * gains * col_scales`` in the outer-product sense."""
        return self.row_scales[:, None] * np.asarray(gains, dtype=float) * self.col_scales[None, :]


def typical_move_scale(model: GainModel) -> ScaledGainMatrix:
    """Scale ``model`` gains by move size (columns) and row maxima (rows)."""
    g = np.asarray(model.gains, dtype=float)
    col = model.delta_moves
    moved = g * col[None, :]
    peak = np.max(np.abs(moved), axis=1) if moved.size else np.zeros(g.shape[0])
    zero = peak == 0.0
    row = np.where(zero, 1.0, 1.0 / np.where(zero, 1.0, peak))
    # divide rather than multiply by the reciprocal so the row peak is exactly 1
    values = moved / np.where(zero, 1.0, peak)[:, None]
    zero_rows = tuple(int(i) for i in np.nonzero(zero)[0])
    if zero_rows:
        names = ", ".join(model.cvs[i].name for i in zero_rows)
        warnings.warn(f"all-zero CV rows left unscaled: {names}", ZeroRowWarning, stacklevel=2)
    for a in (values, col, row):
        a.setflags(write=False)
    return ScaledGainMatrix(values, col, row, tuple(model.mv_names), tuple(model.cv_names), zero_rows)


def unscale(scaled: ScaledGainMatrix, replacement_values) -> np.ndarray:
    """Map scaled-domain values back to engineering units.

    Returns ``diag(1/row_scales) @ replacement_values @ diag(1/col_scales)``.
    """
    rep = np.asarray(replacement_values, dtype=float)
    if rep.shape != scaled.values.shape:
        raise ValueError(f"replacement shape {rep.shape} does not match scaled shape {scaled.values.shape}")
    return rep / scaled.row_scales[:, None] / scaled.col_scales[None, :]
