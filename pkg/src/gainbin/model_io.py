"""Gain models: the data type, validation, and the json/csv file formats.

Canonical json::

    {"mvs": [{"name": "FC-1", "delta_move": 2.0}, ...],
     "cvs": [{"name": "TI-1"}, ...],
     "gains": [[...], ...]}          # one row per CV

The csv import has an empty corner cell, MV names across row 0, a
``delta_move`` label plus the move sizes in row 1, then one row per CV.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ModelFormatError(ValueError):
    """Raised when a model file cannot be turned into a usable GainModel.

    ``code`` is a short machine-readable tag; ``location`` is a (row, col)
    tuple, a variable name, or None.
    """

    def __init__(self, code: str, message: str, location=None):
        self.code = code
        self.location = location
        where = f" at {location}" if location is not None else ""
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class MV:
    name: str
    delta_move: float
    units: str = ""


@dataclass(frozen=True)
class CV:
    name: str
    units: str = ""


@dataclass(frozen=True, eq=False)
class GainModel:
    """Steady-state gain matrix with named CV rows and MV columns.

    Construction does not enforce the model invariants; call
    :func:`validate_model` (``parse_model`` does so for you).
    """

    mvs: tuple[MV, ...]
    cvs: tuple[CV, ...]
    gains: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mvs", tuple(self.mvs))
        object.__setattr__(self, "cvs", tuple(self.cvs))
        g = np.array(self.gains, dtype=float, ndmin=2)
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @property
    def shape(self) -> tuple[int, int]:
        return self.gains.shape

    @property
    def mv_names(self) -> list[str]:
        return [mv.name for mv in self.mvs]

    @property
    def cv_names(self) -> list[str]:
        return [cv.name for cv in self.cvs]

    @property
    def delta_moves(self) -> np.ndarray:
        return np.array([mv.delta_move for mv in self.mvs], dtype=float)

    def gain(self, cv: str, mv: str) -> float:
        return float(self.gains[self.cv_index(cv), self.mv_index(mv)])

    def cv_index(self, name: str) -> int:
        try:
            return self.cv_names.index(name)
        except ValueError:
            raise KeyError(f"unknown CV {name!r}") from None

    def mv_index(self, name: str) -> int:
        try:
            return self.mv_names.index(name)
        except ValueError:
            raise KeyError(f"unknown MV {name!r}") from None

    def with_gains(self, gains) -> "GainModel":
        return GainModel(self.mvs, self.cvs, gains)

    def __eq__(self, other):
        if not isinstance(other, GainModel):
            return NotImplemented
        return (
            self.mvs == other.mvs
            and self.cvs == other.cvs
            and self.gains.shape == other.gains.shape
            and np.array_equal(self.gains, other.gains, equal_nan=True)
        )

    __hash__ = None


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

ERROR_CODES = (
    "shape_mismatch",
    "duplicate_mv",
    "duplicate_cv",
    "non_positive_delta_move",
    "non_finite_delta_move",
    "non_finite_gain",
    "empty_model",
)
WARNING_CODES = ("zero_row",)


@dataclass(frozen=True)
class Violation:
    code: str
    location: object
    message: str

    @property
    def severity(self) -> str:
        return "warning" if self.code in WARNING_CODES else "error"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "warning"]

    @property
    def ok(self) -> bool:
        """True when there are no errors (warnings allowed)."""
        return not self.errors

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def _duplicates(names):
    seen, dup = set(), []
    for n in names:
        if n in seen and n not in dup:
            dup.append(n)
        seen.add(n)
    return dup


def validate_model(model: GainModel) -> ValidationReport:
    """Report every invariant violation of ``model``; all-zero CV rows are warnings."""
    out = []
    g = model.gains
    n_cv, n_mv = len(model.cvs), len(model.mvs)
    if n_cv == 0 or n_mv == 0:
        out.append(Violation("empty_model", None, "model needs at least one CV and one MV"))
    if g.shape != (n_cv, n_mv):
        out.append(Violation(
            "shape_mismatch", g.shape,
            f"gains are {g.shape[0]}x{g.shape[1]} but model has {n_cv} CVs x {n_mv} MVs"))
    for name in _duplicates(model.mv_names):
        out.append(Violation("duplicate_mv", name, f"MV name {name!r} appears more than once"))
    for name in _duplicates(model.cv_names):
        out.append(Violation("duplicate_cv", name, f"CV name {name!r} appears more than once"))
    for mv in model.mvs:
        d = mv.delta_move
        if not math.isfinite(d):
            out.append(Violation("non_finite_delta_move", mv.name, f"delta_move of {mv.name} is {d}"))
        elif d <= 0:
            out.append(Violation("non_positive_delta_move", mv.name,
                                 f"non-positive delta_move {d} for {mv.name}"))
    for i, j in zip(*np.nonzero(~np.isfinite(g))):
        out.append(Violation("non_finite_gain", (int(i), int(j)), f"gain {g[i, j]} is not finite"))
    if g.shape == (n_cv, n_mv):
        finite_rows = np.all(np.isfinite(g), axis=1)
        for i in np.nonzero(finite_rows & np.all(g == 0.0, axis=1))[0]:
            out.append(Violation("zero_row", model.cvs[i].name,
                                 f"CV {model.cvs[i].name} has no non-zero gains"))
    return ValidationReport(tuple(out))


def _raise_first_error(model: GainModel):
    errors = validate_model(model).errors
    structural = [v for v in errors if v.code not in ("non_finite_gain",)]
    if structural:
        v = structural[0]
        raise ModelFormatError(v.code, v.message, v.location)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def _number(text, location):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ModelFormatError("syntax", f"expected a number, got {text!r}", location) from None


def _from_obj(obj) -> GainModel:
    if not isinstance(obj, dict):
        raise ModelFormatError("syntax", "model json must be an object")
    for key in ("mvs", "cvs", "gains"):
        if key not in obj:
            raise ModelFormatError("syntax", f"missing key {key!r}")
    mvs = []
    for j, item in enumerate(obj["mvs"]):
        if not isinstance(item, dict) or "name" not in item or "delta_move" not in item:
            raise ModelFormatError("syntax", "each MV needs 'name' and 'delta_move'", ("mvs", j))
        mvs.append(MV(str(item["name"]), _number(item["delta_move"], ("mvs", j)),
                      str(item.get("units", ""))))
    cvs = []
    for i, item in enumerate(obj["cvs"]):
        if not isinstance(item, dict) or "name" not in item:
            raise ModelFormatError("syntax", "each CV needs 'name'", ("cvs", i))
        cvs.append(CV(str(item["name"]), str(item.get("units", ""))))
    rows = obj["gains"]
    if not isinstance(rows, list) or len(rows) != len(cvs):
        n = len(rows) if isinstance(rows, list) else "?"
        raise ModelFormatError("shape_mismatch", f"{n} gain rows for {len(cvs)} CVs", ("gains",))
    gains = np.empty((len(cvs), len(mvs)))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(mvs):
            raise ModelFormatError("shape_mismatch", f"row {i} needs {len(mvs)} gains", (i, None))
        for j, v in enumerate(row):
            gains[i, j] = _number(v, (i, j))
    return GainModel(tuple(mvs), tuple(cvs), gains)


def model_from_obj(obj) -> GainModel:
    """Build a model from an already-decoded json object (no validation)."""
    return _from_obj(obj)


def _parse_csv(text: str) -> GainModel:
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ModelFormatError("syntax", "csv needs an MV header row and a delta_move row")
    header = [c.strip() for c in rows[0]]
    if header[0]:
        raise ModelFormatError("syntax", "cell (0,0) must be empty", (0, 0))
    names = header[1:]
    dm_row = [c.strip() for c in rows[1]]
    if dm_row[0].lower() != "delta_move":
        raise ModelFormatError("syntax", "row 1 must start with 'delta_move'", (1, 0))
    if len(dm_row) != len(header):
        raise ModelFormatError("shape_mismatch",
                               f"{len(dm_row) - 1} delta_move values for {len(names)} MVs", (1, None))
    mvs = tuple(MV(n, _number(v, (1, j + 1))) for j, (n, v) in enumerate(zip(names, dm_row[1:])))
    cvs, gains = [], []
    for r, row in enumerate(rows[2:], start=2):
        row = [c.strip() for c in row]
        if len(row) != len(header):
            raise ModelFormatError("shape_mismatch", f"row has {len(row) - 1} gains, expected {len(names)}",
                                   (r, None))
        cvs.append(CV(row[0]))
        gains.append([_number(v, (r, j + 1)) for j, v in enumerate(row[1:])])
    g = np.array(gains, dtype=float).reshape(len(cvs), len(mvs))
    return GainModel(mvs, tuple(cvs), g)


def parse_model(text: str, format: str = "json") -> GainModel:
    """Parse model text in ``json`` or ``csv`` format.

    Raises :class:`ModelFormatError` on malformed input, dimension mismatch,
    duplicate names, or non-positive move sizes. Non-finite gains parse
    through and are left for :func:`validate_model` to report.
    """
    if format == "json":
        try:
            obj = json.loads(text, parse_constant=_parse_constant)
        except json.JSONDecodeError as exc:
            raise ModelFormatError("syntax", exc.msg, (exc.lineno, exc.colno)) from None
        model = _from_obj(obj)
    elif format == "csv":
        model = _parse_csv(text)
    else:
        raise ValueError(f"unknown model format {format!r}")
    _raise_first_error(model)
    return model


def _parse_constant(name):
    return {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}[name]


def format_for_path(path) -> str:
    return "csv" if Path(path).suffix.lower() == ".csv" else "json"


def load_model(path) -> GainModel:
    path = Path(path)
    return parse_model(path.read_text(encoding="utf-8"), format_for_path(path))


# --------------------------------------------------------------------------
# writing
# --------------------------------------------------------------------------

def model_to_obj(model: GainModel) -> dict:
    mvs = []
    for mv in model.mvs:
        d = {"name": mv.name, "delta_move": mv.delta_move}
        if mv.units:
            d["units"] = mv.units
        mvs.append(d)
    cvs = [{"name": cv.name, **({"units": cv.units} if cv.units else {})} for cv in model.cvs]
    return {"mvs": mvs, "cvs": cvs, "gains": model.gains.tolist()}


def dump_model(model: GainModel, format: str = "json") -> str:
    if format == "json":
        obj = model_to_obj(model)
        lines = ["{", '  "mvs": [']
        lines.append(",\n".join("    " + json.dumps(m) for m in obj["mvs"]))
        lines += ["  ],", '  "cvs": [']
        lines.append(",\n".join("    " + json.dumps(c) for c in obj["cvs"]))
        lines += ["  ],", '  "gains": [']
        lines.append(",\n".join("    " + json.dumps(r) for r in obj["gains"]))
        lines += ["  ]", "}"]
        return "\n".join(lines) + "\n"
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([""] + model.mv_names)
        w.writerow(["delta_move"] + [repr(float(d)) for d in model.delta_moves])
        for cv, row in zip(model.cvs, model.gains):
            w.writerow([cv.name] + [repr(float(v)) for v in row])
        return buf.getvalue()
    raise ValueError(f"unknown model format {format!r}")


def save_model(model: GainModel, path) -> None:
    path = Path(path)
    path.write_text(dump_model(model, format_for_path(path)), encoding="utf-8")
