"""Rendering of models and analysis results as json, csv or aligned text.

Every json document carries a ``"report"`` tag so :func:`parse_report` can
rebuild the original object. Non-finite numbers are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import singledispatch

import numpy as np

from .analysis import AnalysisSummary, PairMetrics, ScanResult, SubmatrixMetrics, Thresholds
from .binning import BinGrid, ConditioningPolicy, ConditioningResult, max_relative_change
from .model_io import GainModel, ValidationReport, Violation, model_from_obj, model_to_obj, dump_model
from .scaling import ScaledGainMatrix

FORMATS = ("json", "csv", "text_table")

RGA_MARK = "#"
CN_MARK = "*"

PAIR_HEADER = ["mv1", "mv2", "cv1", "cv2", "cond", "rga", "rga_flagged", "cn_flagged", "degenerate", "structural"]


# --------------------------------------------------------------------------
# small helpers
# --------------------------------------------------------------------------

def _f(x):
    x = float(x)
    if math.isfinite(x):
        return x
    if math.isnan(x):
        return "nan"
    return "inf" if x > 0 else "-inf"


def _uf(v):
    return float(v)


def _matrix(a):
    return [[_f(x) for x in row] for row in np.asarray(a, dtype=float)]


def _unmatrix(rows):
    return np.array([[_uf(x) for x in row] for row in rows], dtype=float)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x, nd=4) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{nd}f}"


def _csvnum(x) -> str:
    x = float(x)
    return repr(x) if math.isfinite(x) else _f(x)


def _table(header, rows, left_cols=1) -> str:
    """Aligned plain-text table; the first ``left_cols`` columns are left-aligned."""
    cells = [list(map(str, header))] + [list(map(str, r)) for r in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(header))]
    lines = []
    for n, r in enumerate(cells):
        parts = [
            r[c].ljust(widths[c]) if c < left_cols else r[c].rjust(widths[c])
            for c in range(len(header))
        ]
        lines.append("  ".join(parts).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _names(names, idx, prefix):
    if names is None:
        return tuple(f"{prefix}{i}" for i in idx)
    return tuple(names[i] for i in idx)


def _check_format(fmt):
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; choose from {FORMATS}")


# --------------------------------------------------------------------------
# extra report types
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MarkedMatrix:
    """Scaled gains with per-cell flag markers (who belongs to a flagged 2x2)."""

    values: np.ndarray
    mv_names: tuple[str, ...]
    cv_names: tuple[str, ...]
    rga_marked: np.ndarray
    cn_marked: np.ndarray
    delta_moves: np.ndarray | None = None


def mark_matrix(scaled: ScaledGainMatrix, pairs) -> MarkedMatrix:
    rga = np.zeros(scaled.shape, dtype=bool)
    cn = np.zeros(scaled.shape, dtype=bool)
    for p in pairs:
        for i, j in p.cells():
            if p.rga_flagged:
                rga[i, j] = True
            if p.cn_flagged:
                cn[i, j] = True
    return MarkedMatrix(np.asarray(scaled.values), tuple(scaled.mv_names), tuple(scaled.cv_names),
                        rga, cn, np.asarray(scaled.col_scales))


@dataclass(frozen=True, eq=False)
class ModelDiff:
    mv_names: tuple[str, ...]
    cv_names: tuple[str, ...]
    before: np.ndarray
    after: np.ndarray

    @property
    def change_pct(self) -> np.ndarray:
        same = self.after == self.before
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = (self.after - self.before) / self.before * 100.0
            rel = np.where((self.before == 0.0) & ~same, np.inf * np.sign(self.after), rel)
        return np.where(same, 0.0, rel)

    @property
    def changed(self) -> np.ndarray:
        return self.after != self.before


def compare_models(a: GainModel, b: GainModel) -> ModelDiff:
    if a.cv_names != b.cv_names or a.mv_names != b.mv_names:
        raise ValueError("models have different CV/MV names or order")
    return ModelDiff(tuple(a.mv_names), tuple(a.cv_names), np.asarray(a.gains), np.asarray(b.gains))


# --------------------------------------------------------------------------
# json encoders
# --------------------------------------------------------------------------

def _pair_obj(p: PairMetrics) -> dict:
    return {
        "mv_pair": list(p.mv_pair), "cv_pair": list(p.cv_pair),
        "mv_names": None if p.mv_names is None else list(p.mv_names),
        "cv_names": None if p.cv_names is None else list(p.cv_names),
        "cond": _f(p.cond), "rga_number": _f(p.rga_number), "lambda": _f(p.lam),
        "rga_flagged": p.rga_flagged, "cn_flagged": p.cn_flagged,
        "degenerate": p.degenerate, "structural": p.structural,
    }


def _pair_from(d) -> PairMetrics:
    return PairMetrics(
        mv_pair=tuple(d["mv_pair"]), cv_pair=tuple(d["cv_pair"]),
        cond=_uf(d["cond"]), rga_number=_uf(d["rga_number"]),
        rga_flagged=d["rga_flagged"], cn_flagged=d["cn_flagged"],
        degenerate=d["degenerate"], lam=_uf(d["lambda"]), structural=d["structural"],
        mv_names=None if d["mv_names"] is None else tuple(d["mv_names"]),
        cv_names=None if d["cv_names"] is None else tuple(d["cv_names"]),
    )


def _thresholds_obj(th: Thresholds) -> dict:
    return {"rga_threshold": th.rga_threshold, "cn_threshold": th.cn_threshold,
            "cn_higher_threshold": th.cn_higher_threshold, "singular_tol": th.singular_tol}


def _scan_obj(s: ScanResult) -> dict:
    return {
        "k": s.k, "threshold": s.threshold, "n_singular": s.n_singular, "n_below": s.n_below,
        "flagged": [
            {"mv_set": list(m.mv_set), "cv_set": list(m.cv_set), "cond": _f(m.cond),
             "mv_names": None if m.mv_names is None else list(m.mv_names),
             "cv_names": None if m.cv_names is None else list(m.cv_names)}
            for m in s.flagged
        ],
    }


def _scan_from(d) -> ScanResult:
    flagged = tuple(
        SubmatrixMetrics(tuple(m["mv_set"]), tuple(m["cv_set"]), _uf(m["cond"]),
                         None if m["mv_names"] is None else tuple(m["mv_names"]),
                         None if m["cv_names"] is None else tuple(m["cv_names"]))
        for m in d["flagged"]
    )
    return ScanResult(d["k"], d["threshold"], flagged, d["n_singular"], d["n_below"])


def _summary_obj(s: AnalysisSummary) -> dict:
    return {
        "thresholds": _thresholds_obj(s.thresholds),
        "mv_names": None if s.mv_names is None else list(s.mv_names),
        "cv_names": None if s.cv_names is None else list(s.cv_names),
        "counts": s.counts(),
        "pairs": [_pair_obj(p) for p in s.pairs],
        "collinear": [{"mv_pair": list(m), "cv_pair": list(c)} for m, c in s.collinear],
        "higher": [_scan_obj(s.higher[k]) for k in sorted(s.higher)],
    }


def _summary_from(d) -> AnalysisSummary:
    return AnalysisSummary(
        pairs=tuple(_pair_from(p) for p in d["pairs"]),
        collinear=tuple((tuple(c["mv_pair"]), tuple(c["cv_pair"])) for c in d["collinear"]),
        higher={h["k"]: _scan_from(h) for h in d["higher"]},
        thresholds=Thresholds(**d["thresholds"]),
        mv_names=None if d["mv_names"] is None else tuple(d["mv_names"]),
        cv_names=None if d["cv_names"] is None else tuple(d["cv_names"]),
    )


def _policy_obj(p: ConditioningPolicy) -> dict:
    return {"thresholds": _thresholds_obj(p.thresholds), "selection_mode": p.selection_mode,
            "include": sorted(list(c) for c in p.include), "exclude": sorted(list(c) for c in p.exclude)}


def _policy_from(d) -> ConditioningPolicy:
    return ConditioningPolicy(Thresholds(**d["thresholds"]), d["selection_mode"],
                              frozenset(tuple(c) for c in d["include"]),
                              frozenset(tuple(c) for c in d["exclude"]))


def _result_obj(r: ConditioningResult) -> dict:
    return {
        "model": model_to_obj(r.model),
        "policy": _policy_obj(r.policy),
        "scaled": {"values": _matrix(r.scaled.values), "col_scales": [_f(x) for x in r.scaled.col_scales],
                   "row_scales": [_f(x) for x in r.scaled.row_scales],
                   "zero_rows": list(r.scaled.zero_rows)},
        "grid": {"rga_threshold": r.grid.rga_threshold, "ratio": r.grid.ratio, "n": r.grid.n,
                 "boundaries": [_f(x) for x in r.grid.boundaries]},
        "targets": sorted(list(t) for t in r.targets),
        "binned": _matrix(r.binned),
        "bin_index": np.asarray(r.bin_index).tolist(),
        "change_pct": _matrix(r.change_pct),
        "engineering": _matrix(r.engineering),
        "flags_before": _summary_obj(r.flags_before),
        "flags_after": _summary_obj(r.flags_after),
    }


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _result_from(d) -> ConditioningResult:
    model = model_from_obj(d["model"])
    sc = d["scaled"]
    scaled = ScaledGainMatrix(_frozen(_unmatrix(sc["values"])), _frozen([_uf(x) for x in sc["col_scales"]]),
                              _frozen([_uf(x) for x in sc["row_scales"]]), tuple(model.mv_names),
                              tuple(model.cv_names), tuple(sc["zero_rows"]))
    g = d["grid"]
    grid = BinGrid(g["rga_threshold"], g["ratio"], _frozen([_uf(x) for x in g["boundaries"]]))
    return ConditioningResult(
        model=model, scaled=scaled, grid=grid,
        targets=frozenset(tuple(t) for t in d["targets"]),
        binned=_unmatrix(d["binned"]), bin_index=np.array(d["bin_index"], dtype=np.int64),
        change_pct=_unmatrix(d["change_pct"]), engineering=_unmatrix(d["engineering"]),
        flags_before=_summary_from(d["flags_before"]), flags_after=_summary_from(d["flags_after"]),
        policy=_policy_from(d["policy"]),
    )


# --------------------------------------------------------------------------
# serialize_report
# --------------------------------------------------------------------------

@singledispatch
def serialize_report(report, format: str = "text_table") -> str:
    """Render ``report`` as ``json``, ``csv`` or ``text_table``.

    Output is deterministic for equal inputs.
    """
    raise TypeError(f"no serializer for {type(report).__name__}")


@serialize_report.register
def _(report: GainModel, format="text_table"):
    _check_format(format)
    if format == "json":
        return dump_model(report, "json")
    if format == "csv":
        return dump_model(report, "csv")
    header = [""] + list(report.mv_names)
    rows = [["delta_move"] + [_num(d, 4) for d in report.delta_moves]]
    rows += [[cv] + [_num(v) for v in row] for cv, row in zip(report.cv_names, report.gains)]
    return _table(header, rows)


@serialize_report.register
def _(report: ValidationReport, format="text_table"):
    _check_format(format)
    recs = [(v.code, v.severity, "" if v.location is None else str(v.location), v.message)
            for v in report.violations]
    if format == "json":
        return _dumps({"report": "validation", "ok": report.ok, "violations": [
            {"code": c, "severity": s, "location": v.location if isinstance(v.location, (str, type(None)))
             else list(v.location), "message": m}
            for (c, s, _, m), v in zip(recs, report.violations)]})
    if format == "csv":
        return _csv(["code", "severity", "location", "message"], recs)
    if not recs:
        return "model OK: no violations\n"
    status = "OK (warnings only)" if report.ok else "INVALID"
    return f"model {status}\n" + _table(["code", "severity", "location", "message"], recs, left_cols=4)


def _pair_rows(pairs, mv_names=None, cv_names=None):
    for p in pairs:
        mv = p.mv_names or _names(mv_names, p.mv_pair, "MV")
        cv = p.cv_names or _names(cv_names, p.cv_pair, "CV")
        yield mv, cv, p


@serialize_report.register(list)
@serialize_report.register(tuple)
def _(report, format="text_table"):
    _check_format(format)
    if report and not all(isinstance(p, PairMetrics) for p in report):
        raise TypeError("list reports must hold PairMetrics")
    if format == "json":
        return _dumps({"report": "pairs", "pairs": [_pair_obj(p) for p in report]})
    if format == "csv":
        return _csv(PAIR_HEADER, [
            [mv[0], mv[1], cv[0], cv[1], _csvnum(p.cond), _csvnum(p.rga_number),
             int(p.rga_flagged), int(p.cn_flagged), p.degenerate, int(p.structural)]
            for mv, cv, p in _pair_rows(report)])
    return _table(["MV1", "MV2", "CV1", "CV2", "cond", "RGA", "flags"], [
        [mv[0], mv[1], cv[0], cv[1], _num(p.cond, 2), _num(p.rga_number, 2),
         (RGA_MARK if p.rga_flagged else "") + (CN_MARK if p.cn_flagged else "")]
        for mv, cv, p in _pair_rows(report)], left_cols=4)


@serialize_report.register
def _(report: MarkedMatrix, format="text_table"):
    _check_format(format)
    if format == "json":
        return _dumps({"report": "marked_matrix", "mv_names": list(report.mv_names),
                       "cv_names": list(report.cv_names), "values": _matrix(report.values),
                       "rga_marked": report.rga_marked.tolist(), "cn_marked": report.cn_marked.tolist()})
    if format == "csv":
        rows = []
        for i, cv in enumerate(report.cv_names):
            for j, mv in enumerate(report.mv_names):
                rows.append([cv, mv, _csvnum(report.values[i, j]),
                             int(report.rga_marked[i, j]), int(report.cn_marked[i, j])])
        return _csv(["cv", "mv", "value", "rga_marked", "cn_marked"], rows)
    header = [""] + list(report.mv_names)
    rows = []
    if report.delta_moves is not None:
        rows.append(["delta_move"] + [f"{d:g}  " for d in report.delta_moves])
    for i, cv in enumerate(report.cv_names):
        row = [cv]
        for j in range(len(report.mv_names)):
            mark = (RGA_MARK if report.rga_marked[i, j] else " ") + (CN_MARK if report.cn_marked[i, j] else " ")
            row.append(_num(report.values[i, j]) + mark)
        rows.append(row)
    legend = f"{RGA_MARK} = in an RGA-flagged 2x2, {CN_MARK} = in a condition-number-flagged 2x2\n"
    return _table(header, rows) + legend


@serialize_report.register
def _(report: AnalysisSummary, format="text_table"):
    _check_format(format)
    if format == "json":
        return _dumps({"report": "analysis", **_summary_obj(report)})
    flagged = report.flagged
    if format == "csv":
        return serialize_report(flagged, "csv")
    th = report.thresholds
    out = [f"2x2 pairs: {len(report.pairs)} scanned, {len(report.rga_flagged)} with RGA >= "
           f"{th.rga_threshold:g}, {len(report.cn_flagged)} with cond >= {th.cn_threshold:g}"]
    if flagged:
        ordered = sorted(flagged, key=lambda p: p.cond)
        out.append(serialize_report(ordered, "text_table").rstrip("\n"))
    out.append(f"collinear 2x2 pairs: {len(report.collinear)}")
    for mvp, cvp in report.collinear:
        mv = _names(report.mv_names, mvp, "MV")
        cv = _names(report.cv_names, cvp, "CV")
        out.append(f"  {mv[0]} / {mv[1]}  x  {cv[0]} / {cv[1]}")
    for k in sorted(report.higher):
        s = report.higher[k]
        out.append(f"{k}x{k} submatrices: {s.total} scanned, {len(s)} with cond > {s.threshold:g}, "
                   f"{s.n_singular} singular")
        for m in sorted(s.flagged, key=lambda m: -m.cond):
            mv = m.mv_names or _names(None, m.mv_set, "MV")
            cv = m.cv_names or _names(None, m.cv_set, "CV")
            out.append(f"  cond {_num(m.cond, 2)}  MVs {', '.join(mv)}  CVs {', '.join(cv)}")
    return "\n".join(out) + "\n"


@serialize_report.register
def _(report: ConditioningResult, format="text_table"):
    _check_format(format)
    if format == "json":
        return _dumps({"report": "conditioning", **_result_obj(report)})
    mv_names, cv_names = report.scaled.mv_names, report.scaled.cv_names
    if format == "csv":
        rows = []
        for i, cv in enumerate(cv_names):
            for j, mv in enumerate(mv_names):
                rows.append([cv, mv, _csvnum(report.scaled.values[i, j]), _csvnum(report.binned[i, j]),
                             _csvnum(report.change_pct[i, j]), int(report.bin_index[i, j]),
                             _csvnum(report.model.gains[i, j]), _csvnum(report.engineering[i, j])])
        return _csv(["cv", "mv", "scaled", "binned", "change_pct", "bin_index", "gain", "conditioned_gain"], rows)
    rows = []
    for i, cv in enumerate(cv_names):
        row = [cv]
        for j in range(len(mv_names)):
            cell = _num(report.binned[i, j])
            if report.change_pct[i, j] != 0.0:
                cell += f" ({report.change_pct[i, j]:+.2f})"
            row.append(cell)
        rows.append(row)
    b, a = report.flags_before.counts(), report.flags_after.counts()
    keys = [k for k in b if k != "pairs"]
    lines = [
        f"RGA threshold {report.grid.rga_threshold:g}: k = {report.grid.ratio:.4f}, "
        f"{report.grid.n} bins, max change {max_relative_change(report.grid.rga_threshold):.2f}%",
        f"{int(report.adjusted.sum())} of {len(report.targets)} selected gains adjusted "
        f"(change % in parentheses)",
        _table([""] + list(mv_names), rows).rstrip("\n"),
        _table(["count", "before", "after"], [[k, b[k], a.get(k, 0)] for k in keys]).rstrip("\n"),
    ]
    return "\n".join(lines) + "\n"


@serialize_report.register
def _(report: BinGrid, format="text_table"):
    _check_format(format)
    dmax = max_relative_change(report.rga_threshold)
    if format == "json":
        return _dumps({"report": "grid", "rga_threshold": report.rga_threshold, "ratio": report.ratio,
                       "n": report.n, "boundaries": [_f(x) for x in report.boundaries],
                       "max_relative_change_pct": dmax})
    if format == "csv":
        return _csv(["i", "boundary"], [[i, _csvnum(b)] for i, b in enumerate(report.boundaries)])
    head = (f"RGA threshold {report.rga_threshold:g}: k = {report.ratio:.4f}, "
            f"max relative change {dmax:.2f}%\n")
    return head + _table(["i", "B_i"], [[f"B_{i}", _num(b)] for i, b in enumerate(report.boundaries)])


@serialize_report.register
def _(report: ModelDiff, format="text_table"):
    _check_format(format)
    pct = report.change_pct
    if format == "json":
        return _dumps({"report": "diff", "mv_names": list(report.mv_names), "cv_names": list(report.cv_names),
                       "before": _matrix(report.before), "after": _matrix(report.after),
                       "change_pct": _matrix(pct), "n_changed": int(report.changed.sum())})
    if format == "csv":
        rows = [[cv, mv, _csvnum(report.before[i, j]), _csvnum(report.after[i, j]), _csvnum(pct[i, j])]
                for i, cv in enumerate(report.cv_names) for j, mv in enumerate(report.mv_names)]
        return _csv(["cv", "mv", "before", "after", "change_pct"], rows)
    rows = []
    for i, cv in enumerate(report.cv_names):
        row = [cv]
        for j in range(len(report.mv_names)):
            cell = _num(report.after[i, j])
            if report.changed[i, j]:
                cell += f" ({pct[i, j]:+.2f})"
            row.append(cell)
        rows.append(row)
    return (f"{int(report.changed.sum())} gains differ (change % in parentheses)\n"
            + _table([""] + list(report.mv_names), rows))


# --------------------------------------------------------------------------
# parse_report
# --------------------------------------------------------------------------

def parse_report(text: str):
    """Rebuild the object behind a json document written by :func:`serialize_report`."""
    d = json.loads(text)
    kind = d.get("report") if isinstance(d, dict) else None
    if kind == "analysis":
        return _summary_from(d)
    if kind == "pairs":
        return [_pair_from(p) for p in d["pairs"]]
    if kind == "conditioning":
        return _result_from(d)
    if kind == "validation":
        return ValidationReport(tuple(
            Violation(v["code"], tuple(v["location"]) if isinstance(v["location"], list) else v["location"],
                      v["message"]) for v in d["violations"]))
    if kind == "grid":
        return BinGrid(d["rga_threshold"], d["ratio"], _frozen([_uf(x) for x in d["boundaries"]]))
    if kind == "marked_matrix":
        return MarkedMatrix(_unmatrix(d["values"]), tuple(d["mv_names"]), tuple(d["cv_names"]),
                            np.array(d["rga_marked"], dtype=bool), np.array(d["cn_marked"], dtype=bool))
    if kind == "diff":
        return ModelDiff(tuple(d["mv_names"]), tuple(d["cv_names"]), _unmatrix(d["before"]), _unmatrix(d["after"]))
    raise ValueError(f"unrecognised report document (report={kind!r})")
