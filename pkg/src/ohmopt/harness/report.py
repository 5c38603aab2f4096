"""Rank tables and CSV / JSON / markdown export of experiment results."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import OrderedDict

import numpy as np
from scipy import stats

from .experiment import RunRecord, collect

CSV_COLUMNS = ("problem", "dim", "nfe", "optimizer", "run", "error", "wall_ms")


def _fmt_float(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def to_csv(records, stream=None) -> str:
    """Raw per-run CSV; ``repr`` floats so re-parsing is exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([r.problem, r.dim, r.nfe, r.optimizer, r.run, _fmt_float(r.error), _fmt_float(r.wall_ms)])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def read_csv(stream) -> list:
    """Parse :func:`to_csv` output back into :class:`RunRecord` objects."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.DictReader(stream)
    missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"CSV lacks column(s) {sorted(missing)}")
    out = []
    for row in reader:
        out.append(RunRecord(
            problem=row["problem"], dim=int(row["dim"]), nfe=int(row["nfe"]), optimizer=row["optimizer"],
            run=int(row["run"]), error=float(row["error"]),
            wall_ms=float(row["wall_ms"]) if row["wall_ms"] else None,
        ))
    return out


def _rank_with_ties(values) -> np.ndarray:
    """Ranks 1..n, ties share the average rank, NaN ranked last (tied among themselves)."""
    v = np.asarray(values, dtype=np.float64)
    key = np.where(np.isnan(v), np.inf, v)
    ranks = stats.rankdata(key, method="average")
    nan = np.isnan(v)
    if nan.any():
        # inf errors and NaN cells would tie above; push NaN strictly behind
        n_ok = int((~nan).sum())
        ranks[~nan] = stats.rankdata(key[~nan], method="average")
        ranks[nan] = n_ok + (nan.sum() + 1) / 2.0
    return ranks


def rank_table(cells) -> dict:
    """Per-problem ranks by median error and the mean rank per optimizer.

    Returns ``{"per_problem": {problem_key: {optimizer: rank}}, "mean_rank": {optimizer: r}}``.
    """
    by_problem: "OrderedDict" = OrderedDict()
    for (p, d, n, o), cell in cells.items():
        by_problem.setdefault((p, d, n), OrderedDict())[o] = cell.median if cell.errors.size else np.nan
    per = OrderedDict()
    totals: "OrderedDict" = OrderedDict()
    for pk, meds in by_problem.items():
        names = list(meds)
        if len(names) < 2:
            raise ValueError("rank_table needs at least two optimizers per problem")
        ranks = _rank_with_ties([meds[o] for o in names])
        label = f"{pk[0]}/d{pk[1]}/n{pk[2]}"
        per[label] = {o: float(r) for o, r in zip(names, ranks)}
        for o, r in zip(names, ranks):
            totals.setdefault(o, []).append(float(r))
    return {"per_problem": per, "mean_rank": {o: float(np.mean(v)) for o, v in totals.items()}}


def ranksum_pvalues(cells, reference: str) -> dict:
    """Two-sided Wilcoxon rank-sum p-values of every optimizer against ``reference``, per problem."""
    out = {}
    for (p, d, n, o), cell in cells.items():
        if o == reference:
            continue
        ref = cells.get((p, d, n, reference))
        if ref is None:
            continue
        a, b = cell.errors[~np.isnan(cell.errors)], ref.errors[~np.isnan(ref.errors)]
        pv = float(stats.ranksums(a, b).pvalue) if a.size and b.size else float("nan")
        out.setdefault(f"{p}/d{d}/n{n}", {})[o] = pv
    return out


def mean_std_cell(errors) -> str:
    """``"2.0E-03 ± 1.0E-03"`` (mean, sample std); NaN runs are left out, all-NaN gives ``"N/A"``."""
    e = np.asarray(errors, dtype=np.float64)
    e = e[~np.isnan(e)]
    if e.size == 0:
        return "N/A"
    sd = float(np.std(e, ddof=1)) if e.size > 1 else 0.0
    return f"{float(np.mean(e)):.1E} ± {sd:.1E}"


def to_markdown(cells) -> str:
    """Grid of "mean ± std" errors: one row per problem, one column per optimizer, plus mean ranks."""
    problems = list(OrderedDict.fromkeys((p, d, n) for (p, d, n, _) in cells))
    optimizers = list(OrderedDict.fromkeys(o for (_, _, _, o) in cells))
    lines = ["| Function | Dim | NFE | " + " | ".join(optimizers) + " |",
             "|---|---|---|" + "---|" * len(optimizers)]
    for p, d, n in problems:
        row = [mean_std_cell(cells[(p, d, n, o)].errors) if (p, d, n, o) in cells else "" for o in optimizers]
        lines.append(f"| {p} | {d} | {n} | " + " | ".join(row) + " |")
    if len(optimizers) >= 2:
        try:
            ranks = rank_table(cells)["mean_rank"]
        except ValueError:
            ranks = None
        if ranks:
            lines.append("| mean rank | | | " + " | ".join(f"{ranks.get(o, float('nan')):.2f}" for o in optimizers) + " |")
    return "\n".join(lines) + "\n"


def to_json(cells, records=None) -> str:
    out = {"cells": [], "ranks": None}
    for (p, d, n, o), c in cells.items():
        out["cells"].append({
            "problem": p, "dim": d, "nfe": n, "optimizer": o,
            "errors": [None if math.isnan(x) else float(x) for x in c.errors],
            "mean": None if math.isnan(c.mean) else c.mean,
            "std": None if math.isnan(c.std) else c.std,
            "median": None if math.isnan(c.median) else c.median,
            "nfe_used": c.nfe_used.tolist(),
            "reasons": [r for r in c.reasons if r],
        })
    try:
        out["ranks"] = rank_table(cells)
    except ValueError:
        pass
    return json.dumps(out, indent=2) + "\n"


def render(records, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(records)
    cells = collect(records)
    if fmt == "markdown":
        return to_markdown(cells)
    if fmt == "json":
        return to_json(cells, records)
    raise ValueError(f"unknown format {fmt!r}; choose csv, json or markdown")


def export(records, path, fmt: str = "csv") -> None:
    """Write ``records`` to ``path`` in ``fmt`` (``csv``, ``json`` or ``markdown``)."""
    text = render(records, fmt)
    with open(path, "w", newline="") as fh:
        fh.write(text)
