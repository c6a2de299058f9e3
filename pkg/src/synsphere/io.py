"""CSV/JSON serialization of hybrid arcs."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .hybrid import HybridArc, Phase

KNOWN_DERIVED = ("V", "mu", "V1", "Kz", "ku", "Vp", "W1", "p_err", "v_err")


def state_names(arc: HybridArc) -> list[str]:
    names = arc.meta.get("state_names")
    if names:
        return list(names)
    return [f"s{i}" for i in range(arc.initial.size)]


def _fmt(v: float) -> str:
    return "%.17g" % v


def _infer_format(path, fmt):
    if fmt is not None:
        return fmt.lower()
    return "json" if str(path).lower().endswith(".json") else "csv"


def export_arc(arc: HybridArc, path, fmt: str | None = None, derived: dict | None = None) -> None:
    """Write an arc as CSV (one row per sample) or JSON (meta plus phases).

    Args:
        derived: optional per-sample columns in stacked order, appended after
            the state columns.
    """
    fmt = _infer_format(path, fmt)
    derived = derived or {}
    names = state_names(arc)
    t, j, X = arc.stacked()
    for k, col in derived.items():
        if np.asarray(col).shape != t.shape:
            raise ValueError(f"derived column {k!r} has {np.size(col)} entries, expected {t.size}")
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "j", *names, *derived])
            cols = [np.asarray(c, dtype=float) for c in derived.values()]
            for i in range(t.size):
                w.writerow([_fmt(t[i]), str(int(j[i])), *map(_fmt, X[i]), *(_fmt(c[i]) for c in cols)])
    elif fmt == "json":
        start = 0
        phases = []
        for p in arc.phases:
            stop = start + p.t.size
            entry = {"j": p.j, "t": p.t.tolist(), "x": p.x.tolist()}
            if derived:
                entry["derived"] = {k: np.asarray(c, dtype=float)[start:stop].tolist() for k, c in derived.items()}
            phases.append(entry)
            start = stop
        doc = {"meta": _jsonable(arc.meta), "phases": phases}
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}; use 'csv' or 'json'")


def load_arc(path, fmt: str | None = None, derived_names=KNOWN_DERIVED) -> HybridArc:
    """Read an arc written by :func:`export_arc`.

    For CSV the state is every column after ``t,j`` that is not in
    ``derived_names``; the metadata is limited to the state names.
    """
    fmt = _infer_format(path, fmt)
    path = Path(path)
    if fmt == "json":
        doc = json.loads(path.read_text())
        phases = [Phase(int(p["j"]), np.asarray(p["t"], dtype=float),
                        np.asarray(p["x"], dtype=float).reshape(len(p["t"]), -1))
                  for p in doc["phases"]]
        return HybridArc(phases, doc.get("meta", {}))
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:2] != ["t", "j"]:
        raise ValueError("CSV arc must start with columns t,j")
    keep = [i for i, n in enumerate(header) if i >= 2 and n not in derived_names]
    t = np.array([float(r[0]) for r in body])
    j = np.array([int(r[1]) for r in body])
    X = np.array([[float(r[i]) for i in keep] for r in body]).reshape(len(body), len(keep))
    phases = [Phase(int(k), t[j == k], X[j == k]) for k in np.unique(j)]
    return HybridArc(phases, {"state_names": [header[i] for i in keep]})


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
