"""On-disk layout of a run directory.

``record.csv``
    Scheduled rows, header ``t,svn,slin,e1,e2,dcoh,valid``.
``energy.csv``
    Per-kick energies, header ``t,e1,e2,edge``.
``record.json``
    Sidecar with schema version, config, provenance, breach time and extras.
``marginals/marginal_t{t:06d}_{basis}_rotor{j}.txt``
    One probability per line; momentum files run from ``p = -n/2`` upward.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np

from ..errors import RotorError
from ..record import ROW_COLUMNS, RunRecord

SIDECAR_SCHEMA = 1
ENERGY_COLUMNS = ("t", "e1", "e2", "edge")
_MARGINAL_KEYS = {"x1": ("position", 1), "x2": ("position", 2), "p1": ("momentum", 1), "p2": ("momentum", 2)}
_MARGINAL_RE = re.compile(r"marginal_t(\d+)_(position|momentum)_rotor([12])\.txt$")


class ExportError(RotorError, OSError):
    pass


def fmt(v) -> str:
    """Shortest decimal that parses back to the same float."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def marginal_filename(t: int, key: str) -> str:
    basis, rotor = _MARGINAL_KEYS[key]
    return f"marginal_t{t:06d}_{basis}_rotor{rotor}.txt"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _write_lines(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def export_record(record: RunRecord, directory) -> Path:
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_lines(out / "record.csv", ROW_COLUMNS, record.rows())
        energy = zip(record.energy_t, record.energy_e1, record.energy_e2, record.energy_edge)
        _write_lines(out / "energy.csv", ENERGY_COLUMNS, energy)
        if record.marginals:
            mdir = out / "marginals"
            mdir.mkdir(exist_ok=True)
            for t, parts in sorted(record.marginals.items()):
                for key, values in parts.items():
                    (mdir / marginal_filename(int(t), key)).write_text(
                        "".join(fmt(v) + "\n" for v in values), encoding="utf-8"
                    )
        sidecar = {
            "schema": SIDECAR_SCHEMA,
            "columns": list(ROW_COLUMNS),
            "config": record.config,
            "provenance": record.provenance,
            "first_breach": record.first_breach,
            "complete": record.complete,
            "extras": record.extras,
        }
        (out / "record.json").write_text(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write run output to {out}: {exc}") from exc
    return out


def _read_csv(path: Path, header) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != tuple(header):
        raise ExportError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def load_record(directory) -> RunRecord:
    d = Path(directory)
    try:
        body = _read_csv(d / "record.csv", ROW_COLUMNS)
        cols = list(zip(*body)) if body else [()] * len(ROW_COLUMNS)
        rec = RunRecord.empty()
        for name, values in zip(ROW_COLUMNS, cols):
            if name == "t":
                arr = np.array([int(v) for v in values], dtype=np.int64)
            elif name == "valid":
                arr = np.array([v == "1" for v in values], dtype=bool)
            else:
                arr = np.array([float(v) for v in values], dtype=float)
            setattr(rec, name, arr)
        ep = d / "energy.csv"
        if ep.exists():
            ebody = _read_csv(ep, ENERGY_COLUMNS)
            ecols = list(zip(*ebody)) if ebody else [()] * 4
            rec.energy_t = np.array([int(v) for v in ecols[0]], dtype=np.int64)
            rec.energy_e1, rec.energy_e2, rec.energy_edge = (np.array([float(v) for v in c]) for c in ecols[1:])
        sp = d / "record.json"
        if sp.exists():
            meta = json.loads(sp.read_text(encoding="utf-8"))
            if meta.get("schema") != SIDECAR_SCHEMA:
                raise ExportError(f"{sp}: unsupported sidecar schema {meta.get('schema')!r}")
            rec.config = meta["config"]
            rec.provenance = meta["provenance"]
            rec.first_breach = meta["first_breach"]
            rec.complete = meta["complete"]
            rec.extras = meta["extras"]
        mdir = d / "marginals"
        if mdir.is_dir():
            keys = {v: k for k, v in _MARGINAL_KEYS.items()}
            for f in sorted(mdir.iterdir()):
                m = _MARGINAL_RE.match(f.name)
                if m:
                    t = int(m.group(1))
                    key = keys[(m.group(2), int(m.group(3)))]
                    values = np.array([float(s) for s in f.read_text(encoding="utf-8").split()])
                    rec.marginals.setdefault(t, {})[key] = values
    except OSError as exc:
        raise ExportError(f"cannot read run output from {d}: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise ExportError(f"malformed run output in {d}: {exc}") from exc
    return rec


def write_table(path, header, rows) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        _write_lines(Path(path), header, rows)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
