"""Versioned JSON persistence for solutions and tidy CSV emission.

Floats are serialized with Python's shortest round-trip repr, so every
stored double restores bit-identically.  Documents carry a schema version,
the tool version, the run parameters (including the seed whenever
randomness was possible) and a creation timestamp; the timestamp honors
``SOURCE_DATE_EPOCH`` so that identical runs can produce byte-identical
files.
"""

import csv
import json
import os
import time
from typing import Optional

import numpy as np

from . import __version__
from .config import RingConfig
from .core import LaxEigenvector
from .dynamics import InvariantReport, Trajectory
from .shooting import BrachSolution

SCHEMA_VERSION = 1
DOCUMENT_KIND = "ring-brachistochrone-solution"


def _created_utc() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def solution_to_document(sol: BrachSolution, run: Optional[dict] = None) -> dict:
    """JSON-serializable image of a solution (plus the run parameters)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": DOCUMENT_KIND,
        "tool": {"name": "ringctrl", "version": __version__},
        "created_utc": _created_utc(),
        "run": dict(run or {}),
        "config": {
            "n_sites": sol.config.n_sites,
            "lax_scale": sol.config.lax_scale,
            "transfer_time": sol.config.transfer_time,
            "boundary": sol.config.boundary,
        },
        "solution": {
            "l0": sol.l0,
            "tau": sol.tau,
            "j0": sol.j0,
            "j0_tau": sol.j0_tau,
            "residual_norm": sol.residual_norm,
            "converged": sol.converged,
            "a0": {"x": sol.a0.x.tolist(), "y": sol.a0.y.tolist()},
            "invariants": sol.invariants.to_dict(),
            "diagnostics": sol.diagnostics,
        },
        "trajectory": None,
    }
    if sol.trajectory is not None:
        doc["trajectory"] = {
            "times": sol.trajectory.times.tolist(),
            "xs": sol.trajectory.xs.tolist(),
            "ys": sol.trajectory.ys.tolist(),
        }
    return doc


def document_to_solution(doc: dict) -> BrachSolution:
    """Rebuild a :class:`BrachSolution` from a parsed document."""
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema_version {version!r} (this tool reads {SCHEMA_VERSION})"
        )
    if doc.get("kind") != DOCUMENT_KIND:
        raise ValueError(f"not a solution document (kind={doc.get('kind')!r})")
    c = doc["config"]
    config = RingConfig(
        n_sites=int(c["n_sites"]),
        lax_scale=float(c["lax_scale"]),
        transfer_time=float(c["transfer_time"]),
        boundary=c.get("boundary", "antiperiodic"),
    )
    s = doc["solution"]
    a0 = LaxEigenvector(np.array(s["a0"]["x"], dtype=float),
                        np.array(s["a0"]["y"], dtype=float))
    inv_fields = {k: v for k, v in s.get("invariants", {}).items()
                  if k in InvariantReport.__dataclass_fields__}
    trajectory = None
    t = doc.get("trajectory")
    if t is not None:
        trajectory = Trajectory(
            times=np.array(t["times"], dtype=float),
            xs=np.array(t["xs"], dtype=float),
            ys=np.array(t["ys"], dtype=float),
            config=config,
        )
    return BrachSolution(
        config=config,
        a0=a0,
        l0=float(s["l0"]),
        tau=float(s["tau"]),
        j0=float(s["j0"]),
        j0_tau=float(s["j0_tau"]),
        residual_norm=float(s["residual_norm"]),
        converged=bool(s["converged"]),
        invariants=InvariantReport(**inv_fields),
        trajectory=trajectory,
        diagnostics=dict(s.get("diagnostics", {})),
    )


def save_solution(path, sol: BrachSolution, run: Optional[dict] = None) -> dict:
    doc = solution_to_document(sol, run)
    write_document(path, doc)
    return doc


def _jsonable(obj):
    """Recursively coerce numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_document(path, doc: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(doc), fh, indent=1)
        fh.write("\n")


def load_document(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_solution(path) -> BrachSolution:
    return document_to_solution(load_document(path))


# CSV: long format, one observation per row.  Header row, comma separators,
# '.' decimal point, LF line endings; floats as shortest round-trip repr.
LONG_HEADER = ("time", "site", "quantity", "value")


def write_long_csv(path, rows, header=LONG_HEADER):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest exact round-trip decimal
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v
