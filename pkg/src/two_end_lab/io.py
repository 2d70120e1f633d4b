"""Artifact formats: field dumps, CSV tables and the JSON report."""
import csv
import json
import math

import numpy as np

from .errors import DomainError
from .pde.grid import AxiGrid, BoundarySpec, ScalarField

SCHEMA = "two-end-lab/1"
FIELD_MAGIC = "axi-field"
FIELD_VERSION = "v1"


def _fmt(x):
    return repr(float(x))


def write_field(path, field):
    """Header ``axi-field v1 n_r n_z h_r h_z k c`` then n_z rows of n_r values."""
    g = field.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{FIELD_MAGIC} {FIELD_VERSION} {g.n_r} {g.n_z} {_fmt(g.h_r)} {_fmt(g.h_z)} "
                 f"{_fmt(field.k)} {_fmt(field.c)}\n")
        for row in field.values:
            fh.write(" ".join(_fmt(v) for v in row))
            fh.write("\n")


def read_field(path, bc=BoundarySpec()):
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 8 or head[0] != FIELD_MAGIC or head[1] != FIELD_VERSION:
            raise DomainError(f"{path}: not an {FIELD_MAGIC} {FIELD_VERSION} file")
        n_r, n_z = int(head[2]), int(head[3])
        h_r, h_z, k, c = (float(x) for x in head[4:])
        vals = np.loadtxt(fh, ndmin=2)
    if vals.shape != (n_z, n_r):
        raise DomainError(f"{path}: expected {n_z} x {n_r} values, found {vals.shape}")
    grid = AxiGrid(h_r * (n_r - 1), h_z * (n_z - 1), n_r, n_z)
    return ScalarField(grid, vals, bc, k=k, c=c)


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_curve_csv(path, curve):
    """Nodal curve samples: r, f, f', f''."""
    _write_rows(path, ("r", "f", "df", "d2f"), curve.to_rows())


def write_trajectory_csv(path, traj):
    _write_rows(path, ("r", "p", "dp", "mu"), traj.to_rows())


def write_branch_csv(path, branch):
    from .continuation import BRANCH_COLUMNS

    _write_rows(path, BRANCH_COLUMNS, branch.table())


def jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, payload):
    doc = {"schema": SCHEMA}
    doc.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(doc), fh, indent=2, allow_nan=False)
        fh.write("\n")
