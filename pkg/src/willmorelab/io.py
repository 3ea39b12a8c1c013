"""File formats: OBJ meshes, CSV tables, JSON reports.

Every artifact embeds a format-version field and the full run configuration
so outputs are reproducible byte for byte from their own header. Floats are
written with repr (shortest round-trip), which is deterministic.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .mobius import stereo_to_r3
from .surface import Immersion, ParamGrid, ScalarField

FORMAT_VERSION = 1

__all__ = [
    "FORMAT_VERSION",
    "dumps_json",
    "write_json",
    "write_csv",
    "write_scalar_csv",
    "write_obj",
    "read_obj",
]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def dumps_json(payload: dict, config: dict | None = None) -> str:
    doc = {"format_version": FORMAT_VERSION}
    if config is not None:
        doc["config"] = config
    doc.update(payload)
    return json.dumps(doc, indent=2) + "\n"


def write_json(path, payload: dict, config: dict | None = None) -> None:
    Path(path).write_text(dumps_json(payload, config))


def write_csv(path, columns, rows, config: dict | None = None) -> None:
    """CSV with a header row and provenance comment lines."""
    lines = [f"# format_version {FORMAT_VERSION}"]
    if config is not None:
        lines.append("# config " + json.dumps(config))
    lines.append(",".join(columns))
    for row in rows:
        if isinstance(row, dict):
            row = [row[c] for c in columns]
        lines.append(",".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_scalar_csv(path, field: ScalarField, config: dict | None = None) -> None:
    """Dump a scalar field as (u, v, value) rows."""
    uu, vv = field.grid.mesh()
    rows = zip(uu.ravel(), vv.ravel(), field.values.ravel())
    write_csv(path, ("u", "v", "value"), rows, config)


def write_obj(path, immersion: Immersion, config: dict | None = None) -> None:
    """Quad-mesh OBJ export; S^3 immersions are stereographically projected.

    A `# grid` comment carries the structured-grid metadata needed to read
    the mesh back as an Immersion.
    """
    grid = immersion.grid
    if immersion.ambient == "s3":
        positions = stereo_to_r3(immersion.positions)
        ambient = "s3_stereo"
    else:
        positions = immersion.positions
        ambient = "r3"
    lines = [
        "# willmorelab quad mesh",
        f"# format_version {FORMAT_VERSION}",
        f"# grid n_u={grid.n_u} n_v={grid.n_v} period_u={grid.period_u!r} "
        f"period_v={grid.period_v!r} ambient={ambient}",
    ]
    if config is not None:
        lines.append("# config " + json.dumps(config))
    flat = positions.reshape(-1, 3)
    for p in flat:
        lines.append(f"v {p[0]!r} {p[1]!r} {p[2]!r}")
    n_u, n_v = grid.n_u, grid.n_v
    for i in range(n_u):
        i2 = (i + 1) % n_u
        for j in range(n_v):
            j2 = (j + 1) % n_v
            a = i * n_v + j + 1
            b = i2 * n_v + j + 1
            c = i2 * n_v + j2 + 1
            d = i * n_v + j2 + 1
            lines.append(f"f {a} {b} {c} {d}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> Immersion:
    """Read an OBJ written by write_obj back into an R^3 immersion."""
    meta = None
    verts = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# grid "):
            meta = dict(tok.split("=", 1) for tok in line[len("# grid "):].split())
        elif line.startswith("v "):
            verts.append([float(t) for t in line.split()[1:4]])
    if meta is None:
        raise ValidationError(f"{path}: missing '# grid' metadata (not a willmorelab OBJ)")
    grid = ParamGrid(int(meta["n_u"]), int(meta["n_v"]),
                     float(meta["period_u"]), float(meta["period_v"]))
    positions = np.asarray(verts).reshape(grid.n_u, grid.n_v, 3)
    return Immersion(grid, "r3", positions)
