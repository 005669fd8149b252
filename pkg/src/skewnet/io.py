"""JSON and OBJ artifacts.

JSON is the archival format: floats go through ``repr`` (shortest exact
round-trip) and keys are sorted, so equal data gives byte-identical files.
OBJ is for viewing and prints 9 significant digits.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import NotEmbeddable, SkewNetError, ValidationError


class ArtifactIOError(SkewNetError):
    exit_code = 4


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [_plain(obj.real), _plain(obj.imag)]
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    try:
        Path(path).write_text(dumps(obj))
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc.strerror}") from exc


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc.msg}", where=f"line {exc.lineno} col {exc.colno}") from exc


# --------------------------------------------------------------------------
# OBJ
# --------------------------------------------------------------------------


def _v(p) -> str:
    return "v " + " ".join(f"{float(c) + 0.0:.9g}" for c in p)


def obj_polylines(curves) -> str:
    """Each ``(N, 3)`` array becomes one ``l`` element."""
    lines, offset = [], 0
    for pts in curves:
        pts = np.asarray(pts, dtype=float)
        lines += [_v(p) for p in pts]
    for pts in curves:
        n = len(pts)
        lines.append("l " + " ".join(str(offset + k + 1) for k in range(n)))
        offset += n
    return "\n".join(lines) + "\n"


def obj_quad_mesh(grid) -> str:
    """Grid of shape ``(m, n, 3)`` as quads ``(i,j) (i+1,j) (i+1,j+1) (i,j+1)``."""
    grid = np.asarray(grid, dtype=float)
    m, n = grid.shape[:2]
    lines = [_v(grid[i, j]) for i in range(m) for j in range(n)]

    def idx(i, j):
        return i * n + j + 1

    for i in range(m - 1):
        for j in range(n - 1):
            lines.append(f"f {idx(i, j)} {idx(i + 1, j)} {idx(i + 1, j + 1)} {idx(i, j + 1)}")
    return "\n".join(lines) + "\n"


def geometry_points(geometry) -> np.ndarray:
    """3D points of a curve, vertex net, diagonal surface or quadric net."""
    from .curves import DiscreteCurve
    from .lattice import VertexNet
    from .moutard import QuadricNet
    from .surfaces import DiagonalSurface

    if isinstance(geometry, DiscreteCurve):
        return geometry.points()
    if isinstance(geometry, DiagonalSurface):
        return geometry.points
    if isinstance(geometry, VertexNet):
        return geometry.points()
    if isinstance(geometry, QuadricNet):
        if geometry.f.shape[-1] < 3:
            raise NotEmbeddable("quadric net has fewer than 3 coordinates")
        return geometry.f[..., :3]
    arr = np.asarray(geometry, dtype=float)
    if arr.ndim not in (2, 3) or arr.shape[-1] != 3:
        raise NotEmbeddable("expected points with 3 coordinates")
    return arr


def to_obj(geometry) -> str:
    if isinstance(geometry, list):
        return obj_polylines([geometry_points(g) for g in geometry])
    pts = geometry_points(geometry)
    if pts.ndim == 2:
        return obj_polylines([pts])
    if pts.ndim == 3:
        return obj_quad_mesh(pts)
    raise NotEmbeddable(f"cannot mesh a {pts.ndim - 1}-dimensional lattice")


def export_obj(geometry, path) -> None:
    text = to_obj(geometry)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc.strerror}") from exc


def read_obj(text: str) -> tuple[np.ndarray, list[list[int]], list[list[int]]]:
    """Parse ``v``, ``f`` and ``l`` records (1-based indices kept)."""
    verts, faces, polys = [], [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(c) for c in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(c.split("/")[0]) for c in parts[1:]])
        elif parts[0] == "l":
            polys.append([int(c) for c in parts[1:]])
    return np.array(verts).reshape(-1, 3), faces, polys
