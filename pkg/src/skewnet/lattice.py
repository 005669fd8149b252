"""Edge-based nets on boxes of Z^n and the two quad equations.

Directions are 0-based in the Python API; the JSON format labels them
``"1"..."n"``.  For a quad at ``x`` spanned by directions ``i`` and ``j`` the
short names are::

    pi  = p^i(x)        pj  = p^j(x)
    pij = p^i(x + e_j)  pji = p^j(x + e_i)

and the net equations read ``pi + pji = pj + pij`` and ``pji pi = pij pj``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg
from .algebra import DEFAULT_TOL, adjugate, invert, norm
from .errors import MissingEdge, NotClosed, NotEvolvable, NotInvertible, ValidationError

Coord = tuple[int, ...]


@dataclass(frozen=True)
class LatticeBox:
    """The box ``[0, e_1] x ... x [0, e_n]`` of Z^n."""

    extents: tuple[int, ...]

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if not ext or any(e < 0 for e in ext):
            raise ValidationError(f"invalid extents {self.extents}")
        object.__setattr__(self, "extents", ext)

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(e + 1 for e in self.extents)

    def vertices(self):
        """All vertices in lexicographic order."""
        return itertools.product(*(range(e + 1) for e in self.extents))

    def edges(self, j: int):
        """Base points of all direction-``j`` edges, lexicographically."""
        ranges = [range(e + 1) for e in self.extents]
        ranges[j] = range(self.extents[j])
        return itertools.product(*ranges)

    def contains(self, x) -> bool:
        return len(x) == self.dim and all(0 <= xi <= e for xi, e in zip(x, self.extents))

    def has_edge(self, j: int, x) -> bool:
        return self.contains(x) and x[j] < self.extents[j]

    def quads(self):
        """Yield ``(x, i, j)`` with ``i < j`` for every elementary quad."""
        for x in self.vertices():
            for i in range(self.dim):
                if x[i] >= self.extents[i]:
                    continue
                for j in range(i + 1, self.dim):
                    if x[j] < self.extents[j]:
                        yield x, i, j


def shift(x, j: int, k: int = 1) -> Coord:
    y = list(x)
    y[j] += k
    return tuple(y)


class EdgeNet:
    """Algebra values on directed edges ``(x, x + e_j)`` of a box.

    Missing edges are stored as ``None``; reading one raises
    :class:`MissingEdge`.
    """

    def __init__(self, box: LatticeBox | tuple, algebra: str | None = None):
        if not isinstance(box, LatticeBox):
            box = LatticeBox(tuple(box))
        self.box = box
        self.algebra = algebra
        self._data = [np.full(box.shape, None, dtype=object) for _ in range(box.dim)]
        self.meta: dict = {}

    @classmethod
    def from_axes(cls, axes, algebra: str | None = None) -> "EdgeNet":
        """Net whose only edges are ``axes[j][k] = p^j(k e_j)``."""
        ext = tuple(len(a) for a in axes)
        net = cls(LatticeBox(ext), algebra)
        for j, vals in enumerate(axes):
            for k, v in enumerate(vals):
                x = [0] * len(ext)
                x[j] = k
                net[j, tuple(x)] = v
        return net

    @property
    def dim(self) -> int:
        return self.box.dim

    def __getitem__(self, key):
        j, x = key
        x = tuple(x)
        if not self.box.has_edge(j, x):
            raise MissingEdge(f"edge {j + 1} outside the box", where=x)
        v = self._data[j][x]
        if v is None:
            raise MissingEdge(f"edge {j + 1} not set", where=x)
        return v

    def get(self, j: int, x, default=None):
        x = tuple(x)
        if not self.box.has_edge(j, x):
            return default
        v = self._data[j][x]
        return default if v is None else v

    def __setitem__(self, key, value):
        j, x = key
        x = tuple(x)
        if not self.box.has_edge(j, x):
            raise ValidationError(f"edge {j + 1} outside the box", where=x)
        if self.algebra is None and value is not None:
            self.algebra = alg.algebra_tag(value)
        self._data[j][x] = value

    def has(self, j: int, x) -> bool:
        x = tuple(x)
        return self.box.has_edge(j, x) and self._data[j][x] is not None

    def items(self, j: int | None = None):
        dirs = range(self.dim) if j is None else [j]
        for d in dirs:
            for x in self.box.edges(d):
                v = self._data[d][x]
                if v is not None:
                    yield d, x, v

    def is_complete(self) -> bool:
        return all(self._data[d][x] is not None for d in range(self.dim) for x in self.box.edges(d))

    def copy(self) -> "EdgeNet":
        out = EdgeNet(self.box, self.algebra)
        out._data = [a.copy() for a in self._data]
        out.meta = dict(self.meta)
        return out

    def map(self, fn) -> "EdgeNet":
        """Apply ``fn(value)`` edge-wise."""
        out = EdgeNet(self.box)
        for j, x, v in self.items():
            out[j, x] = fn(v)
        return out

    def map_indexed(self, fn) -> "EdgeNet":
        """Apply ``fn(j, x, value)`` edge-wise."""
        out = EdgeNet(self.box)
        for j, x, v in self.items():
            out[j, x] = fn(j, x, v)
        return out

    def quad(self, x, i: int, j: int):
        """``(pi, pj, pij, pji)`` of the quad at ``x`` in the ``(i, j)`` plane."""
        return self[i, x], self[j, x], self[i, shift(x, j)], self[j, shift(x, i)]

    def has_quad(self, x, i: int, j: int) -> bool:
        return self.has(i, x) and self.has(j, x) and self.has(i, shift(x, j)) and self.has(j, shift(x, i))

    def max_residuals(self):
        """Largest additive and multiplicative residual over complete quads."""
        worst_add = worst_mult = 0.0
        where = None
        for x, i, j in self.box.quads():
            if not self.has_quad(x, i, j):
                continue
            a, m = quad_residual(*self.quad(x, i, j))
            if max(a, m) > max(worst_add, worst_mult):
                where = (x, i, j)
            worst_add, worst_mult = max(worst_add, a), max(worst_mult, m)
        return worst_add, worst_mult, where

    def to_json(self) -> dict:
        edges = {}
        for j in range(self.dim):
            edges[str(j + 1)] = [{"x": list(x), "p": alg.to_json(v)} for _, x, v in self.items(j)]
        return {"dim": self.dim, "extents": list(self.box.extents), "algebra": self.algebra, "edges": edges}

    @classmethod
    def from_json(cls, d: dict, path: str = "$") -> "EdgeNet":
        if not isinstance(d, dict):
            raise ValidationError("net must be an object", where=path)
        extra = set(d) - {"dim", "extents", "algebra", "edges"}
        if extra:
            raise ValidationError(f"unknown fields {sorted(extra)}", where=path)
        try:
            box = LatticeBox(tuple(d["extents"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError("missing or invalid 'extents'", where=path + ".extents") from exc
        if "dim" in d and d["dim"] != box.dim:
            raise ValidationError("dim does not match extents", where=path + ".dim")
        net = cls(box, d.get("algebra"))
        edges = d.get("edges", {})
        if not isinstance(edges, dict):
            raise ValidationError("edges must be an object", where=path + ".edges")
        for key, entries in edges.items():
            if not key.isdigit() or not 1 <= int(key) <= box.dim:
                raise ValidationError(f"invalid direction {key!r}", where=f"{path}.edges")
            j = int(key) - 1
            for n, e in enumerate(entries):
                epath = f"{path}.edges.{key}[{n}]"
                if not isinstance(e, dict) or set(e) != {"x", "p"}:
                    raise ValidationError("edge entries need exactly 'x' and 'p'", where=epath)
                x = tuple(int(t) for t in e["x"])
                if not box.has_edge(j, x):
                    raise ValidationError(f"edge outside the box: {list(x)}", where=epath + ".x")
                net[j, x] = alg.from_json(e["p"], epath + ".p")
        return net

    def __repr__(self):
        return f"EdgeNet(extents={self.box.extents}, algebra={self.algebra!r})"


class VertexNet:
    """Algebra values on the vertices of a box."""

    def __init__(self, box: LatticeBox | tuple):
        if not isinstance(box, LatticeBox):
            box = LatticeBox(tuple(box))
        self.box = box
        self.values = np.full(box.shape, None, dtype=object)

    def __getitem__(self, x):
        v = self.values[tuple(x)]
        if v is None:
            raise MissingEdge("vertex not set", where=tuple(x))
        return v

    def __setitem__(self, x, value):
        self.values[tuple(x)] = value

    def items(self):
        for x in self.box.vertices():
            v = self.values[x]
            if v is not None:
                yield x, v

    def points(self, tol: float = 1e-9) -> np.ndarray:
        """Imaginary parts as an array of shape ``box.shape + (3,)``."""
        from .errors import NotEmbeddable

        out = np.zeros(self.box.shape + (3,))
        for x, v in self.items():
            if isinstance(v, alg.Mat2):
                if not v.is_quaternion(tol):
                    raise NotEmbeddable("vertex value is not a quaternion", where=x)
                v = alg.mat2_to_quat(v)
            if isinstance(v, alg.Quaternion):
                out[x] = v.vec
            elif isinstance(v, alg.Multivector):
                out[x] = v.vector_coords()[:3]
            else:
                raise NotEmbeddable("vertex value has no 3D interpretation", where=x)
        return out

    def to_json(self) -> dict:
        return {
            "dim": self.box.dim,
            "extents": list(self.box.extents),
            "vertices": [{"x": list(x), "f": alg.to_json(v)} for x, v in self.items()],
        }


# --------------------------------------------------------------------------
# Quad equations and evolution
# --------------------------------------------------------------------------


def quad_residual(pi, pj, pij, pji) -> tuple[float, float]:
    """Relative residuals of the additive and multiplicative quad equations."""
    scale = max(norm(pi), norm(pj), norm(pij), norm(pji))
    if scale == 0.0:
        return 0.0, 0.0
    add = norm(pi + pji - pj - pij) / scale
    mult = norm(pji * pi - pij * pj) / (scale * scale)
    return add, mult


def _diagonal_inverse(d, a, b, tol: float, where=None):
    scale = max(norm(a), norm(b), 1.0)
    if not norm(d) > tol * scale:
        raise NotEvolvable("diagonal is (numerically) zero", where=where)
    try:
        return invert(d, tol)
    except NotInvertible as exc:
        raise NotEvolvable(f"diagonal is not invertible: {exc}", where=where) from exc


def evolve_quad(pi, pj, tol: float = DEFAULT_TOL, where=None):
    """Forward evolution ``(pi, pj) -> (pij, pji)`` by conjugation with ``pj - pi``."""
    d = pj - pi
    dinv = _diagonal_inverse(d, pi, pj, tol, where)
    return d * pi * dinv, d * pj * dinv


def evolve_backward(pij, pji, tol: float = DEFAULT_TOL, where=None):
    """Inverse of :func:`evolve_quad`: ``(pij, pji) -> (pi, pj)``."""
    d = pji - pij
    dinv = _diagonal_inverse(d, pij, pji, tol, where)
    return dinv * pij * d, dinv * pji * d


def evolve_sideways(pj, pij, tol: float = DEFAULT_TOL, where=None):
    """Recover ``(pi, pji)`` from ``(pj, pij)`` for 2x2 matrices or quaternions."""
    d = pij - adjugate(pj)
    dinv = _diagonal_inverse(d, pj, pij, tol, where)
    return d * pij * dinv, d * pj * dinv


def fill_box(axes: EdgeNet, box: LatticeBox | None = None, tol: float = DEFAULT_TOL) -> EdgeNet:
    """Fill a box from values on the coordinate axes by forward evolution.

    Vertices are visited lexicographically.  When an edge is produced by
    more than one quad (n >= 3) the first value is kept and the largest
    discrepancy is stored in ``net.meta["consistency"]``.
    """
    box = box or axes.box
    net = EdgeNet(box, axes.algebra)
    for j in range(box.dim):
        for k in range(box.extents[j]):
            x = [0] * box.dim
            x[j] = k
            x = tuple(x)
            if not axes.has(j, x):
                raise MissingEdge(f"axis edge {j + 1} missing", where=x)
            net[j, x] = axes[j, x]
    worst = 0.0
    for x, i, j in box.quads():
        pi, pj = net[i, x], net[j, x]
        pij, pji = evolve_quad(pi, pj, tol, where=(x, i + 1, j + 1))
        for d, y, v in ((i, shift(x, j), pij), (j, shift(x, i), pji)):
            old = net.get(d, y)
            if old is None:
                net[d, y] = v
            else:
                worst = max(worst, norm(old - v) / max(norm(v), 1e-300))
    net.meta["consistency"] = worst
    return net


def cube_consistency(pi, pj, pk, tol: float = DEFAULT_TOL) -> float:
    """Largest disagreement on the three far faces of a 3-cube, plus quad residuals."""
    net = fill_box(EdgeNet.from_axes([[pi], [pj], [pk]]), tol=tol)
    add, mult, _ = net.max_residuals()
    return max(net.meta["consistency"], add, mult)


# --------------------------------------------------------------------------
# Primitive maps
# --------------------------------------------------------------------------


def _first_nonzero(x) -> int:
    for i, xi in enumerate(x):
        if xi:
            return i
    raise ValueError("origin")


def integrate_primitive(p: EdgeNet, f0, tol: float = DEFAULT_TOL) -> VertexNet:
    """Vertex map with ``f(0) = f0`` and ``f(x + e_i) = f(x) + p^i(x)``."""
    f = VertexNet(p.box)
    f[(0,) * p.dim] = f0
    for x in p.box.vertices():
        if not any(x):
            continue
        i = _first_nonzero(x)
        y = shift(x, i, -1)
        f[x] = f[y] + p[i, y]
    scale = max([norm(v) for _, _, v in p.items()] + [1.0])
    for j, x, v in p.items():
        r = norm(f[shift(x, j)] - f[x] - v)
        if r > tol * scale:
            raise NotClosed(f"additive closure fails by {r:.3g}", where=(x, j + 1))
    return f


def multiplicative_primitive(p: EdgeNet, f0, tol: float = DEFAULT_TOL) -> VertexNet:
    """Vertex map with ``f(x + e_i) = p^i(x) f(x)^{-1}``."""
    f = VertexNet(p.box)
    f[(0,) * p.dim] = f0
    for x in p.box.vertices():
        if not any(x):
            continue
        i = _first_nonzero(x)
        y = shift(x, i, -1)
        f[x] = p[i, y] * invert(f[y], tol)
    for j, x, v in p.items():
        target = v * invert(f[x], tol)
        r = norm(f[shift(x, j)] - target)
        if r > tol * max(norm(target), 1.0):
            raise NotClosed(f"multiplicative closure fails by {r:.3g}", where=(x, j + 1))
    return f


# --------------------------------------------------------------------------
# Invariants and primary equivalence
# --------------------------------------------------------------------------


def edge_invariants(v) -> dict[str, complex]:
    """The two label invariants of an edge value."""
    if isinstance(v, alg.Quaternion):
        return {"real": v.w, "norm": v.norm()}
    if isinstance(v, alg.Mat2):
        return {"trace": v.trace(), "det": v.det()}
    if isinstance(v, alg.Multivector):
        return {"scalar": v.scalar_part, "det": v.det()}
    return {"value": v}


@dataclass
class LabellingReport:
    passed: bool
    max_deviation: float
    worst: tuple | None = None  # (direction 1-based, x, invariant name)
    per_direction: dict = field(default_factory=dict)


def labelling_check(p: EdgeNet, tol: float = DEFAULT_TOL) -> LabellingReport:
    """Check that edge invariants depend only on the edge's own coordinate."""
    worst, where = 0.0, None
    per_dir: dict[int, float] = {}
    for j, x, v in p.items():
        ref_x = tuple(xi if d == j else 0 for d, xi in enumerate(x))
        ref = p.get(j, ref_x)
        if ref is None:
            continue
        inv, inv_ref = edge_invariants(v), edge_invariants(ref)
        for name in inv:
            dev = abs(inv[name] - inv_ref[name]) / max(1.0, abs(inv_ref[name]))
            per_dir[j + 1] = max(per_dir.get(j + 1, 0.0), dev)
            if dev > worst:
                worst, where = dev, (j + 1, x, name)
    return LabellingReport(worst <= tol, worst, where, per_dir)


def conjugate_net(p: EdgeNet, c, tol: float = DEFAULT_TOL) -> EdgeNet:
    cinv = invert(c, tol)
    return p.map(lambda v: c * v * cinv)


def scale_net(p: EdgeNet, s) -> EdgeNet:
    if s == 0:
        raise ValidationError("scale factor must be nonzero")
    return p.map(lambda v: v * s)


def shift_net(p: EdgeNet, r) -> EdgeNet:
    return p.map(lambda v: v + r)


def primary_equivalent(p: EdgeNet, c=1.0, s=1.0, r=0.0, tol: float = DEFAULT_TOL) -> EdgeNet:
    """``c (s p + r) c^{-1}`` edge-wise."""
    return conjugate_net(shift_net(scale_net(p, s), r), c, tol)
