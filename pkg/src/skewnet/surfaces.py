"""Cross-ratio systems, K-nets and constant curvature surfaces from 4D lattices.

A cross-ratio system is stored through its edge labels ``alpha[i][k]``
(label of the direction-``i`` edges leaving ``x_i = k``) and the vertex map
``s`` with ``d^i = alpha^i s_i s``.  Points are recovered by integration.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg
from .algebra import Mat2, Quaternion
from .errors import (
    BranchFailure,
    Degenerate,
    FrameSingular,
    Incompatible,
    LabelConflict,
    NotInvertible,
    PatternViolation,
    ValidationError,
)
from .factor import MatrixPolynomial, factorize_quaternionic
from .lattice import EdgeNet, LatticeBox, shift
from .lax import FamilyMember, transport, unfold_zero_folded

EPS = 1e-12
I2 = Mat2(np.eye(2))


# --------------------------------------------------------------------------
# Scalar quad rules
# --------------------------------------------------------------------------


def cross_ratio(a, b, c, d) -> complex:
    """``(a - b)(c - d) / ((b - c)(d - a))``."""
    den = (b - c) * (d - a)
    if abs(den) <= EPS * max(1.0, abs(a), abs(b), abs(c), abs(d)) ** 2:
        raise Degenerate("cross-ratio denominator vanishes")
    return complex((a - b) * (c - d) / den)


def cr_quad_complete(f, fi, fj, ai, aj) -> complex:
    """Fourth point with ``cr(f, fi, fij, fj) = (ai / aj)^2``."""
    q = (ai / aj) ** 2
    den = (f - fi) + q * (fj - f)
    if abs(den) <= EPS * max(1.0, abs(f), abs(fi), abs(fj)):
        raise Degenerate("cross-ratio completion is singular")
    return complex(((f - fi) * fj + q * (fj - f) * fi) / den)


def _ratio(num, den, what: str) -> complex:
    if abs(den) <= EPS * max(1.0, abs(num)):
        raise Degenerate(f"s-evolution denominator vanishes ({what})")
    return complex(num / den)


def s_forward(s, si, sj, ai, aj) -> complex:
    """``s_ij`` from ``s, s_i, s_j``."""
    return s * _ratio(aj * sj - ai * si, aj * si - ai * sj, "forward")


def s_backward(si, sj, sij, ai, aj) -> complex:
    """``s`` from ``s_i, s_j, s_ij``."""
    return sij * _ratio(aj * si - ai * sj, aj * sj - ai * si, "backward")


def s_side_j(s, si, sij, ai, aj) -> complex:
    """``s_j`` from ``s, s_i, s_ij``."""
    return si * _ratio(sij * aj + s * ai, s * aj + sij * ai, "sideways")


def s_side_i(s, sj, sij, ai, aj) -> complex:
    """``s_i`` from ``s, s_j, s_ij``."""
    return sj * _ratio(s * aj + sij * ai, sij * aj + s * ai, "sideways")


def crossratio_edge(d, a) -> Mat2:
    """``[[0, d], [-a^2 / d, 0]]``."""
    if abs(d) <= EPS:
        raise Degenerate("vanishing edge")
    return Mat2(np.array([[0, d], [-(a * a) / d, 0]], dtype=complex))


# --------------------------------------------------------------------------
# Cross-ratio lattices
# --------------------------------------------------------------------------


@dataclass
class CrossRatioLattice:
    box: LatticeBox
    alpha: tuple  # alpha[i] has one entry per direction-i edge index
    s: np.ndarray
    f0: complex = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.box = self.box if isinstance(self.box, LatticeBox) else LatticeBox(tuple(self.box))
        self.alpha = tuple(np.asarray(a, dtype=complex) for a in self.alpha)
        self.s = np.asarray(self.s, dtype=complex)
        if len(self.alpha) != self.box.dim:
            raise ValidationError("need one label array per direction")
        for i, a in enumerate(self.alpha):
            if a.shape != (self.box.extents[i],):
                raise ValidationError(f"alpha[{i}] must have {self.box.extents[i]} entries")
            if np.any(np.abs(a) <= EPS):
                raise ValidationError(f"alpha[{i}] has a zero label")
        if self.s.shape != self.box.shape:
            raise ValidationError(f"s must have shape {self.box.shape}")
        self._f = None

    @property
    def dim(self) -> int:
        return self.box.dim

    def label(self, i: int, x) -> complex:
        return complex(self.alpha[i][x[i]])

    def d(self, i: int, x) -> complex:
        return self.label(i, x) * self.s[shift(x, i)] * self.s[tuple(x)]

    def edge_matrix(self, i: int, x) -> Mat2:
        return crossratio_edge(self.d(i, x), self.label(i, x))

    @property
    def f(self) -> np.ndarray:
        """Vertex points, integrated from ``f0`` through first nonzero coordinates."""
        if self._f is None:
            f = np.zeros(self.box.shape, dtype=complex)
            for x in self.box.vertices():
                if not any(x):
                    f[x] = self.f0
                    continue
                i = next(k for k, v in enumerate(x) if v)
                y = shift(x, i, -1)
                f[x] = f[y] + self.d(i, y)
            self._f = f
        return self._f

    # -- checks ------------------------------------------------------------

    def cr_residual(self) -> tuple[float, int]:
        """Largest ``|cr - (alpha^i / alpha^j)^2|`` and the number of skipped quads.

        Quads with coinciding points (possible off the diagonal net of a 4D
        lattice) are skipped and counted.
        """
        f, worst, skipped = self.f, 0.0, 0
        for x, i, j in self.box.quads():
            xi, xj = shift(x, i), shift(x, j)
            xij = shift(xi, j)
            pts = (f[x], f[xi], f[xij], f[xj])
            scale = max(1.0, *(abs(p) for p in pts))
            if min(abs(a - b) for a, b in itertools.combinations(pts, 2)) <= 1e-9 * scale:
                skipped += 1
                continue
            target = (self.label(i, x) / self.label(j, x)) ** 2
            worst = max(worst, abs(cross_ratio(*pts) - target) / max(1.0, abs(target)))
        return worst, skipped

    def s_residual(self) -> float:
        """Largest relative violation of the s-evolution over all quads."""
        s, worst = self.s, 0.0
        for x, i, j in self.box.quads():
            ai, aj = self.label(i, x), self.label(j, x)
            xi, xj = shift(x, i), shift(x, j)
            lhs = s[shift(xi, j)] * (aj * s[xi] - ai * s[xj])
            rhs = s[x] * (aj * s[xj] - ai * s[xi])
            scale = max(1.0, abs(lhs), abs(rhs))
            worst = max(worst, abs(lhs - rhs) / scale)
        return worst

    def to_parallelogram(self) -> EdgeNet:
        net = EdgeNet(self.box, "mat2")
        for j in range(self.dim):
            for x in self.box.edges(j):
                net[j, x] = self.edge_matrix(j, x)
        return net

    def to_json(self) -> dict:
        return {
            "extents": list(self.box.extents),
            "alpha": [[[float(z.real), float(z.imag)] for z in a] for a in self.alpha],
            "s": {"re": self.s.real.tolist(), "im": self.s.imag.tolist()},
            "f0": [float(np.real(self.f0)), float(np.imag(self.f0))],
            "mode": self.meta.get("mode"),
        }

    @classmethod
    def from_json(cls, d, path: str = "$") -> "CrossRatioLattice":
        allowed = {"extents", "alpha", "s", "f0", "mode", "f"}
        if not isinstance(d, dict) or set(d) - allowed:
            raise ValidationError(f"unknown lattice fields {sorted(set(d) - allowed) if isinstance(d, dict) else ''}", where=path)
        try:
            alpha = [np.array([complex(*z) for z in a]) for a in d["alpha"]]
            if "f" in d and "s" not in d:
                f = np.array(d["f"]["re"], dtype=float) + 1j * np.array(d["f"]["im"], dtype=float)
                return cls.from_points(f, alpha)
            s = np.array(d["s"]["re"], dtype=float) + 1j * np.array(d["s"]["im"], dtype=float)
            f0 = complex(*d.get("f0", [0.0, 0.0]))
            return cls(LatticeBox(tuple(d["extents"])), alpha, s, f0, {"mode": d.get("mode")})
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"invalid lattice: {exc}", where=path) from exc

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_points(cls, f, alpha, tol: float = 1e-9) -> "CrossRatioLattice":
        """Recover ``s`` from points and labels; checks the factorization."""
        f = np.asarray(f, dtype=complex)
        box = LatticeBox(tuple(n - 1 for n in f.shape))
        s = np.zeros(f.shape, dtype=complex)
        alpha = [np.asarray(a, dtype=complex) for a in alpha]
        for x in box.vertices():
            if not any(x):
                s[x] = 1.0
                continue
            i = next(k for k, v in enumerate(x) if v)
            y = shift(x, i, -1)
            s[x] = _ratio(f[x] - f[y], alpha[i][y[i]] * s[y], "points")
        lat = cls(box, alpha, s, complex(f[(0,) * box.dim]))
        # every edge, not only the spanning tree used above, must factor as alpha s_i s
        err = max(abs(f[shift(x, j)] - f[x] - lat.d(j, x)) for j in range(box.dim) for x in box.edges(j))
        err /= max(1.0, np.abs(f).max())
        if err > tol:
            raise ValidationError(f"points are not a cross-ratio system with these labels ({err:.3g})")
        return lat

    @classmethod
    def from_axes(cls, alpha, s_axes, f0=0.0) -> "CrossRatioLattice":
        """Fill ``s`` from its values on the coordinate axes (``s(0) = 1``)."""
        alpha = [np.asarray(a, dtype=complex) for a in alpha]
        box = LatticeBox(tuple(len(a) for a in alpha))
        s = np.full(box.shape, np.nan, dtype=complex)
        s[(0,) * box.dim] = 1.0
        for i, ax in enumerate(s_axes):
            ax = np.asarray(ax, dtype=complex)
            if ax.shape != (box.extents[i],):
                raise ValidationError(f"axis {i} needs {box.extents[i]} values (s(0) = 1 is implied)")
            for k, v in enumerate(ax):
                x = [0] * box.dim
                x[i] = k + 1
                s[tuple(x)] = v
        _fill_s(box, alpha, s)
        return cls(box, alpha, s, f0)

    @classmethod
    def square_grid(cls, m: int, n: int, rotation: complex = 1.0) -> "CrossRatioLattice":
        """``f = k + i l`` with labels ``rotation * (1, i)``."""
        f = np.add.outer(np.arange(m + 1), 1j * np.arange(n + 1))
        alpha = [np.full(m, rotation, dtype=complex), np.full(n, 1j * rotation, dtype=complex)]
        return cls.from_points(f, alpha)


def _fill_s(box: LatticeBox, alpha, s: np.ndarray) -> None:
    """Complete undefined (NaN) entries of ``s`` by forward evolution.

    Every vertex off the axes closes several quads; the one whose
    denominator is least cancelling is used.  Ties keep the first pair, so
    the fill is deterministic.
    """
    for x in box.vertices():
        if not np.isnan(s[x]):
            continue
        nz = [k for k, v in enumerate(x) if v]
        if len(nz) < 2:
            raise ValidationError(f"axis value missing at {x}")
        best = None
        for i, j in itertools.combinations(nz, 2):
            y = shift(shift(x, i, -1), j, -1)
            ai, aj = alpha[i][y[i]], alpha[j][y[j]]
            si, sj = s[shift(y, i)], s[shift(y, j)]
            size = abs(aj * si) + abs(ai * sj)
            quality = abs(aj * si - ai * sj) / size if size else 0.0
            if best is None or quality > best[0]:
                best = (quality, i, j, y)
        _, i, j, y = best
        s[x] = s_forward(s[y], s[shift(y, i)], s[shift(y, j)], alpha[i][y[i]], alpha[j][y[j]])


def dual_lattice(lat: CrossRatioLattice) -> CrossRatioLattice:
    """Dual system with edges ``(alpha^i)^2 / d^i``; this is ``s -> 1/s``."""
    if np.any(np.abs(lat.s) <= EPS):
        raise Degenerate("s vanishes")
    return CrossRatioLattice(lat.box, lat.alpha, 1.0 / lat.s, 0.0, dict(lat.meta))


def cr_to_parallelogram(lat: CrossRatioLattice) -> EdgeNet:
    return lat.to_parallelogram()


# --------------------------------------------------------------------------
# K-nets
# --------------------------------------------------------------------------


def _is_planar_ij(q, tol: float) -> bool:
    if isinstance(q, Mat2):
        if q.quaternion_residual() > tol:
            return False
        q = alg.mat2_to_quat(q)
    return isinstance(q, Quaternion) and abs(q.w) <= tol and abs(q.z) <= tol


def knet_family(p: EdgeNet, t: float, tol: float = 1e-9) -> FamilyMember:
    """Associated family member of a planar net on ``(e^t, e^-t)``."""
    for j, x, v in p.items():
        if not _is_planar_ij(v, tol * max(1.0, alg.norm(v))):
            raise ValidationError("edges must lie in span(i, j)", where=(j + 1, x))
    return unfold_zero_folded(p, t, tol)


def star_planarity(p: EdgeNet) -> float:
    """Largest normalized volume spanned by three edges of a vertex star."""
    from .lax import _imag3

    worst = 0.0
    for x in p.box.vertices():
        vecs = []
        for j in range(p.dim):
            for y in (x, shift(x, j, -1)):
                v = p.get(j, y)
                if v is not None:
                    w = _imag3(v)
                    nv = np.linalg.norm(w)
                    if nv > 0:
                        vecs.append(w / nv)
        for a, b, c in itertools.combinations(vecs, 3):
            worst = max(worst, abs(float(np.dot(a, np.cross(b, c)))))
    return worst


def classic_knet_matrices(x, y, lam) -> tuple[Mat2, Mat2]:
    """Classic K-net Lax pair ``L = [[x, i lam], [i lam, conj x]]``, ``M = [[1, y/lam], [-conj y/lam, 1]]``."""
    L = Mat2(np.array([[x, 1j * lam], [1j * lam, np.conj(x)]], dtype=complex))
    M = Mat2(np.array([[1, y / lam], [-np.conj(y) / lam, 1]], dtype=complex))
    return L, M


def classic_compatibility(x: np.ndarray, y: np.ndarray, lams=(0.5, 1.0, 2.0)) -> float:
    """Largest ``|L_2 M - M_1 L|`` over quads; ``x`` lives on direction-1 edges, ``y`` on direction-2 edges."""
    x, y = np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)
    worst = 0.0
    for lam in lams:
        for k in range(x.shape[0]):
            for l in range(y.shape[1]):
                L, M = classic_knet_matrices(x[k, l], y[k, l], lam)
                L2, _ = classic_knet_matrices(x[k, l + 1], 0, lam)
                _, M1 = classic_knet_matrices(0, y[k + 1, l], lam)
                worst = max(worst, (L2 * M - M1 * L).norm())
    return worst


def gauge_classic_knet(x, y, tol: float = 1e-10) -> EdgeNet:
    """Planar quaternionic net ``(a, b)`` gauge equivalent to the classic pair.

    Even ``k``: ``a = -i conj(x)``, ``b = y``; odd ``k``: ``a = -i x``, ``b = -conj(y)``.
    """
    x, y = np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)
    K, L1 = x.shape
    if y.shape != (K + 1, L1 - 1):
        raise ValidationError("x must have shape (K, L+1) and y shape (K+1, L)")
    err = classic_compatibility(x, y)
    if err > tol * max(1.0, np.abs(x).max(), np.abs(y).max()) ** 2:
        raise Incompatible(f"classic data is not compatible ({err:.3g})")
    net = EdgeNet(LatticeBox((K, L1 - 1)), "quat")
    for j in range(2):
        for pt in net.box.edges(j):
            k = pt[0]
            if j == 0:
                v = -1j * (np.conj(x[pt]) if k % 2 == 0 else x[pt])
            else:
                v = y[pt] if k % 2 == 0 else -np.conj(y[pt])
            net[j, pt] = _offdiag_quat(v)
    return net


def knet_to_classic(p: EdgeNet) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`gauge_classic_knet`."""
    K, L = p.box.extents
    x = np.zeros((K, L + 1), dtype=complex)
    y = np.zeros((K + 1, L), dtype=complex)
    for j, pt, v in p.items():
        a = _offdiag_entry(v)
        even = pt[0] % 2 == 0
        if j == 0:
            x[pt] = np.conj(1j * a) if even else 1j * a
        else:
            y[pt] = a if even else -np.conj(a)
    return x, y


def _offdiag_quat(a: complex) -> Quaternion:
    # [[0, a], [-conj a, 0]] corresponds to y - i x = a
    return Quaternion(0.0, -a.imag, a.real, 0.0)


def _offdiag_entry(v) -> complex:
    m = v.to_mat2().m if isinstance(v, Quaternion) else v.m
    return complex(m[0, 1])


def classic_sym(x, y, t: float) -> np.ndarray:
    """``Im(Phi^{-1} Phi')`` of the classic pair at ``lam = e^t`` (as 3-vectors)."""
    x, y = np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)
    lam = math.exp(t)
    box = LatticeBox((x.shape[0], y.shape[1]))

    def step(j, pt):
        if j == 0:
            L, _ = classic_knet_matrices(x[pt], 0, lam)
            dL = Mat2(np.array([[0, 1j * lam], [1j * lam, 0]]))
            return L, dL
        _, M = classic_knet_matrices(0, y[pt], lam)
        dM = Mat2(np.array([[0, -y[pt] / lam], [np.conj(y[pt]) / lam, 0]]))
        return M, dM

    phi, dphi = transport(box, step, I2, I2 * 0.0)
    return _sym_vectors(box, phi, dphi)


def _sym_vectors(box, phi, dphi) -> np.ndarray:
    out = np.zeros(box.shape + (3,))
    for pt in box.vertices():
        g = phi[pt].inverse() * dphi[pt]
        out[pt] = alg.mat2_to_quat(g).vec
    return out


# --------------------------------------------------------------------------
# 4D lattices
# --------------------------------------------------------------------------

CPLUS, CMINUS = "cplus", "cminus"


def _mode(mode: str) -> str:
    m = str(mode).lower().replace("+", "plus").replace("-", "minus")
    m = {"c+": CPLUS, "cplus": CPLUS, "cminus": CMINUS}.get(m, m)
    if m not in (CPLUS, CMINUS):
        raise ValidationError(f"unknown mode {mode!r}")
    return m


def partner_label(a: complex, mode: str) -> complex:
    """``alpha^3`` from ``alpha^1`` (and ``alpha^4`` from ``alpha^2``)."""
    return complex(-1.0 / np.conj(a)) if _mode(mode) == CPLUS else complex(np.conj(a))


def _dpw_partner(v: complex) -> complex:
    # s_1 conj(s_3) = 1
    if abs(v) <= EPS:
        raise Degenerate("s vanishes on the diagonal")
    return complex(1.0 / np.conj(v))


@dataclass
class Lattice4D(CrossRatioLattice):
    mode: str = CPLUS

    @property
    def diagonal_extents(self) -> tuple[int, int]:
        a, b, c, d = self.box.extents
        return min(a, c), min(b, d)

    def D(self, i: int, j: int) -> tuple[int, int, int, int]:
        return (i, j, i, j)

    def diagonal_vertices(self):
        n1, n2 = self.diagonal_extents
        for i in range(n1 + 1):
            for j in range(n2 + 1):
                yield i, j

    def dpw_residual(self) -> float:
        """Largest ``|s_1 conj(s_3) - 1|``, ``|s_2 conj(s_4) - 1|`` on D."""
        worst = 0.0
        for i, j in self.diagonal_vertices():
            x = self.D(i, j)
            for a, b in ((0, 2), (1, 3)):
                if self.box.has_edge(a, x) and self.box.has_edge(b, x):
                    worst = max(worst, abs(self.s[shift(x, a)] * np.conj(self.s[shift(x, b)]) - 1.0))
        return worst

    def label_residual(self) -> float:
        worst = 0.0
        for a, b in ((0, 2), (1, 3)):
            n = min(len(self.alpha[a]), len(self.alpha[b]))
            for k in range(n):
                worst = max(worst, abs(self.alpha[b][k] - partner_label(self.alpha[a][k], self.mode)))
        return worst

    def s_mode_residual(self) -> float:
        """Imaginary part of ``s`` (C+) or ``| |s| - 1 |`` (C-) on D."""
        vals = np.array([self.s[self.D(i, j)] for i, j in self.diagonal_vertices()])
        if self.mode == CPLUS:
            return float(np.max(np.abs(vals.imag)))
        return float(np.max(np.abs(np.abs(vals) - 1.0)))

    def beta(self, direction: int) -> np.ndarray:
        """``beta^2 = -alpha^a alpha^b`` along a diagonal direction, sign tracked."""
        a, b = (0, 2) if direction == 0 else (1, 3)
        n = self.diagonal_extents[direction]
        out = np.zeros(n, dtype=complex)
        prev = None
        for k in range(n):
            sq = -self.alpha[a][k] * self.alpha[b][k]
            r = cmath.sqrt(sq)
            if prev is not None and abs(r + prev) < abs(r - prev):
                r = -r
            if prev is not None and abs(abs(r - prev) - abs(r + prev)) <= 1e-12:
                raise BranchFailure("beta branch ambiguous", where=(direction + 1, k))
            out[k] = r
            prev = r
        return out


def extend_to_4d(seed: CrossRatioLattice, mode: str, extents=None) -> Lattice4D:
    """Unique 4D extension of a 2D seed with the C+ or C- reality conditions.

    Labels of directions 3 and 4 follow from those of 1 and 2.  The map ``s``
    is built row by row on the 1,3- and 2,4-planes from the diagonal
    condition ``s_1 conj(s_3) = 1`` and the s-evolution, then evolved into
    the box.  The fill order is fixed, so reruns are bit-identical.
    """
    mode = _mode(mode)
    if seed.dim != 2:
        raise ValidationError("seed must be two-dimensional")
    a, b = seed.box.extents
    ext = (a, b, a, b) if extents is None else tuple(int(e) for e in extents)
    if len(ext) != 4 or ext[0] > a or ext[1] > b or ext[2] > ext[0] or ext[3] > ext[1]:
        raise ValidationError(f"extents {ext} must satisfy c <= a <= {a}, d <= b <= {b}")
    A, B, C, Dd = ext
    al1, al2 = seed.alpha[0][:A], seed.alpha[1][:B]
    al3 = np.array([partner_label(z, mode) for z in al1[:C]], dtype=complex)
    al4 = np.array([partner_label(z, mode) for z in al2[:Dd]], dtype=complex)
    for (p, q), (u, v) in (((1, 3), (al1[:C], al3)), ((2, 4), (al2[:Dd], al4))):
        if np.any(u == v):
            raise LabelConflict(f"alpha^{p} = alpha^{q} is forced by the {mode} condition (real seed label)")
    alpha = (al1, al2, al3, al4)
    box = LatticeBox(ext)
    s = np.full(box.shape, np.nan, dtype=complex)
    s[:, :, 0, 0] = seed.s[: A + 1, : B + 1]
    _fill_diagonal_plane(s, 0, 2, alpha)
    _fill_diagonal_plane(s, 1, 3, alpha)
    _fill_s(box, alpha, s)
    lat = Lattice4D(box, alpha, s, seed.f0, {"mode": mode}, mode=mode)
    lat.meta["dpw_residual"] = lat.dpw_residual()
    lat.meta["s_residual"] = lat.s_residual()
    return lat


def _fill_diagonal_plane(s: np.ndarray, p: int, q: int, alpha) -> None:
    """Rows ``x_q = r`` of the p,q-plane from the axis ``x_q = 0``."""
    n, m = s.shape[p] - 1, s.shape[q] - 1
    ap, aq = alpha[p], alpha[q]

    def X(i, k):
        x = [0, 0, 0, 0]
        x[p], x[q] = i, k
        return tuple(x)

    for r in range(1, m + 1):
        s[X(r - 1, r)] = _dpw_partner(s[X(r, r - 1)])
        for i in range(r - 1, n):
            s[X(i + 1, r)] = s_forward(s[X(i, r - 1)], s[X(i + 1, r - 1)], s[X(i, r)], ap[i], aq[r - 1])
        for i in range(r - 2, -1, -1):
            try:
                s[X(i, r)] = s_side_j(s[X(i, r - 1)], s[X(i + 1, r - 1)], s[X(i + 1, r)], ap[i], aq[r - 1])
            except Degenerate as exc:
                raise Degenerate(
                    f"extension is not unique: the {p + 1},{q + 1}-quad leaves s free (alpha^{q + 1} = -alpha^{p + 1}?)",
                    where=X(i, r),
                ) from exc


# --------------------------------------------------------------------------
# Lax matrices on the diagonal net
# --------------------------------------------------------------------------


def _lax_factor(p: Mat2, lam) -> tuple[Mat2, Mat2]:
    """``lam + p / lam`` and its ``lam``-derivative."""
    return p * (1.0 / lam) + lam, I2 - p * (1.0 / lam**2)


def diagonal_lax(lat: Lattice4D, i: int, j: int, lam, direction: int = 0, derivative: bool = False):
    """``L`` (direction 0) or ``M`` (direction 1) on the D-edge leaving ``(i, j, i, j)``.

    With ``derivative`` the ``lam``-derivative is returned as well.
    """
    a, b = (0, 2) if direction == 0 else (1, 3)
    x = lat.D(i, j)
    if not (lat.box.has_edge(a, x) and lat.box.has_edge(b, shift(x, a))):
        raise ValidationError(f"no diagonal edge at {(i, j)} in direction {direction + 1}")
    first, dfirst = _lax_factor(lat.edge_matrix(a, x), lam)
    second, dsecond = _lax_factor(lat.edge_matrix(b, shift(x, a)), lam)
    L = second * first
    if not derivative:
        return L
    return L, dsecond * first + second * dfirst


def offdiagonal_residual(lat: Lattice4D) -> float:
    """``s_1 (a1 s + a3 s_13) - s_3 (a3 s + a1 s_13)`` over all 1,3-quads."""
    worst = 0.0
    for x, i, j in lat.box.quads():
        if (i, j) not in ((0, 2), (1, 3)):
            continue
        a1, a3 = lat.label(i, x), lat.label(j, x)
        s, s1, s3 = lat.s[x], lat.s[shift(x, i)], lat.s[shift(x, j)]
        s13 = lat.s[shift(shift(x, i), j)]
        lhs, rhs = s1 * (a1 * s + a3 * s13), s3 * (a3 * s + a1 * s13)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst


def cplus_gauge(L: Mat2, s, s13, beta) -> Mat2:
    """``beta^{-1} diag(1, s13) L diag(1, s)^{-1}``."""
    if abs(s) <= EPS:
        raise Degenerate("s vanishes")
    return Mat2(np.diag([1.0, s13]) @ L.m @ np.diag([1.0, 1.0 / s])) * (1.0 / beta)


def gauged_lax(lat: Lattice4D, i: int, j: int, lam, direction: int = 0, derivative: bool = False):
    """Diagonal Lax matrix, with the C+ gauge applied on C+ lattices."""
    out = diagonal_lax(lat, i, j, lam, direction, derivative)
    if lat.mode != CPLUS:
        return out
    a, b = (0, 2) if direction == 0 else (1, 3)
    x = lat.D(i, j)
    beta = lat.beta(direction)[(i, j)[direction]]
    s, s13 = lat.s[x], lat.s[shift(shift(x, a), b)]
    if derivative:
        return cplus_gauge(out[0], s, s13, beta), cplus_gauge(out[1], s, s13, beta)
    return cplus_gauge(out, s, s13, beta)


def _lam_for(mode: str, t: float) -> tuple[complex, complex]:
    """Spectral value and ``d lam / dt``: ``e^t`` (C-) or ``e^{i t}`` (C+)."""
    if mode == CPLUS:
        lam = cmath.exp(1j * t)
        return lam, 1j * lam
    lam = math.exp(t)
    return lam, lam


def lax_pattern_residual(lat: Lattice4D, lam) -> float:
    """Largest quaternion-pattern defect of the (gauged) D Lax matrices."""
    worst = 0.0
    n1, n2 = lat.diagonal_extents
    for direction, (m1, m2) in enumerate(((n1, n2 + 1), (n1 + 1, n2))):
        for i in range(m1):
            for j in range(m2):
                L = gauged_lax(lat, i, j, lam, direction)
                worst = max(worst, L.quaternion_residual() / max(1.0, L.norm()))
    return worst


def diagonal_compatibility(lat: Lattice4D, lam) -> float:
    """Largest ``|M(x + e13) L(x) - L(x + e24) M(x)|`` on D."""
    worst = 0.0
    n1, n2 = lat.diagonal_extents
    for i in range(n1):
        for j in range(n2):
            L, M = gauged_lax(lat, i, j, lam, 0), gauged_lax(lat, i, j, lam, 1)
            L2, M1 = gauged_lax(lat, i, j + 1, lam, 0), gauged_lax(lat, i + 1, j, lam, 1)
            lhs, rhs = M1 * L, L2 * M
            worst = max(worst, (lhs - rhs).norm() / max(1.0, lhs.norm()))
    return worst


@dataclass
class DiagonalSurface:
    t: float
    mode: str
    points: np.ndarray  # (n1 + 1, n2 + 1, 3)
    normals: np.ndarray
    pattern_residual: float

    def edge_lengths(self, direction: int) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=direction), axis=-1)

    def chebyshev_residual(self) -> float:
        """Spread of edge lengths across each row of parallel edges."""
        worst = 0.0
        for direction in (0, 1):
            lengths = self.edge_lengths(direction)
            spread = np.ptp(lengths, axis=1 - direction)
            worst = max(worst, float(np.max(spread)) if spread.size else 0.0)
        return worst

    def quads(self):
        n1, n2 = self.points.shape[:2]
        for i in range(n1 - 1):
            for j in range(n2 - 1):
                yield (i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)


def surface_extract(lat: Lattice4D, t: float, tol: float = 1e-9) -> DiagonalSurface:
    """Sym points ``Phi^{-1} Phi'`` over D with normals ``Phi^{-1} k Phi``."""
    lam, dlam = _lam_for(lat.mode, t)
    n1, n2 = lat.diagonal_extents
    box = LatticeBox((n1, n2))

    def step(direction, pt):
        A, dA = gauged_lax(lat, pt[0], pt[1], lam, direction, derivative=True)
        return A, dA * dlam

    try:
        phi, dphi = transport(box, step, I2, I2 * 0.0, tol)
    except FrameSingular:
        raise
    kmat = Quaternion(0, 0, 0, 1).to_mat2()
    pts = np.zeros(box.shape + (3,))
    nrm = np.zeros(box.shape + (3,))
    worst = 0.0
    for pt in box.vertices():
        try:
            inv = phi[pt].inverse()
        except NotInvertible as exc:
            raise FrameSingular("frame not invertible", where=pt) from exc
        g = inv * dphi[pt]
        n = inv * kmat * phi[pt]
        res = max(g.quaternion_residual() / max(1.0, g.norm()), n.quaternion_residual())
        worst = max(worst, res)
        if res > tol:
            raise PatternViolation(f"Sym point is not quaternionic ({res:.3g})", where=pt)
        pts[pt] = alg.mat2_to_quat(g).vec
        nrm[pt] = alg.mat2_to_quat(n).vec
    return DiagonalSurface(t, lat.mode, pts, nrm, worst)


# --------------------------------------------------------------------------
# Classic CMC and cK gauges
# --------------------------------------------------------------------------

Jq = Quaternion(0, 0, 1, 0).to_mat2()
I_TWIST = Mat2(np.array([[0, 1j], [1j, 0]]))


def cmc_lax(a, b, lam) -> Mat2:
    """``[[a, lam b + 1/(lam b)], [-conj(b)/lam - lam/conj(b), conj(a)]]``."""
    bc = np.conj(b)
    return Mat2(np.array([[a, lam * b + 1 / (lam * b)], [-bc / lam - lam / bc, np.conj(a)]], dtype=complex))


def cmc_lax_dlam(a, b, lam) -> Mat2:
    bc = np.conj(b)
    return Mat2(np.array([[0, b - 1 / (lam * lam * b)], [bc / lam**2 - 1 / bc, 0]], dtype=complex))


def _hat(lat: Lattice4D, x) -> complex:
    """``s`` or ``1/s`` by the parity of ``x_1 + x_2``."""
    v = lat.s[x]
    return v if (x[0] + x[1]) % 2 == 0 else 1.0 / v


def _sqrt_hat(lat: Lattice4D, x) -> complex:
    return cmath.sqrt(_hat(lat, x))


def cmc_entries(lat: Lattice4D, i: int, j: int, direction: int = 0) -> tuple[complex, complex]:
    """Entries ``(a, b)`` of the classic CMC Lax matrix on a D-edge of a C+ lattice."""
    if lat.mode != CPLUS:
        raise ValidationError("cmc_entries needs a C+ lattice")
    p, q = (0, 2) if direction == 0 else (1, 3)
    x = lat.D(i, j)
    x1, x13 = shift(x, p), shift(shift(x, p), q)
    beta = lat.beta(direction)[(i, j)[direction]]
    a1, a3 = lat.label(p, x), lat.label(q, x)
    h, h13 = _sqrt_hat(lat, x), _sqrt_hat(lat, x13)
    sh, sh1, sh13 = _hat(lat, x), _hat(lat, x1), _hat(lat, x13)
    b = 1.0 / (beta * h13 * h)
    a = -(h * sh1 / (h13 * beta)) * (a3 * sh13 + a1 / sh)
    return complex(a), complex(b)


def cmc_gauge_target(lat: Lattice4D, i: int, j: int, lam, direction: int = 0) -> Mat2:
    """``sqrt(s / s13) G_13 L~(sqrt lam) G^{-1}`` with ``G = j^{i+j}``."""
    p, q = (0, 2) if direction == 0 else (1, 3)
    x = lat.D(i, j)
    x13 = shift(shift(x, p), q)
    Lt = gauged_lax(lat, i, j, cmath.sqrt(lam), direction)
    n = i + j
    G, G13 = _mat_power(Jq, n), _mat_power(Jq, n + 1)
    scale = cmath.sqrt(lat.s[x] / lat.s[x13])
    return G13 * Lt * G.inverse() * scale


def _mat_power(m: Mat2, n: int) -> Mat2:
    out = I2
    for _ in range(n % 4):
        out = out * m
    return out


def cmc_residual(lat: Lattice4D, lams=None) -> float:
    """Largest mismatch between assembled CMC matrices and the gauged lattice Lax matrices.

    Each edge is compared up to a global sign.
    """
    lams = lams or [cmath.exp(1j * t) for t in (0.0, 0.25, -0.5, 1.0)]
    worst = 0.0
    n1, n2 = lat.diagonal_extents
    for direction, (m1, m2) in enumerate(((n1, n2 + 1), (n1 + 1, n2))):
        for i in range(m1):
            for j in range(m2):
                a, b = cmc_entries(lat, i, j, direction)
                for lam in lams:
                    A, T = cmc_lax(a, b, lam), cmc_gauge_target(lat, i, j, lam, direction)
                    worst = max(worst, min((A - T).norm(), (A + T).norm()) / max(1.0, A.norm()))
    return worst


def ck_entries(lat: Lattice4D, i: int, j: int, direction: int = 0) -> tuple[complex, complex, complex, complex]:
    """``(r, r_next, t, l)`` of the cK Lax matrix on a D-edge of a C- lattice."""
    if lat.mode != CMINUS:
        raise ValidationError("ck_entries needs a C- lattice")
    p, q = (0, 2) if direction == 0 else (1, 3)
    x = lat.D(i, j)
    x1, x13 = shift(x, p), shift(shift(x, p), q)
    even = (i + j) % 2 == 0
    s, s1, s13 = lat.s[x], lat.s[x1], lat.s[x13]
    r = s if even else 1.0 / s
    r_next = 1.0 / s13 if even else s13
    l = 1.0 / (1j * s1) if even else 1j * s1
    return complex(r), complex(r_next), complex(lat.label(q, x)), complex(l)


def ck_lax(r, r1, t, l, lam) -> Mat2:
    return Mat2(
        np.array(
            [
                [l / (t * r) + t * l * r1, 1j * (lam - r * r1 / lam)],
                [1j * (lam - 1 / (lam * r * r1)), r / (t * l) + t / (l * r1)],
            ],
            dtype=complex,
        )
    )


def ck_gauge_target(lat: Lattice4D, i: int, j: int, lam, direction: int = 0) -> Mat2:
    n = i + j
    L = diagonal_lax(lat, i, j, cmath.sqrt(lam), direction)
    return _mat_power(I_TWIST, n + 1) * L * _mat_power(I_TWIST, n).inverse()


def ck_residual(lat: Lattice4D, lams=(0.5, 1.0, 2.0)) -> float:
    worst = 0.0
    n1, n2 = lat.diagonal_extents
    for direction, (m1, m2) in enumerate(((n1, n2 + 1), (n1 + 1, n2))):
        for i in range(m1):
            for j in range(m2):
                r, r1, t, l = ck_entries(lat, i, j, direction)
                for lam in lams:
                    A, T = ck_lax(r, r1, t, l, lam), ck_gauge_target(lat, i, j, lam, direction)
                    worst = max(worst, min((A - T).norm(), (A + T).norm()) / max(1.0, A.norm()))
    return worst


def cmc_pair(surface: DiagonalSurface, offset: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Shifted nets ``f + offset n`` and ``f - offset n`` of a C+ surface at ``t = 0``.

    The lattice spectral parameter squares to the classic one, so Sym points
    come out twice as large and the classic offset 1/2 becomes 1.
    """
    return surface.points + offset * surface.normals, surface.points - offset * surface.normals


def quaternionic_cross_ratio(a, b, c, d) -> Quaternion:
    a, b, c, d = (Quaternion.from_vector(v) for v in (a, b, c, d))
    return (a - b) * (b - c).inverse() * (c - d) * (d - a).inverse()


def circularity_residual(points: np.ndarray) -> float:
    """Largest imaginary part of the quaternionic cross-ratio over all quads."""
    worst = 0.0
    n1, n2 = points.shape[:2]
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            q = quaternionic_cross_ratio(points[i, j], points[i + 1, j], points[i + 1, j + 1], points[i, j + 1])
            worst = max(worst, q.imag().norm() / max(1.0, q.norm()))
    return worst


def cmc_entry_arrays(lat: Lattice4D):
    """``(a, b)`` on all direction-1 D-edges and ``(d, e)`` on all direction-2 D-edges."""
    n1, n2 = lat.diagonal_extents
    a = np.zeros((n1, n2 + 1), dtype=complex)
    b = np.zeros_like(a)
    d = np.zeros((n1 + 1, n2), dtype=complex)
    e = np.zeros_like(d)
    for i in range(n1):
        for j in range(n2 + 1):
            a[i, j], b[i, j] = cmc_entries(lat, i, j, 0)
    for i in range(n1 + 1):
        for j in range(n2):
            d[i, j], e[i, j] = cmc_entries(lat, i, j, 1)
    return _align_signs(a, b, d, e)


def _align_signs(a, b, d, e):
    """Flip entry signs edge by edge until the classic pair is compatible.

    The square roots in the entry formulas fix each matrix only up to sign;
    edges are fixed greedily in lexicographic quad order.
    """
    a, b, d, e = a.copy(), b.copy(), d.copy(), e.copy()
    n1, n2 = d.shape[0] - 1, a.shape[1] - 1
    lam = cmath.exp(0.37j)
    fixed_a = np.zeros(a.shape, bool)
    fixed_d = np.zeros(d.shape, bool)
    fixed_a[:, 0] = True
    fixed_d[0, :] = True
    for i in range(n1):
        for j in range(n2):
            L, M = cmc_lax(a[i, j], b[i, j], lam), cmc_lax(d[i, j], e[i, j], lam)
            L2, M1 = cmc_lax(a[i, j + 1], b[i, j + 1], lam), cmc_lax(d[i + 1, j], e[i + 1, j], lam)
            lhs = M1 * L
            best = min(
                ((sl, sm) for sl in (1, -1) for sm in (1, -1)),
                key=lambda g: (lhs * (g[1] * 1.0) - L2 * M * (g[0] * 1.0)).norm(),
            )
            # the sign of an unfixed edge absorbs the mismatch
            sign = best[0] * best[1]
            if sign < 0:
                if not fixed_a[i, j + 1]:
                    a[i, j + 1], b[i, j + 1] = -a[i, j + 1], -b[i, j + 1]
                elif not fixed_d[i + 1, j]:
                    d[i + 1, j], e[i + 1, j] = -d[i + 1, j], -e[i + 1, j]
            fixed_a[i, j + 1] = fixed_d[i + 1, j] = True
    return a, b, d, e


def cmc_compatibility(a, b, d, e, lam) -> float:
    worst = 0.0
    n1, n2 = d.shape[0] - 1, a.shape[1] - 1
    for i in range(n1):
        for j in range(n2):
            L, M = cmc_lax(a[i, j], b[i, j], lam), cmc_lax(d[i, j], e[i, j], lam)
            L2, M1 = cmc_lax(a[i, j + 1], b[i, j + 1], lam), cmc_lax(d[i + 1, j], e[i + 1, j], lam)
            lhs = M1 * L
            worst = max(worst, (lhs - L2 * M).norm() / max(1.0, lhs.norm()))
    return worst


@dataclass
class CMCCube:
    """Two-layer zero-folded quaternionic net obtained from classic CMC data."""

    net: EdgeNet  # extents (n1, n2, 1); edges u, v, w
    ts: tuple
    form_residual: float  # max |U - (cos t + sin t u)| over the t grid
    w_norm_residual: float
    quad_residual: float


def cmc_cube_gauge(a, b, d, e, ts=(0.0, 0.25, -0.25, 0.5, -0.5, 1.0), tol: float = 1e-8) -> CMCCube:
    """Gauge the classic CMC pair into ``cos t + sin t x`` form on two layers.

    The frame ``Phi`` of the classic pair at ``lam = e^{it}`` is split into
    layers ``G^{-1} Phi`` and ``G Phi`` (swapped at odd vertices) with
    ``G = diag(e^{it/2}, e^{-it/2})``, then normalized by its ``t = 0`` value.
    """
    a, b, d, e = (np.asarray(v, dtype=complex) for v in (a, b, d, e))
    n1, n2 = d.shape[0] - 1, a.shape[1] - 1
    for t in ts:
        err = cmc_compatibility(a, b, d, e, cmath.exp(1j * t))
        if err > tol:
            raise Incompatible(f"classic pair is not compatible at t={t} ({err:.3g})")
    box2 = LatticeBox((n1, n2))

    def frames(t):
        lam = cmath.exp(1j * t)

        def step(direction, pt):
            if direction == 0:
                return cmc_lax(a[pt], b[pt], lam), cmc_lax_dlam(a[pt], b[pt], lam) * (1j * lam)
            return cmc_lax(d[pt], e[pt], lam), cmc_lax_dlam(d[pt], e[pt], lam) * (1j * lam)

        return transport(box2, step, I2, I2 * 0.0)

    def layered(phi, dphi, t):
        g = Mat2(np.diag([cmath.exp(0.5j * t), cmath.exp(-0.5j * t)]))
        dg = Mat2(np.diag([0.5j * cmath.exp(0.5j * t), -0.5j * cmath.exp(-0.5j * t)]))
        ginv = g.inverse()
        dginv = Mat2(-(ginv.m @ dg.m @ ginv.m))
        out, dout = {}, {}
        for pt in box2.vertices():
            even = (pt[0] + pt[1]) % 2 == 0
            for layer in (0, 1):
                use_inv = even == (layer == 0)
                G, dG = (ginv, dginv) if use_inv else (g, dg)
                out[pt + (layer,)] = G * phi[pt]
                dout[pt + (layer,)] = dG * phi[pt] + G * dphi[pt]
        return out, dout

    phi0, dphi0 = frames(0.0)
    base, dbase = layered(phi0, dphi0, 0.0)
    inv0 = {k: v.inverse() for k, v in base.items()}
    sym = {k: alg.mat2_to_quat(inv0[k] * dbase[k]) for k in base}
    box3 = LatticeBox((n1, n2, 1))
    net = EdgeNet(box3, "quat")
    for j in range(3):
        for x in box3.edges(j):
            net[j, x] = sym[shift(x, j)] - sym[x]
    form = 0.0
    for t in ts:
        if t == 0.0:
            continue
        phi, dphi = frames(t)
        lay, _ = layered(phi, dphi, t)
        psi = {k: inv0[k] * lay[k] for k in lay}
        for j in range(3):
            for x in box3.edges(j):
                U = psi[shift(x, j)] * psi[x].inverse()
                expect = alg.quat_to_mat2(net[j, x] * math.sin(t) + math.cos(t))
                form = max(form, (U - expect).norm())
    wres = max(abs(net[2, x].norm() - 1.0) for x in box3.edges(2))
    add, mult, _ = net.max_residuals()
    return CMCCube(net, tuple(ts), form, wres, max(add, mult))


# --------------------------------------------------------------------------
# Breather factorizations
# --------------------------------------------------------------------------


@dataclass
class BreatherSplit:
    polynomial: MatrixPolynomial  # lam^2 L in the variable mu = lam^2
    crossratio_factors: tuple  # (p^1, p^3_1): poly = (mu + p^3_1)(mu + p^1)
    quaternionic: object  # QuaternionicFactorization
    crossratio_error: float
    quaternionic_error: float


def breather_factorizations(lat: Lattice4D, i: int, j: int, direction: int = 0) -> BreatherSplit:
    """Both splittings of the quadratic ``mu^2 + mu C + D = lam^2 L``, ``mu = lam^2``."""
    if lat.mode != CMINUS:
        raise ValidationError("breather factorizations need a C- lattice")
    a, b = (0, 2) if direction == 0 else (1, 3)
    x = lat.D(i, j)
    p1 = lat.edge_matrix(a, x)
    p3 = lat.edge_matrix(b, shift(x, a))
    poly = MatrixPolynomial([p3 * p1, p3 + p1, I2])
    if not poly.is_quaternionic(1e-9):
        raise PatternViolation(f"diagonal polynomial is not quaternionic ({poly.quaternion_residual():.3g})")
    cr = MatrixPolynomial([p3, I2]) * MatrixPolynomial([p1, I2])
    fac = factorize_quaternionic(poly)
    scale = max(1.0, poly.norm())
    return BreatherSplit(
        poly,
        (p1, p3),
        fac,
        cr.distance(poly) / scale,
        fac.product().distance(poly) / scale,
    )
