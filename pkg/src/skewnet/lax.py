"""Lax matrices, moving frames, the Sym formula and folding classes."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import algebra as alg
from .algebra import DEFAULT_TOL, invert, norm, one_like
from .errors import Degenerate, FrameSingular, Incompatible, NotInvertible, NotZeroFolded, ValidationError
from .lattice import EdgeNet, LatticeBox, VertexNet, shift


@dataclass(frozen=True)
class SpectralPath:
    """A curve ``t -> (lambda(t), mu(t))`` with derivatives."""

    name: str
    lam: Callable
    mu: Callable
    dlam: Callable
    dmu: Callable

    def at(self, t, tol: float = 1e-12):
        lam, mu, dlam, dmu = self.lam(t), self.mu(t), self.dlam(t), self.dmu(t)
        if abs(dlam * mu - lam * dmu) <= tol:
            raise Degenerate(f"path {self.name!r} is degenerate at t={t}")
        return lam, mu, dlam, dmu

    def ratio(self, t):
        return self.lam(t) / self.mu(t)

    @classmethod
    def linear(cls) -> "SpectralPath":
        return cls("linear", lambda t: t, lambda t: 1.0, lambda t: 1.0, lambda t: 0.0)

    @classmethod
    def exponential(cls) -> "SpectralPath":
        return cls("exp", math.exp, lambda t: math.exp(-t), math.exp, lambda t: -math.exp(-t))

    @classmethod
    def trigonometric(cls) -> "SpectralPath":
        return cls("trig", math.cos, math.sin, lambda t: -math.sin(t), math.cos)

    @classmethod
    def circle(cls) -> "SpectralPath":
        return cls(
            "circle",
            lambda t: cmath.exp(1j * t),
            lambda t: cmath.exp(-1j * t),
            lambda t: 1j * cmath.exp(1j * t),
            lambda t: -1j * cmath.exp(-1j * t),
        )

    @classmethod
    def from_table(cls, rows, name: str = "table") -> "SpectralPath":
        """Rows ``(t, lam, mu, dlam, dmu)``; only the tabulated ``t`` are valid."""
        table = {float(r[0]): tuple(r[1:5]) for r in rows}

        def pick(k):
            def f(t):
                try:
                    return table[float(t)][k]
                except KeyError:
                    raise ValidationError(f"t={t} not in the path table") from None

            return f

        return cls(name, pick(0), pick(1), pick(2), pick(3))

    @classmethod
    def named(cls, name: str) -> "SpectralPath":
        try:
            return {"linear": cls.linear, "exp": cls.exponential, "trig": cls.trigonometric, "circle": cls.circle}[name]()
        except KeyError:
            raise ValidationError(f"unknown spectral path {name!r}") from None


def lax_matrix(p, lam, mu):
    """``lam * 1 + mu * p``."""
    return p * mu + lam


@dataclass
class Frame:
    box: LatticeBox
    t: float
    phi: np.ndarray  # object array of algebra elements
    dphi: np.ndarray
    path: SpectralPath | None = None


@dataclass
class FamilyMember:
    t: float
    p: EdgeNet
    f: VertexNet | None = None
    frame: Frame | None = None


def transport(box: LatticeBox, step, phi0, dphi0=None, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``Phi(x + e_j) = A Phi(x)`` with ``(A, A') = step(j, x)``.

    The derivative obeys the product rule ``Phi'_j = A Phi' + A' Phi``.
    Vertices are reached through their first nonzero coordinate.
    """
    phi = np.full(box.shape, None, dtype=object)
    dphi = np.full(box.shape, None, dtype=object)
    origin = (0,) * box.dim
    phi[origin] = phi0
    dphi[origin] = dphi0 if dphi0 is not None else phi0 * 0.0
    for x in box.vertices():
        if not any(x):
            continue
        i = next(d for d, xi in enumerate(x) if xi)
        y = shift(x, i, -1)
        a, da = step(i, y)
        phi[x] = a * phi[y]
        dphi[x] = a * dphi[y] + (da * phi[y] if da is not None else phi[y] * 0.0)
        try:
            invert(phi[x], tol)
        except NotInvertible as exc:
            raise FrameSingular("frame lost invertibility", where=x) from exc
    return phi, dphi


def propagate_frame(p: EdgeNet, path: SpectralPath, t, phi0=None, tol: float = DEFAULT_TOL) -> Frame:
    """Moving frame ``Phi_i = (lam + mu p^i) Phi`` with its t-derivative."""
    add, mult, where = p.max_residuals()
    if max(add, mult) > tol:
        raise Incompatible(f"net violates the quad equations ({max(add, mult):.3g})", where=where)
    lam, mu, dlam, dmu = path.at(t)
    sample = next(v for _, _, v in p.items())
    if phi0 is None:
        phi0 = one_like(sample)
    try:
        invert(phi0, tol)
    except NotInvertible as exc:
        raise FrameSingular("initial frame not invertible", where=(0,) * p.dim) from exc

    def step(j, x):
        v = p[j, x]
        return lax_matrix(v, lam, mu), lax_matrix(v, dlam, dmu)

    phi, dphi = transport(p.box, step, phi0, tol=tol)
    return Frame(p.box, t, phi, dphi, path)


def associated_edges(p: EdgeNet, frame: Frame, tol: float = DEFAULT_TOL) -> EdgeNet:
    """Edges ``Phi_i^{-1} (P^i)' Phi`` of the associated family member."""
    _, _, dlam, dmu = frame.path.at(frame.t)

    def edge(j, x, v):
        try:
            return invert(frame.phi[shift(x, j)], tol) * lax_matrix(v, dlam, dmu) * frame.phi[x]
        except NotInvertible as exc:
            raise FrameSingular("frame not invertible", where=shift(x, j)) from exc

    return p.map_indexed(edge)


def sym_points(frame: Frame, tol: float = DEFAULT_TOL) -> VertexNet:
    """Sym formula ``f_t = Phi^{-1} Phi'``."""
    f = VertexNet(frame.box)
    for x in frame.box.vertices():
        try:
            f[x] = invert(frame.phi[x], tol) * frame.dphi[x]
        except NotInvertible as exc:
            raise FrameSingular("frame not invertible", where=x) from exc
    return f


def associated_family(p: EdgeNet, path: SpectralPath, t, phi0=None, tol: float = DEFAULT_TOL) -> FamilyMember:
    frame = propagate_frame(p, path, t, phi0, tol)
    return FamilyMember(t, associated_edges(p, frame, tol), sym_points(frame, tol), frame)


# --------------------------------------------------------------------------
# Folding
# --------------------------------------------------------------------------


@dataclass
class FoldingReport:
    zero_folded: bool
    equally_folded: bool
    max_trace: float
    max_det_deviation: float

    @property
    def kind(self) -> str:
        if self.zero_folded and self.equally_folded:
            return "zero_and_equally_folded"
        if self.zero_folded:
            return "zero_folded"
        if self.equally_folded:
            return "equally_folded"
        return "neither"


def classify_folding(p: EdgeNet, tol: float = DEFAULT_TOL) -> FoldingReport:
    """Zero-folded means ``tr p = 0``; equally folded means ``det p = 1``."""
    max_tr = max_det = 0.0
    for _, _, v in p.items():
        scale = max(1.0, norm(v))
        max_tr = max(max_tr, abs(alg.trace(v)) / scale)
        max_det = max(max_det, abs(alg.det(v) - 1.0))
    return FoldingReport(max_tr <= tol, max_det <= tol, max_tr, max_det)


def unfold_zero_folded(p: EdgeNet, t: float, tol: float = DEFAULT_TOL) -> FamilyMember:
    """Family member on the path ``(e^t, e^-t)``; it is equally folded."""
    rep = classify_folding(p, tol)
    if not rep.zero_folded:
        raise NotZeroFolded(f"max |tr p| = {rep.max_trace:.3g}")
    return associated_family(p, SpectralPath.exponential(), t, tol=tol)


@dataclass
class FoldingParameter:
    sigma: float
    sigma_alt: float
    planar: bool


def _imag3(q) -> np.ndarray:
    if isinstance(q, alg.Mat2):
        q = alg.mat2_to_quat(q)
    if isinstance(q, alg.Quaternion):
        return q.vec
    return np.asarray(q, dtype=float)


def _area(a, b, c) -> float:
    return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))


def folding_parameter(f, fi, fj, fij, tol: float = 1e-12) -> FoldingParameter:
    """``sin(delta) / |edge|`` at the edges ``f fi`` and ``f fj`` of the tetrahedron.

    With signed volume ``V`` and face areas ``A1, A2`` adjacent to an edge,
    ``sin(delta) / |edge| = 3 V / (2 A1 A2)``.
    """
    f, fi, fj, fij = (_imag3(v) for v in (f, fi, fj, fij))
    vol = float(np.dot(fi - f, np.cross(fj - f, fij - f))) / 6.0
    base = _area(f, fi, fj)
    a_i, a_j = _area(f, fi, fij), _area(f, fj, fij)
    if min(base, a_i, a_j) <= tol:
        raise Degenerate("quad has a degenerate face")
    scale = max(np.linalg.norm(fi - f), np.linalg.norm(fj - f), np.linalg.norm(fij - f)) ** 3
    if abs(vol) <= tol * scale:
        return FoldingParameter(0.0, 0.0, True)
    return FoldingParameter(3 * vol / (2 * base * a_i), 3 * vol / (2 * base * a_j), False)


def vertex_star_angles(p: EdgeNet) -> dict:
    """Pairwise angles between imaginary parts of edges incident to each vertex.

    Keys are vertices; values are ``(labels, angles)`` where ``labels`` lists
    ``(direction, +1 outgoing | -1 incoming)``.
    """
    out = {}
    for x in p.box.vertices():
        labels, dirs = [], []
        for j in range(p.dim):
            for sgn, y in ((1, x), (-1, shift(x, j, -1))):
                v = p.get(j, y)
                if v is None:
                    continue
                vec = _imag3(v)
                n = np.linalg.norm(vec)
                if n == 0:
                    continue
                labels.append((j + 1, sgn))
                dirs.append(vec / n)
        if len(dirs) >= 2:
            d = np.array(dirs)
            # atan2 of |a x b| and a.b stays accurate near 0 and pi, unlike arccos
            cross = np.linalg.norm(np.cross(d[:, None, :], d[None, :, :]), axis=-1)
            out[x] = (labels, np.arctan2(cross, d @ d.T))
    return out


# --------------------------------------------------------------------------
# Gauges and comparison
# --------------------------------------------------------------------------


def gauge_linear_lax(a_net: EdgeNet, b_net: EdgeNet, tol: float = DEFAULT_TOL) -> EdgeNet:
    """Turn ``lam A^i + mu B^i`` into ``lam + mu p^i`` by a vertex gauge."""
    sample = next(v for _, _, v in a_net.items())
    psi, _ = transport(a_net.box, lambda j, x: (a_net[j, x], None), one_like(sample), tol=tol)

    def edge(j, x, b):
        try:
            g = invert(psi[x], tol)
            return g * invert(a_net[j, x], tol) * b * psi[x]
        except NotInvertible as exc:
            raise FrameSingular("gauge needs invertible A", where=x) from exc

    out = b_net.map_indexed(edge)
    # closure of the gauge around quads: Psi must be path independent
    for x, i, j in a_net.box.quads():
        lhs = a_net[j, shift(x, i)] * a_net[i, x]
        rhs = a_net[i, shift(x, j)] * a_net[j, x]
        if norm(lhs - rhs) > tol * max(1.0, norm(lhs)):
            raise Incompatible("A-part of the representation is not compatible", where=(x, i + 1, j + 1))
    return out


def _as_matrix(v) -> np.ndarray:
    if isinstance(v, alg.Quaternion):
        return v.to_mat2().m
    if isinstance(v, alg.Mat2):
        return v.m
    if isinstance(v, alg.Multivector):
        return v.c.astype(complex)
    return np.array([[v, 0], [0, v]], dtype=complex)


def primary_affine_fit(p: EdgeNet, q: EdgeNet) -> tuple[complex, complex, float]:
    """Least-squares ``p = a + b q`` over all edges with scalars ``a, b``.

    Returns ``(a, b, residual)`` with the residual relative to the size of ``p``.
    """
    rows, rhs = [], []
    for j, x, v in p.items():
        pv, qv = _as_matrix(v).ravel(), _as_matrix(q[j, x]).ravel()
        one = _as_matrix(one_like(v)).ravel()
        rows.append(np.stack([one, qv], axis=1))
        rhs.append(pv)
    m, r = np.concatenate(rows), np.concatenate(rhs)
    coef, *_ = np.linalg.lstsq(m, r, rcond=None)
    res = float(np.max(np.abs(m @ coef - r)) / max(1.0, np.max(np.abs(r))))
    return complex(coef[0]), complex(coef[1]), res
