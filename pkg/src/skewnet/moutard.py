"""Moutard nets in quadrics of R^{p,q} and their Clifford parallelogram nets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Multivector, clifford_algebra, invert
from .errors import Degenerate, GradeViolation, NotInvertible, FrameSingular, ValidationError
from .lattice import EdgeNet, LatticeBox, shift
from .lax import SpectralPath, associated_edges, propagate_frame

_GUARD = 1e-10


def _metric(p: int, q: int) -> np.ndarray:
    return np.array([1.0] * p + [-1.0] * q)


def inner(u, v, p: int, q: int) -> float:
    return float(np.dot(_metric(p, q) * np.asarray(u, float), np.asarray(v, float)))


def moutard_complete(f, fi, fj, kappa: float, p: int, q: int = 0) -> np.ndarray:
    """Fourth vertex ``f + <f, fi - fj> / (kappa - <fi, fj>) (fj - fi)``.

    With ``d = fj - fi`` on the quadric, ``kappa - <fi, fj> = <d, d> / 2``; using
    ``<d, d>`` makes the step a reflection of ``f``, so ``<f, f>`` is kept
    exactly instead of accumulating drift across a large net.
    """
    f, fi, fj = (np.asarray(v, dtype=float) for v in (f, fi, fj))
    diag = fj - fi
    scale = max(1.0, abs(kappa), float(np.abs(f).max()), float(np.abs(fi).max()), float(np.abs(fj).max())) ** 2
    if np.linalg.norm(diag) <= _GUARD * np.sqrt(scale):
        raise Degenerate("diagonal f_j - f_i vanishes")
    den = 0.5 * inner(diag, diag, p, q)
    if abs(den) <= _GUARD * scale:
        raise Degenerate("kappa - <f_i, f_j> vanishes")
    a = inner(f, fi - fj, p, q) / den
    if abs(a) * np.linalg.norm(diag) <= _GUARD * np.sqrt(scale):
        raise Degenerate("diagonal f_ij - f vanishes")
    return f + a * diag


def moutard_coefficient(f, fi, fj, kappa: float, p: int, q: int = 0) -> float:
    """``a_ij`` from ``a_ij (kappa - <fi, fj>) = <f, fi - fj>``."""
    return inner(f, np.subtract(fi, fj), p, q) / (kappa - inner(fi, fj, p, q))


@dataclass
class QuadricNet:
    p: int
    q: int
    kappa: float
    f: np.ndarray  # box.shape + (p + q,)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        n = self.p + self.q
        if n < 1 or n > 5:
            raise ValidationError("signatures need 1 <= p + q <= 5")
        if self.f.shape[-1] != n:
            raise ValidationError(f"vertex vectors must have {n} coordinates")

    @property
    def box(self) -> LatticeBox:
        return LatticeBox(tuple(n - 1 for n in self.f.shape[:-1]))

    @property
    def algebra(self):
        return clifford_algebra(self.p, self.q)

    def vector(self, x) -> Multivector:
        return self.algebra.vector(self.f[tuple(x)])

    def quadric_residual(self) -> float:
        vals = np.einsum("...i,i,...i->...", self.f, _metric(self.p, self.q), self.f)
        return float(np.max(np.abs(vals - self.kappa)))

    def moutard_residual(self) -> float:
        """Largest normalized wedge of the two diagonals over all quads."""
        worst = 0.0
        for x, i, j in self.box.quads():
            xi, xj = shift(x, i), shift(x, j)
            d1 = self.f[shift(xi, j)] - self.f[x]
            d2 = self.f[xj] - self.f[xi]
            wedge = np.outer(d1, d2) - np.outer(d2, d1)
            worst = max(worst, float(np.abs(wedge).max()) / max(1.0, np.linalg.norm(d1) * np.linalg.norm(d2)))
        return worst

    def labelling_residual(self) -> float:
        """``<f, f_i>`` must not depend on the coordinates transverse to ``i``."""
        box, worst = self.box, 0.0
        for x, i, j in box.quads():
            a = inner(self.f[x], self.f[shift(x, i)], self.p, self.q)
            b = inner(self.f[shift(x, j)], self.f[shift(shift(x, i), j)], self.p, self.q)
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
        return worst

    def to_json(self) -> dict:
        return {"signature": [self.p, self.q], "kappa": self.kappa, "f": self.f.tolist()}

    @classmethod
    def from_json(cls, d, path: str = "$") -> "QuadricNet":
        if not isinstance(d, dict) or set(d) - {"signature", "kappa", "f"}:
            raise ValidationError("quadric net accepts 'signature', 'kappa' and 'f'", where=path)
        try:
            p, q = (int(v) for v in d["signature"])
            return cls(p, q, float(d["kappa"]), np.array(d["f"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"invalid quadric net: {exc}", where=path) from exc


def random_quadric_point(rng: np.random.Generator, p: int, q: int, kappa: float) -> np.ndarray:
    """Random point with ``<f, f> = kappa``."""
    if kappa > 0 and p == 0 or kappa < 0 and q == 0:
        raise ValidationError(f"quadric <f,f> = {kappa} is empty in signature ({p},{q})")
    pos = rng.normal(size=p)
    neg = rng.normal(size=q) * 0.5
    if kappa >= 0 and p > 0:
        target = kappa + float(neg @ neg)
        pos *= np.sqrt(target) / max(np.linalg.norm(pos), 1e-300)
    else:
        target = -kappa + float(pos @ pos)
        neg *= np.sqrt(target) / max(np.linalg.norm(neg), 1e-300)
    return np.concatenate([pos, neg])


def random_moutard_net(
    p: int, q: int, kappa: float, extents, seed: int = 0, attempts: int = 1000, conditioning: float = 0.02
) -> QuadricNet:
    """Random axis vertices on the quadric, bulk filled by quad completion.

    Nets are rejected when some diagonal ``d`` is nearly null, i.e.
    ``|<d, d>| < conditioning * |d|^2`` in the Euclidean norm; in indefinite
    signature such quads make the completion blow up.
    """
    rng = np.random.default_rng(seed)
    box = LatticeBox(tuple(extents))
    n = p + q
    for _ in range(attempts):
        f = np.zeros(box.shape + (n,))
        try:
            for x in box.vertices():
                nz = [k for k, v in enumerate(x) if v]
                if len(nz) <= 1:
                    f[x] = random_quadric_point(rng, p, q, kappa)
                    continue
                i, j = nz[-2], nz[-1]
                y = shift(shift(x, i, -1), j, -1)
                d = f[shift(y, j)] - f[shift(y, i)]
                if abs(inner(d, d, p, q)) < conditioning * float(d @ d):
                    raise Degenerate("nearly null diagonal")
                f[x] = moutard_complete(f[y], f[shift(y, i)], f[shift(y, j)], kappa, p, q)
        except Degenerate:
            continue
        return QuadricNet(p, q, kappa, f)
    raise Degenerate("no nondegenerate net found")


def edge_reduction(net: QuadricNet) -> EdgeNet:
    """``p^i = f_i - f`` as grade-1 Clifford elements."""
    out = EdgeNet(net.box, "clifford")
    for j in range(net.box.dim):
        for x in net.box.edges(j):
            out[j, x] = net.vector(shift(x, j)) - net.vector(x)
    return out


def product_reduction(net: QuadricNet) -> EdgeNet:
    """``p^i = f_i f`` (grades 0 and 2)."""
    out = EdgeNet(net.box, "clifford")
    for j in range(net.box.dim):
        for x in net.box.edges(j):
            out[j, x] = net.vector(shift(x, j)) * net.vector(x)
    return out


def family_coefficients(path: SpectralPath, t: float, kappa: float) -> tuple[float, float]:
    """``(r, s)`` with ``q_t = r + s p_t``."""
    lam, mu, dlam, dmu = path.at(t)
    den = dlam * mu - lam * dmu
    return (lam * dlam - mu * dmu * kappa**2) / den, (mu**2 * kappa**2 - lam**2) / den


@dataclass
class MoutardFamilyMember:
    t: float
    net: QuadricNet
    r: float
    s: float
    identity_residual: float  # max |q_t - (r + s p_t)|, relative
    grade_residual: float


def moutard_family(net: QuadricNet, path: SpectralPath, t: float, phi0=None, tol: float = 1e-9) -> MoutardFamilyMember:
    """``f_t = Phi^{-1} f Phi`` for the frame of the product reduction."""
    p = product_reduction(net)
    frame = propagate_frame(p, path, t, phi0, tol=tol)
    pt = associated_edges(p, frame)
    ft = np.zeros_like(net.f)
    grade_res = 0.0
    vecs = {}
    for x in net.box.vertices():
        phi = frame.phi[x]
        try:
            g = invert(phi, tol) * net.vector(x) * phi
        except NotInvertible as exc:
            raise FrameSingular("frame not invertible", where=x) from exc
        extra = (g - g.grade(1)).norm() / max(1.0, g.norm())
        grade_res = max(grade_res, extra)
        if extra > tol:
            raise GradeViolation(f"conjugated vertex is not a vector ({extra:.3g})", where=x)
        vecs[x] = g.grade(1)
        ft[x] = g.vector_coords()
    r, s = family_coefficients(path, t, net.kappa)
    ident = 0.0
    for j, x, v in pt.items():
        qv = vecs[shift(x, j)] * vecs[x]
        rhs = v * s + r
        ident = max(ident, (qv - rhs).norm() / max(1.0, qv.norm()))
    return MoutardFamilyMember(t, QuadricNet(net.p, net.q, net.kappa, ft), float(r), float(s), ident, grade_res)
