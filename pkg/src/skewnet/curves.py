"""Arc-length space curves, their Bäcklund transformations and elastic rods.

Curves live in the imaginary quaternions.  A Bäcklund transformation with
parameter ``v`` maps an edge ``u`` to ``T_v(u) = (v - u) u (v - u)^{-1}``;
the connecting quaternions ``v`` are propagated along the curve by the
parallelogram equations.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .algebra import Quaternion
from .errors import (
    DegenerateDet,
    DegenerateFixedPoints,
    FactorizationError,
    IdentityMap,
    NearAntipodal,
    NotInvertible,
    OnSphere,
    PreconditionError,
    TooShort,
    ValidationError,
    ZeroBhat,
    ZeroE,
)
from .factor import MatrixPolynomial, det_poly, factorize_quaternionic, trace_poly

SPHERE_GUARD = 1e-8


def _q(v) -> Quaternion:
    if isinstance(v, Quaternion):
        return v
    v = np.asarray(v, dtype=float)
    if v.shape == (3,):
        return Quaternion.from_vector(v)
    if v.shape == (4,):
        return Quaternion.from_array(v)
    raise ValidationError("expected a quaternion, 3-vector or 4-vector")


def check_off_sphere(v: Quaternion, where=None) -> None:
    if abs(v.norm() - 1.0) <= SPHERE_GUARD and abs(v.w) <= SPHERE_GUARD:
        raise OnSphere(f"{v!r} lies on the unit sphere of imaginary quaternions", where=where)


@dataclass
class DiscreteCurve:
    """Base point plus unit imaginary edge quaternions."""

    base: Quaternion
    edges: list

    def __post_init__(self):
        self.base = _q(self.base)
        self.edges = [_q(u) for u in self.edges]

    def __len__(self) -> int:
        return len(self.edges)

    def points(self) -> np.ndarray:
        steps = np.array([u.vec for u in self.edges]).reshape(-1, 3)
        return np.vstack([self.base.vec, self.base.vec + np.cumsum(steps, axis=0)])

    def unit_error(self) -> float:
        """Largest deviation from unit length and from imaginarity."""
        if not self.edges:
            return 0.0
        return max(max(abs(u.norm() - 1.0), abs(u.w)) for u in self.edges)

    def validate(self, tol: float = 1e-9) -> None:
        for k, u in enumerate(self.edges):
            if abs(u.norm() - 1.0) > tol or abs(u.w) > tol:
                raise ValidationError("edge is not a unit imaginary quaternion", where=k)
        for k in range(1, len(self.edges)):
            if (self.edges[k] + self.edges[k - 1]).norm() <= 1e-6:
                raise ValidationError("consecutive edges are antipodal", where=k)

    def to_json(self) -> dict:
        return {"base": self.base.vec.tolist(), "edges": [u.vec.tolist() for u in self.edges]}

    @classmethod
    def from_json(cls, d, path: str = "$") -> "DiscreteCurve":
        if not isinstance(d, dict) or set(d) - {"base", "edges"}:
            raise ValidationError("curve object accepts only 'base' and 'edges'", where=path)
        try:
            return cls(Quaternion.from_vector(d.get("base", [0, 0, 0])), [Quaternion.from_vector(e) for e in d["edges"]])
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ValidationError(f"invalid curve: {exc}", where=path) from exc


def backlund_map(v, u) -> Quaternion:
    """``(v - u) u (v - u)^{-1}``."""
    v, u = _q(v), _q(u)
    check_off_sphere(v)
    d = v - u
    return d * u * d.inverse(1e-14)


@dataclass
class BacklundResult:
    curve: DiscreteCurve
    vs: list  # v at every vertex of the original curve


def backlund_curve(curve: DiscreteCurve, v0, k0: int = 0) -> BacklundResult:
    """Transform ``curve`` with ``v(k0) = v0``, propagating ``v`` both ways."""
    v0 = _q(v0)
    n = len(curve.edges)
    if not 0 <= k0 <= n:
        raise ValidationError(f"anchor {k0} outside 0..{n}")
    check_off_sphere(v0, where=k0)
    vs = [None] * (n + 1)
    new = [None] * n
    vs[k0] = v0
    for k in range(k0, n):
        u = curve.edges[k]
        ut = backlund_map(vs[k], u)
        new[k] = ut
        vs[k + 1] = vs[k] + ut - u
        check_off_sphere(vs[k + 1], where=k + 1)
    for k in range(k0 - 1, -1, -1):
        u = curve.edges[k]
        x = vs[k + 1] - u.conj()
        xinv = x.inverse(1e-14)
        vs[k] = x * vs[k + 1] * xinv
        new[k] = x * u * xinv
        check_off_sphere(vs[k], where=k)
    base = curve.base + vs[0].imag()
    return BacklundResult(DiscreteCurve(base, new), vs)


# --------------------------------------------------------------------------
# Block matrices [[A, B], [-B, A]]
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ABMatrix:
    """Quaternionic 2x2 block matrix ``[[A, B], [-B, A]]``."""

    A: Quaternion
    B: Quaternion

    def __mul__(self, other: "ABMatrix") -> "ABMatrix":
        a1, b1, a2, b2 = self.A, self.B, other.A, other.B
        return ABMatrix(a1 * a2 - b1 * b2, a1 * b2 + b1 * a2)

    def vec(self) -> "ABMatrix":
        return ABMatrix(self.A.imag(), self.B.imag())

    def norm(self) -> float:
        return float(np.hypot(self.A.norm(), self.B.norm()))

    def complex_trace(self) -> complex:
        return complex(self.A.w, self.B.w)

    def complex_det(self) -> complex:
        """``|B|^2 - |A|^2 - 2 <A, B> i`` with the Euclidean product on R^4."""
        ab = float(np.dot(self.A.as_array(), self.B.as_array()))
        return complex(self.B.norm2() - self.A.norm2(), -2.0 * ab + 0.0)

    def apply(self, u) -> Quaternion:
        """Action on the sphere: ``(A - B u) u (A - B u)^{-1}``."""
        u = _q(u)
        d = self.A - self.B * u
        return d * u * d.inverse(1e-14)

    def to_complex4(self) -> np.ndarray:
        a, b = self.A.to_mat2().m, self.B.to_mat2().m
        return np.block([[a, b], [-b, a]])


def t_matrix(v) -> ABMatrix:
    """Block form ``[[v, 1], [-1, v]]`` of ``T_v``."""
    return ABMatrix(_q(v), Quaternion(1.0))


def compose_chain(E, vs) -> ABMatrix:
    """``diag(E, E) T_{v(n-1)} ... T_{v(0)}``."""
    E = _q(E)
    if E.norm() <= 1e-14:
        raise ZeroE("E must be invertible")
    m = ABMatrix(E, Quaternion())
    for l, v in reversed(list(enumerate(vs))):
        v = _q(v)
        check_off_sphere(v, where=l)
        m = m * t_matrix(v)
    return m


def chain_polynomial(E, vs) -> MatrixPolynomial:
    """``E (lam + v(n-1)) ... (lam + v(0))`` as a polynomial in ``lam``."""
    out = MatrixPolynomial([_q(E)])
    for v in reversed(vs):
        out = out * MatrixPolynomial.linear(-_q(v))
    return out


@dataclass
class FixedPoints:
    u_plus: Quaternion
    u_minus: Quaternion
    alpha: float
    beta: float


def fixed_points(m: ABMatrix, tol: float = 1e-10) -> FixedPoints:
    """The two fixed points of the sphere map induced by ``m``.

    ``u = (+-beta + B') ^{-1} (+-alpha + A')`` with ``alpha + i beta`` the
    principal square root of the complex determinant of the imaginary part.
    """
    mv = m.vec()
    scale = max(1.0, m.norm())
    if mv.norm() <= tol * scale:
        raise IdentityMap("imaginary part of the chain vanishes")
    d = mv.complex_det()
    if abs(d) <= tol * scale * scale:
        raise DegenerateFixedPoints("the two fixed points coincide")
    s = cmath.sqrt(d)
    alpha, beta = s.real, s.imag
    out = []
    for sgn in (1.0, -1.0):
        num = mv.A + sgn * alpha
        den = mv.B + sgn * beta
        try:
            out.append(den.inverse(1e-14) * num)
        except NotInvertible as exc:
            raise DegenerateFixedPoints("fixed-point formula is singular") from exc
    return FixedPoints(out[0], out[1], alpha, beta)


@dataclass
class BacklundChain:
    """Layered Bäcklund data along an n-invariant curve.

    ``vs[k][l]`` is ``v(k, l)``; ``layers[k][l]`` is the edge ``u(k, l)`` of
    the ``l``-th transformed curve (``layers[k][0]`` is the curve itself).
    """

    E: Quaternion
    vs: list
    layers: list = field(default_factory=list)

    def polynomial(self, k: int) -> MatrixPolynomial:
        return chain_polynomial(self.E, self.vs[k])

    def invariants(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        p = self.polynomial(k)
        return trace_poly(p), det_poly(p)

    def invariant_drift(self) -> float:
        """Largest change of a trace/det coefficient along the curve."""
        t0, d0 = self.invariants(0)
        worst = 0.0
        for k in range(1, len(self.vs)):
            t, d = self.invariants(k)
            worst = max(worst, float(np.max(np.abs(t - t0))), float(np.max(np.abs(d - d0))))
        return worst

    def rotation_error(self) -> float:
        """Largest ``|u(k, n) - E^{-1} u(k) E|`` over the curve."""
        einv = self.E.inverse()
        return max((col[-1] - einv * col[0] * self.E).norm() for col in self.layers) if self.layers else 0.0


def ninvariant_construct(E, vs0, branch: int = 1, steps: int = 10) -> tuple[DiscreteCurve, BacklundChain]:
    """Curve mapped to a rotated copy of itself by ``len(vs0)`` Bäcklund steps."""
    E = _q(E)
    vs0 = [_q(v) for v in vs0]
    if not vs0:
        raise ValidationError("need at least one Bäcklund parameter")
    chain = BacklundChain(E, [vs0])
    edges: list[Quaternion] = []
    for i in range(steps):
        try:
            fp = fixed_points(compose_chain(E, chain.vs[i]))
        except (DegenerateFixedPoints, IdentityMap) as exc:
            exc.where = i
            raise
        if i == 0:
            u = fp.u_plus if branch >= 0 else fp.u_minus
        else:
            prev = edges[-1]
            u = max((fp.u_plus, fp.u_minus), key=lambda c: (c + prev).norm())
            if (u + prev).norm() <= 1e-6:
                raise DegenerateFixedPoints("both fixed points are antipodal to the previous edge", where=i)
        edges.append(u)
        col, nxt, cur = [u], [], u
        for l, v in enumerate(chain.vs[i]):
            ut = backlund_map(v, cur)
            w = v + ut - cur
            check_off_sphere(w, where=(i + 1, l))
            nxt.append(w)
            col.append(ut)
            cur = ut
        chain.layers.append(col)
        chain.vs.append(nxt)
    return DiscreteCurve(Quaternion(), edges), chain


# --------------------------------------------------------------------------
# Elastic rods
# --------------------------------------------------------------------------


@dataclass
class ElasticRod:
    """Output of :func:`elastic_construct`.

    ``bhat[k]`` sits at the vertex between ``edges[k]`` and ``edges[k + 1]``.
    """

    curve: DiscreteCurve
    bhat: list
    E: Quaternion

    def invariants(self) -> np.ndarray:
        """``(Re(B u_next), Re B)`` at every vertex carrying both."""
        e = self.curve.edges
        return np.array([[(b * e[k + 1]).w, b.w] for k, b in enumerate(self.bhat) if k + 1 < len(e)])


def elastic_construct(E, bhat0, u0, steps: int) -> ElasticRod:
    """Iterate ``u <- B^{-1} u B`` and ``B <- B + u E - E u`` (2-invariant curves)."""
    E, b, u = _q(E), _q(bhat0), _q(u0)
    if abs(u.norm() - 1.0) > 1e-9 or abs(u.w) > 1e-9:
        raise ValidationError("u0 must be a unit imaginary quaternion")
    if abs((u * b).w) <= 1e-12 and abs(b.w) <= 1e-12:
        raise PreconditionError("(Re(B u), Re B) vanishes")
    edges, bhat = [u], [b]
    for i in range(steps):
        try:
            binv = bhat[-1].inverse(1e-12)
        except NotInvertible as exc:
            raise ZeroBhat("B lost invertibility", where=i) from exc
        nxt = binv * edges[-1] * bhat[-1]
        edges.append(nxt)
        bhat.append(bhat[-1] + nxt * E - E * nxt)
    return ElasticRod(DiscreteCurve(Quaternion(), edges), bhat, E)


@dataclass
class ElasticFit:
    residual: float
    alpha: float
    beta: float
    e: Quaternion
    x: Quaternion
    singular_values: np.ndarray


def _cross_matrix(g: np.ndarray) -> np.ndarray:
    return np.array([[0, -g[2], g[1]], [g[2], 0, -g[0]], [-g[1], g[0], 0]])


def elastic_verify(curve: DiscreteCurve) -> ElasticFit:
    """Fit ``2 alpha F^T + beta F^H = e x gamma + x`` at all interior vertices.

    Least squares over ``(alpha, beta, e, x)`` with ``|(alpha, beta)| = 1``;
    the residual is the largest equation defect.
    """
    if len(curve.edges) < 5:
        raise TooShort("need at least 6 vertices")
    pts = curve.points()
    rows1, rows2 = [], []
    for k in range(1, len(curve.edges)):
        um, u = curve.edges[k - 1].vec, curve.edges[k].vec
        den = 1.0 + float(np.dot(um, u))
        if den <= 1e-8:
            raise NearAntipodal("consecutive edges nearly antipodal", where=k)
        ft = (um + u) / den
        fh = 2.0 * np.cross(um, u) / den
        rows1.append(np.column_stack([2 * ft, fh]))
        rows2.append(np.hstack([_cross_matrix(pts[k]), -np.eye(3)]))  # -e x g = g x e
    a1, a2 = np.vstack(rows1), np.vstack(rows2)
    pinv = np.linalg.pinv(a2)
    r = a1 - a2 @ (pinv @ a1)
    _, s, vh = np.linalg.svd(r, full_matrices=False)
    c = vh[-1]
    if c[0] < 0 or (c[0] == 0 and c[1] < 0):
        c = -c
    z = -pinv @ (a1 @ c)
    res = float(np.max(np.abs(a1 @ c + a2 @ z)))
    return ElasticFit(res, float(c[0]), float(c[1]), Quaternion.from_vector(z[:3]), Quaternion.from_vector(z[3:]), s)


@dataclass
class BacklundPair:
    v0: Quaternion
    v1: Quaternion
    a: float
    b: float
    anchor: int = 1  # curve vertex where v0, v1 live
    roots: tuple = ()  # det roots in factor order, reused along the curve


def _pair_polynomial(rod: "ElasticRod", k: int, a: float, b: float) -> tuple[MatrixPolynomial, ABMatrix]:
    # bhat[k - 1] sits at vertex k, followed by edge k
    bh, u = rod.bhat[k - 1], rod.curve.edges[k]
    A, B = bh * u + a, bh + b
    return MatrixPolynomial([rod.E, B, A + rod.E]).reversed(), ABMatrix(A, B)


def recover_backlund_pair(
    rod: ElasticRod,
    a: float | None = None,
    b: float | None = None,
    seed: int = 0,
    vertex: int = 1,
    roots=None,
) -> BacklundPair:
    """Factor ``E + mu B + mu^2 (A + E)`` into two Bäcklund parameters.

    ``A = a + B u`` and ``B = b + B`` at ``vertex``.  Without explicit
    ``(a, b)`` the choices ``(1, 0)``, ``(0, 1)`` and then seeded random
    pairs are tried until the block determinant is nonzero.
    """
    if not 1 <= vertex < len(rod.curve.edges):
        raise TooShort(f"vertex {vertex} needs an outgoing edge and a B value")
    if a is not None or b is not None:
        trials = [(a or 0.0, b or 0.0)]
    else:
        rng = np.random.default_rng(seed)
        trials = [(1.0, 0.0), (0.0, 1.0)] + [tuple(rng.normal(size=2)) for _ in range(8)]
    for ta, tb in trials:
        poly, m = _pair_polynomial(rod, vertex, ta, tb)
        if abs(m.complex_det()) <= 1e-9 * max(1.0, m.norm()) ** 2:
            continue
        if roots:
            fac = factorize_quaternionic(poly, order=list(roots))
        else:
            fac = factorize_quaternionic(poly)
        if fac.real_factors or len(fac.factors) != 2:
            raise FactorizationError("polynomial has a real factor; no unique Bäcklund pair")
        if not roots:
            roots = tuple(_factor_roots(poly, fac))
        return BacklundPair(fac.factors[0], fac.factors[1], float(ta), float(tb), vertex, tuple(roots))
    raise DegenerateDet("block determinant vanishes for all tried (a, b)")


def _factor_roots(poly: MatrixPolynomial, fac) -> list[complex]:
    """Upper-half-plane det root belonging to each factor, rightmost first."""
    out = []
    for u in fac.factors:
        z = complex(u.w, u.imag().norm())
        out.append(z)
    return out


@dataclass
class PairRoundTrip:
    conjugation_error: float  # max |u~~(k) - E^-1 u(k) E|
    transport_error: float  # max mismatch of stepped vs locally recovered pairs
    pairs: list


def backlund_pair_roundtrip(rod: ElasticRod, pair: BacklundPair) -> PairRoundTrip:
    """Check the double transformation edge by edge with local re-anchoring.

    Propagating ``v`` over the whole curve is exponentially unstable, so the
    pair is recovered afresh at every vertex (same ``a``, ``b`` and root
    order).  Each pair is stepped over one edge and compared with the pair
    recovered at the next vertex; the doubly transformed edge is compared
    with ``E^{-1} u E``.
    """
    edges = rod.curve.edges
    E = rod.E
    einv = E.inverse()
    n = len(edges)
    pairs = {pair.anchor: pair}
    for k in range(1, n):
        if k not in pairs:
            pairs[k] = recover_backlund_pair(rod, pair.a, pair.b, vertex=k, roots=pair.roots)
    conj = transport = 0.0
    for k in range(1, n):
        p, u = pairs[k], edges[k]
        ut = backlund_map(p.v0, u)
        utt = backlund_map(p.v1, ut)
        conj = max(conj, (utt - einv * u * E).norm())
        if k + 1 < n:
            nxt = pairs[k + 1]
            w0 = p.v0 + ut - u
            w1 = p.v1 + utt - ut
            transport = max(transport, (w0 - nxt.v0).norm(), (w1 - nxt.v1).norm())
    # edge 0 by the backward step from vertex 1
    p, u = pairs[1], edges[0]
    x = p.v0 - u.conj()
    ut = x * u * x.inverse()
    y = p.v1 - ut.conj()
    utt = y * ut * y.inverse()
    conj = max(conj, (utt - einv * u * E).norm())
    return PairRoundTrip(conj, transport, [pairs[k] for k in sorted(pairs)])


def apply_backlund_pair(curve: DiscreteCurve, pair: BacklundPair) -> DiscreteCurve:
    """Both transformations propagated globally from the anchor.

    Rounding errors grow geometrically along the curve; use
    :func:`backlund_pair_roundtrip` for long curves.
    """
    first = backlund_curve(curve, pair.v0, pair.anchor).curve
    return backlund_curve(first, pair.v1, pair.anchor).curve


def conjugation_error(curve: DiscreteCurve, image: DiscreteCurve, E) -> float:
    """Largest ``|image.u(k) - E^{-1} u(k) E|``."""
    E = _q(E)
    einv = E.inverse()
    return max((w - einv * u * E).norm() for u, w in zip(curve.edges, image.edges))
