"""Matrix and quaternionic polynomial factorization.

Polynomials are stored lowest degree first.  A linear right factor is
written ``mu - u``; the reversal ``mu^n P(-1/mu)`` maps a product of
``(mu - u_k)`` to the product of ``(1 + mu u_k)`` with the same ``u_k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from .algebra import Mat2, Quaternion
from .errors import (
    AllZero,
    DegenerateColumns,
    FactorizationError,
    NotARoot,
    NotIndependent,
    ValidationError,
    ZeroPolynomial,
)
from .lattice import EdgeNet, LatticeBox, fill_box, shift


def _as_array(c) -> np.ndarray:
    if isinstance(c, Mat2):
        return np.array(c.m)
    if isinstance(c, Quaternion):
        return np.array(c.to_mat2().m)
    if isinstance(c, (int, float, complex, np.number)):
        return complex(c) * np.eye(2, dtype=complex)
    return np.asarray(c, dtype=complex).reshape(2, 2)


class MatrixPolynomial:
    """Polynomial ``sum_k mu^k C_k`` with complex 2x2 coefficients."""

    __array_ufunc__ = None

    def __init__(self, coeffs):
        arr = np.array([_as_array(c) for c in coeffs], dtype=complex)
        if arr.ndim != 3 or arr.shape[1:] != (2, 2) or len(arr) == 0:
            raise ValidationError("coefficients must be a non-empty list of 2x2 matrices")
        arr.flags.writeable = False
        self.coeffs = arr

    @classmethod
    def linear(cls, u) -> "MatrixPolynomial":
        """``mu - u``."""
        return cls([-_as_array(u), np.eye(2)])

    @classmethod
    def one_plus(cls, u) -> "MatrixPolynomial":
        """``1 + mu u``."""
        return cls([np.eye(2), _as_array(u)])

    @classmethod
    def from_components(cls, w, x, y, z) -> "MatrixPolynomial":
        """Quaternionic polynomial from four real coefficient arrays."""
        n = max(len(w), len(x), len(y), len(z))
        pad = [np.pad(np.asarray(c, float), (0, n - len(c))) for c in (w, x, y, z)]
        return cls([Quaternion(*(c[k] for c in pad)) for k in range(n)])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> Mat2:
        return Mat2(self.coeffs[-1])

    def coefficient(self, k: int) -> Mat2:
        return Mat2(self.coeffs[k])

    def __call__(self, mu) -> Mat2:
        acc = np.zeros((2, 2), dtype=complex)
        for c in self.coeffs[::-1]:
            acc = acc * mu + c
        return Mat2(acc)

    def entry(self, r: int, c: int) -> np.ndarray:
        return np.array(self.coeffs[:, r, c])

    def norm(self) -> float:
        return float(np.max(np.linalg.norm(self.coeffs, axis=(1, 2))))

    def _padded(self, other: "MatrixPolynomial"):
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros((n, 2, 2), dtype=complex)
        b = np.zeros((n, 2, 2), dtype=complex)
        a[: len(self.coeffs)] = self.coeffs
        b[: len(other.coeffs)] = other.coeffs
        return a, b

    def __add__(self, other):
        if not isinstance(other, MatrixPolynomial):
            other = MatrixPolynomial([other])
        a, b = self._padded(other)
        return MatrixPolynomial(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, MatrixPolynomial):
            other = MatrixPolynomial([other])
        a, b = self._padded(other)
        return MatrixPolynomial(a - b)

    def __neg__(self):
        return MatrixPolynomial(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, MatrixPolynomial):
            out = np.zeros((self.degree + other.degree + 1, 2, 2), dtype=complex)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a @ b
            return MatrixPolynomial(out)
        return MatrixPolynomial(self.coeffs @ _as_array(other))

    def __rmul__(self, other):
        return MatrixPolynomial(_as_array(other) @ self.coeffs)

    def reversed(self) -> "MatrixPolynomial":
        """``mu^n P(-1/mu)``."""
        n = self.degree
        signs = np.array([(-1) ** i for i in range(n + 1)])
        return MatrixPolynomial((self.coeffs * signs[:, None, None])[::-1])

    def right_eval(self, u) -> Mat2:
        """``sum_k C_k u^k``; vanishes iff ``mu - u`` is a right factor."""
        u = _as_array(u)
        acc = np.zeros((2, 2), dtype=complex)
        for c in self.coeffs[::-1]:
            acc = acc @ u + c
        return Mat2(acc)

    def divide_right_linear(self, u) -> tuple["MatrixPolynomial", Mat2]:
        """Quotient ``Q`` and remainder ``R`` with ``P = Q (mu - u) + R``."""
        u = _as_array(u)
        n = self.degree
        if n < 1:
            raise ValidationError("cannot divide a constant by a linear factor")
        d = [None] * n
        d[n - 1] = self.coeffs[n]
        for k in range(n - 1, 0, -1):
            d[k - 1] = self.coeffs[k] + d[k] @ u
        rem = self.coeffs[0] + d[0] @ u
        return MatrixPolynomial(d), Mat2(rem)

    def quaternion_residual(self) -> float:
        return max(Mat2(c).quaternion_residual() for c in self.coeffs)

    def is_quaternionic(self, tol: float = 1e-10) -> bool:
        return self.quaternion_residual() <= tol * max(1.0, self.norm())

    def components(self) -> tuple[np.ndarray, ...]:
        """Real coefficient arrays ``(w, x, y, z)`` of a quaternionic polynomial."""
        qs = [alg.mat2_to_quat(Mat2(c)) for c in self.coeffs]
        return tuple(np.array([getattr(q, k) for q in qs]) for k in "wxyz")

    def close(self, other: "MatrixPolynomial", tol: float = 1e-9) -> bool:
        a, b = self._padded(other)
        return float(np.max(np.abs(a - b))) <= tol

    def distance(self, other: "MatrixPolynomial") -> float:
        a, b = self._padded(other)
        return float(np.max(np.abs(a - b)))

    def to_json(self) -> dict:
        return {"coeffs": [alg.to_json(Mat2(c)) for c in self.coeffs]}

    @classmethod
    def from_json(cls, d, path: str = "$") -> "MatrixPolynomial":
        if not isinstance(d, dict) or set(d) != {"coeffs"}:
            raise ValidationError("polynomial object needs exactly the field 'coeffs'", where=path)
        if not isinstance(d["coeffs"], list) or not d["coeffs"]:
            raise ValidationError("coeffs must be a non-empty list", where=path + ".coeffs")
        return cls([alg.from_json(c, f"{path}.coeffs[{k}]") for k, c in enumerate(d["coeffs"])])

    def __repr__(self):
        return f"MatrixPolynomial(degree={self.degree})"


# --------------------------------------------------------------------------
# Scalar polynomials
# --------------------------------------------------------------------------


def det_poly(p: MatrixPolynomial) -> np.ndarray:
    """Coefficients (lowest first) of ``det P(mu)``."""
    a, b, c, d = p.entry(0, 0), p.entry(0, 1), p.entry(1, 0), p.entry(1, 1)
    return np.convolve(a, d) - np.convolve(b, c)


def trace_poly(p: MatrixPolynomial) -> np.ndarray:
    return p.entry(0, 0) + p.entry(1, 1)


def _horner(c_high: np.ndarray, z: np.ndarray):
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for c in c_high:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def scalar_roots(coeffs, max_iter: int = 200, trim: float = 1e-14) -> np.ndarray:
    """All roots of a complex polynomial (lowest coefficient first).

    Aberth-Ehrlich iteration started on a circle inside the Cauchy bound,
    followed by one Newton polish per root.  Roots are sorted by real part,
    then imaginary part.
    """
    c = np.array(coeffs, dtype=complex)
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale == 0.0:
        raise ZeroPolynomial("zero polynomial")
    n = len(c) - 1
    while n > 0 and abs(c[n]) <= trim * scale:
        n -= 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    a = c[: n + 1] / c[n]
    high = a[::-1]
    upper = 1.0 + float(np.max(np.abs(a[:-1])))
    lower = abs(a[0]) / (abs(a[0]) + float(np.max(np.abs(a[1:])))) if abs(a[0]) > 0 else 0.0
    radius = np.sqrt(upper * max(lower, 1e-12 * upper))
    k = np.arange(n)
    z = radius * np.exp(1j * (2 * np.pi * k / n + 0.4))
    for _ in range(max_iter):
        p, dp = _horner(high, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dp != 0, p / dp, p)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            step = ratio / (1.0 - ratio * s)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.all(np.abs(step) <= 4e-16 * np.maximum(1.0, np.abs(z))):
            break
    p, dp = _horner(high, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.where(dp != 0, z - p / dp, z)
    pc, _ = _horner(high, cand)
    z = np.where(np.isfinite(cand) & (np.abs(pc) <= np.abs(p)), cand, z)
    order = np.lexsort((np.round(z.imag, 9), np.round(z.real, 9)))
    return z[order]


def _trim_high(c: np.ndarray, tol: float) -> np.ndarray:
    c = np.array(c, dtype=float)
    nz = np.nonzero(np.abs(c) > tol)[0]
    return c[nz[0]:] if nz.size else np.zeros(0)


def gcd_real_polys(polys, tol: float = 1e-10) -> np.ndarray:
    """Monic approximate GCD (lowest coefficient first) by Euclid's algorithm."""
    items = []
    for p in polys:
        p = np.asarray(p, dtype=float)
        if p.size and np.max(np.abs(p)) > 0:
            items.append(p[::-1] / np.max(np.abs(p)))
    if not items:
        raise AllZero("all polynomials vanish")
    g = _trim_high(items[0], tol)
    for b in items[1:]:
        a, b = g, _trim_high(b, tol)
        while b.size and not (b.size == 1 and abs(b[0]) <= tol):
            b = b / b[0]
            _, r = np.polydiv(a, b)
            a, b = b, _trim_high(r, tol * max(1.0, float(np.max(np.abs(a)))))
        g = a
        if g.size <= 1:
            return np.array([1.0])
    return (g / g[0])[::-1]


def real_irreducible_factors(g: np.ndarray, tol: float = 1e-8) -> list[np.ndarray]:
    """Split a real polynomial (lowest first, monic) into linear and quadratic factors."""
    if len(g) <= 1:
        return []
    out = []
    for z in scalar_roots(g):
        if abs(z.imag) <= tol * max(1.0, abs(z)):
            out.append(np.array([-z.real, 1.0]))
        elif z.imag > 0:
            out.append(np.array([abs(z) ** 2, -2 * z.real, 1.0]))
    return out


# --------------------------------------------------------------------------
# Right factors
# --------------------------------------------------------------------------


def _kernel(m: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of a 2x2 matrix."""
    _, s, vh = np.linalg.svd(m)
    if s[0] <= tol:
        return np.eye(2, dtype=complex)
    return vh[s <= tol * s[0]].conj().T


def independent(p: MatrixPolynomial, mu1, mu2, tol: float = 1e-7) -> bool:
    """True iff ``ker P(mu1)`` and ``ker P(mu2)`` intersect trivially."""
    kernels = []
    for mu in (mu1, mu2):
        m = p(mu).m
        scale = max(float(np.sum(np.abs(m) ** 2)), 1e-300)
        if abs(np.linalg.det(m)) > tol * scale and np.linalg.norm(m) > tol:
            raise NotARoot(f"{mu} is not a root of det P")
        k = _kernel(m, tol)
        if k.shape[1] == 0:
            raise NotARoot(f"P({mu}) has no numerical kernel")
        kernels.append(k)
    if kernels[0].shape[1] > 1 or kernels[1].shape[1] > 1:
        return False
    s = np.linalg.svd(np.hstack(kernels), compute_uv=False)
    return bool(s[-1] > tol)


def _adj_column(m: np.ndarray, choice: int | None, tol: float) -> np.ndarray:
    adj = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    norms = np.linalg.norm(adj, axis=0)
    scale = max(1.0, float(np.linalg.norm(m)))
    if np.max(norms) <= tol * scale:
        raise DegenerateColumns("both adjugate columns vanish (scalar root)")
    col = int(np.argmax(norms)) if choice is None else choice
    if norms[col] <= tol * scale:
        raise DegenerateColumns(f"adjugate column {col} vanishes")
    return adj[:, col]


@dataclass
class RightFactor:
    quotient: MatrixPolynomial
    u: Mat2
    residual: float


def right_factor(p: MatrixPolynomial, mu1, mu2, columns=(None, None), tol: float = 1e-9, step=None) -> RightFactor:
    """Unique right factor ``mu - u`` whose determinant has the roots ``mu1, mu2``.

    ``u = Y diag(mu1, mu2) Y^{-1}`` with ``Y`` built from nonvanishing
    adjugate columns.  ``columns`` overrides the default column choice.
    """
    if not independent(p, mu1, mu2):
        raise NotIndependent(f"roots {mu1}, {mu2} are not independent", where=step)
    y = np.column_stack(
        [_adj_column(p(mu1).m, columns[0], tol), _adj_column(p(mu2).m, columns[1], tol)]
    )
    u = y @ np.diag([mu1, mu2]) @ np.linalg.inv(y)
    q, rem = p.divide_right_linear(u)
    res = rem.norm() / max(1.0, p.norm())
    if res > 1e-7:
        raise FactorizationError(f"right factor does not divide P (residual {res:.3g})", where=step)
    return RightFactor(q, Mat2(u), res)


@dataclass
class QuaternionicFactorization:
    real_factors: list  # real polynomials, lowest coefficient first
    factors: list  # quaternions u^1 (rightmost) ... u^m
    leading: Quaternion
    residual: float

    def product(self) -> MatrixPolynomial:
        out = MatrixPolynomial([self.leading])
        for u in reversed(self.factors):
            out = out * MatrixPolynomial.linear(u)
        for g in self.real_factors:
            out = out * MatrixPolynomial([c * np.eye(2) for c in g])
        return out


def _quaternionic_factor(q: MatrixPolynomial, mu0, tol: float) -> np.ndarray:
    """Quaternion ``u`` with ``mu - u`` a right factor for the pair ``(mu0, conj mu0)``."""
    a = q(mu0).adj().m
    b = q(np.conj(mu0)).adj().m
    candidates = [np.column_stack([a[:, 0], b[:, 1]]), np.column_stack([a[:, 1], -b[:, 0]])]
    y = max(candidates, key=lambda m: abs(np.linalg.det(m)))
    if abs(np.linalg.det(y)) <= tol * max(1.0, float(np.sum(np.abs(y) ** 2))):
        raise DegenerateColumns(f"no quaternionic basis at root {mu0}")
    return y @ np.diag([mu0, np.conj(mu0)]) @ np.linalg.inv(y)


def factorize_quaternionic(p: MatrixPolynomial, order=None, tol: float = 1e-9) -> QuaternionicFactorization:
    """Factor ``P = g(mu) C (mu - u^m) ... (mu - u^1)`` with quaternions ``u^k``.

    ``g`` collects the real polynomial factors.  ``order`` optionally lists
    one root of each conjugate pair, rightmost factor first; by default pairs
    are extracted in order of their upper-half-plane roots.
    """
    if not p.is_quaternionic(1e-8):
        raise ValidationError(f"polynomial is not quaternionic (residual {p.quaternion_residual():.3g})")
    original = p
    comps = p.components()
    g = gcd_real_polys(comps)
    real_factors = []
    if len(g) > 1:
        quot = []
        for c in comps:
            qc, r = np.polydiv(c[::-1], g[::-1])
            if r.size and np.max(np.abs(r)) > 1e-8 * max(1.0, np.max(np.abs(c))):
                raise FactorizationError("real factor does not divide all components")
            quot.append(qc[::-1])
        p = MatrixPolynomial.from_components(*quot)
        real_factors = real_irreducible_factors(g)
    m = p.degree
    roots = scalar_roots(det_poly(p))
    upper = [z for z in roots if z.imag > 0]
    if len(upper) != m:
        raise FactorizationError(f"expected {m} roots in the upper half plane, found {len(upper)}")
    if order is not None:
        picked = []
        for mu in order:
            mu = complex(mu)
            mu = mu if mu.imag > 0 else mu.conjugate()
            z = min(upper, key=lambda r: abs(r - mu))
            if abs(z - mu) > 1e-6 * max(1.0, abs(mu)):
                raise NotARoot(f"{mu} is not a root of det P")
            upper.remove(z)
            picked.append(z)
        upper = picked
    factors, q = [], p
    for step, mu0 in enumerate(upper):
        u = Mat2(_quaternionic_factor(q, mu0, tol))
        q, _ = q.divide_right_linear(u)
        factors.append(alg.mat2_to_quat(u))
    leading = alg.mat2_to_quat(Mat2(q.coeffs[0]))
    out = QuaternionicFactorization(real_factors, factors, leading, 0.0)
    out.residual = out.product().distance(original) / max(1.0, original.norm())
    return out


# --------------------------------------------------------------------------
# Factorization cubes
# --------------------------------------------------------------------------


def conjugate_pairing(p: MatrixPolynomial) -> list[tuple[complex, complex]]:
    """Pairs ``(mu, conj mu)`` of det roots, upper-half-plane root first."""
    roots = scalar_roots(det_poly(p))
    return [(z, z.conjugate()) for z in roots if z.imag > 0]


@dataclass
class FactorizationCube:
    net: EdgeNet
    leading: Mat2
    pairing: list

    @property
    def n(self) -> int:
        return self.net.dim

    def path_product(self, order) -> MatrixPolynomial:
        """Product along the monotone path taking directions ``order`` in turn."""
        x = (0,) * self.n
        out = MatrixPolynomial([np.eye(2)])
        for d in order:
            out = MatrixPolynomial.linear(self.net[d, x]) * out
            x = shift(x, d)
        return MatrixPolynomial([self.leading]) * out

    def paths(self):
        return itertools.permutations(range(self.n))

    def max_path_error(self, p: MatrixPolynomial) -> float:
        return max(self.path_product(o).distance(p) for o in self.paths()) / max(1.0, p.norm())


def factorize_cube(p: MatrixPolynomial, pairing, tol: float = 1e-9) -> FactorizationCube:
    """All factorizations of ``P`` for a root pairing, as one parallelogram n-cube."""
    n = p.degree
    if len(pairing) != n:
        raise ValidationError(f"need {n} root pairs, got {len(pairing)}")
    axes = [[right_factor(p, mu1, mu2, step=f"axis {k + 1}").u] for k, (mu1, mu2) in enumerate(pairing)]
    net = fill_box(EdgeNet.from_axes(axes), LatticeBox((1,) * n), tol)
    cube = FactorizationCube(net, p.leading, list(pairing))
    err = cube.max_path_error(p)
    if err > 1e-7:
        raise FactorizationError(f"path products deviate from P by {err:.3g}")
    return cube
