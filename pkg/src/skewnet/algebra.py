"""Numerical kernels for the three supported algebras.

* :class:`Quaternion` -- real quaternions ``w + x i + y j + z k``.
* :class:`Mat2` -- complex 2x2 matrices.
* :class:`Multivector` over a :class:`CliffordAlgebra` ``Cl(p, q)``.

Plain Python numbers act as scalars in every algebra.  A quaternion combined
with a non-real complex number (or with a :class:`Mat2`) is promoted to its
2x2 complex representation.
"""

from __future__ import annotations

import numbers
from functools import lru_cache

import numpy as np

from .errors import NotInvertible, SignatureMismatch, UnsupportedCliffordInverse, ValidationError

DEFAULT_TOL = 1e-9


def _is_real(x) -> bool:
    return isinstance(x, numbers.Real)


def _is_scalar(x) -> bool:
    return isinstance(x, numbers.Number)


def _real_or_none(x):
    """Return ``float(x)`` for real-valued numbers, else ``None``."""
    if _is_real(x):
        return float(x)
    if isinstance(x, numbers.Complex) and x.imag == 0:
        return float(x.real)
    return None


# --------------------------------------------------------------------------
# Quaternions
# --------------------------------------------------------------------------


class Quaternion:
    """Immutable real quaternion."""

    __array_ufunc__ = None

    __slots__ = ("w", "x", "y", "z")

    def __init__(self, w=0.0, x=0.0, y=0.0, z=0.0):
        object.__setattr__(self, "w", float(w))
        object.__setattr__(self, "x", float(x))
        object.__setattr__(self, "y", float(y))
        object.__setattr__(self, "z", float(z))

    def __setattr__(self, name, value):
        raise AttributeError("Quaternion is immutable")

    @classmethod
    def from_vector(cls, v, real=0.0) -> "Quaternion":
        v = np.asarray(v, dtype=float)
        return cls(real, v[0], v[1], v[2])

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        return cls(*np.asarray(a, dtype=float)[:4])

    @staticmethod
    def one() -> "Quaternion":
        return Quaternion(1.0)

    @staticmethod
    def zero() -> "Quaternion":
        return Quaternion()

    # accessors
    @property
    def real(self) -> float:
        return self.w

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def imag(self) -> "Quaternion":
        return Quaternion(0.0, self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    adj = conj

    def norm2(self) -> float:
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def trace(self) -> float:
        return 2.0 * self.w

    det = norm2

    def inverse(self, tol: float = DEFAULT_TOL) -> "Quaternion":
        n2 = self.norm2()
        if not n2 > tol * tol:
            raise NotInvertible(f"quaternion {self!r} has norm below {tol}")
        return Quaternion(self.w / n2, -self.x / n2, -self.y / n2, -self.z / n2)

    def to_mat2(self) -> "Mat2":
        return quat_to_mat2(self)

    def close(self, other, tol: float = 1e-12) -> bool:
        return norm(self - other) <= tol

    # arithmetic
    def _coerce(self, other):
        """Return a Quaternion for real scalars/quaternions, else None."""
        if isinstance(other, Quaternion):
            return other
        r = _real_or_none(other) if _is_scalar(other) else None
        if r is not None:
            return Quaternion(r)
        return None

    def __add__(self, other):
        q = self._coerce(other)
        if q is not None:
            return Quaternion(self.w + q.w, self.x + q.x, self.y + q.y, self.z + q.z)
        if isinstance(other, Mat2) or _is_scalar(other):
            return self.to_mat2() + other
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __pos__(self):
        return self

    def __sub__(self, other):
        q = self._coerce(other)
        if q is not None:
            return Quaternion(self.w - q.w, self.x - q.x, self.y - q.y, self.z - q.z)
        if isinstance(other, Mat2) or _is_scalar(other):
            return self.to_mat2() - other
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            a1, b1, c1, d1 = self.w, self.x, self.y, self.z
            a2, b2, c2, d2 = other.w, other.x, other.y, other.z
            return Quaternion(
                a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
                a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
                a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
                a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
            )
        if _is_scalar(other):
            r = _real_or_none(other)
            if r is not None:
                return Quaternion(self.w * r, self.x * r, self.y * r, self.z * r)
            return self.to_mat2() * other
        if isinstance(other, Mat2):
            return self.to_mat2() * other
        return NotImplemented

    def __rmul__(self, other):
        if _is_scalar(other):
            return self * other  # scalars are central
        if isinstance(other, Mat2):
            return other * self.to_mat2()
        return NotImplemented

    def __truediv__(self, other):
        if _is_scalar(other):
            r = _real_or_none(other)
            if r is not None:
                return self * (1.0 / r)
            return self.to_mat2() * (1.0 / other)
        if isinstance(other, (Quaternion, Mat2)):
            return self * other.inverse()
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Quaternion):
            return (self.w, self.x, self.y, self.z) == (other.w, other.x, other.y, other.z)
        return NotImplemented

    def __hash__(self):
        return hash((self.w, self.x, self.y, self.z))

    def __repr__(self):
        return f"Quaternion({self.w!r}, {self.x!r}, {self.y!r}, {self.z!r})"


# --------------------------------------------------------------------------
# Complex 2x2 matrices
# --------------------------------------------------------------------------


class Mat2:
    """Immutable complex 2x2 matrix ``[[a, b], [c, d]]``."""

    __array_ufunc__ = None

    __slots__ = ("m",)

    def __init__(self, m):
        arr = np.array(m, dtype=complex).reshape(2, 2)
        arr.flags.writeable = False
        object.__setattr__(self, "m", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Mat2 is immutable")

    @classmethod
    def from_entries(cls, a, b, c, d) -> "Mat2":
        return cls([[a, b], [c, d]])

    @staticmethod
    def one() -> "Mat2":
        return Mat2(np.eye(2))

    @staticmethod
    def zero() -> "Mat2":
        return Mat2(np.zeros((2, 2)))

    @property
    def a(self) -> complex:
        return complex(self.m[0, 0])

    @property
    def b(self) -> complex:
        return complex(self.m[0, 1])

    @property
    def c(self) -> complex:
        return complex(self.m[1, 0])

    @property
    def d(self) -> complex:
        return complex(self.m[1, 1])

    def trace(self) -> complex:
        return complex(self.m[0, 0] + self.m[1, 1])

    def det(self) -> complex:
        m = self.m
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def adj(self) -> "Mat2":
        m = self.m
        return Mat2([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])

    def norm(self) -> float:
        """Frobenius norm divided by sqrt(2); agrees with the quaternion norm."""
        return float(np.linalg.norm(self.m) / np.sqrt(2.0))

    def inverse(self, tol: float = DEFAULT_TOL) -> "Mat2":
        d = self.det()
        scale = float(np.sum(np.abs(self.m) ** 2))
        if not abs(d) > tol * scale or scale == 0.0:
            raise NotInvertible(f"matrix determinant {d} below tolerance")
        return Mat2(self.adj().m / d)

    def quaternion_residual(self) -> float:
        """Distance from the pattern ``[[A, B], [-conj(B), conj(A)]]``."""
        m = self.m
        return float(max(abs(m[1, 1] - np.conj(m[0, 0])), abs(m[1, 0] + np.conj(m[0, 1]))))

    def is_quaternion(self, tol: float = 1e-10) -> bool:
        return self.quaternion_residual() <= tol * max(1.0, self.norm())

    def to_quaternion(self, tol: float = 1e-10) -> Quaternion:
        if not self.is_quaternion(tol):
            raise ValidationError(f"matrix is not a quaternion image (residual {self.quaternion_residual():.3g})")
        return mat2_to_quat(self)

    def close(self, other, tol: float = 1e-12) -> bool:
        return norm(self - other) <= tol

    def _coerce(self, other):
        if isinstance(other, Mat2):
            return other.m
        if isinstance(other, Quaternion):
            return quat_to_mat2(other).m
        if _is_scalar(other):
            return complex(other) * np.eye(2)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Mat2(self.m + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Mat2(self.m - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Mat2(o - self.m)

    def __neg__(self):
        return Mat2(-self.m)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if _is_scalar(other):
            return Mat2(self.m * complex(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Mat2(self.m @ o)

    def __rmul__(self, other):
        if _is_scalar(other):
            return Mat2(self.m * complex(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Mat2(o @ self.m)

    def __truediv__(self, other):
        if _is_scalar(other):
            return Mat2(self.m / complex(other))
        if isinstance(other, (Mat2, Quaternion)):
            return self * other.inverse()
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Mat2):
            return bool(np.array_equal(self.m, other.m))
        return NotImplemented

    def __hash__(self):
        return hash(self.m.tobytes())

    def __repr__(self):
        return f"Mat2({self.m.tolist()!r})"


# Basis images of 1, i, j, k.  With these matrices the map is a homomorphism
# (M_i M_j = M_k); the i-matrix therefore carries the factor -1j.
_MI = np.array([[0, -1j], [-1j, 0]])
_MJ = np.array([[0, 1], [-1, 0]], dtype=complex)
_MK = np.array([[1j, 0], [0, -1j]])


def quat_to_mat2(q: Quaternion) -> Mat2:
    return Mat2([[q.w + 1j * q.z, q.y - 1j * q.x], [-q.y - 1j * q.x, q.w - 1j * q.z]])


def mat2_to_quat(m: Mat2) -> Quaternion:
    """Quaternion read off the first row (no pattern check)."""
    a, b = m.m[0, 0], m.m[0, 1]
    return Quaternion(a.real, -b.imag, b.real, a.imag)


def quaternion_basis_matrices() -> dict[str, np.ndarray]:
    return {"1": np.eye(2, dtype=complex), "i": _MI.copy(), "j": _MJ.copy(), "k": _MK.copy()}


# --------------------------------------------------------------------------
# Clifford algebras
# --------------------------------------------------------------------------


class CliffordAlgebra:
    """Real Clifford algebra Cl(p, q) with ``e_i**2 = -<e_i, e_i>``.

    The bilinear form has ``p`` plus and ``q`` minus signs, so the first ``p``
    generators square to -1 and the remaining ``q`` to +1.  Blades are indexed
    by bitmask (bit ``i`` stands for the generator ``e_{i+1}``).
    """

    MAX_DIM = 5

    def __init__(self, p: int, q: int):
        if p < 0 or q < 0 or p + q > self.MAX_DIM:
            raise ValidationError(f"unsupported signature ({p}, {q})")
        self.p, self.q = p, q
        self.n = n = p + q
        self.dim = dim = 1 << n
        self.metric = np.array([1.0] * p + [-1.0] * q)
        squares = -self.metric
        self.grades = np.array([bin(b).count("1") for b in range(dim)])
        idx = np.zeros((dim, dim), dtype=np.intp)
        sign = np.zeros((dim, dim))
        for a in range(dim):
            for b in range(dim):
                s = 1.0
                # swaps needed to move every generator of b past the higher ones of a
                t = a >> 1
                while t:
                    if bin(t & b).count("1") % 2:
                        s = -s
                    t >>= 1
                common = a & b
                for i in range(n):
                    if common >> i & 1:
                        s *= squares[i]
                idx[a, b] = a ^ b
                sign[a, b] = s
        self._idx = idx
        self._sign = sign
        self._flat_idx = idx.ravel()
        k = self.grades
        self.reverse_sign = np.where((k * (k - 1) // 2) % 2, -1.0, 1.0)
        self.involution_sign = np.where(k % 2, -1.0, 1.0)

    def __repr__(self):
        return f"CliffordAlgebra({self.p}, {self.q})"

    def __reduce__(self):
        return (clifford_algebra, (self.p, self.q))

    @property
    def signature(self) -> tuple[int, int]:
        return (self.p, self.q)

    def element(self, coeffs) -> "Multivector":
        return Multivector(self, coeffs)

    def scalar(self, s: float = 1.0) -> "Multivector":
        c = np.zeros(self.dim)
        c[0] = s
        return Multivector(self, c)

    def one(self) -> "Multivector":
        return self.scalar(1.0)

    def zero(self) -> "Multivector":
        return Multivector(self, np.zeros(self.dim))

    def basis(self, i: int) -> "Multivector":
        """Generator ``e_{i+1}`` (0-based index)."""
        c = np.zeros(self.dim)
        c[1 << i] = 1.0
        return Multivector(self, c)

    def blade(self, *indices: int) -> "Multivector":
        out = self.one()
        for i in indices:
            out = out * self.basis(i)
        return out

    def vector(self, coords) -> "Multivector":
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.n,):
            raise ValidationError(f"vector needs {self.n} coordinates")
        c = np.zeros(self.dim)
        c[[1 << i for i in range(self.n)]] = coords
        return Multivector(self, c)

    def inner(self, u, v) -> float:
        """Bilinear form on coordinate vectors (or grade-1 multivectors)."""
        if isinstance(u, Multivector):
            u = u.vector_coords()
        if isinstance(v, Multivector):
            v = v.vector_coords()
        return float(np.sum(self.metric * np.asarray(u, float) * np.asarray(v, float)))

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        w = (self._sign * np.outer(a, b)).ravel()
        return np.bincount(self._flat_idx, weights=w, minlength=self.dim)


@lru_cache(maxsize=None)
def clifford_algebra(p: int, q: int) -> CliffordAlgebra:
    return CliffordAlgebra(p, q)


class Multivector:
    """Immutable element of a Clifford algebra."""

    __array_ufunc__ = None

    __slots__ = ("alg", "c")

    def __init__(self, alg: CliffordAlgebra, coeffs):
        c = np.array(coeffs, dtype=float).reshape(alg.dim)
        c.flags.writeable = False
        object.__setattr__(self, "alg", alg)
        object.__setattr__(self, "c", c)

    def __setattr__(self, name, value):
        raise AttributeError("Multivector is immutable")

    def one(self) -> "Multivector":
        return self.alg.one()

    def zero(self) -> "Multivector":
        return self.alg.zero()

    def _check(self, other: "Multivector"):
        if other.alg is not self.alg and other.alg.signature != self.alg.signature:
            raise SignatureMismatch(f"{self.alg.signature} vs {other.alg.signature}")

    def _coerce(self, other):
        if isinstance(other, Multivector):
            self._check(other)
            return other.c
        if _is_scalar(other):
            r = _real_or_none(other)
            if r is None:
                raise TypeError("complex scalars are not supported in a real Clifford algebra")
            c = np.zeros(self.alg.dim)
            c[0] = r
            return c
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Multivector(self.alg, self.c + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Multivector(self.alg, self.c - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Multivector(self.alg, o - self.c)

    def __neg__(self):
        return Multivector(self.alg, -self.c)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if _is_scalar(other):
            return Multivector(self.alg, self.c * self._coerce(other)[0])
        if isinstance(other, Multivector):
            self._check(other)
            return Multivector(self.alg, self.alg.product(self.c, other.c))
        return NotImplemented

    def __rmul__(self, other):
        if _is_scalar(other):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if _is_scalar(other):
            return self * (1.0 / self._coerce(other)[0])
        if isinstance(other, Multivector):
            return self * other.inverse()
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Multivector):
            return self.alg.signature == other.alg.signature and bool(np.array_equal(self.c, other.c))
        return NotImplemented

    def __hash__(self):
        return hash((self.alg.signature, self.c.tobytes()))

    def __repr__(self):
        terms = []
        for b, v in enumerate(self.c):
            if v != 0:
                name = "".join(f"e{i + 1}" for i in range(self.alg.n) if b >> i & 1) or "1"
                terms.append(f"{v:+.6g}*{name}")
        return f"Multivector[{self.alg.p},{self.alg.q}](" + (" ".join(terms) or "0") + ")"

    # structure
    def grade(self, k: int) -> "Multivector":
        return Multivector(self.alg, np.where(self.alg.grades == k, self.c, 0.0))

    def grades_present(self, tol: float = 1e-12) -> set[int]:
        scale = max(1.0, float(np.max(np.abs(self.c))))
        return {int(g) for g, v in zip(self.alg.grades, self.c) if abs(v) > tol * scale}

    @property
    def scalar_part(self) -> float:
        return float(self.c[0])

    def vector_coords(self) -> np.ndarray:
        return np.array([self.c[1 << i] for i in range(self.alg.n)])

    def reverse(self) -> "Multivector":
        return Multivector(self.alg, self.c * self.alg.reverse_sign)

    def involute(self) -> "Multivector":
        return Multivector(self.alg, self.c * self.alg.involution_sign)

    def norm(self) -> float:
        return float(np.linalg.norm(self.c))

    def trace(self) -> float:
        """Twice the scalar part (mirrors ``tr`` under the quaternion embedding)."""
        return 2.0 * float(self.c[0])

    def det(self) -> float:
        """Scalar part of ``x * reverse(x)``: the squared norm on the Lipschitz group."""
        return float(self.alg.product(self.c, self.c * self.alg.reverse_sign)[0])

    def inverse(self, tol: float = DEFAULT_TOL) -> "Multivector":
        """Inverse of scalars and Lipschitz-group elements via ``x~ / (x x~)``."""
        rev = self.c * self.alg.reverse_sign
        nn = self.alg.product(self.c, rev)
        scale = float(np.dot(self.c, self.c))
        if scale == 0.0:
            raise NotInvertible("zero multivector")
        rest = float(np.max(np.abs(nn[1:]))) if self.alg.dim > 1 else 0.0
        if rest > tol * scale:
            raise UnsupportedCliffordInverse("element outside the Lipschitz group closure")
        if not abs(nn[0]) > tol * scale:
            raise NotInvertible("x * reverse(x) vanishes")
        return Multivector(self.alg, rev / nn[0])

    def close(self, other, tol: float = 1e-12) -> bool:
        return norm(self - other) <= tol


# --------------------------------------------------------------------------
# Generic helpers
# --------------------------------------------------------------------------


def norm(x) -> float:
    if _is_scalar(x):
        return float(abs(x))
    return x.norm()


def trace(x):
    if _is_scalar(x):
        return 2 * x
    return x.trace()


def det(x):
    if _is_scalar(x):
        return x * x
    return x.det()


def adjugate(x):
    if _is_scalar(x):
        return x
    if isinstance(x, (Mat2, Quaternion)):
        return x.adj()
    raise TypeError("adjugate is defined for 2x2 matrices and quaternions")


def invert(x, tol: float = DEFAULT_TOL):
    if _is_scalar(x):
        if not abs(x) > tol:
            raise NotInvertible(f"scalar {x} below tolerance")
        return 1.0 / x
    return x.inverse(tol)


def one_like(x):
    if _is_scalar(x):
        return 1.0
    return x.one()


def zero_like(x):
    if _is_scalar(x):
        return 0.0
    return x.zero()


def clifford_product(a: Multivector, b: Multivector) -> Multivector:
    a._check(b)
    return a * b


def grade_project(a: Multivector, k: int) -> Multivector:
    if not 0 <= k <= a.alg.n:
        raise ValidationError(f"grade {k} out of range")
    return a.grade(k)


def algebra_tag(x) -> str:
    if isinstance(x, Quaternion):
        return "quat"
    if isinstance(x, Mat2):
        return "mat2"
    if isinstance(x, Multivector):
        return "clifford"
    if _is_scalar(x):
        return "scalar"
    raise TypeError(f"not an algebra element: {type(x).__name__}")


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def _cjson(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def to_json(x) -> dict:
    if isinstance(x, Quaternion):
        return {"alg": "quat", "w": x.w, "x": x.x, "y": x.y, "z": x.z}
    if isinstance(x, Mat2):
        return {"alg": "mat2", "a": _cjson(x.a), "b": _cjson(x.b), "c": _cjson(x.c), "d": _cjson(x.d)}
    if isinstance(x, Multivector):
        return {"alg": "clifford", "p": x.alg.p, "q": x.alg.q, "coeffs": [float(v) for v in x.c]}
    if _is_scalar(x):
        return {"alg": "scalar", "re": float(complex(x).real), "im": float(complex(x).imag)}
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _num(d: dict, key: str, path: str) -> float:
    if key not in d:
        raise ValidationError(f"missing field '{key}'", where=path)
    v = d[key]
    if not _is_real(v) or isinstance(v, bool):
        raise ValidationError(f"field '{key}' must be a number", where=path)
    return float(v)


def _complex_field(d: dict, key: str, path: str) -> complex:
    if key not in d:
        raise ValidationError(f"missing field '{key}'", where=path)
    v = d[key]
    if _is_real(v) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(_is_real(t) for t in v):
        return complex(v[0], v[1])
    raise ValidationError(f"field '{key}' must be [re, im]", where=path)


_FIELDS = {
    "quat": {"alg", "w", "x", "y", "z"},
    "mat2": {"alg", "a", "b", "c", "d"},
    "clifford": {"alg", "p", "q", "coeffs"},
    "scalar": {"alg", "re", "im"},
}


def from_json(d, path: str = "$"):
    """Parse an element; numbers and ``[re, im]`` pairs are accepted as scalars."""
    if _is_real(d) and not isinstance(d, bool):
        return float(d)
    if isinstance(d, (list, tuple)) and len(d) == 2 and all(_is_real(t) for t in d):
        return complex(d[0], d[1])
    if not isinstance(d, dict):
        raise ValidationError("expected an algebra element object", where=path)
    alg = d.get("alg")
    if alg not in _FIELDS:
        raise ValidationError(f"unknown algebra tag {alg!r}", where=path + ".alg")
    extra = set(d) - _FIELDS[alg]
    if extra:
        raise ValidationError(f"unknown fields {sorted(extra)}", where=path)
    if alg == "quat":
        return Quaternion(*(_num(d, k, path) for k in "wxyz"))
    if alg == "mat2":
        return Mat2.from_entries(*(_complex_field(d, k, path) for k in "abcd"))
    if alg == "scalar":
        return complex(_num(d, "re", path), d.get("im", 0.0) or 0.0)
    p, q = int(_num(d, "p", path)), int(_num(d, "q", path))
    alg_obj = clifford_algebra(p, q)
    coeffs = d.get("coeffs")
    if not isinstance(coeffs, list) or len(coeffs) != alg_obj.dim:
        raise ValidationError(f"coeffs must be a list of {alg_obj.dim} numbers", where=path + ".coeffs")
    return Multivector(alg_obj, coeffs)
