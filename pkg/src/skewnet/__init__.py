"""Skew parallelogram nets over unit associative algebras."""

from .algebra import (
    DEFAULT_TOL,
    CliffordAlgebra,
    Mat2,
    Multivector,
    Quaternion,
    adjugate,
    clifford_algebra,
    clifford_product,
    grade_project,
    invert,
    quat_to_mat2,
)
from .errors import SkewNetError

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "CliffordAlgebra",
    "Mat2",
    "Multivector",
    "Quaternion",
    "SkewNetError",
    "adjugate",
    "clifford_algebra",
    "clifford_product",
    "grade_project",
    "invert",
    "quat_to_mat2",
]
