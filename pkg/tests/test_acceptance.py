"""End-to-end acceptance checks.

Each check prints a single ``PASS``/``FAIL`` line with its measured values and
wall time, then asserts.  Run ``python3 tests/test_acceptance.py`` for the
summary lines alone.
"""

import cmath
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from skewnet.algebra import Mat2, Quaternion, quat_to_mat2
from skewnet.curves import (
    backlund_pair_roundtrip,
    compose_chain,
    elastic_construct,
    elastic_verify,
    ninvariant_construct,
    recover_backlund_pair,
)
from skewnet.factor import (
    DegenerateColumns,
    MatrixPolynomial,
    conjugate_pairing,
    factorize_cube,
    right_factor,
)
from skewnet.lattice import EdgeNet, cube_consistency, fill_box, labelling_check, shift
from skewnet.lax import SpectralPath, associated_family, folding_parameter, unfold_zero_folded, vertex_star_angles
from skewnet.moutard import family_coefficients, moutard_family, random_moutard_net
from skewnet.surfaces import (
    CrossRatioLattice,
    breather_factorizations,
    cmc_cube_gauge,
    cmc_entry_arrays,
    extend_to_4d,
    lax_pattern_residual,
    surface_extract,
)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import rand_quat  # noqa: E402

SEED = 20261015
I2 = np.eye(2)


def quat(rng, imaginary=False, unit=False):
    return rand_quat(rng, imaginary, unit)


def report(n, checks, elapsed, limit=None):
    """Print one summary line; ``checks`` maps a label to (value, bound)."""
    ok = all(v <= b for v, b in checks.values())
    if limit is not None:
        ok = ok and elapsed < limit
    parts = [f"{k}={v:.2e}{'<=' if v <= b else '>'}{b:.0e}" for k, (v, b) in checks.items()]
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit is not None else "")
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: " + ", ".join(parts) + f"; {timing}"
    print(line, flush=True)
    return ok, line


def emit(capsys, result):
    ok, line = result
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    assert ok, line


# -- criteria -------------------------------------------------------------------


def criterion_1():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    net = fill_box(EdgeNet.from_axes([[quat(rng) for _ in range(20)] for _ in range(2)]))
    add, mult, _ = net.max_residuals()
    cons = max(cube_consistency(quat(rng), quat(rng), quat(rng)) for _ in range(50))
    el = time.perf_counter() - t0
    return report(1, {"additive": (add, 1e-9), "multiplicative": (mult, 1e-9), "cube": (cons, 1e-9)}, el, 1.0)


def criterion_2():
    t0 = time.perf_counter()
    p = MatrixPolynomial([I2, [[0, 2], [-2, 0]], -2 * I2])
    r = p.reversed()
    cube = factorize_cube(r, conjugate_pairing(r))
    quat_err = max(
        np.abs(cube.net[1, (1, 0)].m - np.array([[1, 1], [-1, 1]])).max(),
        np.abs(cube.net[0, (0, 0)].m - np.array([[-1, 1], [-1, -1]])).max(),
    )
    rf = right_factor(r, 1 + 1j, -1 - 1j)
    zero_err = max(
        np.abs(rf.u.m - np.array([[0, 1 - 1j], [-1 + 1j, 0]])).max(),
        rf.quotient.distance(MatrixPolynomial.linear(Mat2([[0, 1 + 1j], [-1 - 1j, 0]]))),
    )
    el = time.perf_counter() - t0
    return report(2, {"quaternionic": (quat_err, 1e-9), "zero_folded": (zero_err, 1e-9)}, el)


def criterion_3():
    rng = np.random.default_rng(SEED + 3)
    p = MatrixPolynomial([I2])
    for _ in range(5):
        p = p * MatrixPolynomial.linear(quat(rng))
    t0 = time.perf_counter()
    cube = factorize_cube(p, conjugate_pairing(p))
    n_paths = sum(1 for _ in cube.paths())
    path_err = cube.max_path_error(p)
    add, mult, _ = cube.net.max_residuals()
    el = time.perf_counter() - t0
    checks = {"paths_missing": (float(120 - n_paths), 0.0), "path_products": (path_err, 1e-8),
              "quads": (max(add, mult), 1e-9)}
    return report(3, checks, el, 5.0)


def criterion_4():
    rng = np.random.default_rng(SEED + 4)
    t0 = time.perf_counter()
    worst = alt_worst = 0.0
    for _ in range(1000):
        u = quat_to_mat2(quat(rng)).m + 0.3 * rng.normal(size=(2, 2))
        v = quat_to_mat2(quat(rng)).m
        p = MatrixPolynomial.linear(v) * MatrixPolynomial.linear(u)
        mu1, mu2 = np.linalg.eigvals(u)
        rf = right_factor(p, mu1, mu2)
        scale = max(1.0, np.abs(u).max())
        worst = max(worst, np.abs(rf.u.m - u).max() / scale)
        for cols in ((0, 0), (0, 1), (1, 0), (1, 1)):
            try:
                alt = right_factor(p, mu1, mu2, columns=cols)
            except DegenerateColumns:
                continue
            alt_worst = max(alt_worst, np.abs(alt.u.m - rf.u.m).max() / scale)
    el = time.perf_counter() - t0
    return report(4, {"recovered": (worst, 1e-9), "column_choices": (alt_worst, 1e-9)}, el)


def criterion_5():
    rng = np.random.default_rng(SEED + 5)
    t0 = time.perf_counter()
    fit = unit = rt = 0.0
    for _ in range(25):
        E = quat(rng, imaginary=True) + 0.3 * rng.normal()
        rod = elastic_construct(E, quat(rng), quat(rng, imaginary=True, unit=True), 100)
        fit = max(fit, elastic_verify(rod.curve).residual)
        unit = max(unit, rod.curve.unit_error())
        rt = max(rt, backlund_pair_roundtrip(rod, recover_backlund_pair(rod, seed=int(rng.integers(2**31)))).conjugation_error)
    drift = 0.0
    for n in (1, 3, 4):
        _, chain = ninvariant_construct(quat(rng), [quat(rng) * 1.8 for _ in range(n)], steps=50)
        drift = max(drift, chain.invariant_drift())
    E = Quaternion(1, 0, 0, 0.5)
    vs0 = [Quaternion(0, 0.3, 1.5, 0), Quaternion(0, 1.2, -0.4, 0), Quaternion(0, 2, 0.5, 0)]
    assert compose_chain(E, vs0).vec().complex_det().real < 0
    c, _ = ninvariant_construct(E, vs0, steps=50)
    planar = float(np.max(np.abs(c.points()[:, 2])))
    el = time.perf_counter() - t0
    checks = {"elastic_fit": (fit, 1e-8), "unit_imaginary": (unit, 1e-12), "backlund_pair": (rt, 1e-8),
              "invariants": (drift, 1e-8), "planar": (planar, 1e-10)}
    return report(5, checks, el)


def criterion_6():
    rng = np.random.default_rng(SEED + 6)
    net = fill_box(EdgeNet.from_axes([[quat(rng, imaginary=True) for _ in range(5)] for _ in range(2)]))
    t0 = time.perf_counter()
    det_err = sigma_err = 0.0
    for t in (-1.0, -0.3, 0.5, 1.0):
        m = unfold_zero_folded(net, t)
        det_err = max(det_err, max(abs(v.norm2() - 1.0) for _, _, v in m.p.items()))
        for x, i, j in net.box.quads():
            xi, xj = shift(x, i), shift(x, j)
            fp = folding_parameter(m.f[x], m.f[xi], m.f[xj], m.f[shift(xi, j)])
            sigma_err = max(sigma_err, abs(abs(fp.sigma) - 1.0))
    el = time.perf_counter() - t0
    return report(6, {"det": (det_err, 1e-9), "sigma": (sigma_err, 1e-8)}, el)


def criterion_7():
    rng = np.random.default_rng(SEED + 7)
    net = fill_box(EdgeNet.from_axes([[quat(rng) for _ in range(6)] for _ in range(2)]))
    t0 = time.perf_counter()
    ref = vertex_star_angles(net)
    ang_err = lab_err = 0.0
    for t in np.linspace(-1.0, 1.2, 8):
        m = associated_family(net, SpectralPath.trigonometric(), t)
        ang = vertex_star_angles(m.p)
        ang_err = max(ang_err, max(np.abs(ang[x][1] - ref[x][1]).max() for x in ref))
        lab_err = max(lab_err, labelling_check(m.p).max_deviation)
    el = time.perf_counter() - t0
    return report(7, {"star_angles": (ang_err, 1e-9), "edge_labels": (lab_err, 1e-9)}, el)


def criterion_8():
    t0 = time.perf_counter()
    plus = extend_to_4d(CrossRatioLattice.square_grid(10, 10, 2.0), "cplus")
    again = extend_to_4d(CrossRatioLattice.square_grid(10, 10, 2.0), "cplus")
    stable = 0.0 if np.array_equal(plus.s, again.s, equal_nan=True) else 1.0
    plus_pattern = max(lax_pattern_residual(plus, cmath.exp(1j * t)) for t in (0.3, 1.1, -0.7))
    minus = extend_to_4d(CrossRatioLattice.square_grid(10, 10, cmath.exp(1j * np.pi / 4)), "cminus")
    minus_pattern = max(lax_pattern_residual(minus, lam) for lam in (0.5, 1.0, 2.0))
    cheb_minus = max(surface_extract(minus, t).chebyshev_residual() for t in (0.0, 0.5))
    cheb_plus = max(surface_extract(plus, t).chebyshev_residual() for t in (0.0, 0.5))
    el = time.perf_counter() - t0
    checks = {
        "cplus_bit_stable": (stable, 0.0),
        "cplus_imag_s": (plus.s_mode_residual(), 1e-10),
        "cplus_pattern": (plus_pattern, 1e-9),
        "cminus_unit_s": (minus.s_mode_residual(), 1e-10),
        "cminus_pattern": (minus_pattern, 1e-9),
        "cminus_chebyshev": (cheb_minus, 1e-9),
        "cplus_chebyshev": (cheb_plus, 1e-9),
    }
    return report(8, checks, el, 10.0)


def criterion_9():
    rng = np.random.default_rng(7)
    seed = CrossRatioLattice.from_axes(
        [np.full(5, cmath.exp(1j * np.pi / 8)), np.full(5, cmath.exp(5j * np.pi / 8))],
        [np.exp(1j * rng.normal(size=5)) for _ in range(2)],
    )
    lat = extend_to_4d(seed, "cminus")
    t0 = time.perf_counter()
    cr = qu = 0.0
    for i, j in lat.diagonal_vertices():
        if i >= lat.diagonal_extents[0]:
            continue
        split = breather_factorizations(lat, i, j)
        cr, qu = max(cr, split.crossratio_error), max(qu, split.quaternionic_error)
    el = time.perf_counter() - t0
    return report(9, {"crossratio_split": (cr, 1e-8), "quaternionic_split": (qu, 1e-8)}, el)


def criterion_10():
    lat = extend_to_4d(CrossRatioLattice.square_grid(6, 6, 2.0), "cplus")
    t0 = time.perf_counter()
    cube = cmc_cube_gauge(*cmc_entry_arrays(lat), ts=(0.0, 0.25, -0.25, 0.5, -0.5, 1.0))
    el = time.perf_counter() - t0
    checks = {"form": (cube.form_residual, 1e-8), "w_norm": (cube.w_norm_residual, 1e-8),
              "quads": (cube.quad_residual, 1e-8)}
    return report(10, checks, el)


def criterion_11():
    t0 = time.perf_counter()
    quadric = diag = ident = coeff = 0.0
    path = SpectralPath.trigonometric()
    for p, q in ((3, 0), (3, 1), (4, 1)):
        net = random_moutard_net(p, q, 1.0, (8, 8), seed=SEED + p + 10 * q)
        for t in (0.25, -0.5, 0.8, 1.3):
            m = moutard_family(net, path, t)
            quadric = max(quadric, m.net.quadric_residual())
            diag = max(diag, m.net.moutard_residual())
            ident = max(ident, m.identity_residual)
            r, s = family_coefficients(path, t, net.kappa)
            coeff = max(coeff, abs(m.r - r), abs(m.s - s))
    el = time.perf_counter() - t0
    checks = {"quadric": (quadric, 1e-9), "parallel_diagonals": (diag, 1e-9), "q_identity": (ident, 1e-9),
              "r_s": (coeff, 1e-9)}
    return report(11, checks, el)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 12)])
def test_acceptance(check, capsys):
    emit(capsys, check())


if __name__ == "__main__":
    results = [c()[0] for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
