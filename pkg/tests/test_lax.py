import numpy as np
import pytest

from skewnet import algebra as alg
from skewnet.algebra import Quaternion
from skewnet.errors import Degenerate, Incompatible, NotZeroFolded
from skewnet.lattice import EdgeNet, LatticeBox, fill_box, integrate_primitive, shift
from skewnet.lax import (
    SpectralPath,
    associated_edges,
    associated_family,
    classify_folding,
    folding_parameter,
    gauge_linear_lax,
    lax_matrix,
    primary_affine_fit,
    propagate_frame,
    sym_points,
    unfold_zero_folded,
    vertex_star_angles,
)

from conftest import rand_quat

I, J, K = Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0), Quaternion(0, 0, 0, 1)


def quat_net(rng, n=4, imaginary=False):
    axes = [[rand_quat(rng, imaginary) for _ in range(n)] for _ in range(2)]
    return fill_box(EdgeNet.from_axes(axes))


def scalar_net(value, extents=(2, 3)):
    net = EdgeNet(LatticeBox(extents))
    for j in range(len(extents)):
        for x in net.box.edges(j):
            net[j, x] = value
    return net


def test_lax_matrix_examples():
    assert lax_matrix(rand_quat(np.random.default_rng(0)), 1.0, 0.0) == Quaternion(1)
    assert lax_matrix(I, 0.0, 1.0) == I
    lam, mu = 2.0, 3.0
    lhs = lax_matrix(-I, lam, mu) * lax_matrix(I, lam, mu)
    rhs = lax_matrix(-J, lam, mu) * lax_matrix(J, lam, mu)
    assert lhs.close(rhs)


def test_compatibility_iff_quad_equations(rng):
    pi, pj = rand_quat(rng), rand_quat(rng)
    from skewnet.lattice import evolve_quad

    pij, pji = evolve_quad(pi, pj)
    for lam, mu in ((0.3, 1.7), (-2.0, 0.5)):
        assert (lax_matrix(pji, lam, mu) * lax_matrix(pi, lam, mu)).close(lax_matrix(pij, lam, mu) * lax_matrix(pj, lam, mu), 1e-12)
    bad = pij + 0.1
    assert not (lax_matrix(pji, 1, 1) * lax_matrix(pi, 1, 1)).close(lax_matrix(bad, 1, 1) * lax_matrix(pj, 1, 1), 1e-6)


def test_spectral_path_degenerate():
    with pytest.raises(Degenerate):
        SpectralPath.from_table([(0.0, 1.0, 1.0, 1.0, 1.0)]).at(0.0)


def test_scalar_frame():
    net = scalar_net(0.0)
    t = 1.7
    fr = propagate_frame(net, SpectralPath.linear(), t, 1.0)
    f = sym_points(fr)
    for x in net.box.vertices():
        n = sum(x)
        assert fr.phi[x] == pytest.approx(t**n)
        assert fr.dphi[x] == pytest.approx(n * t ** (n - 1) if n else 0.0)
        assert f[x] == pytest.approx(n / t)


def test_mu_zero_frame(rng):
    net = quat_net(rng, 3)
    path = SpectralPath.from_table([(0.0, 2.0, 0.0, 0.5, 3.0)])
    fr = propagate_frame(net, path, 0.0)
    for x in net.box.vertices():
        assert fr.phi[x].close(Quaternion(2.0 ** sum(x)), 1e-12)
    pt = associated_edges(net, fr)
    for j, x, v in net.items():
        assert pt[j, x].close(v * 1.5 + 0.25, 1e-12)
    trig = propagate_frame(net, SpectralPath.trigonometric(), 0.0)
    assert all(trig.phi[x].close(Quaternion(1)) for x in net.box.vertices())


def test_frame_path_independent(rng):
    net = quat_net(rng, 1)
    lam, mu = 0.4, 1.3
    fr = propagate_frame(net, SpectralPath.from_table([(0.0, lam, mu, 1.0, 0.0)]), 0.0)
    via_i = lax_matrix(net[1, (1, 0)], lam, mu) * lax_matrix(net[0, (0, 0)], lam, mu)
    via_j = lax_matrix(net[0, (0, 1)], lam, mu) * lax_matrix(net[1, (0, 0)], lam, mu)
    assert via_i.close(via_j, 1e-10) and fr.phi[(1, 1)].close(via_i, 1e-10)


def test_incompatible_net(rng):
    net = quat_net(rng, 2)
    net[0, (1, 1)] = net[0, (1, 1)] + 0.01
    with pytest.raises(Incompatible):
        propagate_frame(net, SpectralPath.trigonometric(), 0.3)


def test_family_members_are_nets(rng):
    net = quat_net(rng, 5)
    m = associated_family(net, SpectralPath.trigonometric(), 0.7)
    add, mult, _ = m.p.max_residuals()
    assert max(add, mult) <= 1e-9
    # Sym points integrate the family edges
    for j, x, v in m.p.items():
        assert (m.f[shift(x, j)] - m.f[x]).close(v, 1e-10)
    assert all(isinstance(v, Quaternion) for _, v in m.f.items())
    const = associated_family(scalar_net(0.5), SpectralPath.linear(), 2.0)
    assert all(np.isscalar(v) or isinstance(v, float) for _, _, v in const.p.items())


def test_quaternion_embedded_family_stays_quaternionic(rng):
    net = quat_net(rng, 3).map(lambda q: q.to_mat2())
    m = associated_family(net, SpectralPath.trigonometric(), 0.4)
    assert all(v.is_quaternion(1e-10) for _, v in m.f.items())


def test_parametrization_independence(rng):
    net = quat_net(rng, 4)
    a = 0.8
    lin = associated_family(net, SpectralPath.linear(), a).p
    s = np.arctan2(1.0, a)  # cot s = a
    trig = associated_family(net, SpectralPath.trigonometric(), s).p
    _, _, res = primary_affine_fit(lin, trig)
    assert res <= 1e-8
    other = associated_family(net, SpectralPath.linear(), a + 0.5).p
    assert primary_affine_fit(lin, other)[2] > 1e-3


def test_vertex_star_rotation(rng):
    net = quat_net(rng, 5)
    ref = vertex_star_angles(net)
    for t in np.linspace(-1.0, 1.2, 8):
        m = associated_family(net, SpectralPath.trigonometric(), t)
        ang = vertex_star_angles(m.p)
        assert max(np.abs(ang[x][1] - ref[x][1]).max() for x in ref) <= 1e-9


def test_classify_folding():
    unit = EdgeNet.from_axes([[I], [J]])
    rep = classify_folding(unit)
    assert rep.zero_folded and rep.equally_folded
    assert classify_folding(EdgeNet.from_axes([[2 * I], [2 * J]])).kind == "zero_folded"
    assert classify_folding(EdgeNet.from_axes([[1 + I], [1 + J]])).kind == "neither"


def test_unfold_zero_folded(rng):
    net = quat_net(rng, 4, imaginary=True)
    for t in (-1.0, -0.3, 0.5, 1.0):
        m = unfold_zero_folded(net, t)
        assert all(abs(v.norm2() - 1.0) <= 1e-9 for _, _, v in m.p.items())
        assert classify_folding(m.p).equally_folded
    # at t = 0: (1 + p)^{-1} (1 - p) = (1 - n - 2p) / (1 + n) with n = |p|^2, i.e. -p for unit p
    m0 = unfold_zero_folded(net, 0.0)
    p = net[0, (0, 0)]
    n = p.norm2()
    assert m0.p[0, (0, 0)].close((1 - n - 2 * p) * (1.0 / (1 + n)), 1e-12)
    unit = fill_box(EdgeNet.from_axes([[I, J], [K, I]]))
    assert unfold_zero_folded(unit, 0.0).p[0, (0, 0)].close(-I, 1e-12)
    with pytest.raises(NotZeroFolded):
        unfold_zero_folded(quat_net(rng, 2), 0.5)


def test_folding_parameter(rng):
    planar = folding_parameter(np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([1.0, 1.2, 0]))
    assert planar.planar and planar.sigma == 0.0
    net = quat_net(rng, 3, imaginary=True)
    f = integrate_primitive(net, Quaternion())
    for x, i, j in net.box.quads():
        xi, xj = shift(x, i), shift(x, j)
        fp = folding_parameter(f[x], f[xi], f[xj], f[shift(xi, j)])
        assert fp.sigma == pytest.approx(fp.sigma_alt, rel=1e-10)
    m = unfold_zero_folded(net, 0.5)
    for x, i, j in net.box.quads():
        xi, xj = shift(x, i), shift(x, j)
        fp = folding_parameter(m.f[x], m.f[xi], m.f[xj], m.f[shift(xi, j)])
        assert abs(abs(fp.sigma) - 1.0) <= 1e-8


def test_gauge_linear_lax(rng):
    net = quat_net(rng, 2)
    g = [rand_quat(rng) for _ in range(9)]
    # lam A + mu B with A = G_i^{-1} G and B = G_i^{-1} p G for a vertex gauge G
    box = net.box
    gauge = {x: g[k] for k, x in enumerate(box.vertices())}
    gauge[(0, 0)] = Quaternion(1)
    a_net, b_net = EdgeNet(box, "quat"), EdgeNet(box, "quat")
    for j, x, v in net.items():
        gi = gauge[shift(x, j)].inverse()
        a_net[j, x] = gi * gauge[x]
        b_net[j, x] = gi * v * gauge[x]
    out = gauge_linear_lax(a_net, b_net)
    for j, x, v in net.items():
        assert out[j, x].close(v, 1e-10)
