from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from psrecon import boundary as bd
from psrecon import geometry as geo
from psrecon.errors import UsageError

DISK = geo.poincare_disk()
CB2 = geo.complex_ball(2)
RB3 = geo.real_ball(3)


def test_circle_rule_trig_exactness():
    rule = bd.circle_rule(64)
    assert_allclose(rule.weights.sum(), 1.0, rtol=1e-15)
    theta = np.angle(rule.nodes)
    for k in range(1, 64):
        val = np.sum(rule.weights * np.exp(1j * k * theta))
        assert abs(val) <= 1e-13, k


def test_sphere_rule_normalization_and_determinism():
    r1 = bd.sphere_rule(CB2)
    r2 = bd.sphere_rule(CB2)
    assert_allclose(r1.weights.sum(), 1.0, rtol=1e-15)
    assert np.array_equal(r1.nodes, r2.nodes)
    with pytest.raises(UsageError):
        bd.sphere_rule(DISK)


def test_fourier_function_basics():
    g = bd.fourier_boundary({0: 2.0, 3: 1.0 + 1j, -3: 1.0 - 1j})
    assert g.n_max == 3
    assert g.coeff(3) == 1.0 + 1j
    assert g.coeff(10) == 0.0
    assert bd.is_real_function(g)
    assert not bd.is_real_function(bd.fourier_boundary({1: 1.0}))


def test_poisson_extend_constants_and_modes():
    one = bd.fourier_boundary({0: 1.0})
    for x in (0.0, 0.3, 0.2 + 0.5j):
        assert_allclose(bd.poisson_extend(one, x), 1.0, rtol=1e-15)
    # extension of the first mode is the identity
    zeta = bd.fourier_boundary({1: 1.0})
    assert_allclose(bd.poisson_extend(zeta, 0.3), 0.3, rtol=1e-15)
    assert_allclose(bd.poisson_extend(zeta, 0.2 + 0.1j), 0.2 + 0.1j, rtol=1e-15)
    # x = 0 returns the mean coefficient
    g = bd.fourier_boundary({0: 0.7, 2: 1.0, -1: 3.0})
    assert_allclose(bd.poisson_extend(g, 0.0), 0.7, rtol=1e-15)


def test_poisson_extend_matches_quadrature():
    # Fourier route vs direct kernel quadrature on the circle
    rng = np.random.default_rng(5)
    c = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    g = bd.fourier_boundary(c)
    rule = bd.circle_rule(512)
    gn = bd.node_boundary(rule, bd.boundary_values(g, rule))
    for x in (0.4, -0.3 + 0.2j, 0.1j):
        assert_allclose(bd.poisson_extend(gn, x, rule), bd.poisson_extend(g, x),
                        rtol=1e-12, atol=1e-12)


def test_poisson_extend_sphere_constant():
    rule = bd.sphere_rule(RB3, n=2048)
    one = bd.node_boundary(rule, np.ones(2048))
    # kernel mean over equal-weight nodes is exact at the origin (P = 1 there)
    assert_allclose(bd.poisson_extend(one, np.zeros(3), rule), 1.0, rtol=1e-14)
    # away from the origin the constant extends to 1 up to MC quadrature error
    x = np.array([0.2, -0.1, 0.4])
    ker = geo.poisson_kernel(RB3, x[None], rule.nodes)
    se = ker.std(ddof=1) / np.sqrt(len(ker))
    assert abs(bd.poisson_extend(one, x, rule) - 1.0) <= 4 * se


def test_l2_inner_values():
    one = bd.fourier_boundary({0: 1.0})
    zeta = bd.fourier_boundary({1: 1.0})
    assert_allclose(bd.l2_inner(one, one), 1.0)
    assert_allclose(bd.l2_inner(zeta, zeta), 1.0)
    assert_allclose(bd.l2_inner(zeta, one), 0.0)
    # conjugate symmetry
    f = bd.fourier_boundary({0: 1.0, 1: 2.0 + 1j})
    g = bd.fourier_boundary({1: 0.5 - 0.25j, -1: 3.0})
    assert_allclose(bd.l2_inner(f, g), np.conjugate(bd.l2_inner(g, f)))


def test_kernel_vector_norm_disk():
    # squared norm of P_x on the circle: (1 + |x|^2)/(1 - |x|^2)
    kv = bd.kernel_vector(DISK, 0.5)
    assert_allclose(bd.l2_inner(kv, kv), 5.0 / 3.0, rtol=1e-13)
    assert_allclose(bd.kernel_l2_norm_sq(DISK, 0.5), 5.0 / 3.0, rtol=1e-13)
    assert bd.kernel_l2_norm_sq(DISK, 0.0) == pytest.approx(1.0, rel=1e-14)
    # the closed form equals cosh of the distance to the origin
    x = 0.3 - 0.6j
    d = geo.dist(DISK, 0.0, x)
    assert_allclose(bd.kernel_l2_norm_sq(DISK, x), np.cosh(d), rtol=1e-12)
    # bound check quoted against e^{d}
    assert bd.kernel_l2_norm_sq(DISK, 0.5) <= np.exp(geo.dist(DISK, 0.0, 0.5))


def test_kernel_norm_truncation_monotone():
    norms = []
    for k in (4, 8, 16, 32, 64):
        c = bd.poisson_coeffs(0.6, k)
        norms.append(np.sum(np.abs(c) ** 2))
    assert all(a < b for a, b in zip(norms, norms[1:]))
    assert_allclose(norms[-1], (1 + 0.36) / (1 - 0.36), rtol=1e-13)


def test_kernel_growth_constant_bounded():
    for model, rule in ((DISK, bd.circle_rule(512)), (CB2, bd.sphere_rule(CB2)),
                        (RB3, bd.sphere_rule(RB3))):
        pts = geo.random_points(model, 100, np.random.default_rng(6), 0.9)
        c = bd.kernel_growth_constant(model, rule, pts)
        assert 0 < c < 10.0


def test_mvp_residual_disk():
    # exact mean value property; residual is pure quadrature error
    res = bd.mvp_residual(DISK, 0.0, 1.0 + 0j, 1.0)
    assert res <= 1e-6
    res = bd.mvp_residual(DISK, 0.3 + 0.2j, np.exp(0.7j), 0.8)
    assert res <= 1e-6
    with pytest.raises(UsageError):
        bd.mvp_residual(DISK, 0.0, 1.0 + 0j, -1.0)


def test_mvp_residual_ball_mc():
    x0 = np.array([0.2 + 0j, 0.0 + 0j])
    xi = np.array([1.0 + 0j, 0.0 + 0j])
    res, se = bd.mvp_residual_stats(CB2, x0, xi, 0.8)
    assert res <= 4.0 * se
    x0r = np.array([0.1, -0.2, 0.3])
    xir = np.array([0.0, 0.0, 1.0])
    res, se = bd.mvp_residual_stats(RB3, x0r, xir, 0.8)
    assert res <= 4.0 * se


def test_radial_mean_value_property():
    # extension of a degree-5 trig polynomial; radial averages reproduce u(z)
    rng = np.random.default_rng(7)
    c = {0: 1.0}
    for n in range(1, 6):
        a = rng.standard_normal() + 1j * rng.standard_normal()
        c[n], c[-n] = a, np.conjugate(a)
    g = bd.fourier_boundary(c)
    z = 0.25 - 0.35j
    from psrecon._quad import leggauss
    u, w = leggauss(64)
    rmax = geo.dist(DISK, 0.0, 0.6)  # radial weight supported in |x| <= 0.6
    rho = 0.5 * rmax * (u + 1.0)
    wrho = 0.5 * rmax * w * geo.ball_volume_rate(DISK, rho) * np.exp(-rho)  # nu
    ang = 2 * np.pi * (np.arange(256) + 0.5) / 256
    y = (np.tanh(rho / 2)[:, None] * np.exp(1j * ang)[None, :]).ravel()
    pts = geo.involution(DISK, np.asarray(z + 0j), y)
    uvals = bd.poisson_extend(g, pts).reshape(64, 256).mean(axis=1)
    integral = wrho @ uvals
    mass = wrho.sum()
    assert_allclose(integral, bd.poisson_extend(g, z) * mass, rtol=1e-6)


def test_boundary_csv_roundtrip(tmp_path):
    g = bd.fourier_boundary({0: 1.5, 2: 0.25 - 1j, -2: 0.25 + 1j})
    p = tmp_path / "g.csv"
    bd.save_boundary(g, str(p))
    g2 = bd.load_boundary(str(p))
    assert_allclose(g2.coeffs, g.coeffs, rtol=0, atol=0)

    rule = bd.sphere_rule(RB3, n=128)
    h = bd.node_boundary(rule, lambda xi: 1.0 + xi[:, 0])
    p2 = tmp_path / "h.csv"
    bd.save_boundary(h, str(p2), rule)
    h2 = bd.load_boundary(str(p2), rule)
    assert_allclose(h2.values, h.values, rtol=0, atol=0)
    with pytest.raises(UsageError):
        bd.load_boundary(str(p2))
