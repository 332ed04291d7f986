from __future__ import annotations

import io

import numpy as np
import pytest
from numpy.testing import assert_allclose

from psrecon import geometry as geo
from psrecon import processes as pr
from psrecon.errors import UsageError

DISK = geo.poincare_disk()


def test_spec_validation():
    with pytest.raises(UsageError):
        pr.SamplerSpec("gaf-zeros", geo.real_ball(3))
    with pytest.raises(UsageError):
        pr.SamplerSpec("gaf-zeros", DISK, N=4)
    with pytest.raises(UsageError):
        pr.SamplerSpec("gaf-zeros", DISK, r_edge=0.99)
    with pytest.raises(UsageError):
        pr.SamplerSpec("poisson", DISK, lam=-1.0, R=5.0)
    with pytest.raises(UsageError):
        pr.SamplerSpec("poisson", DISK, lam=1.0)
    with pytest.raises(UsageError):
        pr.SamplerSpec("brownian", DISK)


def test_polynomial_roots_against_factored_forms():
    roots_true = np.array([0.25, -0.5 + 0.5j, 2.0, -1.0 - 3.0j])
    c = np.poly(roots_true)[::-1]
    got = np.sort_complex(pr.polynomial_roots(c))
    assert_allclose(got, np.sort_complex(roots_true), atol=1e-12)
    # degenerate leading coefficients are reduced away
    c_pad = np.concatenate([c, [0.0, 0.0]])
    got = np.sort_complex(pr.polynomial_roots(c_pad))
    assert_allclose(got, np.sort_complex(roots_true), atol=1e-12)
    with pytest.raises(UsageError):
        pr.polynomial_roots([0.0, 0.0])
    assert len(pr.polynomial_roots([3.0])) == 0


def test_polynomial_roots_match_reference_solver():
    # companion-matrix eigenvalues as an independent oracle
    for seed in range(5):
        g = pr.gaf_coefficients(80, seed)
        mine = np.sort_complex(pr.polynomial_roots(g))
        ref = np.sort_complex(np.roots(g[::-1]))
        assert_allclose(mine, ref, atol=1e-10)


def test_gaf_determinism_and_residuals():
    a = pr.sample_gaf_zeros(256, 0.9, seed=11)
    b = pr.sample_gaf_zeros(256, 0.9, seed=11)
    assert np.array_equal(a.points, b.points)
    assert np.all(np.abs(a.points) <= 0.9)
    # residual contract on every retained root
    g = pr.gaf_coefficients(256, 11)
    resid = np.abs(pr._horner(g, a.points))
    assert np.all(resid <= 1e-10 * np.max(np.abs(g)))
    # different seed, different zeros
    c = pr.sample_gaf_zeros(256, 0.9, seed=12)
    assert not np.array_equal(a.points, c.points)


def test_gaf_batch_matches_single():
    spec = pr.SamplerSpec("gaf-zeros", DISK, N=64, r_edge=0.9, seed=5)
    ens = pr.ensemble(spec, 40)
    for rep in (0, 7, 33, 39):
        single = pr.sample_gaf_zeros(64, 0.9, 5, rep=rep)
        assert np.array_equal(ens[rep].points, single.points)


def test_gaf_threaded_ensemble_identical():
    spec = pr.SamplerSpec("gaf-zeros", DISK, N=64, r_edge=0.9, seed=5)
    a = pr.ensemble(spec, 48)
    b = pr.ensemble(spec, 48, threads=4)
    for x, y in zip(a, b):
        assert np.array_equal(x.points, y.points)


def test_gaf_expected_counts():
    # E #{|z| < t} = t^2/(1-t^2); moderate ensemble here, full one in acceptance
    spec = pr.SamplerSpec("gaf-zeros", DISK, N=256, r_edge=0.9, seed=1)
    ens = pr.ensemble(spec, 300)
    for t in (0.5, 0.7):
        counts = np.array([np.sum(np.abs(c.points) < t) for c in ens])
        want = t * t / (1.0 - t * t)
        se = counts.std(ddof=1) / np.sqrt(len(counts))
        assert abs(counts.mean() - want) <= 3.0 * se, (t, counts.mean(), want, se)


def test_poisson_determinism_and_radius():
    a = pr.sample_poisson(DISK, 1.0, 10.0, seed=3)
    b = pr.sample_poisson(DISK, 1.0, 10.0, seed=3)
    assert np.array_equal(a.points, b.points)
    d = geo.dist(DISK, a.points, np.zeros(len(a), complex))
    assert d.max() <= 10.0 + 1e-9
    assert len(a) > 0.5 * np.pi * np.sinh(5.0) ** 2


def test_poisson_empty_at_tiny_radius():
    assert 1.0 * geo.ball_volume(DISK, 0.01) < 1e-3
    count = sum(len(pr.sample_poisson(DISK, 1.0, 0.01, seed=s)) for s in range(50))
    assert count == 0


def test_poisson_mean_count():
    # mean count = lam * ball_volume over 200 seeds within 3 SE
    lam, R = 1.0, 6.0
    counts = np.array([len(pr.sample_poisson(DISK, lam, R, seed=s)) for s in range(200)])
    want = lam * geo.ball_volume(DISK, R)
    se = counts.std(ddof=1) / np.sqrt(len(counts))
    assert abs(counts.mean() - want) <= 3.0 * se


def test_poisson_annulus_counts():
    lam, R = 1.0, 8.0
    ens = [pr.sample_poisson(DISK, lam, R, seed=s) for s in range(150)]
    for k in (1, 4, 6):
        want = lam * (geo.ball_volume(DISK, k + 1.0) - geo.ball_volume(DISK, float(k)))
        counts = []
        for c in ens:
            d = geo.dist(DISK, c.points, np.zeros(len(c), complex))
            counts.append(np.sum((d >= k) & (d < k + 1)))
        counts = np.asarray(counts, dtype=float)
        se = counts.std(ddof=1) / np.sqrt(len(counts))
        assert abs(counts.mean() - want) <= 3.0 * se, (k, counts.mean(), want)


def test_poisson_ball_models():
    cb = geo.complex_ball(2)
    conf = pr.sample_poisson(cb, 0.5, 4.0, seed=9)
    assert conf.points.shape[1] == 2
    d = geo.dist(cb, conf.points, np.zeros_like(conf.points))
    assert d.max() <= 4.0 + 1e-9
    counts = [len(pr.sample_poisson(cb, 0.5, 4.0, seed=s)) for s in range(100)]
    counts = np.asarray(counts, dtype=float)
    want = 0.5 * geo.ball_volume(cb, 4.0)
    se = counts.std(ddof=1) / np.sqrt(len(counts))
    assert abs(counts.mean() - want) <= 3.0 * se

    rb = geo.real_ball(3)
    conf = pr.sample_poisson(rb, 1.0, 5.0, seed=4)
    assert conf.points.shape[1] == 3
    assert geo.dist(rb, conf.points, np.zeros_like(conf.points)).max() <= 5.0 + 1e-9


def test_poisson_radial_law():
    # radii follow the normalized ball-volume CDF: KS-style grid check
    conf = pr.sample_poisson(DISK, 2.0, 6.0, seed=21)
    d = np.sort(geo.dist(DISK, conf.points, np.zeros(len(conf), complex)))
    v6 = geo.ball_volume(DISK, 6.0)
    for q in (0.25, 0.5, 0.75):
        r_q = d[int(q * len(d))]
        want = geo.ball_volume(DISK, r_q) / v6
        # binomial fluctuation of the empirical CDF
        se = np.sqrt(q * (1 - q) / len(d))
        assert abs(want - q) <= 4.0 * se


def test_first_intensity():
    gaf = pr.SamplerSpec("gaf-zeros", DISK, N=256, r_edge=0.9, seed=0)
    assert_allclose(pr.first_intensity(DISK, gaf, 0.0), 1.0 / np.pi, rtol=1e-15)
    poi = pr.SamplerSpec("poisson", DISK, lam=2.0, R=10.0, seed=0)
    assert_allclose(pr.first_intensity(DISK, poi, 0.5), 2.0 / 0.75**2, rtol=1e-15)
    # GAF intensity integrates over {|z|<t} to t^2/(1-t^2)
    t = 0.6
    from psrecon._quad import adaptive_gl
    val, _ = adaptive_gl(lambda r: 2 * r / (1 - r * r) ** 2, 0.0, t, tol=1e-13)
    assert_allclose(val, t * t / (1 - t * t), rtol=1e-11)


def test_configuration_csv_roundtrip():
    for conf in (pr.sample_poisson(DISK, 1.0, 5.0, seed=1),
                 pr.sample_gaf_zeros(64, 0.9, seed=1),
                 pr.sample_poisson(geo.complex_ball(2), 0.5, 3.0, seed=1),
                 pr.sample_poisson(geo.real_ball(3), 0.5, 3.0, seed=1)):
        buf = io.StringIO()
        pr.save_configuration(conf, buf)
        text = buf.getvalue()
        assert text.startswith("# model=")
        assert "# process=" in text and "# seed=" in text and "# R=" in text
        back = pr.load_configuration(io.StringIO(text))
        assert back.model == conf.model
        assert_allclose(np.asarray(back.points, dtype=complex),
                        np.asarray(conf.points, dtype=complex), rtol=0, atol=0)
        # regeneration from metadata alone is bit-identical
        regen = pr.regenerate(back)
        assert np.array_equal(regen.points, conf.points)


def test_csv_bytes_stable():
    conf = pr.sample_poisson(DISK, 1.0, 4.0, seed=17)
    a, b = io.StringIO(), io.StringIO()
    pr.save_configuration(conf, a)
    pr.save_configuration(pr.sample_poisson(DISK, 1.0, 4.0, seed=17), b)
    assert a.getvalue() == b.getvalue()
