import numpy as np
import pytest
from scipy.special import erf

from psychonet import functions as pf
from psychonet.validation import DomainError


def phi(z):
    # independent Gaussian CDF oracle
    return 0.5 * (1.0 + erf(z / np.sqrt(2.0)))


def test_weibull_at_threshold():
    fn = pf.Weibull(beta=(1.0,), thresh=(0.0,), bounds=((-20.0, 20.0),))
    assert fn.evaluate_one([0.0]) == pytest.approx(np.exp(-1.0))


def test_weibull_limits():
    fn = pf.Weibull(alpha=0.1, lapse=0.05, beta=(1.0, 1.0), thresh=(0.0, 0.0),
                    bounds=((-300.0, 300.0), (-300.0, 300.0)))
    assert fn.evaluate_one([-300.0, -300.0]) == pytest.approx(0.95, abs=1e-9)
    assert fn.evaluate_one([300.0, 300.0]) == pytest.approx(0.1, abs=1e-9)


def test_weibull_monotone_nonincreasing():
    fn = pf.canonical("wei2d")
    rng = np.random.default_rng(0)
    X = rng.uniform(-19, 19, size=(50, 2))
    base = fn.evaluate(X)
    for k in range(2):
        shifted = X.copy()
        shifted[:, k] += 1.0
        assert np.all(fn.evaluate(shifted) <= base + 1e-12)


def test_sinusoid_threshold_values():
    fn = pf.Sinusoid2D(amplitude=3.0, frequency=1.0)
    assert fn.threshold(0.0) == pytest.approx(0.0)
    assert fn.threshold(1.0 / 4.0) == pytest.approx(3.0)
    # at the threshold the factor is exp(-1)
    assert fn.evaluate_one([0.25, 3.0]) == pytest.approx(np.exp(-1.0))


def test_max2d_threshold():
    fn = pf.MaxLinear2D(floor=1.0, intercept=0.0, slope=2.0)
    assert fn.threshold(0.25) == pytest.approx(1.0)
    assert fn.threshold(0.9) == pytest.approx(1.8)


def test_donut_at_outer_radius():
    fn = pf.Donut2D(beta=1.0, r_inner=8.0, r_outer=14.0)
    assert fn.evaluate_one([14.0, 0.0]) == pytest.approx(np.exp(-1.0))


def test_donut_requires_ordered_radii():
    with pytest.raises(ValueError):
        pf.Donut2D(r_inner=5.0, r_outer=4.0)


def test_donut_radial_symmetry():
    fn = pf.Donut2D()
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = rng.uniform(0, 19)
        a, b = rng.uniform(0, 2 * np.pi, size=2)
        pa = fn.evaluate_one([r * np.cos(a), r * np.sin(a)])
        pb = fn.evaluate_one([r * np.cos(b), r * np.sin(b)])
        assert pa == pytest.approx(pb, abs=1e-12)


def test_sphere_at_radius():
    fn = pf.Sphere(beta=1.0, bounds=((-20.0, 20.0),) * 3)
    assert fn.resolved_radius == pytest.approx(10.0)
    assert fn.evaluate_one([10.0, 0.0, 0.0]) == pytest.approx(np.exp(-1.0))


def test_sphere_radial_symmetry():
    fn = pf.Sphere(bounds=((-20.0, 20.0), (-20.0, 20.0)))
    assert fn.evaluate_one([7.0, 0.0]) == pytest.approx(fn.evaluate_one([0.0, 7.0]))


def test_novel2d_reference_point():
    fn = pf.Novel2D()
    # ridge at (0, -1) is 4*(1+x1)/0.1 - 4 = -4
    assert fn.ridge(np.array([[0.0, -1.0]]))[0] == pytest.approx(-4.0)
    assert fn.evaluate_one([0.0, -1.0]) == pytest.approx(phi(-4.0), rel=1e-10)


def test_novel2d_range():
    fn = pf.Novel2D(alpha=0.5)
    rng = np.random.default_rng(1)
    vals = fn.evaluate(rng.uniform(-1, 1, size=(200, 2)))
    assert np.all(vals >= 0.5) and np.all(vals <= 1.0)


def test_hartmann6_constants_checksum():
    assert pf.HARTMANN6_A.shape == (4, 6)
    assert pf.HARTMANN6_P.shape == (4, 6)
    assert pf.HARTMANN6_A.sum() == pytest.approx(133.4)
    assert pf.HARTMANN6_P.sum() == pytest.approx(1e-4 * 101095.0)
    assert pf.HARTMANN6_A[1, 0] == 0.5 and pf.HARTMANN6_A[3, 2] == 0.5
    assert pf.HARTMANN6_P[0, 3] == pytest.approx(0.0124)
    assert pf.HARTMANN6_P[3, 5] == pytest.approx(0.0381)
    assert tuple(pf.HARTMANN6_ALPHA) == (2.0, 2.2, 2.8, 3.0)


def test_hartmann6_far_point():
    fn = pf.Hartmann6()
    # the corner farthest from every well: h ~ 1, so the value is Phi(1)
    x = np.array([1.0, 1.0, 0.0, 1.0, 1.0, 1.0])
    value = fn.evaluate_one(x)
    assert value == pytest.approx(phi(1.0), abs=1e-4)


def test_hartmann6_direct_oracle():
    fn = pf.Hartmann6()
    rng = np.random.default_rng(2)
    X = rng.random((10, 6))
    for x in X:
        h = 1.0 - sum(
            pf.HARTMANN6_ALPHA[i]
            * np.exp(-sum(pf.HARTMANN6_A[i, j] * (x[j] - pf.HARTMANN6_P[i, j]) ** 2 for j in range(6)))
            for i in range(4)
        )
        expected = phi(3.0 * h - 2.0)
        assert fn.evaluate_one(x) == pytest.approx(expected, rel=1e-12)


def test_surface8d_midpoint():
    fn = pf.Surface8D(alpha=0.2, lapse=0.1)
    rng = np.random.default_rng(4)
    for _ in range(5):
        x = rng.uniform(-1, 1, size=8)
        phase = x[1] * x[7]
        c = (0.5 * x[2] * (1 - np.cos(0.6 * np.pi * phase + x[6])) + x[3]) * (
            2 - x[5] * (1 + np.sin(0.3 * np.pi * phase + x[6]))
        ) - 1
        x[0] = c
        if abs(c) <= 1.0:
            assert fn.evaluate_one(x) == pytest.approx(0.2 + 0.7 * 0.5)


def test_surface8d_denominator_floor():
    fn = pf.Surface8D()
    x = np.zeros(8)
    x[4] = 0.0  # denominator factor vanishes
    assert 0.0 <= fn.evaluate_one(x) <= 1.0


def test_all_functions_within_band():
    rng = np.random.default_rng(9)
    for family in pf.FAMILIES:
        fn = pf.canonical(family, pf.DISCRIMINATION)
        bounds = fn.domain()
        X = bounds[:, 0] + rng.random((100, bounds.shape[0])) * (bounds[:, 1] - bounds[:, 0])
        vals = fn.evaluate(X)
        assert np.all(vals >= fn.alpha - 1e-12), family
        assert np.all(vals <= 1.0 - fn.lapse + 1e-12), family


def test_domain_error():
    fn = pf.canonical("nv2d")
    with pytest.raises(DomainError):
        fn.evaluate_one([2.0, 0.0])


def test_sample_response_extremes(rng):
    fn = pf.Weibull(alpha=0.0, lapse=0.0, beta=(1.0,), thresh=(0.0,), bounds=((-400.0, 400.0),))
    assert all(pf.sample_response(fn, [-400.0], rng) == 1 for _ in range(20))
    assert all(pf.sample_response(fn, [400.0], rng) == 0 for _ in range(20))


def test_sample_response_binomial_ci(rng):
    fn = pf.Novel2D()
    x = [-0.9287, -0.0707]
    p = fn.evaluate_one(x)
    assert 0.05 < p < 0.95
    draws = [pf.sample_response(fn, x, rng) for _ in range(10000)]
    sigma = np.sqrt(p * (1 - p) / 10000)
    assert abs(np.mean(draws) - p) < 3 * sigma


def test_randomize_modes(rng):
    assert pf.randomize("wei2d", rng, pf.DETECTION).alpha == 0.0
    assert pf.randomize("wei2d", rng, pf.DISCRIMINATION).alpha == 0.5
    for _ in range(25):
        donut = pf.randomize("dn2d", rng)
        assert donut.r_inner < donut.r_outer


def test_randomize_within_documented_ranges(rng):
    for _ in range(10):
        wei = pf.randomize("wei3d", rng)
        bounds = wei.domain()
        spans = bounds[:, 1] - bounds[:, 0]
        assert np.all(np.asarray(wei.thresh) >= bounds[:, 0] + 0.2 * spans - 1e-9)
        assert np.all(np.asarray(wei.thresh) <= bounds[:, 1] - 0.2 * spans + 1e-9)
        assert np.all(np.asarray(wei.beta) >= 0.5) and np.all(np.asarray(wei.beta) <= 4.0)


def test_function_serialization_round_trip():
    for family in pf.FAMILIES:
        fn = pf.canonical(family, pf.DISCRIMINATION)
        doc = fn.to_dict()
        restored = pf.from_dict(doc)
        assert restored == fn
