import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cctrlab.analysis import (
    ProfileF,
    deviation_bound,
    f_eval,
    f_flow_residuals,
    fit_gap_constant,
    g_f_gap,
    g_f_gap_bound,
    g_sequence,
    simpson,
)

GRID = np.round(np.arange(0, 101) * 0.1, 10)


def test_f_simple_values(profile):
    assert f_eval(profile, 0.0) == 0.5
    assert abs(f_eval(profile, 10.0) - 0.5) < 1e-8


def test_f_tends_to_half(profile):
    xs = np.linspace(1, 30, 400)
    env = 0.5 * np.exp(-profile.a * xs)
    assert np.all(np.abs(profile(xs) - 0.5) <= env + 1e-16)
    assert np.all((profile(xs) > 0) & (profile(xs) < 1))


def test_derivative_matches_finite_difference(profile):
    h = 1e-6
    for x in (0.3, 1.7, 4.2):
        fd = (profile(x + h) - profile(x - h)) / (2 * h)
        assert abs(fd - profile.derivative(x)) < 1e-8


def test_flow_residuals_on_grid(profile):
    res = np.array([f_flow_residuals(profile, float(x), 256) for x in GRID])
    assert res[:, 0].max() <= 1e-10
    assert res[:, 1].max() <= 1e-8


def test_flow_residuals_need_panels(profile):
    with pytest.raises(ValueError):
        f_flow_residuals(profile, 1.0, 8)


def test_simpson_fourth_order(profile):
    x = 0.5
    errs = [f_flow_residuals(profile, x, p)[1] for p in (16, 32, 64)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 12 < coarse / fine < 20


def test_simpson_exact_for_cubics():
    assert simpson(lambda s: s**3 - 2 * s, 0.0, 2.0, 2) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        simpson(np.sin, 0, 1, 3)


def test_wrong_frequency_breaks_identity(profile):
    other = ProfileF(profile.a, profile.b + 0.05)
    assert f_flow_residuals(other, 2.0)[0] > 1e-4


def test_g_matches_f_then_averages(profile):
    n = 50
    g = g_sequence(n, 4 * n, profile)
    t = np.arange(1, n + 1)
    np.testing.assert_array_equal(g.values[:n], profile(t / n))
    assert g(n + 1) == pytest.approx(np.mean(profile(t / n)), abs=1e-15)
    for tt in range(n + 1, 4 * n + 1):
        assert g(tt) == pytest.approx(np.mean(g.values[tt - 1 - n : tt - 1]), abs=1e-14)


def test_g_recursion_agrees():
    g = g_sequence(100, 500)
    assert g.max_discrepancy() <= 1e-12


def test_g_in_unit_interval():
    for n in (10, 100, 1000):
        v = g_sequence(n, 6 * n).values
        assert v.min() >= 0 and v.max() <= 1


def test_g_requires_room():
    with pytest.raises(ValueError):
        g_sequence(10, 10)


@pytest.mark.parametrize("n", [100, 300, 1000])
def test_g_limit(n):
    # the weighted sum sum_k k g(t-n+k) is conserved by the moving average, so
    # g converges to its value at t = n divided by n(n+1)/2; that limit is
    # within O(1/n) of 1/2 rather than exactly 1/2
    g = g_sequence(n, 10 * n)
    k = np.arange(1, n + 1)
    limit = math.fsum(k * g.values[:n]) / (n * (n + 1) / 2)
    assert abs(g(10 * n) - limit) < 1e-6
    assert abs(g(10 * n) - 0.5) < 0.1 / n


def test_gap_bound_examples():
    assert g_f_gap_bound(100, 100, 1.0) == pytest.approx(math.exp(2.02) / 200, rel=1e-15)
    assert abs(float(g_f_gap_bound(100, 100, 1.0)) - 0.0377) < 5e-5
    assert g_f_gap_bound(200, 199, 1.0) == pytest.approx(g_f_gap_bound(100, 99, 1.0) / 2)


def test_gap_scales_like_inverse_n():
    peaks = [g_f_gap(g_sequence(n, 3 * n))[: 3 * n].max() for n in (100, 300, 900)]
    for lo, hi in zip(peaks, peaks[1:]):
        assert 0.25 <= hi / lo <= 0.45


def test_fitted_constant_is_stable():
    c1, c2 = fit_gap_constant(1000, 5000), fit_gap_constant(2000, 10000)
    assert 0 < c1 < 1 and 0 < c2 < 1
    assert abs(c1 - c2) / c1 < 0.05
    g = g_sequence(1000, 5000)
    t = np.arange(1, 5001)
    assert np.all(g_f_gap(g) <= g_f_gap_bound(1000, t, c1) * (1 + 1e-12))


def test_deviation_bound_examples():
    assert deviation_bound(0.0, 100, 0.1) == 1.0
    assert deviation_bound(0.1, 100, 0.1) == 1.0
    assert 2 * math.exp(-0.01 * 100**0.8) > 1
    assert deviation_bound(0.05, 10**6, 0.1) < 1e-60
    with pytest.raises(ValueError):
        deviation_bound(-1.0, 10, 0.1)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2), st.integers(2, 10**6), st.floats(0.01, 0.49))
def test_deviation_bound_is_probability(x, n, c):
    v = deviation_bound(x, n, c)
    assert 0 <= v <= 1
    assert deviation_bound(x + 0.1, n, c) <= v
