import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughkpz.constants import GaussianProfile, RaisedCosineProfile, TestFunction, variance_exact
from roughkpz.errors import InvalidDuration, TestFunctionTooWide
from roughkpz.mollifier import rho_hat
from roughkpz.sparse import (LinearProbe, QuadraticProbe, SparseChaosSampler, _exp_quadratic_form,
                             combine, linear_probes_for, probes_for, variance_correction,
                             xi_tilde_discrete_variance)


def gphi(k, center=0.5, width=0.02, amp=1.0):
    return TestFunction({k: (amp, GaussianProfile(center, width))})


def se_of(x):
    return x.std(ddof=1) / math.sqrt(x.size)


def test_variance_correction_limits():
    x = np.array([0.0, 1e-10, 1e-3, 1.0, 100.0])
    c = variance_correction(x)
    assert c[0] == 1.0 and c[1] == 1.0
    assert c[2] == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.diff(c) <= 0)
    assert c[-1] == pytest.approx(math.sqrt(2.0 / 100.0), rel=1e-12)


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=12), st.floats(0.0, 5.0))
@settings(max_examples=40, deadline=None)
def test_exp_quadratic_form_brute_force(w, x):
    w = np.array(w)
    n = np.arange(w.size)
    brute = np.sum(np.outer(w, w) * np.exp(-x * np.abs(n[:, None] - n[None, :])))
    got = _exp_quadratic_form(w, np.array([x]))[0]
    assert got == pytest.approx(brute, rel=1e-10, abs=1e-10)


def test_combine_pairs_real_and_complex_modes():
    fn = TestFunction({0: (2.0, GaussianProfile(0.5, 0.02)), 3: (1j, GaussianProfile(0.5, 0.02))})
    vals = np.array([[1.5 + 9j, 2.0 + 3.0j]])
    assert combine(vals, fn)[0] == pytest.approx(2.0 * 1.5 + 2.0 * 3.0)


def test_constructor_errors():
    prof = GaussianProfile(0.5, 0.02)
    with pytest.raises(ValueError):
        SparseChaosSampler(0.25, 0.5, [])
    with pytest.raises(ValueError):
        SparseChaosSampler(0.25, 0.5, [QuadraticProbe(-1, prof)])
    with pytest.raises(TestFunctionTooWide):
        SparseChaosSampler(0.25, 0.5, [QuadraticProbe(30, prof)], L=40)
    with pytest.raises(InvalidDuration):
        SparseChaosSampler(0.25, 0.5, [QuadraticProbe(0, prof)], dt=0.0)


def test_grid_is_midpoint_and_divides_window():
    s = SparseChaosSampler(0.25, 0.5, probes_for(gphi(0)), dt=1e-3)
    lo, hi = gphi(0).time_window(0.25 ** 2)
    assert s.times[0] == pytest.approx(lo + s.dt / 2)
    assert s.times[-1] == pytest.approx(hi - s.dt / 2)
    assert s.dt <= 1e-3


@pytest.mark.parametrize("k", [0, 2])
def test_discrete_moments_approach_exact_variance(k):
    phi = gphi(k)
    exact = variance_exact(phi, 0.125, 0.5)
    s = SparseChaosSampler(0.125, 0.5, probes_for(phi), dt=2e-4)
    assert xi_tilde_discrete_variance(s, phi) == pytest.approx(exact, rel=0.01)


@pytest.mark.parametrize("k", [0, 2])
def test_sampled_moments_match_discrete(k):
    phi = gphi(k)
    s = SparseChaosSampler(0.25, 0.5, probes_for(phi))
    out = s.sample(np.random.default_rng(k), 20000)
    vals = combine(out["quadratic"], phi)
    assert abs(vals.mean()) <= 3 * se_of(vals)
    sq = vals ** 2
    assert abs(sq.mean() - xi_tilde_discrete_variance(s, phi)) <= 3 * se_of(sq)


def test_linear_probe_variance():
    prof = RaisedCosineProfile(0.5, 0.1)
    psi = TestFunction({0: (1.0, prof), 2: (0.5j, prof)})
    s = SparseChaosSampler(0.25, 0.5, [QuadraticProbe(0, prof)],
                           linear_probes_for(psi, mollify=False))
    out = s.sample(np.random.default_rng(5), 20000)
    vals = combine(out["linear"], psi)
    target = prof.l2_squared() * (1.0 + 2 * 0.25 * rho_hat(0.5) ** 2)
    assert abs(vals.mean()) <= 3 * se_of(vals)
    sq = vals ** 2
    assert abs(sq.mean() - target) <= 3 * se_of(sq)


def test_sampler_reproducible():
    s = SparseChaosSampler(0.25, 0.5, probes_for(gphi(1)), [LinearProbe(1, GaussianProfile(0.5, 0.02))])
    a = s.sample(np.random.default_rng(3), 50)
    b = s.sample(np.random.default_rng(3), 50)
    np.testing.assert_array_equal(a["quadratic"], b["quadratic"])
    np.testing.assert_array_equal(a["linear"], b["linear"])
