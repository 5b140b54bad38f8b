import math

import numpy as np
import pytest

from roughkpz.config import SimConfig
from roughkpz.constants import GaussianProfile, TestFunction, c1_exact, variance_exact
from roughkpz.errors import CutoffTooSmall, InvalidDuration, TestFunctionTooWide
from roughkpz.mollifier import SyntheticMollifier, delta_fourier
from roughkpz.noise import (ModeTrajectory, NoisePath, SeedLineage, complex_normal,
                            ou_stationary_draw, ou_step, ou_variance, sample_X_trajectory,
                            square_mode)
from roughkpz import noise
from roughkpz.spectral import DyadicPartition, besov_norms, dealiased_product

EIGHT_PI2 = 8 * math.pi ** 2


def within(x, target, se, k=3.0):
    return abs(x - target) <= k * se


def rng(seed=0):
    return np.random.default_rng(seed)


# -- seeding ---------------------------------------------------------------------

def test_lineage_reproducible_and_distinct():
    a = SeedLineage(7, ("study", 0, 3)).generator().standard_normal(5)
    b = SeedLineage(7, ("study", 0, 3)).generator().standard_normal(5)
    c = SeedLineage(7, ("study", 0, 4)).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert SeedLineage(7).child("x", 2).to_list() == [7, "x", 2]


def test_lineage_rejects_negative_keys():
    with pytest.raises(ValueError):
        SeedLineage(1, (-1,)).generator()


def test_complex_normal_variance():
    z = complex_normal(rng(), 200000, 2.0)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(2.0, rel=0.02)
    assert np.var(z.real) == pytest.approx(1.0, rel=0.02)


# -- OU modes ----------------------------------------------------------------------

def test_stationary_draw_variance_mode_two():
    g = rng(1)
    draws = np.array([ou_stationary_draw(2, 0.1, 0.5, g) for _ in range(100000)])
    power = np.abs(draws) ** 2
    se = power.std(ddof=1) / math.sqrt(power.size)
    assert within(power.mean(), 1.0 / (32 * math.pi ** 2), se)
    assert within(draws.real.mean(), 0.0, draws.real.std() / math.sqrt(draws.size))
    assert within(draws.imag.mean(), 0.0, draws.imag.std() / math.sqrt(draws.size))


def test_stationary_draw_conjugate_pairs():
    s = SeedLineage(3, ("pair",))
    assert ou_stationary_draw(-4, 0.1, 0.5, s.generator()) == \
        ou_stationary_draw(4, 0.1, 0.5, s.generator()).conjugate()
    with pytest.raises(ValueError):
        ou_stationary_draw(0, 0.1, 0.5, rng())


def test_ou_step_long_and_short_steps():
    x = np.full(100000, 3.0 + 0j)
    far = ou_step(x, 1, 50.0, rng(2))
    assert np.mean(np.abs(far) ** 2) == pytest.approx(1 / EIGHT_PI2, rel=0.02)
    near = ou_step(x, 1, 1e-12, rng(3))
    assert np.var(near) < 1e-9
    np.testing.assert_allclose(near.mean(), 3.0, atol=1e-6)
    with pytest.raises(InvalidDuration):
        ou_step(x, 1, 0.0, rng())
    with pytest.raises(ValueError):
        ou_step(x, 0, 0.1, rng())


def test_ou_step_composition():
    k, dt, n = 3, 2e-3, 100000
    x0 = np.full(n, 0.05 + 0.02j)
    two = ou_step(ou_step(x0, k, dt, rng(4)), k, dt, rng(5))
    one = ou_step(x0, k, 2 * dt, rng(6))
    for f in (lambda z: z.real, lambda z: np.abs(z) ** 2):
        a, b = f(two), f(one)
        se = math.sqrt(a.var() / n + b.var() / n)
        assert within(a.mean(), b.mean(), se)
    assert ou_variance(k, 2 * dt) == pytest.approx(
        ou_variance(k, dt) * (1 + math.exp(-2 * 4 * math.pi ** 2 * k * k * dt)))


# -- trajectories ---------------------------------------------------------------------

def small_cfg(**kw):
    base = dict(gamma=0.5, eps=0.5, K=128, T=0.05, dt=0.01)
    base.update(kw)
    return SimConfig(**base)


def test_cutoff_enforced():
    with pytest.raises(CutoffTooSmall):
        SimConfig(gamma=0.5, eps=0.5, K=64, T=0.05, dt=0.01)
    cfg = SimConfig(gamma=0.5, eps=0.5, K=64, T=0.05, dt=0.01, strict_cutoff=False)
    X, _ = sample_X_trajectory(cfg, rng())
    assert X.cutoff == 64


def test_trajectory_shapes_and_derivative():
    cfg = small_cfg()
    X, dX = sample_X_trajectory(cfg, rng())
    assert X.modes.shape == (6, 129)
    assert np.all(X.modes[:, 0] == 0)
    np.testing.assert_array_equal(dX.modes, X.modes * 1j * np.arange(129))
    assert X.meta["eps"] == 0.5 and X.dt == pytest.approx(0.01)


def test_trajectory_stationary_in_time():
    cfg = small_cfg()
    g = rng(8)
    R = 2000
    first = np.zeros((R, 3))
    last = np.zeros((R, 3))
    for r in range(R):
        X, _ = sample_X_trajectory(cfg, g)
        first[r] = np.abs(X.modes[0, 1:4]) ** 2
        last[r] = np.abs(X.modes[-1, 1:4]) ** 2
    se = np.sqrt(first.var(axis=0) / R + last.var(axis=0) / R)
    assert np.all(np.abs(first.mean(axis=0) - last.mean(axis=0)) <= 3 * se)


def test_exact_transitions_independent_of_refinement():
    R = 3000
    a = np.array([np.abs(sample_X_trajectory(small_cfg(dt=0.01), rng(9 + r))[0].modes[-1, 2]) ** 2
                  for r in range(R)])
    b = np.array([np.abs(sample_X_trajectory(small_cfg(dt=0.005), rng(99999 + r))[0].modes[-1, 2]) ** 2
                  for r in range(R)])
    assert within(a.mean(), b.mean(), math.sqrt(a.var() / R + b.var() / R))


def test_mean_square_gradient_matches_counterterm():
    cfg = small_cfg(T=0.01)
    g = rng(10)
    vals = []
    for _ in range(1500):
        _, dX = sample_X_trajectory(cfg, g)
        vals.append(2.0 * np.sum(np.abs(dX.modes[0]) ** 2))
    vals = np.array(vals)
    assert within(vals.mean(), c1_exact(0.5, 0.5, 128, tail_tol=None),
                  vals.std(ddof=1) / math.sqrt(vals.size))


def test_degenerate_transform_gives_zero_trajectory():
    X, dX = sample_X_trajectory(small_cfg(), rng(), SyntheticMollifier(delta_fourier))
    assert not np.any(X.modes)
    assert not np.any(dX.modes)


def test_stationary_start_regularity():
    gamma = 0.5
    med_low, med_high = [], []
    for eps in (0.5, 0.125, 2.0 ** -5):
        cfg = SimConfig(gamma=gamma, eps=eps, K=int(np.ceil(64 / eps)), T=eps * eps / 4,
                        dt=eps * eps / 4)
        g = rng(11)
        zeta = np.array([sample_X_trajectory(cfg, g)[0].modes[0] for _ in range(40)])
        part = DyadicPartition(cfg.K)
        med_low.append(np.median(besov_norms(zeta, 0.5 - gamma - 0.05, part)))
        med_high.append(np.median(besov_norms(zeta, 0.5 - gamma + 0.3, part)))
    assert max(med_low) < 2.0 * min(med_low)
    assert med_high[2] > 2.0 * med_high[0]


# -- quadratic tested noise -----------------------------------------------------------

def test_square_mode_matches_dealiased_product():
    K = 10
    m = rng(12).standard_normal(K + 1) + 1j * rng(13).standard_normal(K + 1)
    m[0] = 0
    full = dealiased_product(m, m)
    for k in range(K + 1):
        assert square_mode(m, k) == pytest.approx(full[k], abs=1e-12)


def test_tested_xi_tilde_zero_and_errors():
    cfg = small_cfg(T=1.0, dt=0.01)
    X, _ = sample_X_trajectory(cfg, rng())
    zero = TestFunction({0: (0.0, GaussianProfile(0.5, 0.02))})
    assert noise.tested_xi_tilde(X, zero, 0.0) == 0.0
    wide = TestFunction({100: (1.0, GaussianProfile(0.5, 0.02))})
    with pytest.raises(TestFunctionTooWide):
        noise.tested_xi_tilde(X, wide, 0.0)
    late = TestFunction({0: (1.0, GaussianProfile(0.95, 0.02))})
    with pytest.raises(ValueError):
        noise.tested_xi_tilde(X, late, 0.0)


@pytest.mark.slow
def test_tested_xi_tilde_mean_and_variance():
    eps, gamma = 1.0, 0.5
    phi = TestFunction({0: (1.0, GaussianProfile(0.55, 0.03))})
    cfg = SimConfig(gamma=gamma, eps=eps, K=64, T=1.1, dt=5e-4)
    C1 = c1_exact(eps, gamma, 64, tail_tol=None)
    g = SeedLineage(0, ("xi_tilde_test",)).generator()
    vals = np.array([noise.tested_xi_tilde(sample_X_trajectory(cfg, g)[0], phi, C1) for _ in range(1500)])
    se_mean = vals.std(ddof=1) / math.sqrt(vals.size)
    assert within(vals.mean(), 0.0, se_mean)
    sq = vals ** 2
    assert within(sq.mean(), variance_exact(phi, eps, gamma), sq.std(ddof=1) / math.sqrt(sq.size))


# -- noise path ------------------------------------------------------------------

def test_noise_path_replays():
    cfg = small_cfg(dt=0.0125)
    path = NoisePath(cfg, SeedLineage(0, ("replay",)))
    a = np.array(list(path.increments()))
    b = np.array(list(path.increments()))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(path.initial_state(), path.initial_state())
    assert path.start_time == pytest.approx(-path.n_burn * cfg.noise_dt)


def test_noise_path_taps_normalized():
    cfg = SimConfig(gamma=0.5, eps=0.5, K=128, T=0.0625, dt=0.0078125)
    path = NoisePath(cfg, SeedLineage(0))
    assert path.taps.sum() == pytest.approx(1.0)
    assert np.all(np.abs(path.tap_offsets) * cfg.noise_dt <= cfg.eps ** 2 / 4)


def test_zero_noise_path():
    cfg = small_cfg(dt=0.0125)
    path = NoisePath(cfg, SeedLineage(0), zero=True)
    assert not np.any(path.initial_state())
    assert not any(np.any(g) for g in path.increments())


def test_white_noise_path_stationary_variance():
    cfg = SimConfig(gamma=0.5, eps=0.5, K=128, T=0.05, dt=0.01, noise_kind="white", burn_in=0.0)
    vals = []
    for r in range(3000):
        path = NoisePath(cfg, SeedLineage(r, ("white",)))
        x = path.initial_state()
        for g in path.increments():
            x = np.exp(-4 * math.pi ** 2 * np.arange(129) ** 2 * cfg.dt) * x + g
        vals.append(abs(x[1]) ** 2)
    vals = np.array(vals)
    target = path.amplitude[1] ** 2 / EIGHT_PI2
    assert within(vals.mean(), target, vals.std(ddof=1) / math.sqrt(vals.size))


def test_mode_trajectory_properties():
    t = np.linspace(0, 1, 5)
    traj = ModeTrajectory(t, np.ones((5, 3), complex))
    assert traj.cutoff == 2 and traj.dt == 0.25
