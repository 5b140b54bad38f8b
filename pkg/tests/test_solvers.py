import math

import numpy as np
import pytest

from roughkpz.config import SimConfig
from roughkpz.constants import c_squared
from roughkpz.errors import Blowup, PositivityLoss, StepTooLarge
from roughkpz.noise import ModeTrajectory, NoisePath, SeedLineage
from roughkpz.solvers import (cole_hopf_lambda, deterministic_kpz, sample_limit_htilde,
                              solve_coupled, solve_h, solve_h_cole_hopf, solve_Y, solve_Z)
from roughkpz.spectral import modes_to_grid

from oracle_values import LIMIT_MODE1_VARIANCE_T1

FOUR_PI2 = 4 * math.pi ** 2


def cfg_of(**kw):
    base = dict(gamma=0.5, eps=0.25, K=16, T=0.05, dt=1e-3, strict_cutoff=False, c1=0.0)
    base.update(kw)
    return SimConfig(**base)


def frozen(cfg, modes):
    m = np.zeros((cfg.n_steps + 1, cfg.K + 1), dtype=complex)
    for k, v in modes.items():
        m[:, k] = v
    return ModeTrajectory(cfg.times, m, {"eps": cfg.eps, "gamma": cfg.gamma, "K": cfg.K})


# -- Duhamel term ------------------------------------------------------------------

def test_Y_vanishes_without_forcing():
    cfg = cfg_of()
    Y = solve_Y(frozen(cfg, {}), cfg)
    assert not np.any(Y.modes)


def test_Y_frozen_cosine_closed_form():
    # X = cos(2 pi x): the ik derivative squared is 1/2 - cos(4 pi x)/2
    cfg = cfg_of(c1=0.3)
    Y = solve_Y(frozen(cfg, {1: 0.5}), cfg)
    lam, t = cfg.lam, cfg.times
    a = FOUR_PI2 * 4
    np.testing.assert_allclose(Y.modes[:, 0].real, lam * (0.5 - 0.3) * t, atol=1e-12)
    np.testing.assert_allclose(Y.modes[:, 2], -lam / 4 * (-np.expm1(-a * t)) / a, atol=1e-12)
    others = np.delete(Y.modes, [0, 2], axis=1)
    assert np.abs(others).max() < 1e-14


def test_Y_trapezoid_zero_mode_agrees_on_constant_forcing():
    cfg = cfg_of(c1=0.3)
    left = solve_Y(frozen(cfg, {1: 0.5}), cfg)
    trap = solve_Y(frozen(cfg, {1: 0.5}), cfg, zero_mode="trapezoid")
    np.testing.assert_allclose(left.modes, trap.modes, atol=1e-14)


def test_Y_defect_check():
    cfg = cfg_of(dt=0.01)
    X = frozen(cfg, {3: 0.5})
    X.modes[:, 3] *= np.exp(-300 * cfg.times)
    with pytest.raises(StepTooLarge):
        solve_Y(X, cfg, defect_tol=1e-6)
    solve_Y(X, cfg, defect_tol=10.0)


# -- remainder --------------------------------------------------------------------

def test_Z_vanishes_with_no_data():
    cfg = cfg_of()
    Z = solve_Z(frozen(cfg, {}), frozen(cfg, {}), cfg)
    assert not np.any(Z.modes)


def errors_vs_deterministic(dt):
    cfg = cfg_of(dt=dt, psi={1: 0.5, 2: 0.2j})
    Z = solve_Z(frozen(cfg, {}), frozen(cfg, {}), cfg)
    ref = deterministic_kpz(cfg.psi_modes(), cfg.lam, cfg.times, 256)
    return np.abs(modes_to_grid(Z.modes, 256) - ref).max()


def test_noise_free_Z_matches_cole_hopf_solution():
    e1, e2 = errors_vs_deterministic(5e-5), errors_vs_deterministic(2.5e-5)
    assert e2 < 1e-5
    assert e1 / e2 == pytest.approx(2.0, rel=0.2)


def test_Z_counterterm_drift():
    cfg = cfg_of(c2=0.7)
    Z = solve_Z(frozen(cfg, {}), frozen(cfg, {}), cfg)
    np.testing.assert_allclose(Z.modes[:, 0].real, -0.7 * cfg.times, atol=1e-13)


def test_Z_blowup_guard():
    cfg = cfg_of(psi={1: 2.0}, blowup_guard=1.0)
    with pytest.raises(Blowup):
        solve_Z(frozen(cfg, {}), frozen(cfg, {}), cfg)


# -- full equation -------------------------------------------------------------------

def test_constant_datum_drifts_by_counterterm():
    cfg = cfg_of(psi={0: 2.0}, c1="exact", K=128, eps=0.5, dt=1e-3)
    h = solve_h(NoisePath(cfg, SeedLineage(0), zero=True), cfg)
    np.testing.assert_allclose(h.modes[:, 0].real, 2.0 - cfg.C * cfg.times, atol=1e-12)
    assert np.abs(h.modes[:, 1:]).max() == 0.0


def test_zero_noise_cole_hopf_agrees():
    cfg = cfg_of(psi={1: 0.5, 2: 0.2j}, dt=1e-4)
    times, hg, diag = solve_h_cole_hopf(NoisePath(cfg, SeedLineage(0), zero=True), cfg, grid_size=128)
    ref = deterministic_kpz(cfg.psi_modes(), cfg.lam, times, 128)
    assert np.abs(hg - ref).max() < 1e-10
    assert diag["min_u"] > 0
    assert cole_hopf_lambda(cfg) == pytest.approx(cfg.lam / FOUR_PI2)


def test_cole_hopf_requires_mollified_noise():
    cfg = cfg_of(noise_kind="white")
    with pytest.raises(ValueError):
        solve_h_cole_hopf(NoisePath(cfg, SeedLineage(0)), cfg)


def test_positivity_loss_reported():
    cfg = cfg_of(eps=1.0, psi={0: -3.0e4})
    with pytest.raises(PositivityLoss):
        solve_h_cole_hopf(NoisePath(cfg, SeedLineage(0), zero=True), cfg)


def small_random_cfg(**kw):
    base = dict(gamma=0.5, eps=0.5, K=128, T=0.01, dt=1e-4, noise_dt=1e-3, psi={1: 1.0, 2: 0.5j})
    base.update(kw)
    return SimConfig(**base)


def test_decomposition_identity():
    cfg = small_random_cfg()
    bundle = solve_coupled(NoisePath(cfg, SeedLineage(4, ("dec",))), cfg)
    assert bundle.decomposition_defect() < 1e-10
    np.testing.assert_array_equal(bundle.h.modes[0], bundle.X.modes[0] + cfg.psi_modes())
    assert bundle.diagnostics["sup_Z"].shape == (cfg.n_steps + 1,)


def test_solvers_share_the_noise_path():
    cfg = small_random_cfg()
    path = NoisePath(cfg, SeedLineage(4, ("dec",)))
    alone = solve_h(path, cfg)
    joint = solve_coupled(path, cfg).h
    np.testing.assert_array_equal(alone.modes, joint.modes)


def test_random_cole_hopf_close_and_positive():
    cfg = small_random_cfg()
    path = NoisePath(cfg, SeedLineage(5))
    h = solve_h(path, cfg)
    times, hg, diag = solve_h_cole_hopf(path, cfg, grid_size=512)
    assert diag["min_u"] > 0
    gap = np.abs(modes_to_grid(h.modes, 512) - hg).max()
    assert gap < 0.05 * np.abs(hg).max()


def test_record_every_keeps_final_step():
    cfg = small_random_cfg()
    bundle = solve_coupled(NoisePath(cfg, SeedLineage(1)), cfg, components=("h",), record_every=30)
    np.testing.assert_allclose(bundle.diagnostics["times"], [0.0, 3e-3, 6e-3, 9e-3, 1e-2])


# -- limit field ---------------------------------------------------------------------

def test_limit_starts_at_stationary_datum_plus_psi():
    cfg = cfg_of(psi={1: 0.3}, T=0.5, dt=0.25, noise_kind="white")
    total, parts = sample_limit_htilde(cfg, np.random.default_rng(0), components=True)
    np.testing.assert_allclose(total.modes[0], parts["X0"][0] + cfg.psi_modes())
    assert not np.any(parts["Y0"][0])


def test_limit_without_noise_is_deterministic_part():
    cfg = cfg_of(T=0.5, dt=0.25, noise_kind="white")
    _, parts = sample_limit_htilde(cfg, np.random.default_rng(0), include_xi=False,
                                   include_xi_tilde=False, components=True)
    assert not np.any(parts["Y0"])
    decay = np.exp(-FOUR_PI2 * np.arange(17) ** 2 * 0.25)
    np.testing.assert_allclose(parts["X0"][1], decay * parts["X0"][0], atol=1e-15)


def test_limit_variances():
    cfg = cfg_of(T=1.0, dt=0.25, K=4, noise_kind="white")
    rng = np.random.default_rng(7)
    R = 20000
    zero = np.empty(R)
    one = np.empty(R)
    for r in range(R):
        h = sample_limit_htilde(cfg, rng).modes[-1]
        zero[r] = h[0].real ** 2
        one[r] = abs(h[1]) ** 2
    for vals, target in ((zero, c_squared(0.5) * 1.0), (one, LIMIT_MODE1_VARIANCE_T1)):
        assert abs(vals.mean() - target) <= 3 * vals.std(ddof=1) / math.sqrt(R)
