"""Exponential time stepping of the linear, Duhamel, remainder and full equations.

Every solver uses the first-order exponential integrator

    v_{n+1} = exp(-a dt) v_n + dt phi1(-a dt) N_n + G_n,   a = 4 pi^2 k^2,

with ``phi1(z) = (e^z - 1)/z``, the nonlinearity ``N_n`` taken at the left
point and ``G_n`` the additive noise term of the step. Quadratic products are
formed on a 3/2 zero-padded grid. Because every component uses the same scheme
and the same noise increments, ``h = X + Y + Z`` holds up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.fft as sfft

from .config import SimConfig
from .constants import c_squared
from .errors import Blowup, PositivityLoss, StepTooLarge
from .noise import ModeTrajectory, NoisePath, _phi1_dt, complex_normal, ou_variance
from .spectral import FOUR_PI2, grid_to_modes, modes_to_grid, padded_size

__all__ = [
    "SimConfig", "SolutionBundle", "Stepper", "solve_Y", "solve_Z", "solve_h",
    "solve_h_cole_hopf", "solve_coupled", "sample_limit_htilde", "cole_hopf_lambda",
    "deterministic_kpz",
]

POSITIVITY_FLOOR = 1e-300


class Stepper:
    """Precomputed multipliers for a fixed cutoff and step."""

    def __init__(self, K: int, dt: float, lam: float):
        self.K = K
        self.dt = dt
        self.lam = lam
        k = np.arange(K + 1, dtype=float)
        self.a = FOUR_PI2 * k * k
        self.decay = np.exp(-self.a * dt)
        self.phi1dt = _phi1_dt(self.a, dt)
        self.ik = 1j * k
        self.n_pad = padded_size(K)

    def grid(self, modes: np.ndarray) -> np.ndarray:
        return modes_to_grid(modes, self.n_pad)

    def dgrid(self, modes: np.ndarray) -> np.ndarray:
        """Point values of the derivative on the padded grid."""
        return modes_to_grid(modes * self.ik, self.n_pad)

    def modes(self, values: np.ndarray) -> np.ndarray:
        return grid_to_modes(values, self.K)

    def advance(self, v: np.ndarray, forcing: np.ndarray, noise=None) -> np.ndarray:
        out = self.decay * v + self.phi1dt * forcing
        if noise is not None:
            out = out + noise
        return out


@dataclass
class SolutionBundle:
    """Trajectories of a coupled run sampled at the recorded times.

    Attributes
    ----------
    X, Y, Z, h : ModeTrajectory or None
    h_limit : ModeTrajectory or None
    u_grid : ndarray or None
        Cole-Hopf variable at the recorded times, shape ``(n_rec, n_grid)``.
    diagnostics : dict
    """

    X: ModeTrajectory | None = None
    Y: ModeTrajectory | None = None
    Z: ModeTrajectory | None = None
    h: ModeTrajectory | None = None
    h_limit: ModeTrajectory | None = None
    u_grid: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def decomposition_defect(self) -> float:
        """``sup_{t,x} |h - X - Y - Z|`` over the recorded times."""
        diff = self.h.modes - self.X.modes - self.Y.modes - self.Z.modes
        K = diff.shape[-1] - 1
        return float(np.abs(modes_to_grid(diff, 4 * K + 4)).max())


def _meta(cfg: SimConfig, **extra) -> dict:
    return dict({"eps": cfg.eps, "gamma": cfg.gamma, "K": cfg.K}, **extra)


def _check_guard(modes: np.ndarray, cfg: SimConfig, name: str) -> None:
    bound = np.abs(modes[..., 0]) + 2.0 * np.abs(modes[..., 1:]).sum(axis=-1)
    if not np.all(np.isfinite(bound)) or np.any(bound > cfg.blowup_guard):
        raise Blowup(f"{name} exceeded the sup-norm guard {cfg.blowup_guard}")


# -- trajectory-based solvers ---------------------------------------------

def solve_Y(Xtraj: ModeTrajectory, cfg: SimConfig, *, zero_mode: str = "left",
            defect_tol: float | None = None) -> ModeTrajectory:
    """Duhamel term driven by ``eps^beta ((d_x X)^2 - C1)`` with ``Y(0) = 0``.

    Parameters
    ----------
    zero_mode : {"left", "trapezoid"}
        Quadrature of the undamped zero mode. ``"left"`` matches the other
        solvers step for step, which keeps the decomposition identity exact.
    defect_tol : float, optional
        Bound on the per-step difference between the first- and second-order
        exponential updates, relative to ``sup |Y|``.
    """
    st = Stepper(Xtraj.cutoff, Xtraj.dt, cfg.lam)
    C1 = cfg.C1
    dX = st.dgrid(Xtraj.modes)
    F = st.lam * st.modes(dX * dX)
    F[:, 0] -= st.lam * C1
    Y = np.zeros_like(Xtraj.modes)
    for n in range(len(Xtraj.times) - 1):
        Y[n + 1] = st.advance(Y[n], F[n])
        if zero_mode == "trapezoid":
            Y[n + 1, 0] = Y[n, 0] + 0.5 * st.dt * (F[n, 0] + F[n + 1, 0])
    if defect_tol is not None:
        _defect_check(st, F, Y, defect_tol)
    return ModeTrajectory(Xtraj.times, Y, _meta(cfg, field="Y"))


def _defect_check(st: Stepper, F: np.ndarray, Y: np.ndarray, tol: float) -> None:
    z = st.a * st.dt
    phi2 = np.full_like(z, 0.5)
    nz = z > 1e-8
    phi2[nz] = (np.expm1(-z[nz]) + z[nz]) / (z[nz] ** 2)
    defect = np.abs(st.dt * phi2 * np.diff(F, axis=0)).sum(axis=-1).max()
    scale = max(np.abs(Y).sum(axis=-1).max(), 1e-300)
    if defect > tol * scale:
        raise StepTooLarge(f"local defect {defect:.3e} above {tol:.1e} x {scale:.3e}")


def _z_forcing(st: Stepper, dZ, dX, dY, C2: float) -> np.ndarray:
    prod = dZ * dZ + 2.0 * dZ * (dX + dY) + 2.0 * dX * dY + dY * dY
    out = st.lam * st.modes(prod)
    out[..., 0] -= C2
    return out


def solve_Z(Xtraj: ModeTrajectory, Ytraj: ModeTrajectory, cfg: SimConfig) -> ModeTrajectory:
    """Remainder equation with ``Z(0) = psi`` and counterterm ``C2``."""
    st = Stepper(Xtraj.cutoff, Xtraj.dt, cfg.lam)
    dX = st.dgrid(Xtraj.modes)
    dY = st.dgrid(Ytraj.modes)
    Z = np.zeros_like(Xtraj.modes)
    Z[0] = cfg.psi_modes()
    C2 = cfg.C2
    for n in range(len(Xtraj.times) - 1):
        forcing = _z_forcing(st, st.dgrid(Z[n]), dX[n], dY[n], C2)
        Z[n + 1] = st.advance(Z[n], forcing)
        _check_guard(Z[n + 1], cfg, "Z")
    return ModeTrajectory(Xtraj.times, Z, _meta(cfg, field="Z"))


def solve_h(noise: NoisePath, cfg: SimConfig) -> ModeTrajectory:
    """Full equation with ``h(0) = zeta + psi`` on the given noise path."""
    bundle = solve_coupled(noise, cfg, components=("h",))
    return bundle.h


def cole_hopf_lambda(cfg: SimConfig) -> float:
    """Exponent ``lam'`` with ``u = exp(lam' h)`` solving a linear equation.

    The nonlinearity ``lam (i k h)^2`` equals ``lam/(4 pi^2) (d_x h)^2`` in
    terms of the true derivative, hence ``lam' = lam / (4 pi^2)``.
    """
    return cfg.lam / FOUR_PI2


def solve_h_cole_hopf(noise: NoisePath, cfg: SimConfig, grid_size: int | None = None,
                      record_every: int = 1) -> tuple[np.ndarray, np.ndarray, dict]:
    """Full equation through the Cole-Hopf variable.

    Returns
    -------
    times : ndarray
    h_grid : ndarray
        ``log(u)/lam'`` at the recorded times on a grid of ``grid_size`` points.
    diagnostics : dict
        Includes ``min_u``, the smallest value of ``u`` over all steps.
    """
    bundle = solve_coupled(noise, cfg, components=("u",), record_every=record_every,
                           cole_hopf_grid=grid_size)
    return bundle.diagnostics["times"], bundle.diagnostics["h_cole_hopf"], bundle.diagnostics


def deterministic_kpz(psi_modes: np.ndarray, lam: float, times, n_grid: int) -> np.ndarray:
    """Noise-free solution of ``d_t h = Lap h + lam (i k h)^2`` from ``psi``.

    Evaluated exactly through the heat flow of ``exp(lam' psi)`` on a grid of
    ``n_grid`` points; returns values of shape ``(len(times), n_grid)``.
    """
    lam_ch = lam / FOUR_PI2
    u0 = np.exp(lam_ch * modes_to_grid(np.asarray(psi_modes, dtype=complex), n_grid))
    u0_hat = sfft.rfft(u0)
    k = np.arange(u0_hat.size, dtype=float)
    heat = np.exp(-FOUR_PI2 * np.outer(np.asarray(times, dtype=float), k * k))
    return np.log(sfft.irfft(heat * u0_hat, n=n_grid, axis=-1)) / lam_ch


# -- coupled streaming solver ----------------------------------------------

def solve_coupled(noise: NoisePath, cfg: SimConfig, components: Iterable[str] = ("X", "Y", "Z", "h"),
                  record_every: int = 1, cole_hopf_grid: int | None = None,
                  callback=None) -> SolutionBundle:
    """March the requested components together on one noise path.

    Parameters
    ----------
    components : iterable of {"X", "Y", "Z", "h", "u"}
        ``"u"`` is the Cole-Hopf variable; the others are mode fields.
    record_every : int
        Store every ``record_every``-th step (the final step is always kept).
    callback : callable, optional
        Called as ``callback(n, t, state)`` after each recorded step with a
        dict of the current modes.
    """
    comps = set(components)
    need_y = bool(comps & {"Y", "Z"})
    need_z = "Z" in comps
    need_h = "h" in comps
    need_u = "u" in comps
    if need_u and cfg.noise_kind != "mollified":
        raise ValueError("the Cole-Hopf solver needs the mollified noise path")
    K = cfg.K
    st = Stepper(K, cfg.dt, cfg.lam)
    C1, C2, C = cfg.C1, cfg.C2, cfg.C
    psi = cfg.psi_modes()

    increments = noise.increments()
    X = noise.initial_state()
    for _ in range(noise.n_burn * cfg.substeps):
        X = st.decay * X + next(increments)

    Y = np.zeros(K + 1, dtype=complex)
    Z = psi.copy()
    h = X + psi

    if need_u:
        lam_ch = cole_hopf_lambda(cfg)
        n_ch = cole_hopf_grid or sfft.next_fast_len(4 * K + 4, real=True)
        k_ch = np.arange(n_ch // 2 + 1, dtype=float)
        heat_ch = np.exp(-FOUR_PI2 * k_ch * k_ch * cfg.dt)
        u = np.exp(lam_ch * modes_to_grid(h, n_ch))
        rates = noise.rates()
        for _ in range(noise.n_burn):
            next(rates)
        min_u = float(u.min())

    n_total = cfg.n_steps
    rec_idx = list(range(0, n_total + 1, record_every))
    if rec_idx[-1] != n_total:
        rec_idx.append(n_total)
    rec_set = set(rec_idx)
    store = {c: [] for c in ("X", "Y", "Z", "h") if c in comps}
    u_store, sup_store = [], []

    def record(n):
        state = {"X": X, "Y": Y, "Z": Z, "h": h}
        for c in store:
            store[c].append(state[c].copy())
        if need_u:
            u_store.append(u.copy())
        if need_z:
            sup_store.append(float(np.abs(modes_to_grid(Z, 4 * K + 4)).max()))
        if callback is not None:
            callback(n, n * cfg.dt, state)

    record(0)
    for n in range(n_total):
        g = next(increments)
        if need_y or need_h:
            dX = st.dgrid(X)
        if need_y:
            dY = st.dgrid(Y)
            F = st.lam * st.modes(dX * dX)
            F[0] -= st.lam * C1
        if need_z:
            GZ = _z_forcing(st, st.dgrid(Z), dX, dY, C2)
        if need_h:
            dh = st.dgrid(h)
            H = st.lam * st.modes(dh * dh)
            H[0] -= C
        if need_u:
            if n % cfg.substeps == 0:
                rate = next(rates)
                pot = np.exp(0.5 * lam_ch * cfg.dt * (modes_to_grid(rate, n_ch) - C))
            u = u * pot
            u = sfft.irfft(sfft.rfft(u) * heat_ch, n=n_ch)
            u = u * pot
            m = float(u.min())
            min_u = min(min_u, m)
            if not m > POSITIVITY_FLOOR:
                raise PositivityLoss(f"Cole-Hopf variable reached {m:.3e} at step {n + 1}")

        X = st.decay * X + g
        if need_y:
            Y = st.advance(Y, F)
        if need_z:
            Z = st.advance(Z, GZ)
            _check_guard(Z, cfg, "Z")
        if need_h:
            h = st.advance(h, H, g)
            _check_guard(h, cfg, "h")
        if n + 1 in rec_set:
            record(n + 1)

    times = cfg.dt * np.array(rec_idx, dtype=float)
    meta = _meta(cfg)
    bundle = SolutionBundle(diagnostics={"times": times})
    for c, rows in store.items():
        setattr(bundle, c, ModeTrajectory(times, np.array(rows), dict(meta, field=c)))
    if need_z:
        bundle.diagnostics["sup_Z"] = np.array(sup_store)
    if need_u:
        u_arr = np.array(u_store)
        bundle.u_grid = u_arr
        bundle.diagnostics["min_u"] = min_u
        bundle.diagnostics["h_cole_hopf"] = np.log(u_arr) / lam_ch
        bundle.diagnostics["cole_hopf_grid"] = n_ch
    return bundle


# -- limit process ---------------------------------------------------------

def sample_limit_htilde(cfg: SimConfig, rng: np.random.Generator, *, include_xi: bool = True,
                        include_xi_tilde: bool = True, components: bool = False):
    """Exact Gaussian sample of the limit field on ``cfg.times``.

    The limit solves the heat equation driven by ``c xi_tilde + D^gamma xi``
    with ``xi_tilde`` an independent white noise, started from the
    stationary datum of the unmollified linear equation plus ``psi``.

    Parameters
    ----------
    include_xi, include_xi_tilde : bool
        Switch off either noise; the stationary initial datum is always drawn.
    components : bool
        Also return the three parts ``X0``, ``heat_psi`` and ``Y0``.
    """
    K = cfg.K
    times = cfg.times
    k = np.arange(1, K + 1, dtype=float)
    amp = k ** cfg.gamma
    decay = np.exp(-FOUR_PI2 * k * k * cfg.dt)
    c = math.sqrt(c_squared(cfg.gamma))
    n_t = len(times)
    X0 = np.zeros((n_t, K + 1), dtype=complex)
    Y0 = np.zeros((n_t, K + 1), dtype=complex)
    state = complex_normal(rng, K, ou_variance(k))
    X0[0, 1:] = state
    step_var = ou_variance(k, cfg.dt)
    ystate = np.zeros(K, dtype=complex)
    yzero = 0.0
    for n in range(1, n_t):
        state = decay * state
        if include_xi:
            state = state + complex_normal(rng, K, step_var)
        X0[n, 1:] = state
        if include_xi_tilde:
            ystate = decay * ystate + complex_normal(rng, K, step_var)
            yzero = yzero + math.sqrt(cfg.dt) * rng.standard_normal()
        Y0[n, 1:] = ystate
        Y0[n, 0] = yzero
    X0[:, 1:] *= amp
    Y0 *= c
    heat = np.exp(-FOUR_PI2 * np.outer(times, np.arange(K + 1, dtype=float) ** 2)) * cfg.psi_modes()
    total = ModeTrajectory(times, X0 + heat + Y0, _meta(cfg, field="h_limit"))
    if components:
        return total, {"X0": X0, "heat_psi": heat, "Y0": Y0}
    return total
