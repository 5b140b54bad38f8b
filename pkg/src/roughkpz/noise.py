"""Random fields: Brownian mode drivers, stationary OU modes and grid noise.

Mode ``k`` of the linear solution is ``|k|^gamma rho_hat(eps k) I_k`` where
``I_k`` is a complex Ornstein-Uhlenbeck process with rate ``4 pi^2 k^2``,
driven by a standard complex Brownian motion (``E|W_t|^2 = t``) and with
stationary variance ``1/(8 pi^2 k^2)``.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .config import SimConfig
from .constants import TestFunction, beta
from .errors import CutoffTooSmall, InvalidDuration, TestFunctionTooWide
from .mollifier import MollifierTable, default_table
from .spectral import FOUR_PI2, d_gamma_symbol

EIGHT_PI2 = 2.0 * FOUR_PI2


# -- seeding --------------------------------------------------------------

def _key_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("lineage keys must be nonnegative")
        return int(part)
    return zlib.crc32(str(part).encode())


@dataclass(frozen=True)
class SeedLineage:
    """Master seed plus a path of keys naming one independent stream.

    The path typically reads ``(study id, eps index, replica block, role)``.
    Strings are hashed with CRC32 so the mapping is platform independent.
    """

    master_seed: int
    path: tuple = ()

    def child(self, *keys) -> "SeedLineage":
        return SeedLineage(self.master_seed, self.path + tuple(keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed) % 2 ** 64,
                                    spawn_key=tuple(_key_int(p) for p in self.path))
        return np.random.Generator(np.random.Philox(ss))

    def to_list(self) -> list:
        return [int(self.master_seed)] + [p if isinstance(p, str) else int(p) for p in self.path]


def complex_normal(rng: np.random.Generator, shape, var=1.0) -> np.ndarray:
    """Circular complex Gaussian with ``E|z|^2 = var``."""
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)) if shape != () else (2,))
    return (z[0] + 1j * z[1]) * np.sqrt(np.asarray(var) / 2.0)


# -- trajectories ---------------------------------------------------------

@dataclass
class ModeTrajectory:
    """Fourier modes ``0..K`` of a real field on a uniform time grid.

    Attributes
    ----------
    times : ndarray, shape (N+1,)
    modes : ndarray, shape (N+1, K+1)
    meta : dict
        At least ``eps``, ``gamma`` and ``K``.
    """

    times: np.ndarray
    modes: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def cutoff(self) -> int:
        return self.modes.shape[-1] - 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def derivative(self) -> "ModeTrajectory":
        k = np.arange(self.cutoff + 1)
        return ModeTrajectory(self.times, self.modes * (1j * k), dict(self.meta, derivative=True))


def ou_variance(k, dt=math.inf):
    """Variance of the OU transition noise over ``dt`` (stationary if infinite)."""
    k = np.asarray(k, dtype=float)
    rate = EIGHT_PI2 * k * k
    if np.isinf(dt):
        return 1.0 / rate
    return -np.expm1(-rate * dt) / rate


def ou_stationary_draw(k: int, eps: float, gamma: float, rng: np.random.Generator) -> complex:
    """Stationary draw of ``int_{-inf}^t exp(-4 pi^2 k^2 (t-s)) dW^k_s``.

    The draw for ``-k`` is the conjugate of the draw for ``k`` from the same
    generator state. The prefactor ``i k |k|^gamma rho_hat(eps k)`` is not
    included.
    """
    if k == 0:
        raise ValueError("mode 0 has no OU structure")
    if not eps > 0:
        raise ValueError("eps must be positive")
    beta(gamma)
    z = complex(complex_normal(rng, (), ou_variance(abs(k))))
    return z.conjugate() if k < 0 else z


def ou_step(x, k, dt: float, rng: np.random.Generator):
    """Exact OU transition over ``dt`` for modes ``k`` (all nonzero)."""
    if not dt > 0:
        raise InvalidDuration(f"step must be positive, got {dt}")
    k = np.asarray(k)
    if np.any(k == 0):
        raise ValueError("mode 0 has no OU structure")
    decay = np.exp(-FOUR_PI2 * k.astype(float) ** 2 * dt)
    x = np.asarray(x, dtype=complex)
    eta = complex_normal(rng, np.shape(x), ou_variance(np.abs(k), dt))
    out = decay * x + eta
    return complex(out) if np.ndim(out) == 0 else out


def mode_amplitudes(eps: float, gamma: float, K: int, table: MollifierTable | None = None) -> np.ndarray:
    """``|k|^gamma rho_hat(eps k)`` for ``k = 0..K`` (zero at ``k = 0``)."""
    table = table or default_table()
    return d_gamma_symbol(K, gamma) * table.scaled_rho_hat(eps, np.arange(K + 1, dtype=float))


def sample_X_trajectory(cfg: SimConfig, rng: np.random.Generator,
                        table: MollifierTable | None = None) -> tuple[ModeTrajectory, ModeTrajectory]:
    """Stationary linear solution with space-only mollification.

    Returns
    -------
    X, dX : ModeTrajectory
        The field and its derivative on ``cfg.times``.
    """
    if cfg.strict_cutoff and cfg.K < _cutoff_needed(cfg):
        raise CutoffTooSmall("mode cutoff below the decay threshold")
    K = cfg.K
    k = np.arange(1, K + 1)
    amp = mode_amplitudes(cfg.eps, cfg.gamma, K, table)[1:]
    decay = np.exp(-FOUR_PI2 * k.astype(float) ** 2 * cfg.dt)
    sd = np.sqrt(ou_variance(k, cfg.dt) / 2.0)
    out = np.zeros((cfg.n_steps + 1, K + 1), dtype=complex)
    state = complex_normal(rng, K, ou_variance(k))
    out[0, 1:] = state
    for n in range(1, cfg.n_steps + 1):
        z = rng.standard_normal((2, K))
        state = decay * state + (z[0] + 1j * z[1]) * sd
        out[n, 1:] = state
    out[:, 1:] *= amp
    meta = {"eps": cfg.eps, "gamma": cfg.gamma, "K": K}
    X = ModeTrajectory(cfg.times, out, meta)
    return X, X.derivative()


def _cutoff_needed(cfg: SimConfig) -> int:
    from .constants import c1_cutoff
    return c1_cutoff(cfg.gamma, cfg.eps, cfg.cutoff_tol)


# -- tested quadratic noise -----------------------------------------------

def square_mode(psi_modes: np.ndarray, k: int) -> np.ndarray:
    """Mode ``k >= 0`` of the square of a real field given by modes ``0..K``.

    Only pairs with both members in ``1..K`` are summed; the zero mode of
    ``psi_modes`` is ignored.
    """
    K = psi_modes.shape[-1] - 1
    low = psi_modes[..., 1:K + 1 - k] if k < K else psi_modes[..., :0]
    high = psi_modes[..., 1 + k:K + 1]
    total = 2.0 * np.sum(high * np.conj(low), axis=-1)
    if k >= 2:
        total = total + np.sum(psi_modes[..., 1:k] * psi_modes[..., k - 1:0:-1], axis=-1)
    return total


def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def tested_xi_tilde(traj: ModeTrajectory, phi: TestFunction, C1: float,
                    table: MollifierTable | None = None) -> float:
    """``eps^beta int int ((d_x X)^2 - C1) phi^eps dx dt`` on a stored trajectory.

    ``traj`` holds the modes of ``X`` (not its derivative). The time integral
    uses the trapezoid rule on ``traj.times`` against the profile mollified at
    scale ``eps^2``; the profile support must lie inside the time grid.
    """
    eps, gamma = traj.meta["eps"], traj.meta["gamma"]
    if phi.is_zero:
        return 0.0
    if 2 * phi.bandwidth > traj.cutoff:
        raise TestFunctionTooWide(f"bandwidth {phi.bandwidth} too wide for cutoff {traj.cutoff}")
    lo, hi = phi.time_window(eps * eps)
    if lo < traj.times[0] - 1e-12 or hi > traj.times[-1] + 1e-12:
        raise ValueError("test function support exceeds the trajectory time grid")
    dpsi = traj.modes * (1j * np.arange(traj.cutoff + 1))
    w = _trapezoid_weights(len(traj.times), traj.dt)
    total = 0.0
    for k, (amp, prof) in phi.modes.items():
        p = prof.mollified(traj.times, eps * eps, table) * w
        F = square_mode(dpsi, k)
        if k == 0:
            total += amp.real * float(np.sum(p * (F.real - C1)))
        else:
            total += 2.0 * float(np.real(np.conj(amp) * np.sum(p * F)))
    return eps ** beta(gamma) * total


# -- grid noise for the solvers ---------------------------------------------

class NoisePath:
    """Replayable space-time noise on the solver grid.

    Two kinds are supported. ``"mollified"`` draws grid white noise on steps
    of ``cfg.noise_dt``, convolves it in time with the bump at scale
    ``eps^2`` and holds the result constant over each noise step.
    ``"white"`` uses exact OU increments on each solver step.

    The path starts ``cfg.burn_in_time`` before time 0 from a stationary
    draw of the linear solution, so ``X(0)`` realizes the stationary initial
    condition. Every iteration replays identical numbers.
    """

    def __init__(self, cfg: SimConfig, lineage: SeedLineage, table: MollifierTable | None = None,
                 zero: bool = False):
        self.cfg = cfg
        self.lineage = lineage
        self.table = table or default_table()
        self.zero = zero
        K = cfg.K
        self.amplitude = mode_amplitudes(cfg.eps, cfg.gamma, K, self.table)
        self.k = np.arange(K + 1, dtype=float)
        self.n_burn = int(round(self.cfg.burn_in_time / cfg.noise_dt))
        self.n_noise = int(round(cfg.T / cfg.noise_dt))
        if cfg.noise_kind == "mollified":
            s = cfg.eps ** 2
            J = int(math.floor(s / (4.0 * cfg.noise_dt)))
            j = np.arange(-J, J + 1)
            w = self.table.bump(j * cfg.noise_dt / s)
            keep = w > 0
            self.taps = w[keep] / w[keep].sum()
            self.tap_offsets = j[keep]
        else:
            self.taps = np.ones(1)
            self.tap_offsets = np.zeros(1, dtype=int)

    @property
    def start_time(self) -> float:
        return -self.n_burn * self.cfg.noise_dt

    def initial_state(self) -> np.ndarray:
        """Stationary draw of the linear solution at the start of the burn-in."""
        if self.zero:
            return np.zeros(self.cfg.K + 1, dtype=complex)
        rng = self.lineage.child("init").generator()
        out = np.zeros(self.cfg.K + 1, dtype=complex)
        out[1:] = complex_normal(rng, self.cfg.K, ou_variance(self.k[1:]))
        return out * self.amplitude

    def rates(self) -> Iterator[np.ndarray]:
        """Mollified noise ``D^gamma xi^eps`` per noise step, from the burn-in start."""
        if self.cfg.noise_kind != "mollified":
            raise ValueError("rates are only defined for mollified noise")
        K = self.cfg.K
        total = self.n_burn + self.n_noise
        if self.zero:
            for _ in range(total):
                yield np.zeros(K + 1, dtype=complex)
            return
        rng = self.lineage.child("white").generator()
        lo, hi = int(self.tap_offsets.min()), int(self.tap_offsets.max())
        width = hi - lo + 1
        scale = np.sqrt(0.5 / self.cfg.noise_dt) * self.amplitude
        buf = np.zeros((width, K + 1), dtype=complex)

        def draw():
            z = rng.standard_normal((2, K + 1))
            return (z[0] + 1j * z[1]) * scale

        # buffer row i holds white noise of step (n - hi + i)
        for i in range(width):
            buf[i] = draw()
        weights = np.zeros(width)
        weights[hi - self.tap_offsets] = self.taps
        for _ in range(total):
            yield weights @ buf
            buf = np.roll(buf, -1, axis=0)
            buf[-1] = draw()

    def increments(self) -> Iterator[np.ndarray]:
        """Additive term of the exact linear step, per solver step, from the burn-in start."""
        cfg = self.cfg
        dt = cfg.dt
        a = FOUR_PI2 * self.k ** 2
        if cfg.noise_kind == "mollified":
            phi1dt = _phi1_dt(a, dt)
            for f in self.rates():
                g = phi1dt * f
                for _ in range(cfg.substeps):
                    yield g
            return
        total = (self.n_burn + self.n_noise) * cfg.substeps
        if self.zero:
            for _ in range(total):
                yield np.zeros(cfg.K + 1, dtype=complex)
            return
        rng = self.lineage.child("white").generator()
        sd = np.zeros(cfg.K + 1)
        sd[1:] = np.sqrt(ou_variance(self.k[1:], dt) / 2.0)
        sd *= self.amplitude
        for _ in range(total):
            z = rng.standard_normal((2, cfg.K + 1))
            yield (z[0] + 1j * z[1]) * sd


def _phi1_dt(a: np.ndarray, dt: float) -> np.ndarray:
    """``dt * phi1(-a dt)`` with ``phi1(z) = (e^z - 1)/z``."""
    z = a * dt
    out = np.full_like(z, dt)
    nz = z > 0
    out[nz] = -np.expm1(-z[nz]) / a[nz]
    return out
