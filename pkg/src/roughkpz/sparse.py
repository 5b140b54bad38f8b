"""Mode-sparse Monte Carlo sampler for tested first and second chaos noise.

Only the OU modes ``I_1..I_L`` are simulated, on a single uniform grid with
exact transitions. Each requested output mode ``k`` of the square
``(d_x X^eps)^2`` is assembled from pairs ``l + m = k`` and integrated in
time against its probe profile.

Modes are sampled at cell midpoints and integrated with the midpoint rule,
so every cell carries its full weight. Grid products decorrelate within one
step for fast pairs. Riemann sums of such products have the variance of a
sampled process rather than of the time integral, so each pair is rescaled by ``sqrt(2 tanh(x/2) / x)`` with
``x = (a_l + a_m) dt``. That factor makes the discrete variance exact for
slowly varying weights and tends to 1 as ``x -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import TestFunction, TimeProfile, beta, quartic_cutoff
from .errors import InvalidDuration, TestFunctionTooWide
from .mollifier import MollifierTable, default_table
from .noise import EIGHT_PI2, ou_variance
from .spectral import FOUR_PI2


@dataclass(frozen=True)
class QuadraticProbe:
    """``eps^beta int p(t) [(d_x X)^2]^(k) (t) dt`` minus its mean for ``k = 0``."""

    k: int
    profile: TimeProfile
    mollify: bool = True


@dataclass(frozen=True)
class LinearProbe:
    """``rho_hat(eps k) int p(t) dW^k_t`` for ``k >= 0``."""

    k: int
    profile: TimeProfile
    mollify: bool = True


def variance_correction(x: np.ndarray) -> np.ndarray:
    """``sqrt(2 tanh(x/2) / x)`` with value 1 at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x > 1e-8
    out[nz] = np.sqrt(2.0 * np.tanh(0.5 * x[nz]) / x[nz])
    return out


def probes_for(phi: TestFunction, mollify: bool = True) -> list[QuadraticProbe]:
    return [QuadraticProbe(k, prof, mollify) for k, (_, prof) in phi.modes.items()]


def linear_probes_for(psi: TestFunction, mollify: bool = True) -> list[LinearProbe]:
    return [LinearProbe(k, prof, mollify) for k, (_, prof) in psi.modes.items()]


def combine(values: np.ndarray, fn: TestFunction) -> np.ndarray:
    """Real pairing of per-mode probe values with a test function.

    ``values[..., i]`` must correspond to ``fn.modes`` in key order.
    """
    out = np.zeros(values.shape[:-1])
    for i, (k, (amp, _)) in enumerate(fn.modes.items()):
        if k == 0:
            out += amp.real * values[..., i].real
        else:
            out += 2.0 * np.real(np.conj(amp) * values[..., i])
    return out


class SparseChaosSampler:
    """Sampler for probes of the first and second chaos.

    Parameters
    ----------
    eps, gamma : float
    quadratic : sequence of QuadraticProbe
    linear : sequence of LinearProbe
    L : int, optional
        Highest simulated mode. Defaults to the cutoff leaving a relative
        variance tail below ``tail_tol`` plus the largest probe mode.
    dt : float, optional
        Target grid step; the grid is refined so that the step divides the
        probe window. Defaults to the smaller of ``1/(16 pi^2)`` and
        ``window/64``.
    tail_tol : float
        Relative tail tolerance used when ``L`` is not given.
    """

    def __init__(self, eps: float, gamma: float, quadratic: Sequence[QuadraticProbe],
                 linear: Sequence[LinearProbe] = (), *, L: int | None = None,
                 dt: float | None = None, tail_tol: float = 1e-6,
                 table: MollifierTable | None = None):
        self.eps = float(eps)
        self.gamma = float(gamma)
        self.beta = beta(gamma)
        self.quadratic = list(quadratic)
        self.linear = list(linear)
        self.table = table or default_table()
        kmax = max([p.k for p in self.quadratic + self.linear], default=0)
        if any(p.k < 0 for p in self.quadratic + self.linear):
            raise ValueError("probe modes must be nonnegative")
        self.L = int(L) if L is not None else quartic_cutoff(gamma, eps, tail_tol) + kmax
        if 2 * kmax > self.L:
            raise TestFunctionTooWide(f"probe mode {kmax} too wide for cutoff {self.L}")
        scale = self.eps ** 2
        windows = [p.profile.mollified_support(scale) if p.mollify else p.profile.support()
                   for p in self.quadratic + self.linear]
        if not windows:
            raise ValueError("at least one probe is required")
        self.t0 = min(w[0] for w in windows)
        t1 = max(w[1] for w in windows)
        span = t1 - self.t0
        target = dt if dt is not None else min(1.0 / (16.0 * math.pi ** 2), span / 64.0)
        if not target > 0:
            raise InvalidDuration("grid step must be positive")
        self.n_steps = max(1, int(math.ceil(span / target - 1e-9)))
        self.dt = span / self.n_steps
        self.times = self.t0 + self.dt * (np.arange(self.n_steps) + 0.5)
        self._setup_modes()
        self._setup_weights()
        self._setup_pairs()

    # -- construction -----------------------------------------------------

    def _setup_modes(self):
        ell = np.arange(1, self.L + 1, dtype=float)
        self.rate = FOUR_PI2 * ell ** 2
        self.coef = 1j * ell * ell ** self.gamma * self.table.scaled_rho_hat(self.eps, ell)
        self.var = ou_variance(ell)
        self.decay = np.exp(-self.rate * self.dt)
        self.step_var = ou_variance(ell, self.dt)

    def _profile_values(self, probe, t):
        if probe.mollify:
            return probe.profile.mollified(t, self.eps ** 2, self.table)
        return probe.profile(t)

    def _setup_weights(self):
        self.qweights = np.array([self._profile_values(p, self.times) * self.dt
                                  for p in self.quadratic])
        mids = self.times[:-1] + 0.5 * self.dt
        self.lweights = np.array([self._profile_values(p, mids)
                                  * self.table.scaled_rho_hat(self.eps, p.k) for p in self.linear])
        self.linear_modes = sorted({p.k for p in self.linear if p.k > 0})
        self.zero_linear_sd = [
            math.sqrt((p.profile.mollified_l2_squared(self.eps ** 2, self.table) if p.mollify
                       else p.profile.l2_squared()))
            for p in self.linear if p.k == 0]

    def _setup_pairs(self):
        """Per output mode, coefficients of the products of simulated modes."""
        L = self.L
        self.out_modes = sorted({p.k for p in self.quadratic})
        self.pairs = {}
        for k in self.out_modes:
            low = np.arange(1, L + 1 - k)
            high = low + k
            x = (self.rate[low - 1] + self.rate[high - 1]) * self.dt
            g = variance_correction(x)
            cross = 2.0 * self.coef[high - 1] * np.conj(self.coef[low - 1]) * g
            entry = {"cross": cross, "cross_x": x}
            if k == 0:
                entry["cross"] = cross.real
                entry["mean"] = float(np.sum(cross.real * self.var))
            if k >= 2:
                a = np.arange(1, k)
                xa = (self.rate[a - 1] + self.rate[k - a - 1]) * self.dt
                entry["direct"] = self.coef[a - 1] * self.coef[k - a - 1] * variance_correction(xa)
                entry["direct_x"] = xa
            self.pairs[k] = entry
        self.probe_index = [self.out_modes.index(p.k) for p in self.quadratic]

    # -- sampling ---------------------------------------------------------

    def sample(self, rng: np.random.Generator, R: int) -> dict[str, np.ndarray]:
        """Draw ``R`` replicas.

        Returns
        -------
        dict
            ``"quadratic"`` of shape ``(R, n_quadratic)`` and ``"linear"`` of
            shape ``(R, n_linear)``, both complex.
        """
        L = self.L
        state = _cnormal(rng, (R, L)) * np.sqrt(self.var)
        acc_q = np.zeros((R, len(self.quadratic)), dtype=complex)
        acc_l = np.zeros((R, len(self.linear)), dtype=complex)
        lin_idx = np.array(self.linear_modes, dtype=int) - 1
        if lin_idx.size:
            a = self.rate[lin_idx]
            cov = -np.expm1(-a * self.dt) / a
            cond_sd = np.sqrt(np.maximum(self.step_var[lin_idx] - cov * cov / self.dt, 0.0))
        sd = np.sqrt(self.step_var)
        lin_slot = {k: i for i, k in enumerate(self.linear_modes)}
        for n in range(self.n_steps):
            self._accumulate(state, n, acc_q)
            if n == self.n_steps - 1:
                break
            noise = _cnormal(rng, (R, L)) * sd
            if lin_idx.size:
                dw = _cnormal(rng, (R, lin_idx.size)) * math.sqrt(self.dt)
                noise[:, lin_idx] = (cov / self.dt) * dw + cond_sd * _cnormal(rng, (R, lin_idx.size))
                for j, p in enumerate(self.linear):
                    if p.k > 0:
                        acc_l[:, j] += self.lweights[j, n] * dw[:, lin_slot[p.k]]
            state = self.decay * state + noise
        zero_j = [j for j, p in enumerate(self.linear) if p.k == 0]
        if zero_j:
            z = rng.standard_normal((R, len(zero_j)))
            for i, j in enumerate(zero_j):
                acc_l[:, j] = self.zero_linear_sd[i] * z[:, i]
        acc_q *= self.eps ** self.beta
        return {"quadratic": acc_q, "linear": acc_l}

    def _accumulate(self, state, n, acc_q):
        L = self.L
        values = {}
        for k in self.out_modes:
            e = self.pairs[k]
            if k == 0:
                power = state.real ** 2 + state.imag ** 2
                values[k] = power @ e["cross"] - e["mean"]
            else:
                v = (state[:, k:] * np.conj(state[:, :L - k])) @ e["cross"]
                if k >= 2:
                    v = v + (state[:, :k - 1] * state[:, k - 2::-1]) @ e["direct"]
                values[k] = v
        for j, k in enumerate(self.probe_index):
            w = self.qweights[j, n]
            if w != 0.0:
                acc_q[:, j] += w * values[self.out_modes[k]]

    # -- deterministic diagnostics ------------------------------------------

    def discrete_second_moments(self) -> np.ndarray:
        """Exact ``E|P_j|^2`` of the sampler's own quadratic probe estimators."""
        out = np.zeros(len(self.quadratic))
        for j, p in enumerate(self.quadratic):
            e = self.pairs[p.k]
            w = self.qweights[j]
            if p.k == 0:
                amp = e["cross"] ** 2 * self.var ** 2
            else:
                low = np.arange(1, self.L + 1 - p.k)
                amp = np.abs(e["cross"]) ** 2 * self.var[low - 1] * self.var[low + p.k - 1]
            total = np.sum(amp * _exp_quadratic_form(w, e["cross_x"]))
            if p.k >= 2:
                a = np.arange(1, p.k)
                amp_d = 2.0 * np.abs(e["direct"]) ** 2 * self.var[a - 1] * self.var[p.k - a - 1]
                total += np.sum(amp_d * _exp_quadratic_form(w, e["direct_x"]))
            out[j] = self.eps ** (2 * self.beta) * total
        return out


def _exp_quadratic_form(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_{n,n'} w_n w_n' exp(-x |n - n'|)`` for each rate in ``x``."""
    q = np.exp(-x)
    run = np.zeros_like(x)
    total = np.zeros_like(x)
    for wn in w:
        run = wn + q * run
        total += wn * (2.0 * run - wn)
    return total


def _cnormal(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal((2,) + tuple(shape))
    return (z[0] + 1j * z[1]) * math.sqrt(0.5)


def xi_tilde_discrete_variance(sampler: SparseChaosSampler, phi: TestFunction) -> float:
    """Exact variance of the sampler estimate of ``xi_tilde(phi)``."""
    moments = sampler.discrete_second_moments()
    total = 0.0
    for i, (k, (amp, _)) in enumerate(phi.modes.items()):
        total += (abs(amp) ** 2 if k == 0 else 2.0 * abs(amp) ** 2) * moments[i]
    return total


__all__ = [
    "QuadraticProbe", "LinearProbe", "SparseChaosSampler", "combine", "probes_for",
    "linear_probes_for", "variance_correction", "xi_tilde_discrete_variance", "EIGHT_PI2",
]
