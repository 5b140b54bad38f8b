"""Closed-form constants of the mollified weak-coupling KPZ problem.

All mode sums use the Fourier transform ``rho_hat`` of the bump from
:mod:`roughkpz.mollifier` and are truncated where the remaining tail mass is
below a relative tolerance.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import integrate, special

from .errors import CutoffTooSmall, InvalidScale, OutOfRegime, QuadratureFailure
from .mollifier import MollifierTable, default_table

PI2 = math.pi ** 2
FOUR_PI2 = 4.0 * PI2
_Q_FAR = 400.0


def beta(gamma: float) -> float:
    """Weak-coupling exponent ``2 gamma - 1/2``."""
    if not gamma > 0.25:
        raise OutOfRegime(f"gamma must exceed 1/4, got {gamma}")
    return 2.0 * gamma - 0.5


def _check_eps(eps: float) -> None:
    if not eps > 0:
        raise InvalidScale(f"eps must be positive, got {eps}")


# -- time profiles --------------------------------------------------------

class TimeProfile:
    """Real time profile ``p(t)`` with closed-form autocorrelation.

    Subclasses provide ``__call__``, ``support``, ``autocorrelation`` and
    ``kinks`` (nonsmooth points of the autocorrelation on ``v >= 0``).
    """

    kinks: tuple[float, ...] = ()

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def autocorrelation(self, v):
        raise NotImplementedError

    def l2_squared(self) -> float:
        return float(self.autocorrelation(0.0))

    def mollified(self, t, scale: float, table: MollifierTable | None = None):
        """``(p * rho^scale)(t)``; ``scale = 0`` returns ``p`` itself."""
        t = np.asarray(t, dtype=float)
        if scale == 0:
            return self(t)
        u, w = (table or default_table()).smoothing_rule(scale)
        return np.tensordot(self(t[..., None] - u), w, axes=([-1], [0]))

    def mollified_support(self, scale: float) -> tuple[float, float]:
        lo, hi = self.support()
        return lo - scale / 4.0, hi + scale / 4.0

    def mollified_autocorrelation(self, v, scale: float, table: MollifierTable | None = None):
        v = np.asarray(v, dtype=float)
        if scale == 0:
            return self.autocorrelation(v)
        d, w = (table or default_table()).autocorrelation_rule(scale)
        return np.tensordot(self.autocorrelation(np.abs(v[..., None] - d)), w, axes=([-1], [0]))

    def mollified_l2_squared(self, scale: float, table: MollifierTable | None = None) -> float:
        return float(self.mollified_autocorrelation(0.0, scale, table))

    def kernel_integral(self, b, scale: float = 0.0, table: MollifierTable | None = None):
        """``G(b) = int int p(t) p(t') exp(-b |t - t'|) dt dt'`` for the mollified profile.

        Parameters
        ----------
        b : array_like
            Positive decay rates.
        scale : float
            Temporal mollification scale; 0 disables it.
        """
        b = np.atleast_1d(np.asarray(b, dtype=float))
        g16 = self._graded_integral(b, scale, table, 16)
        g24 = self._graded_integral(b, scale, table, 24)
        if np.any(np.abs(g16 - g24) > 1e-10 * np.abs(g24) + 1e-300):
            raise QuadratureFailure("kernel integral did not reach 1e-10 relative accuracy")
        return g24

    def _graded_integral(self, b, scale, table, order):
        lo, hi = self.support()
        reach = hi - lo + scale / 2.0
        b_max = float(b.max())
        start = min(1e-4 / b_max, 1e-4 * reach)
        edges = [0.0]
        e = start
        while e < reach:
            edges.append(e)
            e *= 1.25
        edges.append(reach)
        # uniform panels so slow kernels also see a fine grid
        edges.extend(np.linspace(0.0, reach, 65)[1:-1].tolist())
        for kink in self.kinks:
            for c in (kink - scale / 2.0, kink + scale / 2.0) if scale else (kink,):
                if 0.0 < c < reach:
                    edges.append(c)
            if scale:
                edges.extend(np.linspace(max(kink - scale, 0.0), min(kink + scale, reach), 17).tolist())
        edges = np.unique(np.clip(edges, 0.0, reach))
        x, w = np.polynomial.legendre.leggauss(order)
        a, c = edges[:-1], edges[1:]
        v = (0.5 * (c - a)[:, None] * (x + 1.0) + a[:, None]).ravel()
        wv = (0.5 * (c - a)[:, None] * w).ravel()
        r = self.mollified_autocorrelation(v, scale, table) * wv
        return 2.0 * np.exp(-np.outer(b, v)) @ r


@dataclass(frozen=True)
class GaussianProfile(TimeProfile):
    """``p(t) = exp(-(t - center)^2 / (2 width^2))``, truncated at 9 widths."""

    center: float
    width: float

    def __call__(self, t):
        z = (np.asarray(t, dtype=float) - self.center) / self.width
        return np.where(np.abs(z) <= 9.0, np.exp(-0.5 * z * z), 0.0)

    def support(self):
        return self.center - 9.0 * self.width, self.center + 9.0 * self.width

    def autocorrelation(self, v):
        v = np.asarray(v, dtype=float)
        return self.width * math.sqrt(math.pi) * np.exp(-v * v / (4.0 * self.width ** 2))

    def l2_squared(self) -> float:
        return self.width * math.sqrt(math.pi)

    def kernel_integral(self, b, scale: float = 0.0, table: MollifierTable | None = None):
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if scale == 0:
            shifts, weights = np.zeros(1), np.ones(1)
        else:
            shifts, weights = (table or default_table()).autocorrelation_rule(scale)
        w = self.width
        total = np.zeros_like(b)
        for s, om in zip(shifts, weights):
            total += om * _gauss_exp_term(b, w, s)
        return total


def _gauss_exp_term(b, w, s):
    """``int R(v) exp(-b |v - s|) dv`` with ``R(v) = w sqrt(pi) exp(-v^2/(4 w^2))``."""
    s = abs(s)
    a_minus = (2.0 * b * w * w - s) / (2.0 * w)
    a_plus = (2.0 * b * w * w + s) / (2.0 * w)
    damp = math.exp(-s * s / (4.0 * w * w))
    plus = damp * special.erfcx(a_plus)
    with np.errstate(over="ignore"):
        minus = np.where(
            a_minus >= 0.0,
            damp * special.erfcx(np.maximum(a_minus, 0.0)),
            2.0 * np.exp(b * b * w * w - b * s) - damp * special.erfcx(np.maximum(-a_minus, 0.0)),
        )
    return math.pi * w * w * (plus + minus)


@dataclass(frozen=True)
class RaisedCosineProfile(TimeProfile):
    """``p(t) = (1 + cos(pi (t - center) / half_width)) / 2`` on its support."""

    center: float
    half_width: float

    @property
    def kinks(self):
        return (2.0 * self.half_width,)

    def __call__(self, t):
        z = (np.asarray(t, dtype=float) - self.center) / self.half_width
        return np.where(np.abs(z) <= 1.0, 0.5 * (1.0 + np.cos(np.pi * z)), 0.0)

    def support(self):
        return self.center - self.half_width, self.center + self.half_width

    def autocorrelation(self, v):
        h = self.half_width
        v = np.minimum(np.abs(np.asarray(v, dtype=float)), 2.0 * h)
        om = math.pi / h
        length = 2.0 * h - v
        return 0.25 * (length * (1.0 + 0.5 * np.cos(om * v)) + 1.5 * np.sin(om * v) / om)

    def l2_squared(self) -> float:
        return 0.75 * self.half_width


@dataclass(frozen=True)
class HeatWindowProfile(TimeProfile):
    """``p(s) = exp(-rate (end - s))`` for ``0 <= s <= end`` and zero otherwise.

    Integrating a forcing against this profile gives the Duhamel integral
    of a single Fourier mode at time ``end``.
    """

    end: float
    rate: float

    @property
    def kinks(self):
        return (self.end,)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= 0.0) & (s <= self.end)
        return np.where(inside, np.exp(-self.rate * (self.end - np.clip(s, 0.0, self.end))), 0.0)

    def support(self):
        return 0.0, self.end

    def autocorrelation(self, v):
        u = np.minimum(np.abs(np.asarray(v, dtype=float)), self.end)
        k = self.rate
        if k == 0:
            return self.end - u
        return np.exp(-k * u) * -np.expm1(-2.0 * k * (self.end - u)) / (2.0 * k)


@dataclass(frozen=True)
class TestFunction:
    """Space-time test function with finitely many spatial modes.

    ``phi_hat(t, k) = amplitude_k * profile_k(t)`` for ``k >= 0`` and
    ``phi_hat(t, -k) = conj(phi_hat(t, k))``.

    Parameters
    ----------
    modes : mapping
        ``{k: (amplitude, profile)}`` with ``k >= 0``; the zero mode needs a
        real amplitude.
    """

    __test__ = False

    modes: Mapping[int, tuple[complex, TimeProfile]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, (amp, prof) in sorted(self.modes.items()):
            if k < 0:
                raise ValueError("give modes for k >= 0 only; negative modes follow by symmetry")
            amp = complex(amp)
            if k == 0 and amp.imag != 0:
                raise ValueError("zero-mode amplitude must be real")
            clean[int(k)] = (amp, prof)
        object.__setattr__(self, "modes", clean)

    @property
    def bandwidth(self) -> int:
        return max(self.modes, default=0)

    @property
    def is_zero(self) -> bool:
        return all(a == 0 for a, _ in self.modes.values())

    def multiplicity(self, k: int) -> int:
        return 1 if k == 0 else 2

    def l2_squared(self) -> float:
        """``||phi||^2`` over time and space."""
        return sum(self.multiplicity(k) * abs(a) ** 2 * p.l2_squared()
                   for k, (a, p) in self.modes.items())

    def mollified_l2_squared(self, scale: float, table: MollifierTable | None = None) -> float:
        return sum(self.multiplicity(k) * abs(a) ** 2 * p.mollified_l2_squared(scale, table)
                   for k, (a, p) in self.modes.items())

    def time_window(self, scale: float = 0.0) -> tuple[float, float]:
        lows, highs = zip(*(p.mollified_support(scale) for _, p in self.modes.values()))
        return min(lows), max(highs)

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction({k: (a * c, p) for k, (a, p) in self.modes.items()})


# -- cutoffs --------------------------------------------------------------

@functools.lru_cache(maxsize=64)
def mass_cutoff(power: float, rho_power: int, tol: float) -> float:
    """Smallest ``q`` with ``int_q^inf x^power |rho_hat|^rho_power dx`` below ``tol`` times the total."""
    table = default_table()
    q = np.linspace(0.0, _Q_FAR, 80001)
    with np.errstate(divide="ignore"):
        dens = np.where(q > 0, q ** power, 0.0) * np.abs(table.rho_hat(q)) ** rho_power
    seg = 0.5 * (dens[1:] + dens[:-1]) * np.diff(q)
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    total = _weighted_integral(power, rho_power)
    idx = np.nonzero(tail <= tol * total)[0][0]
    return float(q[idx])


@functools.lru_cache(maxsize=64)
def _weighted_integral(power: float, rho_power: int) -> float:
    """``int_0^inf x^power |rho_hat(x)|^rho_power dx`` by adaptive quadrature."""
    table = default_table()

    def f(x):
        return abs(table.rho_hat(x)) ** rho_power

    head, e0 = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(power, 0.0),
                              epsabs=1e-14, epsrel=1e-13, limit=200)
    total, err = head, e0
    edges = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, _Q_FAR]
    for a, c in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(lambda x: x ** power * f(x), a, c,
                                epsabs=1e-15, epsrel=1e-13, limit=400)
        total += val
        err += e
    if err > 1e-12:
        raise QuadratureFailure(f"weighted integral error estimate {err:.2e} above 1e-12")
    return total


def c1_cutoff(gamma: float, eps: float, tol: float = 1e-8) -> int:
    """Mode cutoff whose discarded counterterm mass is below ``tol`` relative."""
    _check_eps(eps)
    return int(math.ceil(mass_cutoff(2.0 * gamma, 2, tol) / eps))


def quartic_cutoff(gamma: float, eps: float, tol: float = 1e-10) -> int:
    """Mode cutoff for sums weighted by ``|q|^{4 gamma - 2} rho_hat^4``."""
    _check_eps(eps)
    return int(math.ceil(mass_cutoff(4.0 * gamma - 2.0, 4, tol) / eps))


# -- counterterm ----------------------------------------------------------

def c1_terms(eps: float, gamma: float, K: int, table: MollifierTable | None = None) -> np.ndarray:
    """Per-mode contributions ``|l|^{2 gamma} rho_hat(eps l)^2 / (8 pi^2)`` for ``l = 1..K``."""
    table = table or default_table()
    ell = np.arange(1, K + 1, dtype=float)
    return ell ** (2.0 * gamma) * table.scaled_rho_hat(eps, ell) ** 2 / (8.0 * PI2)


def c1_exact(eps: float, gamma: float, K: int | None = None, *,
             tail_tol: float | None = 1e-10, table: MollifierTable | None = None) -> float:
    """Wick constant ``E (d_x X^eps)^2`` summed over modes ``0 < |l| <= K``.

    Parameters
    ----------
    K : int, optional
        Mode cutoff; by default chosen so the relative tail is below 1e-12.
    tail_tol : float or None
        Largest admissible relative tail; ``None`` skips the check.

    Raises
    ------
    CutoffTooSmall
        If the discarded tail exceeds ``tail_tol``.
    """
    _check_eps(eps)
    beta(gamma)
    if K is None:
        K = c1_cutoff(gamma, eps, 1e-12)
    head = 2.0 * math.fsum(c1_terms(eps, gamma, K, table))
    if tail_tol is not None and table is None:
        K_far = max(K, int(math.ceil(_Q_FAR / eps)))
        tail = 2.0 * math.fsum(c1_terms(eps, gamma, K_far)[K:])
        if tail > tail_tol * (head + tail):
            raise CutoffTooSmall(f"cutoff K={K} leaves relative tail {tail / (head + tail):.2e}")
    return head


def c1_limit(gamma: float) -> float:
    """Limit of ``eps^{2 gamma + 1} C1`` as ``eps -> 0``."""
    beta(gamma)
    return _weighted_integral(2.0 * gamma, 2) / FOUR_PI2


# -- limit constant and masses ---------------------------------------------

def c_squared(gamma: float) -> float:
    """``c^2 = (1/(128 pi^6)) int |q|^{4 gamma - 2} rho_hat(q)^4 dq``."""
    beta(gamma)
    return 2.0 * _weighted_integral(4.0 * gamma - 2.0, 4) / (128.0 * math.pi ** 6)


def c_gamma_rho(gamma: float) -> float:
    """Positive square root of :func:`c_squared`."""
    return math.sqrt(c_squared(gamma))


def _pair_weights(ell: np.ndarray, m: np.ndarray, gamma: float, rl: np.ndarray, rm: np.ndarray):
    return np.abs(ell) ** (2 * gamma) * np.abs(m) ** (2 * gamma) * rl ** 2 * rm ** 2


def mu_mass(eps: float, k: int, gamma: float, tol: float = 1e-12) -> float:
    """Total mass of the measure whose limit is ``c^2``.

    ``(1/(64 pi^6)) eps sum |l|^{2g} |m|^{2g} / (l^2 + m^2) rho_hat(l)^2 rho_hat(m)^2``
    over ``l, m`` in ``eps Z \\ {0}`` with ``l + m + eps k = 0``.
    """
    _check_eps(eps)
    beta(gamma)
    table = default_table()
    N = int(math.ceil(mass_cutoff(4.0 * gamma - 2.0, 4, tol) / eps)) + abs(int(k))
    n = np.arange(-N, N + 1)
    n = n[(n != 0) & (n != -k)]
    ell = eps * n
    m = -eps * (n + k)
    terms = _pair_weights(ell, m, gamma, table.rho_hat(ell), table.rho_hat(m)) / (ell ** 2 + m ** 2)
    return eps * math.fsum(terms) / (64.0 * math.pi ** 6)


def mu_mass_bound(gamma: float) -> float:
    """Uniform bound ``(1/(16 pi^6)) int |q|^{4g-2} rho_hat^2 dq`` on the masses."""
    beta(gamma)
    return 2.0 * _weighted_integral(4.0 * gamma - 2.0, 2) / (16.0 * math.pi ** 6)


# -- exact variance --------------------------------------------------------

def pair_modes(k_out: int, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Ordered pairs ``(l, m)`` with ``l + m = k_out``, ``0 < |l|, |m| <= L``."""
    ell = np.arange(-L, L + 1)
    m = k_out - ell
    keep = (ell != 0) & (m != 0) & (np.abs(m) <= L)
    return ell[keep], m[keep]


def variance_exact(phi: TestFunction, eps: float, gamma: float, *, L: int | None = None,
                   table: MollifierTable | None = None, temporal_mollify: bool = True) -> float:
    """Second moment of the tested renormalized square ``xi_tilde^eps(phi)``.

    Parameters
    ----------
    L : int, optional
        Spatial mode cutoff; defaults to a relative tail below 1e-10.
    temporal_mollify : bool
        Mollify every profile in time at scale ``eps^2``. Without it the
        result is the variance of the Duhamel-type integral
        ``eps^beta int p(t) ((d_x X)^2 - C1)^(k)(t) dt``.
    """
    _check_eps(eps)
    b_exp = beta(gamma)
    table = table or default_table()
    if L is None:
        L = quartic_cutoff(gamma, eps, 1e-10) + phi.bandwidth
    total = 0.0
    for k, (amp, prof) in phi.modes.items():
        if amp == 0:
            continue
        ell, m = pair_modes(-k, L)
        w = _pair_weights(ell, m, gamma, table.scaled_rho_hat(eps, ell), table.scaled_rho_hat(eps, m))
        rate = FOUR_PI2 * (ell.astype(float) ** 2 + m.astype(float) ** 2)
        g = prof.kernel_integral(rate, eps * eps if temporal_mollify else 0.0, table)
        total += phi.multiplicity(k) * abs(amp) ** 2 * math.fsum(w * g)
    return eps ** (2.0 * b_exp) * total / (32.0 * math.pi ** 4)


def xi_variance(psi: TestFunction, eps: float, table: MollifierTable | None = None) -> float:
    """Variance of the mollified white noise tested against ``psi``."""
    _check_eps(eps)
    table = table or default_table()
    return sum(psi.multiplicity(k) * abs(a) ** 2 * table.scaled_rho_hat(eps, k) ** 2
               * p.mollified_l2_squared(eps * eps, table)
               for k, (a, p) in psi.modes.items())


# -- report ----------------------------------------------------------------

@dataclass
class ConstantsReport:
    """Deterministic constants for one ``(gamma, eps)`` pair."""

    gamma: float
    eps: float
    beta: float
    C1: float
    c_squared: float
    mu_masses: dict[int, float]
    mass_bound: float
    tolerances: dict[str, float]
    diagnostics: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma, "eps": self.eps, "beta": self.beta, "C1": self.C1,
            "c_squared": self.c_squared,
            "mu_masses": {str(k): v for k, v in sorted(self.mu_masses.items())},
            "mass_bound": self.mass_bound, "tolerances": dict(self.tolerances),
            "diagnostics": dict(self.diagnostics),
        }


def constants_report(gamma: float, eps: float, ks=(0, 1, 5)) -> ConstantsReport:
    c1 = c1_exact(eps, gamma)
    c2 = c_squared(gamma)
    masses = {int(k): mu_mass(eps, int(k), gamma) for k in ks}
    return ConstantsReport(
        gamma=gamma, eps=eps, beta=beta(gamma), C1=c1, c_squared=c2, mu_masses=masses,
        mass_bound=mu_mass_bound(gamma),
        tolerances={"c1_tail": 1e-10, "mass_tail": 1e-12, "quadrature_abs": 1e-12},
        diagnostics={
            "scaled_C1": eps ** (2 * gamma + 1) * c1,
            "scaled_C1_limit": c1_limit(gamma),
            "c1_cutoff": float(c1_cutoff(gamma, eps, 1e-12)),
        },
    )
