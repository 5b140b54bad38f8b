"""Smooth compactly supported bump, its dilations and its Fourier transform.

The bump is ``rho(r) = c * exp(-1 / (1 - (4r)^2))`` on ``|r| < 1/4`` with
``c`` fixing unit mass. Its Fourier transform uses the convention
``rho_hat(q) = int rho(r) exp(-2 pi i q r) dr``, which is real and even.
"""

from __future__ import annotations

import functools
import threading
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import InvalidScale

SUPPORT_RADIUS = 0.25

# frequencies are bucketed so each q is always evaluated with the same rule
_BUCKET_WIDTH = 200.0


def _profile(r):
    """Unnormalized bump ``exp(-1/(1-(4r)^2))``, zero off the support."""
    r = np.asarray(r, dtype=float)
    z = 4.0 * r
    inside = np.abs(z) < 1.0
    out = np.zeros_like(z)
    zi = z[inside]
    out[inside] = np.exp(-1.0 / (1.0 - zi * zi))
    return out


class MollifierTable:
    """Bump function with cached Fourier transform.

    Parameters
    ----------
    quadrature_order : int
        Gauss-Legendre nodes on ``[0, 1/4]`` for frequencies below 200.
        Each further band of width 200 adds the same number of nodes.

    Attributes
    ----------
    normalization : float
        Constant ``c`` making the bump integrate to one.
    fourier_cache : dict
        Scalar evaluations of ``rho_hat`` keyed by frequency.
    support_radius : float
        Always 1/4.
    """

    support_radius = SUPPORT_RADIUS

    def __init__(self, quadrature_order: int = 300):
        self.quadrature_order = int(quadrature_order)
        mass, err = integrate.quad(
            lambda r: float(_profile(r)), -SUPPORT_RADIUS, SUPPORT_RADIUS,
            epsabs=1e-14, epsrel=1e-13, limit=200)
        self.normalization = 1.0 / mass
        self.fourier_cache: dict[float, float] = {}
        self._lock = threading.Lock()
        self._rules: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- real space ---------------------------------------------------

    def bump(self, r):
        """Evaluate the normalized bump at ``r`` (scalar or array)."""
        out = self.normalization * _profile(r)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = bump

    def rescaled(self, eps: float) -> Callable:
        """Return ``rho^eps(r) = rho(r/eps)/eps``."""
        if not eps > 0:
            raise InvalidScale(f"scale must be positive, got {eps}")
        return lambda r: self.bump(np.asarray(r) / eps) / eps

    # -- Fourier side -------------------------------------------------

    def _rule(self, bucket: int):
        rule = self._rules.get(bucket)
        if rule is None:
            n = self.quadrature_order * (bucket + 1)
            x, w = np.polynomial.legendre.leggauss(n)
            r = 0.5 * SUPPORT_RADIUS * (x + 1.0)
            # factor 2 from evenness of the integrand
            wr = SUPPORT_RADIUS * w * self.bump(r)
            rule = (r, wr)
            self._rules[bucket] = rule
        return rule

    def _evaluate(self, q: np.ndarray) -> np.ndarray:
        q = np.abs(q)
        out = np.empty_like(q)
        buckets = np.floor(q / _BUCKET_WIDTH).astype(int)
        for b in np.unique(buckets):
            sel = buckets == b
            r, wr = self._rule(int(b))
            phase = np.cos(2.0 * np.pi * np.multiply.outer(q[sel], r))
            out[sel] = (phase * wr).sum(axis=-1)
        return out

    def rho_hat(self, q):
        """Fourier transform ``rho_hat(q)``; scalars are cached.

        Parameters
        ----------
        q : float or array_like
            Real frequency or frequencies.

        Returns
        -------
        float or ndarray
        """
        if np.ndim(q) == 0:
            key = abs(float(q))
            val = self.fourier_cache.get(key)
            if val is None:
                val = float(self._evaluate(np.array([key]))[0])
                with self._lock:
                    self.fourier_cache[key] = val
            return val
        return self._evaluate(np.asarray(q, dtype=float).ravel()).reshape(np.shape(q))

    def scaled_rho_hat(self, eps: float, k):
        """Fourier coefficient ``rho_hat(eps * k)`` of the dilated bump."""
        if not eps > 0:
            raise InvalidScale(f"scale must be positive, got {eps}")
        return self.rho_hat(eps * np.asarray(k, dtype=float) if np.ndim(k) else eps * float(k))

    def precompute(self, qs) -> None:
        """Populate the scalar cache for the frequencies ``qs``."""
        qs = np.unique(np.abs(np.asarray(qs, dtype=float)))
        vals = self._evaluate(qs)
        with self._lock:
            self.fourier_cache.update(zip(qs.tolist(), vals.tolist()))

    def decay_threshold(self, tol: float = 1e-8, q_max: float = 400.0,
                        step: float = 0.05) -> float:
        """Smallest sampled ``q*`` beyond which ``|rho_hat| < tol`` up to ``q_max``."""
        q = np.arange(0.0, q_max + step, step)
        big = np.nonzero(np.abs(self._evaluate(q)) >= tol)[0]
        return float(q[big[-1] + 1]) if big.size else 0.0

    # -- quadrature rules for temporal mollification -------------------

    @functools.cached_property
    def _smoothing_rule(self):
        x, w = np.polynomial.legendre.leggauss(96)
        r = SUPPORT_RADIUS * x
        wts = SUPPORT_RADIUS * w * self.bump(r)
        return r, wts / wts.sum()

    def smoothing_rule(self, scale: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for ``int rho^scale(u) g(u) du``.

        The weights sum to one exactly.
        """
        if not scale > 0:
            raise InvalidScale(f"scale must be positive, got {scale}")
        r, w = self._smoothing_rule
        return scale * r, w

    @functools.cached_property
    def _autocorrelation_rule(self):
        x, w = np.polynomial.legendre.leggauss(96)
        d = 2.0 * SUPPORT_RADIUS * x
        dens = np.array([self._self_convolution(di) for di in d])
        wts = 2.0 * SUPPORT_RADIUS * w * dens
        return d, wts / wts.sum()

    def _self_convolution(self, d: float) -> float:
        lo = max(-SUPPORT_RADIUS, d - SUPPORT_RADIUS)
        hi = min(SUPPORT_RADIUS, d + SUPPORT_RADIUS)
        if hi <= lo:
            return 0.0
        x, w = np.polynomial.legendre.leggauss(200)
        r = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        return float(0.5 * (hi - lo) * np.sum(w * self.bump(r) * self.bump(d - r)))

    def autocorrelation_rule(self, scale: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for ``int (rho^scale * rho^scale)(d) g(d) dd``."""
        if not scale > 0:
            raise InvalidScale(f"scale must be positive, got {scale}")
        d, w = self._autocorrelation_rule
        return scale * d, w


class SyntheticMollifier(MollifierTable):
    """Table whose Fourier transform is replaced by a given function.

    Used as a test hook, for example ``rho_hat = 1`` on ``|q| <= 1`` and
    zero beyond, or ``rho_hat = 0`` away from the origin.
    """

    def __init__(self, fourier: Callable[[np.ndarray], np.ndarray]):
        super().__init__(quadrature_order=8)
        self._fourier = fourier

    def _evaluate(self, q: np.ndarray) -> np.ndarray:
        return np.asarray(self._fourier(np.abs(q)), dtype=float)


def box_fourier(q):
    """Indicator of ``|q| <= 1``."""
    return (np.abs(q) <= 1.0).astype(float)


def delta_fourier(q):
    """One at the origin, zero elsewhere."""
    return (np.asarray(q) == 0.0).astype(float)


@functools.lru_cache(maxsize=1)
def default_table() -> MollifierTable:
    """Shared table used when none is passed explicitly."""
    return MollifierTable()


def bump(r):
    """Normalized bump of the shared table."""
    return default_table().bump(r)


def rho_hat(q):
    """Fourier transform of the shared bump."""
    return default_table().rho_hat(q)


def scaled_rho_hat(eps: float, k):
    """``rho_hat(eps * k)`` for the shared bump."""
    return default_table().scaled_rho_hat(eps, k)

