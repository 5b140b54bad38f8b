"""Fourier representation of real fields on the unit torus.

Fields are stored by their nonnegative modes ``f_hat(0..K)`` in the basis
``exp(2 pi i k x)``; negative modes follow from Hermitian symmetry. The heat
semigroup has symbol ``exp(-4 pi^2 k^2 t)``, ``D^gamma`` has symbol ``|k|^gamma``
and the derivative has symbol ``i k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import DealiasViolation, InvalidDuration, InvalidExponent

FOUR_PI2 = 4.0 * np.pi ** 2


@dataclass(frozen=True)
class TorusField:
    """Real field on the torus given by modes ``0..K``.

    Leading axes are allowed and treated as a batch. The zero mode is
    coerced to be real.
    """

    modes: np.ndarray

    def __post_init__(self):
        m = np.array(self.modes, dtype=complex)
        if m.shape[-1] < 2:
            raise ValueError("cutoff K must be at least 1")
        m[..., 0] = m[..., 0].real
        m.setflags(write=False)
        object.__setattr__(self, "modes", m)

    @property
    def cutoff(self) -> int:
        return self.modes.shape[-1] - 1

    @classmethod
    def zeros(cls, K: int) -> "TorusField":
        return cls(np.zeros(K + 1, dtype=complex))

    @classmethod
    def from_modes(cls, K: int, coeffs: dict[int, complex]) -> "TorusField":
        """Build a field from ``{k: f_hat(k)}``; negative keys are conjugated."""
        m = np.zeros(K + 1, dtype=complex)
        for k, c in coeffs.items():
            if abs(k) > K:
                raise ValueError(f"mode {k} beyond cutoff {K}")
            m[abs(k)] = np.conj(c) if k < 0 else c
        return cls(m)

    @classmethod
    def from_grid(cls, values: np.ndarray, K: int) -> "TorusField":
        return cls(grid_to_modes(values, K))

    def full_modes(self) -> np.ndarray:
        """Coefficients for ``k = -K..K``."""
        neg = np.conj(self.modes[..., :0:-1])
        return np.concatenate([neg, self.modes], axis=-1)

    def to_grid(self, n: int | None = None) -> np.ndarray:
        return modes_to_grid(self.modes, n or 8 * self.cutoff)

    def __add__(self, other: "TorusField") -> "TorusField":
        return TorusField(self.modes + other.modes)

    def __sub__(self, other: "TorusField") -> "TorusField":
        return TorusField(self.modes - other.modes)

    def __mul__(self, c: float) -> "TorusField":
        return TorusField(self.modes * c)

    __rmul__ = __mul__


# -- grid transforms -------------------------------------------------------

def modes_to_grid(modes: np.ndarray, n: int) -> np.ndarray:
    """Point values at ``x_j = j/n`` of the field with modes ``0..K``."""
    K = modes.shape[-1] - 1
    if n <= 2 * K:
        raise DealiasViolation(f"grid of {n} points cannot resolve cutoff {K}")
    return sfft.irfft(modes, n=n, axis=-1, norm="forward")


def grid_to_modes(values: np.ndarray, K: int) -> np.ndarray:
    n = values.shape[-1]
    if n <= 2 * K:
        raise DealiasViolation(f"grid of {n} points cannot resolve cutoff {K}")
    return sfft.rfft(values, axis=-1, norm="forward")[..., :K + 1]


def padded_size(K: int) -> int:
    """Grid size removing aliasing from quadratic products of cutoff ``K``."""
    return sfft.next_fast_len(3 * K + 2, real=True)


def dealiased_product(a: np.ndarray, b: np.ndarray, n: int | None = None) -> np.ndarray:
    """Modes ``0..K`` of the product of two fields, computed alias-free."""
    K = a.shape[-1] - 1
    n = n or padded_size(K)
    if n < 3 * K + 1:
        raise DealiasViolation(f"padded grid {n} below 3K+1 = {3 * K + 1}")
    ga = modes_to_grid(a, n)
    gb = ga if b is a else modes_to_grid(b, n)
    return grid_to_modes(ga * gb, K)


# -- Fourier multipliers --------------------------------------------------

def wavenumbers(K: int) -> np.ndarray:
    return np.arange(K + 1, dtype=float)


def heat_symbol(K: int, t: float) -> np.ndarray:
    if t < 0:
        raise InvalidDuration(f"negative duration {t}")
    k = wavenumbers(K)
    return np.exp(-FOUR_PI2 * k * k * t)


def d_gamma_symbol(K: int, gamma: float) -> np.ndarray:
    if not gamma > 0:
        raise InvalidExponent(f"exponent must be positive, got {gamma}")
    k = wavenumbers(K)
    out = k ** gamma
    out[0] = 0.0
    return out


def derivative_symbol(K: int) -> np.ndarray:
    return 1j * wavenumbers(K)


def heat_propagate(f: TorusField, t: float) -> TorusField:
    """Apply the heat semigroup for duration ``t >= 0``."""
    return TorusField(f.modes * heat_symbol(f.cutoff, t))


def apply_D_gamma(f: TorusField, gamma: float) -> TorusField:
    """Multiply mode ``k`` by ``|k|^gamma``; the zero mode is removed."""
    return TorusField(f.modes * d_gamma_symbol(f.cutoff, gamma))


def partial_x(f: TorusField) -> TorusField:
    """Multiply mode ``k`` by ``i k``."""
    return TorusField(f.modes * derivative_symbol(f.cutoff))


# -- Littlewood-Paley decomposition ----------------------------------------

_PLATEAU = 2.0 / 3.0


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def lp_cutoff(r):
    """Radial profile equal to 1 on ``[0, 2/3]`` and 0 beyond 1, C^2 in between."""
    r = np.abs(np.asarray(r, dtype=float))
    return 1.0 - _smoothstep((r - _PLATEAU) / (1.0 - _PLATEAU))


class DyadicPartition:
    """Dyadic partition of unity on frequencies ``0..K``.

    ``chi_{-1}(k) = theta(k)`` and ``chi_j(k) = theta(k/2^{j+1}) - theta(k/2^j)``
    so that ``chi_j(k) = chi_0(k/2^j)`` and ``chi_0`` is supported in
    ``[2/3, 2]`` and equal to one on ``[1, 4/3]``.

    Attributes
    ----------
    js : ndarray
        Block indices ``-1..J``.
    blocks : ndarray
        Weights of shape ``(len(js), K+1)``.
    """

    def __init__(self, K: int):
        self.K = int(K)
        k = wavenumbers(self.K)
        J = 0
        while _PLATEAU * 2.0 ** (J + 1) < self.K:
            J += 1
        self.js = np.arange(-1, J + 1)
        rows = [lp_cutoff(k)]
        for j in range(J + 1):
            rows.append(lp_cutoff(k / 2.0 ** (j + 1)) - lp_cutoff(k / 2.0 ** j))
        self.blocks = np.array(rows)

    def weights(self, j: int) -> np.ndarray:
        if j < -1:
            raise ValueError(f"block index must be >= -1, got {j}")
        if j > self.js[-1]:
            return np.zeros(self.K + 1)
        return self.blocks[j + 1]


def _partition_for(f: TorusField, partition: DyadicPartition | None) -> DyadicPartition:
    if partition is None:
        return DyadicPartition(f.cutoff)
    if partition.K != f.cutoff:
        raise ValueError("partition cutoff does not match field cutoff")
    return partition


def lp_block(f: TorusField, j: int, partition: DyadicPartition | None = None) -> TorusField:
    """Littlewood-Paley block ``Delta_j f``."""
    part = _partition_for(f, partition)
    return TorusField(f.modes * part.weights(j))


def besov_norms(modes: np.ndarray, alpha: float, partition: DyadicPartition,
                oversample: int = 8) -> np.ndarray:
    """Batched ``sup_j 2^{alpha max(j,0)} max_x |Delta_j f(x)|`` over leading axes."""
    K = modes.shape[-1] - 1
    n = oversample * K
    blocks = modes[..., None, :] * partition.blocks
    sup = np.abs(modes_to_grid(blocks, n)).max(axis=-1)
    scale = 2.0 ** (alpha * np.maximum(partition.js, 0))
    return (sup * scale).max(axis=-1)


def besov_norm(f: TorusField, alpha: float, partition: DyadicPartition | None = None) -> float:
    """Hoelder-Besov norm of ``f`` with the sup over a grid of ``8K`` points."""
    part = _partition_for(f, partition)
    return float(besov_norms(f.modes, alpha, part))
