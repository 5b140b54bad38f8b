"""Simulation parameters shared by the noise generators and the solvers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .constants import beta, c1_cutoff, c1_exact
from .errors import CutoffTooSmall, InvalidDuration, InvalidScale


@dataclass(frozen=True)
class SimConfig:
    """Physical and numerical parameters of one simulation.

    Parameters
    ----------
    gamma, eps : float
        Noise exponent (> 1/4) and mollification scale (> 0).
    K : int
        Spatial mode cutoff.
    T, dt : float
        Horizon and solver step; ``T/dt`` must be an integer.
    theta : float
        Hoelder exponent used in reports.
    c1, c2 : {"exact", "zero"} or float
        Counterterm policies.
    psi : mapping
        Initial datum as ``{k: psi_hat(k)}`` for ``k >= 0``.
    seed : int
        Master seed.
    noise_dt : float, optional
        Step of the grid noise; defaults to ``dt``. Must be a multiple of ``dt``.
    noise_kind : {"mollified", "white"}
        Grid white noise convolved in time with the bump at scale ``eps^2``,
        or exact white-noise increments.
    burn_in : float, optional
        Length of the run-in before time 0 that couples the stationary start
        to the time-mollified noise; default ``min(50 eps^2, 0.5)``.
    cutoff_tol : float
        Relative counterterm mass allowed beyond the cutoff.
    strict_cutoff : bool
        Raise :class:`CutoffTooSmall` when ``K`` misses ``cutoff_tol``.
    """

    gamma: float
    eps: float
    K: int
    T: float
    dt: float
    theta: float = 0.1
    c1: str | float = "exact"
    c2: str | float = "zero"
    psi: Mapping[int, complex] = field(default_factory=dict)
    seed: int = 0
    noise_dt: float | None = None
    noise_kind: str = "mollified"
    burn_in: float | None = None
    cutoff_tol: float = 1e-8
    strict_cutoff: bool = True
    blowup_guard: float = 1e6

    def __post_init__(self):
        beta(self.gamma)
        if not self.eps > 0:
            raise InvalidScale(f"eps must be positive, got {self.eps}")
        if not (self.dt > 0 and self.T > 0):
            raise InvalidDuration("T and dt must be positive")
        if abs(self.T / self.dt - round(self.T / self.dt)) > 1e-9:
            raise InvalidDuration("T must be an integer multiple of dt")
        if self.noise_dt is None:
            object.__setattr__(self, "noise_dt", self.dt)
        ratio = self.noise_dt / self.dt
        if ratio < 1 - 1e-12 or abs(ratio - round(ratio)) > 1e-9:
            raise InvalidDuration("noise_dt must be an integer multiple of dt")
        if abs(self.T / self.noise_dt - round(self.T / self.noise_dt)) > 1e-9:
            raise InvalidDuration("T must be an integer multiple of noise_dt")
        if self.noise_kind not in ("mollified", "white"):
            raise ValueError(f"unknown noise kind {self.noise_kind!r}")
        if self.noise_kind == "mollified" and self.noise_dt > self.eps ** 2 / 4 * (1 + 1e-12):
            raise InvalidDuration("noise_dt must resolve the temporal mollifier: noise_dt <= eps^2/4")
        if self.strict_cutoff and self.K < c1_cutoff(self.gamma, self.eps, self.cutoff_tol):
            raise CutoffTooSmall(
                f"K={self.K} below {c1_cutoff(self.gamma, self.eps, self.cutoff_tol)} "
                f"needed for relative tail {self.cutoff_tol}")
        if any(abs(k) > self.K for k in self.psi):
            raise ValueError("psi has modes beyond the cutoff")
        object.__setattr__(self, "psi", {int(k): complex(v) for k, v in self.psi.items()})

    # -- derived quantities -------------------------------------------------

    @property
    def beta(self) -> float:
        return beta(self.gamma)

    @property
    def lam(self) -> float:
        """Coupling ``eps^beta`` in front of the nonlinearity."""
        return self.eps ** self.beta

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def substeps(self) -> int:
        return int(round(self.noise_dt / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    @property
    def burn_in_time(self) -> float:
        if self.burn_in is not None:
            return float(self.burn_in)
        return min(50.0 * self.eps ** 2, 0.5)

    @property
    def C1(self) -> float:
        if self.c1 == "exact":
            return c1_exact(self.eps, self.gamma, self.K, tail_tol=None)
        return float(self.c1)

    @property
    def C2(self) -> float:
        return 0.0 if self.c2 == "zero" else float(self.c2)

    @property
    def C(self) -> float:
        """Total counterterm ``eps^beta C1 + C2``."""
        return self.lam * self.C1 + self.C2

    def psi_modes(self) -> np.ndarray:
        m = np.zeros(self.K + 1, dtype=complex)
        for k, v in self.psi.items():
            m[abs(k)] = np.conj(v) if k < 0 else v
        m[0] = m[0].real
        return m

    def replace(self, **changes) -> "SimConfig":
        data = asdict(self)
        data.update(changes)
        return SimConfig(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["psi"] = {str(k): [v.real, v.imag] for k, v in sorted(self.psi.items())}
        return d


def default_cutoff(gamma: float, eps: float, tol: float = 1e-8, margin: int = 0) -> int:
    """Smallest admissible cutoff plus ``margin``."""
    return c1_cutoff(gamma, eps, tol) + margin

