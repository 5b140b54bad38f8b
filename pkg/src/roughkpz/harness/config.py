"""Study configuration and its JSON form."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

from ..config import SimConfig
from ..constants import (GaussianProfile, HeatWindowProfile, RaisedCosineProfile, TestFunction,
                         TimeProfile, c1_cutoff)

DEFAULT_EPS_GRID = tuple(2.0 ** -j for j in range(3, 9))

DEFAULT_TOLERANCES = {
    "variance_se": 3.0,          # MC variance vs exact value, in standard errors
    "cross_se": 3.0,             # chaos cross term vs 0
    "limit_rel": 0.02,           # exact variance vs its limit at the smallest eps
    "gauss_se": 3.0,             # fourth-moment ratio, in standard errors
    "gauss_abs": 0.05,           # fourth-moment ratio, absolute floor
    "y_se": 3.0,                 # Y mode variances vs limit
    "block_b_slack": 0.15,       # spatial block exponent
    "block_a_slack": 0.15,       # temporal block exponent
    "block_kappa": 0.05,
    "block_min_lag": 0.05,       # shortest lag used in the exponent fit
    "z_noise_free": 1e-6,        # Z distance with the noise switched off
    "decomposition": 1e-5,       # sup |h - X - Y - Z|
    "ch_ratio": 2.0,             # expected gap ratio under step halving
    "ch_ratio_slack": 0.2,       # relative slack on that ratio
    "se_rel_max": None,          # optional precision requirement on every estimator
}

_PROFILES = {"gaussian": GaussianProfile, "raised_cosine": RaisedCosineProfile,
             "heat_window": HeatWindowProfile}


def profile_from_dict(d: Mapping[str, Any]) -> TimeProfile:
    d = dict(d)
    kind = d.pop("kind")
    if kind not in _PROFILES:
        raise ValueError(f"unknown profile kind {kind!r}")
    return _PROFILES[kind](**{k: float(v) for k, v in d.items()})


def profile_to_dict(p: TimeProfile) -> dict:
    for name, cls in _PROFILES.items():
        if type(p) is cls:
            return {"kind": name, **{f.name: getattr(p, f.name) for f in fields(p)}}
    raise TypeError(f"unsupported profile {type(p).__name__}")


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def test_function_from_dict(d: Mapping[str, Any]) -> TestFunction:
    """``{"modes": [{"k": 0, "amplitude": a | [re, im], "profile": {...}}, ...]}``."""
    return TestFunction({int(m["k"]): (_complex(m["amplitude"]), profile_from_dict(m["profile"]))
                         for m in d["modes"]})


def test_function_to_dict(phi: TestFunction) -> dict:
    return {"modes": [{"k": k, "amplitude": [a.real, a.imag], "profile": profile_to_dict(p)}
                      for k, (a, p) in phi.modes.items()]}


test_function_from_dict.__test__ = False
test_function_to_dict.__test__ = False


@dataclass(frozen=True)
class StudyConfig:
    """Parameters shared by the Monte Carlo studies.

    Parameters
    ----------
    gamma : float
    eps_grid : tuple of float
        Ordered from the largest to the smallest scale.
    K_policy : dict
        ``{"tol": t, "margin": m}``: cutoff is the smallest ``K`` leaving a
        relative counterterm tail below ``t``, plus ``m``. ``{"K": n}`` fixes it.
    T, dt : float
        Solver horizon and step. ``dt=None`` uses the noise step ``eps^2/4``.
    noise_dt : float, optional
        Fixed noise step; by default the largest admissible multiple of ``dt``.
    replicas, block_size : int
        Replica count and the fixed size of the independently seeded blocks.
    seed, threads : int
        ``threads`` changes wall time only.
    """

    gamma: float = 0.5
    eps_grid: tuple = DEFAULT_EPS_GRID
    K_policy: Mapping[str, Any] = field(default_factory=lambda: {"tol": 1e-8, "margin": 0})
    T: float = 0.0625
    dt: float | None = None
    noise_dt: float | None = None
    replicas: int = 20000
    block_size: int = 2000
    seed: int = 0
    threads: int = 1
    theta: float = 0.1
    c1: Any = "exact"
    c2: Any = "zero"
    psi: Mapping[int, complex] = field(default_factory=dict)
    test_functions: tuple = ()
    psi_test: TestFunction | None = None
    probe_points: tuple = ((0.5, 0), (0.5, 1))
    pairs: tuple = ((0.0, 0.05), (0.0, 0.1), (0.0, 0.2), (0.0, 0.4))
    js: tuple = (2, 3, 4, 5, 6)
    block_field: str = "Xbar"
    record_every: int | None = None
    sampler_tail_tol: float = 1e-6
    tolerances: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "eps_grid", tuple(float(e) for e in self.eps_grid))
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(self.tolerances)
        object.__setattr__(self, "tolerances", tol)
        object.__setattr__(self, "psi", {int(k): complex(v) for k, v in self.psi.items()})
        object.__setattr__(self, "test_functions", tuple(self.test_functions))
        if self.block_size < 1:
            raise ValueError("block_size must be positive")

    def tol(self, name: str):
        return self.tolerances[name]

    def cutoff(self, eps: float) -> int:
        if "K" in self.K_policy:
            return int(self.K_policy["K"])
        return c1_cutoff(self.gamma, eps, float(self.K_policy.get("tol", 1e-8))) + int(
            self.K_policy.get("margin", 0))

    def steps(self, eps: float) -> tuple[float, float]:
        """Solver and noise steps at scale ``eps``."""
        limit = eps * eps / 4.0
        if self.noise_dt is not None:
            return (self.dt if self.dt is not None else self.noise_dt), self.noise_dt
        if self.dt is None:
            n = max(1, math.ceil(self.T / limit - 1e-9))
            return self.T / n, self.T / n
        n_total = int(round(self.T / self.dt))
        best = 1
        for sub in range(1, n_total + 1):
            if sub * self.dt > limit * (1 + 1e-12):
                break
            if n_total % sub == 0:
                best = sub
        return self.dt, best * self.dt

    def sim_config(self, eps: float, **changes) -> SimConfig:
        dt, noise_dt = self.steps(eps)
        kw = dict(gamma=self.gamma, eps=eps, K=self.cutoff(eps), T=self.T, dt=dt,
                  noise_dt=noise_dt, theta=self.theta, c1=self.c1, c2=self.c2, psi=self.psi,
                  seed=self.seed, cutoff_tol=float(self.K_policy.get("tol", 1e-8)),
                  strict_cutoff="K" not in self.K_policy)
        kw.update(changes)
        return SimConfig(**kw)

    def replace(self, **changes) -> "StudyConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        """Echo of every setting that influences results (``threads`` excluded)."""
        return {
            "gamma": self.gamma, "eps_grid": list(self.eps_grid), "K_policy": dict(self.K_policy),
            "T": self.T, "dt": self.dt, "noise_dt": self.noise_dt, "replicas": self.replicas,
            "block_size": self.block_size,
            "seed": self.seed, "theta": self.theta,
            "counterterms": {"c1": self.c1, "c2": self.c2},
            "psi": {str(k): [v.real, v.imag] for k, v in sorted(self.psi.items())},
            "test_functions": [test_function_to_dict(p) for p in self.test_functions],
            "psi_test": None if self.psi_test is None else test_function_to_dict(self.psi_test),
            "probe_points": [list(p) for p in self.probe_points],
            "pairs": [list(p) for p in self.pairs], "js": list(self.js),
            "block_field": self.block_field, "record_every": self.record_every,
            "sampler_tail_tol": self.sampler_tail_tol,
            "tolerances": dict(self.tolerances),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "StudyConfig":
        d = dict(d)
        kw: dict[str, Any] = {}
        simple = ("gamma", "T", "dt", "noise_dt", "replicas", "block_size", "seed", "threads", "theta",
                  "block_field", "record_every", "sampler_tail_tol")
        for name in simple:
            if name in d:
                kw[name] = d.pop(name)
        if "eps_grid" in d:
            kw["eps_grid"] = tuple(d.pop("eps_grid"))
        if "K_policy" in d:
            pol = d.pop("K_policy")
            kw["K_policy"] = {"K": int(pol)} if isinstance(pol, (int, float)) else dict(pol)
        if "counterterms" in d:
            ct = d.pop("counterterms")
            kw["c1"] = ct.get("c1", "exact")
            kw["c2"] = ct.get("c2", "zero")
        if "psi" in d:
            psi = d.pop("psi")
            modes = psi.get("modes", psi) if isinstance(psi, dict) else psi
            kw["psi"] = {int(k): _complex(v) for k, v in modes.items()}
        if "test_functions" in d:
            kw["test_functions"] = tuple(test_function_from_dict(t) for t in d.pop("test_functions"))
        if d.get("psi_test") is not None:
            kw["psi_test"] = test_function_from_dict(d.pop("psi_test"))
        d.pop("psi_test", None)
        for name in ("probe_points", "pairs", "js"):
            if name in d:
                kw[name] = tuple(tuple(p) if isinstance(p, list) else p for p in d.pop(name))
        if "tolerances" in d:
            kw["tolerances"] = dict(d.pop("tolerances"))
        if d:
            raise ValueError(f"unknown config keys {sorted(d)}")
        return cls(**kw)


def load_config(path: str | os.PathLike) -> StudyConfig:
    with open(path, encoding="utf-8") as fh:
        return StudyConfig.from_dict(json.load(fh))
