"""Monte Carlo studies of the tested noise, the Duhamel term and the remainder."""

from __future__ import annotations

import math
import time
from typing import Sequence

import numpy as np

from ..constants import (HeatWindowProfile, TestFunction, c_squared, variance_exact,
                         xi_variance)
from ..errors import InvalidDuration
from ..mollifier import MollifierTable, default_table
from ..noise import NoisePath, SeedLineage, complex_normal, ou_variance, sample_X_trajectory
from ..solvers import deterministic_kpz, solve_coupled, solve_Y
from ..sparse import QuadraticProbe, SparseChaosSampler, combine, linear_probes_for, probes_for
from ..spectral import FOUR_PI2, DyadicPartition, besov_norms, modes_to_grid
from .config import StudyConfig
from .report import Row, StudyReport, Trend
from .stats import (check_precision, fourth_moment_ratio, mean_se, quantile_se, regress,
                    run_blocks, second_moment_se)


def _lineage(cfg: StudyConfig, study: str) -> SeedLineage:
    return SeedLineage(cfg.seed, (study,))


def _finish(report: StudyReport, start: float) -> StudyReport:
    report.runtime = time.perf_counter() - start
    return report


def _as_list(phi) -> list[TestFunction]:
    if phi is None:
        return []
    return [phi] if isinstance(phi, TestFunction) else list(phi)


# -- tested noise -------------------------------------------------------------

def _chaos_samples(cfg: StudyConfig, eps: float, phis: list[TestFunction],
                   psi: TestFunction | None, lineage: SeedLineage, replicas: int,
                   table: MollifierTable) -> np.ndarray:
    """Columns ``xi_tilde(phi_i)`` for each ``phi_i``, then ``xi(psi)`` if given."""
    active = [p for p in phis if not p.is_zero]
    quad = [probe for p in active for probe in probes_for(p)]
    lin = linear_probes_for(psi) if psi is not None else []
    sampler = SparseChaosSampler(eps, cfg.gamma, quad, lin, tail_tol=cfg.sampler_tail_tol,
                                 table=table)
    n_cols = len(phis) + (psi is not None)

    def task(rng, b, count):
        out = sampler.sample(rng, count)
        cols = np.zeros((count, n_cols))
        off = 0
        for i, p in enumerate(phis):
            if p.is_zero:
                continue
            n = len(p.modes)
            cols[:, i] = combine(out["quadratic"][:, off:off + n], p)
            off += n
        if psi is not None:
            cols[:, -1] = combine(out["linear"], psi)
        return cols

    return run_blocks(task, lineage, replicas, cfg.block_size, cfg.threads)


def run_variance_study(cfg: StudyConfig, phi, psi_test: TestFunction | None = None,
                       eps_grid: Sequence[float] | None = None, replicas: int | None = None,
                       table: MollifierTable | None = None) -> StudyReport:
    """Variance of ``Phi = xi(psi) + xi_tilde(phi)`` against its exact and limit values.

    Parameters
    ----------
    phi : TestFunction or sequence of TestFunction
        Each test function is paired with the same ``psi_test``.
    psi_test : TestFunction, optional

    Rows per ``eps`` and test function ``i``: ``var_xi_tilde[i]`` against
    :func:`variance_exact`, ``exact_vs_limit[i]`` (``variance_exact`` against
    ``c^2 ||phi||^2``, gated at the smallest ``eps``), and with ``psi_test``
    also ``var_xi``, ``var_Phi[i]`` and ``cross[i]``.
    """
    start = time.perf_counter()
    table = table or default_table()
    phis = _as_list(phi)
    eps_grid = tuple(cfg.eps_grid if eps_grid is None else eps_grid)
    replicas = cfg.replicas if replicas is None else replicas
    lineage = _lineage(cfg, "variance")
    c2 = c_squared(cfg.gamma)
    k_var, k_cross, rel = cfg.tol("variance_se"), cfg.tol("cross_se"), cfg.tol("limit_rel")
    se_max = cfg.tol("se_rel_max")
    report = StudyReport("variance", cfg.gamma, list(eps_grid), seed_lineage=lineage.to_list(),
                         config=cfg.to_dict())
    smallest = min(eps_grid, default=None)
    for ie, eps in enumerate(eps_grid):
        data = _chaos_samples(cfg, eps, phis, psi_test, lineage.child(ie), replicas, table)
        xi_target = xi_variance(psi_test, eps, table) if psi_test is not None else 0.0
        if psi_test is not None:
            est, se = second_moment_se(data[:, -1])
            check_precision(se, xi_target, se_max, "var_xi")
            report.rows.append(Row(eps, "var_xi", replicas, est, se, xi_target, "se", k_var))
        for i, p in enumerate(phis):
            exact = variance_exact(p, eps, cfg.gamma, table=table) if not p.is_zero else 0.0
            if not p.is_zero:
                est, se = second_moment_se(data[:, i])
                check_precision(se, exact, se_max, f"var_xi_tilde[{i}]")
                report.rows.append(Row(eps, f"var_xi_tilde[{i}]", replicas, est, se, exact,
                                       "se", k_var))
                limit = c2 * p.l2_squared()
                gated = eps == smallest
                report.rows.append(Row(eps, f"exact_vs_limit[{i}]", replicas, exact, 0.0, limit,
                                       "rel" if gated else "report", rel if gated else None))
            if psi_test is not None:
                total = data[:, i] + data[:, -1]
                est, se = second_moment_se(total)
                report.rows.append(Row(eps, f"var_Phi[{i}]", replicas, est, se,
                                       xi_target + exact, "se", k_var))
                est, se = mean_se(data[:, i] * data[:, -1])
                report.rows.append(Row(eps, f"cross[{i}]", replicas, est, se, 0.0, "se", k_cross))
    for i, p in enumerate(phis):
        rows = report.rows_for(f"exact_vs_limit[{i}]")
        if len(rows) >= 2:
            report.trends.append(Trend(f"exact_vs_limit[{i}]", "dev_decrease", rows[0].eps,
                                       rows[-1].eps, rows[0].estimate / rows[0].target - 1.0,
                                       rows[-1].estimate / rows[-1].target - 1.0))
    return _finish(report, start)


def run_gaussianity_study(cfg: StudyConfig, phi: TestFunction,
                          eps_grid: Sequence[float] | None = None, replicas: int | None = None,
                          psi_test: TestFunction | None = None,
                          table: MollifierTable | None = None) -> StudyReport:
    """Fourth-moment ratio ``E Phi^4 / (3 (E Phi^2)^2)`` along the grid.

    ``Phi = xi_tilde(phi)``, plus ``xi(psi_test)`` when given. The ratio is
    gated at the smallest ``eps`` by ``max(k SE, floor)``; for a purely
    Gaussian ``Phi`` (``phi`` zero) every grid point is gated by ``k SE``.
    A ``dev_decrease`` trend compares ``ratio - 1`` at the grid endpoints.
    """
    start = time.perf_counter()
    table = table or default_table()
    eps_grid = tuple(cfg.eps_grid if eps_grid is None else eps_grid)
    replicas = cfg.replicas if replicas is None else replicas
    lineage = _lineage(cfg, "gaussianity")
    k_se, floor = cfg.tol("gauss_se"), cfg.tol("gauss_abs")
    report = StudyReport("gaussianity", cfg.gamma, list(eps_grid),
                         seed_lineage=lineage.to_list(), config=cfg.to_dict())
    smallest = min(eps_grid, default=None)
    gaussian = phi.is_zero
    for ie, eps in enumerate(eps_grid):
        data = _chaos_samples(cfg, eps, [phi], psi_test, lineage.child(ie), replicas, table)
        total = data.sum(axis=1)
        r, se = fourth_moment_ratio(total)
        check_precision(se, 1.0, cfg.tol("se_rel_max"), "ratio")
        if gaussian:
            rule, thr = "se", k_se
        elif eps == smallest:
            rule, thr = "se_or_abs", (k_se, floor)
        else:
            rule, thr = "report", None
        report.rows.append(Row(eps, "ratio", replicas, r, se, 1.0, rule, thr))
        var, vse = second_moment_se(total)
        report.rows.append(Row(eps, "variance", replicas, var, vse, None))
    rows = report.rows_for("ratio")
    if len(rows) >= 2 and not gaussian:
        report.trends.append(Trend("ratio", "dev_decrease", rows[0].eps, rows[-1].eps,
                                   rows[0].estimate - 1.0, rows[-1].estimate - 1.0))
    return _finish(report, start)


# -- Duhamel term -------------------------------------------------------------

def y_limit_variance(gamma: float, t: float, k: int) -> float:
    """``E|Y0_k(t)|^2``: ``c^2 t`` for ``k = 0``, else ``c^2 (1 - e^{-8 pi^2 k^2 t})/(8 pi^2 k^2)``."""
    c2 = c_squared(gamma)
    if k == 0:
        return c2 * t
    rate = 2.0 * FOUR_PI2 * k * k
    return c2 * -math.expm1(-rate * t) / rate


def _aligned_step(times: Sequence[float], rate: float = 0.0) -> float:
    """Grid step dividing every probe time, below ``1/(16 pi^2)`` and ``1/(8 rate)``."""
    t_min = min(times)
    n = max(64, math.ceil(t_min * 16.0 * math.pi ** 2), math.ceil(8.0 * rate * t_min))
    dt = t_min / n
    for t in times:
        if abs(t / dt - round(t / dt)) > 1e-6:
            raise InvalidDuration("probe times must be integer multiples of the smallest one")
    return dt


def run_Y_limit_study(cfg: StudyConfig, eps_grid: Sequence[float] | None = None,
                      replicas: int | None = None, probe_points=None,
                      table: MollifierTable | None = None) -> StudyReport:
    """Variance of the Fourier modes of ``Y`` at probe points ``(t, k)``.

    ``Y(t)_k`` is the Duhamel integral of the centred forcing, i.e. the
    quadratic probe with profile ``exp(-4 pi^2 k^2 (t - s))`` on ``[0, t]``
    and no temporal mollification. Targets are the limit variances of
    :func:`y_limit_variance`, gated at the smallest ``eps``. Rows
    ``var_Y_finite`` compare the same estimates with the exact variance at
    the given ``eps`` and are gated everywhere.
    """
    start = time.perf_counter()
    table = table or default_table()
    eps_grid = tuple(cfg.eps_grid if eps_grid is None else eps_grid)
    replicas = cfg.replicas if replicas is None else replicas
    points = [(float(t), int(k)) for t, k in (cfg.probe_points if probe_points is None
                                             else probe_points)]
    lineage = _lineage(cfg, "y_limit")
    k_se = cfg.tol("y_se")
    report = StudyReport("y_limit", cfg.gamma, list(eps_grid), seed_lineage=lineage.to_list(),
                         config=cfg.to_dict())
    smallest = min(eps_grid, default=None)
    live = [(t, k) for t, k in points if t > 0]
    dt = _aligned_step([t for t, _ in live], max(FOUR_PI2 * k * k for _, k in live)) \
        if live else None
    for ie, eps in enumerate(eps_grid):
        for t, k in points:
            if t <= 0:
                report.rows.append(Row(eps, f"var_Y[t={t:g},k={k}]", replicas, 0.0, 0.0, 0.0,
                                       "abs", 0.0))
        if not live:
            continue
        probes = [QuadraticProbe(k, HeatWindowProfile(t, FOUR_PI2 * k * k), mollify=False)
                  for t, k in live]
        sampler = SparseChaosSampler(eps, cfg.gamma, probes, dt=dt,
                                     tail_tol=cfg.sampler_tail_tol, table=table)

        def task(rng, b, count, sampler=sampler):
            return sampler.sample(rng, count)["quadratic"]

        data = run_blocks(task, lineage.child(ie), replicas, cfg.block_size, cfg.threads)
        for j, (t, k) in enumerate(live):
            target = y_limit_variance(cfg.gamma, t, k)
            est, se = second_moment_se(data[:, j])
            check_precision(se, target, cfg.tol("se_rel_max"), "var_Y")
            gated = eps == smallest
            report.rows.append(Row(eps, f"var_Y[t={t:g},k={k}]", replicas, est, se, target,
                                   "se" if gated else "report", k_se if gated else None))
            probe_fn = TestFunction({k: (1.0, probes[j].profile)})
            finite = variance_exact(probe_fn, eps, cfg.gamma, table=table,
                                    temporal_mollify=False) / probe_fn.multiplicity(k)
            report.rows.append(Row(eps, f"var_Y_finite[t={t:g},k={k}]", replicas, est, se,
                                   finite, "se", k_se))
            m, mse = mean_se(data[:, j].real)
            report.rows.append(Row(eps, f"mean_Y[t={t:g},k={k}]", replicas, m, mse, 0.0))
    return _finish(report, start)


# -- remainder ------------------------------------------------------------------

def heat_flow(psi_modes: np.ndarray, times) -> np.ndarray:
    """Modes of the heat flow of ``psi`` at ``times``."""
    K = psi_modes.shape[-1] - 1
    k2 = np.arange(K + 1, dtype=float) ** 2
    return np.exp(-FOUR_PI2 * np.outer(times, k2)) * psi_modes


def run_Z_convergence_study(cfg: StudyConfig, psi=None, eps_grid: Sequence[float] | None = None,
                            replicas: int | None = None, zero_noise: bool = False,
                            n_points: int = 16,
                            table: MollifierTable | None = None) -> StudyReport:
    """Hoelder-Besov distance of ``Z`` from the heat flow of ``psi``.

    Per replica the distance is ``sup_t ||Z(t) - Zbar(t)||_theta`` over the
    recorded times. Rows per ``eps``: ``median_dist`` and ``p90_dist`` with
    order-statistic errors, ``zero_mode_drift`` and the largest z-score of
    the terminal mean field against ``Zbar(T)`` over ``n_points`` points
    (both informational). The trend compares medians at the grid endpoints.

    With ``zero_noise`` the forcing is switched off, ``C1 = 0`` and the
    reference is the exact noise-free solution, so the distance measures the
    solver defect; it is gated by the ``z_noise_free`` tolerance.
    """
    start = time.perf_counter()
    table = table or default_table()
    eps_grid = tuple(cfg.eps_grid if eps_grid is None else eps_grid)
    replicas = cfg.replicas if replicas is None else replicas
    psi = cfg.psi if psi is None else {int(k): complex(v) for k, v in psi.items()}
    lineage = _lineage(cfg, "z_convergence")
    report = StudyReport("z_convergence", cfg.gamma, list(eps_grid),
                         seed_lineage=lineage.to_list(), config=dict(cfg.to_dict(),
                         psi={str(k): [v.real, v.imag] for k, v in sorted(psi.items())},
                         zero_noise=zero_noise))
    for ie, eps in enumerate(eps_grid):
        extra = {"c1": 0.0} if zero_noise else {}
        sim = cfg.sim_config(eps, psi=psi, **extra)
        every = cfg.record_every or max(1, sim.n_steps // 16)
        part = DyadicPartition(sim.K)
        psi_modes = sim.psi_modes()
        x = np.arange(n_points) / n_points
        eps_lineage = lineage.child(ie)

        def task(rng, b, count, sim=sim, every=every, part=part, psi_modes=psi_modes,
                 eps_lineage=eps_lineage):
            out = np.zeros((count, 1 + n_points))
            for j in range(count):
                path = NoisePath(sim, eps_lineage.child(b * cfg.block_size + j), table,
                                 zero=zero_noise)
                bundle = solve_coupled(path, sim, components=("Z",), record_every=every)
                Z = bundle.Z
                if zero_noise:
                    n_grid = 8 * sim.K
                    ref = deterministic_kpz(psi_modes, sim.lam, Z.times, n_grid)
                    out[j, 0] = np.abs(modes_to_grid(Z.modes, n_grid) - ref).max()
                else:
                    diff = Z.modes - heat_flow(psi_modes, Z.times)
                    out[j, 0] = besov_norms(diff, sim.theta, part).max()
                out[j, 1:] = _point_values(Z.modes[-1], x)
            return out

        data = run_blocks(task, eps_lineage, replicas, cfg.block_size, cfg.threads)
        dist = data[:, 0]
        if zero_noise:
            report.rows.append(Row(eps, "noise_free_defect", replicas, float(dist.max()), 0.0, 0.0,
                                   "abs", cfg.tol("z_noise_free")))
            continue
        med, mse = quantile_se(dist, 0.5)
        report.rows.append(Row(eps, "median_dist", replicas, med, mse, None))
        p90, pse = quantile_se(dist, 0.9)
        report.rows.append(Row(eps, "p90_dist", replicas, p90, pse, None))
        zbar_T = _point_values(heat_flow(psi_modes, [sim.T])[0], x)
        means = data[:, 1:].mean(axis=0)
        ses = data[:, 1:].std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else \
            np.full(n_points, np.inf)
        drift, dse = mean_se(data[:, 1:].mean(axis=1) - zbar_T.mean()) if replicas > 1 else (
            float(means.mean() - zbar_T.mean()), math.inf)
        report.rows.append(Row(eps, "zero_mode_drift", replicas, drift, dse, 0.0))
        zscores = np.abs(means - zbar_T) / np.where(ses > 0, ses, np.inf)
        i = int(np.argmax(zscores))
        report.rows.append(Row(eps, "mean_field_worst_point", replicas, float(means[i]),
                               float(ses[i]), float(zbar_T[i])))
    rows = report.rows_for("median_dist")
    if len(rows) >= 2:
        report.trends.append(Trend("median_dist", "decrease", rows[0].eps, rows[-1].eps,
                                   rows[0].estimate, rows[-1].estimate))
    return _finish(report, start)


def _point_values(modes: np.ndarray, x: np.ndarray) -> np.ndarray:
    k = np.arange(modes.shape[-1])
    phase = np.exp(2j * np.pi * np.outer(x, k[1:]))
    return modes[0].real + 2.0 * np.real(phase @ modes[1:])


# -- block moments ----------------------------------------------------------------

def _xbar_increments(eps, K, pairs, rng, count, table):
    """Mode increments of the space-mollified OU field without ``D^gamma``."""
    k = np.arange(1, K + 1, dtype=float)
    amp = table.scaled_rho_hat(eps, k)
    times = sorted({float(t) for p in pairs for t in p})
    state = complex_normal(rng, (count, K), ou_variance(k))
    values = {times[0]: state}
    for t0, t1 in zip(times[:-1], times[1:]):
        state = np.exp(-FOUR_PI2 * k * k * (t1 - t0)) * state + complex_normal(
            rng, (count, K), ou_variance(k, t1 - t0))
        values[t1] = state
    return [amp * (values[float(t)] - values[float(s)]) for s, t in pairs]


def run_block_moment_scan(cfg: StudyConfig, V: str | None = None,
                          eps_grid: Sequence[float] | None = None, pairs=None, js=None,
                          replicas: int | None = None,
                          table: MollifierTable | None = None) -> StudyReport:
    """Second moments of Littlewood-Paley blocks of time increments.

    ``m_j(s, t) = E (Delta_j (V(t) - V(s))(x))^2`` is estimated through the
    spatial average ``sum_k chi_j(k)^2 |dV_k|^2``, which has the same mean by
    stationarity in ``x``. ``log m`` is regressed on ``log|t - s|`` and
    ``j log 2`` over lags of at least ``block_min_lag``; the fitted exponents
    ``a`` and ``b`` of ``m ~ |t-s|^{2a} 2^{-2jb}`` are compared with
    ``kappa/2`` and ``(1 - 3 kappa)/2`` at the smallest ``eps`` when
    ``V = "Xbar"``.

    Parameters
    ----------
    V : {"Xbar", "Y"}
        ``Xbar`` is the space-mollified OU field without ``D^gamma``, sampled
        exactly. ``Y`` uses stored linear trajectories and the Duhamel solver.
    """
    start = time.perf_counter()
    table = table or default_table()
    V = cfg.block_field if V is None else V
    if V not in ("Xbar", "Y"):
        raise ValueError(f"unknown field {V!r}")
    eps_grid = tuple(cfg.eps_grid if eps_grid is None else eps_grid)
    pairs = [(float(s), float(t)) for s, t in (cfg.pairs if pairs is None else pairs)]
    js = [int(j) for j in (cfg.js if js is None else js)]
    replicas = cfg.replicas if replicas is None else replicas
    lineage = _lineage(cfg, f"block_{V}")
    kappa = cfg.tol("block_kappa")
    report = StudyReport(f"block_{V}", cfg.gamma, list(eps_grid), seed_lineage=lineage.to_list(),
                         config=dict(cfg.to_dict(), block_field=V))
    smallest = min(eps_grid, default=None)
    for ie, eps in enumerate(eps_grid):
        if V == "Xbar":
            K = 2 ** (max(js) + 1)
        else:
            K = cfg.cutoff(eps)
        part = DyadicPartition(K)
        chi2 = np.array([part.weights(j) ** 2 for j in js])
        chi2[:, 1:] *= 2.0

        if V == "Xbar":
            def task(rng, b, count, eps=eps, K=K, chi2=chi2):
                incs = _xbar_increments(eps, K, pairs, rng, count, table)
                return np.stack([(np.abs(d) ** 2) @ chi2[:, 1:].T for d in incs], axis=1)
        else:
            t_max = max(t for p in pairs for t in p)
            sim = cfg.sim_config(eps, T=t_max)

            def task(rng, b, count, sim=sim, chi2=chi2):
                out = np.zeros((count, len(pairs), len(js)))
                for r in range(count):
                    X, _ = sample_X_trajectory(sim, rng, table)
                    Y = solve_Y(X, sim)
                    idx = {float(t): int(round(t / sim.dt)) for p in pairs for t in p}
                    for ip, (s, t) in enumerate(pairs):
                        d = Y.modes[idx[t]] - Y.modes[idx[s]]
                        out[r, ip] = chi2 @ (np.abs(d) ** 2)
                return out

        data = run_blocks(task, lineage.child(ie), replicas, cfg.block_size, cfg.threads)
        fit_rows = []
        for ip, (s, t) in enumerate(pairs):
            for jj, j in enumerate(js):
                est, se = mean_se(data[:, ip, jj])
                report.rows.append(Row(eps, f"m[j={j},s={s:g},t={t:g}]", replicas, est, se, None))
                if abs(t - s) >= cfg.tol("block_min_lag") and est > 0:
                    fit_rows.append((abs(t - s), j, est, se))
        if len(fit_rows) < 4:
            continue
        lag, j_arr, m, se = (np.array(c, dtype=float) for c in zip(*fit_rows))
        design = np.column_stack([np.ones_like(lag), np.log(lag), j_arr * math.log(2.0)])
        weights = (m / np.maximum(se, 1e-300)) ** 2
        coef, coef_se = regress(design, np.log(m), weights)
        gated = V == "Xbar" and eps == smallest
        report.rows.append(Row(eps, "a", replicas, coef[1] / 2.0, coef_se[1] / 2.0, kappa / 2.0,
                               "abs" if gated else "report",
                               cfg.tol("block_a_slack") if gated else None))
        report.rows.append(Row(eps, "b", replicas, -coef[2] / 2.0, coef_se[2] / 2.0,
                               (1.0 - 3.0 * kappa) / 2.0, "abs" if gated else "report",
                               cfg.tol("block_b_slack") if gated else None))
    return _finish(report, start)


# -- solver cross-checks ------------------------------------------------------------

def run_solver_study(cfg: StudyConfig, eps: float | None = None, replicas: int | None = None,
                     dts: Sequence[float] | None = None,
                     table: MollifierTable | None = None) -> StudyReport:
    """Decomposition identity and Cole-Hopf agreement on coupled noise.

    For each replica and each step in ``dts`` (default ``dt`` and ``dt/2``)
    the full equation is solved directly and through the Cole-Hopf variable
    on one shared noise path. Rows: ``decomposition[dt]`` (largest
    ``sup |h - X - Y - Z|``), ``min_u[dt]``, per-replica terminal gaps and
    their ratios under step halving, gated at ``ch_ratio`` with relative
    slack ``ch_ratio_slack``.
    """
    start = time.perf_counter()
    table = table or default_table()
    eps = cfg.eps_grid[0] if eps is None else float(eps)
    replicas = cfg.replicas if replicas is None else replicas
    base = cfg.steps(eps)[0]
    dts = [base, base / 2.0] if dts is None else [float(d) for d in dts]
    lineage = _lineage(cfg, "solver")
    report = StudyReport("solver", cfg.gamma, [eps], seed_lineage=lineage.to_list(),
                         config=dict(cfg.to_dict(), dts=list(dts)))
    noise_dt = cfg.steps(eps)[1]
    sims = [cfg.sim_config(eps, dt=d, noise_dt=noise_dt) for d in dts]

    def task(rng, b, count):
        out = np.zeros((count, len(dts), 3))
        for j in range(count):
            rep = lineage.child(b * cfg.block_size + j)
            for i, sim in enumerate(sims):
                path = NoisePath(sim, rep, table)
                bundle = solve_coupled(path, sim, components=("X", "Y", "Z", "h", "u"),
                                       record_every=max(1, sim.n_steps // 10))
                n = bundle.diagnostics["cole_hopf_grid"]
                direct = modes_to_grid(bundle.h.modes[-1], n)
                gap = np.abs(direct - bundle.diagnostics["h_cole_hopf"][-1]).max()
                out[j, i] = (bundle.decomposition_defect(), bundle.diagnostics["min_u"], gap)
        return out

    data = run_blocks(task, lineage.child("runs"), replicas, cfg.block_size, cfg.threads)
    for i, d in enumerate(dts):
        report.rows.append(Row(eps, f"decomposition[dt={d:g}]", replicas,
                               float(data[:, i, 0].max()), 0.0, 0.0, "abs",
                               cfg.tol("decomposition")))
        report.rows.append(Row(eps, f"min_u[dt={d:g}]", replicas, float(data[:, i, 1].min()),
                               0.0, None))
    for r in range(replicas):
        for i in range(len(dts) - 1):
            ratio = data[r, i, 2] / data[r, i + 1, 2]
            report.rows.append(Row(eps, f"gap_ratio[r={r},dt={dts[i]:g}]", 1, float(ratio), 0.0,
                                   cfg.tol("ch_ratio"), "rel", cfg.tol("ch_ratio_slack")))
        for i, d in enumerate(dts):
            report.rows.append(Row(eps, f"gap[r={r},dt={d:g}]", 1, float(data[r, i, 2]), 0.0,
                                   None))
    return _finish(report, start)
