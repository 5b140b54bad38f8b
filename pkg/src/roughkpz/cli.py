"""Command line interface: ``roughkpz <subcommand>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .constants import (GaussianProfile, TestFunction, c_squared, constants_report)
from .harness import (StudyConfig, emit_report, load_config, run_block_moment_scan,
                      run_gaussianity_study, run_solver_study, run_variance_study,
                      run_Y_limit_study, run_Z_convergence_study)
from .harness.report import csv_text, dumps
from .mollifier import default_table
from .noise import NoisePath, SeedLineage
from .solvers import solve_coupled


def default_phis() -> list[TestFunction]:
    """A zero-mode and a mode-2 test function with Gaussian time profiles."""
    prof = GaussianProfile(0.5, 0.02)
    return [TestFunction({0: (1.0, prof)}), TestFunction({2: (1.0, prof)})]


def default_gauss_phi() -> TestFunction:
    return TestFunction({0: (1.0, GaussianProfile(0.5, 0.01))})


def default_psi_test() -> TestFunction:
    return TestFunction({1: (1.0, GaussianProfile(0.5, 0.02))})


def point_values(modes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Field values at arbitrary points ``x`` for modes of shape ``(..., K + 1)``."""
    k = np.arange(1, modes.shape[-1])
    phase = np.exp(2j * np.pi * np.outer(x, k))
    return modes[..., :1].real + 2.0 * np.real(modes[..., 1:] @ phase.T)


def _study_config(args) -> StudyConfig:
    cfg = load_config(args.config) if args.config else StudyConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.replicas is not None:
        changes["replicas"] = args.replicas
    if args.threads is not None:
        changes["threads"] = args.threads
    if getattr(args, "gamma", None) is not None:
        changes["gamma"] = args.gamma
    if getattr(args, "eps_grid", None):
        changes["eps_grid"] = tuple(args.eps_grid)
    return cfg.replace(**changes) if changes else cfg


def _finish(report, args) -> int:
    emit_report(report, args.out)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{report.study}: {verdict} ({len(report.rows)} rows, {report.runtime:.1f} s) -> {args.out}")
    return 0 if report.passed else 1


# -- subcommands ----------------------------------------------------------------

def cmd_constants(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gamma = args.gamma if args.gamma is not None else 0.5
    grid = args.eps_grid or [2.0 ** -j for j in range(3, 9)]
    reports = [constants_report(gamma, e, tuple(args.ks)) for e in grid]
    (out / "constants.json").write_text(dumps([r.to_dict() for r in reports]))
    header = ["eps", "C1", "scaled_C1"] + [f"mass_k{k}" for k in args.ks] + ["c_squared"]
    rows = [[r.eps, r.C1, r.diagnostics["scaled_C1"]] + [r.mu_masses[k] for k in args.ks]
            + [r.c_squared] for r in reports]
    (out / "constants.csv").write_text(csv_text(header, rows))
    print(f"constants: gamma={gamma} c^2={c_squared(gamma):.17g} -> {out}")
    return 0


def cmd_mollifier_table(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    q = np.arange(0.0, args.q_max + 0.5 * args.step, args.step)
    values = default_table().rho_hat(q)
    (out / "mollifier.csv").write_text(csv_text(["q", "rho_hat"], zip(q.tolist(), values.tolist())))
    print(f"mollifier-table: {q.size} rows -> {out}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _study_config(args)
    eps = args.eps if args.eps is not None else cfg.eps_grid[0]
    sim = cfg.sim_config(eps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lineage = SeedLineage(cfg.seed, ("simulate",))
    comps = ("X", "Y", "Z", "h") + (("u",) if args.cole_hopf else ())
    every = max(1, sim.n_steps // max(args.snapshots, 1))
    bundle = solve_coupled(NoisePath(sim, lineage), sim, components=comps, record_every=every)
    x = np.arange(args.n_x) / args.n_x
    for name in ("X", "Y", "Z", "h"):
        traj = getattr(bundle, name)
        grid = point_values(traj.modes, x)
        rows = ((t, xi, v) for t, row in zip(traj.times.tolist(), grid.tolist())
                for xi, v in zip(x.tolist(), row))
        (out / f"{name}.csv").write_text(csv_text(["t", "x", "value"], rows))
        if args.dump_modes:
            mrows = ((t, k, z.real, z.imag) for t, row in zip(traj.times.tolist(), traj.modes)
                     for k, z in enumerate(row.tolist()))
            (out / f"{name}_modes.csv").write_text(csv_text(["t", "k", "re", "im"], mrows))
    manifest = {"sim_config": sim.to_dict(), "seed_lineage": lineage.to_list(),
                "record_every": every, "decomposition_defect": bundle.decomposition_defect()}
    if args.cole_hopf:
        manifest["min_u"] = bundle.diagnostics["min_u"]
    (out / "manifest.json").write_text(dumps(manifest))
    print(f"simulate: eps={eps} K={sim.K} steps={sim.n_steps} -> {out}")
    return 0


def cmd_verify_variance(args) -> int:
    cfg = _study_config(args)
    phis = list(cfg.test_functions) or default_phis()
    psi = cfg.psi_test if cfg.psi_test is not None else default_psi_test()
    return _finish(run_variance_study(cfg, phis, psi), args)


def cmd_verify_gaussianity(args) -> int:
    cfg = _study_config(args)
    phi = cfg.test_functions[0] if cfg.test_functions else default_gauss_phi()
    return _finish(run_gaussianity_study(cfg, phi, psi_test=cfg.psi_test), args)


def cmd_verify_y_limit(args) -> int:
    return _finish(run_Y_limit_study(_study_config(args)), args)


def cmd_verify_z(args) -> int:
    cfg = _study_config(args)
    psi = cfg.psi or {1: 0.5}
    return _finish(run_Z_convergence_study(cfg, psi), args)


def cmd_block_scan(args) -> int:
    cfg = _study_config(args)
    return _finish(run_block_moment_scan(cfg, args.field), args)


def cmd_verify_solver(args) -> int:
    cfg = _study_config(args)
    return _finish(run_solver_study(cfg, args.eps), args)


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roughkpz", description=__doc__)
    p.add_argument("--config", help="JSON study configuration")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--replicas", type=int, help="number of replicas")
    p.add_argument("--threads", type=int, help="worker threads (wall time only)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, grid=True):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=fn)
        if grid:
            sp.add_argument("--gamma", type=float)
            sp.add_argument("--eps-grid", type=float, nargs="+")
        return sp

    sp = add("constants", cmd_constants, "counterterms and limit constants")
    sp.add_argument("--ks", type=int, nargs="+", default=[0, 1])
    sp = add("mollifier-table", cmd_mollifier_table, "dump (q, rho_hat(q))", grid=False)
    sp.add_argument("--q-max", type=float, default=40.0)
    sp.add_argument("--step", type=float, default=0.25)
    sp = add("simulate", cmd_simulate, "one coupled run of X, Y, Z and h")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--n-x", type=int, default=64)
    sp.add_argument("--snapshots", type=int, default=16)
    sp.add_argument("--cole-hopf", action="store_true")
    sp.add_argument("--dump-modes", action="store_true", help="also write (t, k, re, im) CSVs")
    add("verify-variance", cmd_verify_variance, "variance of tested noise")
    add("verify-gaussianity", cmd_verify_gaussianity, "fourth-moment ratio")
    add("verify-y-limit", cmd_verify_y_limit, "mode variances of Y")
    add("verify-z", cmd_verify_z, "convergence of the remainder")
    sp = add("block-scan", cmd_block_scan, "Littlewood-Paley block moments")
    sp.add_argument("--field", choices=["Xbar", "Y"])
    sp = add("verify-solver", cmd_verify_solver, "decomposition and Cole-Hopf agreement")
    sp.add_argument("--eps", type=float)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
