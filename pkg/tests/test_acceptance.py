"""End-to-end acceptance criteria.

Each test prints one ``criterion N: PASS|FAIL`` line (also collected in the
terminal summary) and then asserts the same verdict. Run alone with

    pytest tests/test_acceptance.py -v
"""

import math

import pytest

from roughkpz.cli import default_gauss_phi, default_phis, default_psi_test
from roughkpz.constants import c_squared, mu_mass, variance_exact
from roughkpz.harness import (StudyConfig, emit_report, run_block_moment_scan, run_gaussianity_study,
                              run_solver_study, run_variance_study, run_Y_limit_study,
                              run_Z_convergence_study)

pytestmark = pytest.mark.acceptance

GRID = tuple(2.0 ** -j for j in range(3, 9))
# relative agreement of two independent quadratures of the same integral
QUADRATURE_FLOOR = 1e-10


def test_criterion_1_mass_convergence(report_criterion):
    failures = []
    for gamma in (0.3, 0.5, 0.75, 1.0):
        c2 = c_squared(gamma)
        for k in (0, 1, 5):
            dev = [abs(mu_mass(e, k, gamma) / c2 - 1.0) for e in GRID]
            exact = max(dev) < QUADRATURE_FLOOR
            decreasing = exact or all(b < a for a, b in zip(dev[:-1], dev[1:]))
            if not (decreasing and dev[-1] < 0.02):
                failures.append(f"(gamma={gamma},k={k}): dev={dev[-1]:.4g}"
                                + ("" if decreasing else " not decreasing"))
    ok = not failures
    report_criterion(1, ok, "all 12 cases" if ok else "failing " + "; ".join(failures))
    assert ok


@pytest.fixture(scope="module")
def variance_report():
    cfg = StudyConfig(eps_grid=GRID, replicas=20000)
    return run_variance_study(cfg, default_phis(), default_psi_test())


def test_criterion_2_variance_matches_exact(variance_report, report_criterion):
    bad = []
    zmax = 0.0
    for i in range(2):
        for row in variance_report.rows_for(f"var_xi_tilde[{i}]"):
            z = abs(row.estimate - row.target) / row.se
            zmax = max(zmax, z)
            if z > 3.0:
                bad.append(f"phi{i}@eps={row.eps:g}: z={z:.2f}")
    ok = not bad and len(variance_report.rows_for("var_xi_tilde[1]")) == len(GRID)
    report_criterion(2, ok, f"max |z| = {zmax:.2f} over 2 x {len(GRID)} points, 2e4 replicas"
                     + ("" if ok else "; " + "; ".join(bad)))
    assert ok


def test_criterion_3_exact_variance_near_limit(report_criterion):
    devs = []
    for phi in default_phis():
        exact = variance_exact(phi, 2.0 ** -8, 0.5)
        devs.append(abs(exact / (c_squared(0.5) * phi.l2_squared()) - 1.0))
    ok = max(devs) < 0.02
    report_criterion(3, ok, "relative deviations " + ", ".join(f"{d:.4%}" for d in devs))
    assert ok


def test_criterion_4_fourth_moment(report_criterion):
    cfg = StudyConfig(eps_grid=(2.0 ** -3, 2.0 ** -5, 2.0 ** -7), replicas=100000)
    rep = run_gaussianity_study(cfg, default_gauss_phi())
    last = rep.row("ratio", 2.0 ** -7)
    first = rep.row("ratio", 2.0 ** -3)
    gate = abs(last.estimate - 1.0) <= max(3.0 * last.se, 0.05)
    trend = abs(last.estimate - 1.0) < abs(first.estimate - 1.0)
    ok = gate and trend
    report_criterion(4, ok, f"ratio {last.estimate:.4f} +- {last.se:.4f} at 2^-7, "
                     f"{first.estimate:.4f} at 2^-3")
    assert ok


def test_criterion_5_y_mode_variances(report_criterion):
    cfg = StudyConfig(eps_grid=(2.0 ** -6,), replicas=10000, probe_points=((0.5, 0), (0.5, 1)))
    rep = run_Y_limit_study(cfg)
    c2 = c_squared(0.5)
    a = 8 * math.pi ** 2
    targets = {"var_Y[t=0.5,k=0]": c2 * 0.5, "var_Y[t=0.5,k=1]": c2 * (1 - math.exp(-4 * math.pi ** 2)) / a}
    parts, ok = [], True
    for name, target in targets.items():
        row = rep.row(name)
        z = abs(row.estimate - target) / row.se
        ok = ok and z <= 3.0
        parts.append(f"{name} z={z:.2f}")
    report_criterion(5, ok, ", ".join(parts))
    assert ok


@pytest.fixture(scope="module")
def solver_report():
    cfg = StudyConfig(K_policy={"K": 128}, T=0.05, dt=1e-4, noise_dt=1e-3,
                      psi={1: 1.0, 2: 0.5j}, replicas=20)
    return run_solver_study(cfg, 0.5)


def test_criterion_6_decomposition(solver_report, report_criterion):
    row = solver_report.row("decomposition[dt=0.0001]")
    ok = row.estimate < 1e-5
    report_criterion(6, ok, f"sup|h - X - Y - Z| = {row.estimate:.3e} over 20 realizations")
    assert ok


def test_criterion_7_cole_hopf(solver_report, report_criterion):
    positive = all(r.estimate > 0 for r in solver_report.rows if r.quantity.startswith("min_u"))
    ratios = [solver_report.row(f"gap_ratio[r={r},dt=0.0001]").estimate for r in range(10)]
    halved = all(abs(q / 2.0 - 1.0) <= 0.2 for q in ratios)
    ok = positive and halved
    report_criterion(7, ok, f"u > 0: {positive}; gap ratios {min(ratios):.3f}..{max(ratios):.3f}")
    assert ok


def test_criterion_8_z_convergence(report_criterion):
    cfg = StudyConfig(eps_grid=(2.0 ** -3, 2.0 ** -6), replicas=200, T=0.0625, theta=0.1,
                      c2="zero", gamma=0.5)
    rep = run_Z_convergence_study(cfg, {1: 0.5})
    coarse, fine = rep.row("median_dist", 2.0 ** -3), rep.row("median_dist", 2.0 ** -6)
    ok = fine.estimate < coarse.estimate
    report_criterion(8, ok, f"median sup_t distance {coarse.estimate:.4g} at 2^-3, "
                     f"{fine.estimate:.4g} at 2^-6")
    assert ok


def test_criterion_9_block_exponent(report_criterion):
    cfg = StudyConfig(eps_grid=GRID, js=(2, 3, 4, 5, 6))
    rep = run_block_moment_scan(cfg, "Xbar")
    b = rep.row("b", GRID[-1])
    target = (1 - 3 * 0.05) / 2
    ok = abs(b.estimate - target) <= 0.15
    report_criterion(9, ok, f"b = {b.estimate:.4f} +- {b.se:.4f}, target {target:.3f}")
    assert ok


def test_criterion_10_byte_identical_outputs(tmp_path, report_criterion):
    cfg = StudyConfig(eps_grid=(0.25, 0.125), replicas=6000, block_size=1000)
    names = ("report.json", "variance.csv", "variance_trends.csv", "block_Xbar.csv")
    for threads in (1, 4):
        run_cfg = cfg.replace(threads=threads)
        out = tmp_path / f"threads{threads}"
        emit_report(run_variance_study(run_cfg, default_phis(), default_psi_test()), out)
        emit_report(run_block_moment_scan(run_cfg.replace(eps_grid=(2.0 ** -6,)), "Xbar"), out / "block")
    same = all((tmp_path / "threads1" / n).read_bytes() == (tmp_path / "threads4" / n).read_bytes()
               for n in names[:3])
    same = same and ((tmp_path / "threads1" / "block" / names[3]).read_bytes()
                     == (tmp_path / "threads4" / "block" / names[3]).read_bytes())
    report_criterion(10, same, "CSV and JSON identical for 1 and 4 workers")
    assert same
