"""Independent reference values, computed with mpmath at 25 digits.

Run once with ``python tests/oracles/compute_oracles.py``; the printed
values are frozen in ``tests/oracle_values.py``. Nothing here imports the
package under test.
"""

import mpmath as mp

mp.mp.dps = 25
QUARTER = mp.mpf(1) / 4


def profile(r):
    z = 4 * r
    return mp.e ** (-1 / (1 - z * z)) if abs(z) < 1 else mp.mpf(0)


MASS = 2 * mp.quad(profile, [0, QUARTER / 2, QUARTER])


def rho_hat(q):
    q = mp.mpf(q)
    n = max(4, int(abs(q)) // 2 + 4)
    nodes = [QUARTER * i / n for i in range(n + 1)]
    return 2 * mp.quad(lambda r: mp.cos(2 * mp.pi * q * r) * profile(r), nodes) / MASS


def half_line_table(q_max=40, pieces=40, order=24):
    """Gauss-Legendre nodes on ``[0, q_max]`` with ``rho_hat`` evaluated once.

    Only used for fourth powers, whose tail beyond ``q_max`` is below 1e-15
    relative. Second powers decay too slowly and go through Plancherel.
    """
    xs, ws = mp.gauss_legendre_nodes(order) if hasattr(mp, "gauss_legendre_nodes") else _gl(order)
    h = mp.mpf(q_max) / pieces
    nodes, weights = [], []
    for i in range(pieces):
        for x, w in zip(xs, ws):
            nodes.append(h * i + h * (x + 1) / 2)
            weights.append(w * h / 2)
    return nodes, weights, [rho_hat(q) for q in nodes]


def _gl(order):
    """Legendre nodes and weights by Newton iteration on ``P_n``."""
    xs, ws = [], []
    for i in range(1, order + 1):
        x = mp.cos(mp.pi * (i - mp.mpf(1) / 4) / (order + mp.mpf(1) / 2))
        for _ in range(100):
            p0, p1 = mp.mpf(1), x
            for n in range(2, order + 1):
                p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
            dp = order * (x * p1 - p0) / (x * x - 1)
            dx = p1 / dp
            x -= dx
            if abs(dx) < mp.mpf(10) ** (-mp.mp.dps + 2):
                break
        xs.append(x)
        ws.append(2 / ((1 - x * x) * dp * dp))
    return xs, ws


def smoothstep(u):
    u = min(max(u, mp.mpf(0)), mp.mpf(1))
    return u ** 3 * (10 - 15 * u + 6 * u * u)


def theta(r):
    plateau = mp.mpf(2) / 3
    return 1 - smoothstep((abs(r) - plateau) / (1 - plateau))


def chi(j, k):
    if j == -1:
        return theta(k)
    return theta(mp.mpf(k) / 2 ** (j + 1)) - theta(mp.mpf(k) / 2 ** j)


if __name__ == "__main__":
    pi = mp.pi
    print("normalization", mp.nstr(1 / MASS, 25))
    for q in (1, 2, 5, 20):
        print(f"rho_hat({q})", mp.nstr(rho_hat(q), 25))
    # decay threshold: |rho_hat| on a 0.05 grid just around the crossing of 1e-8
    grid = [mp.mpf(160) + mp.mpf(5) * i / 100 for i in range(0, 61)]
    grid += [mp.mpf(163) + mp.mpf(i) / 2 for i in range(0, 15)]
    vals = [abs(rho_hat(q)) for q in grid]
    last_big = max(q for q, v in zip(grid, vals) if v >= mp.mpf("1e-8"))
    print("last |rho_hat| >= 1e-8 on grid", mp.nstr(last_big, 8))
    nodes, weights, rh = half_line_table()
    quartic = mp.fsum(w * r ** 4 for w, r in zip(weights, rh))
    print("c_squared(0.5)", mp.nstr(2 * quartic / (128 * pi ** 6), 25))
    # Plancherel: int rho_hat^2 dq = int rho^2 dr, int q^2 rho_hat^2 dq = int rho'^2 dr / (4 pi^2)
    rho = lambda r: profile(r) / MASS
    drho = lambda r: mp.diff(rho, r)
    l2 = 2 * mp.quad(lambda r: rho(r) ** 2, [0, QUARTER / 2, QUARTER])
    h1 = 2 * mp.quad(lambda r: drho(r) ** 2, [0, QUARTER / 2, QUARTER])
    print("mass_bound(0.5)", mp.nstr(l2 / (16 * pi ** 6), 25))
    print("c1_limit(1.0)", mp.nstr(h1 / (4 * pi ** 2) / 2 / (4 * pi ** 2), 25))
    c2 = 2 * quartic / (128 * pi ** 6)
    a = 8 * pi ** 2
    print("limit mode-1 variance at t=1", mp.nstr(c2 * (1 - mp.e ** (-a)) / a + 1 / a, 25))
    for j in (-1, 0, 1, 2, 3):
        print(f"chi_{j}(3)", mp.nstr(chi(j, 3), 20), f"chi_{j}(8)", mp.nstr(chi(j, 8), 20))
