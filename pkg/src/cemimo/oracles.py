"""Small-instance cross-checks of the optimizer, gradient and detector.

Each check compares the production code path against something computed a
different way (finite differences, exhaustive grid search, closed-form BER)
and returns a plain dict so the CLI can print it as JSON.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .link import ber_16qam_awgn, detect_and_ber
from .model import MuChannel, derive_rng, draw_channel, draw_symbols, qam16_demap, qam16_map
from .precoding import CeOptions, ce_brute_force, ce_gradient, ce_objective, ce_optimize


def gradient_check(n_instances: int = 100, k: int = 4, n_t: int = 24, step: float = 1e-6,
                   seed: int = 11) -> dict:
    """Largest relative error of the analytic gradient against central differences."""
    worst = 0.0
    for i in range(n_instances):
        rng = derive_rng(seed, i)
        ch = draw_channel(k, n_t, seed * 1000 + i)
        s = draw_symbols(k, 1, seed * 1000 + i).symbols[0]
        theta = rng.uniform(-math.pi, math.pi, n_t)
        alpha = rng.uniform(0.2, 1.0)
        p_t = 10 ** rng.uniform(-1, 1)
        n = int(rng.integers(n_t))
        e = np.zeros(n_t)
        e[n] = step
        fd = (ce_objective(theta + e, ch, s, alpha, p_t) - ce_objective(theta - e, ch, s, alpha, p_t)) / (2 * step)
        an = ce_gradient(theta, ch, s, alpha, p_t, n)
        rel = abs(an - fd) / max(abs(fd), abs(an), 1e-12)
        worst = max(worst, float(rel))
    return {"check": "gradient", "instances": n_instances, "max_rel_error": worst, "passed": worst < 1e-4}


def feasible_alpha(channel: MuChannel, symbol: complex, p_t: float, rho: float) -> float:
    """Single-user gain a factor ``rho`` above the reachable envelope.

    With one user the received CE sample can take any amplitude up to
    ``R = sqrt(P_t/N_t) * sum|h_n|``.  For ``rho > 1`` the optimum co-phases
    every antenna onto the symbol and equals ``((rho - 1) R)^2``.
    """
    a = math.sqrt(p_t / channel.n_antennas)
    return rho * a * float(np.sum(np.abs(channel.entries))) / abs(symbol)


def optimizer_vs_grid(n_instances: int = 50, n_t: int = 3, grid_size: int = 64, tolerance: float = 0.05,
                      seed: int = 13, opts: CeOptions | None = None) -> dict:
    """Antenna-wise optimizer objective against the exhaustive phase-grid optimum for K=1.

    Targets sit a factor ``rho`` in [1.5, 3] beyond the reachable envelope.
    A grid phase error d inflates the optimum by roughly d^2 / (rho - 1)
    relative, so with d <= pi/64 the grid itself stays within 0.5% there;
    closer to the envelope the grid optimum stops being a sharp reference.
    """
    opts = opts or CeOptions()
    start = time.perf_counter()
    ratios = []
    for i in range(n_instances):
        rng = derive_rng(seed, i)
        ch = draw_channel(1, n_t, seed * 1000 + i)
        s = draw_symbols(1, 1, seed * 1000 + i).symbols[0]
        p_t = 1.0
        alpha = feasible_alpha(ch, s[0], p_t, float(rng.uniform(1.5, 3.0)))
        grid = ce_brute_force(ch, s, alpha, p_t, grid_size)
        sol = ce_optimize(ch, s, alpha, p_t, opts)
        ratios.append(float(sol.objective) / float(grid.objective))
    elapsed = time.perf_counter() - start
    worst = max(ratios)
    return {
        "check": "optimizer_vs_grid",
        "instances": n_instances,
        "worst_objective_ratio": worst,
        "seconds": elapsed,
        "passed": worst <= 1 + tolerance and elapsed < 60,
    }


def awgn_ber_check(esn0_db=(8.0, 12.0, 16.0), n_symbols: int = 400_000, seed: int = 17) -> dict:
    """Monte Carlo hard-decision BER against the closed form, in standard errors."""
    rows = []
    for j, snr in enumerate(esn0_db):
        rng = derive_rng(seed, j)
        bits = rng.integers(0, 2, (n_symbols, 4), dtype=np.int8)
        s = qam16_map(bits)
        n0 = 10 ** (-snr / 10)
        w = math.sqrt(n0 / 2) * (rng.standard_normal(n_symbols) + 1j * rng.standard_normal(n_symbols))
        ber = detect_and_ber(s + w, bits)
        ref = float(ber_16qam_awgn(snr))
        # Bits sharing a symbol err together, so take the spread of per-symbol counts.
        per_symbol = np.sum(qam16_demap(s + w) != bits, axis=1) / 4
        se = float(np.std(per_symbol)) / math.sqrt(n_symbols)
        rows.append({"esn0_db": snr, "ber": ber, "closed_form": ref, "z": (ber - ref) / se})
    return {"check": "awgn_ber", "points": rows, "passed": all(abs(r["z"]) <= 3 for r in rows)}


def run_all(quick: bool = False) -> list[dict]:
    if quick:
        return [gradient_check(20), optimizer_vs_grid(10), awgn_ber_check(n_symbols=100_000)]
    return [gradient_check(), optimizer_vs_grid(), awgn_ber_check()]
