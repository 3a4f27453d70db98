"""Zero-forcing and constant-envelope spatial precoders.

The CE precoder emits ``sqrt(P_t/N_t) * exp(j*theta_n)`` on every antenna and
chooses the phases so that the noise-free received vector approximates
``alpha * s``.  Phases are found by antenna-wise gradient descent that keeps
the best sub-iterate per antenna; ``alpha`` is then maximized subject to a
signal-to-MUI floor.

All solvers are vectorized over frames: arrays of symbols with shape
(F, K) are optimized together, each row independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .errors import CapacityError, ConfigurationError, DivergenceError, InfeasibleError, NumericalRankError
from .model import MuChannel, PrecodedFrame, SymbolFrame

MAX_CONDITION = 1e12
BRUTE_FORCE_BUDGET = 10**7


@dataclass(frozen=True)
class ZfPrecoder:
    weights: np.ndarray  # N_t x K, already scaled by beta
    beta: float
    p_t: float
    channel: MuChannel | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class CeOptions:
    """Tuning knobs for the CE phase optimizer and the gain search.

    With ``step_rule="normalized"`` each phase step is divided by the local
    curvature of the per-antenna objective, so ``step_scale`` is a
    dimensionless gain (1 lands on the coordinate minimum in one step when the
    phase error is small) and the solution does not depend on ``P_t``.  With
    ``step_rule="fixed"`` the step is ``step_scale / (P_t * K)``.  In both
    cases ``step_size`` pins an absolute value instead.
    """

    m_subiters: int = 20
    n_passes: int = 3
    step_scale: float = 1.0
    step_size: float | None = None
    step_rule: str = "normalized"
    alpha_search: str = "grid"
    alpha_resolution_db: float = 0.1
    alpha_span_db: float = 6.0
    max_alpha_iters: int = 64
    warm_start: bool = False

    def __post_init__(self):
        if self.m_subiters < 1:
            raise ConfigurationError("m_subiters must be >= 1", field="m_subiters")
        if self.n_passes < 1:
            raise ConfigurationError("n_passes must be >= 1", field="n_passes")
        if self.step_size is not None and not self.step_size > 0:
            raise ConfigurationError("step_size must be > 0", field="step_size")
        if not self.step_scale > 0:
            raise ConfigurationError("step_scale must be > 0", field="step_scale")
        if self.step_rule not in ("fixed", "normalized"):
            raise ConfigurationError("step_rule must be 'fixed' or 'normalized'", field="step_rule")
        if self.alpha_search not in ("grid", "bisection"):
            raise ConfigurationError("alpha_search must be 'grid' or 'bisection'", field="alpha_search")
        if not self.alpha_resolution_db > 0:
            raise ConfigurationError("alpha_resolution_db must be > 0", field="alpha_resolution_db")
        if self.max_alpha_iters < 1:
            raise ConfigurationError("max_alpha_iters must be >= 1", field="max_alpha_iters")

    def mu(self, p_t: float, k_users: int) -> float:
        if self.step_size is not None:
            return float(self.step_size)
        return self.step_scale / (p_t * k_users)


@dataclass(frozen=True)
class CeSolution:
    """Optimized phases for one frame (or a stack of frames).

    For stacked solutions ``phases`` is (F, N_t) and ``alpha``, ``objective``
    and ``mui_ratio_db`` are length-F arrays; ``feasible`` marks frames whose
    interference target was met.
    """

    phases: np.ndarray
    alpha: float | np.ndarray
    objective: float | np.ndarray
    mui_ratio_db: float | np.ndarray
    p_t: float
    feasible: bool | np.ndarray = True

    def samples(self) -> np.ndarray:
        n_t = self.phases.shape[-1]
        return math.sqrt(self.p_t / n_t) * np.exp(1j * self.phases)

    def frame(self) -> PrecodedFrame:
        return PrecodedFrame(self.samples(), self.p_t, gain=self.alpha)


def _wrap(theta):
    # [-pi, pi)
    return (theta + np.pi) % (2 * np.pi) - np.pi


def _as_rows(frame: SymbolFrame | np.ndarray) -> tuple[np.ndarray, bool]:
    s = frame.symbols if isinstance(frame, SymbolFrame) else np.asarray(frame, dtype=complex)
    single = s.ndim == 1
    return np.atleast_2d(s), single


def _mui_ratio_db(alpha, s, objective):
    signal = np.asarray(alpha) ** 2 * np.sum(np.abs(s) ** 2, axis=-1)
    with np.errstate(divide="ignore"):
        return 10 * np.log10(signal / objective)


def zf_weights(channel: MuChannel, p_t: float) -> ZfPrecoder:
    """Right-pseudoinverse precoder normalized to sum power ``p_t``."""
    if not p_t > 0:
        raise ConfigurationError("p_t must be positive", field="p_t")
    h = channel.entries
    gram = h @ h.conj().T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericalRankError(f"channel Gram matrix is rank deficient (cond={cond:.3g})", cond)
    w = h.conj().T @ np.linalg.inv(gram)
    beta = math.sqrt(p_t / np.trace(w @ w.conj().T).real)
    return ZfPrecoder(beta * w, beta, float(p_t), channel)


def apply_linear(precoder: ZfPrecoder, frame: SymbolFrame | np.ndarray) -> PrecodedFrame:
    """x = W s, row-wise for stacked frames."""
    s, single = _as_rows(frame)
    if s.shape[-1] != precoder.weights.shape[1]:
        raise ConfigurationError(
            f"frame has {s.shape[-1]} users, precoder expects {precoder.weights.shape[1]}", field="frame"
        )
    x = s @ precoder.weights.T
    return PrecodedFrame(x[0] if single else x, precoder.p_t, gain=precoder.beta)


def ce_objective(phases, channel: MuChannel, frame, alpha, p_t: float):
    """Sum over users of |sqrt(P_t/N_t) * sum_n h_kn e^{j theta_n} - alpha s_k|^2."""
    h = channel.entries
    phases = np.asarray(phases, dtype=float)
    if phases.shape[-1] != h.shape[1]:
        raise ConfigurationError(f"expected {h.shape[1]} phases, got {phases.shape[-1]}", field="phases")
    s = frame.symbols if isinstance(frame, SymbolFrame) else np.asarray(frame, dtype=complex)
    a = math.sqrt(p_t / h.shape[1])
    c = a * np.exp(1j * phases) @ h.T
    r = c - np.asarray(alpha)[..., None] * s
    return np.sum(np.abs(r) ** 2, axis=-1)


def ce_gradient(phases, channel: MuChannel, frame, alpha, p_t: float, n: int):
    """Partial derivative of :func:`ce_objective` with respect to ``phases[n]`` (0-based)."""
    h = channel.entries
    if not 0 <= n < h.shape[1]:
        raise IndexError(f"antenna index {n} out of range for {h.shape[1]} antennas")
    phases = np.asarray(phases, dtype=float)
    s = frame.symbols if isinstance(frame, SymbolFrame) else np.asarray(frame, dtype=complex)
    a = math.sqrt(p_t / h.shape[1])
    r = a * np.exp(1j * phases) @ h.T - np.asarray(alpha)[..., None] * s
    z = a * h[:, n] * np.exp(1j * phases[..., n : n + 1])
    # d|r|^2/dtheta = 2 Re{conj(r) * j z} = 2 Im{r * conj(z)}
    return 2 * np.sum(np.imag(r * np.conj(z)), axis=-1)


def _antenna_descent(h, s, alpha, p_t, opts: CeOptions, theta0=None, trace=None):
    """Antenna-wise gradient descent with best-sub-iterate retention.

    ``s`` is (F, K), ``alpha`` is (F,).  Returns phases (F, N_t) and the final
    objective (F,).  With everything but antenna n fixed the objective is
    ``C + 2a Re{g e^{j theta_n}}``, so each sub-iteration costs O(F).
    """
    f_rows, _ = s.shape
    n_t = h.shape[1]
    a = math.sqrt(p_t / n_t)
    normalized = opts.step_rule == "normalized"
    mu = opts.step_scale if normalized and opts.step_size is None else opts.mu(p_t, h.shape[0])
    theta = np.zeros((f_rows, n_t)) if theta0 is None else np.array(theta0, dtype=float, copy=True)
    r = a * np.exp(1j * theta) @ h.T - alpha[:, None] * s
    col_energy = a * a * np.sum(np.abs(h) ** 2, axis=0)
    step = 0
    for _ in range(opts.n_passes):
        for n in range(n_t):
            hn = h[:, n]
            th = theta[:, n].copy()
            r_rest = r - a * np.exp(1j * th)[:, None] * hn
            g = r_rest.conj() @ hn
            base = np.sum(np.abs(r_rest) ** 2, axis=1) + col_energy[n]
            best_f = np.full(f_rows, np.inf)
            best_th = th.copy()
            for _m in range(opts.m_subiters):
                ge = g * np.exp(1j * th)
                e_m = base + 2 * a * ge.real
                step += 1
                if not np.all(np.isfinite(e_m)):
                    raise DivergenceError(f"non-finite objective at step {step}; reduce step size", step)
                better = e_m < best_f
                best_f = np.where(better, e_m, best_f)
                best_th = np.where(better, th, best_th)
                if normalized:
                    th = _wrap(th + mu * ge.imag / np.maximum(np.abs(ge), 1e-300))
                else:
                    th = _wrap(th + mu * 2 * a * ge.imag)
            theta[:, n] = best_th
            r = r_rest + a * np.exp(1j * best_th)[:, None] * hn
            if trace is not None:
                trace.append(best_f.copy())
    objective = np.sum(np.abs(r) ** 2, axis=1)
    return theta, objective


def ce_optimize(channel: MuChannel, frame, alpha, p_t: float, opts: CeOptions | None = None,
                initial_phases=None, trace: list | None = None) -> CeSolution:
    """Run the CE phase optimizer for a fixed beamforming gain ``alpha``.

    ``trace``, when given, receives the best objective after every antenna
    update.
    """
    opts = opts or CeOptions()
    s, single = _as_rows(frame)
    alpha_arr = np.broadcast_to(np.asarray(alpha, dtype=float), (s.shape[0],)).copy()
    if np.any(alpha_arr <= 0):
        raise ConfigurationError("alpha must be positive", field="alpha")
    theta0 = None if initial_phases is None else np.atleast_2d(initial_phases)
    theta, obj = _antenna_descent(channel.entries, s, alpha_arr, p_t, opts, theta0, trace)
    ratio = _mui_ratio_db(alpha_arr, s, obj)
    if single:
        return CeSolution(theta[0], float(alpha_arr[0]), float(obj[0]), float(ratio[0]), float(p_t))
    return CeSolution(theta, alpha_arr, obj, ratio, float(p_t))


def _alpha_grid(beta_zf: float, opts: CeOptions) -> np.ndarray:
    n = min(int(round(opts.alpha_span_db / opts.alpha_resolution_db)) + 1, opts.max_alpha_iters)
    return beta_zf * 10 ** (-opts.alpha_resolution_db * np.arange(n) / 20)


def _search_grid(h, s, p_t, target, opts, grid):
    f_rows = s.shape[0]
    theta = np.zeros((f_rows, h.shape[1]))
    best = dict(theta=theta.copy(), alpha=np.full(f_rows, grid[-1]), obj=np.full(f_rows, np.inf),
                ratio=np.full(f_rows, -np.inf), ok=np.zeros(f_rows, bool))
    active = np.arange(f_rows)
    for alpha in grid:
        if active.size == 0:
            break
        a = np.full(active.size, alpha)
        warm = theta[active] if opts.warm_start else None
        th, obj = _antenna_descent(h, s[active], a, p_t, opts, warm)
        theta[active] = th
        ratio = _mui_ratio_db(a, s[active], obj)
        ok = ratio >= target
        # Infeasible frames keep their best-ratio attempt for reporting.
        improve = ok | (ratio > best["ratio"][active])
        idx = active[improve]
        best["theta"][idx] = th[improve]
        best["alpha"][idx] = alpha
        best["obj"][idx] = obj[improve]
        best["ratio"][idx] = ratio[improve]
        best["ok"][active[ok]] = True
        active = active[~ok]
    return best


def _search_bisection(h, s, p_t, target, opts, beta_zf):
    f_rows = s.shape[0]
    lo_db = np.full(f_rows, -opts.alpha_span_db)
    hi_db = np.zeros(f_rows)
    best = _search_grid(h, s, p_t, target, opts, np.array([beta_zf * 10 ** (-opts.alpha_span_db / 20)]))
    feasible_lo = best["ok"].copy()
    # Frames infeasible at the bottom of the range never enter bisection.
    active = np.flatnonzero(feasible_lo)
    top = _search_grid(h, s[active], p_t, target, opts, np.array([beta_zf]))
    for key in best:
        best[key][active[top["ok"]]] = top[key][top["ok"]]
    active = active[~top["ok"]]
    iters = 0
    while active.size and iters < opts.max_alpha_iters:
        iters += 1
        mid_db = 0.5 * (lo_db[active] + hi_db[active])
        alpha = beta_zf * 10 ** (mid_db / 20)
        th, obj = _antenna_descent(h, s[active], alpha, p_t, opts)
        ratio = _mui_ratio_db(alpha, s[active], obj)
        ok = ratio >= target
        idx = active[ok]
        best["theta"][idx] = th[ok]
        best["alpha"][idx] = alpha[ok]
        best["obj"][idx] = obj[ok]
        best["ratio"][idx] = ratio[ok]
        lo_db[idx] = mid_db[ok]
        hi_db[active[~ok]] = mid_db[~ok]
        active = active[hi_db[active] - lo_db[active] > opts.alpha_resolution_db]
    return best


def ce_alpha_search_frames(channel: MuChannel, frame, p_t: float, mui_target_db: float,
                           opts: CeOptions | None = None) -> CeSolution:
    """Per-frame maximization of alpha subject to the signal-to-MUI floor.

    Never raises on infeasibility: frames that miss the target at the bottom of
    the search range are returned with ``feasible=False`` and their best
    attempt.
    """
    opts = opts or CeOptions()
    if math.isnan(mui_target_db) or mui_target_db == math.inf:
        raise ConfigurationError("mui_target_db must be finite or -inf", field="mui_target_db")
    s, _ = _as_rows(frame)
    h = channel.entries
    beta_zf = zf_weights(channel, p_t).beta
    if opts.alpha_search == "grid":
        best = _search_grid(h, s, p_t, mui_target_db, opts, _alpha_grid(beta_zf, opts))
    else:
        best = _search_bisection(h, s, p_t, mui_target_db, opts, beta_zf)
    return CeSolution(best["theta"], best["alpha"], best["obj"], best["ratio"], float(p_t), best["ok"])


def ce_alpha_search(channel: MuChannel, frame, p_t: float, mui_target_db: float,
                    opts: CeOptions | None = None) -> CeSolution:
    """Largest tested alpha whose solution keeps signal-to-MUI >= ``mui_target_db``.

    Raises :class:`InfeasibleError` (carrying the best achieved ratio) when no
    alpha in the search range qualifies.  For stacked frames use
    :func:`ce_alpha_search_frames`, which flags instead of raising.
    """
    s, single = _as_rows(frame)
    sol = ce_alpha_search_frames(channel, s, p_t, mui_target_db, opts)
    if not np.all(sol.feasible):
        best = float(np.min(sol.mui_ratio_db))
        raise InfeasibleError(
            f"no alpha meets {mui_target_db} dB signal-to-MUI (best {best:.2f} dB)", best
        )
    if single:
        return CeSolution(sol.phases[0], float(sol.alpha[0]), float(sol.objective[0]),
                          float(sol.mui_ratio_db[0]), sol.p_t, True)
    return sol


def ce_brute_force(channel: MuChannel, frame, alpha, p_t: float, grid_size: int) -> CeSolution:
    """Exhaustive search over a uniform phase grid (verification oracle)."""
    h = channel.entries
    n_t = h.shape[1]
    if n_t > 4 or grid_size**n_t > BRUTE_FORCE_BUDGET:
        raise CapacityError(f"grid of {grid_size}^{n_t} points exceeds the {BRUTE_FORCE_BUDGET} budget")
    s = frame.symbols if isinstance(frame, SymbolFrame) else np.asarray(frame, dtype=complex)
    if s.ndim != 1:
        raise ConfigurationError("brute force solves a single frame", field="frame")
    grid = _wrap(2 * np.pi * np.arange(grid_size) / grid_size)
    a = math.sqrt(p_t / n_t)
    # Received vector as an outer sum over antennas, built one axis at a time.
    c = np.zeros(h.shape[0], dtype=complex)
    for n in range(n_t):
        contrib = a * np.exp(1j * grid)[:, None] * h[:, n]  # (G, K)
        c = c[..., None, :] + contrib.reshape((1,) * n + (grid_size, h.shape[0]))
    obj = np.sum(np.abs(c - alpha * s) ** 2, axis=-1)
    flat = int(np.argmin(obj))
    idx = np.unravel_index(flat, obj.shape)
    phases = grid[list(idx)]
    best = float(obj.flat[flat])
    return CeSolution(phases, float(alpha), best, float(_mui_ratio_db(alpha, s, best)), float(p_t))


@dataclass(frozen=True)
class CeBlockSolution:
    """CE phases for a block of frames sharing one beamforming gain."""

    phases: np.ndarray
    alpha: float
    mui_ratio_db: float
    frame_mui_ratio_db: np.ndarray
    feasible: bool
    p_t: float

    def samples(self) -> np.ndarray:
        return math.sqrt(self.p_t / self.phases.shape[1]) * np.exp(1j * self.phases)


def ce_precode_block(channel: MuChannel, frame, p_t: float, mui_target_db: float,
                     opts: CeOptions | None = None) -> CeBlockSolution:
    """Largest common alpha whose block-aggregate signal-to-MUI meets the target.

    A single alpha for the whole block keeps the useful gain fixed, which
    the receiver can then divide out.  Candidates descend from the ZF gain of
    the same channel.  If no candidate qualifies, the attempt with the best
    aggregate ratio is returned with ``feasible=False``.
    """
    opts = opts or CeOptions()
    s, _ = _as_rows(frame)
    h = channel.entries
    sig = np.sum(np.abs(s) ** 2)
    best = None
    theta = None
    for alpha in _alpha_grid(zf_weights(channel, p_t).beta, opts):
        a = np.full(s.shape[0], alpha)
        theta, obj = _antenna_descent(h, s, a, p_t, opts, theta if opts.warm_start else None)
        total = np.sum(obj)
        agg = math.inf if total == 0 else float(10 * np.log10(alpha**2 * sig / total))
        cand = CeBlockSolution(theta, float(alpha), agg, _mui_ratio_db(a, s, obj), agg >= mui_target_db, float(p_t))
        if cand.feasible:
            return cand
        if best is None or agg > best.mui_ratio_db:
            best = cand
    return best
