"""Power sweeps comparing CE and ZF precoding through ideal and real PA banks.

One trial draws a channel and ``n_symbols_per_trial`` symbol frames, precodes
them once at unit sum power (both precoders are scale-covariant), shapes
the antenna waveforms, and then replays the chain at every sweep point:

    drive -> PA bank -> unscale -> channel -> noise -> matched filter -> metrics

Trials are independent and seeded by index, so they can run in any order or
in parallel; aggregation always reduces in trial order.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .config import ExperimentConfig
from .errors import CemimoError, ConfigurationError
from .link import bit_errors, mui_ratio_db, sinr_estimate
from .model import derive_rng, draw_channel, draw_symbols
from .pa import PaModel, bank_hash, compression_point_1db, fit_pa_bank, pa_apply
from .precoding import apply_linear, ce_precode_block, zf_weights
from .waveform import CcdfCurve, ccdf, ccdf_level, papr_db, rrc_taps, shape_array, write_ccdf_csv

log = logging.getLogger(__name__)

PRECODERS = ("CE", "ZF")
PA_MODES = ("Ideal", "Real")
CCDF_THRESHOLDS_DB = tuple(round(0.1 * i, 1) for i in range(0, 161))
FIG1_ANTENNAS = 8


@dataclass
class SweepRow:
    tx_power_rel_db: float
    p_t: float
    ber: float
    bit_errors: int
    bits: int
    sinr_db: float
    mean_backoff_db: float
    mui_ratio_db: float
    trials: int
    sinr_user_db: tuple[float, ...] = ()


@dataclass
class SweepResult:
    regime: str
    precoder: str
    pa_mode: str
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.regime, self.precoder, self.pa_mode)


@dataclass
class SweepOutput:
    config: ExperimentConfig
    results: list[SweepResult]
    ccdf: dict[str, CcdfCurve]
    papr_p1e3_db: dict[str, float]
    trial_alpha_gap_db: list[float]
    infeasible_trials: list[int]
    pa_bank: list[PaModel]

    def result(self, regime: str, precoder: str, pa_mode: str) -> SweepResult:
        for r in self.results:
            if r.key == (regime, precoder, pa_mode):
                return r
        raise KeyError((regime, precoder, pa_mode))


def eirp_align(ce_alpha: float, zf_beta: float, p_t: float, regime: str = "FixedEirp") -> float:
    """ZF sum power giving the same useful received amplitude as CE at ``p_t``."""
    if min(ce_alpha, zf_beta, p_t) <= 0:
        raise ConfigurationError("gains and power must be positive", field="p_t")
    if regime == "FixedSumPower":
        return p_t
    return p_t * (ce_alpha / zf_beta) ** 2


def trial_seed(master_seed: int, trial: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial,))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def drive_scale(config: ExperimentConfig, a1db: np.ndarray) -> float:
    """PA input scale mapping the nominal per-antenna RMS at 0 dB to the reference back-off.

    Unit-energy pulse shaping spreads each symbol's energy over L samples, so
    the nominal per-sample power at unit sum power is ``1 / (N_t * L)``.
    """
    nominal_rms = math.sqrt(1.0 / (config.n_antennas * config.oversampling))
    return float(np.mean(a1db)) * 10 ** (-config.backoff_ref_db / 20) / nominal_rms


def noise_std(config: ExperimentConfig, zf_beta: float) -> float:
    """Receiver noise standard deviation for one trial.

    The reference is the linear ZF chain at 0 dB relative power, whose useful
    per-user amplitude is ``zf_beta``.  With ``per_sample`` the configured SNR
    holds per sample at the receiver input; matched filtering then adds
    ``10 log10(L)`` dB.  With ``post_filter`` it holds after matched filtering.
    """
    snr = 10 ** (config.noise_ref_snr_db / 10)
    per_sample = zf_beta**2 / snr
    if config.noise_reference == "per_sample":
        return math.sqrt(per_sample / config.oversampling)
    return math.sqrt(per_sample)


def _run_chain(lin_rx, wave, scale_amp, h, bank, kappa, b1, gain_ref, noise, flt, sl, bits, s, ceiling):
    """One sweep point for one precoder/PA mode; returns per-trial sufficient statistics."""
    if bank is None:
        y = scale_amp * lin_rx + noise
        backoffs = None
    else:
        driven = kappa * scale_amp * wave
        z = np.stack([pa_apply(m, row) for m, row in zip(bank, driven)])
        z /= (kappa * b1)[:, None]
        y = h @ z + noise
        rms = np.sqrt(np.mean(np.abs(driven) ** 2, axis=1))
        backoffs = rms
    mf = fftconvolve(y, flt.taps[::-1][None, :], axes=1)
    idx = flt.delay + flt.oversampling * np.arange(s.shape[0])
    est = (mf[:, idx] / gain_ref).T  # (F, K)
    est, ref_bits, tx = est[sl], bits[sl], s[sl]
    # Data-aided per-user gain correction, as a pilot-trained AGC would do.
    est = est / (np.sum(tx.conj() * est, axis=0) / np.sum(np.abs(tx) ** 2, axis=0))
    errs = bit_errors(est, ref_bits)
    sinr = [sinr_estimate(est[:, k], tx[:, k], ceiling) for k in range(s.shape[1])]
    return errs, ref_bits.size, sinr, backoffs


def run_trial(config: ExperimentConfig, trial: int, bank: list[PaModel], a1db: np.ndarray) -> dict:
    """Full sweep for one channel/data realization."""
    seed = trial_seed(config.master_seed, trial)
    ch = draw_channel(config.k_users, config.n_antennas, seed)
    frames = draw_symbols(config.k_users, config.n_symbols_per_trial, seed)
    s, bits = frames.symbols, frames.bits
    h = ch.entries
    flt = rrc_taps(config.rrc_order, config.rrc_rolloff, config.oversampling)
    edge = config.rrc_order
    sl = slice(edge, s.shape[0] - edge)

    zf = zf_weights(ch, 1.0)
    x_zf = apply_linear(zf, s).samples
    ce = ce_precode_block(ch, s, 1.0, config.mui_target_db, config.ce_opts)
    x_ce = ce.samples()

    waves = {"CE": shape_array(x_ce, flt), "ZF": shape_array(x_zf, flt)}
    lin = {k: h @ w for k, w in waves.items()}
    gains = {"CE": ce.alpha, "ZF": zf.beta}

    trim = slice(edge * config.oversampling, -edge * config.oversampling or None)
    papr = {k: papr_db(w[:, trim], config.papr_window_symbols, config.oversampling) for k, w in waves.items()}

    kappa = drive_scale(config, a1db)
    b1 = np.array([m.small_signal_gain for m in bank])
    sigma = noise_std(config, zf.beta)
    out = {"trial": trial, "ce_feasible": bool(ce.feasible), "alpha_gap_db": 20 * math.log10(ce.alpha / zf.beta),
           "ce_mui_ratio_db": ce.mui_ratio_db,
           "zf_mui_ratio_db": mui_ratio_db(ch, x_zf, s, zf.beta),
           "papr": papr, "points": {}}
    for ip, p_rel in enumerate(config.tx_power_sweep_db):
        p_t = 10 ** (p_rel / 10)
        rng = derive_rng(seed, 100, ip)
        shape_ = lin["CE"].shape
        noise = sigma / math.sqrt(2) * (rng.standard_normal(shape_) + 1j * rng.standard_normal(shape_))
        runs = {("CE", None): p_t}
        for regime in config.power_regimes:
            runs[("ZF", regime)] = eirp_align(ce.alpha, zf.beta, p_t, regime)
        for (prec, regime), power in runs.items():
            amp = math.sqrt(power)
            for mode in PA_MODES:
                if prec == "CE" and not ce.feasible:
                    continue
                errs, nbits, sinr, rms = _run_chain(
                    lin[prec], waves[prec], amp, h, bank if mode == "Real" else None, kappa, b1,
                    gains[prec] * amp, noise, flt, sl, bits, s, config.sinr_ceiling_db)
                rms = rms if rms is not None else kappa * amp * np.sqrt(np.mean(np.abs(waves[prec]) ** 2, axis=1))
                backoff = float(np.mean(20 * np.log10(a1db / rms)))
                out["points"][(ip, prec, regime, mode)] = (power, errs, nbits, sinr, backoff)
    return out


def _worker(args):
    config, trial, bank, a1db = args
    return run_trial(config, trial, bank, a1db)


def run_sweep(config: ExperimentConfig, workers: int = 1, bank: list[PaModel] | None = None) -> SweepOutput:
    """Run all trials and aggregate in trial order."""
    bank = bank if bank is not None else fit_pa_bank(config.pa_config, config.n_antennas)
    if len(bank) != config.n_antennas:
        raise ConfigurationError("PA bank size must equal n_antennas", field="pa_config")
    a1db = np.array([compression_point_1db(m) for m in bank])
    jobs = [(config, t, bank, a1db) for t in range(config.n_trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            trials = list(ex.map(_worker, jobs))
    else:
        trials = [_worker(j) for j in jobs]
    trials.sort(key=lambda t: t["trial"])
    return _aggregate(config, trials, bank)


def _aggregate(config: ExperimentConfig, trials: list[dict], bank) -> SweepOutput:
    results = []
    for regime in config.power_regimes:
        for prec in PRECODERS:
            for mode in PA_MODES:
                res = SweepResult(regime, prec, mode)
                run_regime = None if prec == "CE" else regime
                for ip, p_rel in enumerate(config.tx_power_sweep_db):
                    pts = [t["points"][(ip, prec, run_regime, mode)] for t in trials
                           if (ip, prec, run_regime, mode) in t["points"]]
                    if not pts:
                        continue
                    errs = sum(p[1] for p in pts)
                    nbits = sum(p[2] for p in pts)
                    mui = [t["ce_mui_ratio_db" if prec == "CE" else "zf_mui_ratio_db"] for t in trials
                           if prec == "ZF" or t["ce_feasible"]]
                    res.rows.append(SweepRow(
                        tx_power_rel_db=p_rel,
                        p_t=float(np.mean([p[0] for p in pts])),
                        ber=errs / nbits,
                        bit_errors=errs,
                        bits=nbits,
                        sinr_db=float(np.mean([np.mean(p[3]) for p in pts])),
                        mean_backoff_db=float(np.mean([p[4] for p in pts])),
                        mui_ratio_db=float(np.mean(np.minimum(mui, 300.0))),
                        trials=len(pts),
                        sinr_user_db=tuple(float(v) for v in np.mean([p[3] for p in pts], axis=0)),
                    ))
                results.append(res)
    curves, levels = {}, {}
    for prec in PRECODERS:
        vals = np.concatenate([t["papr"][prec] for t in trials], axis=1)  # (N_t, windows)
        curves[prec] = ccdf(vals, CCDF_THRESHOLDS_DB)
        for n in range(min(FIG1_ANTENNAS, vals.shape[0])):
            curves[f"{prec}_ant{n + 1:02d}"] = ccdf(vals[n], CCDF_THRESHOLDS_DB)
        levels[prec] = ccdf_level(vals, 1e-3)
    return SweepOutput(
        config=config,
        results=results,
        ccdf=curves,
        papr_p1e3_db=levels,
        trial_alpha_gap_db=[t["alpha_gap_db"] for t in trials],
        infeasible_trials=[t["trial"] for t in trials if not t["ce_feasible"]],
        pa_bank=bank,
    )


def _fmt(v: float) -> str:
    return f"{v:.6g}" if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise CemimoError(f"cannot write {path}: {exc}") from exc


def _prepare(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CemimoError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_ccdfs(output: SweepOutput, out: Path) -> list[Path]:
    written = []
    for name, curve in output.ccdf.items():
        path = out / f"fig1_ccdf_{name.lower()}.csv"
        try:
            write_ccdf_csv(path, curve)
        except OSError as exc:
            raise CemimoError(f"cannot write {path}: {exc}") from exc
        written.append(path)
    return written


def _write_manifest(output: SweepOutput, out: Path, written: list[Path]) -> Path:
    cfg = output.config
    manifest = {
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "trial_seeds": [trial_seed(cfg.master_seed, t) for t in range(cfg.n_trials)],
        "pa_bank_sha256": bank_hash(output.pa_bank),
        "pa_bank": [m.to_dict() for m in output.pa_bank],
        "infeasible_ce_trials": output.infeasible_trials,
        "mean_alpha_gap_db": float(np.mean(output.trial_alpha_gap_db)),
        "papr_db_at_ccdf_1e-3": output.papr_p1e3_db,
        "rows": [
            {"regime": r.regime, "precoder": r.precoder, "pa_mode": r.pa_mode,
             "trials_per_row": [row.trials for row in r.rows]}
            for r in output.results
        ],
        "files": [p.name for p in written],
    }
    path = out / "manifest.json"
    try:
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise CemimoError(f"cannot write {path}: {exc}") from exc
    return path


def emit_ccdf(output: SweepOutput, out_dir: str | Path) -> list[Path]:
    """Write only the PAPR CCDF CSVs and the manifest."""
    out = _prepare(out_dir)
    written = _write_ccdfs(output, out)
    return written + [_write_manifest(output, out, written)]


def emit(output: SweepOutput, out_dir: str | Path) -> list[Path]:
    """Write per-figure CSVs and a JSON manifest; returns the written paths."""
    out = _prepare(out_dir)
    written = _write_ccdfs(output, out)

    ber_header = ["tx_power_rel_db", "precoder", "pa_mode", "p_t", "ber", "bit_errors", "bits",
                  "mean_backoff_db"]
    for regime, fname in (("FixedEirp", "fig2_ber_fixed_eirp.csv"), ("FixedSumPower", "fig3_ber_fixed_txpower.csv")):
        if regime not in output.config.power_regimes:
            continue
        rows = []
        for res in output.results:
            if res.regime != regime:
                continue
            for r in res.rows:
                rows.append([_fmt(r.tx_power_rel_db), res.precoder, res.pa_mode, _fmt(r.p_t), _fmt(r.ber),
                             r.bit_errors, r.bits, _fmt(r.mean_backoff_db)])
        rows.sort(key=lambda r: (float(r[0]), r[1], r[2]))
        path = out / fname
        _write_csv(path, ber_header, rows)
        written.append(path)

    rows = []
    for curve, regime, prec in _fig4_curves(output.config):
        real = output.result(regime, prec, "Real")
        ideal = {r.tx_power_rel_db: r for r in output.result(regime, prec, "Ideal").rows}
        for r in real.rows:
            rows.append([_fmt(r.tx_power_rel_db), curve, _fmt(r.sinr_db), _fmt(ideal[r.tx_power_rel_db].sinr_db),
                         _fmt(r.mean_backoff_db), _fmt(r.mui_ratio_db), _fmt(r.p_t)]
                        + [_fmt(v) for v in r.sinr_user_db])
    rows.sort(key=lambda r: (float(r[0]), r[1]))
    path = out / "fig4_sinr.csv"
    users = [f"sinr_user{k + 1}_db" for k in range(output.config.k_users)]
    _write_csv(path, ["tx_power_rel_db", "curve", "sinr_db", "sinr_ideal_pa_db", "mean_backoff_db",
                      "mui_ratio_db", "p_t"] + users, rows)
    written.append(path)
    return written + [_write_manifest(output, out, written)]


def _fig4_curves(config: ExperimentConfig):
    curves = [("CE", config.power_regimes[0], "CE")]
    if "FixedSumPower" in config.power_regimes:
        curves.append(("ZF Fixed Tx Power", "FixedSumPower", "ZF"))
    if "FixedEirp" in config.power_regimes:
        curves.append(("ZF Fixed EIRP", "FixedEirp", "ZF"))
    return curves
