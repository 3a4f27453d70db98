"""PNG renderings of the sweep outputs, written next to the CSVs.

The CSV files are the data of record; these figures are a convenience and
are produced with the non-interactive Agg backend.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import SweepOutput, _fig4_curves  # noqa: E402

_STYLE = {("CE", "Ideal"): "b--", ("CE", "Real"): "b-", ("ZF", "Ideal"): "r--", ("ZF", "Real"): "r-"}


def plot_ccdf(output: SweepOutput, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for prec, color in (("CE", "b"), ("ZF", "r")):
        for name, curve in output.ccdf.items():
            if name.startswith(prec + "_ant"):
                ax.semilogy(curve.thresholds_db, curve.probabilities, color=color, lw=0.5, alpha=0.5)
        pooled = output.ccdf[prec]
        ax.semilogy(pooled.thresholds_db, pooled.probabilities, color=color, lw=2, label=prec)
    ax.set_xlabel("PAPR threshold [dB]")
    ax.set_ylabel("P(PAPR > threshold)")
    ax.set_ylim(1e-4, 1.1)
    ax.grid(True, which="both", lw=0.3)
    ax.legend()
    return _save(fig, path)


def plot_ber(output: SweepOutput, regime: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for res in output.results:
        if res.regime != regime:
            continue
        x = [r.tx_power_rel_db for r in res.rows]
        # Zero-error points cannot sit on a log axis.
        y = [r.ber if r.ber > 0 else float("nan") for r in res.rows]
        ax.semilogy(x, y, _STYLE[(res.precoder, res.pa_mode)], label=f"{res.precoder} {res.pa_mode} PA")
    ax.set_xlabel("Relative Tx power [dB]")
    ax.set_ylabel("BER")
    ax.set_title(regime)
    ax.grid(True, which="both", lw=0.3)
    ax.legend()
    return _save(fig, path)


def plot_sinr(output: SweepOutput, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve, regime, prec in _fig4_curves(output.config):
        rows = output.result(regime, prec, "Real").rows
        ax.plot([r.tx_power_rel_db for r in rows], [r.sinr_db for r in rows], marker="o", ms=3, label=curve)
    ax.set_xlabel("Relative Tx power [dB]")
    ax.set_ylabel("SINR [dB]")
    ax.grid(True, lw=0.3)
    ax.legend()
    return _save(fig, path)


def render_all(output: SweepOutput, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    paths = [plot_ccdf(output, out / "fig1_ccdf.png")]
    names = {"FixedEirp": "fig2_ber_fixed_eirp.png", "FixedSumPower": "fig3_ber_fixed_txpower.png"}
    for regime in output.config.power_regimes:
        paths.append(plot_ber(output, regime, out / names[regime]))
    paths.append(plot_sinr(output, out / "fig4_sinr.png"))
    return paths


def render_ccdf_only(output: SweepOutput, out_dir: str | Path) -> list[Path]:
    return [plot_ccdf(output, Path(out_dir) / "fig1_ccdf.png")]


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
