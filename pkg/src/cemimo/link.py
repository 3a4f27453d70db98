"""Channel propagation, matched-filter reception, detection and link metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import erfc

from .errors import ConfigurationError
from .model import MuChannel, derive_rng, qam16_demap
from .waveform import AntennaWaveform, RrcFilter

SINR_CEILING_DB = 60.0


@dataclass(frozen=True)
class RxFrame:
    symbols: np.ndarray
    user_index: int = 0


@dataclass(frozen=True)
class LinkMetrics:
    ber: float
    sinr_db: float
    mui_ratio_db: float
    evm_rms: float


def _as_array(waveforms) -> np.ndarray:
    if isinstance(waveforms, np.ndarray):
        return np.atleast_2d(waveforms)
    rows = [w.samples if isinstance(w, AntennaWaveform) else np.asarray(w) for w in waveforms]
    if len({r.shape[-1] for r in rows}) != 1:
        raise ConfigurationError("antenna waveforms must have equal length", field="pa_outputs")
    return np.stack(rows)


def propagate(channel: MuChannel, pa_outputs, noise_std: float, seed: int | np.random.Generator) -> np.ndarray:
    """y_k[t] = sum_n h_kn z_n[t] + w_k[t]; returns a (K, T) array."""
    z = _as_array(pa_outputs)
    if z.shape[0] != channel.n_antennas:
        raise ConfigurationError(
            f"got {z.shape[0]} antenna waveforms for {channel.n_antennas} antennas", field="pa_outputs"
        )
    y = channel.entries @ z
    if noise_std > 0:
        rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, 3)
        w = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        y = y + (noise_std / math.sqrt(2)) * w
    return y


def receive(waveform, flt: RrcFilter, gain_ref, n_symbols: int | None = None, user_index: int = 0) -> RxFrame:
    """Matched filter, sample at symbol instants after the cascade delay, divide by ``gain_ref``.

    ``gain_ref`` may be a scalar or one value per symbol.
    """
    g = np.asarray(gain_ref)
    if np.any(g == 0):
        raise ConfigurationError("gain_ref must be nonzero", field="gain_ref")
    y = waveform.samples if isinstance(waveform, AntennaWaveform) else np.asarray(waveform)
    L = flt.oversampling
    if n_symbols is None:
        n_symbols = (y.shape[-1] - flt.delay) // L
    mf = fftconvolve(y, flt.taps[::-1].reshape((1,) * (y.ndim - 1) + (-1,)), axes=-1)
    idx = flt.delay + L * np.arange(n_symbols)
    return RxFrame(mf[..., idx] / g, user_index)


def detect_and_ber(rx: RxFrame | np.ndarray, reference_bits: np.ndarray) -> float:
    """Hard 16-QAM decisions against Gray reference bits; returns the bit error rate."""
    sym = rx.symbols if isinstance(rx, RxFrame) else np.asarray(rx)
    ref = np.asarray(reference_bits)
    if ref.shape != sym.shape + (4,):
        raise ConfigurationError(
            f"bits shape {ref.shape} does not match symbols shape {sym.shape}", field="reference_bits"
        )
    return bit_errors(sym, ref) / ref.size


def bit_errors(symbols: np.ndarray, reference_bits: np.ndarray) -> int:
    return int(np.count_nonzero(qam16_demap(symbols) != reference_bits))


def ber_16qam_awgn(esn0_db) -> np.ndarray:
    """Exact Gray 16-QAM bit error rate in AWGN."""
    x = np.sqrt(10 ** (np.asarray(esn0_db, dtype=float) / 10) / 5)

    def q(v):
        return 0.5 * erfc(v / math.sqrt(2))

    return 0.25 * (3 * q(x) + 2 * q(3 * x) - q(5 * x))


def sinr_estimate(rx, tx, ceiling_db: float = SINR_CEILING_DB) -> float:
    """Least-squares gain fit rx ~ g*tx; residual power lumps noise, MUI, ISI and distortion."""
    r = np.ravel(rx.symbols if isinstance(rx, RxFrame) else rx)
    t = np.ravel(tx)
    if r.size != t.size:
        raise ConfigurationError("rx and tx lengths differ", field="tx")
    if r.size < 100:
        raise ConfigurationError("SINR estimate needs at least 100 symbol pairs", field="rx")
    et = np.vdot(t, t).real
    if et == 0:
        raise ConfigurationError("tx symbols carry no energy", field="tx")
    g = np.vdot(t, r) / et
    resid = np.mean(np.abs(r - g * t) ** 2)
    useful = abs(g) ** 2 * et / t.size
    if resid <= useful * 10 ** (-ceiling_db / 10):
        return float(ceiling_db)
    return float(10 * math.log10(useful / resid))


def mui_ratio_db(channel: MuChannel, precoded, symbols, alpha) -> float:
    """Aggregate signal-to-MUI over frames at symbol rate, before the PAs."""
    x = np.atleast_2d(getattr(precoded, "samples", precoded))
    s = np.atleast_2d(getattr(symbols, "symbols", symbols))
    if x.shape[0] != s.shape[0] or x.shape[1] != channel.n_antennas or s.shape[1] != channel.k_users:
        raise ConfigurationError("precoded frames, symbols and channel dimensions disagree", field="precoded")
    a = np.asarray(alpha, dtype=float)
    a = a[:, None] if a.ndim == 1 else a
    wanted = a * s
    mui = np.sum(np.abs(x @ channel.entries.T - wanted) ** 2)
    sig = np.sum(np.abs(wanted) ** 2)
    if mui == 0:
        return math.inf
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(sig / mui))


def evm_rms(rx, tx) -> float:
    r = np.ravel(rx.symbols if isinstance(rx, RxFrame) else rx)
    t = np.ravel(tx)
    return float(math.sqrt(np.mean(np.abs(r - t) ** 2) / np.mean(np.abs(t) ** 2)))
