"""Pulse shaping and envelope statistics for the antenna waveforms."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigurationError
from .model import PrecodedFrame


@dataclass(frozen=True)
class RrcFilter:
    """Root raised-cosine taps spanning ``order`` symbols at ``oversampling`` samples/symbol.

    The tap count is ``order * oversampling + 1``; the cascade of the filter
    with itself therefore peaks ``order * oversampling`` samples after the
    input impulse.
    """

    taps: np.ndarray
    order: int
    rolloff: float
    oversampling: int

    @property
    def delay(self) -> int:
        """Group delay of a transmit/receive cascade, in samples."""
        return len(self.taps) - 1


@dataclass(frozen=True)
class AntennaWaveform:
    samples: np.ndarray
    oversampling: int
    symbol_count: int
    antenna_index: int = 0
    cropped: bool = False


@dataclass(frozen=True)
class CcdfCurve:
    thresholds_db: np.ndarray
    probabilities: np.ndarray

    def to_csv(self, path: str | Path) -> None:
        write_ccdf_csv(path, self)


def rrc_impulse(t: np.ndarray, rolloff: float) -> np.ndarray:
    """Unnormalized RRC pulse at times ``t`` (in symbol periods)."""
    b = rolloff
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    at_zero = np.isclose(t, 0.0, atol=1e-12)
    at_sing = np.isclose(np.abs(t), 1.0 / (4 * b), atol=1e-12)
    regular = ~(at_zero | at_sing)
    tr = t[regular]
    num = np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))
    den = np.pi * tr * (1 - (4 * b * tr) ** 2)
    out[regular] = num / den
    out[at_zero] = 1 - b + 4 * b / np.pi
    out[at_sing] = (b / math.sqrt(2)) * (
        (1 + 2 / np.pi) * math.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * math.cos(np.pi / (4 * b))
    )
    return out


def rrc_taps(order: int, rolloff: float, oversampling: int) -> RrcFilter:
    """Centered, unit-energy RRC filter spanning ``order`` symbols."""
    if order < 0:
        raise ConfigurationError(f"order must be >= 0, got {order}", field="rrc_order")
    if not 0 < rolloff <= 1:
        raise ConfigurationError(f"rolloff must be in (0, 1], got {rolloff}", field="rrc_rolloff")
    if oversampling < 1:
        raise ConfigurationError(f"oversampling must be >= 1, got {oversampling}", field="oversampling")
    n = order * oversampling + 1
    # Evaluate on |t| so the two halves are bit-identical.
    t = np.abs(np.arange(n) - (n - 1) / 2) / oversampling
    taps = rrc_impulse(t, rolloff)
    taps = taps / math.sqrt(np.sum(taps**2))
    return RrcFilter(taps, order, float(rolloff), oversampling)


def shape_array(symbols: np.ndarray, flt: RrcFilter) -> np.ndarray:
    """Zero-stuff (F, N_t) symbol rows by L and filter; returns (N_t, F*L + order*L)."""
    x = np.atleast_2d(np.asarray(symbols, dtype=complex))
    f_rows, n_t = x.shape
    up = np.zeros((n_t, f_rows * flt.oversampling), dtype=complex)
    up[:, :: flt.oversampling] = x.T
    return fftconvolve(up, flt.taps[None, :], axes=1)


def shape(frames: PrecodedFrame | list[PrecodedFrame], flt: RrcFilter) -> list[AntennaWaveform]:
    """Pulse-shape a stream of precoded frames into one waveform per antenna."""
    if isinstance(frames, PrecodedFrame):
        x = np.atleast_2d(frames.samples)
    else:
        widths = {f.n_antennas for f in frames}
        if len(widths) != 1:
            raise ConfigurationError("all frames must have the same number of antennas", field="frames")
        x = np.stack([f.samples for f in frames])
    wav = shape_array(x, flt)
    return [AntennaWaveform(w, flt.oversampling, x.shape[0], n) for n, w in enumerate(wav)]


def papr_db(waveform: AntennaWaveform | np.ndarray, window_symbols: int = 100,
            oversampling: int | None = None) -> np.ndarray:
    """PAPR of each non-overlapping window of ``window_symbols`` symbols.

    A trailing partial window is dropped.
    """
    if window_symbols < 1:
        raise ConfigurationError("window_symbols must be >= 1", field="papr_window_symbols")
    if isinstance(waveform, AntennaWaveform):
        samples, L = waveform.samples, waveform.oversampling
    else:
        samples, L = np.asarray(waveform), oversampling or 1
    win = window_symbols * L
    if win > samples.shape[-1]:
        raise ConfigurationError(
            f"window of {win} samples exceeds waveform length {samples.shape[-1]}", field="papr_window_symbols"
        )
    n_win = samples.shape[-1] // win
    p = np.abs(samples[..., : n_win * win]) ** 2
    p = p.reshape(p.shape[:-1] + (n_win, win))
    return 10 * np.log10(p.max(axis=-1) / p.mean(axis=-1))


def ccdf(values_db, thresholds_db) -> CcdfCurve:
    """Fraction of ``values_db`` strictly above each threshold."""
    v = np.sort(np.ravel(np.asarray(values_db, dtype=float)))
    t = np.asarray(thresholds_db, dtype=float)
    if v.size == 0:
        raise ConfigurationError("ccdf needs at least one value", field="values_db")
    if np.any(np.diff(t) < 0):
        raise ConfigurationError("thresholds must be ascending", field="thresholds_db")
    exceed = v.size - np.searchsorted(v, t, side="right")
    return CcdfCurve(t, exceed / v.size)


def ccdf_level(values_db, probability: float) -> float:
    """Smallest threshold whose exceedance probability is <= ``probability``."""
    v = np.sort(np.ravel(values_db))
    k = int(math.floor(probability * v.size))
    return float(v[max(v.size - 1 - k, 0)])


def write_ccdf_csv(path: str | Path, curve: CcdfCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["threshold_db", "probability"])
        for t, p in zip(curve.thresholds_db, curve.probabilities):
            w.writerow([f"{t:.4f}", f"{p:.6e}"])
