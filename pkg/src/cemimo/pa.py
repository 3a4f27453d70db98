"""Clipped odd-order memoryless polynomial power amplifiers.

Measured PA coefficients are not available, so banks are synthesized: a
9th-order odd polynomial is least-squares fitted to a Rapp-type saturating
AM/AM curve and each antenna gets a slightly jittered copy.  Above its clip
amplitude a model holds the output magnitude at the clip-point value.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FitQualityError, NotCompressiveError
from .model import derive_rng
from .waveform import AntennaWaveform

ORDERS = (1, 3, 5, 7, 9)


@dataclass(frozen=True)
class PaFitSpec:
    smoothness: float = 2.0
    sat_out: float = 1.0
    perturbation_rel: float = 0.02
    fit_grid: int = 1000
    seed: int = 2017

    def __post_init__(self):
        if not self.smoothness > 0:
            raise ConfigurationError("smoothness must be > 0", field="smoothness")
        if not self.sat_out > 0:
            raise ConfigurationError("sat_out must be > 0", field="sat_out")
        if not 0 <= self.perturbation_rel <= 0.1:
            raise ConfigurationError("perturbation_rel must be in [0, 0.1]", field="perturbation_rel")
        if self.fit_grid < 10:
            raise ConfigurationError("fit_grid must be >= 10", field="fit_grid")


@dataclass(frozen=True)
class PaModel:
    coeffs: np.ndarray  # b1, b3, b5, b7, b9 (complex)
    clip_in: float
    antenna_index: int = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (5,):
            raise ConfigurationError("PA needs exactly five odd-order coefficients", field="coeffs")
        if abs(c[0]) == 0:
            raise ConfigurationError("small-signal gain b1 must be nonzero", field="coeffs")
        if not self.clip_in > 0:
            raise ConfigurationError("clip_in must be positive", field="clip_in")
        object.__setattr__(self, "coeffs", c)

    @property
    def small_signal_gain(self) -> complex:
        return complex(self.coeffs[0])

    def complex_gain(self, amplitude) -> np.ndarray:
        """Output/input ratio for input amplitudes at or below the clip point."""
        a2 = np.asarray(amplitude, dtype=float) ** 2
        return np.polyval(self.coeffs[::-1], a2)

    def am_am(self, amplitude) -> np.ndarray:
        a = np.asarray(amplitude, dtype=float)
        ac = np.minimum(a, self.clip_in)
        return ac * np.abs(self.complex_gain(ac))

    def is_monotone(self, n_points: int = 1000) -> bool:
        if not np.isfinite(self.clip_in):
            return True
        g = self.am_am(np.linspace(0, self.clip_in, n_points))
        return bool(np.all(np.diff(g) >= -1e-12))

    def to_dict(self) -> dict:
        return {
            "antenna_index": self.antenna_index,
            "coeffs_re": [float(v) for v in self.coeffs.real],
            "coeffs_im": [float(v) for v in self.coeffs.imag],
            "clip_in": self.clip_in if np.isfinite(self.clip_in) else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PaModel":
        coeffs = np.asarray(d["coeffs_re"], dtype=float) + 1j * np.asarray(d["coeffs_im"], dtype=float)
        clip = d.get("clip_in")
        return cls(coeffs, math.inf if clip is None else float(clip), int(d.get("antenna_index", 0)))


def reference_am_am(amplitude, smoothness: float, sat_out: float) -> np.ndarray:
    a = np.asarray(amplitude, dtype=float)
    p = smoothness
    return a * (1 + (a / sat_out) ** (2 * p)) ** (-1 / (2 * p))


def _first_peak(model_coeffs: np.ndarray, grid: np.ndarray) -> float:
    g = grid * np.abs(np.polyval(model_coeffs[::-1], grid**2))
    falling = np.flatnonzero(np.diff(g) < 0)
    return float(grid[falling[0]] if falling.size else grid[-1])


def fit_pa_bank(spec: PaFitSpec, n_antennas: int) -> list[PaModel]:
    """Fit the odd polynomial once, then jitter its coefficients per antenna."""
    if n_antennas < 1:
        raise ConfigurationError("n_antennas must be >= 1", field="n_antennas")
    a = np.linspace(0.0, 1.2 * spec.sat_out, spec.fit_grid)
    ref = reference_am_am(a, spec.smoothness, spec.sat_out)
    basis = np.stack([a**k for k in ORDERS], axis=1)
    coeffs, *_ = np.linalg.lstsq(basis, ref, rcond=None)
    resid = math.sqrt(np.mean((basis @ coeffs - ref) ** 2))
    if resid > 0.05 * spec.sat_out:
        raise FitQualityError(
            f"9th-order fit residual {resid:.4f} exceeds 5% of sat_out; reduce smoothness", resid
        )
    rng = derive_rng(spec.seed, 7)
    jitter = 1 + spec.perturbation_rel * rng.standard_normal((n_antennas, len(ORDERS)))
    fine = np.linspace(0.0, 1.2 * spec.sat_out, 10 * spec.fit_grid)
    bank = []
    for n in range(n_antennas):
        c = (coeffs * jitter[n]).astype(complex)
        bank.append(PaModel(c, _first_peak(c, fine), n))
    return bank


def pa_apply(model: PaModel, waveform: AntennaWaveform | np.ndarray):
    """Memoryless polynomial map with the output magnitude frozen above ``clip_in``."""
    if isinstance(waveform, AntennaWaveform):
        out = pa_apply(model, waveform.samples)
        return AntennaWaveform(out, waveform.oversampling, waveform.symbol_count,
                               waveform.antenna_index, waveform.cropped)
    x = np.asarray(waveform, dtype=complex)
    mag = np.abs(x)
    gain = model.complex_gain(np.minimum(mag, model.clip_in))
    over = mag > model.clip_in
    if np.any(over):
        # Beyond the clip point: |z| = clip * |gain(clip)|, phase of the clip-point output.
        gain = np.where(over, gain * model.clip_in / np.where(over, mag, 1.0), gain)
    return x * gain


def apply_bank(bank: list[PaModel], samples: np.ndarray) -> np.ndarray:
    """Apply one model per row of an (N_t, T) waveform array."""
    return np.stack([pa_apply(m, row) for m, row in zip(bank, samples)])


def compression_point_1db(model: PaModel, rel_tol: float = 1e-6) -> float:
    """Smallest input amplitude where the gain is 1 dB below ``|b1|``."""
    b1 = abs(model.coeffs[0])
    target = b1 * 10 ** (-1 / 20)
    top = model.clip_in if np.isfinite(model.clip_in) else None
    if top is None:
        raise NotCompressiveError("linear or unclipped model never compresses by 1 dB")

    def gain(a):
        return np.abs(model.complex_gain(a))

    grid = np.linspace(0, top, 4001)[1:]
    below = np.flatnonzero(gain(grid) <= target)
    if below.size == 0:
        raise NotCompressiveError("gain stays within 1 dB of small-signal gain up to the clip point")
    hi = grid[below[0]]
    lo = grid[below[0] - 1] if below[0] > 0 else 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if gain(mid) <= target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def drive_at_power(waveform: AntennaWaveform | np.ndarray, model: PaModel, rms_target: float,
                   reference_rms: float | None = None):
    """Scale a PA input to an RMS amplitude and report the back-off from A_1dB.

    With ``reference_rms`` the scale is ``rms_target / reference_rms``, so a
    whole array can share one drive factor; the reported back-off then uses
    this waveform's own driven RMS.  Returns ``(scaled, scale, backoff_db)``;
    divide the PA output by ``scale * model.small_signal_gain`` to unscale.
    """
    samples = waveform.samples if isinstance(waveform, AntennaWaveform) else np.asarray(waveform)
    if samples.size == 0:
        raise ConfigurationError("cannot drive an empty waveform", field="waveform")
    own_rms = math.sqrt(float(np.mean(np.abs(samples) ** 2)))
    if own_rms == 0:
        raise ConfigurationError("cannot drive a zero-power waveform", field="waveform")
    scale = rms_target / (reference_rms if reference_rms is not None else own_rms)
    driven_rms = own_rms * scale
    backoff = 20 * math.log10(compression_point_1db(model) / driven_rms)
    scaled = samples * scale
    if isinstance(waveform, AntennaWaveform):
        scaled = AntennaWaveform(scaled, waveform.oversampling, waveform.symbol_count,
                                 waveform.antenna_index, waveform.cropped)
    return scaled, scale, backoff


def bank_to_json(bank: list[PaModel], spec: PaFitSpec | None = None) -> str:
    doc = {"models": [m.to_dict() for m in bank]}
    if spec is not None:
        doc["fit_spec"] = asdict(spec)
    return json.dumps(doc, sort_keys=True, indent=2)


def bank_from_json(text: str) -> list[PaModel]:
    doc = json.loads(text)
    return [PaModel.from_dict(d) for d in doc["models"]]


def save_bank(path: str | Path, bank: list[PaModel], spec: PaFitSpec | None = None) -> None:
    Path(path).write_text(bank_to_json(bank, spec))


def load_bank(path: str | Path) -> list[PaModel]:
    return bank_from_json(Path(path).read_text())


def bank_hash(bank: list[PaModel]) -> str:
    payload = json.dumps([m.to_dict() for m in bank], sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()
