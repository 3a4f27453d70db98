"""Domain types and seeded random generation of channels and 16-QAM data.

Every random draw is a pure function of its parameters and an integer seed.
Per-trial streams are derived from a master seed with
:class:`numpy.random.SeedSequence` spawn keys, so trials can be evaluated in
any order (or concurrently) and still reproduce bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# Per-axis Gray code: bit pair -> amplitude level (before 1/sqrt(10) scaling).
_GRAY_LEVELS = {(0, 0): -3, (0, 1): -1, (1, 1): 1, (1, 0): 3}
_LEVEL_BITS = {v: k for k, v in _GRAY_LEVELS.items()}
QAM16_SCALE = 1.0 / np.sqrt(10.0)
BITS_PER_SYMBOL = 4


def _build_constellation():
    points = np.empty(16, dtype=complex)
    bits = np.empty((16, 4), dtype=np.uint8)
    for idx in range(16):
        b = [(idx >> (3 - i)) & 1 for i in range(4)]
        re = _GRAY_LEVELS[(b[0], b[1])]
        im = _GRAY_LEVELS[(b[2], b[3])]
        points[idx] = (re + 1j * im) * QAM16_SCALE
        bits[idx] = b
    return points, bits


QAM16_POINTS, QAM16_BITS = _build_constellation()


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream addressed by ``keys`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)


def qam16_map(bits: np.ndarray) -> np.ndarray:
    """Map bits (..., 4) to unit-energy Gray 16-QAM symbols (...)."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] != BITS_PER_SYMBOL:
        raise ConfigurationError("last axis of bits must have length 4", field="bits")
    index = bits[..., 0] * 8 + bits[..., 1] * 4 + bits[..., 2] * 2 + bits[..., 3]
    return QAM16_POINTS[index]


def qam16_demap(symbols: np.ndarray) -> np.ndarray:
    """Minimum-distance hard decision, returning Gray bits with shape (..., 4)."""
    symbols = np.asarray(symbols)
    # Per-axis slicing is minimum distance for a square grid.
    levels = np.array([-3, -1, 1, 3])
    def axis_bits(x):
        k = np.clip(np.floor((x / QAM16_SCALE + 4) / 2).astype(np.int64), 0, 3)
        lut = np.array([_LEVEL_BITS[v] for v in levels], dtype=np.uint8)
        return lut[k]
    bi = axis_bits(symbols.real)
    bq = axis_bits(symbols.imag)
    return np.concatenate([bi, bq], axis=-1)


@dataclass(frozen=True)
class MuChannel:
    """Flat-fading multiuser channel, ``entries[k, n]`` links antenna n to user k."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.entries, dtype=complex)
        if h.ndim != 2 or 0 in h.shape:
            raise ConfigurationError("channel must be a non-empty K x N_t matrix", field="entries")
        if not np.all(np.isfinite(h)):
            raise ConfigurationError("channel entries must be finite", field="entries")
        # N_t > K is enforced where channels are drawn; square channels stay
        # constructible for hand-checked examples.
        object.__setattr__(self, "entries", h)

    @property
    def k_users(self) -> int:
        return self.entries.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class SymbolFrame:
    """16-QAM symbols, one row of K user symbols per symbol instant.

    ``symbols`` has shape (K,) for a single frame or (F, K) for F consecutive
    frames; ``bits`` carries the Gray labels with a trailing axis of 4.
    """

    symbols: np.ndarray
    bits: np.ndarray | None = None
    alphabet: str = "QAM16"

    def __post_init__(self):
        s = np.asarray(self.symbols, dtype=complex)
        if self.alphabet != "QAM16":
            raise ConfigurationError("only QAM16 is supported", field="alphabet")
        if s.ndim not in (1, 2):
            raise ConfigurationError("symbols must be (K,) or (F, K)", field="symbols")
        if not np.all(np.min(np.abs(s[..., None] - QAM16_POINTS), axis=-1) < 1e-9):
            raise ConfigurationError("symbols must be 16-QAM constellation points", field="symbols")
        object.__setattr__(self, "symbols", s)
        bits = qam16_demap(s) if self.bits is None else np.asarray(self.bits)
        if bits.shape != s.shape + (BITS_PER_SYMBOL,):
            raise ConfigurationError(f"bits shape {bits.shape} does not match symbols {s.shape}", field="bits")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return 1 if self.symbols.ndim == 1 else self.symbols.shape[0]

    def __getitem__(self, i) -> "SymbolFrame":
        if self.symbols.ndim == 1:
            raise TypeError("single frame is not indexable")
        return SymbolFrame(self.symbols[i], self.bits[i], self.alphabet)

    @property
    def k_users(self) -> int:
        return self.symbols.shape[-1]


@dataclass(frozen=True)
class PrecodedFrame:
    """Antenna samples at symbol rate, shape (N_t,) or (F, N_t)."""

    samples: np.ndarray
    sum_power_target: float
    gain: np.ndarray | float = field(default=1.0)

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))

    def __len__(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.samples.shape[-1]


def draw_channel(k_users: int, n_antennas: int, seed: int) -> MuChannel:
    """i.i.d. CN(0, 1) Rayleigh channel, deterministic in ``seed``."""
    if k_users < 1:
        raise ConfigurationError(f"k_users must be >= 1, got {k_users}", field="k_users")
    if n_antennas <= k_users:
        raise ConfigurationError(
            f"n_antennas ({n_antennas}) must exceed k_users ({k_users})", field="n_antennas"
        )
    rng = derive_rng(seed, 0)
    z = rng.standard_normal((k_users, n_antennas)) + 1j * rng.standard_normal((k_users, n_antennas))
    return MuChannel(z / np.sqrt(2.0))


def draw_symbols(k_users: int, n_frames: int, seed: int) -> SymbolFrame:
    """Uniform i.i.d. 16-QAM frames, shape (n_frames, k_users)."""
    if k_users < 1:
        raise ConfigurationError(f"k_users must be >= 1, got {k_users}", field="k_users")
    if n_frames < 1:
        raise ConfigurationError(f"n_frames must be >= 1, got {n_frames}", field="n_frames")
    rng = derive_rng(seed, 1)
    bits = rng.integers(0, 2, size=(n_frames, k_users, BITS_PER_SYMBOL), dtype=np.uint8)
    return SymbolFrame(qam16_map(bits), bits)
