import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cemimo.errors import ConfigurationError
from cemimo.model import (
    QAM16_POINTS,
    MuChannel,
    SymbolFrame,
    derive_rng,
    draw_channel,
    draw_symbols,
    qam16_demap,
    qam16_map,
)

ALL_PATTERNS = np.array([[(v >> (3 - i)) & 1 for i in range(4)] for v in range(16)], dtype=np.int8)


def test_draw_channel_is_deterministic():
    a = draw_channel(4, 24, seed=7).entries
    b = draw_channel(4, 24, seed=7).entries
    assert a.tobytes() == b.tobytes()


def test_draw_channel_smallest_shape():
    h = draw_channel(1, 2, seed=123).entries
    assert h.shape == (1, 2)
    assert np.all(np.isfinite(h))


def test_channel_entry_variance_is_unit():
    h = np.concatenate([draw_channel(4, 24, seed=s).entries.ravel() for s in range(100)])
    assert h.size == 9600
    var = np.mean(np.abs(h - h.mean()) ** 2)
    assert 0.95 <= var <= 1.05


@pytest.mark.parametrize("k,n,field", [(0, 4, "k_users"), (4, 4, "n_antennas"), (5, 4, "n_antennas")])
def test_draw_channel_rejects_bad_dimensions(k, n, field):
    with pytest.raises(ConfigurationError) as exc:
        draw_channel(k, n, seed=1)
    assert exc.value.field == field


def test_symbol_power_is_unit():
    frames = draw_symbols(1, 16 * 10**4, seed=5)
    p = np.mean(np.abs(frames.symbols) ** 2)
    assert 0.99 <= p <= 1.01


def test_draw_symbols_is_deterministic():
    a = draw_symbols(4, 1, seed=3)
    b = draw_symbols(4, 1, seed=3)
    assert np.array_equal(a.symbols, b.symbols)
    assert np.array_equal(a.bits, b.bits)


def test_constellation_is_unit_energy_and_gray():
    assert np.isclose(np.mean(np.abs(QAM16_POINTS) ** 2), 1.0)
    pts = qam16_map(ALL_PATTERNS)
    # Nearest neighbours (distance 2/sqrt(10)) differ in exactly one bit.
    d = np.abs(pts[:, None] - pts[None, :])
    nearest = np.isclose(d, 2 / np.sqrt(10))
    flips = np.sum(ALL_PATTERNS[:, None, :] != ALL_PATTERNS[None, :, :], axis=-1)
    assert np.all(flips[nearest] == 1)


def test_demap_inverts_map_for_all_patterns():
    assert np.array_equal(qam16_demap(qam16_map(ALL_PATTERNS)), ALL_PATTERNS)


@given(st.lists(st.integers(0, 15), min_size=1, max_size=50),
       st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_demap_tolerates_small_perturbations(values, dx, dy):
    bits = ALL_PATTERNS[values]
    noisy = qam16_map(bits) + (dx + 1j * dy) / np.sqrt(10)
    assert np.array_equal(qam16_demap(noisy), bits)


def test_symbol_frame_indexing():
    frames = draw_symbols(3, 5, seed=1)
    assert len(frames) == 5
    assert frames.k_users == 3
    one = frames[2]
    assert np.array_equal(one.symbols, frames.symbols[2])


def test_symbol_frame_rejects_bad_bits():
    with pytest.raises(ConfigurationError) as exc:
        SymbolFrame(qam16_map(ALL_PATTERNS[:4]), np.zeros((3, 4), np.int8))
    assert exc.value.field == "bits"


def test_symbol_frame_rejects_off_constellation():
    with pytest.raises(ConfigurationError) as exc:
        SymbolFrame(np.zeros(4, complex))
    assert exc.value.field == "symbols"


def test_channel_rejects_non_finite():
    with pytest.raises(ConfigurationError):
        MuChannel(np.array([[1.0, np.nan]]))


def test_derive_rng_streams_are_independent():
    a = derive_rng(1, 0).standard_normal(4)
    b = derive_rng(1, 1).standard_normal(4)
    c = derive_rng(1, 0).standard_normal(4)
    assert not np.allclose(a, b)
    assert np.array_equal(a, c)
