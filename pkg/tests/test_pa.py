import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cemimo.errors import ConfigurationError, FitQualityError, NotCompressiveError
from cemimo.pa import (
    PaFitSpec,
    PaModel,
    apply_bank,
    bank_from_json,
    bank_hash,
    bank_to_json,
    compression_point_1db,
    drive_at_power,
    fit_pa_bank,
    load_bank,
    pa_apply,
    reference_am_am,
    save_bank,
)
from cemimo.waveform import AntennaWaveform

CUBIC = PaModel(np.array([1, -0.1, 0, 0, 0], complex), math.sqrt(10 / 3))


def test_zero_perturbation_gives_identical_antennas():
    bank = fit_pa_bank(PaFitSpec(perturbation_rel=0.0), 6)
    for m in bank[1:]:
        np.testing.assert_array_equal(m.coeffs, bank[0].coeffs)
        assert m.clip_in == bank[0].clip_in


def test_sharp_knee_small_signal_gain_near_unity():
    bank = fit_pa_bank(PaFitSpec(smoothness=10.0, perturbation_rel=0.0), 1)
    assert abs(bank[0].small_signal_gain) == pytest.approx(1.0, abs=0.02)


def test_bank_is_deterministic():
    a = fit_pa_bank(PaFitSpec(), 24)
    b = fit_pa_bank(PaFitSpec(), 24)
    assert bank_to_json(a) == bank_to_json(b)
    assert bank_hash(a) == bank_hash(b)


def test_different_seed_changes_bank():
    assert bank_hash(fit_pa_bank(PaFitSpec(seed=1), 4)) != bank_hash(fit_pa_bank(PaFitSpec(seed=2), 4))


def test_default_bank_is_monotone_and_compressive():
    for m in fit_pa_bank(PaFitSpec(), 24):
        assert m.is_monotone()
        a1 = compression_point_1db(m)
        assert 0 < a1 < m.clip_in


def test_fit_tracks_reference_curve():
    spec = PaFitSpec(perturbation_rel=0.0)
    m = fit_pa_bank(spec, 1)[0]
    a = np.linspace(0, m.clip_in, 200)
    ref = reference_am_am(a, spec.smoothness, spec.sat_out)
    assert np.sqrt(np.mean((m.am_am(a) - ref) ** 2)) < 0.05 * spec.sat_out


def test_fit_quality_error_when_reference_is_unreachable(monkeypatch):
    import cemimo.pa as pa

    # A saw-tooth reference no 9th-order odd polynomial can follow.
    monkeypatch.setattr(pa, "reference_am_am", lambda a, p, s: np.where(np.sin(40 * a) > 0, a, 0.0))
    with pytest.raises(FitQualityError) as exc:
        pa.fit_pa_bank(PaFitSpec(), 2)
    assert exc.value.residual_rms > 0.05


@pytest.mark.parametrize("kwargs", [dict(smoothness=0), dict(sat_out=-1), dict(perturbation_rel=0.5),
                                    dict(fit_grid=3)])
def test_fit_spec_validation(kwargs):
    with pytest.raises(ConfigurationError):
        PaFitSpec(**kwargs)


def test_linear_pa_is_identity():
    m = PaModel(np.array([1, 0, 0, 0, 0], complex), math.inf)
    x = np.random.default_rng(0).standard_normal(64) * 5 + 1j
    np.testing.assert_allclose(pa_apply(m, x), x)


def test_cubic_pa_direct_evaluation():
    x = np.exp(1j * np.array([0.3, -2.0]))
    z = pa_apply(CUBIC, x)
    np.testing.assert_allclose(np.abs(z), 0.9)
    np.testing.assert_allclose(np.angle(z), np.angle(x))


@given(st.floats(1.0, 50.0), st.floats(-np.pi, np.pi))
def test_clipping_freezes_output_magnitude(factor, phase):
    x = factor * CUBIC.clip_in * np.exp(1j * phase)
    at_clip = pa_apply(CUBIC, np.array([CUBIC.clip_in]))[0]
    z = pa_apply(CUBIC, np.array([x]))[0]
    assert abs(z) == pytest.approx(abs(at_clip))
    assert np.angle(z) == pytest.approx(phase, abs=1e-12)


def test_twice_clip_equals_clip_output():
    bank = fit_pa_bank(PaFitSpec(), 3)
    for m in bank:
        assert abs(pa_apply(m, np.array([2 * m.clip_in]))[0]) == pytest.approx(float(m.am_am(m.clip_in)))


def test_pa_preserves_waveform_metadata():
    w = AntennaWaveform(np.ones(8, complex), 8, 1, antenna_index=3)
    out = pa_apply(CUBIC, w)
    assert out.antenna_index == 3 and out.oversampling == 8


def test_apply_bank_rowwise():
    bank = fit_pa_bank(PaFitSpec(), 3)
    x = np.full((3, 5), 0.3 + 0.1j)
    z = apply_bank(bank, x)
    for n in range(3):
        np.testing.assert_allclose(z[n], pa_apply(bank[n], x[n]))


def test_compression_point_closed_form():
    expected = math.sqrt((1 - 10 ** (-1 / 20)) / 0.1)
    assert compression_point_1db(CUBIC) == pytest.approx(expected, rel=1e-6)
    assert expected == pytest.approx(1.0427, abs=2e-4)


@given(st.floats(0.01, 100))
def test_compression_point_scale_invariant(c):
    scaled = PaModel(CUBIC.coeffs * c, CUBIC.clip_in)
    assert compression_point_1db(scaled) == pytest.approx(compression_point_1db(CUBIC), rel=1e-5)


def test_linear_pa_not_compressive():
    with pytest.raises(NotCompressiveError):
        compression_point_1db(PaModel(np.array([1, 0, 0, 0, 0], complex), math.inf))
    with pytest.raises(NotCompressiveError):
        compression_point_1db(PaModel(np.array([1, 0, 0, 0, 0], complex), 2.0))


def test_drive_at_compression_point():
    x = np.exp(1j * np.linspace(0, 10, 100))
    a1 = compression_point_1db(CUBIC)
    _, _, backoff = drive_at_power(x, CUBIC, a1)
    assert backoff == pytest.approx(0.0, abs=1e-9)
    scaled, scale, backoff = drive_at_power(x, CUBIC, a1 / 2)
    assert backoff == pytest.approx(20 * math.log10(2))
    assert np.sqrt(np.mean(np.abs(scaled) ** 2)) == pytest.approx(a1 / 2)
    assert scale == pytest.approx(a1 / 2)


def test_drive_with_shared_reference():
    x = 2 * np.ones(10)
    _, scale, backoff = drive_at_power(x, CUBIC, 0.5, reference_rms=1.0)
    assert scale == 0.5
    assert backoff == pytest.approx(20 * math.log10(compression_point_1db(CUBIC) / 1.0))


def test_drive_zero_power():
    with pytest.raises(ConfigurationError):
        drive_at_power(np.zeros(5), CUBIC, 1.0)


def test_model_validation():
    with pytest.raises(ConfigurationError):
        PaModel(np.ones(4, complex), 1.0)
    with pytest.raises(ConfigurationError):
        PaModel(np.array([0, 1, 0, 0, 0], complex), 1.0)
    with pytest.raises(ConfigurationError):
        PaModel(np.ones(5, complex), 0.0)


def test_bank_json_roundtrip(tmp_path):
    bank = fit_pa_bank(PaFitSpec(), 4) + [PaModel(np.array([1, 0, 0, 0, 0], complex), math.inf, 4)]
    path = tmp_path / "bank.json"
    save_bank(path, bank, PaFitSpec())
    back = load_bank(path)
    assert bank_hash(back) == bank_hash(bank)
    assert back[-1].clip_in == math.inf
    assert bank_from_json(bank_to_json(bank))[0].antenna_index == 0
