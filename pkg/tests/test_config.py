import json

import pytest

from cemimo.config import ExperimentConfig
from cemimo.errors import ConfigurationError
from cemimo.precoding import CeOptions


def test_defaults_match_experiment_setup():
    c = ExperimentConfig()
    assert (c.k_users, c.n_antennas, c.alphabet) == (4, 24, "QAM16")
    assert (c.rrc_order, c.rrc_rolloff, c.mui_target_db) == (33, 0.4, 20.0)
    assert c.tx_power_sweep_db == tuple(float(v) for v in range(16))
    assert c.n_trials * c.n_symbols_per_trial * c.k_users * 4 >= 1.6e6


def test_json_round_trip():
    c = ExperimentConfig(n_trials=3, ce_opts=CeOptions(m_subiters=7), tx_power_sweep_db=(1, 2.5))
    assert ExperimentConfig.from_json(c.to_json()) == c


def test_partial_document_fills_defaults():
    c = ExperimentConfig.from_dict({"n_trials": 2, "ce_opts": {"n_passes": 5}})
    assert c.n_trials == 2 and c.ce_opts.n_passes == 5 and c.ce_opts.m_subiters == 20


@pytest.mark.parametrize("doc,field", [
    ({"n_trails": 2}, "n_trails"),
    ({"ce_opts": {"mu": 1}}, "ce_opts.mu"),
    ({"pa_config": {"knee": 2}}, "pa_config.knee"),
])
def test_unknown_keys_rejected(doc, field):
    with pytest.raises(ConfigurationError) as ei:
        ExperimentConfig.from_dict(doc)
    assert ei.value.field == field


@pytest.mark.parametrize("kwargs,field", [
    ({"n_antennas": 4}, "n_antennas"),
    ({"alphabet": "QPSK"}, "alphabet"),
    ({"n_trials": 0}, "n_trials"),
    ({"rrc_rolloff": 0.0}, "rrc_rolloff"),
    ({"n_symbols_per_trial": 60}, "n_symbols_per_trial"),
    ({"tx_power_sweep_db": (3, 1)}, "tx_power_sweep_db"),
    ({"power_regimes": ("FixedSNR",)}, "power_regimes"),
    ({"noise_reference": "symbol"}, "noise_reference"),
    ({"master_seed": -1}, "master_seed"),
])
def test_validation(kwargs, field):
    with pytest.raises(ConfigurationError) as ei:
        ExperimentConfig(**kwargs)
    assert ei.value.field == field


def test_bad_json_and_non_object():
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_json("{not json")
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_json(json.dumps([1, 2]))
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"ce_opts": 3})


def test_with_seed_and_load(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(ExperimentConfig().with_seed(99).to_json())
    assert ExperimentConfig.load(p).master_seed == 99
