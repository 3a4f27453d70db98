"""Experiment configuration and its JSON form.

The JSON document mirrors the dataclass fields one to one; nested objects
``pa_config`` and ``ce_opts`` map to :class:`~cemimo.pa.PaFitSpec` and
:class:`~cemimo.precoding.CeOptions`.  Unknown keys are rejected at every
level so typos fail loudly instead of silently running defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .pa import PaFitSpec
from .precoding import CeOptions

REGIMES = ("FixedSumPower", "FixedEirp")
NOISE_REFERENCES = ("per_sample", "post_filter")


def _default_sweep() -> tuple[float, ...]:
    return tuple(float(v) for v in range(16))


@dataclass(frozen=True)
class ExperimentConfig:
    k_users: int = 4
    n_antennas: int = 24
    alphabet: str = "QAM16"
    n_symbols_per_trial: int = 2000
    n_trials: int = 50
    oversampling: int = 8
    rrc_order: int = 33
    rrc_rolloff: float = 0.4
    mui_target_db: float = 20.0
    power_regimes: tuple[str, ...] = REGIMES
    tx_power_sweep_db: tuple[float, ...] = field(default_factory=_default_sweep)
    noise_ref_snr_db: float = -1.0
    noise_reference: str = "per_sample"
    backoff_ref_db: float = 16.5
    papr_window_symbols: int = 100
    sinr_ceiling_db: float = 60.0
    master_seed: int = 20170901
    pa_config: PaFitSpec = field(default_factory=PaFitSpec)
    ce_opts: CeOptions = field(default_factory=CeOptions)

    def __post_init__(self):
        object.__setattr__(self, "tx_power_sweep_db", tuple(float(v) for v in self.tx_power_sweep_db))
        object.__setattr__(self, "power_regimes", tuple(self.power_regimes))
        if self.k_users < 1:
            raise ConfigurationError("k_users must be >= 1", field="k_users")
        if self.n_antennas <= self.k_users:
            raise ConfigurationError("n_antennas must exceed k_users", field="n_antennas")
        if self.alphabet != "QAM16":
            raise ConfigurationError("only QAM16 is supported", field="alphabet")
        for name in ("n_symbols_per_trial", "n_trials", "oversampling", "papr_window_symbols"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1", field=name)
        if self.rrc_order < 0:
            raise ConfigurationError("rrc_order must be >= 0", field="rrc_order")
        if not 0 < self.rrc_rolloff <= 1:
            raise ConfigurationError("rrc_rolloff must be in (0, 1]", field="rrc_rolloff")
        if self.n_symbols_per_trial <= 2 * self.rrc_order:
            raise ConfigurationError(
                "n_symbols_per_trial must exceed twice rrc_order (transients are discarded)",
                field="n_symbols_per_trial",
            )
        sweep = np.asarray(self.tx_power_sweep_db)
        if sweep.size == 0 or np.any(np.diff(sweep) <= 0):
            raise ConfigurationError("tx_power_sweep_db must be non-empty and strictly increasing",
                                     field="tx_power_sweep_db")
        bad = set(self.power_regimes) - set(REGIMES)
        if bad or not self.power_regimes:
            raise ConfigurationError(f"power_regimes must be drawn from {REGIMES}", field="power_regimes")
        if self.noise_reference not in NOISE_REFERENCES:
            raise ConfigurationError(f"noise_reference must be one of {NOISE_REFERENCES}",
                                     field="noise_reference")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must be an unsigned 64-bit integer", field="master_seed")

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, master_seed=int(seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["power_regimes"] = list(self.power_regimes)
        d["tx_power_sweep_db"] = list(self.tx_power_sweep_db)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigurationError("config document must be a JSON object")
        d = dict(d)
        nested = {"pa_config": PaFitSpec, "ce_opts": CeOptions}
        for key, typ in nested.items():
            if key in d:
                d[key] = _build(typ, d[key], key)
        return _build(cls, d, None)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())


def _build(typ, d, prefix):
    if not isinstance(d, dict):
        raise ConfigurationError(f"{prefix} must be a JSON object", field=prefix)
    known = {f.name for f in fields(typ)}
    unknown = sorted(set(d) - known)
    if unknown:
        where = f"{prefix}." if prefix else ""
        raise ConfigurationError(f"unknown config key(s): {', '.join(where + k for k in unknown)}",
                                 field=where + unknown[0])
    try:
        return typ(**d)
    except TypeError as exc:
        raise ConfigurationError(str(exc), field=prefix) from exc
