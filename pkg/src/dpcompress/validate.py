"""Accuracy sweep of tabulated models against the exact network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compress import compress_model, rmse_compare
from .compress.rmse import reference_predictions
from .presets import get_preset, reference_config

DEFAULT_N_CONFIGS = 100


@dataclass(frozen=True)
class ValidationReport:
    intervals: tuple
    rmse_e: tuple
    rmse_f: tuple
    slope_e: float
    slope_f: float
    n_configs: int
    n_atoms: int

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.rmse_e) < 0) and np.all(np.diff(self.rmse_f) < 0))

    def rows(self):
        return list(zip(self.intervals, self.rmse_e, self.rmse_f))


def loglog_slope(h, err) -> float:
    """Least-squares slope of log(err) against log(h); zeros give nan."""
    h, err = np.asarray(h, float), np.asarray(err, float)
    if h.size < 2 or np.any(err <= 0):
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def validation_configs(model, n_configs: int, seed: int, jitter: float = 0.1, preset=None):
    """Jittered lattices of the model's preset geometry, seeds ``seed .. seed+n-1``."""
    p = get_preset(preset or model.provenance.get("preset", "copper-like"))
    return [reference_config(p, jitter=jitter, seed=seed + k) for k in range(n_configs)]


def validate(model, intervals=(0.1, 0.01, 0.001), n_configs: int = DEFAULT_N_CONFIGS,
             seed: int = 0, *, jitter: float = 0.1, configs=None, fused: bool = True,
             preset=None) -> ValidationReport:
    """RMSE of energies and forces for each interval size, plus the
    log-log convergence slopes. One exact pass serves every interval."""
    intervals = tuple(float(h) for h in intervals)
    if not intervals or min(intervals) <= 0:
        raise ValueError("interval sizes must be positive")
    if list(intervals) != sorted(intervals, reverse=True):
        raise ValueError("interval sizes must be given in descending order")
    if configs is None:
        configs = validation_configs(model, n_configs, seed, jitter, preset)
    ref = reference_predictions(model, configs)
    es, fs = [], []
    for h in intervals:
        rep = rmse_compare(model, compress_model(model, h), configs, fused=fused, reference=ref)
        es.append(rep.rmse_e)
        fs.append(rep.rmse_f)
    return ValidationReport(intervals, tuple(es), tuple(fs), loglog_slope(intervals, es),
                            loglog_slope(intervals, fs), len(configs), configs[0].n_atoms)
