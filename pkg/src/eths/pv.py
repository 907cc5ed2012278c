"""PV generation traces: bundled clear-sky day, noise processes, CSV I/O."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

BUILTIN_PEAK_KW = 95.0
BUILTIN_SUNRISE_FRAC = 0.25   # 6 am on a midnight-aligned day
BUILTIN_SUNSET_FRAC = 0.75    # 6 pm


@dataclass(frozen=True)
class PvTrace:
    """Predicted and observed PV power per tick, kW."""

    predicted: tuple[float, ...]
    observed: tuple[float, ...]

    def __post_init__(self):
        if len(self.predicted) != len(self.observed):
            raise ValidationError("predicted and observed traces must have equal length")
        if any(v < 0 for v in self.predicted) or any(v < 0 for v in self.observed):
            raise ValidationError("PV power must be >= 0")

    def __len__(self) -> int:
        return len(self.predicted)

    @property
    def predicted_arr(self) -> np.ndarray:
        return np.asarray(self.predicted, dtype=float)

    @property
    def observed_arr(self) -> np.ndarray:
        return np.asarray(self.observed, dtype=float)


def builtin_clear_sky(horizon: int, peak_kw: float = BUILTIN_PEAK_KW) -> np.ndarray:
    """Bell-shaped clear-sky day: sin^2 between sunrise and sunset, peak <= 100 kW."""
    if peak_kw < 0 or peak_kw > 100.0:
        raise ValidationError("pv peak_kw must lie in [0, 100]")
    k = np.arange(horizon, dtype=float)
    rise = BUILTIN_SUNRISE_FRAC * horizon
    span = (BUILTIN_SUNSET_FRAC - BUILTIN_SUNRISE_FRAC) * horizon
    shape = np.sin(np.pi * np.clip((k - rise) / span, 0.0, 1.0)) ** 2
    return peak_kw * shape


def apply_cloud_noise(predicted: np.ndarray, rng: np.random.Generator,
                      n_events: int = 3, depth_range=(0.3, 0.8),
                      mean_duration_ticks: int = 8,
                      gauss_sigma_kw: float = 0.0) -> np.ndarray:
    """Observation = prediction degraded by random cloud passages.

    Each event scales the prediction down by a random depth over a random
    interval; optional Gaussian jitter is added during daylight. The result
    is clamped to be non-negative.
    """
    horizon = len(predicted)
    observed = predicted.copy()
    daylight = predicted > 1e-9
    for _ in range(n_events):
        start = int(rng.integers(0, horizon))
        length = 1 + int(rng.geometric(1.0 / max(mean_duration_ticks, 1)))
        depth = float(rng.uniform(*depth_range))
        observed[start:start + length] *= (1.0 - depth)
    if gauss_sigma_kw > 0:
        observed = observed + gauss_sigma_kw * rng.standard_normal(horizon) * daylight
    return np.clip(observed, 0.0, None)


def make_pv_trace(horizon: int, seed: int, *, peak_kw: float = BUILTIN_PEAK_KW,
                  noise_kind: str = "clouds", n_events: int = 3,
                  depth_range=(0.3, 0.8), mean_duration_ticks: int = 8,
                  gauss_sigma_kw: float = 0.0,
                  predicted: np.ndarray | None = None) -> PvTrace:
    """Bundled prediction plus a seeded observation realization."""
    if predicted is None:
        predicted = builtin_clear_sky(horizon, peak_kw)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5eed]))
    if noise_kind == "none":
        observed = predicted.copy()
    elif noise_kind == "clouds":
        observed = apply_cloud_noise(predicted, rng, n_events=n_events,
                                     depth_range=depth_range,
                                     mean_duration_ticks=mean_duration_ticks,
                                     gauss_sigma_kw=gauss_sigma_kw)
    elif noise_kind == "gauss":
        daylight = predicted > 1e-9
        observed = np.clip(
            predicted + gauss_sigma_kw * rng.standard_normal(horizon) * daylight, 0.0, None)
    else:
        raise ValidationError(f"unknown pv noise kind {noise_kind!r}")
    return PvTrace(tuple(predicted.tolist()), tuple(observed.tolist()))


def read_pv_csv(path) -> PvTrace:
    """Read a trace from CSV with header ``tick,predicted_kw,observed_kw``."""
    predicted, observed = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"tick", "predicted_kw", "observed_kw"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValidationError(
                f"PV CSV must have header tick,predicted_kw,observed_kw (got {reader.fieldnames})")
        for expected_tick, row in enumerate(reader):
            if int(row["tick"]) != expected_tick:
                raise ValidationError(f"PV CSV ticks must be consecutive from 0, got {row['tick']}")
            predicted.append(float(row["predicted_kw"]))
            observed.append(float(row["observed_kw"]))
    return PvTrace(tuple(predicted), tuple(observed))


def write_pv_csv(path, trace: PvTrace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "predicted_kw", "observed_kw"])
        for k, (p, o) in enumerate(zip(trace.predicted, trace.observed)):
            writer.writerow([k, repr(float(p)), repr(float(o))])
