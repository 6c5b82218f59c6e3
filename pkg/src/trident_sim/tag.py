"""Behavioural model of a frequency-selective backscatter tag.

The tag scans its detector filter across the bands, runs a running-winner
tournament of two-step comparisons, flags excessive excitation power and picks
the terminal-load pair it will toggle between.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rf
from .errors import ConfigError


def _default_series_lr():
    return rf.series_lr_load(0.25)


@dataclass(frozen=True)
class EnvelopeModel:
    slope: float = 0.048  # V/dB
    anchor_power: float = -20.0  # dBm
    anchor_voltage: float = 1.6  # V
    floor: float = -40.0  # dBm, detector sensitivity

    def __post_init__(self):
        if self.slope <= 0:
            raise ConfigError("slope must be positive", "envelope.slope")


def envelope_voltage(m: EnvelopeModel, power: float) -> float:
    if power < m.floor:
        return 0.0
    return max(0.0, m.anchor_voltage + m.slope * (power - m.anchor_power))


@dataclass(frozen=True)
class TagProfile:
    inductor: complex = complex(0.0, 50.0)
    capacitor: complex = complex(0.0, -50.0)
    series_lr: complex = field(default_factory=_default_series_lr)
    z0: float = 50.0
    detect_floor: float = -40.0  # dBm
    power_threshold: float = -20.0  # dBm
    compare_resolution: float = 0.5  # dB
    filter: rf.FilterProfile = field(default_factory=lambda: rf.FilterProfile(0.0))
    oob_residual: float = 18.0  # dB below in-band, out-of-band differential reflection
    power_adjuster: bool = True

    def __post_init__(self):
        if self.power_threshold <= self.detect_floor:
            raise ConfigError("power_threshold must exceed detect_floor", "tag.power_threshold_dbm")
        if self.compare_resolution <= 0:
            raise ConfigError("compare_resolution must be positive", "tag.compare_resolution_db")
        if self.oob_residual < 0:
            raise ConfigError("oob_residual must be non-negative", "tag.oob_residual_db")

    @property
    def strong_pair(self) -> tuple[complex, complex]:
        return (rf.reflection_coefficient(self.inductor, self.z0), rf.reflection_coefficient(self.capacitor, self.z0))

    @property
    def weak_pair(self) -> tuple[complex, complex]:
        return (rf.reflection_coefficient(self.inductor, self.z0), rf.reflection_coefficient(self.series_lr, self.z0))


@dataclass(frozen=True)
class BandDecision:
    selected_band: int
    tie: bool
    excessive_power: bool
    load_pair: tuple[complex, complex]
    silent: bool = False

    @property
    def strength(self) -> float:
        return 0.0 if self.silent else rf.modulation_strength(*self.load_pair)


def detect_band(profile: TagProfile, per_band_power, rng: np.random.Generator) -> BandDecision:
    """Pick the band with the strongest excitation.

    Bands are compared in ascending order against the running winner. When two
    powers lie within ``compare_resolution`` the swapped re-comparison is taken
    to disagree and the winner is drawn uniformly from the pair; ``rng`` is only
    consumed on such ties.
    """
    powers = [float(p) for p in per_band_power]
    if len(powers) < 2:
        raise ConfigError("need at least two bands", "per_band_power")
    eligible = [p >= profile.detect_floor for p in powers]

    if not any(eligible):
        return BandDecision(int(rng.integers(len(powers))), True, False, profile.strong_pair, silent=True)

    winner, tie = 0, False
    for k in range(1, len(powers)):
        if not eligible[k]:
            continue
        if not eligible[winner]:
            winner, tie = k, False
            continue
        diff = powers[k] - powers[winner]
        if abs(diff) < profile.compare_resolution:
            winner = (winner, k)[int(rng.integers(2))]
            tie = True
        elif diff > 0:
            winner, tie = k, False

    excessive = powers[winner] > profile.power_threshold
    pair = profile.weak_pair if excessive and profile.power_adjuster else profile.strong_pair
    return BandDecision(winner, tie, excessive, pair)


def differential_gain_db(decision: BandDecision, filt: rf.FilterProfile, at_frequency, oob_residual: float = 18.0):
    """Gain (dB) from incident excitation to data-bearing reflection.

    In band the load pair is seen through the filter twice. Out of band the
    filter reflects directly and the loads barely matter; that residual is
    pinned ``oob_residual`` dB below the in-band level.
    """
    if decision.silent or decision.strength == 0:
        return np.full(np.shape(at_frequency), -np.inf) if np.ndim(at_frequency) else -np.inf
    through = 2.0 * np.asarray(rf.filter_gain_db(filt, at_frequency))
    floor = -2.0 * filt.insertion_loss - oob_residual
    out = 20.0 * np.log10(decision.strength) + np.maximum(through, floor)
    return float(out) if np.ndim(out) == 0 else out


def reflect_power_dbm(decision: BandDecision, filt: rf.FilterProfile, incident_power: float,
                      at_frequency: float, oob_residual: float = 18.0) -> float:
    return incident_power + differential_gain_db(decision, filt, at_frequency, oob_residual)
