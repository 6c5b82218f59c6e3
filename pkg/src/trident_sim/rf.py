"""RF primitives: reflection coefficients, resonator tuning, capacitor sizing,
free-space path loss and the tunable bandpass filter response.

Impedances and reflection coefficients are plain Python ``complex`` values.

Note the reflection coefficient sign convention used throughout this package:

    gamma = (z0 - zl) / (z0 + zl)

which is the negative of the textbook (zl - z0) / (zl + z0). A short circuit
therefore reflects with gamma = +1 and an ideal inductor with |X| = z0 gives -j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, InfeasibleError

C_LIGHT = 299_792_458.0
Z0_DEFAULT = 50.0

ComplexImpedance = complex
ReflectionCoefficient = complex


@dataclass(frozen=True)
class ResonatorParams:
    z0: float = 50.0
    bar_length: float = 0.03
    wave_speed: float = 1.6e8

    def __post_init__(self):
        if min(self.z0, self.bar_length, self.wave_speed) <= 0:
            raise DomainError("resonator parameters must be strictly positive")

    @property
    def quarter_wave_frequency(self) -> float:
        """v / (4 l): the tan() singularity bounding the tuning range."""
        return self.wave_speed / (4.0 * self.bar_length)


@dataclass(frozen=True)
class VaractorParams:
    c0: float = 10e-12
    v0: float = 2.0
    gamma: float = 0.5

    def __post_init__(self):
        if self.c0 <= 0 or self.v0 <= 0 or self.gamma <= 0:
            raise DomainError("varactor parameters must be strictly positive")


# Placeholder leakage/source values chosen so that, with the 50 us charge time,
# the recommended (geometric-mean) capacitor comes out at 10 nF:
# c_max = 20 nF, c_min = 5 nF.
@dataclass(frozen=True)
class CapacitorSizingParams:
    t_charge: float = 50e-6
    t_leak: float = 1e-3
    r_source: float = 50e-6 / (math.log(100.0) * 20e-9)
    i_leak: float = 5e-9
    v_min: float = 0.1

    def __post_init__(self):
        if min(self.t_charge, self.t_leak, self.r_source, self.i_leak, self.v_min) <= 0:
            raise DomainError("capacitor sizing parameters must be strictly positive")


@dataclass(frozen=True)
class FilterProfile:
    center_frequency: float
    passband_halfwidth: float = 20e6
    insertion_loss: float = 2.0
    oob_suppression: float = 20.0
    skirt_width: float | None = None  # None -> equal to passband_halfwidth

    def __post_init__(self):
        if self.passband_halfwidth <= 0:
            raise DomainError("passband_halfwidth must be positive")
        if self.insertion_loss < 0 or self.insertion_loss >= self.oob_suppression:
            raise DomainError("need 0 <= insertion_loss < oob_suppression")

    def tuned(self, center_frequency: float) -> FilterProfile:
        return FilterProfile(
            center_frequency,
            self.passband_halfwidth,
            self.insertion_loss,
            self.oob_suppression,
            self.skirt_width,
        )


def reflection_coefficient(load: complex, z0: float = Z0_DEFAULT) -> complex:
    denom = z0 + load
    if denom == 0:
        raise DomainError(f"degenerate reflection: z0 + load = 0 (load={load!r}, z0={z0!r})")
    return (z0 - load) / denom


def modulation_strength(g1: complex, g2: complex) -> float:
    """Amplitude of the data-bearing backscatter component, |g1 - g2| / 2."""
    return abs(g1 - g2) / 2.0


def load_for_reflection(gamma: complex, z0: float = Z0_DEFAULT) -> complex:
    """Invert ``reflection_coefficient``: the load that reflects with ``gamma``."""
    if gamma == -1:
        raise DomainError("gamma = -1 corresponds to an open circuit")
    return z0 * (1 - gamma) / (1 + gamma)


def series_lr_load(strength: float, reactance: float = Z0_DEFAULT, z0: float = Z0_DEFAULT) -> complex:
    """Series L+R load whose modulation strength against the bare inductor
    ``j*reactance`` equals ``strength``.

    The strength grows monotonically with R from 0, so a bracketed root exists
    for any target below the R -> inf limit.
    """
    g_l = reflection_coefficient(complex(0.0, reactance), z0)

    def excess(r):
        return modulation_strength(g_l, reflection_coefficient(complex(r, reactance), z0)) - strength

    hi = z0
    while excess(hi) < 0:
        hi *= 2.0
        if hi > 1e9:
            raise DomainError(f"modulation strength {strength} unreachable with a series resistor")
    return complex(optimize.brentq(excess, 0.0, hi, xtol=1e-13), reactance)


def varactor_capacitance(p: VaractorParams, v_bias: float) -> float:
    if v_bias >= p.v0:
        raise DomainError(f"v_bias={v_bias} must stay below v0={p.v0}")
    return p.c0 / (1.0 - v_bias / p.v0) ** p.gamma


def resonance_residual(r: ResonatorParams, c: float, f: float) -> float:
    """LHS - 1 of 2*pi*f*Z0*tan(2*pi*f*l/v)*C = 1."""
    return 2 * math.pi * f * r.z0 * math.tan(2 * math.pi * f * r.bar_length / r.wave_speed) * c - 1.0


def solve_resonant_frequency(r: ResonatorParams, c: float) -> float:
    """Smallest resonant frequency of a capacitively loaded bar.

    The lower bracket end sits close to zero, where the residual is always -1.
    The upper end starts just below the tan() pole at v/(4l) and walks towards
    it until the residual turns positive (tiny C resonates right at the pole).
    """
    if c <= 0:
        raise DomainError("capacitance must be positive")
    fq = r.quarter_wave_frequency
    lo = 1e-12 * fq
    gap = 1e-6
    hi = fq * (1 - gap)
    while resonance_residual(r, c, hi) < 0 and gap > 1e-15:
        gap /= 10
        hi = fq * (1 - gap)
    if resonance_residual(r, c, lo) > 0 or resonance_residual(r, c, hi) < 0:
        raise DomainError(f"no resonance in bracket ({lo:.6g} Hz, {hi:.6g} Hz) for C={c:.6g} F")
    return optimize.bisect(lambda f: resonance_residual(r, c, f), lo, hi,
                           xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)


def resonant_capacitance(r: ResonatorParams, f: float) -> float:
    """Capacitance that tunes the resonator to ``f`` (closed-form inverse)."""
    if not 0 < f < r.quarter_wave_frequency:
        raise DomainError(f"f={f} outside (0, v/4l)")
    return 1.0 / (2 * math.pi * f * r.z0 * math.tan(2 * math.pi * f * r.bar_length / r.wave_speed))


def capacitor_bounds(p: CapacitorSizingParams) -> tuple[float, float, float]:
    """(c_min, c_max, recommended) for the comparator hold capacitor.

    c_max keeps the 1 % charge error within ``t_charge``; c_min keeps leakage
    droop under 1 % of ``v_min`` over ``t_leak``. The recommendation is their
    geometric mean.
    """
    c_max = p.t_charge / (math.log(100.0) * p.r_source)
    c_min = 100.0 * p.i_leak * p.t_leak / p.v_min
    if c_min > c_max:
        raise InfeasibleError(f"c_min={c_min:.4g} F exceeds c_max={c_max:.4g} F; timing parameters incompatible")
    return c_min, c_max, math.sqrt(c_min * c_max)


def path_loss_db(distance, frequency, ref_distance: float = 0.05):
    """Free-space (Friis) loss, clamped below at ``ref_distance``.

    Accepts scalars or arrays.
    """
    d = np.maximum(np.asarray(distance, dtype=float), ref_distance)
    out = 20.0 * np.log10(4.0 * np.pi * d * np.asarray(frequency, dtype=float) / C_LIGHT)
    return float(out) if out.ndim == 0 else out


def filter_gain_db(fp: FilterProfile, frequency):
    """Piecewise response: flat passband, linear-in-dB skirt, flat stopband."""
    skirt = fp.passband_halfwidth if fp.skirt_width is None else fp.skirt_width
    delta = np.abs(np.asarray(frequency, dtype=float) - fp.center_frequency)
    edge = fp.passband_halfwidth
    if skirt <= 0:
        out = np.where(delta <= edge, -fp.insertion_loss, -fp.oob_suppression)
    else:
        out = np.interp(delta, [edge, edge + skirt], [-fp.insertion_loss, -fp.oob_suppression])
    return float(out) if np.ndim(out) == 0 else out


def dbm_to_mw(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def mw_to_dbm(p_mw):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(p_mw, dtype=float))
