"""Single-ended ring cavity: Airy enhancement, reflection phase, and the
inverse map from a requested cooperativity to a round-trip detuning.

The round-trip phase ``theta = k p mod 2 pi`` is folded to (-pi, pi] with
``theta = 0`` on resonance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .params import DimensionlessParams

# Relative slack when accepting targets at the ends of [C_min, Cm].
_RANGE_SLACK = 1e-12


class CavityError(ValueError):
    pass


def peak_enhancement(finesse):
    return 2.0 * finesse / math.pi


def enhancement(theta, finesse):
    """Airy enhancement of the intracavity intensity at the sample."""
    peak = 2.0 * finesse / math.pi
    s = np.sin(0.5 * np.asarray(theta, dtype=float))
    return peak / (1.0 + peak ** 2 * s ** 2)


def minimum_enhancement(finesse):
    peak = peak_enhancement(finesse)
    return peak / (1.0 + peak ** 2)


def r_to_finesse(r):
    return math.pi * math.sqrt(r) / (1.0 - r)


@lru_cache(maxsize=256)
def finesse_to_r(finesse: float) -> float:
    """Mirror amplitude reflectivity r in (0, 1) with pi sqrt(r)/(1 - r) = finesse.

    The root is bracketed in u = 1 - r so that the relative accuracy of the
    finesse residual survives r -> 1.
    """
    if not finesse > 0 or not math.isfinite(finesse):
        raise CavityError(f"no reflectivity in (0, 1) for finesse {finesse!r}")

    def residual(u):
        return math.pi * math.sqrt(1.0 - u) / u - finesse

    lo = min(math.pi / (4.0 * finesse), 0.5)
    u = brentq(residual, lo, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return 1.0 - u


def beta(theta, r):
    """Reflection phase of the detuned cavity, zero on resonance and odd in theta.

    Uses the two-argument arctangent so the phase is continuous on
    (-pi, pi); the real part is written as (1-r)^2 - 2(1+r^2) sin^2(theta/2)
    to stay accurate near resonance for r -> 1.
    """
    theta = np.asarray(theta, dtype=float)
    num = (1.0 - r * r) * np.sin(theta)
    den = (1.0 - r) ** 2 - 2.0 * (1.0 + r * r) * np.sin(0.5 * theta) ** 2
    return np.arctan2(num, den)


def fold_phase(theta):
    """Fold a round-trip phase onto (-pi, pi]."""
    folded = np.mod(np.asarray(theta, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    return np.where(folded == -math.pi, math.pi, folded)


@dataclass(frozen=True)
class CavityPoint:
    phase_detuning: float
    enhancement: float
    beta: float

    @property
    def delta_p_over_lambda(self) -> float:
        """Round-trip path offset from the resonant length, in wavelengths."""
        return self.phase_detuning / (2.0 * math.pi)


def _detuning_sin2(C_target, dims: DimensionlessParams):
    C_target = np.asarray(C_target, dtype=float)
    lo = dims.C_min * (1.0 - _RANGE_SLACK)
    hi = dims.Cm * (1.0 + _RANGE_SLACK)
    if np.any(~(C_target >= lo)) or np.any(~(C_target <= hi)):
        raise CavityError(
            f"cooperativity target outside [C_min, Cm] = [{dims.C_min:.6g}, {dims.Cm:.6g}]")
    half_width = math.pi / (2.0 * dims.finesse)
    return np.clip(half_width ** 2 * (dims.Cm / C_target - 1.0), 0.0, 1.0)


def solve_detuning(C_target: float, dims: DimensionlessParams) -> CavityPoint:
    """Positive-detuning operating point whose cooperativity equals ``C_target``."""
    theta = float(2.0 * np.arcsin(np.sqrt(_detuning_sin2(C_target, dims))))
    r = finesse_to_r(dims.finesse)
    return CavityPoint(phase_detuning=theta,
                       enhancement=float(enhancement(theta, dims.finesse)),
                       beta=float(beta(theta, r)))


def solve_detuning_many(C_target, dims: DimensionlessParams):
    """Vectorised :func:`solve_detuning`; returns (theta, enhancement, beta) arrays."""
    theta = 2.0 * np.arcsin(np.sqrt(_detuning_sin2(C_target, dims)))
    r = finesse_to_r(dims.finesse)
    return theta, enhancement(theta, dims.finesse), beta(theta, r)


def cooperativity(theta, dims: DimensionlessParams):
    """Cooperativity Cm * L(theta) / L(0) at a given detuning."""
    return dims.Cm * enhancement(theta, dims.finesse) / peak_enhancement(dims.finesse)
