"""Cooperativity schedules that emit (or, time-reversed, absorb) a
double-sided exponential photon, and the photon-number bookkeeping of
that pulse.

Dimensionless units: time in 1/gamma, amplitudes in sqrt(gamma).

Emission runs on [0, inf) with the pulse peak at ``T``.  Before the peak
the cooperativity follows the Bernoulli solution

    C(t) = (Cm + 2) / (A (Cm + 2) exp(-2 (Cm + 2) t) - 1),

after it the cavity sits on resonance (C = Cm).  Storage uses the mirror
image C(-t) on (-inf, 0].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .params import airy_minimum

EMISSION = "emission"
STORAGE = "storage"
_DIRECTIONS = (EMISSION, STORAGE)


class ScheduleError(ValueError):
    pass


def _check_cm_t(Cm, T):
    if not Cm > 0 or not math.isfinite(Cm):
        raise ScheduleError(f"Cm must be positive and finite, got {Cm!r}")
    if not T >= 0 or not math.isfinite(T):
        raise ScheduleError(f"T must be non-negative and finite, got {T!r}")


def peak_amplitude_squared(Cm: float, T: float) -> float:
    k = Cm + 2.0
    return 2.0 / (math.exp(2.0 * T) * (1.0 / k + 1.0 / Cm)
                  - math.exp(-2.0 * (Cm + 1.0) * T) / k)


def norm(Cm: float, T: float) -> float:
    """Photon number of the full emitted pulse (peak at T, no truncation)."""
    _check_cm_t(Cm, T)
    kappa = Cm + 1.0
    return peak_amplitude_squared(Cm, T) * (2.0 - math.exp(-2.0 * kappa * T)) / (2.0 * kappa)


def norm_truncated(Cm: float, T: float) -> float:
    """Photon number emitted inside the window [0, 2T]."""
    _check_cm_t(Cm, T)
    kappa = Cm + 1.0
    return peak_amplitude_squared(Cm, T) * -math.expm1(-2.0 * kappa * T) / kappa


@dataclass(frozen=True)
class EmissionSchedule:
    """Analytic cooperativity schedule for one pulse.

    Calling the schedule evaluates C(t); all methods accept scalars or
    numpy arrays.
    """

    Cm: float
    T: float
    direction: str = EMISSION

    def __post_init__(self):
        _check_cm_t(self.Cm, self.T)
        if self.direction not in _DIRECTIONS:
            raise ScheduleError(f"direction must be one of {_DIRECTIONS}")

    @cached_property
    def log_A(self) -> float:
        k = self.Cm + 2.0
        return 2.0 * k * self.T + math.log(1.0 / k + 1.0 / self.Cm)

    @property
    def A(self) -> float:
        """Integration constant; overflows to inf for very long delays."""
        try:
            return math.exp(self.log_A)
        except OverflowError:
            return math.inf

    @cached_property
    def Fm(self) -> float:
        return math.sqrt(peak_amplitude_squared(self.Cm, self.T))

    @property
    def kappa(self) -> float:
        """Field decay rate on resonance, Cm + 1."""
        return self.Cm + 1.0

    def _emission_time(self, t):
        t = np.asarray(t, dtype=float)
        return -t if self.direction == STORAGE else t

    def _log_denominator(self, s):
        # log(A (Cm+2) exp(-2 (Cm+2) s) - 1) for s <= T without forming A
        k = self.Cm + 2.0
        a = 1.0 + k / self.Cm
        x = 2.0 * k * (self.T - np.minimum(s, self.T))
        return x + math.log(a) + np.log1p(-np.exp(-x) / a)

    @cached_property
    def _log_denominator_0(self) -> float:
        return float(self._log_denominator(0.0))

    def cooperativity(self, t):
        s = self._emission_time(t)
        k = self.Cm + 2.0
        rising = k * np.exp(-self._log_denominator(s))
        return np.where(s >= self.T, self.Cm, rising)

    __call__ = cooperativity

    def accumulated_rate(self, t):
        """Closed-form integral of C + 1 over emission time from 0 to s.

        For the storage direction the argument is storage time t <= 0 and the
        integral runs over [t, 0].
        """
        s = self._emission_time(t)
        kappa = self.Cm + 1.0
        sc = np.minimum(s, self.T)
        rising = -kappa * sc - 0.5 * (self._log_denominator(sc) - self._log_denominator_0)
        return rising + kappa * np.maximum(s - self.T, 0.0)

    def envelope(self, t):
        """Target emitted amplitude Fm exp(-(Cm+1)|s - T|) (mirrored for storage)."""
        s = self._emission_time(t)
        return self.Fm * np.exp(-(self.Cm + 1.0) * np.abs(s - self.T))

    def defining_residual(self, t):
        """sqrt(2C) exp(-int_0^s (C+1)) - Fm exp((Cm+1)(s-T)) on the rising side.

        Vanishes identically for s in [0, T] when C, A and Fm are consistent.
        """
        s = self._emission_time(t)
        lhs = np.sqrt(2.0 * self.cooperativity(t)) * np.exp(-self.accumulated_rate(t))
        return lhs - self.Fm * np.exp((self.Cm + 1.0) * (s - self.T))

    def time_reverse(self) -> "EmissionSchedule":
        flipped = STORAGE if self.direction == EMISSION else EMISSION
        return EmissionSchedule(self.Cm, self.T, flipped)

    def norm(self) -> float:
        return norm(self.Cm, self.T)

    def norm_truncated(self) -> float:
        return norm_truncated(self.Cm, self.T)


def build_emission(Cm: float, T: float) -> EmissionSchedule:
    return EmissionSchedule(Cm=float(Cm), T=float(T), direction=EMISSION)


@dataclass(frozen=True)
class TargetPulse:
    """Double-sided exponential envelope tied to a schedule.

    For the storage direction the pulse is the mirror of the emitted one,
    divided by sqrt(normalization); ``shift`` moves its peak in time.
    """

    Fm: float
    T: float
    Cm: float
    direction: str = EMISSION
    normalization: float = 1.0
    shift: float = 0.0

    @property
    def normalized(self) -> bool:
        return self.normalization != 1.0

    @property
    def peak_time(self) -> float:
        base = self.T if self.direction == EMISSION else -self.T
        return base + self.shift

    @property
    def amplitude(self) -> float:
        return self.Fm / math.sqrt(self.normalization)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-(self.Cm + 1.0) * np.abs(t - self.peak_time))


def emitted_pulse(schedule: EmissionSchedule) -> TargetPulse:
    return TargetPulse(schedule.Fm, schedule.T, schedule.Cm, EMISSION)


def input_pulse(schedule: EmissionSchedule, truncated: bool = True,
                shift: float = 0.0) -> TargetPulse:
    """Time-reversed, unit-photon input pulse matched to ``schedule``.

    ``truncated`` selects normalisation over the window [-2T, 0] instead of
    the whole half-line.
    """
    N = schedule.norm_truncated() if truncated else schedule.norm()
    if N <= 0:
        raise ScheduleError("pulse has zero photon number in the requested window")
    return TargetPulse(schedule.Fm, schedule.T, schedule.Cm, STORAGE, N, shift)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       rtol: float = 1e-10, max_iter: int = 500) -> float:
    """Maximiser of a unimodal ``f`` on [a, b] by golden-section search."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= rtol * 0.5 * (abs(a) + abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class WindowOptimum:
    Cm: float
    T_max: float
    N_max: float
    T_max_asymptotic: float
    N_max_asymptotic: float
    asymptotics_valid: bool

    @property
    def window(self) -> float:
        return 2.0 * self.T_max

    @property
    def window_asymptotic(self) -> float:
        return 2.0 * self.T_max_asymptotic


def optimal_window(Cm: float, rtol: float = 1e-10) -> WindowOptimum:
    """Peak time T maximising the truncated photon number.

    The large-Cm estimates 2T = ln(Cm/2)/Cm and N = 1 - (ln(Cm/2) + 1)/Cm
    are returned for comparison; they are NaN for Cm <= 2.
    """
    _check_cm_t(Cm, 0.0)
    kappa = Cm + 1.0
    grid = np.geomspace(1e-6 / kappa, 20.0, 400)
    values = np.array([norm_truncated(Cm, T) for T in grid])
    i = int(np.argmax(values))
    lo = float(grid[i - 1]) if i > 0 else 0.0
    hi = float(grid[min(i + 1, len(grid) - 1)])
    T_max = golden_section_max(lambda T: norm_truncated(Cm, T), lo, hi, rtol=rtol)
    valid = Cm > 2.0
    if valid:
        T_asym = 0.5 * math.log(Cm / 2.0) / Cm
        N_asym = 1.0 - (math.log(Cm / 2.0) + 1.0) / Cm
    else:
        T_asym = N_asym = math.nan
    return WindowOptimum(Cm, T_max, norm_truncated(Cm, T_max), T_asym, N_asym, valid)


@dataclass(frozen=True)
class FeasibilityReport:
    Cm: float
    T: float
    finesse: float
    general_ok: bool          # finesse^2 > 2 exp(2 Cm T)
    log_required_finesse_sq: float
    reduced_ok: Optional[bool]  # finesse^2 > Cm, only evaluated at T = T_max
    exact_ok: bool            # C(0) >= exact Airy minimum
    C_start: float
    C_min: float

    @property
    def ok(self) -> bool:
        return self.general_ok and self.exact_ok


def finesse_feasibility(Cm: float, T: float, finesse: float,
                        T_max: Optional[float] = None) -> FeasibilityReport:
    """Whether the cavity can reach the low cooperativity the schedule starts at."""
    _check_cm_t(Cm, T)
    log_req = math.log(2.0) + 2.0 * Cm * T
    general = 2.0 * math.log(finesse) > log_req
    if T_max is None and Cm > 2.0:
        T_max = optimal_window(Cm).T_max
    reduced = None
    if T_max is not None and math.isclose(T, T_max, rel_tol=1e-6):
        reduced = finesse ** 2 > Cm
    C_start = float(EmissionSchedule(Cm, T)(0.0))
    C_min = 0.0 if math.isinf(finesse) else airy_minimum(Cm, finesse)
    return FeasibilityReport(Cm, T, finesse, general, log_req, reduced,
                             C_start >= C_min, C_start, C_min)
