"""Physical parameters and their reduction to dimensionless form.

Everything downstream of this module works in dimensionless time
``tau = gamma * t`` with ``gamma = 1/T2``; amplitudes carry units of
``sqrt(gamma)`` so that ``integral F**2 dtau`` is a photon number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any, Mapping, NamedTuple, Optional

from scipy import constants

# Ratio of memory bandwidth to cavity linewidth above which the
# adiabatic-cavity assumption is reported as violated.
BAD_CAVITY_THRESHOLD = 0.1


class ParamsError(ValueError):
    """Invalid, missing or inconsistent physical parameters."""


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory-unit description of the atom-cavity system (SI units).

    ``T2`` is the phase relaxation time; with relaxation purely from
    spontaneous emission into free space ``T2 = 2 T1``.
    """

    T2: float
    alpha_L: float
    finesse: float
    round_trip_length: float
    wavelength: float
    cross_section: float
    sample_length: float
    dipole_moment: Optional[float] = None
    omega0: Optional[float] = None

    def __post_init__(self):
        for name in ("T2", "alpha_L", "finesse", "round_trip_length",
                     "wavelength", "cross_section", "sample_length"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ParamsError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ParamsError(f"{name} must be finite, got {value!r}")
        if self.T2 <= 0:
            raise ParamsError(f"T2 must be positive, got {self.T2!r}")
        if self.alpha_L <= 0:
            raise ParamsError(f"alpha_L must be positive, got {self.alpha_L!r}")
        if self.finesse <= 1:
            raise ParamsError(f"finesse must exceed 1, got {self.finesse!r}")
        for name in ("round_trip_length", "wavelength", "cross_section", "sample_length"):
            if getattr(self, name) <= 0:
                raise ParamsError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.dipole_moment is not None and self.dipole_moment < 0:
            raise ParamsError("dipole_moment must be non-negative")
        if self.omega0 is not None and self.omega0 <= 0:
            raise ParamsError("omega0 must be positive")

    @property
    def gamma(self) -> float:
        """Phase relaxation rate 1/T2 in 1/s."""
        return 1.0 / self.T2

    @property
    def T1(self) -> float:
        return 0.5 * self.T2

    @property
    def fresnel_number(self) -> float:
        return self.cross_section / (self.sample_length * self.wavelength)

    @property
    def mu(self) -> float:
        """Geometrical factor 3 lambda^2 / (8 pi S) of a pencil-shaped sample."""
        return 3.0 * self.wavelength ** 2 / (8.0 * math.pi * self.cross_section)

    @property
    def warnings(self) -> list[str]:
        out = []
        if self.alpha_L >= 1:
            out.append(f"alpha_L = {self.alpha_L:g} is not optically thin (model assumes alpha_L << 1)")
        if self.fresnel_number < 1:
            out.append(f"Fresnel number S/(L lambda) = {self.fresnel_number:.3g} < 1")
        return out

    @classmethod
    def from_linewidth(cls, absorption_linewidth: float, **kwargs) -> "PhysicalParams":
        """Build from an absorption linewidth Gamma [Hz], using T2 = 1/(pi Gamma)."""
        if absorption_linewidth <= 0:
            raise ParamsError("absorption_linewidth must be positive")
        return cls(T2=1.0 / (math.pi * absorption_linewidth), **kwargs)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "PhysicalParams":
        """Parse a flat key-value mapping (e.g. a loaded JSON parameter file).

        Accepts either ``T2`` [s] or ``absorption_linewidth`` [Hz].  ``finesse``
        may be replaced by ``Cm`` (then finesse = 2 pi Cm / alpha_L).  A ``Cm``
        given alongside ``finesse`` is ignored here; see :func:`stated_cm`.
        """
        known = {f.name for f in fields(cls)} | {"absorption_linewidth", "Cm"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParamsError(f"unknown parameter key(s): {', '.join(unknown)}")
        values = dict(data)
        Cm = values.pop("Cm", None)
        linewidth = values.pop("absorption_linewidth", None)
        if linewidth is not None and "T2" in values:
            raise ParamsError("give either 'T2' or 'absorption_linewidth', not both")
        if linewidth is None and "T2" not in values:
            raise ParamsError("missing required key 'T2' (or 'absorption_linewidth')")
        if "alpha_L" not in values:
            raise ParamsError("missing required key 'alpha_L'")
        if "finesse" not in values:
            if Cm is None:
                raise ParamsError("missing required key 'finesse' (or 'Cm')")
            values["finesse"] = 2.0 * math.pi * float(Cm) / float(values["alpha_L"])
        for name in ("round_trip_length", "wavelength", "cross_section", "sample_length"):
            if name not in values:
                raise ParamsError(f"missing required key '{name}'")
        if linewidth is not None:
            return cls.from_linewidth(linewidth, **values)
        return cls(**values)


def stated_cm(data: Mapping[str, Any]) -> Optional[float]:
    """Explicit ``Cm`` entry of a parameter mapping, if any."""
    Cm = data.get("Cm")
    if Cm is None:
        return None
    Cm = float(Cm)
    if not Cm > 0:
        raise ParamsError(f"Cm must be positive, got {Cm!r}")
    return Cm


@dataclass(frozen=True)
class DimensionlessParams:
    """Dimensionless constants used by the schedule and dynamics code.

    ``C_min`` is the exact Airy minimum of the cooperativity, reached at
    antiresonance.
    """

    Cm: float
    gamma: float
    C_min: float
    finesse: float

    def __post_init__(self):
        if not self.Cm > 0:
            raise ParamsError(f"Cm must be positive, got {self.Cm!r}")
        if not self.finesse > 1:
            raise ParamsError(f"finesse must exceed 1, got {self.finesse!r}")
        if not 0 < self.C_min < self.Cm:
            raise ParamsError("C_min must lie in (0, Cm)")

    @classmethod
    def from_cm(cls, Cm: float, finesse: float, gamma: float = 1.0) -> "DimensionlessParams":
        return cls(Cm=Cm, gamma=gamma, C_min=airy_minimum(Cm, finesse), finesse=finesse)

    @property
    def C_min_approx(self) -> float:
        """Large-finesse approximation Cm / finesse**2 of the minimum."""
        return self.Cm / self.finesse ** 2


def airy_minimum(Cm: float, finesse: float) -> float:
    return Cm / (1.0 + (2.0 * finesse / math.pi) ** 2)


def derive(params: PhysicalParams) -> DimensionlessParams:
    """Peak cooperativity alpha_L * finesse / 2 pi and the derived constants."""
    Cm = params.alpha_L * params.finesse / (2.0 * math.pi)
    return DimensionlessParams.from_cm(Cm, params.finesse, gamma=params.gamma)


class EinsteinA(NamedTuple):
    rate: float  # 1/T1 [1/s]
    T1: float
    T2: float


def einstein_A(params: PhysicalParams) -> EinsteinA:
    """Spontaneous emission rate 4 d^2 w0^3 / (3 hbar c^3) / (4 pi eps0).

    ``omega0`` defaults to ``2 pi c / wavelength`` when not given.
    """
    if params.dipole_moment is None:
        raise ParamsError("einstein_A needs 'dipole_moment'")
    omega0 = params.omega0
    if omega0 is None:
        omega0 = 2.0 * math.pi * constants.c / params.wavelength
    rate = (4.0 * params.dipole_moment ** 2 * omega0 ** 3
            / (3.0 * constants.hbar * constants.c ** 3)
            / (4.0 * math.pi * constants.epsilon_0))
    T1 = math.inf if rate == 0 else 1.0 / rate
    return EinsteinA(rate=rate, T1=T1, T2=2.0 * T1)


@dataclass(frozen=True)
class BadCavityDiagnostic:
    ratio: float
    memory_bandwidth: float  # Cm * gamma [1/s]
    cavity_linewidth: float  # 2 pi c / (finesse p) [1/s]
    threshold: float = BAD_CAVITY_THRESHOLD

    @property
    def passed(self) -> bool:
        return self.ratio <= self.threshold


def bad_cavity_check(params: PhysicalParams, dims: DimensionlessParams) -> BadCavityDiagnostic:
    """Compare the memory bandwidth Cm*gamma with the cavity linewidth."""
    linewidth = 2.0 * math.pi * constants.c / (dims.finesse * params.round_trip_length)
    bandwidth = dims.Cm * dims.gamma
    return BadCavityDiagnostic(ratio=bandwidth / linewidth,
                               memory_bandwidth=bandwidth,
                               cavity_linewidth=linewidth)
