"""Efficiency, time-jitter sensitivity, large-Cm audits and the
laboratory design summary."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from . import dynamics
from .params import DimensionlessParams, PhysicalParams, bad_cavity_check, derive
from .schedule import finesse_feasibility, norm, norm_truncated, optimal_window

IDEAL = "ideal"
WINDOWED = "windowed"


def long_delay_norm_estimate(Cm: float, T: float) -> float:
    """Large-Cm, long-delay estimate of the full-pulse photon number."""
    return (1.0 - Cm ** -2) * math.exp(-2.0 * T)


def max_truncated_norm_estimate(Cm: float) -> float:
    return 1.0 - (math.log(Cm / 2.0) + 1.0) / Cm


def optimal_window_estimate(Cm: float) -> float:
    """Large-Cm estimate of the optimal window length 2 T_max."""
    return math.log(Cm / 2.0) / Cm


def windowed_efficiency_estimate(Cm: float) -> float:
    return 1.0 - 2.0 / Cm - 2.0 * math.log(Cm / 2.0) / Cm


def bound_reference(Cm: float) -> float:
    return (Cm / (1.0 + Cm)) ** 2


@dataclass(frozen=True)
class EfficiencyReport:
    Cm: float
    T: float
    mode: str
    N_exact: float
    N_trunc_exact: float
    efficiency_ideal: float
    efficiency_windowed: float
    efficiency_numeric: Optional[float]
    asymptotics: dict
    bound_reference: float
    ledger_residual: Optional[float] = None
    bookkeeping: Optional[dict] = None

    @property
    def efficiency(self) -> float:
        return self.efficiency_ideal if self.mode == IDEAL else self.efficiency_windowed

    def to_dict(self) -> dict:
        return asdict(self)


def efficiency(Cm: float, T: Optional[float] = None, mode: str = WINDOWED,
               simulate: bool = False, dt: Optional[float] = None) -> EfficiencyReport:
    """Storage-plus-retrieval efficiency from the closed forms, optionally
    checked by an end-to-end simulation (storage run then retrieval run).

    ``T`` defaults to the optimal window peak time.
    """
    if mode not in (IDEAL, WINDOWED):
        raise ValueError(f"mode must be {IDEAL!r} or {WINDOWED!r}")
    opt = optimal_window(Cm)
    if T is None:
        T = opt.T_max
    N = norm(Cm, T)
    Nt = norm_truncated(Cm, T)
    asym = {
        "long_delay_norm_estimate": long_delay_norm_estimate(Cm, T),
        "max_truncated_norm_estimate": max_truncated_norm_estimate(Cm) if Cm > 2 else math.nan,
        "optimal_window_estimate": optimal_window_estimate(Cm) if Cm > 2 else math.nan,
        "windowed_efficiency_estimate": windowed_efficiency_estimate(Cm) if Cm > 2 else math.nan,
        "large_cm_ideal_efficiency": math.exp(-4.0 * T),
        "exact_window": opt.window,
        "exact_max_norm_truncated": opt.N_max,
    }
    numeric = residual = books = None
    if simulate:
        window = dynamics.INFINITE if mode == IDEAL else dynamics.TRUNCATED
        cycle = dynamics.run_full_cycle(Cm, T, dt or 1e-3 / (Cm + 2.0), window)
        numeric = cycle.efficiency
        residual = cycle.ledger_residual
        books = cycle.bookkeeping
    return EfficiencyReport(Cm=Cm, T=T, mode=mode, N_exact=N, N_trunc_exact=Nt,
                            efficiency_ideal=N * N, efficiency_windowed=Nt * Nt,
                            efficiency_numeric=numeric, asymptotics=asym,
                            bound_reference=bound_reference(Cm),
                            ledger_residual=residual, bookkeeping=books)


# --- time jitter -------------------------------------------------------------------

def overlap_integral(kappa: float, T: float, delta: float) -> float:
    """int_0^{2T} exp(-kappa|tau - T|) exp(-kappa|tau - T - delta|) dtau, exactly.

    The integrand is a single exponential between the breakpoints T and
    T + delta, so each piece integrates in closed form.
    """
    lo, hi = 0.0, 2.0 * T
    knots = sorted({lo, hi, min(max(T, lo), hi), min(max(T + delta, lo), hi)})
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        m = 0.5 * (a + b)
        s1 = 1.0 if m > T else -1.0
        s2 = 1.0 if m > T + delta else -1.0
        slope = -kappa * (s1 + s2)
        offset = kappa * (s1 * T + s2 * (T + delta))
        start = math.exp(slope * a + offset)
        if slope == 0.0:
            total += start * (b - a)
        else:
            total += start * math.expm1(slope * (b - a)) / slope
    return total


def jitter_ratio(Cm: float, T: float, delta: float) -> float:
    """Stored-amplitude ratio P_delta(0) / P_0(0) from the exact overlap."""
    kappa = Cm + 1.0
    return overlap_integral(kappa, T, delta) / overlap_integral(kappa, T, 0.0)


def jitter_ratio_closed(Cm: float, delta: float, T: Optional[float] = None) -> float:
    """Large-Cm closed form of the ratio at the optimal window.

    NaN outside its domain |delta| < T.
    """
    if T is not None and abs(delta) >= T:
        return math.nan
    x = Cm * abs(delta)
    return ((1.0 + x - (1.0 + math.exp(2.0 * x)) / Cm) / (1.0 - 2.0 / Cm)) * math.exp(-x)


@dataclass(frozen=True)
class JitterCurve:
    Cm: float
    T: float
    deltas: np.ndarray          # gamma * delta * Cm
    ratio_numeric: np.ndarray
    ratio_closed: np.ndarray

    @property
    def efficiency_factor(self) -> np.ndarray:
        return self.ratio_numeric ** 2

    @property
    def delays(self) -> np.ndarray:
        """Offsets in units of 1/gamma."""
        return self.deltas / self.Cm


def jitter_scan(Cm: float, delta_grid: Iterable[float], T: Optional[float] = None) -> JitterCurve:
    """Jitter sensitivity on a grid of x = gamma * delta * Cm."""
    if T is None:
        T = optimal_window(Cm).T_max
    x = np.asarray(list(delta_grid), dtype=float)
    numeric = np.array([jitter_ratio(Cm, T, xi / Cm) for xi in x])
    closed = np.array([jitter_ratio_closed(Cm, xi / Cm, T) for xi in x])
    return JitterCurve(Cm, T, x, numeric, closed)


def jitter_threshold(Cm: float, level: float, T: Optional[float] = None,
                     xtol: float = 1e-6) -> float:
    """Smallest x = gamma*delta*Cm > 0 at which the efficiency factor falls to ``level``."""
    if T is None:
        T = optimal_window(Cm).T_max
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")

    def excess(x):
        return jitter_ratio(Cm, T, x / Cm) ** 2 - level

    hi = Cm * T
    while excess(hi) > 0:
        hi *= 2.0
    return bisect(excess, 0.0, hi, xtol=xtol)


def hold_decay(T_s: float, C_hold: float = 0.0) -> float:
    """Amplitude factor for holding the excitation a time T_s at fixed C_hold."""
    return math.exp(-T_s * (1.0 + C_hold))


# --- asymptotic audit --------------------------------------------------------------

@dataclass(frozen=True)
class AuditRow:
    Cm: float
    quantity: str
    exact: float
    asymptotic: float

    @property
    def abs_gap(self) -> float:
        return abs(self.exact - self.asymptotic)

    @property
    def rel_gap(self) -> float:
        return self.abs_gap / abs(self.exact)


AUDIT_QUANTITIES = ("long_delay_norm_estimate", "max_truncated_norm_estimate",
                    "optimal_window_estimate", "windowed_efficiency_estimate")


def asymptotic_audit(Cm_list: Sequence[float], T_long: float = 5.0) -> list[AuditRow]:
    """Exact values against the large-Cm formulas for each Cm.

    The full-pulse norm is compared at the fixed long delay ``T_long``;
    the window quantities at the exact optimum.
    """
    if len(Cm_list) == 0:
        raise ValueError("Cm_list must not be empty")
    rows = []
    for Cm in Cm_list:
        opt = optimal_window(Cm)
        rows.append(AuditRow(Cm, "long_delay_norm_estimate", norm(Cm, T_long),
                             long_delay_norm_estimate(Cm, T_long)))
        rows.append(AuditRow(Cm, "max_truncated_norm_estimate", opt.N_max,
                             max_truncated_norm_estimate(Cm)))
        rows.append(AuditRow(Cm, "optimal_window_estimate", opt.window,
                             optimal_window_estimate(Cm)))
        rows.append(AuditRow(Cm, "windowed_efficiency_estimate", opt.N_max ** 2,
                             windowed_efficiency_estimate(Cm)))
    return rows


def gaps_shrink(rows: Sequence[AuditRow]) -> dict:
    """Per quantity: do the absolute gaps decrease strictly with Cm?"""
    out = {}
    for q in AUDIT_QUANTITIES:
        sel = sorted((r for r in rows if r.quantity == q), key=lambda r: r.Cm)
        gaps = [r.abs_gap for r in sel]
        out[q] = all(b < a for a, b in zip(gaps, gaps[1:]))
    return out


# --- laboratory design -------------------------------------------------------------

@dataclass(frozen=True)
class DesignReport:
    T2: float
    gamma: float
    absorption_linewidth: float
    alpha_L: float
    finesse: float
    Cm: float
    Cm_from_alpha_finesse: float
    Cm_consistent: bool
    C_min: float
    C_min_approx: float
    pulse_duration: float
    T_max: float
    window: float
    window_asymptotic: float
    N_trunc_max: float
    efficiency: float
    efficiency_estimate: float
    bound_reference: float
    bad_cavity_ratio: float
    bad_cavity_ok: bool
    feasibility_general_ok: bool
    feasibility_reduced_ok: Optional[bool]
    feasibility_exact_ok: bool
    detuning_at_start: float
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def design(params: PhysicalParams, Cm: Optional[float] = None) -> DesignReport:
    """Laboratory-unit summary of the optimal storage protocol.

    ``Cm`` overrides the value implied by alpha_L and the finesse; both
    are reported and any mismatch is flagged, not resolved.
    """
    from .cavity import solve_detuning

    implied = derive(params)
    dims = implied if Cm is None else DimensionlessParams.from_cm(Cm, params.finesse, params.gamma)
    consistent = math.isclose(dims.Cm, implied.Cm, rel_tol=1e-9)
    opt = optimal_window(dims.Cm)
    bc = bad_cavity_check(params, dims)
    feas = finesse_feasibility(dims.Cm, opt.T_max, params.finesse, T_max=opt.T_max)
    T2 = params.T2
    notes = list(params.warnings)
    if not consistent:
        notes.append(f"stated Cm = {dims.Cm:g} differs from alpha_L*finesse/(2 pi) = {implied.Cm:.4g}")
    if not bc.passed:
        notes.append(f"bad-cavity ratio {bc.ratio:.3g} exceeds {bc.threshold}")
    if not feas.ok:
        notes.append("finesse too low for the schedule's starting cooperativity")
    start = solve_detuning(max(feas.C_start, dims.C_min), dims) if feas.exact_ok else None
    return DesignReport(
        T2=T2, gamma=params.gamma, absorption_linewidth=1.0 / (math.pi * T2),
        alpha_L=params.alpha_L, finesse=params.finesse,
        Cm=dims.Cm, Cm_from_alpha_finesse=implied.Cm, Cm_consistent=consistent,
        C_min=dims.C_min, C_min_approx=dims.C_min_approx,
        pulse_duration=T2 / (dims.Cm + 1.0),
        T_max=opt.T_max * T2, window=opt.window * T2,
        window_asymptotic=opt.window_asymptotic * T2,
        N_trunc_max=opt.N_max, efficiency=opt.N_max ** 2,
        efficiency_estimate=windowed_efficiency_estimate(dims.Cm) if dims.Cm > 2 else math.nan,
        bound_reference=bound_reference(dims.Cm),
        bad_cavity_ratio=bc.ratio, bad_cavity_ok=bc.passed,
        feasibility_general_ok=feas.general_ok, feasibility_reduced_ok=feas.reduced_ok,
        feasibility_exact_ok=feas.exact_ok,
        detuning_at_start=start.delta_p_over_lambda if start else math.nan,
        warnings=notes,
    )
