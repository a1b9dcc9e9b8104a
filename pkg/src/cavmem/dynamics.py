"""Reduced single-excitation dynamics of the atoms in the tuned cavity.

    dP/dt  = -(1 + C(t)) P - sqrt(2 C(t)) F_in(t)
    F_out  = F_in + sqrt(2 C(t)) P

(dimensionless time, gamma = 1).  Two independent solvers are provided:
a fixed-step RK4 sweep (compiled when available) and a segment-wise
evaluation of the exact integral solution by nested adaptive quadrature.

Every result carries a photon ledger,

    R(t) = P^2 - P0^2 + int (F_out^2 - F_in^2) + 2 int P^2,

which vanishes for exact dynamics.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import IntegrationWarning, cumulative_simpson, quad

from . import _kernels
from .schedule import EmissionSchedule, emitted_pulse, input_pulse

RK4 = "rk4_fixed"
CLOSED_FORM = "closed_form_quadrature"
_METHODS = (RK4, CLOSED_FORM)

# dt * (max C + 2) may not exceed this.
STEP_LIMIT = 0.01
# Extra decay times beyond the peak for "infinite" windows.
TAIL_DECAY_TIMES = 40.0

TimeFunction = Callable[[np.ndarray], np.ndarray]


class DynamicsError(RuntimeError):
    pass


class StepSizeError(DynamicsError, ValueError):
    pass


class QuadratureError(DynamicsError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    t_start: float
    t_end: float
    dt: float
    method: str = RK4
    P_initial: float = 0.0

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError("t_start must be smaller than t_end")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil((self.t_end - self.t_start) / self.dt * (1.0 - 1e-12)))

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_steps + 1)


@dataclass(frozen=True)
class SimulationResult:
    times: np.ndarray
    C: np.ndarray
    F_in: np.ndarray
    F_out: np.ndarray
    P: np.ndarray
    free_space_loss: np.ndarray  # cumulative 2 int P^2
    output_flux: np.ndarray      # cumulative int F_out^2
    input_flux: np.ndarray       # cumulative int F_in^2
    method: str = RK4

    @property
    def ledger_series(self) -> np.ndarray:
        return (self.P ** 2 - self.P[0] ** 2 + self.output_flux - self.input_flux
                + self.free_space_loss)

    @property
    def ledger_residual(self) -> float:
        return ledger(self)

    @property
    def photons_in(self) -> float:
        return float(self.input_flux[-1])

    @property
    def photons_out(self) -> float:
        return float(self.output_flux[-1])

    @property
    def photons_lost(self) -> float:
        return float(self.free_space_loss[-1])


def ledger(res: SimulationResult) -> float:
    """Maximum magnitude of the photon-ledger residual over the grid."""
    return float(np.max(np.abs(res.ledger_series)))


def _sample(fn: Optional[TimeFunction], t: np.ndarray) -> np.ndarray:
    if fn is None:
        return np.zeros_like(t)
    values = np.asarray(fn(t), dtype=float)
    return np.broadcast_to(values, t.shape).astype(float, copy=True)


def integrate_ode(C: TimeFunction, F_in: Optional[TimeFunction],
                  cfg: SimulationConfig, kernel=None) -> SimulationResult:
    """Fixed-step classical RK4 on the grid of ``cfg``.

    ``C`` and ``F_in`` must accept numpy arrays; ``F_in=None`` means no
    input field.  ``kernel`` overrides the sweep implementation (tests and
    benchmarks).
    """
    n = cfg.n_steps
    h = cfg.step
    half = np.linspace(cfg.t_start, cfg.t_end, 2 * n + 1)
    c = _sample(C, half)
    f = _sample(F_in, half)
    if not np.all(np.isfinite(c)) or not np.all(np.isfinite(f)):
        raise DynamicsError("non-finite cooperativity or input field on the grid")
    if np.any(c < 0):
        raise DynamicsError("negative cooperativity encountered")
    limit = STEP_LIMIT / (float(c.max()) + 2.0)
    if h > limit * (1.0 + 1e-9):
        raise StepSizeError(f"step {h:.3e} exceeds {STEP_LIMIT}/(Cm+2) = {limit:.3e}")

    sweep = kernel or _kernels.rk4_sweep
    P, out_cum, in_cum, loss_cum = sweep(h, float(cfg.P_initial), c, f)
    cg = c[::2]
    fg = f[::2]
    return SimulationResult(times=half[::2], C=cg, F_in=fg,
                            F_out=fg + np.sqrt(2.0 * cg) * P, P=P,
                            free_space_loss=loss_cum, output_flux=out_cum,
                            input_flux=in_cum, method=RK4)


def _quad(fn, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(fn, a, b, epsabs=tol * 1e-2, epsrel=tol, limit=200)
        except IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge on [{a}, {b}]: {exc}") from exc
    return value


def closed_form(C: TimeFunction, F_in: Optional[TimeFunction], cfg: SimulationConfig,
                tol: float = 1e-10) -> SimulationResult:
    """Exact integral solution evaluated by nested adaptive quadrature.

    Uses the semigroup property segment by segment:

        P(b) = P(a) exp(-G(a, b)) - int_a^b sqrt(2C) F_in exp(-G(tau, b)) dtau,

    with G(x, y) = int_x^y (C + 1).  The step of ``cfg`` only sets the output
    grid.  Cumulative ledger integrals come from Simpson's rule on the
    output samples and are approximate.
    """
    def rate(tau):
        return float(C(tau)) + 1.0

    def source(tau, b):
        ci = float(C(tau))
        fi = float(F_in(tau))
        if ci == 0.0 or fi == 0.0:
            return 0.0
        return math.sqrt(2.0 * ci) * fi * math.exp(-_quad(rate, tau, b, tol))

    times = cfg.times
    P = np.empty_like(times)
    P[0] = cfg.P_initial
    for i in range(len(times) - 1):
        a, b = times[i], times[i + 1]
        p = P[i] * math.exp(-_quad(rate, a, b, tol))
        if F_in is not None:
            p -= _quad(lambda tau: source(tau, b), a, b, tol)
        P[i + 1] = p

    cg = _sample(C, times)
    fg = _sample(F_in, times)
    F_out = fg + np.sqrt(2.0 * cg) * P

    def cum(y):
        return cumulative_simpson(y, x=times, initial=0.0)

    return SimulationResult(times=times, C=cg, F_in=fg, F_out=F_out, P=P,
                            free_space_loss=cum(2.0 * P ** 2), output_flux=cum(F_out ** 2),
                            input_flux=cum(fg ** 2), method=CLOSED_FORM)


def simulate(C: TimeFunction, F_in: Optional[TimeFunction], cfg: SimulationConfig) -> SimulationResult:
    if cfg.method == RK4:
        return integrate_ode(C, F_in, cfg)
    return closed_form(C, F_in, cfg)


# --- storage / retrieval protocols -------------------------------------------------

TRUNCATED = "truncated"
INFINITE = "infinite"


def default_dt(Cm: float) -> float:
    return 1e-4 / (Cm + 2.0)


def _aligned_grid(T: float, dt: float, Cm: float, window: str):
    """(step, steps to the peak, steps after the peak) with the peak on the grid."""
    if window not in (TRUNCATED, INFINITE):
        raise ValueError(f"window must be {TRUNCATED!r} or {INFINITE!r}")
    if T > 0:
        n_peak = math.ceil(T / dt * (1.0 - 1e-12))
        h = T / n_peak
    elif window == TRUNCATED:
        raise ValueError("a truncated window needs T > 0")
    else:
        n_peak, h = 0, dt
    if window == TRUNCATED:
        return h, n_peak, n_peak
    return h, n_peak, math.ceil(TAIL_DECAY_TIMES / (Cm + 1.0) / h)


def run_emission(schedule: EmissionSchedule, dt: Optional[float] = None,
                 window: str = TRUNCATED, P_initial: float = 1.0) -> SimulationResult:
    """Spontaneous emission from P(0) = P_initial under the emission schedule."""
    if schedule.direction != "emission":
        raise ValueError("run_emission needs an emission-direction schedule")
    dt = dt or default_dt(schedule.Cm)
    h, n_peak, n_tail = _aligned_grid(schedule.T, dt, schedule.Cm, window)
    cfg = SimulationConfig(0.0, (n_peak + n_tail) * h, h, RK4, P_initial)
    return integrate_ode(schedule, None, cfg)


def run_storage(schedule: EmissionSchedule, dt: Optional[float] = None,
                window: str = TRUNCATED, shift: float = 0.0,
                pulse=None) -> SimulationResult:
    """Absorb the matched, unit-photon input pulse, starting from P = 0.

    ``schedule`` may be given in either direction; the storage mirror is
    used.  ``shift`` delays the input peak (time jitter).
    """
    em = schedule if schedule.direction == "emission" else schedule.time_reverse()
    dt = dt or default_dt(em.Cm)
    h, n_peak, n_tail = _aligned_grid(em.T, dt, em.Cm, window)
    if pulse is None:
        pulse = input_pulse(em, truncated=(window == TRUNCATED), shift=shift)
    cfg = SimulationConfig(-(n_peak + n_tail) * h, 0.0, h, RK4, 0.0)
    return integrate_ode(em.time_reverse(), pulse, cfg)


@dataclass(frozen=True)
class CycleResult:
    """Storage followed by retrieval with the same (mirrored) schedule."""

    storage: SimulationResult
    retrieval: SimulationResult
    Cm: float
    T: float
    window: str

    @property
    def stored_amplitude(self) -> float:
        return float(self.storage.P[-1])

    @property
    def efficiency(self) -> float:
        return self.retrieval.photons_out / self.storage.photons_in

    @property
    def ledger_residual(self) -> float:
        """Ledger over the whole cycle (the phases share P(0))."""
        return max(ledger(self.storage),
                   float(np.max(np.abs(self.retrieval.ledger_series + self.storage.ledger_series[-1]))))

    @property
    def bookkeeping(self) -> dict:
        """Input photons against every sink: reflected, retrieved, lost, left in the atoms."""
        inp = self.storage.photons_in
        reflected = self.storage.photons_out
        retrieved = self.retrieval.photons_out
        lost = self.storage.photons_lost + self.retrieval.photons_lost
        remaining = float(self.retrieval.P[-1] ** 2)
        closure = inp - (reflected + retrieved + lost + remaining)
        return {"input": inp, "reflected": reflected, "retrieved": retrieved,
                "free_space_loss": lost, "remaining_excitation": remaining,
                "closure": closure}


def run_full_cycle(Cm: float, T: float, dt: Optional[float] = None,
                   window: str = TRUNCATED, shift: float = 0.0) -> CycleResult:
    em = EmissionSchedule(Cm, T)
    storage = run_storage(em, dt, window, shift)
    retrieval = run_emission(em, dt, window, P_initial=float(storage.P[-1]))
    return CycleResult(storage, retrieval, Cm, T, window)


def emission_deviation(res: SimulationResult, schedule: EmissionSchedule) -> float:
    """Max pointwise relative deviation of F_out from the target envelope."""
    target = emitted_pulse(schedule)(res.times) * res.P[0]
    return float(np.max(np.abs(res.F_out - target) / np.abs(target)))
