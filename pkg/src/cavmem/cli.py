"""Command-line front end.  The only module that touches files.

Exit codes: 0 success, 1 invalid input, 2 numerical failure (photon
ledger above tolerance).
"""
from __future__ import annotations

import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import __version__, analysis, cavity, dynamics
from ._kernels import BACKEND
from .params import DimensionlessParams, ParamsError, PhysicalParams, stated_cm
from .schedule import EmissionSchedule, ScheduleError, finesse_feasibility, optimal_window

EXIT_INVALID = 1
EXIT_NUMERIC = 2
LEDGER_TOL = 1e-8
DEFAULT_FINESSE = 1000.0


class InputError(click.ClickException):
    exit_code = EXIT_INVALID


def fmt(value) -> str:
    """Round-trip-safe text for a CSV cell."""
    if isinstance(value, (str, bool)) or value is None:
        return str(value)
    return format(float(value), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def make_manifest(command: str, parameters: dict, outputs: list) -> dict:
    return {
        "command": command,
        "parameters": _jsonable(parameters),
        "tool": f"cavmem {__version__} ({BACKEND} kernel)",
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": [str(p) for p in outputs],
    }


def _format_column(values) -> list:
    arr = np.asarray(values)
    if arr.dtype.kind in "fiu":
        return [format(v, ".17g") for v in arr.astype(float).tolist()]
    return [fmt(v) for v in values]


def render_csv(columns, table, manifest) -> str:
    """CSV text from a list of columns, manifest on the first line."""
    cells = [_format_column(col) for col in table]
    lines = ["# " + json.dumps(manifest, sort_keys=True), ",".join(columns)]
    lines.extend(",".join(row) for row in zip(*cells))
    return "\n".join(lines) + "\n"


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def write_table(out: Optional[Path], fmt_name: str, command: str, parameters: dict,
                columns, table, summary: Optional[dict] = None):
    """Write a list of columns as CSV (manifest header line) or JSON, plus a summary JSON."""
    summary_path = _sibling(out, ".summary.json") if (out and summary is not None) else None
    outputs = [p for p in (out, summary_path) if p is not None]
    manifest = make_manifest(command, parameters, outputs)
    if fmt_name == "csv":
        text = render_csv(columns, table, manifest)
    else:
        records = [dict(zip(columns, row)) for row in zip(*(_jsonable(list(c)) for c in table))]
        text = json.dumps({"manifest": manifest, "rows": records}, indent=2) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text)
    if summary is not None:
        payload = json.dumps({"manifest": manifest, "summary": _jsonable(summary)},
                             indent=2, sort_keys=True) + "\n"
        if summary_path is None:
            click.echo(payload, err=True, nl=False)
        else:
            summary_path.write_text(payload)


class TPeak(click.ParamType):
    name = "t_peak"

    def convert(self, value, param, ctx):
        if isinstance(value, float) or value == "optimal":
            return value
        try:
            x = float(value)
        except ValueError:
            self.fail(f"{value!r} is neither a number nor 'optimal'", param, ctx)
        if not x >= 0:
            self.fail("peak time must be non-negative", param, ctx)
        return x


def resolve_cm(cm, alpha_l, finesse):
    """(Cm, finesse) from any two of Cm, alpha_L, finesse."""
    if cm is None:
        if alpha_l is None or finesse is None:
            raise InputError("give --cm, or both --alpha-l and --finesse")
        cm = alpha_l * finesse / (2.0 * math.pi)
    elif alpha_l is not None and finesse is not None:
        implied = alpha_l * finesse / (2.0 * math.pi)
        if not math.isclose(cm, implied, rel_tol=1e-9):
            raise InputError(f"--cm {cm:g} contradicts alpha_L*finesse/(2 pi) = {implied:.6g}")
    elif alpha_l is not None:
        finesse = 2.0 * math.pi * cm / alpha_l
    if finesse is None:
        finesse = DEFAULT_FINESSE
    if not cm > 0:
        raise InputError("Cm must be positive")
    if not finesse > 1:
        raise InputError("finesse must exceed 1")
    return float(cm), float(finesse)


def resolve_gamma(gamma, t2_us):
    if gamma is not None and t2_us is not None:
        raise InputError("give either --gamma or --t2-us")
    if t2_us is not None:
        if not t2_us > 0:
            raise InputError("--t2-us must be positive")
        return 1.0 / (t2_us * 1e-6)
    if gamma is not None and not gamma > 0:
        raise InputError("--gamma must be positive")
    return gamma


def resolve_t(t_peak, Cm):
    if t_peak == "optimal":
        if Cm <= 2:
            click.echo("warning: Cm <= 2, large-Cm window estimates do not apply", err=True)
        return optimal_window(Cm).T_max
    return float(t_peak)


def cavity_columns(C, dims: DimensionlessParams):
    """theta, beta and delta_p/lambda for each cooperativity, clipping unreachable values."""
    C = np.asarray(C, dtype=float)
    low = C < dims.C_min
    if np.any(low):
        click.echo(f"warning: {int(low.sum())} sample(s) below the Airy minimum C_min = "
                   f"{dims.C_min:.4g}; detuning clipped to antiresonance", err=True)
    theta, _, beta = cavity.solve_detuning_many(np.clip(C, dims.C_min, dims.Cm), dims)
    return theta, beta, theta / (2.0 * math.pi)


def _common_options(fn):
    options = [
        click.option("--cm", type=float, default=None, help="Peak cooperativity Cm."),
        click.option("--alpha-l", "alpha_l", type=float, default=None, help="Optical depth alpha*L."),
        click.option("--finesse", type=float, default=None,
                     help=f"Cavity finesse (default {DEFAULT_FINESSE:g} when not implied)."),
        click.option("--gamma", type=float, default=None, help="Relaxation rate 1/T2 [1/s]."),
        click.option("--t2-us", "t2_us", type=float, default=None, help="T2 in microseconds."),
        click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help="Output file (stdout when omitted)."),
        click.option("--format", "fmt_name", type=click.Choice(["csv", "json"]), default="csv"),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


class _Group(click.Group):
    """Report usage errors with the invalid-input exit code, not click's 2."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as exc:
            exc.exit_code = EXIT_INVALID
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = EXIT_INVALID
            raise


@click.group(cls=_Group)
@click.version_option(__version__, prog_name="cavmem")
def main():
    """Tunable-cavity quantum memory: schedules, simulations and reports.

    Times are in units of T2 = 1/gamma unless stated otherwise; with --gamma
    or --t2-us a t_seconds column is appended.
    """


@main.command("design")
@click.argument("param_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--format", "fmt_name", type=click.Choice(["text", "json"]), default="text")
def cmd_design(param_file, out, fmt_name):
    """Laboratory design report from a JSON parameter file."""
    try:
        data = json.loads(param_file.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{param_file}: malformed JSON ({exc})")
    if not isinstance(data, dict):
        raise InputError(f"{param_file}: expected a JSON object")
    try:
        params = PhysicalParams.from_mapping(data)
        report = analysis.design(params, Cm=stated_cm(data))
    except (ParamsError, ScheduleError, ValueError) as exc:
        raise InputError(str(exc))

    manifest_path = _sibling(out, ".manifest.json") if out else None
    manifest = make_manifest("design", {"param_file": str(param_file), **data},
                             [p for p in (out, manifest_path) if p])
    if fmt_name == "json":
        text = json.dumps(_jsonable(report.to_dict()), indent=2, sort_keys=True) + "\n"
    else:
        text = render_design_text(report)
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text)
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def render_design_text(r: analysis.DesignReport) -> str:
    rows = [
        ("absorption linewidth", f"{r.absorption_linewidth / 1e3:.4g}", "kHz"),
        ("T2 = 1/(pi Gamma)", f"{r.T2 * 1e6:.4g}", "us"),
        ("alpha_L", f"{r.alpha_L:.4g}", ""),
        ("finesse", f"{r.finesse:.6g}", ""),
        ("Cm (used)", f"{r.Cm:.6g}", ""),
        ("Cm = alpha_L F / 2pi", f"{r.Cm_from_alpha_finesse:.6g}",
         "" if r.Cm_consistent else "MISMATCH"),
        ("C_min (exact Airy)", f"{r.C_min:.4g}", ""),
        ("C_min ~ Cm/F^2", f"{r.C_min_approx:.4g}", ""),
        ("pulse duration", f"{r.pulse_duration * 1e9:.4g}", "ns"),
        ("optimal window 2T_max", f"{r.window * 1e6:.4g}", "us"),
        ("  large-Cm estimate", f"{r.window_asymptotic * 1e6:.4g}", "us"),
        ("max truncated norm", f"{r.N_trunc_max:.6f}", ""),
        ("efficiency", f"{r.efficiency:.6f}", ""),
        ("  large-Cm estimate", f"{r.efficiency_estimate:.6f}", ""),
        ("  bound (Cm/(1+Cm))^2", f"{r.bound_reference:.6f}", ""),
        ("bad-cavity ratio", f"{r.bad_cavity_ratio:.3g}", "ok" if r.bad_cavity_ok else "FLAGGED"),
        ("finesse condition F^2 > 2exp(2CmT)", str(r.feasibility_general_ok), ""),
        ("finesse condition F^2 > Cm", str(r.feasibility_reduced_ok), ""),
        ("C(0) >= C_min", str(r.feasibility_exact_ok), ""),
        ("start detuning dp/lambda", f"{r.detuning_at_start:.4g}", ""),
    ]
    width = max(len(label) for label, _, _ in rows)
    vwidth = max(len(v) for _, v, _ in rows)
    lines = [f"{label:<{width}}  {value:>{vwidth}}  {unit}".rstrip() for label, value, unit in rows]
    lines.extend(f"warning: {w}" for w in r.warnings)
    return "\n".join(lines) + "\n"


@main.command("schedule")
@_common_options
@click.option("--t-peak", "t_peak", type=TPeak(), default="optimal", show_default=True)
@click.option("--samples", type=click.IntRange(min=2), default=201, show_default=True)
@click.option("--direction", type=click.Choice(["emission", "storage"]), default="emission")
def cmd_schedule(cm, alpha_l, finesse, gamma, t2_us, out, fmt_name, t_peak, samples, direction):
    """Sampled cavity-tuning schedule over the window [0, 2T] (or [-2T, 0])."""
    Cm, finesse = resolve_cm(cm, alpha_l, finesse)
    gamma = resolve_gamma(gamma, t2_us)
    T = resolve_t(t_peak, Cm)
    if not T > 0:
        raise InputError("the sampled window needs a positive peak time")
    feas = finesse_feasibility(Cm, T, finesse)
    if not feas.general_ok:
        click.echo(f"warning: finesse {finesse:g} fails F^2 > 2 exp(2 Cm T) "
                   f"(log of required F^2 = {feas.log_required_finesse_sq:.4g})", err=True)
    sched = EmissionSchedule(Cm, T, direction)
    t = np.linspace(0.0, 2.0 * T, samples)
    if direction == "storage":
        t = t - 2.0 * T
    C = sched(t)
    dims = DimensionlessParams.from_cm(Cm, finesse)
    theta, beta, dpl = cavity_columns(C, dims)
    columns = ["t", "C", "theta", "beta", "delta_p_over_lambda"]
    table = [t, C, theta, beta, dpl]
    if gamma is not None:
        columns.append("t_seconds")
        table.append(t / gamma)
    params = {"Cm": Cm, "finesse": finesse, "T": T, "samples": samples,
              "direction": direction, "gamma": gamma}
    write_table(out, fmt_name, "schedule", params, columns, table)


@main.command("simulate")
@_common_options
@click.option("--mode", type=click.Choice(["emit", "store", "full_cycle"]), required=True)
@click.option("--t-peak", "t_peak", type=TPeak(), default="optimal", show_default=True)
@click.option("--dt", type=float, default=None, help="Base step (default 1e-4/(Cm+2)).")
@click.option("--window", type=click.Choice([dynamics.TRUNCATED, dynamics.INFINITE]),
              default=dynamics.TRUNCATED, show_default=True)
@click.option("--jitter-delta", "jitter_delta", type=float, default=0.0,
              help="Input arrival offset gamma*delta (store / full_cycle).")
@click.option("--stride", type=click.IntRange(min=1), default=1, show_default=True,
              help="Write every n-th time step (the last step is always written).")
def cmd_simulate(cm, alpha_l, finesse, gamma, t2_us, out, fmt_name, t_peak, dt, window, jitter_delta,
                 stride, mode):
    """Integrate emission, storage or a full storage-retrieval cycle."""
    Cm, finesse = resolve_cm(cm, alpha_l, finesse)
    gamma = resolve_gamma(gamma, t2_us)
    T = resolve_t(t_peak, Cm)
    dt = dynamics.default_dt(Cm) if dt is None else dt
    if not dt > 0:
        raise InputError("--dt must be positive")
    em = EmissionSchedule(Cm, T)
    summary = {"mode": mode, "Cm": Cm, "T": T, "window": window, "dt": dt,
               "N": em.norm(), "N_trunc": em.norm_truncated()}
    try:
        if mode == "emit":
            res = dynamics.run_emission(em, dt, window)
            segments = [("emit", res, 0.0)]
            summary["emission_max_rel_deviation"] = dynamics.emission_deviation(res, em)
            summary["photons_emitted"] = res.photons_out
            residual = res.ledger_residual
        elif mode == "store":
            res = dynamics.run_storage(em, dt, window, shift=jitter_delta)
            segments = [("store", res, 0.0)]
            summary["stored_amplitude"] = float(res.P[-1])
            norm_used = summary["N_trunc"] if window == dynamics.TRUNCATED else summary["N"]
            summary["stored_amplitude_expected"] = -math.sqrt(norm_used)
            if jitter_delta != 0.0:
                ref = dynamics.run_storage(em, dt, window)
                summary["jitter_ratio_simulated"] = float(res.P[-1] / ref.P[-1])
                if window == dynamics.TRUNCATED:
                    summary["jitter_ratio_overlap"] = analysis.jitter_ratio(Cm, T, jitter_delta)
            residual = res.ledger_residual
        else:
            cycle = dynamics.run_full_cycle(Cm, T, dt, window, shift=jitter_delta)
            offset = float(cycle.storage.ledger_series[-1])
            segments = [("store", cycle.storage, 0.0), ("retrieve", cycle.retrieval, offset)]
            summary["stored_amplitude"] = cycle.stored_amplitude
            summary["efficiency_numeric"] = cycle.efficiency
            Nref = summary["N_trunc"] if window == dynamics.TRUNCATED else summary["N"]
            summary["efficiency_closed_form"] = Nref ** 2
            summary["efficiency_large_cm"] = analysis.windowed_efficiency_estimate(Cm) if Cm > 2 else None
            summary["bookkeeping"] = cycle.bookkeeping
            residual = cycle.ledger_residual
    except dynamics.StepSizeError as exc:
        raise InputError(str(exc))
    except (ScheduleError, ValueError) as exc:
        raise InputError(str(exc))
    summary["ledger_residual"] = residual
    summary["ledger_tolerance"] = LEDGER_TOL

    dims = DimensionlessParams.from_cm(Cm, finesse)
    columns = ["t", "C", "theta", "beta", "F_in", "F_out", "P", "loss_cum", "ledger_residual", "phase"]
    if gamma is not None:
        columns.append("t_seconds")
    pieces = []
    loss_offset = 0.0
    for phase, res, ledger_offset in segments:
        keep = np.unique(np.r_[0:len(res.times):stride, len(res.times) - 1])
        t = res.times[keep]
        theta, beta, _ = cavity_columns(res.C[keep], dims)
        cols = [t, res.C[keep], theta, beta, res.F_in[keep], res.F_out[keep], res.P[keep],
                res.free_space_loss[keep] + loss_offset,
                res.ledger_series[keep] + ledger_offset, [phase] * len(t)]
        if gamma is not None:
            cols.append(t / gamma)
        pieces.append(cols)
        loss_offset += res.photons_lost
    table = [np.concatenate(parts) for parts in zip(*pieces)]
    params = {"mode": mode, "Cm": Cm, "finesse": finesse, "T": T, "dt": dt,
              "window": window, "jitter_delta": jitter_delta, "stride": stride, "gamma": gamma}
    write_table(out, fmt_name, "simulate", params, columns, table, summary)
    if not residual < LEDGER_TOL:
        click.echo(f"error: photon ledger residual {residual:.3e} exceeds {LEDGER_TOL:g}", err=True)
        sys.exit(EXIT_NUMERIC)


@main.command("jitter")
@_common_options
@click.option("--t-peak", "t_peak", type=TPeak(), default="optimal", show_default=True)
@click.option("--x-max", "x_max", type=float, default=1.5, show_default=True,
              help="Largest |gamma*delta*Cm| on the grid.")
@click.option("--points", type=click.IntRange(min=3), default=61, show_default=True)
def cmd_jitter(cm, alpha_l, finesse, gamma, t2_us, out, fmt_name, t_peak, x_max, points):
    """Stored-amplitude ratio against input arrival offset."""
    Cm, finesse = resolve_cm(cm, alpha_l, finesse)
    T = resolve_t(t_peak, Cm)
    if not T > 0 or not x_max > 0:
        raise InputError("need a positive peak time and --x-max")
    grid = np.linspace(-x_max, x_max, points)
    curve = analysis.jitter_scan(Cm, grid, T)
    columns = ["x", "delta", "ratio_numeric", "ratio_closed", "efficiency_factor"]
    table = [curve.deltas, curve.delays, curve.ratio_numeric, curve.ratio_closed,
             curve.efficiency_factor]
    summary = {"Cm": Cm, "T": T,
               "threshold_x_efficiency_0.90": analysis.jitter_threshold(Cm, 0.90, T),
               "threshold_x_efficiency_0.99": analysis.jitter_threshold(Cm, 0.99, T)}
    params = {"Cm": Cm, "T": T, "x_max": x_max, "points": points}
    write_table(out, fmt_name, "jitter", params, columns, table, summary)


@main.command("audit")
@click.option("--cm-list", "cm_list", default="100,1000,10000", show_default=True)
@click.option("--t-long", "t_long", type=float, default=5.0, show_default=True,
              help="Delay for the full-pulse norm comparison.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--format", "fmt_name", type=click.Choice(["csv", "json"]), default="csv")
def cmd_audit(cm_list, t_long, out, fmt_name):
    """Exact results against the large-Cm formulas over a list of Cm."""
    try:
        values = [float(x) for x in cm_list.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--cm-list must be comma-separated numbers, got {cm_list!r}")
    if not values or any(not v > 2 for v in values):
        raise InputError("--cm-list needs at least one value, all > 2")
    rows_obj = analysis.asymptotic_audit(values, T_long=t_long)
    columns = ["Cm", "quantity", "exact", "asymptotic", "abs_gap", "rel_gap"]
    table = [[r.Cm for r in rows_obj], [r.quantity for r in rows_obj],
             [r.exact for r in rows_obj], [r.asymptotic for r in rows_obj],
             [r.abs_gap for r in rows_obj], [r.rel_gap for r in rows_obj]]
    summary = {"gaps_shrink": analysis.gaps_shrink(rows_obj), "T_long": t_long}
    write_table(out, fmt_name, "audit", {"cm_list": values, "T_long": t_long},
                columns, table, summary)


if __name__ == "__main__":
    main()
