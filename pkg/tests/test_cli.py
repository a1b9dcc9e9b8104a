import csv
import io
import json
import math
from pathlib import Path

import pytest
from click.testing import CliRunner

from cavmem import cli
from cavmem.schedule import norm_truncated, optimal_window

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "design_example.json"


@pytest.fixture
def runner():
    return CliRunner()


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    manifest = json.loads(lines[0][2:])
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    return manifest, rows


def run(runner, args, code=0):
    result = runner.invoke(cli.main, args)
    assert result.exit_code == code, result.output
    return result


def test_design_text_report(runner):
    out = run(runner, ["design", str(CONFIG)]).output
    assert "31.83" in out
    assert "MISMATCH" in out
    assert "1.257" in out


def test_design_json_and_manifest(runner, tmp_path):
    target = tmp_path / "design.json"
    run(runner, ["design", str(CONFIG), "--format", "json", "--out", str(target)])
    report = json.loads(target.read_text())
    assert report["window"] == pytest.approx(1.25e-6, rel=0.02)
    assert report["efficiency"] == pytest.approx(0.90, abs=0.01)
    manifest = json.loads((tmp_path / "design.manifest.json").read_text())
    assert manifest["command"] == "design" and manifest["parameters"]["Cm"] == 100.0


def test_design_missing_key(runner, tmp_path):
    data = json.loads(CONFIG.read_text())
    del data["wavelength"]
    bad = tmp_path / "p.json"
    bad.write_text(json.dumps(data))
    result = run(runner, ["design", str(bad)], code=cli.EXIT_INVALID)
    assert "wavelength" in result.output


def test_design_rejects_zero_alpha(runner, tmp_path):
    data = json.loads(CONFIG.read_text())
    data["alpha_L"] = 0.0
    bad = tmp_path / "p.json"
    bad.write_text(json.dumps(data))
    run(runner, ["design", str(bad)], code=cli.EXIT_INVALID)
    bad.write_text("{not json")
    run(runner, ["design", str(bad)], code=cli.EXIT_INVALID)


def test_schedule_endpoints(runner):
    _, rows = parse_csv(run(runner, ["schedule", "--cm", "100"]).output)
    assert len(rows) == 201
    assert float(rows[-1]["C"]) == pytest.approx(100.0, rel=1e-10)
    assert float(rows[-1]["theta"]) == 0.0
    T = optimal_window(100.0).T_max
    assert float(rows[-1]["t"]) == pytest.approx(2 * T, rel=1e-15)


def test_schedule_two_samples_with_seconds(runner):
    _, rows = parse_csv(run(runner, ["schedule", "--cm", "100", "--samples", "2",
                                     "--t2-us", "32"]).output)
    assert len(rows) == 2
    assert float(rows[1]["t_seconds"]) == pytest.approx(float(rows[1]["t"]) * 32e-6)


def test_schedule_feasibility_warning(runner):
    T = 10 * optimal_window(100.0).T_max
    result = run(runner, ["schedule", "--cm", "100", "--finesse", "1000", "--t-peak", repr(T)])
    assert "warning" in result.stderr


def test_schedule_storage_direction(runner):
    _, rows = parse_csv(run(runner, ["schedule", "--cm", "10", "--direction", "storage"]).output)
    assert float(rows[0]["C"]) == pytest.approx(10.0, rel=1e-10)
    assert float(rows[-1]["t"]) == 0.0


@pytest.mark.parametrize("args", [
    ["schedule"], ["schedule", "--cm", "-1"], ["schedule", "--cm", "100", "--t-peak", "soon"],
    ["schedule", "--cm", "10", "--alpha-l", "0.1", "--finesse", "100"],
    ["simulate", "--cm", "100", "--mode", "emit", "--dt", "0.01"],
    ["audit", "--cm-list", "1,abc"], ["audit", "--cm-list", "1"],
    ["schedule", "--cm", "100", "--gamma", "1", "--t2-us", "1"],
    ["simulate", "--cm", "100"], ["schedule", "--bogus"], ["nonsense"],
])
def test_invalid_input_exit_code(runner, args):
    run(runner, args, code=cli.EXIT_INVALID)


def test_simulate_full_cycle(runner, tmp_path):
    out = tmp_path / "cycle.csv"
    run(runner, ["simulate", "--cm", "100", "--mode", "full_cycle", "--out", str(out)])
    manifest, rows = parse_csv(out.read_text())
    assert manifest["command"] == "simulate"
    summary = json.loads((tmp_path / "cycle.summary.json").read_text())["summary"]
    exact = norm_truncated(100.0, optimal_window(100.0).T_max) ** 2
    assert summary["efficiency_numeric"] == pytest.approx(exact, abs=1e-3)
    assert summary["efficiency_numeric"] == pytest.approx(0.9018, abs=0.005)
    assert summary["ledger_residual"] < cli.LEDGER_TOL
    assert {r["phase"] for r in rows} == {"store", "retrieve"}
    assert max(abs(float(r["ledger_residual"])) for r in rows) < cli.LEDGER_TOL


def test_simulate_emit_summary(runner, tmp_path):
    out = tmp_path / "emit.csv"
    run(runner, ["simulate", "--cm", "100", "--mode", "emit", "--out", str(out)])
    summary = json.loads((tmp_path / "emit.summary.json").read_text())["summary"]
    assert summary["emission_max_rel_deviation"] < 1e-6


def test_simulate_jitter_matches_scan(runner, tmp_path):
    out = tmp_path / "store.csv"
    delta = 0.002
    run(runner, ["simulate", "--cm", "100", "--mode", "store", "--jitter-delta", repr(delta),
                 "--out", str(out)])
    summary = json.loads((tmp_path / "store.summary.json").read_text())["summary"]
    assert abs(summary["stored_amplitude"]) < math.sqrt(norm_truncated(100.0, summary["T"]))
    assert summary["jitter_ratio_simulated"] == pytest.approx(summary["jitter_ratio_overlap"], rel=1e-8)


def test_simulate_ledger_failure_exit(runner, monkeypatch, tmp_path):
    monkeypatch.setattr(cli, "LEDGER_TOL", 1e-30)
    result = runner.invoke(cli.main, ["simulate", "--cm", "10", "--mode", "emit",
                                      "--out", str(tmp_path / "x.csv")])
    assert result.exit_code == cli.EXIT_NUMERIC
    assert "ledger" in result.stderr


def test_jitter_command(runner, tmp_path):
    out = tmp_path / "j.csv"
    run(runner, ["jitter", "--cm", "100", "--out", str(out)])
    _, rows = parse_csv(out.read_text())
    mid = rows[len(rows) // 2]
    assert float(mid["x"]) == 0.0 and float(mid["ratio_numeric"]) == 1.0
    ratios = [float(r["ratio_numeric"]) for r in rows]
    assert ratios == pytest.approx(ratios[::-1], abs=1e-14)
    summary = json.loads((tmp_path / "j.summary.json").read_text())["summary"]
    assert summary["threshold_x_efficiency_0.90"] == pytest.approx(0.35, abs=0.05)
    assert summary["threshold_x_efficiency_0.99"] == pytest.approx(0.10, abs=0.02)


def test_audit_command(runner, tmp_path):
    out = tmp_path / "a.json"
    run(runner, ["audit", "--format", "json", "--out", str(out)])
    payload = json.loads(out.read_text())
    assert len(payload["rows"]) == 12
    summary = json.loads((tmp_path / "a.summary.json").read_text())["summary"]
    assert all(summary["gaps_shrink"].values())


def test_csv_body_is_deterministic(runner):
    args = ["schedule", "--cm", "100", "--samples", "51"]
    a = run(runner, args).output.splitlines()[1:]
    b = run(runner, args).output.splitlines()[1:]
    assert a == b


def test_csv_values_round_trip(runner):
    text = run(runner, ["schedule", "--cm", "100", "--samples", "11"]).output
    _, rows = parse_csv(text)
    for cell in rows[3].values():
        assert float(repr(float(cell))) == float(cell)
        assert cli.fmt(float(cell)) == cell
    T = optimal_window(100.0).T_max
    assert float(rows[5]["t"]) == 2 * T * 5 / 10


def test_fmt_is_round_trip_safe():
    for x in (0.1, 1 / 3, math.pi * 1e-300, 2.0 ** 0.5):
        assert float(cli.fmt(x)) == x
    assert cli.fmt("emit") == "emit"


def test_version(runner):
    assert "cavmem" in run(runner, ["--version"]).output


def test_simulate_stride_keeps_endpoints(runner, tmp_path):
    full, thin = tmp_path / "full.csv", tmp_path / "thin.csv"
    base = ["simulate", "--cm", "10", "--mode", "emit"]
    run(runner, [*base, "--out", str(full)])
    run(runner, [*base, "--stride", "7", "--out", str(thin)])
    _, a = parse_csv(full.read_text())
    _, b = parse_csv(thin.read_text())
    assert b[0] == a[0] and b[-1] == a[-1]
    assert b[1] == a[7]
    assert len(b) == len(range(0, len(a), 7)) + (1 if (len(a) - 1) % 7 else 0)
