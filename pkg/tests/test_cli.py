import json
import shutil
import subprocess
import sys

import pytest

from twinbeam.cli import main
from twinbeam.tagstream import SYNC, read_stream


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def golden_cfg(fixtures_dir):
    return fixtures_dir / "golden.cfg"


def test_simulate_reproduces_golden_stream(tmp_path, fixtures_dir, golden_cfg):
    out = tmp_path / "g.ttag"
    assert run("simulate", "--config", golden_cfg, "--out", out, "--report", tmp_path / "r.json") == 0
    assert out.read_bytes() == (fixtures_dir / "golden.ttag").read_bytes()


def test_analyze_matches_golden_report(tmp_path, fixtures_dir, golden_cfg):
    out = tmp_path / "r.json"
    assert run("analyze", fixtures_dir / "golden.ttag", "--config", golden_cfg, "--out", out) == 0
    assert out.read_bytes() == (fixtures_dir / "golden_report.json").read_bytes()


def test_workers_do_not_change_bytes(tmp_path, golden_cfg):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(golden_cfg.read_text() + "block_size_pulses = 30000\n")
    outs = []
    for threads in (1, 3):
        stream, rep = tmp_path / f"s{threads}.ttag", tmp_path / f"r{threads}.json"
        assert run("simulate", "--config", cfg, "--out", stream, "--report", rep, "--threads", threads) == 0
        outs.append((stream.read_bytes(), rep.read_bytes()))
    assert outs[0] == outs[1]


def test_vacuum_gives_sync_only(tmp_path, golden_cfg):
    cfg = tmp_path / "c.cfg"
    text = golden_cfg.read_text().replace("mean_pairs_per_pulse = 0.07798", "mean_pairs_per_pulse = 0.0")
    cfg.write_text(text.replace("dark_rate_hz = 100.0", "dark_rate_hz = 0.0"))
    out, rep = tmp_path / "s.ttag", tmp_path / "r.json"
    assert run("simulate", "--config", cfg, "--out", out, "--report", rep) == 0
    rec = read_stream(out).to_array()
    assert rec.size == 1000 and (rec["channel"] == SYNC).all()
    stream = json.loads(rep.read_text())["blocks"][0]
    assert stream["pulses"] == 10**5 and stream["records_signal"] == stream["records_idler"] == 0


def test_counts_only_report(tmp_path, golden_cfg):
    out = tmp_path / "r.json"
    assert run("simulate", "--config", golden_cfg, "--counts-only", "--report", out) == 0
    blocks = {b["name"]: b for b in json.loads(out.read_text())["blocks"]}
    assert "model_joint" in blocks and blocks["joint_counts"]["total_slots"] == 10**5


def test_seed_override_changes_report(tmp_path, golden_cfg):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("simulate", "--config", golden_cfg, "--counts-only", "--report", a)
    run("simulate", "--config", golden_cfg, "--counts-only", "--report", b, "--seed", 8)
    assert json.loads(b.read_text())["seed"] == 8 and a.read_bytes() != b.read_bytes()


def test_unknown_key_exit_code(tmp_path, golden_cfg, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(golden_cfg.read_text() + "pump_mw = 1\nfoo = 2\n")
    assert run("simulate", "--config", cfg, "--counts-only") == 2
    err = capsys.readouterr().err
    assert "pump_mw: unknown key" in err and "foo: unknown key" in err


def test_truncated_stream_exit_code(tmp_path, fixtures_dir, golden_cfg, capsys):
    bad = tmp_path / "bad.ttag"
    bad.write_bytes((fixtures_dir / "golden.ttag").read_bytes()[:-5])
    assert run("analyze", bad, "--config", golden_cfg) == 3
    assert "byte offset" in capsys.readouterr().err


def test_missing_stream_exit_code(tmp_path, golden_cfg):
    assert run("analyze", tmp_path / "none.ttag", "--config", golden_cfg) == 3


def test_numerical_failure_exit_code(tmp_path, capsys):
    flat = tmp_path / "flat.txt"
    flat.write_text("detuning_ghz transmission\n" + "".join(f"{x} 1.0\n" for x in range(-10, 11)))
    assert run("cavity", "fit", flat, "--carrier-hz", 193.1e12) == 4
    assert "no resonance dip" in capsys.readouterr().err


def test_shg(capsys):
    assert run("cavity", "shg", 75e-9, 4.78e-6) == 0
    value = json.loads(capsys.readouterr().out)["blocks"][0]["value"]
    assert value == pytest.approx(0.328, abs=5e-4)


def test_q(capsys):
    assert run("cavity", "q", 193.1e12, 1.68e9, "--format", "table") == 0
    assert "114940" in capsys.readouterr().out


def test_fit_fixture_scan(capsys, fixtures_dir):
    assert run("cavity", "fit", fixtures_dir / "resonance_scan.txt", "--carrier-hz", 193.1e12) == 0
    fit = json.loads(capsys.readouterr().out)["blocks"][0]
    assert fit["q_loaded"] == pytest.approx(1.15e5, rel=1e-3) and fit["regime"] == "over"


def test_brightness(capsys, fixtures_dir):
    assert run("cavity", "brightness", fixtures_dir / "fig5a_points.txt") == 0
    blocks = json.loads(capsys.readouterr().out)["blocks"]
    assert blocks[0]["value"] == pytest.approx(27e6, rel=1e-6)


def test_coupling(capsys, fixtures_dir):
    assert run("cavity", "coupling", "--config", fixtures_dir / "cavity.cfg") == 0
    blocks = {b["name"]: b for b in json.loads(capsys.readouterr().out)["blocks"]}
    assert blocks["coupling_g_over_2pi"]["value"] == pytest.approx(2.98e6, rel=1e-4)


def test_report_rerender(tmp_path, fixtures_dir, capsys):
    assert run("report", fixtures_dir / "golden_report.json", "--format", "table") == 0
    assert "[car]" in capsys.readouterr().out


def test_console_script():
    exe = shutil.which("twinbeam")
    cmd = [exe] if exe else [sys.executable, "-m", "twinbeam"]
    done = subprocess.run(cmd + ["--version"], capture_output=True, text=True)
    assert done.returncode == 0 and "0.1.0" in done.stdout
