import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from sample_nets import DATA
from pwnet.cli import main, parse_bench_spec
from pwnet.io import parse_native
from pwnet.reduction import parse_trace


def _run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def _records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_analyze_fig2():
    code, text = _run("analyze", str(DATA / "fig2.pwn"))
    (rec,) = _records(text)
    assert code == 0 and rec["verdict"] == "sound" and rec["expected_reward"] == "5"
    assert rec["rule_counts"]["merge"] >= 1


def test_analyze_with_oracle():
    code, text = _run("analyze", str(DATA / "fig2.pwn"), "--oracle")
    (rec,) = _records(text)
    assert code == 0
    assert rec["oracle"]["min"] == rec["oracle"]["max"] == "5" and rec["oracle"]["states"] == 11


def test_analyze_not_free_choice():
    code, text = _run("analyze", str(DATA / "notfc.pwn"))
    (rec,) = _records(text)
    assert code == 1 and rec["verdict"] == "not_free_choice" and "expected_reward" not in rec


def test_analyze_unsound_is_a_result():
    code, text = _run("analyze", str(DATA / "broken.pwn"), str(DATA / "fig7a.pwn"))
    recs = _records(text)
    assert code == 0
    assert [r["verdict"] for r in recs] == ["unsound", "sound"]
    assert "expected_reward" not in recs[0] and recs[1]["expected_reward"] == "13/15"


def test_analyze_writes_trace(tmp_path):
    trace = tmp_path / "fig2.trace"
    code, _ = _run("analyze", str(DATA / "fig2.pwn"), "--trace", str(trace))
    assert code == 0 and len(parse_trace(trace.read_text())) == 8


def test_analyze_reports_file_and_line(tmp_path, capsys):
    bad = tmp_path / "bad.pwn"
    bad.write_text("initial i\nfinal o\ntransition t weight 1 reward 1\narc i t\narc t q\n")
    code, text = _run("analyze", str(bad))
    assert code == 1
    assert f"{bad}:5:" in capsys.readouterr().err
    assert _records(text)[0]["verdict"] == "error"


def test_oracle_command():
    code, text = _run("oracle", str(DATA / "fig2.pwn"), "--scheduler", "max-id", "--minmax")
    (rec,) = _records(text)
    assert code == 0 and rec["expected_reward"] == "5" and rec["oracle"]["max-id"] == "5"
    code, text = _run("oracle", str(DATA / "fig2.pwn"), "--cap", "5")
    assert code == 1 and _records(text)[0]["oracle"]["status"] == "StateCapExceeded"
    code, text = _run("oracle", str(DATA / "notfc.pwn"))
    assert code == 0 and _records(text)[0]["oracle"]["min-id"] == "2"


def test_simulate_command():
    code, text = _run("simulate", str(DATA / "fig2.pwn"), "--runs", "2000", "--seed", "1")
    rec = json.loads(text)
    assert code == 0 and abs(rec["mean"] - 5) < 4 * rec["stderr"] + 1e-9
    assert _run("simulate", str(DATA / "fig2.pwn"), "--runs", "2000", "--seed", "1")[1] == text


def test_generate_and_analyze(tmp_path):
    target = tmp_path / "b2.pwn"
    code, _ = _run("generate", "--bench", "n=2,p=4/5:2/3,r=1:2", "-o", str(target))
    assert code == 0
    assert len(parse_native(target.read_text()).transitions) == 6
    assert _records(_run("analyze", str(target))[1])[0]["expected_reward"] == "13/15"


def test_bench_command(tmp_path):
    out = tmp_path / "bench.csv"
    code, _ = _run("bench", "--max-n", "4", "--repeat", "2", "--csv", str(out), "--engines", "reduce,oracle-chain")
    rows = list(csv.DictReader(out.open()))
    assert code == 0 and [r["n"] for r in rows] == ["1", "1", "2", "2", "4", "4"]
    assert all(r["status"] == "ok" for r in rows)


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["analyze"], ["bench"], ["bench", "--max-n", "0"],
    ["bench", "--max-n", "2", "--engines", "warp"], ["generate", "--bench", "p=1/2"],
    ["generate", "--bench", "n=2,p=1/2:1/3:1/4,r=1"], ["simulate", "x.pwn", "--runs", "-1"],
    ["analyze", "/nonexistent/file.pwn"],
])
def test_usage_errors_exit_2(argv):
    assert _run(*argv)[0] == 2


def test_bench_spec_parsing():
    spec = parse_bench_spec("n=3,p=1/2,r=4,fork=1")
    assert spec.n == 3 and set(spec.probabilities) == {1 / 2} and spec.fork_reward == 1
    assert parse_bench_spec("n=4,seed=9") == parse_bench_spec("n=4,seed=9")


@pytest.mark.skipif(shutil.which("pwnet") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["pwnet", "analyze", str(DATA / "fig2.pwn")], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["expected_reward"] == "5"
    proc = subprocess.run([sys.executable, "-m", "pwnet.cli", "analyze", str(DATA / "notfc.pwn")],
                          capture_output=True, text=True)
    assert proc.returncode == 1
