import subprocess
import sys

import pytest

from edgedns.cli import CONFIG_ERROR, OK, THRESHOLD_FAILED, main

from conftest import REPO

EXAMPLE = str(REPO / "configs" / "example.ini")


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "edgedns", *args], capture_output=True, text=True, cwd=REPO)


def test_run_prints_table(capsys):
    assert main(["run", "--config", EXAMPLE, "--counts", "10,20"]) == OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "Average DNS query response times (ms)"
    assert out[1].split() == ["scenario", "resolver", "10", "20"]
    assert [line.split()[0] for line in out[2:]] == ["edge", "google", "quad9"]


def test_csv_and_trace_deterministic(tmp_path):
    outputs = []
    for i in range(2):
        csv_path, trace_path = tmp_path / f"a{i}.csv", tmp_path / f"a{i}.trace"
        r = run_cli("run", "--config", EXAMPLE, "--counts", "10,50", "--csv", str(csv_path),
                    "--trace", str(trace_path))
        assert r.returncode == 0, r.stderr
        outputs.append((csv_path.read_bytes(), trace_path.read_bytes()))
    assert outputs[0] == outputs[1]
    assert outputs[0][1].startswith(b"# scenario edge run 0\n")


def test_seed_override_changes_jittered_run(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--config", EXAMPLE, "--counts", "20", "--scenario", "quad9", "--csv", str(a)]) == OK
    assert main(["run", "--config", EXAMPLE, "--counts", "20", "--scenario", "quad9", "--seed", "99",
                 "--csv", str(b)]) == OK
    assert a.read_text() != b.read_text()


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario.x]\nresolver = nowhere\n")
    assert main(["run", "--config", str(bad)]) == CONFIG_ERROR
    assert f"{bad}:2: [scenario.x] resolver" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == CONFIG_ERROR
    assert main(["run", "--config", EXAMPLE, "--scenario", "nope"]) == CONFIG_ERROR


def test_expect_threshold_exit_code(tmp_path, capsys):
    good, bad = tmp_path / "good.csv", tmp_path / "bad.csv"
    good.write_text("scenario,resolver,10\ngoogle,8.8.8.8,18.6\n")
    bad.write_text("scenario,resolver,10\ngoogle,8.8.8.8,30\n")
    args = ["run", "--config", EXAMPLE, "--counts", "10", "--scenario", "google", "--expect"]
    assert main(args + [str(good)]) == OK
    assert main(args + [str(bad)]) == THRESHOLD_FAILED
    assert "FAIL google n=10" in capsys.readouterr().err


def test_bad_counts_argument():
    with pytest.raises(SystemExit):
        main(["run", "--config", EXAMPLE, "--counts", "ten"])


def test_calibrate_writes_loadable_config(tmp_path):
    out = tmp_path / "cal.ini"
    targets = REPO / "src" / "edgedns" / "data" / "table1.csv"
    assert main(["calibrate", "--targets", str(targets), "--rows", "google,edge", "--out", str(out)]) == OK
    text = out.read_text()
    assert text.startswith("# calibrated against table1.csv")
    r = run_cli("run", "--config", str(out), "--counts", "10", "--scenario", "google")
    assert r.returncode == 0 and "20.12" in r.stdout


def test_calibrate_infeasible_exit_code(tmp_path):
    t = tmp_path / "t.csv"
    t.write_text("scenario,resolver,10\na,edge,30\nb,edge,20\n")
    assert main(["calibrate", "--targets", str(t)]) == CONFIG_ERROR


def test_fixtures_verify(tmp_path, capsys):
    assert main(["fixtures", "verify"]) == OK
    assert capsys.readouterr().out.splitlines()[-1].endswith("fixtures passed")
    (tmp_path / "dns").mkdir()
    (tmp_path / "dns" / "x.hex").write_text("00")
    (tmp_path / "dns" / "x.expect").write_text("id = 1\n")
    assert main(["fixtures", "verify", "--dir", str(tmp_path)]) == THRESHOLD_FAILED
    assert main(["fixtures", "verify", "--dir", str(tmp_path / "empty")]) == THRESHOLD_FAILED
