import csv
import io
import json
import math
import subprocess
import sys

import pytest

from intervol.cli import config_hash, parse_radians, parse_range, run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_intersect_example(capsys):
    assert call(capsys, "intersect", "--space", "hamming", "--q", "2", "--n", "4", "--r", "2",
                "--k", "2") == (0, "8\n", "")


def test_volume_example(capsys):
    code, out, _ = call(capsys, "volume", "--space", "johnson", "--n", "4", "--w", "2",
                        "--r", "1")
    assert (code, out) == (0, "5\n")


def test_decay_csv_example(capsys):
    code, out, _ = call(capsys, "decay", "--space", "hamming", "--q", "2", "--n", "300",
                        "--r", "75", "--k", "10:150:10", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# intervol 0.1.0 config=")
    assert lines[1].startswith("# config={")
    slope_notes = [ln for ln in lines if ln.startswith("# slope")]
    assert slope_notes and float(slope_notes[0].split("=")[1].split()[0]) < 0
    rows = list(csv.DictReader(ln for ln in lines if not ln.startswith("#")))
    assert [int(r["k"]) for r in rows] == list(range(10, 151, 10))


def test_counts_are_full_decimals_in_csv(capsys):
    code, out, _ = call(capsys, "volume", "--space", "hamming", "--q", "4", "--n", "80",
                        "--r", "0:80:40", "--format", "csv")
    assert code == 0
    data = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert data[-1].split(",")[-1] == str(4**80)
    assert "e+" not in out


def test_json_embeds_config_and_seed(capsys):
    code, out, _ = call(capsys, "dispersal", "--space", "hamming", "--q", "2", "--n", "20",
                        "--r", "5", "--k", "8", "--format", "json", "--seed", "17")
    payload = json.loads(out)
    assert code == 0 and payload["verdict"] == "pass"
    assert payload["config"]["seed"] == 17
    assert payload["header"] == f"intervol 0.1.0 config={config_hash(payload['config'])}"


def test_failing_verdict_exit_code(capsys):
    code, _, _ = call(capsys, "growth", "--space", "hamming", "--q", "2", "--n", "100",
                      "--r", "50", "--t-max", "20")
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["nosuch"], ["volume", "--space", "hamming", "--n", "4"],
    ["volume", "--space", "hamming", "--n", "4", "--r", "1", "--bogus"],
    ["spherical", "--n", "10", "--theta", "60deg"], [],
])
def test_usage_errors(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 2 and out == "" and err


def test_budget_exit_code(capsys):
    code, _, err = call(capsys, "code", "--space", "hamming", "--n", "12", "--r", "2",
                        "--graph-cap", "100")
    assert code == 3 and "budget" in err


def test_environment_budget_override(capsys, monkeypatch):
    monkeypatch.setenv("INTERVOL_GRAPH_CAP", "100")
    code, _, _ = call(capsys, "graph", "--space", "hamming", "--n", "8", "--r", "1")
    assert code == 3


def test_output_file_is_byte_identical(tmp_path, capsys):
    argv = ["subgaussian", "--space", "hamming", "--q", "3", "--n", "200", "--r", "100",
            "--k", "50", "--samples", "10000", "--seed", "4", "--format", "csv"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(argv + ["--output", str(a), "--jobs", "1"]) == 0
    assert run(argv + ["--output", str(b), "--jobs", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("# intervol 0.1.0 config=")
    assert capsys.readouterr().out == ""


def test_text_file_gets_header(tmp_path, capsys):
    out = tmp_path / "v.txt"
    assert run(["volume", "--space", "hamming", "--n", "4", "--r", "2", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# intervol") and lines[-1] == "11"


def test_config_file_mode_reproduces_run(tmp_path, capsys):
    argv = ["listdecode", "--n", "10", "--p", "0.3", "--L", "2", "--message-count", "8",
            "--trials", "200", "--seed", "3", "--format", "json"]
    code, first, _ = call(capsys, *argv)
    assert code == 0
    cfg = json.loads(first)["config"]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, second, _ = call(capsys, "--config", str(path))
    assert code == 0 and second == first


@pytest.mark.parametrize("argv", [
    ["graph", "--space", "hamming", "--n", "8", "--r", "2", "--audit-t", "1"],
    ["code", "--space", "permutation", "--n", "5", "--r", "2", "--method", "degeneracy_order"],
    ["hardcore", "--space", "hamming", "--n", "4", "--r", "1", "--lam", "1.0"],
    ["sweep", "--n", "8", "--p", "0.25", "--L", "2", "--message-count", "2:6:2",
     "--trials", "50"],
    ["spherical", "--n", "10:30:10", "--theta", "pi/3", "--verify", "--samples", "20000"],
    ["decay", "--space", "permutation", "--n", "8", "--r", "5", "--k", "2:6:2"],
    ["subgaussian", "--space", "permutation", "--n", "60", "--r", "40", "--k", "20",
     "--samples", "10000"],
])
@pytest.mark.parametrize("fmt", ["text", "json", "csv"])
def test_every_command_renders(capsys, argv, fmt):
    code, out, _ = call(capsys, *argv, "--format", fmt)
    assert code == 0, out
    if fmt == "json":
        json.loads(out)
    elif fmt == "csv":
        body = [ln for ln in out.splitlines() if not ln.startswith("#")]
        assert len(list(csv.reader(io.StringIO("\n".join(body))))) >= 2


def test_code_text_lists_codewords(capsys):
    code, out, _ = call(capsys, "code", "--space", "hamming", "--n", "4", "--r", "1",
                        "--method", "exact_branch_bound")
    assert code == 0 and len(out.splitlines()) == 8


def test_parse_range():
    assert parse_range("7") == [7]
    assert parse_range("1,4") == [1, 4]
    assert parse_range("10:30:10") == [10, 20, 30]
    assert parse_range("3:5") == [3, 4, 5]
    for bad in ("a", "5:1", "1:5:0"):
        with pytest.raises(ValueError):
            parse_range(bad)


def test_parse_radians():
    assert parse_radians("0.5") == 0.5
    assert parse_radians("pi/3") == pytest.approx(math.pi / 3)
    assert parse_radians("2*pi/5") == pytest.approx(2 * math.pi / 5)
    for bad in ("60deg", "60°", "__import__('os')"):
        with pytest.raises(ValueError):
            parse_radians(bad)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "intervol", "intersect", "--space", "hamming",
                           "--n", "4", "--r", "2", "--k", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "8\n"
