import json
import math

import jsonschema
import pytest

from rflab import cli
from rflab.errors import NumericError


def run(tmp_path, experiment, config_text="", *flags):
    cfg = tmp_path / f"{experiment}.cfg"
    cfg.write_text(config_text)
    out = tmp_path / "out"
    code = cli.main([experiment, "--config", str(cfg), "--out", str(out), *flags])
    return code, out


def test_counterexample_single_N(tmp_path):
    code, out = run(tmp_path, "counterexample", "N = 1\n")
    assert code == cli.EXIT_OK
    rows = cli.read_csv(out / "counterexample.csv")
    assert len(rows) == 1
    assert "mu_EN" in rows[0] and rows[0]["ratio"] >= 1
    # one header line plus one data line
    assert len((out / "counterexample.csv").read_text().splitlines()) == 2


def test_difference_at_large_measure(tmp_path):
    code, out = run(tmp_path, "difference-inequality", "mu = 0.9\n")
    assert code == cli.EXIT_OK
    row = cli.read_csv(out / "difference-inequality.csv")[0]
    assert row["log_D_bound"] == pytest.approx(math.log(2), abs=0)
    assert row["steps"] == 0


def test_same_config_gives_identical_csv(tmp_path):
    text = "dim = 8\np = 2, 4\nmc_samples = 2000\nseed = 7\n"
    outs = []
    for name in ("a", "b"):
        (tmp_path / name).mkdir()
        outs.append(run(tmp_path / name, "khinchin", text)[1])
    out_a, out_b = outs
    assert (out_a / "khinchin.csv").read_bytes() == (out_b / "khinchin.csv").read_bytes()


def test_manifest_validates_against_schema(tmp_path):
    code, out = run(tmp_path, "jensen", "instances = 5\n")
    assert code == cli.EXIT_OK
    manifest = json.loads((out / "jensen.manifest.json").read_text())
    jsonschema.validate(manifest, cli.manifest_schema())
    assert manifest["rows"] == 5 and manifest["config"]["instances"] == 5
    assert all(c["passed"] for c in manifest["checks"])


@pytest.mark.parametrize("experiment,text", [
    ("bilinear", "dim = 6\np = 2, 4\nmc_samples = 500\n"),
    ("log-moments", "degree = 8\ninstances = 2\n"),
    ("turan-survey", "trials = 20\n"),
    ("exploc-spectrum", "degree = 8\nn = 2\n"),
    ("spreading", "degree = 8\n"),
    ("range", "coeffs = one\ntargets = 3.0\nb_grid = 4\nseeds = 1\n"),
])
def test_every_experiment_writes_valid_outputs(tmp_path, experiment, text):
    code, out = run(tmp_path, experiment, text, "--samples", "16", "--grid-log2", "8")
    assert code == cli.EXIT_OK
    manifest = json.loads((out / f"{experiment}.manifest.json").read_text())
    jsonschema.validate(manifest, cli.manifest_schema())
    rows = cli.read_csv(out / f"{experiment}.csv")
    assert len(rows) == manifest["rows"] and list(rows[0]) == manifest["columns"]


def test_flags_override_config(tmp_path):
    cfg = cli.build_config("khinchin", {"seed": "3", "samples": "9"})
    assert cfg["seed"] == 3 and cfg["samples"] == 9
    code, out = run(tmp_path, "counterexample", "N = 1\nseed = 1\n", "--seed", "42")
    manifest = json.loads((out / "counterexample.manifest.json").read_text())
    assert manifest["config"]["seed"] == 42


def test_csv_round_trip():
    rows = [{"a": 1, "b": 0.1, "c": True, "d": "x"}, {"a": -2, "b": 1e-300, "c": False, "d": "y"}]
    text = cli.format_csv(rows)
    assert "0.10000000000000001" in text
    back = [dict(zip(rows[0], (cli._parse_cell(c) for c in line.split(","))))
            for line in text.splitlines()[1:]]
    assert back == rows


def test_format_rejects_empty_and_ragged():
    with pytest.raises(Exception):
        cli.format_csv([])
    with pytest.raises(Exception):
        cli.format_csv([{"a": 1}, {"b": 2}])


def test_config_grammar():
    raw = cli.parse_config_text("# header\nseed = 5  # trailing\n\n targets = 1, 2 ,3\n")
    assert raw == {"seed": "5", "targets": "1, 2 ,3"}
    assert cli.build_config("range", raw)["targets"] == [1.0, 2.0, 3.0]
    for bad in ("seed 5\n", "= 4\n", "seed = 1\nseed = 2\n"):
        with pytest.raises(cli.UsageError):
            cli.parse_config_text(bad)


def test_exit_usage(tmp_path, capsys):
    assert cli.main(["no-such-experiment", "--out", str(tmp_path)]) == cli.EXIT_USAGE
    code, _ = run(tmp_path, "counterexample", "bogus_key = 1\n")
    assert code == cli.EXIT_USAGE
    code, _ = run(tmp_path, "counterexample", "N = one\n")
    assert code == cli.EXIT_USAGE
    code, _ = run(tmp_path, "counterexample", "experiment = range\n")
    assert code == cli.EXIT_USAGE


def test_exit_precondition_names_predicate(tmp_path, capsys):
    code, _ = run(tmp_path, "counterexample", "N = 4\nC_param = 1.5\n")
    assert code == cli.EXIT_PRECONDITION
    code, _ = run(tmp_path, "range", "seeds = 1\nb_grid = 2\n")
    assert code == cli.EXIT_PRECONDITION
    assert "unreachable" in capsys.readouterr().err


def test_exit_io(tmp_path):
    assert cli.main(["counterexample", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = tmp_path / "c.cfg"
    cfg.write_text("N = 1\n")
    assert cli.main(["counterexample", "--config", str(cfg), "--out", str(blocker / "sub")]) == cli.EXIT_IO


def test_exit_numeric(tmp_path, monkeypatch):
    def boom(cfg):
        raise NumericError("did not converge")
    monkeypatch.setitem(cli.RUNNERS, "counterexample", boom)
    code, _ = run(tmp_path, "counterexample", "N = 1\n")
    assert code == cli.EXIT_NUMERIC
