import csv
import json
import math
import statistics

import pytest

from disco.cli import format_compatibility, main
from disco.config import parse_config_text
from disco.errors import ConfigurationError, DataFormatError
from disco.report import read_results, summarize, write_report

SMALL_RUN = """
[experiment]
synthetic = linear
synthetic_n = 120
synthetic_q = 3
seeds = {seeds}
output = {out}
plots = {plots}

[run.1]
model = ensemble_mlp
acquisition = {acq}
batch_size = 8
cycles = 3
m = 2
hidden_grid = 8
max_epochs = 10
"""


def _config(tmp_path, name="c.cfg", seeds="0, 1", acq="random, topuncertain", plots="false", out="out"):
    p = tmp_path / name
    p.write_text(SMALL_RUN.format(seeds=seeds, acq=acq, plots=plots, out=out))
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_config_cross_product():
    cfg = parse_config_text("""
[experiment]
synthetic = linear
seeds = 0, 1, 2, 3, 4
[run.1]
acquisition = random, badge
batch_size = 16
""")
    assert [e.experiment_id for e in cfg.experiments] == [
        "run1_ensemble_mlp_random_b16", "run1_ensemble_mlp_badge_b16"]
    assert len(list(cfg.tasks())) == 10


@pytest.mark.parametrize("text", [
    "[run.1]\nmodel = ensemble_mlp\n",
    "[experiment]\nsynthetic = linear\n",
    "[experiment]\nsynthetic = linear\nbogus = 1\n[run.1]\n",
    "[experiment]\nsynthetic = linear\n[run.1]\nmodel = random_forest\nacquisition = badge\n",
    "[experiment]\nsynthetic = linear\n[run.1]\nbatch_size = many\n",
    "[experiment]\nsynthetic = linear\n[runs]\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigurationError):
        parse_config_text(text)


def test_cli_run_rows_and_report(tmp_path, capsys):
    cfg = _config(tmp_path, plots="true")
    assert main(["run", str(cfg)]) == 0
    rows = _rows(tmp_path / "out" / "results.csv")
    assert len(rows) == 2 * 2 * 3
    keys = [(r["experiment_id"], r["seed"], r["cycle"]) for r in rows]
    assert len(set(keys)) == len(keys)
    meta = json.loads((tmp_path / "out" / "metadata.json").read_text())
    assert meta["zscore_outcomes"] is False and meta["n_units"] == 120
    assert not (tmp_path / "out" / "errors.log").exists()
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert list((tmp_path / "out").glob("*.svg"))
    # independent recomputation of the summary means
    for e in summary:
        vals = [float(r["test_mse"]) for r in rows
                if r["acquisition"] == e["acquisition"] and int(r["cycle"]) == e["cycle"]]
        assert abs(statistics.fmean(vals) - e["test_mse_mean"]) <= 1e-12


def test_cli_byte_identical_rerun_and_jobs(tmp_path):
    a = _config(tmp_path, "a.cfg", out="a")
    b = _config(tmp_path, "b.cfg", out="b")
    assert main(["run", str(a)]) == 0
    assert main(["run", str(b), "--jobs", "2"]) == 0

    def strip(path):
        return [line.rsplit(",", 1)[0] for line in path.read_text().splitlines()]

    assert strip(tmp_path / "a" / "results.csv") == strip(tmp_path / "b" / "results.csv")


def test_cli_incompatible_pair_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[experiment]\nsynthetic = linear\n[run.1]\nmodel = random_forest\nacquisition = badge\n")
    assert main(["run", str(p)]) == 2
    err = capsys.readouterr().err
    assert "badge" in err and "random_forest" in err


def test_cli_missing_data_exit_3(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("[experiment]\ndescriptors = nope.tsv\noutcomes = nope2.tsv\n[run.1]\n")
    assert main(["run", str(p)]) == 3


def test_cli_run_failure_exit_4(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(SMALL_RUN.format(seeds="0", acq="random", plots="false", out="o")
                 .replace("max_epochs = 10", "max_epochs = 10\ntest_fraction = 0.999"))
    assert main(["run", str(p)]) == 4
    assert "seed=0" in (tmp_path / "o" / "errors.log").read_text()


def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert out.strip() == format_compatibility()
    table = out.split("\n\n")[0].splitlines()[1:]
    assert len(table) == 9
    assert "model random_forest: 5 acquisitions" in out
    assert "model ensemble_mlp: 9 acquisitions" in out


def test_cli_synth(tmp_path, capsys):
    assert main(["synth", "--kind", "cluster_hits", "--n", "50", "--q", "3",
                 "--out-dir", str(tmp_path), "--name", "s"]) == 0
    for suffix in ("descriptors", "outcomes", "truth"):
        assert (tmp_path / f"s.{suffix}.tsv").exists()
    assert main(["synth", "--n", "3", "--out-dir", str(tmp_path)]) == 2


def _results(tmp_path, rows):
    p = tmp_path / "results.csv"
    head = "experiment_id,acquisition,model,batch_size,seed,cycle,n_acquired,test_mse,hit_ratio,wall_time_s\n"
    p.write_text(head + "".join(r + "\n" for r in rows))
    return p


def test_report_single_seed_std_zero(tmp_path):
    p = _results(tmp_path, ["e,random,ensemble_mlp,8,0,1,8,0.5,0.25,0.1"])
    (entry,) = summarize(read_results(p))
    assert entry["test_mse_std"] == 0.0 and entry["hit_ratio_mean"] == 0.25


def test_report_sample_std(tmp_path):
    p = _results(tmp_path, ["e,random,ensemble_mlp,8,0,1,8,1.0,0.2,0.1",
                            "e,random,ensemble_mlp,8,1,1,8,1.0,0.4,0.1"])
    (entry,) = summarize(read_results(p))
    assert entry["hit_ratio_mean"] == pytest.approx(0.3, abs=1e-15)
    assert entry["hit_ratio_std"] == pytest.approx(math.sqrt(0.02), abs=1e-15)
    assert abs(entry["hit_ratio_std"] - 0.1414) < 1e-4


def test_report_empty(tmp_path):
    p = _results(tmp_path, [])
    with pytest.raises(DataFormatError):
        write_report(p)
    assert main(["report", str(p)]) == 3
