import json

import pytest

from conftest import base_config_doc, inline_schema, make_noise_table, write_table_csv
from flowids.cli import main


@pytest.fixture
def noise_setup(tmp_path):
    table = make_noise_table(seed=0, n=240, n_features=6)
    csv_path = tmp_path / "d.csv"
    write_table_csv(table, csv_path)
    doc = base_config_doc(
        csv_path, inline_schema(table),
        svd={"enabled": True, "rank": 3, "oversampling": 2, "power": 1},
        selection={"method": "chi2", "top_m": 2},
        train={"epochs": 8, "batch_size": 32, "learning_rate": 3e-3,
               "hidden_size": 8},
    )
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    return {"cfg": cfg, "doc": doc, "tmp": tmp_path, "csv": csv_path}


def test_ingest_summary(noise_setup, capsys):
    rc = main(["ingest", "--config", str(noise_setup["cfg"]),
               "--out", str(noise_setup["tmp"] / "ing")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "rows: 240" in out
    summary = json.loads(
        (noise_setup["tmp"] / "ing" / "ingest_summary.json").read_text()
    )
    assert summary["columns"] == 6
    assert summary["unparseable_cells"] == 0


def test_svd_dumps_factors(noise_setup):
    rc = main(["svd", "--config", str(noise_setup["cfg"]),
               "--out", str(noise_setup["tmp"] / "svd")])
    assert rc == 0
    for name in ("u.csv", "s.csv", "v.csv"):
        assert (noise_setup["tmp"] / "svd" / name).is_file()


def test_select_emits_rankings(noise_setup, capsys):
    rc = main(["select", "--config", str(noise_setup["cfg"]),
               "--out", str(noise_setup["tmp"] / "sel")])
    assert rc == 0
    assert (noise_setup["tmp"] / "sel" / "chi2_scores.csv").is_file()
    assert "selected features" in capsys.readouterr().out


def test_train_then_evaluate(noise_setup, capsys):
    tr = noise_setup["tmp"] / "tr"
    rc = main(["train", "--config", str(noise_setup["cfg"]), "--out", str(tr)])
    assert rc == 0
    for name in ("model.mgnn", "model.json", "history.csv"):
        assert (tr / name).is_file()
    rc = main(["evaluate", "--config", str(noise_setup["cfg"]),
               "--model", str(tr / "model.mgnn"),
               "--out", str(noise_setup["tmp"] / "ev")])
    assert rc == 0
    doc = json.loads(
        (noise_setup["tmp"] / "ev" / "evaluation.json").read_text()
    )
    assert set(doc) == {"fpr", "frr", "accuracy", "precision", "recall",
                        "f_measure", "counts", "threshold"}


def test_run_writes_reports(noise_setup, capsys):
    rc = main(["run", "--config", str(noise_setup["cfg"]),
               "--out", str(noise_setup["tmp"] / "run"), "--threads", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "overall accuracy" in out
    for name in ("report.json", "metrics.csv", "chart_data.csv", "timings.json"):
        assert (noise_setup["tmp"] / "run" / name).is_file()


def test_seed_override_changes_report(noise_setup):
    out1 = noise_setup["tmp"] / "r1"
    out2 = noise_setup["tmp"] / "r2"
    assert main(["run", "--config", str(noise_setup["cfg"]), "--out", str(out1)]) == 0
    assert main(["run", "--config", str(noise_setup["cfg"]), "--seed", "123",
                 "--out", str(out2)]) == 0
    doc1 = json.loads((out1 / "report.json").read_text())
    doc2 = json.loads((out2 / "report.json").read_text())
    assert doc1["seed"] == 7
    assert doc2["seed"] == 123


def test_sample_rows_flag(noise_setup, capsys):
    rc = main(["ingest", "--config", str(noise_setup["cfg"]),
               "--sample-rows", "100", "--out", str(noise_setup["tmp"] / "s")])
    assert rc == 0
    summary = json.loads(
        (noise_setup["tmp"] / "s" / "ingest_summary.json").read_text()
    )
    assert summary["sampled_rows"] == 100


def test_exit_code_config_error(noise_setup):
    missing = noise_setup["tmp"] / "missing.json"
    assert main(["run", "--config", str(missing), "--out",
                 str(noise_setup["tmp"])]) == 2
    bad = noise_setup["tmp"] / "bad.json"
    bad.write_text(json.dumps({**noise_setup["doc"], "k_folds": 0}))
    assert main(["run", "--config", str(bad), "--out",
                 str(noise_setup["tmp"])]) == 2


def test_exit_code_data_error(noise_setup):
    doc = dict(noise_setup["doc"])
    doc["dataset"] = {**doc["dataset"], "path": str(noise_setup["tmp"] / "no.csv")}
    cfg = noise_setup["tmp"] / "md.json"
    cfg.write_text(json.dumps(doc))
    assert main(["run", "--config", str(cfg), "--out",
                 str(noise_setup["tmp"])]) == 3


def test_exit_code_data_error_inside_fold(noise_setup):
    doc = dict(noise_setup["doc"])
    doc["svd"] = {"enabled": True, "rank": 500, "oversampling": 10}
    cfg = noise_setup["tmp"] / "bigk.json"
    cfg.write_text(json.dumps(doc))
    assert main(["run", "--config", str(cfg), "--out",
                 str(noise_setup["tmp"])]) == 3


def test_exit_code_mapping():
    from flowids.cli import _exit_code_for
    from flowids.errors import (
        ConfigError,
        DataError,
        NumericError,
        PipelineError,
    )

    assert _exit_code_for(ConfigError("x")) == 2
    assert _exit_code_for(DataError("x")) == 3
    assert _exit_code_for(NumericError("x")) == 4
    wrapped = PipelineError("train", 0, 1, NumericError("overflow"))
    assert _exit_code_for(wrapped) == 4
