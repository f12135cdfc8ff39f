import re
from pathlib import Path

import pytest

from hsforecast import cli
from hsforecast.errors import InvalidConfig


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def resolve(*argv):
    return cli.resolve_config(cli.build_parser().parse_args([str(a) for a in argv]))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A 30-day synthetic series trained once with 3 folds."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "syn.csv"
    assert cli.main(["synth", "--seed", "4", "--days", "30", "--output", str(data)]) == 0
    assert cli.main(["train", "--input", str(data), "--seed", "4", "--k-folds", "3",
                     "--model-dir", str(root / "models")]) == 0
    return root, data


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text("seed = 7\nk_folds = 5\njobs = 2\n")
    cfg = resolve("train", "--config", cfg_file, "--k-folds", 4)
    assert cfg.seed == 7  # from file
    assert cfg.k_folds == 4  # flag beats file
    assert cfg.jobs == 2
    assert cfg.train_fraction == 0.75  # default
    assert resolve("train").seed is None


def test_config_with_section_header(tmp_path):
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text("[run]\nghi-only = yes\nnormalizer = capacity:1000\n")
    cfg = resolve("evaluate", "--config", cfg_file)
    assert cfg.ghi_only is True
    assert cfg.normalizer_value() == 1000.0


def test_bad_config_values(tmp_path):
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text("colour = blue\n")
    with pytest.raises(InvalidConfig):
        resolve("train", "--config", cfg_file)
    with pytest.raises(InvalidConfig):
        resolve("train", "--formats", "pdf")
    with pytest.raises(InvalidConfig):
        resolve("train", "--normalizer", "capacity:-3").normalizer_value()


def test_synth_requires_seed(capsys):
    code, _, err = run(capsys, "synth", "--days", 2)
    assert code == 2 and "seed" in err


def test_synth_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "synth", "--seed", 9, "--days", 3, "--output", a)[0] == 0
    assert run(capsys, "synth", "--seed", 9, "--days", 3, "--output", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = run(capsys, "synth", "--seed", 9, "--days", 3)
    assert code == 0 and out == a.read_text()


def test_validate_and_characterize(workspace, capsys):
    _, data = workspace
    code, out, _ = run(capsys, "validate", "--input", data)
    assert code == 0 and out.startswith("ok: 390 records")
    code, out, _ = run(capsys, "characterize", "--input", data)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "feature,periodicity,trend,seasonality"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["ghi", "ghi_clr", "csi", "mu", "sigma", "entropy"]
    assert lines[2].split(",")[1] == "13"


def test_malformed_input_is_a_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,ghi\n2023-01-01T07:00:00,abc\n")
    code, _, err = run(capsys, "validate", "--input", bad)
    assert code == 1 and "MalformedRow" in err


def test_missing_input_is_a_usage_error(tmp_path, capsys):
    code, _, err = run(capsys, "validate", "--input", tmp_path / "nope.csv")
    assert code == 2


def test_evaluate_without_train(workspace, tmp_path, capsys):
    _, data = workspace
    code, _, err = run(capsys, "evaluate", "--input", data, "--model-dir", tmp_path / "empty",
                       "--out-dir", tmp_path / "r")
    assert code == 2 and "ModelNotFound" in err
    assert not (tmp_path / "r").exists()


def test_internal_error_exit_code(monkeypatch, capsys):
    def boom(cfg):
        raise RuntimeError("unexpected")

    monkeypatch.setitem(cli.COMMANDS, "validate", boom)
    code, _, err = run(capsys, "validate")
    assert code == 3 and "RuntimeError" in err


def test_train_writes_artifacts(workspace):
    root, _ = workspace
    names = {p.name for p in (root / "models").iterdir()}
    assert {"hs_system.pkl", "all_in_one.pkl", "run.pkl", "training_report.csv"} <= names
    report = (root / "models" / "training_report.csv").read_text().splitlines()
    assert report[1] == "7,1DA-persistence,N/A,N/A" and len(report) == 14


def test_evaluate_reports(workspace, tmp_path, capsys):
    root, data = workspace
    code, out, _ = run(capsys, "evaluate", "--input", data, "--model-dir", root / "models",
                       "--out-dir", tmp_path, "--formats", "csv,svg")
    assert code == 0
    overall = (tmp_path / "overall.csv").read_text().splitlines()
    assert len(overall) == 21
    assert sum(",HS," in ln for ln in overall) == 10
    assert sum(",all-in-one," in ln for ln in overall) == 10
    assert overall[1].startswith("C_opt,HS,")
    assert overall[-1].startswith("P,all-in-one,")
    assert (tmp_path / "by_hour_nrmse.svg").read_text().startswith("<svg")
    hours = {ln.split(",")[0] for ln in (tmp_path / "by_hour.csv").read_text().splitlines()[1:]}
    assert hours == {str(h) for h in range(7, 20)}


def test_compare_matches_overall_csv(workspace, tmp_path, capsys):
    root, data = workspace
    run(capsys, "evaluate", "--input", data, "--model-dir", root / "models", "--out-dir", tmp_path)
    code, out, _ = run(capsys, "compare", "--input", data, "--model-dir", root / "models")
    assert code == 0 and out == (tmp_path / "overall.csv").read_text()


def test_capacity_normalizer_scales_metrics(workspace, capsys):
    root, data = workspace
    _, mean_out, _ = run(capsys, "compare", "--input", data, "--model-dir", root / "models")
    _, cap_out, _ = run(capsys, "compare", "--input", data, "--model-dir", root / "models",
                        "--normalizer", "capacity:1000")
    assert mean_out.splitlines()[1] != cap_out.splitlines()[1]
    assert mean_out.splitlines()[1].split(",")[4:] == cap_out.splitlines()[1].split(",")[4:]


def test_forecast_output_format(workspace, capsys):
    root, data = workspace
    code, out, _ = run(capsys, "forecast", "--input", data, "--model-dir", root / "models",
                       "--issue-time", "2023-01-10T09:00:00")
    assert code == 0
    assert re.fullmatch(r"2023-01-10T10:00:00-07:00, \d+\.\d\d\n", out)
    code, _, err = run(capsys, "forecast", "--input", data, "--model-dir", root / "models",
                       "--issue-time", "2023-01-10T19:00:00")
    assert code == 1 and "OutOfWindow" in err


def test_input_files_are_not_modified(workspace, capsys):
    root, data = workspace
    before = data.read_bytes()
    run(capsys, "compare", "--input", data, "--model-dir", root / "models")
    assert Path(data).read_bytes() == before
