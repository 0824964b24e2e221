import io
import json
from importlib import resources

import numpy as np
import pytest

from phfit.core.distribution import exponential
from phfit.utils.documents import dump_document
from phfit.utils.tables import read_table

from .main import main

EXPONENTIAL_MOMENTS = [1.0, 2.0, 6.0, 24.0, 120.0]
QUICK = ["--structure", "coxian", "--n", "1", "--population", "20", "--max-epochs", "50"]
EXACT = [
    "--structure", "coxian", "--n", "1", "--population", "100",
    "--max-epochs", "30000", "--epsilon", "1e-13",
]  # fmt: skip


def _run(*args):
    stdout, stderr = io.StringIO(), io.StringIO()
    code = main([str(arg) for arg in args], stdout=stdout, stderr=stderr)
    return code, stdout.getvalue(), stderr.getvalue()


def _write(path, data):
    path.write_text(json.dumps(data))
    return path


def _example(name):
    return resources.files("phfit.data.shape_example").joinpath(name)


def test_fit_exponential(tmp_path):
    target = _write(tmp_path / "target.json", {"moments": EXPONENTIAL_MOMENTS})
    code, stdout, _ = _run("fit", target, *EXACT, "--seed", 7, "--output-dir", tmp_path / "out")

    assert code == 0
    assert "max_mape=" in stdout
    mape = read_table(tmp_path / "out" / "mape.csv", required=["i", "target", "fitted", "mape"])
    assert list(mape["i"]) == [1, 2, 3, 4, 5]
    assert mape["mape"].max() <= 1e-4
    ph = json.loads((tmp_path / "out" / "ph.json").read_text())
    assert ph["n"] == 1
    result = json.loads((tmp_path / "out" / "result.json").read_text())
    assert result["stop_reason"] == "epsilon"
    assert result["params"]["structure"] == "coxian"


def test_malformed_target_exits_with_diagnostic(tmp_path):
    target = tmp_path / "target.json"
    target.write_text('{"moments": [1.0, 2.0,\n')
    code, _, stderr = _run("fit", target, *QUICK, "--output-dir", tmp_path)
    assert code == 2
    assert "line 2" in stderr


def test_invalid_target_field(tmp_path):
    target = _write(tmp_path / "target.json", {"moments": [1.0, -2.0]})
    code, _, stderr = _run("fit", target, *QUICK, "--output-dir", tmp_path)
    assert code == 2
    assert "moments" in stderr


def test_unknown_structure_is_a_usage_error(tmp_path):
    target = _write(tmp_path / "target.json", {"moments": [1.0]})
    code, _, _ = _run("fit", target, "--structure", "erlang", "--n", 1)
    assert code == 2


def test_missing_default_blocks_is_a_config_error(tmp_path):
    target = _write(tmp_path / "target.json", {"moments": [1.0, 2.0]})
    code, _, stderr = _run("fit", target, "--structure", "hyper-erlang", "--n", 7)
    assert code == 2
    assert "blocks" in stderr


def test_fit_above_threshold_still_writes_result(tmp_path):
    target = _write(tmp_path / "target.json", {"moments": [1.0, 1.01, 1.0303]})
    code, _, _ = _run(
        "fit", target, *QUICK, "--max-epochs", 5, "--eta", 0.01, "--output-dir", tmp_path / "out"
    )
    assert code == 1
    assert (tmp_path / "out" / "result.json").exists()
    summary = read_table(tmp_path / "out" / "summary.csv", required=["max_mape"])
    assert summary["max_mape"].iloc[0] > 0.01


def test_config_document_with_flag_overrides(tmp_path):
    target = _write(tmp_path / "target.json", {"moments": [1.0, 2.0]})
    config = _write(tmp_path / "config.json", {"structure": "general", "n": 3, "seed": 1})
    code, _, _ = _run(
        "fit", target, "--config", config, "--structure", "coxian", "--n", 1,
        "--population", 10, "--max-epochs", 20, "--output-dir", tmp_path / "out",
    )  # fmt: skip
    assert code == 0
    result = json.loads((tmp_path / "out" / "result.json").read_text())
    assert result["params"]["structure"] == "coxian"
    assert result["ph"]["n"] == 1


def test_shape_fit_without_reference_has_no_kl(tmp_path):
    target = _write(tmp_path / "target.json", {"moments": EXPONENTIAL_MOMENTS[:3]})
    code, stdout, _ = _run("shape-fit", target, *QUICK, "--eta", 100, "--output-dir", tmp_path)
    assert code in (0, 1)
    summary = read_table(tmp_path / "summary.csv")
    assert "kl" not in summary.columns
    assert "kl=" not in stdout


def test_shape_fit_against_reference_reports_kl(tmp_path):
    code, stdout, _ = _run(
        "shape-fit", "--reference", _example("reference.json"), "--percentiles", 3,
        "--structure", "hyper-erlang", "--blocks", 2, 3, "--population", 10,
        "--max-epochs", 30, "--eta", 1000, "--output-dir", tmp_path,
    )  # fmt: skip
    assert code in (0, 1)
    summary = read_table(tmp_path / "summary.csv", required=["kl"])
    assert summary["kl"].iloc[0] >= 0
    assert "kl=" in stdout


def test_shape_fit_needs_target_or_reference(tmp_path):
    code, _, stderr = _run("shape-fit", *QUICK, "--output-dir", tmp_path)
    assert code == 2
    assert "--reference" in stderr


def test_zero_trade_off_matches_moment_fit(tmp_path):
    moments_only = _write(tmp_path / "moments.json", {"moments": [1.0, 2.5, 9.0]})
    with_points = _write(
        tmp_path / "points.json",
        {"moments": [1.0, 2.5, 9.0], "cdf_points": [[0.5, 0.4], [1.0, 0.6]]},
    )
    options = ["--structure", "coxian", "--n", 2, "--population", 10, "--max-epochs", 100]
    _run("fit", moments_only, *options, "--eta", 100, "--output-dir", tmp_path / "a")
    _run("shape-fit", with_points, *options, "--Q", 0, "--eta", 100, "--output-dir", tmp_path / "b")
    assert (tmp_path / "a" / "ph.json").read_bytes() == (tmp_path / "b" / "ph.json").read_bytes()


@pytest.mark.slow
def test_percentile_points_improve_shape(tmp_path):
    kl = {}
    for count in [0, 20]:
        directory = tmp_path / str(count)
        code, _, _ = _run(
            "shape-fit", "--reference", _example("reference.json"),
            "--config", _example("config.json"), "--percentiles", count,
            "--eta", 100, "--output-dir", directory,
        )  # fmt: skip
        assert code in (0, 1)
        kl[count] = read_table(directory / "summary.csv", required=["kl"])["kl"].iloc[0]
    assert kl[20] < kl[0]
    joint = read_table(tmp_path / "20" / "mape.csv", required=["mape"])
    assert len(joint) == 5
    assert joint["mape"].max() <= 1.0


def _sample(tmp_path, name, **spec):
    spec_path = _write(tmp_path / f"{name}.json", spec)
    return _run("sample", spec_path, "--output-dir", tmp_path / name)


def test_sample_archives_are_byte_identical(tmp_path):
    for name in ["a", "b"]:
        code, stdout, _ = _sample(tmp_path, name, family="general", count=10, seed=1)
        assert code == 0
        assert "10 general instances" in stdout
    files = sorted(path.relative_to(tmp_path / "a") for path in (tmp_path / "a").rglob("*"))
    for relative in files:
        if (tmp_path / "a" / relative).is_file():
            first = (tmp_path / "a" / relative).read_bytes()
            assert first == (tmp_path / "b" / relative).read_bytes()


def test_sample_moment_table(tmp_path):
    code, _, _ = _sample(tmp_path, "set", family="coxian", count=5, seed=2, size_range=[1, 200])
    assert code == 0
    table = read_table(tmp_path / "set" / "moments.csv")
    assert list(table.columns[:21]) == ["id"] + [f"m{i}" for i in range(1, 21)]
    manifest = json.loads((tmp_path / "set" / "manifest.json").read_text())
    assert manifest["seed"] == 2
    for name in manifest["instances"]:
        instance = json.loads((tmp_path / "set" / "instances" / f"{name}.json").read_text())
        assert 1 <= instance["n"] <= 200


def test_sample_rejects_bad_spec(tmp_path):
    code, _, stderr = _sample(tmp_path, "bad", family="general", size_range=[5, 2])
    assert code == 2
    assert "size_range" in stderr


def test_eval_exact_cells(tmp_path):
    _sample(tmp_path, "set", family="coxian", count=3, seed=5, size_range=[1, 1])
    grid = _write(
        tmp_path / "grid.json",
        {"cells": [{"structure": "coxian", "n": 1, "l": count} for count in [2, 3]]},
    )
    code, stdout, _ = _run(
        "eval", tmp_path / "set", "--grid", grid, "--population", 100, "--max-epochs", 20000,
        "--seed", 7, "--output-dir", tmp_path / "report",
    )  # fmt: skip
    assert code == 0
    records = read_table(tmp_path / "report" / "records.csv", required=["instance", "max_mape"])
    assert len(records) == 3 * 2
    report = read_table(tmp_path / "report" / "report.csv")
    for eta in ["0.2", "0.5", "1.0"]:
        np.testing.assert_array_equal(report[f"success@{eta}"], 100.0)
    assert "success@0.2" in stdout


def test_eval_from_flags_records_failures(tmp_path):
    _sample(tmp_path, "set", family="general", count=2, seed=5, size_range=[1, 3])
    code, _, _ = _run(
        "eval", tmp_path / "set", "--structure", "coxian", "--n", 2, "--moments", 2, 25,
        "--population", 10, "--max-epochs", 20, "--output-dir", tmp_path / "report",
    )  # fmt: skip
    assert code == 0
    records = read_table(tmp_path / "report" / "records.csv")
    assert len(records) == 4
    failed = records[records["l"] == 25]
    assert failed["error"].str.contains("carries 20").all()
    assert (records["success@0.2"] <= records["success@0.5"]).all()
    assert (records["success@0.5"] <= records["success@1.0"]).all()


def test_queue_mm1(tmp_path):
    arrival = dump_document(exponential(0.5), tmp_path / "arrival.json")
    service = dump_document(exponential(1.0), tmp_path / "service.json")
    code, stdout, _ = _run(
        "queue", "--arrival", arrival, "--service", service, "--k-max", 30, *QUICK,
        "--output-dir", tmp_path / "queue",
    )  # fmt: skip
    assert code == 0
    assert "rho=0.5" in stdout
    pmf = read_table(tmp_path / "queue" / "pmf.csv", required=["k", "p_true"])
    np.testing.assert_allclose(pmf["p_true"], 0.5 * 0.5 ** np.arange(31), atol=1e-8)
    assert [column for column in pmf.columns if column.startswith("p_hat")] == [
        "p_hat_l2", "p_hat_l3", "p_hat_l4", "p_hat_l5",
    ]  # fmt: skip
    errors = read_table(tmp_path / "queue" / "accumulated_error.csv", required=["j"])
    assert list(errors.columns) == ["j", "accerr_l2", "accerr_l3", "accerr_l4", "accerr_l5"]


def test_queue_unstable_exit_code(tmp_path):
    arrival = dump_document(exponential(1.0), tmp_path / "arrival.json")
    service = dump_document(exponential(1 / 1.05), tmp_path / "service.json")
    code, _, stderr = _run(
        "queue", "--arrival", arrival, "--service", service, *QUICK, "--output-dir", tmp_path
    )
    assert code == 4
    assert "utilization" in stderr
