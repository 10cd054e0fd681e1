"""Tests for the command line interface."""

import json

import pytest

from mortl.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from mortl.core.config import Config
from mortl.core.exceptions import NonFiniteResult


@pytest.fixture
def full_model(tmp_path) -> str:
    """Write a random 6-state model with tau = 1 and return its manifest."""
    code = main(
        [
            "generate",
            "--n", "6",
            "--seed", "1",
            "--tau", "1.0",
            "--name", "full",
            "--out", str(tmp_path),
        ]
    )
    assert code == EXIT_OK
    return str(tmp_path / "full.json")


@pytest.fixture
def fast_config(tmp_path) -> str:
    """Write a run configuration with a short optimizer budget."""
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"optimizer": {"max_iter": 20}}))
    return str(path)


class TestGenerate:
    """Test the generate command."""

    def test_prints_the_manifest_path(self, tmp_path, capsys) -> None:
        """Test the printed path and the written files."""
        code = main(["generate", "--n", "3", "--out", str(tmp_path)])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip().endswith("random.json")
        assert (tmp_path / "random_A.mtx").exists()

    def test_bad_seed_variable(self, tmp_path, monkeypatch) -> None:
        """Test that a non-integer MORTL_SEED is a usage error."""
        monkeypatch.setenv(Config.SEED_ENV_VAR, "abc")
        code = main(["generate", "--n", "3", "--out", str(tmp_path)])
        assert code == EXIT_USAGE


class TestReduce:
    """Test the reduce command."""

    def test_tl_bt(self, full_model, tmp_path, capsys) -> None:
        """Test the report on stdout and the files on disk."""
        out = tmp_path / "reduced"
        code = main(
            [
                "reduce",
                "--model", full_model,
                "--order", "2",
                "--method", "tl-bt",
                "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["method"] == "tl-bt"
        assert report["r"] == 2
        assert report["tau"] == 1.0
        assert (out / "full_r2.json").exists()
        assert (out / "full_r2_report.json").exists()

    def test_tl_h2opt(self, full_model, fast_config, tmp_path, capsys) -> None:
        """Test the optimizer with a TL-TSIA initializer."""
        code = main(
            [
                "reduce",
                "--model", full_model,
                "--order", "2",
                "--init", "tl-tsia",
                "--config", fast_config,
                "--name", "opt",
                "--out", str(tmp_path),
            ]
        )
        assert code == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["init_method"] == "tl-tsia"
        assert report["error"] <= report["init_error"] * (1 + 1e-12)
        assert report["config"]["optimizer"]["max_iter"] == 20

    def test_optimizer_without_initializer(self, full_model, tmp_path) -> None:
        """Test that the default method needs --init."""
        code = main(
            ["reduce", "--model", full_model, "--order", "2",
             "--out", str(tmp_path)]
        )
        assert code == EXIT_USAGE

    def test_order_too_large(self, full_model, tmp_path) -> None:
        """Test that r > n is a usage error."""
        code = main(
            ["reduce", "--model", full_model, "--order", "7",
             "--method", "tl-bt", "--out", str(tmp_path)]
        )
        assert code == EXIT_USAGE

    def test_missing_horizon(self, tmp_path, capsys) -> None:
        """Test a manifest without tau and no --tau."""
        main(["generate", "--n", "3", "--out", str(tmp_path)])
        code = main(
            ["reduce", "--model", str(tmp_path / "random.json"),
             "--order", "1", "--method", "tl-bt", "--out", str(tmp_path)]
        )
        assert code == EXIT_USAGE
        assert "no horizon" in capsys.readouterr().err

    def test_missing_model(self, tmp_path, capsys) -> None:
        """Test that an unreadable manifest is an input failure."""
        code = main(
            ["reduce", "--model", str(tmp_path / "none.json"),
             "--order", "1", "--method", "tl-bt", "--tau", "1"]
        )
        assert code == EXIT_FAILURE
        assert "file not found" in capsys.readouterr().err

    def test_non_finite_reduction_is_a_failure(
        self, full_model, tmp_path, mocker
    ) -> None:
        """Test that a non-finite reduced model exits with 1."""
        mocker.patch(
            "mortl.cli.reduce_model",
            side_effect=NonFiniteResult("non-finite entries"),
        )
        code = main(
            ["reduce", "--model", full_model, "--order", "1",
             "--method", "tl-bt", "--out", str(tmp_path)]
        )
        assert code == EXIT_FAILURE

    def test_invalid_config(self, full_model, tmp_path) -> None:
        """Test a configuration with an unknown key."""
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"optimiser": {}}))
        code = main(
            ["reduce", "--model", full_model, "--order", "1",
             "--method", "tl-bt", "--config", str(config)]
        )
        assert code == EXIT_USAGE


class TestVerify:
    """Test the verify command."""

    def test_full_model_against_itself(self, full_model, tmp_path) -> None:
        """Test that G_r = G passes."""
        report = tmp_path / "report.json"
        code = main(
            ["verify", "--model", full_model, "--reduced", full_model,
             "--report", str(report)]
        )
        assert code == EXIT_OK
        assert json.loads(report.read_text())["passed"]

    def test_tl_bt_fails(self, full_model, tmp_path, capsys) -> None:
        """Test that a non-stationary reduced model exits with 1."""
        main(
            ["reduce", "--model", full_model, "--order", "2",
             "--method", "tl-bt", "--name", "bt", "--out", str(tmp_path)]
        )
        capsys.readouterr()
        code = main(
            ["verify", "--model", full_model,
             "--reduced", str(tmp_path / "bt.json")]
        )
        assert code == EXIT_FAILURE
        assert not json.loads(capsys.readouterr().out)["grad_ok"]


class TestSweep:
    """Test the sweep command."""

    def test_writes_the_table(self, full_model, fast_config, tmp_path) -> None:
        """Test the CSV written for r = 1..3."""
        out = tmp_path / "sweep.csv"
        code = main(
            ["sweep", "--model", full_model, "--r-max", "3",
             "--config", fast_config, "--no-timing", "--out", str(out)]
        )
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "r,err_init,err_opt,delta_err_pct,iters,seconds"
        assert [line.split(",")[0] for line in lines[1:]] == ["1", "2", "3"]
        assert all(line.endswith(",") for line in lines[1:])

    def test_order_equal_to_n(self, full_model) -> None:
        """Test that r_max must stay below n."""
        code = main(["sweep", "--model", full_model, "--r-max", "6"])
        assert code == EXIT_USAGE


def test_gramians(full_model, tmp_path, capsys) -> None:
    """Test the summary and the saved Gramians."""
    code = main(
        ["gramians", "--model", full_model, "--tau", "2.0",
         "--out", str(tmp_path / "g")]
    )
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["tau"] == 2.0
    assert len(summary["singular_values"]) == 6
    assert (tmp_path / "g" / "full_P_tau.mtx").exists()


def test_serve_runs_uvicorn(mocker) -> None:
    """Test that serve hands the app to uvicorn."""
    run = mocker.patch("uvicorn.run")
    assert main(["serve", "--port", "9000"]) == EXIT_OK
    run.assert_called_once_with("mortl.main:app", host="127.0.0.1", port=9000)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["--version"], EXIT_OK),
        ([], EXIT_USAGE),
        (["reduce"], EXIT_USAGE),
        (["generate", "--n", "three"], EXIT_USAGE),
    ],
)
def test_argument_errors(argv, code) -> None:
    """Test the exit codes of argparse."""
    assert main(argv) == code
