import json

import pytest
from utils import read_rows

from dagster_szpiro import cli
from dagster_szpiro.arith import DEFAULT_RHO_SEED
from dagster_szpiro.cli import EXIT_DOMAIN, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, main
from dagster_szpiro.families import verify_identities
from dagster_szpiro.types import CSV_HEADER


def test_factor(capsys):
    assert main(["factor", "360"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "360 = 2^3*3^2*5" in out
    assert "gpf = 5" in out
    assert "rad = 30" in out
    assert "valuation_product = 6" in out


def test_factor_zero(capsys):
    assert main(["factor", "0"]) == EXIT_DOMAIN
    assert "szpiro: Cannot factor 0" in capsys.readouterr().err


def test_factor_effort_exceeded(capsys):
    argv = ["--max-rho-iterations", "1", "--trial-bound", "10", "factor", str(1000003 * 1000033)]
    assert main(argv) == EXIT_INTERNAL
    assert "rho iterations exceeded" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["unknown"],
        ["gpf-scan", "--from", "1", "--to", "3"],
        ["gpf-scan", "--poly", "x^2+", "--from", "1", "--to", "3"],
        ["gpf-scan", "--poly", "x^2+1", "--from", "5", "--to", "1"],
        ["gpf-scan", "--poly", "7", "--from", "1", "--to", "3"],
        ["gpf-scan", "--poly", "x^2+1", "--from", "1", "--to", "3", "--resume", "scan.ckpt"],
        ["family-scan", "--from", "1", "--to", "3"],
        ["family-scan", "--A-poly", "t", "--from", "1", "--to", "3"],
        ["family-scan", "--quadratic", "1,0", "--from", "1", "--to", "3"],
        ["family-scan", "--quadratic", "1,0,1", "--cubic", "1,0,1", "--from", "1", "--to", "3"],
        [
            "family-scan",
            "--quadratic",
            "1,0,1",
            "--A-poly",
            "t",
            "--B-poly",
            "1",
            "--from",
            "1",
            "--to",
            "3",
        ],
    ],
)
def test_usage_errors(capsys, argv):
    assert main(argv) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("szpiro: ")


@pytest.mark.parametrize(
    "argv",
    [
        ["family-scan", "--quadratic", "1,-2,1", "--from", "1", "--to", "3"],
        ["family-scan", "--A-poly", "0", "--B-poly", "t", "--from", "1", "--to", "3"],
        ["condition-check", "--poly", "(x-1)^2", "--from", "1", "--to", "3"],
        ["curve"],
    ],
)
def test_domain_errors(capsys, argv):
    assert main(argv) == EXIT_DOMAIN
    assert capsys.readouterr().err.startswith("szpiro: ")


def test_gpf_scan_to_stdout(capsys):
    assert main(["gpf-scan", "--poly", "x^2+1", "--from", "1", "--to", "3"]) == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out.splitlines() == [
        CSV_HEADER,
        "1,2,2,2,1,,,,,ok",
        "2,5,5,5,1,,,,,ok",
        "3,10,5,10,1,,,,,ok",
    ]
    assert json.loads(captured.err)["rows"] == 3


def test_gpf_scan_json(capsys):
    argv = ["gpf-scan", "--poly", "1,0,1", "--from", "1", "--to", "3", "--format", "json"]
    assert main(argv) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert [row["gpf"] for row in rows] == [2, 5, 5]
    assert rows[0]["flags"] == "ok"


def test_gpf_scan_to_file_with_resume(tmp_path, capsys):
    out_path = str(tmp_path / "gpf.csv")
    checkpoint_path = str(tmp_path / "gpf.ckpt")
    argv = ["--chunk-size", "4", "gpf-scan", "--poly", "x^2+1", "--from", "1", "--to", "10"]
    argv += ["--out", out_path, "--resume", checkpoint_path]
    assert main(argv) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["rows"] == 10
    first = read_rows(out_path)
    assert first[0] == CSV_HEADER
    assert len(first) == 11

    assert main(argv) == EXIT_OK
    assert read_rows(out_path) == first


def test_family_scan(capsys):
    assert main(["family-scan", "--quadratic", "1,0,1", "--from", "1", "--to", "2"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].startswith("1,2,2,2,1,-221184,3456,")
    assert lines[2].startswith("2,5,5,5,1,-552960,2880,")


def test_family_scan_surface(capsys):
    argv = ["family-scan", "--A-poly", "t", "--B-poly", "1", "--from", "0", "--to", "0"]
    assert main(argv) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[1].startswith("0,-432,3,6,12,-432,36,")


def test_condition_check(capsys):
    assert main(["condition-check", "--poly", "x^2+1", "--from", "1", "--to", "10"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().err)
    assert sum(count for _, count in summary["mu_histogram"]["bins"]) == 10


def test_curve(capsys):
    assert main(["curve", "--a4", "-1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "delta_min = 64" in out
    assert "conductor = 32" in out
    assert "p = 2: additive, III, f = 5" in out


def test_curve_rescales_to_minimal_model(capsys):
    assert main(["curve", "--a4", "-16"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "(u = 2)" in out
    assert "conductor = 32" in out


def test_verify_identities(capsys):
    assert main(["verify-identities", "--trials", "50", "--seed", "3"]) == EXIT_OK
    assert "50 quadratic and 50 cubic trials: 0 and 0 failures" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv,expected_seed",
    [
        (["verify-identities", "--trials", "2"], DEFAULT_RHO_SEED),
        (["--seed", "11", "verify-identities", "--trials", "2"], 11),
        (["--seed", "11", "verify-identities", "--trials", "2", "--seed", "3"], 3),
    ],
)
def test_verify_identities_seed(monkeypatch, argv, expected_seed):
    seeds = []

    def _recording_verify(trials, seed):
        seeds.append(seed)
        return verify_identities(trials, seed)

    monkeypatch.setattr(cli, "verify_identities", _recording_verify)
    assert main(argv) == EXIT_OK
    assert seeds == [expected_seed]


def test_luca(capsys):
    assert main(["luca"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 10
    assert "24208144 89" in out
