import json
import math
import os
import random
from fractions import Fraction

import pytest
from utils import FAST_FACTOR_OPTIONS, X2_PLUS_1, read_rows

from dagster_szpiro.arith import factorize, log_abs
from dagster_szpiro.errors import (
    DomainError,
    InternalError,
    ResumeMismatchError,
    UsageError,
)
from dagster_szpiro.families import cubic_gpf, make_surface, quadratic_gpf, surface_of
from dagster_szpiro.polyz import IntPoly
from dagster_szpiro.scan import (
    LUCA_TABLE,
    check_condition,
    condition_config,
    family_config,
    gpf_config,
    luca_table,
    render_csv,
    run_scan,
    scan_family,
    scan_gpf,
    verify_sample,
)
from dagster_szpiro.types import CSV_HEADER, ScanRecord, ScanSettings

T = IntPoly.monomial(1, 1)
SETTINGS = ScanSettings(**FAST_FACTOR_OPTIONS, chunk_size=10)


def test_luca_table():
    assert luca_table() == list(LUCA_TABLE)
    assert dict(LUCA_TABLE)[24208144] == 89


def test_gpf_scan_single_value():
    output = scan_gpf(X2_PLUS_1, 1, 1, SETTINGS)
    assert output.completed
    assert output.rows == 1
    (record,) = output.records
    assert (record.n, record.f_n, record.gpf, record.rad, record.val_product) == (1, 2, 2, 2, 1)
    assert record.flag == "ok"
    assert record.bound_columns == {"log_gpf": math.log(2)}


def test_gpf_scan_records_shapes():
    output = scan_gpf(X2_PLUS_1, 100, 100, SETTINGS)
    (record,) = output.records
    assert record.gpf == 10001 // 73
    assert set(record.bound_columns) == {
        "log_gpf",
        "gpf_shape",
        "stewart_yu_shape",
        "mahler_shape",
    }


def test_gpf_scan_zero_value():
    output = scan_gpf(IntPoly((-5, 1)), 4, 6, SETTINGS)
    records = output.records
    assert [record.flag for record in records] == ["ok", "zero_value", "ok"]
    assert records[1].f_n == 0
    assert records[1].gpf is None
    assert (records[0].f_n, records[0].gpf, records[0].rad) == (-1, 1, 1)
    assert output.summary["flags"]["zero_value"] == 1


def test_gpf_scan_summary():
    settings = ScanSettings(**FAST_FACTOR_OPTIONS, minima_count=3)
    output = scan_gpf(X2_PLUS_1, 1, 10, settings)
    assert [record.gpf for record in output.records] == [2, 5, 5, 17, 13, 37, 5, 13, 41, 101]
    assert output.summary["running_minima"] == [[1, 2], [2, 5], [3, 5]]
    assert output.summary["maxima"]["gpf"] == {"value": 101, "n": 10}
    assert output.summary["rows"] == 10
    assert output.summary["flags"]["ok"] == 10


def test_gpf_scan_matches_factorize():
    output = scan_gpf(IntPoly((7, -3, 0, 2)), -200, 200, SETTINGS)
    for record in output.records:
        value = 2 * record.n**3 - 3 * record.n + 7
        assert record.f_n == value
        assert record.gpf == factorize(value).greatest_prime_factor
        assert record.rad % record.gpf == 0
        assert record.f_n % record.rad == 0


def test_csv_output(tmp_path):
    out_path = str(tmp_path / "gpf.csv")
    output = scan_gpf(X2_PLUS_1, 1, 25, SETTINGS, out_path=out_path)
    assert output.records is None
    assert output.records_path == out_path
    rows = read_rows(out_path)
    assert rows[0] == CSV_HEADER
    assert rows[1] == "1,2,2,2,1,,,,,ok"
    assert len(rows) == 26


def test_render_csv_without_records():
    assert render_csv([]) == CSV_HEADER + "\n"


def test_json_output_round_trip(tmp_path):
    out_path = str(tmp_path / "family.json")
    family = quadratic_gpf(1, 0, 1)
    in_memory = scan_family(family, 1, 20, SETTINGS)
    scan_family(family, 1, 20, SETTINGS, out_path=out_path, fmt="json")
    with open(out_path, encoding="utf-8") as handle:
        data = json.load(handle)
    assert tuple(ScanRecord.from_json(row) for row in data) == in_memory.records


def _scan(out_path, checkpoint_path=None, resume=False, max_chunks=None, fmt="csv", hi=100):
    return run_scan(
        gpf_config(X2_PLUS_1, 1, hi, SETTINGS),
        out_path=out_path,
        fmt=fmt,
        checkpoint_path=checkpoint_path,
        resume=resume,
        max_chunks=max_chunks,
    )


def _read_bytes(path):
    with open(path, "rb") as handle:
        return handle.read()


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_resume_is_byte_identical(tmp_path, fmt):
    full_path = str(tmp_path / f"full.{fmt}")
    part_path = str(tmp_path / f"part.{fmt}")
    checkpoint_path = str(tmp_path / "scan.ckpt")
    full = _scan(full_path, fmt=fmt)

    partial = _scan(part_path, checkpoint_path, resume=True, max_chunks=3, fmt=fmt)
    assert not partial.completed
    assert partial.rows == 30
    assert os.path.exists(checkpoint_path)

    resumed = _scan(part_path, checkpoint_path, resume=True, fmt=fmt)
    assert resumed.completed
    assert resumed.rows == 100
    assert resumed.summary == full.summary
    assert _read_bytes(part_path) == _read_bytes(full_path)


def test_resume_discards_rows_after_checkpoint(tmp_path):
    full_path = str(tmp_path / "full.csv")
    part_path = str(tmp_path / "part.csv")
    checkpoint_path = str(tmp_path / "scan.ckpt")
    _scan(full_path)
    _scan(part_path, checkpoint_path, resume=True, max_chunks=4)
    with open(part_path, "a", encoding="utf-8") as handle:
        handle.write("41,1682,29,58,1,,,,,o")
    _scan(part_path, checkpoint_path, resume=True)
    assert _read_bytes(part_path) == _read_bytes(full_path)


def test_resume_rejects_other_scan(tmp_path):
    part_path = str(tmp_path / "part.csv")
    checkpoint_path = str(tmp_path / "scan.ckpt")
    _scan(part_path, checkpoint_path, resume=True, max_chunks=2)
    with pytest.raises(ResumeMismatchError):
        _scan(part_path, checkpoint_path, resume=True, hi=200)
    with pytest.raises(UsageError):
        _scan(str(tmp_path / "elsewhere.csv"), checkpoint_path, resume=True)


def test_checkpoint_needs_record_file(tmp_path):
    with pytest.raises(UsageError):
        _scan(None, str(tmp_path / "scan.ckpt"))


@pytest.mark.parametrize("chunk_size", [1, 7, 1024])
def test_chunk_size_does_not_change_output(tmp_path, chunk_size):
    reference_path = str(tmp_path / "reference.csv")
    out_path = str(tmp_path / "chunked.csv")
    scan_gpf(X2_PLUS_1, -30, 70, SETTINGS, out_path=reference_path)
    settings = SETTINGS._replace(chunk_size=chunk_size)
    scan_gpf(X2_PLUS_1, -30, 70, settings, out_path=out_path)
    assert _read_bytes(out_path) == _read_bytes(reference_path)
    assert gpf_config(X2_PLUS_1, -30, 70, settings).digest() == (
        gpf_config(X2_PLUS_1, -30, 70, SETTINGS).digest()
    )


def test_workers_do_not_change_output():
    single = scan_gpf(X2_PLUS_1, 1, 60, SETTINGS)
    parallel = scan_gpf(X2_PLUS_1, 1, 60, SETTINGS, max_workers=2)
    assert parallel.records == single.records
    assert parallel.summary == single.summary


def test_digest_tracks_settings():
    base = gpf_config(X2_PLUS_1, 1, 100, SETTINGS)
    assert base.digest() != gpf_config(X2_PLUS_1, 1, 100, SETTINGS._replace(seed=8)).digest()
    assert base.digest() != gpf_config(X2_PLUS_1, 1, 101, SETTINGS).digest()
    assert base.digest() != gpf_config(IntPoly((2, 0, 1)), 1, 100, SETTINGS).digest()


@pytest.mark.parametrize(
    "make_config,error",
    [
        (lambda: gpf_config(X2_PLUS_1, 5, 4), UsageError),
        (lambda: gpf_config(IntPoly((5,)), 1, 10), UsageError),
        (lambda: family_config(quadratic_gpf(1, 0, 1), 2, 1), UsageError),
        (lambda: condition_config(IntPoly((1, -2, 1)), 1, 10), DomainError),
        (lambda: condition_config(IntPoly(), 1, 10), DomainError),
    ],
)
def test_scan_configs_reject(make_config, error):
    with pytest.raises(error):
        make_config()


def test_unknown_format():
    with pytest.raises(UsageError):
        run_scan(gpf_config(X2_PLUS_1, 1, 2), fmt="xml")


def test_factor_cap_rows_are_flagged():
    settings = ScanSettings(seed=7, max_rho_iterations=1, trial_bound=10)
    m = 1000003 * 1000033
    output = scan_gpf(T, m, m, settings)
    (record,) = output.records
    assert record.flag == "factor_cap"
    assert record.f_n == m
    assert record.gpf is None
    assert output.summary["flags"]["factor_cap"] == 1


def test_family_scan_quadratic():
    output = scan_family(quadratic_gpf(1, 0, 1), 1, 50, SETTINGS)
    assert output.summary["flags"]["ok"] == 50
    first = output.records[0]
    assert (first.f_n, first.gpf, first.rad, first.val_product) == (2, 2, 2, 1)
    assert (first.delta_min, first.conductor) == (-221184, 3456)
    assert first.quasi_ratio == 1
    for record in output.records:
        assert record.rad_divides
        assert record.f_n == record.n**2 + 1
        assert record.gpf == factorize(record.f_n).greatest_prime_factor
        assert record.szpiro_ratio == pytest.approx(
            log_abs(record.delta_min) / log_abs(record.conductor)
        )
        assert record.kappa_emp is not None
    assert "1" in output.summary["quasi_ratios"]
    assert "szpiro_ratio" in output.summary["maxima"]


def test_family_scan_surface():
    output = scan_family(make_surface(T, 1), 0, 0, SETTINGS)
    (record,) = output.records
    assert record.f_n == -432
    assert (record.gpf, record.rad, record.val_product) == (3, 6, 12)
    assert (record.delta_min, record.conductor) == (-432, 36)
    assert record.quasi_ratio == Fraction(1)
    assert record.szpiro_ratio == pytest.approx(math.log(432) / math.log(36))
    assert record.bound_columns["naive_height"] == 0.0
    assert record.bound_columns["log_conductor"] == pytest.approx(math.log(36))


def test_family_scan_bad_fibres():
    output = scan_family(make_surface(-3, T), -3, 3, SETTINGS)
    flags = {record.n: record.flag for record in output.records}
    assert flags[-2] == flags[2] == "bad_fiber"
    assert output.summary["flags"]["bad_fiber"] == 2
    assert all(flag == "ok" for n, flag in flags.items() if n not in (-2, 2))


def test_check_condition():
    output = check_condition(X2_PLUS_1, 1, 30, SETTINGS)
    rows = {record.n: record for record in output.records}
    assert rows[1].bound_columns["mu_emp"] == 0.0
    assert rows[7].f_n == 50
    assert rows[7].val_product == 2
    assert rows[7].bound_columns["mu_emp"] == pytest.approx(math.log(2) / math.log(10))
    assert "kappa_crit" in rows[7].bound_columns
    histogram = output.summary["mu_histogram"]
    assert sum(count for _, count in histogram["bins"]) == 30


def test_verify_sample():
    rng = random.Random(0)
    good = [ScanRecord(n, n * n + 1, *_arith(n * n + 1)) for n in range(1, 20)]
    assert verify_sample(good, rng, FAST_FACTOR_OPTIONS) == 1
    assert verify_sample([ScanRecord(5, 0, flag="zero_value")], rng, FAST_FACTOR_OPTIONS) == 0
    with pytest.raises(InternalError):
        verify_sample([ScanRecord(3, 10, 7, 10, 1)], rng, FAST_FACTOR_OPTIONS)


def _arith(m):
    factorization = factorize(m)
    return (
        factorization.greatest_prime_factor,
        factorization.radical,
        factorization.valuation_product,
    )


@pytest.mark.parametrize("chunk_size", [3, 1024])
def test_summaries_do_not_depend_on_chunking(chunk_size):
    settings = SETTINGS._replace(chunk_size=chunk_size)
    family = scan_family(quadratic_gpf(1, 1, 1), 1, 40, settings)
    reference = scan_family(quadratic_gpf(1, 1, 1), 1, 40, SETTINGS)
    assert family.summary == reference.summary
    assert family.summary["maxima"]["kappa_emp"] == reference.summary["maxima"]["kappa_emp"]

    condition = check_condition(IntPoly((0, 1, 1)), 1, 200, settings)
    assert condition.summary == check_condition(IntPoly((0, 1, 1)), 1, 200, SETTINGS).summary
    assert condition.summary["maxima"]["mu_emp"]["value"] > 0


def test_family_scans_keep_quadratic_and_cubic_apart():
    quadratic = scan_family(quadratic_gpf(1, 0, 1), 0, 5, SETTINGS)
    cubic = scan_family(cubic_gpf(1, 0, 1), 0, 5, SETTINGS)
    assert quadratic.records[0].f_n == 1
    # y^2 = x^3 + 2
    first = cubic.records[0]
    assert (first.f_n, first.delta_min, first.conductor, first.flag) == (1, -1728, 1728, "ok")
    D = surface_of(cubic_gpf(1, 0, 1)).D
    for record in cubic.records:
        assert record.f_n == record.n**3 + 1
        assert record.flag == "ok"
        assert D.eval(record.n) % record.delta_min == 0
    assert scan_family(quadratic_gpf(1, 0, 1), 0, 5, SETTINGS).records == quadratic.records


def test_family_scan_resume_is_byte_identical(tmp_path):
    config = family_config(quadratic_gpf(1, 0, 1), 1, 5000, SETTINGS._replace(chunk_size=250))
    full_path = str(tmp_path / "full.csv")
    part_path = str(tmp_path / "part.csv")
    checkpoint_path = str(tmp_path / "family.ckpt")
    full = run_scan(config, out_path=full_path)

    interrupted = run_scan(
        config, out_path=part_path, checkpoint_path=checkpoint_path, resume=True, max_chunks=9
    )
    assert not interrupted.completed
    assert interrupted.rows == 2250
    # Torn row left by a killed run.
    with open(part_path, "a", encoding="utf-8") as handle:
        handle.write("2251,5067002,")

    resumed = run_scan(config, out_path=part_path, checkpoint_path=checkpoint_path, resume=True)
    assert resumed.completed
    assert resumed.rows == 5000
    assert resumed.summary == full.summary
    assert _read_bytes(part_path) == _read_bytes(full_path)


def test_x2_plus_1_maxima_are_stable_across_reruns_and_chunk_sizes():
    family = quadratic_gpf(1, 0, 1)
    runs = [
        scan_family(family, 1, 10**4, SETTINGS._replace(chunk_size=chunk_size))
        for chunk_size in (1000, 1000, 97)
    ]
    kappa = runs[0].summary["maxima"]["kappa_emp"]
    assert math.isfinite(kappa["value"])
    for run in runs[1:]:
        assert run.summary["maxima"]["kappa_emp"] == kappa
        assert run.summary == runs[0].summary

    conditions = [
        check_condition(X2_PLUS_1, 1, 10**4, SETTINGS._replace(chunk_size=chunk_size))
        for chunk_size in (1000, 1000, 97)
    ]
    mu = conditions[0].summary["maxima"]["mu_emp"]
    assert math.isfinite(mu["value"])
    assert mu["value"] > 0
    for run in conditions[1:]:
        assert run.summary["maxima"]["mu_emp"] == mu
        assert run.summary == conditions[0].summary
