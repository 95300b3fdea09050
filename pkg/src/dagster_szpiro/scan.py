import json
import logging
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from functools import lru_cache, partial
from itertools import repeat
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import pandas as pd
from dagster import get_dagster_logger

from dagster_szpiro.arith import Factorization, factorize, greatest_prime_factor, log_abs
from dagster_szpiro.bounds import (
    LOG_GUARD,
    empirical_kappa,
    gpf_shape,
    iter_log,
    mahler_shape,
    stewart_yu_shape,
)
from dagster_szpiro.ellcurve import naive_height
from dagster_szpiro.errors import (
    DomainError,
    FactoringEffortExceeded,
    InternalError,
    ResumeMismatchError,
    UsageError,
)
from dagster_szpiro.families import (
    CubicGPF,
    Family,
    QuadraticGPF,
    SurfaceSpec,
    cubic_gpf,
    gpf_polynomial,
    make_surface,
    quadratic_gpf,
    quasiminimality_report,
    surface_of,
)
from dagster_szpiro.polyz import IntPoly, as_poly, distinct_root_count
from dagster_szpiro.types import (
    CSV_COLUMNS,
    CSV_HEADER,
    FLAGS,
    Checkpoint,
    ScanConfig,
    ScanOutput,
    ScanRecord,
    ScanSettings,
)
from dagster_szpiro.utils import write_json_atomic

LUCA_RANGE = (24208141, 24208150)
LUCA_TABLE = (
    (24208141, 119529857),
    (24208142, 121140377),
    (24208143, 67749617053),
    (24208144, 89),
    (24208145, 5218192121),
    (24208146, 586034332757317),
    (24208147, 58603438117361),
    (24208148, 117206885917981),
    (24208149, 2292977009),
    (24208150, 127793609),
)

FORMATS = ("csv", "json")

# Fraction of each chunk's factored rows recomputed as a consistency check.
VERIFY_FRACTION = 0.01

_TRACKED_MAXIMA = ("kappa_emp", "szpiro_ratio", "height_ratio", "mu_emp", "kappa_crit")

_JSON_HEADER = b"["
_JSON_FOOTER = b"\n]\n"


def family_key(family: Family) -> Tuple[Any, ...]:
    if isinstance(family, QuadraticGPF):
        return ("quadratic", family.a, family.b, family.c)
    if isinstance(family, CubicGPF):
        return ("cubic", family.a, family.b, family.c)
    if isinstance(family, SurfaceSpec):
        return ("surface", family.A.coeffs, family.B.coeffs)
    raise UsageError(f"Unknown family {family!r}")


@lru_cache(maxsize=32)
def family_from_key(key: Tuple[Any, ...]) -> Family:
    kind = key[0]
    if kind == "quadratic":
        return quadratic_gpf(*key[1:])
    if kind == "cubic":
        return cubic_gpf(*key[1:])
    if kind == "surface":
        return make_surface(IntPoly(tuple(key[1])), IntPoly(tuple(key[2])))
    raise UsageError(f"Unknown family kind {kind!r}")


def _check_range(lo: int, hi: int) -> None:
    if lo > hi:
        raise UsageError(f"Empty range: from {lo} is greater than to {hi}")


def gpf_config(
    f: IntPoly, lo: int, hi: int, settings: ScanSettings = ScanSettings()
) -> ScanConfig:
    f = as_poly(f)
    _check_range(lo, hi)
    if f.is_constant:
        raise UsageError(f"Cannot scan the constant polynomial {f}")
    return ScanConfig("gpf", f.coeffs, (), lo, hi, settings)


def family_config(
    family: Family, lo: int, hi: int, settings: ScanSettings = ScanSettings()
) -> ScanConfig:
    _check_range(lo, hi)
    return ScanConfig("family", (), family_key(family), lo, hi, settings)


def condition_config(
    F: IntPoly, lo: int, hi: int, settings: ScanSettings = ScanSettings()
) -> ScanConfig:
    F = as_poly(F)
    _check_range(lo, hi)
    if F.is_zero or distinct_root_count(F) < 2:
        raise DomainError(
            f"F = {F} must have at least two distinct complex roots for the valuation-product "
            "condition to apply"
        )
    return ScanConfig("condition", F.coeffs, (), lo, hi, settings)


def _factor_or_none(value: int, options: Mapping[str, int]) -> Optional[Factorization]:
    try:
        return factorize(value, **options)
    except FactoringEffortExceeded:
        return None


def gpf_record(f: IntPoly, n: int, options: Mapping[str, int]) -> ScanRecord:
    """Row of a gpf scan: the arithmetic of ``f(n)`` and the lower-bound shapes at ``n``."""
    value = f.eval(n)
    if value == 0:
        return ScanRecord(n, 0, flag="zero_value")
    factorization = _factor_or_none(value, options)
    if factorization is None:
        return ScanRecord(n, value, flag="factor_cap")
    bound_columns = {"log_gpf": log_abs(factorization.greatest_prime_factor)}
    if abs(n) >= 2:
        bound_columns["gpf_shape"] = gpf_shape(abs(n), 1.0)
        bound_columns["stewart_yu_shape"] = stewart_yu_shape(abs(n))
        bound_columns["mahler_shape"] = mahler_shape(abs(n))
    return ScanRecord(
        n,
        value,
        factorization.greatest_prime_factor,
        factorization.radical,
        factorization.valuation_product,
        bound_columns=bound_columns,
    )


def _surface(family: Family) -> SurfaceSpec:
    return _surface_of_key(family_key(family))


# Quadratic and cubic families with equal coefficients compare equal as tuples.
@lru_cache(maxsize=32)
def _surface_of_key(key: Tuple[Any, ...]) -> SurfaceSpec:
    return surface_of(family_from_key(key))


def _quotient(whole: Factorization, part: Factorization, value: int) -> Factorization:
    counts = dict(whole.factors)
    for p, e in part.factors:
        counts[p] -= e
    factors = tuple((p, e) for p, e in sorted(counts.items()) if e > 0)
    return Factorization(value, -1 if value < 0 else 1, factors, whole.probable)


def family_record(family: Family, n: int, options: Mapping[str, int]) -> ScanRecord:
    """Row of a family scan: the fibre's minimal discriminant, conductor and empirical ratios."""
    surface = _surface(family)
    poly = gpf_polynomial(family)
    d_n = surface.D.eval(n)
    f_n = d_n if poly is None else poly.eval(n)
    if d_n == 0:
        return ScanRecord(n, f_n, flag="bad_fiber")
    try:
        report = quasiminimality_report(surface, n, **options)
        cofactor = None if poly is None else factorize(d_n // f_n, **options)
    except FactoringEffortExceeded:
        return ScanRecord(n, f_n, flag="factor_cap")
    # Away from 2 and 3 every prime of D(n) is a prime of rho or of N.
    if (6 * surface.rho * report.invariants.conductor) % report.factorization.radical:
        raise InternalError(
            f"rad(D({n})) does not divide 6*rho*N = 6*{surface.rho}*{report.invariants.conductor}"
        )

    if cofactor is None:
        factorization = report.factorization
    else:
        factorization = _quotient(report.factorization, cofactor, f_n)

    g = report.invariants
    log_n = log_abs(g.conductor)
    height = naive_height(surface.A.eval(n), surface.B.eval(n))
    bound_columns = {
        "log_abs_delta_min": log_abs(g.delta_min),
        "log_conductor": log_n,
        "naive_height": height,
        "height_ratio": height / log_n,
        "szpiro_exponent": math.sqrt(log_n * iter_log(2, g.conductor)),
    }
    kappa = empirical_kappa(log_abs(g.delta_min), g.conductor) if g.conductor >= 3 else None
    return ScanRecord(
        n,
        f_n,
        factorization.greatest_prime_factor,
        factorization.radical,
        factorization.valuation_product,
        g.delta_min,
        g.conductor,
        g.szpiro_ratio,
        kappa,
        "ok",
        bound_columns,
        report.ratio,
        report.rad_divides,
    )


def condition_record(F: IntPoly, n: int, options: Mapping[str, int]) -> ScanRecord:
    """Row of a condition check: the valuation-product exponent of ``F(n)``."""
    value = F.eval(n)
    if value == 0:
        return ScanRecord(n, 0, flag="zero_value")
    factorization = _factor_or_none(value, options)
    if factorization is None:
        return ScanRecord(n, value, flag="factor_cap")
    product, rad = factorization.valuation_product, factorization.radical
    bound_columns = {}
    if abs(value) >= 2:
        bound_columns["mu_emp"] = 0.0 if product == 1 else log_abs(product) / log_abs(rad)
        if n != 0:
            bound_columns["kappa_crit"] = math.log(max(log_abs(n), LOG_GUARD)) / math.sqrt(
                iter_log(1, rad) * iter_log(2, rad)
            )
    return ScanRecord(
        n,
        value,
        factorization.greatest_prime_factor,
        rad,
        product,
        bound_columns=bound_columns,
    )


@lru_cache(maxsize=32)
def _row_builder(config: ScanConfig) -> Callable[[int], ScanRecord]:
    options = config.settings.factor_options
    if config.kind == "gpf":
        return partial(gpf_record, IntPoly(config.poly), options=options)
    if config.kind == "condition":
        return partial(condition_record, IntPoly(config.poly), options=options)
    if config.kind == "family":
        return partial(family_record, family_from_key(config.family), options=options)
    raise UsageError(f"Unknown scan kind {config.kind!r}")


def compute_chunk(config: ScanConfig, start: int, stop: int) -> List[ScanRecord]:
    """Rows for ``n`` in ``[start, stop]``. Pure, so chunks can run in any process."""
    build = _row_builder(config)
    return [build(n) for n in range(start, stop + 1)]


def verify_sample(
    records: Sequence[ScanRecord], rng: random.Random, options: Mapping[str, int]
) -> int:
    """Recompute the arithmetic columns of a random sample of rows.

    Returns:
        int: Number of rows checked.

    Raises:
        InternalError: If a row disagrees with a fresh factorization.
    """
    factored = [record for record in records if record.gpf is not None]
    if not factored:
        return 0
    sample = rng.sample(factored, max(1, math.ceil(len(factored) * VERIFY_FRACTION)))
    for record in sample:
        fresh = factorize(record.f_n, **options)
        if (record.gpf, record.rad, record.val_product) != (
            fresh.greatest_prime_factor,
            fresh.radical,
            fresh.valuation_product,
        ):
            raise InternalError(f"Row n={record.n} disagrees with a fresh factorization")
        if record.rad % record.gpf or record.f_n % record.rad:
            raise InternalError(f"Row n={record.n} breaks gpf | rad | f_n")
    return len(sample)


class ScanSummary:
    """Running aggregate over the rows of a scan, independent of chunking."""

    def __init__(self, minima_count: int, bin_width: float):
        self.minima_count = minima_count
        self.bin_width = bin_width
        self.rows = 0
        self.flags = {flag: 0 for flag in FLAGS}
        self.minima: List[Tuple[int, int]] = []
        self.maxima: Dict[str, Dict[str, Any]] = {}
        self.quasi_ratios = set()
        self.histogram: Dict[int, int] = {}

    def _track_max(self, name: str, value: Optional[float], n: int) -> None:
        if value is None:
            return
        current = self.maxima.get(name)
        if current is None or value > current["value"]:
            self.maxima[name] = {"value": value, "n": n}

    def update(self, record: ScanRecord) -> None:
        self.rows += 1
        self.flags[record.flag] += 1
        if record.gpf is not None:
            self.minima.append((record.gpf, record.n))
            self.minima.sort()
            del self.minima[self.minima_count :]
            self._track_max("gpf", record.gpf, record.n)
        self._track_max("kappa_emp", record.kappa_emp, record.n)
        self._track_max("szpiro_ratio", record.szpiro_ratio, record.n)
        for name in _TRACKED_MAXIMA[2:]:
            self._track_max(name, record.bound_columns.get(name), record.n)
        if record.quasi_ratio is not None:
            self.quasi_ratios.add(record.quasi_ratio)
        mu = record.bound_columns.get("mu_emp")
        if mu is not None:
            index = math.floor(mu / self.bin_width)
            self.histogram[index] = self.histogram.get(index, 0) + 1

    @property
    def running_minima(self) -> List[Tuple[int, int]]:
        """``(n, gpf)`` pairs of the smallest greatest prime factors, smallest first."""
        return [(n, gpf) for gpf, n in self.minima]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": self.rows,
            "flags": dict(self.flags),
            "running_minima": [[n, gpf] for n, gpf in self.running_minima],
            "maxima": {name: dict(entry) for name, entry in sorted(self.maxima.items())},
            "quasi_ratios": [str(ratio) for ratio in sorted(self.quasi_ratios)],
            "mu_histogram": {
                "bin_width": self.bin_width,
                "bins": [[index, count] for index, count in sorted(self.histogram.items())],
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], minima_count: int, bin_width: float):
        summary = cls(minima_count, bin_width)
        summary.rows = data["rows"]
        summary.flags.update(data["flags"])
        summary.minima = [(gpf, n) for n, gpf in data["running_minima"]]
        summary.maxima = {name: dict(entry) for name, entry in data["maxima"].items()}
        summary.quasi_ratios = {Fraction(ratio) for ratio in data["quasi_ratios"]}
        summary.histogram = {index: count for index, count in data["mu_histogram"]["bins"]}
        return summary


def render_csv(records: Sequence[ScanRecord], header: bool = True) -> str:
    frame = pd.DataFrame([record.csv_row() for record in records], columns=list(CSV_COLUMNS))
    if frame.empty:
        return CSV_HEADER + "\n" if header else ""
    return frame.to_csv(index=False, header=header, lineterminator="\n")


def render_json(records: Sequence[ScanRecord]) -> str:
    return json.dumps([record.to_json() for record in records], indent=1) + "\n"


class RecordWriter:
    """Single writer of a record file; every write is flushed and fsynced before returning."""

    def __init__(self, path: str, fmt: str):
        if fmt not in FORMATS:
            raise UsageError(f"Unknown format {fmt!r}, expected one of {FORMATS}")
        self.path = path
        self.fmt = fmt
        self._handle = None
        self._first = True

    @property
    def _header(self) -> bytes:
        return (CSV_HEADER + "\n").encode("utf-8") if self.fmt == "csv" else _JSON_HEADER

    def open(self, offset: Optional[int] = None) -> int:
        """Open the file fresh, or truncate it to ``offset`` to continue after a checkpoint."""
        if offset is None:
            self._handle = open(self.path, "wb")
            self._handle.write(self._header)
            offset = len(self._header)
        else:
            if not os.path.exists(self.path):
                raise UsageError(f"Cannot resume: record file {self.path} is missing")
            self._handle = open(self.path, "r+b")
            self._handle.truncate(offset)
            self._handle.seek(offset)
        self._first = offset == len(self._header)
        return self._sync()

    def _sync(self) -> int:
        self._handle.flush()
        os.fsync(self._handle.fileno())
        return self._handle.tell()

    def write(self, records: Sequence[ScanRecord]) -> int:
        if records:
            if self.fmt == "csv":
                data = render_csv(records, header=False)
            else:
                parts = []
                for record in records:
                    parts.append(("\n" if self._first else ",\n") + json.dumps(record.to_json()))
                    self._first = False
                data = "".join(parts)
            self._handle.write(data.encode("utf-8"))
        return self._sync()

    def finish(self) -> None:
        if self.fmt == "json":
            self._handle.write(_JSON_FOOTER)
        self._sync()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, encoding="utf-8") as handle:
        return Checkpoint.from_json(json.load(handle))


def _chunks(start: int, hi: int, size: int, limit: Optional[int]) -> List[Tuple[int, int]]:
    if size < 1:
        raise UsageError(f"Chunk size must be positive, got {size}")
    bounds = [(s, min(s + size - 1, hi)) for s in range(start, hi + 1, size)]
    return bounds if limit is None else bounds[:limit]


def _map_chunks(
    config: ScanConfig, chunks: Sequence[Tuple[int, int]], max_workers: int
) -> Iterator[List[ScanRecord]]:
    starts = [start for start, _ in chunks]
    stops = [stop for _, stop in chunks]
    if max_workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            yield from executor.map(compute_chunk, repeat(config), starts, stops)
    else:
        yield from map(compute_chunk, repeat(config), starts, stops)


def run_scan(
    config: ScanConfig,
    out_path: Optional[str] = None,
    fmt: str = "csv",
    checkpoint_path: Optional[str] = None,
    resume: bool = False,
    max_workers: int = 1,
    max_chunks: Optional[int] = None,
    log: logging.Logger = get_dagster_logger(),
) -> ScanOutput:
    """Run a scan chunk by chunk, writing rows in order of ``n``.

    Args:
        config (ScanConfig): The scan.
        out_path (Optional[str]): Record file. Without one the rows are returned in memory.
        fmt (str): ``csv`` or ``json``.
        checkpoint_path (Optional[str]): Where to write a checkpoint after every chunk.
        resume (bool): Continue from ``checkpoint_path`` if it exists. The record file is
            truncated to the checkpointed length and the scan picks up after the last durable row.
        max_workers (int): Worker processes computing chunks; 1 computes in this process.
        max_chunks (Optional[int]): Stop after this many chunks, leaving a resumable checkpoint.
        log (logging.Logger): Progress logger.

    Returns:
        ScanOutput: The summary and, without ``out_path``, the rows.

    Raises:
        UsageError: For an unknown format or a checkpoint without a record file.
        ResumeMismatchError: If the checkpoint belongs to a different scan.
        InternalError: If a row breaks a proven divisibility or consistency check.
    """
    if fmt not in FORMATS:
        raise UsageError(f"Unknown format {fmt!r}, expected one of {FORMATS}")
    settings = config.settings
    digest = config.digest()
    summary = ScanSummary(settings.minima_count, settings.bin_width)
    start, offset = config.lo, None

    if resume and checkpoint_path and os.path.exists(checkpoint_path):
        checkpoint = load_checkpoint(checkpoint_path)
        if checkpoint.config_digest != digest:
            raise ResumeMismatchError(
                f"Checkpoint {checkpoint_path} belongs to scan {checkpoint.config_digest[:12]}, "
                f"not {digest[:12]}"
            )
        if out_path and os.path.abspath(out_path) != os.path.abspath(checkpoint.records_path):
            raise UsageError(
                f"Checkpoint records go to {checkpoint.records_path}, not {out_path}"
            )
        out_path = checkpoint.records_path
        summary = ScanSummary.from_dict(
            checkpoint.summary, settings.minima_count, settings.bin_width
        )
        start, offset = checkpoint.completed_upto + 1, checkpoint.records_offset
        log.info(f"Resuming scan {digest[:12]} at n={start} from {checkpoint_path}")
    elif resume:
        log.info(f"No checkpoint at {checkpoint_path}; starting scan {digest[:12]} from n={start}")

    if checkpoint_path and not out_path:
        raise UsageError("Checkpointing needs a record file")

    chunks = _chunks(start, config.hi, settings.chunk_size, max_chunks)
    writer = RecordWriter(out_path, fmt) if out_path else None
    kept: List[ScanRecord] = []
    last = start - 1
    try:
        if writer is not None:
            offset = writer.open(offset)
        for (chunk_start, chunk_stop), records in zip(
            chunks, _map_chunks(config, chunks, max_workers)
        ):
            rng = random.Random(settings.seed ^ chunk_start)
            verify_sample(records, rng, settings.factor_options)
            for record in records:
                summary.update(record)
                if record.flag == "factor_cap":
                    log.warning(f"Factoring budget exceeded at n={record.n}; row flagged")
            if writer is None:
                kept.extend(records)
            else:
                offset = writer.write(records)
            last = chunk_stop
            if checkpoint_path:
                write_json_atomic(
                    checkpoint_path,
                    Checkpoint(
                        digest, last, out_path, offset, summary.running_minima, summary.to_dict()
                    ).to_json(),
                )
            log.info(f"Scanned n in [{chunk_start}, {chunk_stop}], {summary.rows} rows so far")
        completed = last >= config.hi
        if writer is not None and completed:
            writer.finish()
    finally:
        if writer is not None:
            writer.close()

    return ScanOutput(
        config,
        summary.to_dict(),
        out_path,
        None if writer is not None else tuple(kept),
        summary.rows,
        completed,
    )


def scan_gpf(
    f: IntPoly, lo: int, hi: int, settings: ScanSettings = ScanSettings(), **run_options
) -> ScanOutput:
    """Greatest prime factors of ``f(n)`` for ``lo <= n <= hi``."""
    return run_scan(gpf_config(f, lo, hi, settings), **run_options)


def scan_family(
    family: Family, lo: int, hi: int, settings: ScanSettings = ScanSettings(), **run_options
) -> ScanOutput:
    """Minimal discriminants, conductors and empirical constants along a family's fibres."""
    return run_scan(family_config(family, lo, hi, settings), **run_options)


def check_condition(
    F: IntPoly, lo: int, hi: int, settings: ScanSettings = ScanSettings(), **run_options
) -> ScanOutput:
    """Empirical exponent ``log prod v_p(F(n)) / log rad(F(n))`` over a range."""
    return run_scan(condition_config(F, lo, hi, settings), **run_options)


def luca_table(**factor_options) -> List[Tuple[int, int]]:
    """``(n, P(n^2 + 1))`` recomputed for ``n`` in ``LUCA_RANGE``."""
    lo, hi = LUCA_RANGE
    return [(n, greatest_prime_factor(n * n + 1, **factor_options)) for n in range(lo, hi + 1)]
