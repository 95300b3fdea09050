import hashlib
import json
from fractions import Fraction
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Tuple

from dagster_szpiro.arith import DEFAULT_MAX_RHO_ITERATIONS, DEFAULT_RHO_SEED, DEFAULT_TRIAL_BOUND

DEFAULT_CHUNK_SIZE = 1024
DEFAULT_MINIMA_COUNT = 10
DEFAULT_HISTOGRAM_BIN_WIDTH = 0.05

CSV_COLUMNS = (
    "n",
    "f_n",
    "gpf",
    "rad",
    "val_product",
    "delta_min",
    "conductor",
    "szpiro_ratio",
    "kappa_emp",
    "flags",
)
CSV_HEADER = ",".join(CSV_COLUMNS)

FLAGS = ("ok", "zero_value", "bad_fiber", "factor_cap")

SCAN_KINDS = ("gpf", "family", "condition")


class ScanSettings(
    NamedTuple(
        "_ScanSettings",
        [
            ("seed", int),
            ("max_rho_iterations", int),
            ("trial_bound", int),
            ("chunk_size", int),
            ("minima_count", int),
            ("bin_width", float),
        ],
    )
):
    """Effort and reporting knobs of a scan.

    Attributes:
        seed (int): Seed of the rho factoring stage.
        max_rho_iterations (int): Rho budget per factorization; exceeding it flags the row.
        trial_bound (int): Trial division bound.
        chunk_size (int): Values of n per chunk, the unit of parallelism and checkpointing.
        minima_count (int): How many smallest-gpf rows the summary keeps.
        bin_width (float): Width of the histogram bins of the valuation-product exponent.
    """

    def __new__(
        cls,
        seed: int = DEFAULT_RHO_SEED,
        max_rho_iterations: int = DEFAULT_MAX_RHO_ITERATIONS,
        trial_bound: int = DEFAULT_TRIAL_BOUND,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
        minima_count: int = DEFAULT_MINIMA_COUNT,
        bin_width: float = DEFAULT_HISTOGRAM_BIN_WIDTH,
    ):
        return super().__new__(
            cls, seed, max_rho_iterations, trial_bound, chunk_size, minima_count, bin_width
        )

    @property
    def factor_options(self) -> Dict[str, int]:
        return {
            "seed": self.seed,
            "max_rho_iterations": self.max_rho_iterations,
            "trial_bound": self.trial_bound,
        }


class ScanConfig(
    NamedTuple(
        "_ScanConfig",
        [
            ("kind", str),
            ("poly", Tuple[int, ...]),
            ("family", Tuple[Any, ...]),
            ("lo", int),
            ("hi", int),
            ("settings", ScanSettings),
        ],
    )
):
    """Everything that determines the rows of a scan.

    Attributes:
        kind (str): ``gpf``, ``family`` or ``condition``.
        poly (Tuple[int, ...]): Ascending coefficients of the scanned polynomial (gpf and
            condition scans).
        family (Tuple[Any, ...]): Family key, ``("surface", A, B)`` with coefficient tuples or
            ``("quadratic", a, b, c)`` / ``("cubic", a, b, c)`` (family scans).
        lo (int): First n, inclusive.
        hi (int): Last n, inclusive.
        settings (ScanSettings): Effort and reporting knobs.
    """

    def canonical(self) -> Dict[str, Any]:
        settings = self.settings._asdict()
        del settings["chunk_size"]
        return {
            "kind": self.kind,
            "poly": list(self.poly),
            "family": json.loads(json.dumps(self.family)),
            "lo": self.lo,
            "hi": self.hi,
            "settings": settings,
        }

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form. Chunk size does not change output and is left out."""
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ScanRecord(
    NamedTuple(
        "_ScanRecord",
        [
            ("n", int),
            ("f_n", int),
            ("gpf", Optional[int]),
            ("rad", Optional[int]),
            ("val_product", Optional[int]),
            ("delta_min", Optional[int]),
            ("conductor", Optional[int]),
            ("szpiro_ratio", Optional[float]),
            ("kappa_emp", Optional[float]),
            ("flag", str),
            ("bound_columns", Mapping[str, float]),
            ("quasi_ratio", Optional[Fraction]),
            ("rad_divides", Optional[bool]),
        ],
    )
):
    """One row of a scan.

    Absent quantities are ``None``: the arithmetic columns when the value is zero or could not be
    factored, the curve columns outside family scans.

    Attributes:
        n (int): The scanned integer.
        f_n (int): The value that was factored; ``D(n)`` for bare surfaces.
        gpf (Optional[int]): Greatest prime factor of ``f_n``.
        rad (Optional[int]): Radical of ``f_n``.
        val_product (Optional[int]): Product of the exponents of ``f_n``.
        delta_min (Optional[int]): Minimal discriminant of the fibre.
        conductor (Optional[int]): Conductor of the fibre.
        szpiro_ratio (Optional[float]): ``log|delta_min| / log N``.
        kappa_emp (Optional[float]): Empirical exponential constant, for ``N >= 3``.
        flag (str): One of ``ok``, ``zero_value``, ``bad_fiber``, ``factor_cap``.
        bound_columns (Mapping[str, float]): Named shape evaluations for this row.
        quasi_ratio (Optional[Fraction]): ``D(n) / delta_min`` in family scans.
        rad_divides (Optional[bool]): Whether ``rad(D(n))`` divides ``rho * N``.
    """

    def __new__(
        cls,
        n: int,
        f_n: int,
        gpf: Optional[int] = None,
        rad: Optional[int] = None,
        val_product: Optional[int] = None,
        delta_min: Optional[int] = None,
        conductor: Optional[int] = None,
        szpiro_ratio: Optional[float] = None,
        kappa_emp: Optional[float] = None,
        flag: str = "ok",
        bound_columns: Optional[Mapping[str, float]] = None,
        quasi_ratio: Optional[Fraction] = None,
        rad_divides: Optional[bool] = None,
    ):
        return super().__new__(
            cls,
            n,
            f_n,
            gpf,
            rad,
            val_product,
            delta_min,
            conductor,
            szpiro_ratio,
            kappa_emp,
            flag,
            dict(bound_columns or {}),
            quasi_ratio,
            rad_divides,
        )

    def csv_row(self) -> List[str]:
        return [_cell(getattr(self, column)) for column in CSV_COLUMNS[:-1]] + [self.flag]

    def to_json(self) -> Dict[str, Any]:
        data = {column: getattr(self, column) for column in CSV_COLUMNS[:-1]}
        data["flags"] = self.flag
        data["bound_columns"] = dict(sorted(self.bound_columns.items()))
        data["quasi_ratio"] = None if self.quasi_ratio is None else str(self.quasi_ratio)
        data["rad_divides"] = self.rad_divides
        return data

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "ScanRecord":
        quasi_ratio = data.get("quasi_ratio")
        return cls(
            **{column: data[column] for column in CSV_COLUMNS[:-1]},
            flag=data["flags"],
            bound_columns=data.get("bound_columns"),
            quasi_ratio=None if quasi_ratio is None else Fraction(quasi_ratio),
            rad_divides=data.get("rad_divides"),
        )


class Checkpoint(
    NamedTuple(
        "_Checkpoint",
        [
            ("config_digest", str),
            ("completed_upto", int),
            ("records_path", Optional[str]),
            ("records_offset", int),
            ("running_minima", List[Tuple[int, int]]),
            ("summary", Mapping[str, Any]),
        ],
    )
):
    """Durable scan progress, written after each chunk's rows are on disk.

    Attributes:
        config_digest (str): ``ScanConfig.digest()`` of the scan being checkpointed.
        completed_upto (int): Last n whose row is durably written.
        records_path (Optional[str]): The record file.
        records_offset (int): Byte length of the record file at the checkpoint.
        running_minima (List[Tuple[int, int]]): ``(n, gpf)`` pairs of the smallest gpf seen.
        summary (Mapping[str, Any]): Serialized running summary.
    """

    def to_json(self) -> Dict[str, Any]:
        data = self._asdict()
        data["running_minima"] = [list(pair) for pair in self.running_minima]
        data["summary"] = dict(self.summary)
        return data

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Checkpoint":
        return cls(
            data["config_digest"],
            data["completed_upto"],
            data["records_path"],
            data["records_offset"],
            [tuple(pair) for pair in data["running_minima"]],
            data["summary"],
        )


class ScanOutput(
    NamedTuple(
        "_ScanOutput",
        [
            ("config", ScanConfig),
            ("summary", Mapping[str, Any]),
            ("records_path", Optional[str]),
            ("records", Optional[Tuple[ScanRecord, ...]]),
            ("rows", int),
            ("completed", bool),
        ],
    )
):
    """Result of a scan run.

    Attributes:
        config (ScanConfig): The scan that ran.
        summary (Mapping[str, Any]): Maxima, minima, flag counts and histograms over all rows.
        records_path (Optional[str]): Where the records were written, if anywhere.
        records (Optional[Tuple[ScanRecord, ...]]): The rows, kept in memory when no path was
            given.
        rows (int): Number of rows, including rows from before a resume.
        completed (bool): False when the run stopped early at a chunk limit.
    """
