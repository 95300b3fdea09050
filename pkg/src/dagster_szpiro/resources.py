import logging
from typing import Callable, List, Mapping, Optional, Tuple, TypeVar

from dagster import Failure, Field, get_dagster_logger, resource

from dagster_szpiro.arith import (
    DEFAULT_MAX_RHO_ITERATIONS,
    DEFAULT_RHO_SEED,
    DEFAULT_TRIAL_BOUND,
    Factorization,
    factorize,
)
from dagster_szpiro.ellcurve import GlobalInvariants, WeierstrassModel, conductor
from dagster_szpiro.errors import SzpiroError
from dagster_szpiro.families import IdentityReport, family_from_config, verify_identities
from dagster_szpiro.parsing import parse_poly
from dagster_szpiro.scan import (
    condition_config,
    family_config,
    gpf_config,
    luca_table,
    run_scan,
)
from dagster_szpiro.types import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_HISTOGRAM_BIN_WIDTH,
    DEFAULT_MINIMA_COUNT,
    ScanConfig,
    ScanOutput,
    ScanSettings,
)

T = TypeVar("T")


class SzpiroResource:
    """Exposes the factoring, curve and scan toolkit as a Dagster resource.

    Holds the effort and chunking configuration shared by every computation, and turns the
    toolkit's exceptions into ``Failure`` events with the error class in the metadata.

    Args:
        rho_seed (int): Seed of the rho factoring stage.
        max_rho_iterations (int): Rho budget per factorization.
        trial_bound (int): Trial division bound.
        chunk_size (int): Values of n per scan chunk.
        max_workers (int): Worker processes used by scans.
        minima_count (int): Number of smallest-gpf rows kept in scan summaries.
        bin_width (float): Histogram bin width of the valuation-product exponent.
        log (logging.Logger): The logger to use for logging messages.
    """

    def __init__(
        self,
        rho_seed: int = DEFAULT_RHO_SEED,
        max_rho_iterations: int = DEFAULT_MAX_RHO_ITERATIONS,
        trial_bound: int = DEFAULT_TRIAL_BOUND,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
        max_workers: int = 1,
        minima_count: int = DEFAULT_MINIMA_COUNT,
        bin_width: float = DEFAULT_HISTOGRAM_BIN_WIDTH,
        log: logging.Logger = get_dagster_logger(),
    ):
        self._settings = ScanSettings(
            rho_seed, max_rho_iterations, trial_bound, chunk_size, minima_count, bin_width
        )
        self._max_workers = max_workers
        self._log = log

    @property
    def settings(self) -> ScanSettings:
        return self._settings

    def _call(self, what: str, fn: Callable[..., T], *args, **kwargs) -> T:
        try:
            return fn(*args, **kwargs)
        except SzpiroError as e:
            self._log.error(f"{what} failed: {e}")
            raise Failure(
                description=f"{what} failed: {e}",
                metadata={"error": type(e).__name__},
            ) from e

    def factorize(self, m: int) -> Factorization:
        return self._call(f"Factoring {m}", factorize, m, **self._settings.factor_options)

    def curve(self, model: WeierstrassModel) -> GlobalInvariants:
        """Minimal discriminant, conductor and local data of ``model``."""
        return self._call(f"Curve {model}", conductor, model, **self._settings.factor_options)

    def run(
        self,
        config: ScanConfig,
        out_path: Optional[str] = None,
        fmt: str = "csv",
        checkpoint_path: Optional[str] = None,
        resume: bool = False,
    ) -> ScanOutput:
        """Run a prepared scan with this resource's worker count and logger."""
        self._log.info(f"Starting {config.kind} scan over [{config.lo}, {config.hi}]")
        output = self._call(
            f"{config.kind} scan",
            run_scan,
            config,
            out_path=out_path,
            fmt=fmt,
            checkpoint_path=checkpoint_path,
            resume=resume,
            max_workers=self._max_workers,
            log=self._log,
        )
        self._log.info(f"Finished {config.kind} scan with {output.rows} rows")
        return output

    def scan_gpf(self, poly: str, lo: int, hi: int, **run_options) -> ScanOutput:
        """Greatest prime factors of the values of the polynomial text ``poly``."""
        config = self._call(
            "gpf scan setup", lambda: gpf_config(parse_poly(poly), lo, hi, self._settings)
        )
        return self.run(config, **run_options)

    def scan_family(
        self, family: Mapping[str, str], lo: int, hi: int, **run_options
    ) -> ScanOutput:
        """Curve invariants along a family: ``A_poly`` with ``B_poly``, or a triple."""
        config = self._call(
            "family scan setup",
            lambda: family_config(family_from_config(family), lo, hi, self._settings),
        )
        return self.run(config, **run_options)

    def check_condition(self, poly: str, lo: int, hi: int, **run_options) -> ScanOutput:
        config = self._call(
            "condition check setup",
            lambda: condition_config(parse_poly(poly), lo, hi, self._settings),
        )
        return self.run(config, **run_options)

    def luca_table(self) -> List[Tuple[int, int]]:
        return self._call("Luca table", luca_table, **self._settings.factor_options)

    def verify_identities(self, trials: int, seed: int) -> IdentityReport:
        report = self._call("Identity check", verify_identities, trials, seed)
        if not report.ok:
            raise Failure(
                description="Discriminant identity failed",
                metadata={
                    "quadratic_failures": len(report.quadratic_failures),
                    "cubic_failures": len(report.cubic_failures),
                },
            )
        return report


@resource(
    config_schema={
        "rho_seed": Field(
            int,
            default_value=DEFAULT_RHO_SEED,
            description="Seed of the rho factoring stage. Fixed seeds give reproducible scans.",
        ),
        "max_rho_iterations": Field(
            int,
            default_value=DEFAULT_MAX_RHO_ITERATIONS,
            description=(
                "Budget of rho steps per factorization. Rows that exceed it are flagged"
                " factor_cap."
            ),
        ),
        "trial_bound": Field(
            int,
            default_value=DEFAULT_TRIAL_BOUND,
            description="Primes below this bound are removed by trial division.",
        ),
        "chunk_size": Field(
            int,
            default_value=DEFAULT_CHUNK_SIZE,
            description="Values of n per chunk, the unit of parallelism and checkpointing.",
        ),
        "max_workers": Field(
            int,
            default_value=1,
            description="Worker processes computing scan chunks. 1 computes in-process.",
        ),
        "minima_count": Field(
            int,
            default_value=DEFAULT_MINIMA_COUNT,
            description="Number of smallest greatest-prime-factor rows kept in scan summaries.",
        ),
        "bin_width": Field(
            float,
            default_value=DEFAULT_HISTOGRAM_BIN_WIDTH,
            description="Bin width of the valuation-product exponent histogram.",
        ),
    },
    description="This resource factors integers, computes curve invariants and runs scans.",
)
def szpiro_resource(context) -> SzpiroResource:
    """Dagster resource for the number theory toolkit.

    Args:
        context (ResourceDefinition.Context): The Dagster resource context.

    Returns:
        SzpiroResource: The Dagster-managed toolkit wrapper.
    """
    return SzpiroResource(
        rho_seed=context.resource_config["rho_seed"],
        max_rho_iterations=context.resource_config["max_rho_iterations"],
        trial_bound=context.resource_config["trial_bound"],
        chunk_size=context.resource_config["chunk_size"],
        max_workers=context.resource_config["max_workers"],
        minima_count=context.resource_config["minima_count"],
        bin_width=context.resource_config["bin_width"],
        log=context.log,
    )
