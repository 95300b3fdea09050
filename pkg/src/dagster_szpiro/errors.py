class SzpiroError(Exception):
    """Base class for errors raised by dagster-szpiro."""


class DomainError(SzpiroError, ValueError):
    """An input violates a mathematical hypothesis (zero value, non-prime, singular curve, ...)."""


class BadFiberError(DomainError):
    """The fibre at ``n`` is singular: the discriminant polynomial vanishes there.

    Attributes:
        n (int): The parameter value of the fibre.
        witness (int): The value ``D(n)``, always zero.
    """

    def __init__(self, n: int, witness: int = 0):
        super().__init__(f"Fibre at n={n} is not an elliptic curve: D({n}) = {witness}")
        self.n = n
        self.witness = witness


class UsageError(SzpiroError, ValueError):
    """Malformed user input: empty ranges, unparsable polynomials, constant scan polynomials."""


class ResumeMismatchError(UsageError):
    """A checkpoint was written for a different scan configuration."""


class FactoringEffortExceeded(SzpiroError, RuntimeError):
    """The rho iteration budget ran out before the cofactor was split.

    Attributes:
        cofactor (int): The composite part that could not be factored.
    """

    def __init__(self, cofactor: int, budget: int):
        super().__init__(
            f"Factoring effort cap of {budget} rho iterations exceeded on cofactor {cofactor}"
        )
        self.cofactor = cofactor
        self.budget = budget


class InternalError(SzpiroError, RuntimeError):
    """A proven invariant failed to hold. Always a bug."""
