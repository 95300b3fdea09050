"""Evaluators for the closed-form bound shapes the scans compare against.

All logarithms are natural. Arguments may be floats or exact integers of any size; integers go
through ``log_abs`` so that huge conductors and discriminants never overflow.
"""
import math
from typing import Callable, Dict, Iterable, List, Mapping, NamedTuple, Sequence, Union

from dagster_szpiro.arith import log_abs
from dagster_szpiro.errors import DomainError

Real = Union[int, float]

# Lower clamp inside the outer logarithm of the empirical constants.
LOG_GUARD = 1 + 1e-9

_MAX_EXPONENT = 709.0


class BoundParams(
    NamedTuple("_BoundParams", [("kappa", float), ("epsilon", float), ("mu", float)])
):
    """Caller supplied constants of the bound shapes. None of them has a known effective value.

    Attributes:
        kappa (float): Multiplicative or exponential constant of a shape.
        epsilon (float): Exponent slack of the power-of-conductor shape.
        mu (float): Exponent in the valuation-product condition.
    """


def bound_params(kappa: float = 1.0, epsilon: float = 0.5, mu: float = 1.0) -> BoundParams:
    for name, value in (("kappa", kappa), ("epsilon", epsilon), ("mu", mu)):
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")
    return BoundParams(float(kappa), float(epsilon), float(mu))


def _log(t: Real) -> float:
    if isinstance(t, int):
        return log_abs(t)
    return math.log(t)


def _exp(x: float) -> float:
    return math.inf if x > _MAX_EXPONENT else math.exp(x)


def _at_least_two(name: str, value: Real) -> None:
    if value < 2:
        raise DomainError(f"{name} must be at least 2, got {value}")


def _positive(name: str, value: Real) -> None:
    if not value > 0:
        raise DomainError(f"{name} must be positive, got {value}")


def iter_log(k: int, t: Real) -> float:
    """The ``k``-th iterated logarithm where defined and at least 1, otherwise 1."""
    if k < 1:
        raise DomainError(f"Iteration count must be positive, got {k}")
    value: Real = t
    for _ in range(k):
        if value <= 0:
            return 1.0
        value = _log(value)
    return value if value >= 1 else 1.0


def szpiro_shape(N: Real, kappa: float) -> float:
    """``exp(kappa * sqrt(log N * log*_2 N))``."""
    _at_least_two("N", N)
    _positive("kappa", kappa)
    return _exp(kappa * math.sqrt(_log(N) * iter_log(2, N)))


def gpf_shape(n: Real, kappa: float) -> float:
    """``kappa * (log*_2 n)^2 / log*_3 n``."""
    _at_least_two("n", n)
    _positive("kappa", kappa)
    return kappa * iter_log(2, n) ** 2 / iter_log(3, n)


def radical_shape(n: Real, kappa: float) -> float:
    return _exp(gpf_shape(n, kappa))


def stewart_yu_shape(n: Real) -> float:
    """``log*_2 n * log*_3 n / log*_4 n``, the earlier lower-bound shape for comparison."""
    _at_least_two("n", n)
    return iter_log(2, n) * iter_log(3, n) / iter_log(4, n)


def mahler_shape(n: Real) -> float:
    """``log*_2 n``, the classical lower-bound shape."""
    _at_least_two("n", n)
    return iter_log(2, n)


def B_of_R(R: Real) -> float:
    """``exp(sqrt(log* R * log*_2 R))``."""
    _at_least_two("R", R)
    return _exp(math.sqrt(iter_log(1, R) * iter_log(2, R)))


def criterion_rhs(R: Real, kappa: float) -> float:
    """``exp(kappa * sqrt(log* R * log*_2 R))``."""
    _at_least_two("R", R)
    _positive("kappa", kappa)
    return _exp(kappa * math.sqrt(iter_log(1, R) * iter_log(2, R)))


def n_log_n_rhs(N: Real, kappa: float) -> float:
    """``kappa * N * log N``."""
    _at_least_two("N", N)
    _positive("kappa", kappa)
    return kappa * _exp(_log(N) + math.log(_log(N)))


def shimura_rhs(N: Real, kappa: float, epsilon: float) -> float:
    """``kappa * N^(11/2 + epsilon)``."""
    _at_least_two("N", N)
    _positive("kappa", kappa)
    _positive("epsilon", epsilon)
    return kappa * _exp((5.5 + epsilon) * _log(N))


def lfl_rhs(kappa: float, m: int, norm_v: Real, h_xi: float, h_gens: Sequence[float]) -> float:
    """Right side of the linear-forms-in-logarithms bound.

    ``kappa^m * (norm_v / log norm_v) * log max(e, norm_v * h_xi) * prod(h_gens)``.
    """
    _positive("kappa", kappa)
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    if len(h_gens) != m:
        raise DomainError(f"Expected {m} generator heights, got {len(h_gens)}")
    _at_least_two("norm_v", norm_v)
    _positive("h_xi", h_xi)
    for h in h_gens:
        _positive("generator height", h)
    norm = float(norm_v)
    return (
        kappa**m
        * (norm / math.log(norm))
        * math.log(max(math.e, norm * h_xi))
        * math.prod(h_gens)
    )


def empirical_kappa(log_value: float, N: Real) -> float:
    """Smallest ``kappa`` for which ``log_value <= exp(kappa * sqrt(log N * log*_2 N))``.

    ``log_value`` is clamped below by ``LOG_GUARD`` so tiny values stay defined.
    """
    if N < 3:
        raise DomainError(f"Empirical constants need N at least 3, got {N}")
    return math.log(max(log_value, LOG_GUARD)) / math.sqrt(_log(N) * iter_log(2, N))


def grid_table(
    evaluators: Mapping[str, Callable[[Real], float]], points: Iterable[Real]
) -> List[Dict[str, float]]:
    """One row per point with every evaluator applied, for plot-ready output."""
    rows = []
    for point in points:
        row = {"x": float(point)}
        for name, evaluate in evaluators.items():
            row[name] = evaluate(point)
        rows.append(row)
    return rows
