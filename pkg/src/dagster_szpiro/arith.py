import math
import random
from functools import lru_cache
from typing import Dict, Iterator, List, NamedTuple, Tuple

import gmpy2
import numpy as np

from dagster_szpiro.errors import DomainError, FactoringEffortExceeded

DEFAULT_RHO_SEED = 1729
DEFAULT_MAX_RHO_ITERATIONS = 5_000_000
DEFAULT_TRIAL_BOUND = 1_000_000

# Strong-pseudoprime tests on the first 13 primes are exact below this bound.
DETERMINISTIC_PRIMALITY_BOUND = 3317044064679887385961981
PROBABLE_PRIME_ROUNDS = 64

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_RHO_BLOCK = 128
_LOG2 = math.log(2)


class Factorization(
    NamedTuple(
        "_Factorization",
        [
            ("value", int),
            ("sign", int),
            ("factors", Tuple[Tuple[int, int], ...]),
            ("probable", bool),
        ],
    )
):
    """Signed prime-power decomposition of a nonzero integer.

    Attributes:
        value (int): The factored integer.
        sign (int): ``-1`` for negative values, ``1`` otherwise.
        factors (Tuple[Tuple[int, int], ...]): ``(prime, exponent)`` pairs, primes strictly
            increasing, exponents at least 1.
        probable (bool): True when some prime lies beyond the deterministic primality range and
            was only certified by repeated random strong-pseudoprime rounds.
    """

    @property
    def primes(self) -> Tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def greatest_prime_factor(self) -> int:
        return self.factors[-1][0] if self.factors else 1

    @property
    def radical(self) -> int:
        return math.prod(self.primes)

    @property
    def valuation_product(self) -> int:
        return math.prod(e for _, e in self.factors)

    def valuation(self, p: int) -> int:
        for q, e in self.factors:
            if q == p:
                return e
        return 0

    def __str__(self) -> str:
        body = "*".join(f"{p}^{e}" if e > 1 else str(p) for p, e in self.factors) or "1"
        return f"-{body}" if self.sign < 0 else body


class _RhoBudget:
    def __init__(self, limit: int):
        self.limit = limit
        self.spent = 0

    def spend(self, steps: int, cofactor: int) -> None:
        self.spent += steps
        if self.spent > self.limit:
            raise FactoringEffortExceeded(cofactor, self.limit)


def _sieve(bound: int) -> np.ndarray:
    """All primes strictly below ``bound``."""
    if bound <= 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(bound, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(bound - 1) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.flatnonzero(sieve)


@lru_cache(maxsize=8)
def _prime_table(bound: int) -> Tuple[int, ...]:
    return tuple(int(p) for p in _sieve(bound))


def _strong_probable_prime(n: int, base: int) -> bool:
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    x = int(gmpy2.powmod(base, d, n))
    if x in (1, n - 1):
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    """Primality by strong-pseudoprime tests.

    Exact for ``n < DETERMINISTIC_PRIMALITY_BOUND``; beyond it, ``PROBABLE_PRIME_ROUNDS`` extra
    rounds on bases drawn from a generator seeded by ``n`` bring the error below 2^-128.
    """
    if n < 2:
        return False
    for p in _MR_BASES:
        if n == p:
            return True
        if n % p == 0:
            return False
    if not all(_strong_probable_prime(n, a) for a in _MR_BASES):
        return False
    if n < DETERMINISTIC_PRIMALITY_BOUND:
        return True
    rng = random.Random(n)
    return all(
        _strong_probable_prime(n, rng.randrange(2, n - 1)) for _ in range(PROBABLE_PRIME_ROUNDS)
    )


def _perfect_power(n: int) -> Tuple[int, int]:
    """Return ``(root, k)`` with ``root**k == n`` and ``k`` maximal."""
    for k in range(n.bit_length(), 1, -1):
        root, exact = gmpy2.iroot(n, k)
        if exact:
            return int(root), k
    return n, 1


def _brent_split(n: int, rng: random.Random, budget: _RhoBudget) -> int:
    """Find a nontrivial divisor of the odd composite ``n`` with Brent's cycle finding."""
    if n % 2 == 0:
        return 2
    mn = gmpy2.mpz(n)
    while True:
        y = gmpy2.mpz(rng.randrange(1, n))
        c = gmpy2.mpz(rng.randrange(1, n))
        g = r = q = gmpy2.mpz(1)
        x = ys = y
        while g == 1:
            x = y
            for _ in range(int(r)):
                y = (y * y + c) % mn
            budget.spend(int(r), n)
            k = 0
            while k < r and g == 1:
                ys = y
                steps = int(min(_RHO_BLOCK, r - k))
                for _ in range(steps):
                    y = (y * y + c) % mn
                    q = q * abs(x - y) % mn
                budget.spend(steps, n)
                g = gmpy2.gcd(q, mn)
                k += _RHO_BLOCK
            r *= 2
        if g == mn:
            g = gmpy2.mpz(1)
            while g == 1:
                ys = (ys * ys + c) % mn
                g = gmpy2.gcd(abs(x - ys), mn)
                budget.spend(1, n)
        if g != mn:
            return int(g)


def factorize(
    m: int,
    seed: int = DEFAULT_RHO_SEED,
    max_rho_iterations: int = DEFAULT_MAX_RHO_ITERATIONS,
    trial_bound: int = DEFAULT_TRIAL_BOUND,
) -> Factorization:
    """Factor a nonzero integer.

    Trial division by the primes below ``trial_bound`` runs first and stops as soon as the
    remaining cofactor is provably prime. Anything left is split by Brent's rho with a generator
    seeded from ``seed`` and the cofactor, so results are reproducible.

    Args:
        m (int): The integer to factor.
        seed (int): Seed of the rho stage.
        max_rho_iterations (int): Budget of rho steps for this call.
        trial_bound (int): Trial division bound.

    Returns:
        Factorization: The signed prime-power decomposition of ``m``.

    Raises:
        DomainError: If ``m`` is zero.
        FactoringEffortExceeded: If the rho budget runs out.
    """
    m = int(m)
    if m == 0:
        raise DomainError("Cannot factor 0")
    n = abs(m)
    counts: Dict[int, int] = {}

    table = _prime_table(trial_bound)
    exhausted = True
    for p in table:
        if p * p > n:
            exhausted = False
            break
        if n % p == 0:
            n, e = gmpy2.remove(n, p)
            n = int(n)
            counts[p] = int(e)

    if n > 1:
        largest_tried = table[-1] if table else 1
        if not exhausted or n < (largest_tried + 1) ** 2:
            counts[n] = counts.get(n, 0) + 1
        else:
            budget = _RhoBudget(max_rho_iterations)
            rng = random.Random(n ^ seed)
            _split_into(n, 1, counts, rng, budget)

    factors = tuple(sorted(counts.items()))
    probable = any(p >= DETERMINISTIC_PRIMALITY_BOUND for p, _ in factors)
    return Factorization(m, -1 if m < 0 else 1, factors, probable)


def _split_into(
    n: int, multiplicity: int, counts: Dict[int, int], rng: random.Random, budget: _RhoBudget
) -> None:
    stack: List[Tuple[int, int]] = [(n, multiplicity)]
    while stack:
        c, mult = stack.pop()
        if c == 1:
            continue
        root, k = _perfect_power(c)
        if k > 1:
            stack.append((root, mult * k))
            continue
        if is_prime(c):
            counts[c] = counts.get(c, 0) + mult
            continue
        d = _brent_split(c, rng, budget)
        stack.append((d, mult))
        stack.append((c // d, mult))


def greatest_prime_factor(m: int, **options) -> int:
    """Largest prime dividing ``|m|``; ``1`` for ``m = ±1``."""
    return factorize(m, **options).greatest_prime_factor


def radical(m: int, **options) -> int:
    """Product of the distinct primes dividing ``m``; ``rad(±1) = 1``."""
    return factorize(m, **options).radical


def valuation(p: int, m: int) -> int:
    """The ``p``-adic valuation of a nonzero integer.

    Raises:
        DomainError: If ``p`` is not prime or ``m`` is zero.
    """
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if m == 0:
        raise DomainError("Valuation of 0 is infinite")
    _, e = gmpy2.remove(abs(int(m)), p)
    return int(e)


def valuation_product(m: int, **options) -> int:
    """Product of the exponents in the factorization of ``m`` (empty product is 1)."""
    return factorize(m, **options).valuation_product


def primorial(x: float) -> int:
    """Product of all primes not exceeding ``x``; ``1`` when ``x < 2``.

    The primes come from a sieve up to ``x``, so ``x`` is expected to be of moderate size.
    """
    if x < 2:
        return 1
    return math.prod(int(p) for p in _sieve(math.floor(x) + 1))


def divisors(m: int, **options) -> Iterator[int]:
    """Positive divisors of a nonzero integer, in increasing order."""
    result = [1]
    for p, e in factorize(m, **options).factors:
        result = [d * p**k for d in result for k in range(e + 1)]
    return iter(sorted(result))


def log_abs(m: int) -> float:
    """Natural log of ``|m|`` for integers of any size.

    Computed from the bit length and the leading 64 bits, so it never overflows and the relative
    error stays below 1e-12.
    """
    m = abs(int(m))
    if m == 0:
        raise DomainError("log|0| is undefined")
    shift = max(m.bit_length() - 64, 0)
    return math.log(m >> shift) + shift * _LOG2


def abc_quality(a: int, b: int, **options) -> float:
    """Quality ``log c / log rad(abc)`` of the abc triple ``a + b = c``.

    Raises:
        DomainError: If ``a`` and ``b`` are not coprime positive integers.
    """
    if a < 1 or b < 1 or math.gcd(a, b) != 1:
        raise DomainError(f"({a}, {b}) is not a pair of coprime positive integers")
    c = a + b
    return log_abs(c) / log_abs(radical(a * b * c, **options))
