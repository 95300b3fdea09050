import math
import random

import pytest

from dagster_szpiro.arith import (
    DETERMINISTIC_PRIMALITY_BOUND,
    abc_quality,
    divisors,
    factorize,
    greatest_prime_factor,
    is_prime,
    log_abs,
    primorial,
    radical,
    valuation,
    valuation_product,
)
from dagster_szpiro.errors import DomainError, FactoringEffortExceeded

from utils import oracle_factors, smallest_prime_factors, trial_division


@pytest.mark.parametrize(
    "m,sign,factors",
    [
        (12, 1, ((2, 2), (3, 1))),
        (-221184, -1, ((2, 13), (3, 3))),
        (1, 1, ()),
        (-1, -1, ()),
        (2**61 - 1, 1, ((2**61 - 1, 1),)),
    ],
)
def test_factorize(m, sign, factors):
    factorization = factorize(m)
    assert factorization.sign == sign
    assert factorization.factors == factors
    assert factorization.value == m
    assert not factorization.probable


def test_factorize_zero():
    with pytest.raises(DomainError):
        factorize(0)


def test_factorize_luca_value():
    assert factorize(24208144**2 + 1).greatest_prime_factor == 89


def test_factorize_string():
    assert str(factorize(-12)) == "-2^2*3"
    assert str(factorize(1)) == "1"


@pytest.mark.parametrize("m,expected", [(2**10, 2), (24208143**2 + 1, 67749617053), (1, 1)])
def test_greatest_prime_factor(m, expected):
    assert greatest_prime_factor(m) == expected


@pytest.mark.parametrize("m,expected", [(12, 6), (-221184, 6), (-1, 1)])
def test_radical(m, expected):
    assert radical(m) == expected


@pytest.mark.parametrize("p,m,expected", [(2, 12, 2), (3, 221184, 3), (5, 12, 0), (3, -27, 3)])
def test_valuation(p, m, expected):
    assert valuation(p, m) == expected


@pytest.mark.parametrize("p,m", [(4, 12), (1, 12), (2, 0)])
def test_valuation_rejects(p, m):
    with pytest.raises(DomainError):
        valuation(p, m)


@pytest.mark.parametrize("m,expected", [(12, 2), (221184, 39), (30030, 1), (1, 1)])
def test_valuation_product(m, expected):
    assert valuation_product(m) == expected


@pytest.mark.parametrize("p", [2, 3, 101, 1000003])
def test_valuation_product_of_prime_powers(p):
    for k in range(1, 21):
        assert valuation_product(p**k) == k


@pytest.mark.parametrize("x,expected", [(0, 1), (1, 1), (1.99, 1), (2, 2), (10, 210), (10.5, 210)])
def test_primorial(x, expected):
    assert primorial(x) == expected


def test_reconstruction():
    rng = random.Random(11)
    for _ in range(500):
        m = 0
        while m == 0:
            m = rng.randint(-(10**9), 10**9)
        factorization = factorize(m)
        assert factorization.sign * math.prod(p**e for p, e in factorization.factors) == m
        assert all(is_prime(p) for p in factorization.primes)
        assert list(factorization.primes) == sorted(set(factorization.primes))


def test_divisibility_chain():
    rng = random.Random(12)
    for _ in range(500):
        m = rng.randint(2, 10**12)
        rad = radical(m)
        assert m % rad == 0
        assert rad % greatest_prime_factor(m) == 0


SANDWICH_PRIMORIAL_BOUND = 10**5


def test_sandwich():
    """rad(m) <= primorial(P(m)) <= 4^P(m) on signed m with 2 <= |m| <= 10^9."""
    spf = smallest_prime_factors(SANDWICH_PRIMORIAL_BOUND + 1)
    primes = [p for p in range(2, SANDWICH_PRIMORIAL_BOUND + 1) if spf[p] == p]
    rng = random.Random(13)
    samples = []
    for _ in range(10_000):
        m = rng.choice((-1, 1)) * rng.randint(2, 10**9)
        factorization = factorize(m)
        samples.append((factorization.greatest_prime_factor, factorization.radical, m))

    # Walk the samples by increasing P(m), extending the primorial as we go.
    samples.sort()
    product, index = 1, 0
    for gpf, rad, m in samples:
        while index < len(primes) and primes[index] <= gpf:
            product *= primes[index]
            index += 1
        if gpf <= SANDWICH_PRIMORIAL_BOUND:
            if gpf < 1000:
                assert primorial(gpf) == product
            assert rad <= product <= 1 << (2 * gpf), m
        else:
            # At most one prime of |m| <= 10^9 exceeds 10^5, and it is P(m).
            known = product * gpf
            assert known % rad == 0, m
            assert known.bit_length() <= 2 * gpf, m


def test_oracle_equivalence():
    bound = 10**6 + 1
    spf = smallest_prime_factors(bound)
    for m in range(1, bound):
        assert factorize(m).factors == tuple(oracle_factors(m, spf))
    for m in range(-bound + 1, 0, 997):
        assert factorize(m).factors == tuple(trial_division(m))


def test_factorize_beyond_trial_division():
    p, q = 1000003, 1000033
    assert factorize(p * q).factors == ((p, 1), (q, 1))
    assert factorize(p**3 * q**2, trial_bound=100).factors == ((p, 3), (q, 2))
    m = (2**31 - 1) * (2**61 - 1) * 3**5
    assert factorize(m, trial_bound=10).factors == ((3, 5), (2**31 - 1, 1), (2**61 - 1, 1))


def test_factorize_is_deterministic():
    m = 1000003 * 1000033 * 998244353
    first = factorize(m, seed=5, trial_bound=100)
    assert factorize(m, seed=5, trial_bound=100) == first
    assert factorize(m, seed=6, trial_bound=100).factors == first.factors


def test_factoring_effort_exceeded():
    cofactor = 1000003 * 1000033
    with pytest.raises(FactoringEffortExceeded) as error:
        factorize(cofactor, max_rho_iterations=1, trial_bound=10)
    assert error.value.cofactor == cofactor
    assert error.value.budget == 1


def test_is_prime():
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]
    assert [n for n in range(50) if is_prime(n)] == primes
    assert not is_prime(561)
    assert not is_prime(3215031751)
    assert is_prime(2**89 - 1)
    assert not is_prime((2**61 - 1) * (2**31 - 1))


def test_probable_primes_are_flagged():
    p = 2**127 - 1
    assert p > DETERMINISTIC_PRIMALITY_BOUND
    assert is_prime(p)
    factorization = factorize(2 * p)
    assert factorization.factors == ((2, 1), (p, 1))
    assert factorization.probable


def test_log_abs():
    assert log_abs(1) == 0.0
    assert log_abs(-3) == pytest.approx(math.log(3), rel=1e-12)
    assert log_abs(10**400) == pytest.approx(400 * math.log(10), rel=1e-12)
    with pytest.raises(DomainError):
        log_abs(0)


def test_divisors():
    assert list(divisors(12)) == [1, 2, 3, 4, 6, 12]
    assert list(divisors(-7)) == [1, 7]


def test_abc_quality():
    assert abc_quality(1, 8) == pytest.approx(math.log(9) / math.log(6))
    with pytest.raises(DomainError):
        abc_quality(2, 4)
