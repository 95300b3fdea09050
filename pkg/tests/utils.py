import os
from typing import Dict, List

import numpy as np

from dagster_szpiro.polyz import IntPoly

FIXTURE_PATH = os.path.join(os.path.dirname(__file__), "curve_fixtures.txt")

X2_PLUS_1 = IntPoly((1, 0, 1))
FAST_FACTOR_OPTIONS = {"seed": 7, "max_rho_iterations": 200_000, "trial_bound": 1000}

# y^2 + y = x^3 - x^2, y^2 = x^3 - x, y^2 = x^3 + 1 and y^2 = x^3 - 16x.
CURVE_11A3 = (0, -1, 1, 0, 0)
CURVE_32 = (0, 0, 0, -1, 0)
CURVE_36 = (0, 0, 0, 0, 1)
CURVE_32_SCALED = (0, 0, 0, -16, 0)


def smallest_prime_factors(bound: int) -> np.ndarray:
    """Smallest prime factor of every integer below ``bound``, 0 for 0 and 1."""
    spf = np.zeros(bound, dtype=np.int64)
    for p in range(2, bound):
        if spf[p] == 0:
            spf[p] = p
            multiples = spf[p * p :: p] if p * p < bound else spf[:0]
            multiples[multiples == 0] = p
    return spf


def oracle_factors(m: int, spf: np.ndarray) -> List[tuple]:
    counts: Dict[int, int] = {}
    m = abs(m)
    while m > 1:
        p = int(spf[m])
        counts[p] = counts.get(p, 0) + 1
        m //= p
    return sorted(counts.items())


def trial_division(m: int) -> List[tuple]:
    counts: Dict[int, int] = {}
    m = abs(m)
    p = 2
    while p * p <= m:
        while m % p == 0:
            counts[p] = counts.get(p, 0) + 1
            m //= p
        p += 1
    if m > 1:
        counts[m] = counts.get(m, 0) + 1
    return sorted(counts.items())


def read_rows(path: str) -> List[str]:
    with open(path, encoding="utf-8") as handle:
        return handle.read().splitlines()
