import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

import gmpy2
import parse

from dagster_szpiro.arith import Factorization, factorize, is_prime, log_abs
from dagster_szpiro.errors import DomainError, InternalError, UsageError
from dagster_szpiro.polyz import count_roots_mod_p

KODAIRA_SYMBOLS = ("I0", "In", "II", "III", "IV", "I0*", "In*", "IV*", "III*", "II*")

_LOCAL_FIELD = "{p:d}:{kodaira}:{f:d}:{v:d}"


@dataclass(frozen=True)
class WeierstrassModel:
    """Integral long Weierstrass equation ``y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6``."""

    a1: int = 0
    a2: int = 0
    a3: int = 0
    a4: int = 0
    a6: int = 0

    @classmethod
    def short(cls, A: int, B: int) -> "WeierstrassModel":
        return cls(0, 0, 0, A, B)

    @property
    def ainvs(self) -> Tuple[int, int, int, int, int]:
        return self.a1, self.a2, self.a3, self.a4, self.a6

    def b_invariants(self) -> Tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    def invariants(self) -> Tuple[int, int, int]:
        """The exact triple ``(c4, c6, discriminant)``."""
        b2, b4, b6, b8 = self.b_invariants()
        c4 = b2 * b2 - 24 * b4
        c6 = -(b2**3) + 36 * b2 * b4 - 216 * b6
        disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
        return c4, c6, disc

    @property
    def discriminant(self) -> int:
        return self.invariants()[2]

    def j_invariant(self) -> Fraction:
        c4, _, disc = self.invariants()
        if disc == 0:
            raise DomainError(f"{self} is singular")
        return Fraction(c4**3, disc)

    def transform(self, u: int, r: int, s: int, t: int) -> "WeierstrassModel":
        """Apply ``x = u^2 x' + r``, ``y = u^3 y' + s u^2 x' + t``.

        Raises:
            InternalError: If the transformed coefficients are not integers.
        """
        a1, a2, a3, a4, a6 = self.ainvs
        numerators = (
            a1 + 2 * s,
            a2 - s * a1 + 3 * r - s * s,
            a3 + r * a1 + 2 * t,
            a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
            a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1,
        )
        coefficients = []
        for numerator, weight in zip(numerators, (1, 2, 3, 4, 6)):
            scale = u**weight
            if numerator % scale:
                raise InternalError(
                    f"Transformation (u={u}, r={r}, s={s}, t={t}) of {self} is not integral"
                )
            coefficients.append(numerator // scale)
        return WeierstrassModel(*coefficients)

    def __str__(self) -> str:
        return "[" + ",".join(str(a) for a in self.ainvs) + "]"


class LocalReductionData(
    NamedTuple(
        "_LocalReductionData",
        [
            ("p", int),
            ("kind", str),
            ("kodaira", str),
            ("v_delta_min", int),
            ("f_p", int),
            ("tamagawa", int),
            ("split", Optional[bool]),
        ],
    )
):
    """Reduction type of a curve at one prime.

    Attributes:
        p (int): The prime.
        kind (str): ``good``, ``multiplicative`` or ``additive``.
        kodaira (str): Kodaira symbol of the special fibre, e.g. ``I0``, ``I3``, ``IV*``.
        v_delta_min (int): Valuation of the minimal discriminant at ``p``.
        f_p (int): Exponent of ``p`` in the conductor.
        tamagawa (int): Local Tamagawa number. Recorded, not used downstream.
        split (Optional[bool]): Whether multiplicative reduction is split; ``None`` otherwise.
    """


class MinimalModel(
    NamedTuple(
        "_MinimalModel",
        [
            ("model", WeierstrassModel),
            ("u", int),
            ("r", int),
            ("s", int),
            ("t", int),
        ],
    )
):
    """A global minimal model and the transformation taking the input model to it."""


class GlobalInvariants(
    NamedTuple(
        "_GlobalInvariants",
        [
            ("delta_min", int),
            ("conductor", int),
            ("locals", Tuple[LocalReductionData, ...]),
            ("minimal_model", MinimalModel),
        ],
    )
):
    """Minimal discriminant, conductor and local data of a curve over Q.

    Attributes:
        delta_min (int): Discriminant of a global minimal model.
        conductor (int): Product of ``p^f_p`` over the bad primes.
        locals (Tuple[LocalReductionData, ...]): Local data at each bad prime, increasing ``p``.
        minimal_model (MinimalModel): The minimal model and transformation it was read from.
    """

    @property
    def u(self) -> int:
        return self.minimal_model.u

    @property
    def bad_primes(self) -> Tuple[int, ...]:
        return tuple(data.p for data in self.locals)

    @property
    def szpiro_ratio(self) -> float:
        if self.conductor < 2:
            raise DomainError("Szpiro ratio needs conductor at least 2")
        if abs(self.delta_min) == 1:
            return 0.0
        return log_abs(self.delta_min) / log_abs(self.conductor)

    def local(self, p: int) -> LocalReductionData:
        for data in self.locals:
            if data.p == p:
                return data
        return LocalReductionData(p, "good", "I0", 0, 0, 1, None)


def _v(x: int, p: int) -> Union[int, float]:
    if x == 0:
        return math.inf
    return int(gmpy2.remove(abs(x), p)[1])


def _inverse(a: int, p: int) -> int:
    return int(gmpy2.invert(a % p, p))


def _has_quadratic_root(a: int, b: int, c: int, p: int) -> bool:
    """Whether ``a X^2 + b X + c`` has a root in F_p."""
    if p == 2:
        return any((a * x * x + b * x + c) % 2 == 0 for x in (0, 1))
    a, b, c = a % p, b % p, c % p
    if a == 0:
        return b != 0 or c == 0
    return gmpy2.legendre((b * b - 4 * a * c) % p, p) >= 0


def _require_nonsingular(E: WeierstrassModel) -> int:
    disc = E.discriminant
    if disc == 0:
        raise DomainError(f"{E} is singular (discriminant 0)")
    return disc


def invariants(E: WeierstrassModel) -> Tuple[int, int, int]:
    """``(c4, c6, discriminant)`` of ``E``."""
    return E.invariants()


def _kraus_holds(c4: int, c6: int, p: int) -> bool:
    if p == 3:
        return _v(c6, 3) != 2
    if p == 2:
        if c6 % 4 == 3:
            return True
        return _v(c4, 2) >= 4 and c6 % 32 in (0, 8)
    return True


def _model_from_c4c6(c4: int, c6: int) -> WeierstrassModel:
    b2 = (-c6) % 12
    if b2 > 6:
        b2 -= 12
    b4, rem4 = divmod(b2 * b2 - c4, 24)
    b6, rem6 = divmod(-(b2**3) + 36 * b2 * b4 - c6, 216)
    if rem4 or rem6:
        raise InternalError(f"(c4, c6) = ({c4}, {c6}) does not come from an integral model")
    a1 = b2 % 2
    a3 = b6 % 2
    return WeierstrassModel(a1, (b2 - a1) // 4, a3, (b4 - a1 * a3) // 2, (b6 - a3) // 4)


def _exact(numerator: int, denominator: int, what: str) -> int:
    q, r = divmod(numerator, denominator)
    if r:
        raise InternalError(f"Non-integral {what} while solving for the minimal model")
    return q


def minimal_model(
    E: WeierstrassModel, factorization: Optional[Factorization] = None, **factor_options
) -> MinimalModel:
    """Global minimal model by the Laska-Kraus-Connell method.

    For every prime with ``p^12 | disc`` the largest admissible scaling exponent is found from the
    valuations of ``c4``, ``c6`` and ``disc`` and Kraus's congruence conditions at 2 and 3. The
    reduced model with invariants ``(c4/u^4, c6/u^6)`` is then built and the transformation
    ``(u, r, s, t)`` from ``E`` is solved exactly and verified.

    Args:
        E (WeierstrassModel): A nonsingular integral model.
        factorization (Optional[Factorization]): Factorization of ``disc(E)`` if already known.

    Raises:
        DomainError: If ``E`` is singular.
    """
    disc = _require_nonsingular(E)
    c4, c6, _ = E.invariants()
    if factorization is None:
        factorization = factorize(disc, **factor_options)

    u = 1
    for p, e in factorization.factors:
        if e < 12:
            continue
        d = int(min(e // 12, _v(c4, p) // 4, _v(c6, p) // 6))
        while d > 0 and not _kraus_holds(c4 // p ** (4 * d), c6 // p ** (6 * d), p):
            d -= 1
        u *= p**d
    if u == 1:
        return MinimalModel(E, 1, 0, 0, 0)

    reduced = _model_from_c4c6(c4 // u**4, c6 // u**6)
    a1, a2, a3, _, _ = E.ainvs
    s = _exact(u * reduced.a1 - a1, 2, "s")
    r = _exact(u * u * reduced.a2 - a2 + s * a1 + s * s, 3, "r")
    t = _exact(u**3 * reduced.a3 - a3 - r * a1, 2, "t")
    if E.transform(u, r, s, t) != reduced:
        raise InternalError(f"Minimal model check failed for {E} with u={u}")
    return MinimalModel(reduced, u, r, s, t)


def tate_local(E: WeierstrassModel, p: int) -> LocalReductionData:
    """Local reduction data of ``E`` at ``p`` by Tate's algorithm.

    The same code path runs at every prime. A non-minimal model at ``p`` is rescaled and the
    algorithm restarts; the number of restarts is bounded by ``v_p(disc) / 12``.

    Raises:
        DomainError: If ``p`` is not prime or ``E`` is singular.
        InternalError: If the restart guard is exceeded.
    """
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    disc = _require_nonsingular(E)
    n = _v(disc, p)
    model = E
    for _ in range(int(n) // 12 + 1):
        result = _tate_pass(model, p, int(n))
        if isinstance(result, LocalReductionData):
            return result
        model, n = result, n - 12
    raise InternalError(f"Tate's algorithm did not terminate at p={p} for {E}")


def _tate_pass(
    E: WeierstrassModel, p: int, n: int
) -> Union[LocalReductionData, WeierstrassModel]:
    if n == 0:
        return LocalReductionData(p, "good", "I0", 0, 0, 1, None)
    half = _inverse(2, p) if p != 2 else 0

    # Move the singular point of the reduction to (0, 0).
    a1, a2, a3, a4, a6 = E.ainvs
    b2, b4, b6, _ = E.b_invariants()
    c4, c6, _ = E.invariants()
    if p == 2:
        if b2 % 2 == 0:
            r = a4 % 2
            t = (r * (1 + a2 + a4) + a6) % 2
        else:
            r = a3 % 2
            t = (r + a4) % 2
    elif p == 3:
        r = (-b6) % 3 if b2 % 3 == 0 else (-b2 * b4) % 3
        t = (a1 * r + a3) % 3
    else:
        if c4 % p == 0:
            r = (-b2 * _inverse(12, p)) % p
        else:
            r = (-(c6 + b2 * c4) * _inverse(12 * c4, p)) % p
        t = (-half * (a1 * r + a3)) % p
    E = E.transform(1, r, 0, t)
    a1, a2, a3, a4, a6 = E.ainvs

    if c4 % p:
        split = _has_quadratic_root(1, a1, -a2, p)
        tamagawa = n if split else (1 if n % 2 else 2)
        return LocalReductionData(p, "multiplicative", f"I{n}", n, 1, tamagawa, split)

    if _v(a6, p) < 2:
        return LocalReductionData(p, "additive", "II", n, n, 1, None)
    b2, b4, b6, b8 = E.b_invariants()
    if _v(b8, p) < 3:
        return LocalReductionData(p, "additive", "III", n, n - 1, 2, None)
    if _v(b6, p) < 3:
        tamagawa = 3 if _has_quadratic_root(1, a3 // p, -(a6 // p**2), p) else 1
        return LocalReductionData(p, "additive", "IV", n, n - 2, tamagawa, None)

    if p == 2:
        s = a2 % 2
        t = 2 * ((a6 // 4) % 2)
    else:
        s = (-a1 * half) % p
        t = p * ((-(a3 // p) * half) % p)
    E = E.transform(1, 0, s, t)
    a1, a2, a3, a4, a6 = E.ainvs

    # Cubic T^3 + b T^2 + c T + d governs the remaining cases.
    b, c, d = a2 // p, a4 // p**2, a6 // p**3
    w = 27 * d * d - b * b * c * c + 4 * b**3 * d - 18 * b * c * d + 4 * c**3
    x = 3 * c - b * b
    if w % p:
        tamagawa = 1 + count_roots_mod_p((d, c, b, 1), p)
        return LocalReductionData(p, "additive", "I0*", n, n - 4, tamagawa, None)

    if x % p:
        if p == 2:
            root = c % 2
        elif p == 3:
            root = (b * c) % 3
        else:
            root = ((b * c - 9 * d) * _inverse(2 * x, p)) % p
        E = E.transform(1, p * root, 0, 0)
        return _tate_i_m_star(E, p, n)

    root = (-d) % 3 if p == 3 else (-b * _inverse(3, p)) % p
    E = E.transform(1, p * root, 0, 0)
    a1, a2, a3, a4, a6 = E.ainvs
    x3, x6 = a3 // p**2, a6 // p**4
    if (x3 * x3 + 4 * x6) % p:
        tamagawa = 3 if _has_quadratic_root(1, x3, -x6, p) else 1
        return LocalReductionData(p, "additive", "IV*", n, n - 6, tamagawa, None)

    t = p**2 * (x6 % 2) if p == 2 else p**2 * ((-x3 * half) % p)
    E = E.transform(1, 0, 0, t)
    a1, a2, a3, a4, a6 = E.ainvs
    if _v(a4, p) < 4:
        return LocalReductionData(p, "additive", "III*", n, n - 7, 2, None)
    if _v(a6, p) < 6:
        return LocalReductionData(p, "additive", "II*", n, n - 8, 1, None)
    return E.transform(p, 0, 0, 0)


def _tate_i_m_star(E: WeierstrassModel, p: int, n: int) -> LocalReductionData:
    """Subprocedure for the ``I_m*`` fibres, entered with a double root of the cubic at 0."""
    half = _inverse(2, p) if p != 2 else 0
    m, mx, my = 1, p * p, p * p
    while m <= n:
        a1, a2, a3, a4, a6 = E.ainvs
        xa2 = a2 // p
        xa3 = a3 // my
        xa6 = a6 // (mx * my)
        if (xa3 * xa3 + 4 * xa6) % p:
            tamagawa = 4 if _has_quadratic_root(1, xa3, -xa6, p) else 2
            break
        t = my * xa6 if p == 2 else my * ((-xa3 * half) % p)
        E = E.transform(1, 0, 0, t)
        my *= p
        m += 1

        a1, a2, a3, a4, a6 = E.ainvs
        xa2 = a2 // p
        xa4 = a4 // (p * mx)
        xa6 = a6 // (mx * my)
        if (xa4 * xa4 - 4 * xa2 * xa6) % p:
            tamagawa = 4 if _has_quadratic_root(xa2, xa4, xa6, p) else 2
            break
        if p == 2:
            r = mx * ((xa6 * xa2) % 2)
        else:
            r = mx * ((-xa4 * _inverse(2 * xa2, p)) % p)
        E = E.transform(1, r, 0, 0)
        mx *= p
        m += 1
    else:
        raise InternalError(f"I_m* loop did not terminate at p={p}")
    return LocalReductionData(p, "additive", f"I{m}*", n, n - m - 4, tamagawa, None)


def conductor(
    E: WeierstrassModel, factorization: Optional[Factorization] = None, **factor_options
) -> GlobalInvariants:
    """Minimal discriminant, conductor and per-prime local data of ``E``.

    Args:
        E (WeierstrassModel): A nonsingular integral model.
        factorization (Optional[Factorization]): Factorization of ``disc(E)`` if already known.

    Raises:
        DomainError: If ``E`` is singular.
        FactoringEffortExceeded: If the discriminant cannot be factored within the budget.
    """
    disc = _require_nonsingular(E)
    if factorization is None:
        factorization = factorize(disc, **factor_options)
    elif factorization.value != disc:
        raise DomainError(f"Factorization of {factorization.value} given for discriminant {disc}")
    minimal = minimal_model(E, factorization)
    delta_min = disc // minimal.u**12

    locals_ = []
    for p in factorization.primes:
        if delta_min % p:
            continue
        data = tate_local(minimal.model, p)
        if data.v_delta_min != _v(delta_min, p):
            raise InternalError(f"Local and global valuations of the discriminant differ at {p}")
        locals_.append(data)
    N = math.prod(data.p**data.f_p for data in locals_)
    return GlobalInvariants(delta_min, N, tuple(locals_), minimal)


def szpiro_ratio(E: WeierstrassModel, **factor_options) -> float:
    """``log|delta_min| / log N``."""
    return conductor(E, **factor_options).szpiro_ratio


def naive_height(A: int, B: int) -> float:
    """``log max(|A|^3, B^2, 1)`` for the short model ``y^2 = x^3 + A x + B``."""
    if A == 0 and B == 0:
        raise DomainError("naive height of (0, 0) is undefined")
    return log_abs(max(abs(A) ** 3, B * B, 1))


def height_ratio(E: WeierstrassModel, **factor_options) -> float:
    """Naive height of ``E`` divided by ``log N``.

    Short models use their own ``(a4, a6)``; long models go through ``y^2 = x^3 - 27c4 x - 54c6``.
    """
    g = conductor(E, **factor_options)
    if E.a1 == E.a2 == E.a3 == 0:
        A, B = E.a4, E.a6
    else:
        c4, c6, _ = E.invariants()
        A, B = -27 * c4, -54 * c6
    return naive_height(A, B) / log_abs(g.conductor)


def is_semistable_outside(E: WeierstrassModel, S: Iterable[int], **factor_options) -> bool:
    excluded = set(S)
    return all(
        data.kind == "multiplicative"
        for data in conductor(E, **factor_options).locals
        if data.p not in excluded
    )


def valuation_product_outside(E: WeierstrassModel, S: Iterable[int], **factor_options) -> int:
    """Product of ``v_p(delta_min)`` over the bad primes outside ``S``."""
    excluded = set(S)
    return math.prod(
        data.v_delta_min
        for data in conductor(E, **factor_options).locals
        if data.p not in excluded
    )


class CurveFixture(
    NamedTuple(
        "_CurveFixture",
        [
            ("model", WeierstrassModel),
            ("delta_min", int),
            ("conductor", int),
            ("locals", Tuple[Tuple[int, str, int, int], ...]),
        ],
    )
):
    """One line of a curve fixture file: a model with its expected global and local data."""


def parse_fixture_line(line: str) -> CurveFixture:
    """Parse ``a1,a2,a3,a4,a6,delta_min,conductor,p:kodaira:f:v,...``."""
    fields = [field.strip() for field in line.split(",")]
    if len(fields) < 7:
        raise UsageError(f"Fixture line has {len(fields)} fields, expected at least 7: {line!r}")
    try:
        numbers = [int(field) for field in fields[:7]]
    except ValueError:
        raise UsageError(f"Non-integer curve field in fixture line {line!r}") from None
    locals_: List[Tuple[int, str, int, int]] = []
    for field in fields[7:]:
        result = parse.parse(_LOCAL_FIELD, field)
        if result is None:
            raise UsageError(f"Malformed local field {field!r}, expected p:kodaira:f:v")
        locals_.append((result["p"], result["kodaira"], result["f"], result["v"]))
    return CurveFixture(WeierstrassModel(*numbers[:5]), numbers[5], numbers[6], tuple(locals_))


def format_fixture_line(E: WeierstrassModel, g: GlobalInvariants) -> str:
    fields = [str(a) for a in E.ainvs] + [str(g.delta_min), str(g.conductor)]
    fields += [
        _LOCAL_FIELD.format(p=data.p, kodaira=data.kodaira, f=data.f_p, v=data.v_delta_min)
        for data in g.locals
    ]
    return ",".join(fields)


def read_fixture(path: str) -> Iterator[CurveFixture]:
    """Fixture records of a file, skipping blank lines and ``#`` comments."""
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.split("#", 1)[0].strip()
            if line:
                yield parse_fixture_line(line)
