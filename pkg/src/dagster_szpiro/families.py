import math
import random
from fractions import Fraction
from typing import List, Mapping, NamedTuple, Optional, Tuple, Union

from dagster_szpiro.arith import Factorization, factorize
from dagster_szpiro.ellcurve import GlobalInvariants, WeierstrassModel, conductor
from dagster_szpiro.errors import BadFiberError, DomainError, UsageError
from dagster_szpiro.parsing import parse_poly, parse_triple
from dagster_szpiro.polyz import (
    IntPoly,
    PolyLike,
    as_poly,
    discriminant_poly,
    distinct_root_count,
    gcd_over_Q,
    integer_roots,
    resultant,
)

_DISTINCT_ROOTS = "two distinct complex roots (read as nonzero discriminant)"


class SurfaceSpec(
    NamedTuple(
        "_SurfaceSpec",
        [
            ("A", IntPoly),
            ("B", IntPoly),
            ("D", IntPoly),
            ("rho", int),
            ("sigma", Tuple[int, ...]),
        ],
    )
):
    """Elliptic surface ``y^2 = x^3 + A(t) x + B(t)`` over Z[t].

    Build instances with ``make_surface``, which validates the hypotheses and derives the rest.

    Attributes:
        A (IntPoly): Coefficient of ``x``.
        B (IntPoly): Constant coefficient.
        D (IntPoly): Discriminant ``-16(4A^3 + 27B^2)``.
        rho (int): Resultant of ``A`` and ``B``, nonzero.
        sigma (Tuple[int, ...]): Integer zeros of ``D``, the fibres that are not elliptic curves.
    """


class QuadraticGPF(NamedTuple("_QuadraticGPF", [("a", int), ("b", int), ("c", int)])):
    """Quadratic ``a x^2 + b x + c`` whose values are searched for large prime factors."""

    @property
    def delta(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def polynomial(self) -> IntPoly:
        return IntPoly((self.c, self.b, self.a))


class CubicGPF(NamedTuple("_CubicGPF", [("a", int), ("b", int), ("c", int)])):
    """Cubic ``(a x + b)^3 + c``."""

    def polynomial(self) -> IntPoly:
        return IntPoly((self.b, self.a)) ** 3 + self.c


Family = Union[SurfaceSpec, QuadraticGPF, CubicGPF]


class IdentityCheck(
    NamedTuple("_IdentityCheck", [("holds", bool), ("lhs", IntPoly), ("rhs", IntPoly)])
):
    """Outcome of an exact polynomial identity check, with both sides as witnesses."""


class QuasiminimalityReport(
    NamedTuple(
        "_QuasiminimalityReport",
        [
            ("ratio", Fraction),
            ("rad_divides", bool),
            ("invariants", GlobalInvariants),
            ("factorization", Factorization),
        ],
    )
):
    """How far the fibre's equation is from minimal.

    Attributes:
        ratio (Fraction): ``D(n) / delta_min`` of the fibre.
        rad_divides (bool): Whether ``rad(D(n))`` divides ``rho * N``.
        invariants (GlobalInvariants): Conductor data of the fibre.
        factorization (Factorization): Factorization of ``D(n)``.
    """


class IdentityReport(
    NamedTuple(
        "_IdentityReport",
        [
            ("trials", int),
            ("quadratic_failures", Tuple[QuadraticGPF, ...]),
            ("cubic_failures", Tuple[CubicGPF, ...]),
        ],
    )
):
    @property
    def ok(self) -> bool:
        return not self.quadratic_failures and not self.cubic_failures


def make_surface(A: PolyLike, B: PolyLike) -> SurfaceSpec:
    """Validate ``(A, B)`` and derive ``D``, ``rho`` and the bad-fibre set.

    Raises:
        DomainError: If ``A`` and ``B`` share a factor over Q, are both constant, or give a zero
            discriminant.
    """
    A, B = as_poly(A), as_poly(B)
    if A.is_constant and B.is_constant:
        raise DomainError(f"A = {A} and B = {B} are both constant")
    g = gcd_over_Q(A, B)
    if g.degree > 0:
        raise DomainError(f"A = {A} and B = {B} are not coprime over Q: gcd is {g}")
    D = discriminant_poly(A, B)
    if D.is_zero:
        raise DomainError(f"A = {A} and B = {B} give the zero discriminant")
    rho = resultant(A, B)
    if rho == 0:
        raise DomainError(f"Resultant of {A} and {B} vanishes")
    if distinct_root_count(D) < 2:
        raise DomainError(f"D = {D} has fewer than two distinct complex zeros")
    return SurfaceSpec(A, B, D, rho, tuple(integer_roots(D)))


def fiber(spec: SurfaceSpec, n: int) -> WeierstrassModel:
    """The short model ``y^2 = x^3 + A(n) x + B(n)``.

    Raises:
        BadFiberError: If ``n`` is in ``spec.sigma``.
    """
    if spec.D.eval(n) == 0:
        raise BadFiberError(n, 0)
    return WeierstrassModel.short(spec.A.eval(n), spec.B.eval(n))


def quadratic_gpf(a: int, b: int, c: int) -> QuadraticGPF:
    f = QuadraticGPF(a, b, c)
    if a == 0:
        raise DomainError(f"{f.polynomial()} is not quadratic")
    if f.delta == 0:
        raise DomainError(f"{f.polynomial()} must have {_DISTINCT_ROOTS}; its discriminant is 0")
    return f


def cubic_gpf(a: int, b: int, c: int) -> CubicGPF:
    if a == 0 or c == 0:
        raise DomainError(f"(a*t+b)^3+c needs a and c nonzero, got a={a}, c={c}")
    return CubicGPF(a, b, c)


def _quadratic_coefficients(f: QuadraticGPF) -> Tuple[IntPoly, IntPoly]:
    f = quadratic_gpf(*f)
    delta = f.delta
    return IntPoly.constant(-3 * delta), IntPoly((-2 * delta * f.b, -4 * delta * f.a))


def _cubic_coefficients(f: CubicGPF) -> Tuple[IntPoly, IntPoly]:
    f = cubic_gpf(*f)
    return IntPoly((3 * f.c * f.b, 3 * f.c * f.a)), IntPoly.constant(2 * f.c * f.c)


def surface_of(family: Family) -> SurfaceSpec:
    """The elliptic surface attached to a family."""
    if isinstance(family, SurfaceSpec):
        return family
    if isinstance(family, QuadraticGPF):
        return make_surface(*_quadratic_coefficients(family))
    if isinstance(family, CubicGPF):
        return make_surface(*_cubic_coefficients(family))
    raise UsageError(f"Unknown family {family!r}")


def gpf_polynomial(family: Family) -> Optional[IntPoly]:
    """The polynomial whose values a family factors, or ``None`` for a bare surface."""
    if isinstance(family, (QuadraticGPF, CubicGPF)):
        return family.polynomial()
    return None


def quadratic_curve(f: QuadraticGPF, n: int) -> WeierstrassModel:
    """``y^2 = x^3 - 3 delta x - 2 delta (2 a n + b)``."""
    A, B = _quadratic_coefficients(f)
    return WeierstrassModel.short(A.eval(n), B.eval(n))


def cubic_curve(f: CubicGPF, n: int) -> WeierstrassModel:
    """``y^2 = x^3 + 3c(a n + b) x + 2c^2``."""
    A, B = _cubic_coefficients(f)
    return WeierstrassModel.short(A.eval(n), B.eval(n))


def identity_check(A: PolyLike, B: PolyLike, expected: PolyLike) -> IdentityCheck:
    """Compare ``discriminant_poly(A, B)`` with ``expected`` coefficient by coefficient."""
    lhs, rhs = discriminant_poly(A, B), as_poly(expected)
    return IdentityCheck(lhs == rhs, lhs, rhs)


def verify_quadratic_identity(f: QuadraticGPF) -> IdentityCheck:
    """Check ``D = -6912 delta^2 a f`` for the quadratic family of ``f``."""
    A, B = _quadratic_coefficients(f)
    return identity_check(A, B, -6912 * f.delta**2 * f.a * f.polynomial())


def verify_cubic_identity(f: CubicGPF) -> IdentityCheck:
    """Check ``D = -1728 c^3 f`` for the cubic family of ``f``."""
    A, B = _cubic_coefficients(f)
    return identity_check(A, B, -1728 * f.c**3 * f.polynomial())


def quasiminimality_report(spec: SurfaceSpec, n: int, **factor_options) -> QuasiminimalityReport:
    """Compare the fibre's discriminant ``D(n)`` with its minimal discriminant.

    Raises:
        BadFiberError: If ``n`` is in ``spec.sigma``.
    """
    E = fiber(spec, n)
    value = spec.D.eval(n)
    factorization = factorize(value, **factor_options)
    g = conductor(E, factorization)
    ratio = Fraction(value, g.delta_min)
    rad_divides = (spec.rho * g.conductor) % factorization.radical == 0
    return QuasiminimalityReport(ratio, rad_divides, g, factorization)


def frey_curve(a: int, b: int) -> WeierstrassModel:
    """``y^2 = x(x - a)(x + b)`` for coprime positive ``a``, ``b``."""
    if a < 1 or b < 1 or math.gcd(a, b) != 1:
        raise DomainError(f"({a}, {b}) is not a pair of coprime positive integers")
    return WeierstrassModel(0, b - a, 0, -a * b, 0)


def random_coprime_pair(
    rng: random.Random, max_degree: int = 3, bound: int = 20
) -> Tuple[IntPoly, IntPoly]:
    """Draw ``(A, B)`` coprime over Q, not both constant, with nonzero discriminant."""
    while True:
        A = IntPoly(
            tuple(rng.randint(-bound, bound) for _ in range(rng.randint(1, max_degree + 1)))
        )
        B = IntPoly(
            tuple(rng.randint(-bound, bound) for _ in range(rng.randint(1, max_degree + 1)))
        )
        if A.is_constant and B.is_constant:
            continue
        if A.is_zero and B.is_zero:
            continue
        if gcd_over_Q(A, B).degree > 0:
            continue
        if discriminant_poly(A, B).is_zero:
            continue
        return A, B


def verify_identities(trials: int, seed: int, bound: int = 1000) -> IdentityReport:
    """Check both discriminant identities on ``trials`` random admissible families each."""
    rng = random.Random(seed)
    quadratic_failures: List[QuadraticGPF] = []
    cubic_failures: List[CubicGPF] = []
    for _ in range(trials):
        while True:
            f = QuadraticGPF(*(rng.randint(-bound, bound) for _ in range(3)))
            if f.a != 0 and f.delta != 0:
                break
        if not verify_quadratic_identity(f).holds:
            quadratic_failures.append(f)
    for _ in range(trials):
        while True:
            g = CubicGPF(*(rng.randint(-bound, bound) for _ in range(3)))
            if g.a != 0 and g.c != 0:
                break
        if not verify_cubic_identity(g).holds:
            cubic_failures.append(g)
    return IdentityReport(trials, tuple(quadratic_failures), tuple(cubic_failures))


def family_from_config(config: Mapping[str, str]) -> Family:
    """Build a family from ``A_poly``/``B_poly`` texts or a ``quadratic``/``cubic`` triple.

    Raises:
        UsageError: If not exactly one family form is given.
    """
    given = {key for key, value in config.items() if value}
    if given == {"A_poly", "B_poly"}:
        return make_surface(parse_poly(config["A_poly"]), parse_poly(config["B_poly"]))
    if given == {"quadratic"}:
        return quadratic_gpf(*parse_triple(config["quadratic"]))
    if given == {"cubic"}:
        return cubic_gpf(*parse_triple(config["cubic"]))
    raise UsageError(
        f"Expected A_poly and B_poly, or quadratic, or cubic; got {sorted(given) or 'nothing'}"
    )
