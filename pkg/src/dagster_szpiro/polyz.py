import math
from dataclasses import dataclass
from functools import reduce
from typing import List, Sequence, Tuple, Union

import gmpy2

from dagster_szpiro.arith import divisors
from dagster_szpiro.errors import DomainError

# Above this size roots mod p are counted with X^p - X instead of by enumeration.
_ENUMERATION_LIMIT = 64


@dataclass(frozen=True)
class IntPoly:
    """Dense univariate polynomial with integer coefficients.

    Coefficients are stored in ascending degree order and normalised so that the leading
    coefficient is nonzero; the zero polynomial has no coefficients and degree -1.
    """

    coeffs: Tuple[int, ...] = ()

    def __post_init__(self):
        coeffs = [int(c) for c in self.coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @classmethod
    def constant(cls, c: int) -> "IntPoly":
        return cls((c,))

    @classmethod
    def monomial(cls, c: int, k: int) -> "IntPoly":
        return cls((0,) * k + (c,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_constant(self) -> bool:
        return self.degree <= 0

    def eval(self, n: int) -> int:
        """Exact value at ``n`` by Horner's rule."""
        value = 0
        for c in reversed(self.coeffs):
            value = value * n + c
        return value

    __call__ = eval

    def derivative(self) -> "IntPoly":
        return IntPoly(tuple(k * c for k, c in enumerate(self.coeffs))[1:])

    def content(self) -> int:
        return reduce(math.gcd, self.coeffs, 0)

    def primitive_part(self) -> "IntPoly":
        """The polynomial divided by its content, with positive leading coefficient."""
        if self.is_zero:
            return self
        g = self.content()
        if self.leading < 0:
            g = -g
        return IntPoly(tuple(c // g for c in self.coeffs))

    def _coerce(self, other) -> "IntPoly":
        if isinstance(other, IntPoly):
            return other
        if isinstance(other, int):
            return IntPoly.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        size = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (size - len(self.coeffs))
        b = other.coeffs + (0,) * (size - len(other.coeffs))
        return IntPoly(tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __neg__(self) -> "IntPoly":
        return IntPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero or other.is_zero:
            return IntPoly()
        product = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    product[i + j] += x * y
        return IntPoly(tuple(product))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "IntPoly":
        if k < 0:
            raise DomainError("Negative powers of polynomials are not polynomials")
        result, base = IntPoly.constant(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __str__(self) -> str:
        return self.format("t")

    def format(self, variable: str = "t") -> str:
        if self.is_zero:
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            magnitude = abs(c)
            if k == 0:
                body = str(magnitude)
            else:
                power = variable if k == 1 else f"{variable}^{k}"
                body = power if magnitude == 1 else f"{magnitude}*{power}"
            terms.append((sign, body))
        first_sign, first_body = terms[0]
        text = ("-" if first_sign == "-" else "") + first_body
        return text + "".join(f"{sign}{body}" for sign, body in terms[1:])


PolyLike = Union[IntPoly, int, Sequence[int]]


def as_poly(value: PolyLike) -> IntPoly:
    """Coerce an integer or an ascending coefficient sequence into an ``IntPoly``."""
    if isinstance(value, IntPoly):
        return value
    if isinstance(value, int):
        return IntPoly.constant(value)
    return IntPoly(tuple(value))


def pseudo_remainder(f: IntPoly, g: IntPoly) -> IntPoly:
    """Remainder of ``lc(g)^(deg f - deg g + 1) * f`` divided by ``g``, exact over the integers."""
    if g.is_zero:
        raise DomainError("Pseudo-division by the zero polynomial")
    if f.degree < g.degree:
        return f
    remainder = list(f.coeffs)
    lead = g.leading
    exponent = f.degree - g.degree + 1
    while remainder and len(remainder) - 1 >= g.degree:
        shift = len(remainder) - 1 - g.degree
        coef = remainder[-1]
        remainder = [lead * c for c in remainder]
        for i, gc in enumerate(g.coeffs):
            remainder[shift + i] -= coef * gc
        while remainder and remainder[-1] == 0:
            remainder.pop()
        exponent -= 1
    return IntPoly(tuple(lead**exponent * c for c in remainder))


def gcd_over_Q(f: IntPoly, g: IntPoly) -> IntPoly:
    """Primitive integer generator of the gcd of ``f`` and ``g`` over the rationals.

    A result of degree 0 means the inputs are coprime over Q.

    Raises:
        DomainError: If both inputs are zero.
    """
    f, g = as_poly(f), as_poly(g)
    if f.is_zero and g.is_zero:
        raise DomainError("gcd of two zero polynomials is undefined")
    a, b = f.primitive_part(), g.primitive_part()
    if a.degree < b.degree:
        a, b = b, a
    while not b.is_zero:
        a, b = b, pseudo_remainder(a, b).primitive_part()
    return a.primitive_part()


def resultant(f: IntPoly, g: IntPoly) -> int:
    """Resultant of two nonzero integer polynomials by the subresultant PRS.

    Constant arguments follow ``Res(f, c) = c^deg(f)`` and ``Res(c, g) = c^deg(g)``.

    Raises:
        DomainError: If either input is zero.
    """
    f, g = as_poly(f), as_poly(g)
    if f.is_zero or g.is_zero:
        raise DomainError("Resultant with the zero polynomial is undefined")
    if g.degree == 0:
        return g.leading**f.degree
    if f.degree == 0:
        return f.leading**g.degree

    sign = 1
    a, b = f, g
    if a.degree < b.degree:
        a, b = b, a
        if a.degree % 2 and b.degree % 2:
            sign = -sign
    ca, cb = a.content(), b.content()
    a = IntPoly(tuple(c // ca for c in a.coeffs))
    b = IntPoly(tuple(c // cb for c in b.coeffs))
    scale = ca**b.degree * cb**a.degree
    g_, h = 1, 1
    while True:
        delta = a.degree - b.degree
        if a.degree % 2 and b.degree % 2:
            sign = -sign
        r = pseudo_remainder(a, b)
        if r.is_zero:
            return 0
        a = b
        divisor = g_ * h**delta
        b = IntPoly(tuple(c // divisor for c in r.coeffs))
        g_ = a.leading
        h = g_**delta // h ** (delta - 1) if delta >= 1 else h
        if b.degree == 0:
            break
    h = b.leading**a.degree // h ** (a.degree - 1)
    return sign * scale * h


def distinct_root_count(f: IntPoly) -> int:
    """Number of distinct complex roots, ``deg f - deg gcd(f, f')``.

    Raises:
        DomainError: If ``f`` is the zero polynomial.
    """
    f = as_poly(f)
    if f.is_zero:
        raise DomainError("The zero polynomial has infinitely many roots")
    if f.is_constant:
        return 0
    return f.degree - gcd_over_Q(f, f.derivative()).degree


def integer_roots(f: IntPoly) -> List[int]:
    """Sorted integer zeros of ``f``.

    Candidates are the signed divisors of the trailing nonzero coefficient; each one is checked
    by exact evaluation.

    Raises:
        DomainError: If ``f`` is the zero polynomial.
    """
    f = as_poly(f)
    if f.is_zero:
        raise DomainError("The zero polynomial vanishes everywhere")
    roots = set()
    trailing = 0
    while f.coeffs[trailing] == 0:
        trailing += 1
    if trailing:
        roots.add(0)
    reduced = IntPoly(f.coeffs[trailing:])
    if not reduced.is_constant:
        for d in divisors(reduced.coeffs[0]):
            for candidate in (d, -d):
                if reduced.eval(candidate) == 0:
                    roots.add(candidate)
    return sorted(roots)


def discriminant_poly(A: PolyLike, B: PolyLike) -> IntPoly:
    """The discriminant ``-16(4A^3 + 27B^2)`` of ``y^2 = x^3 + A x + B``."""
    A, B = as_poly(A), as_poly(B)
    return -16 * (4 * A**3 + 27 * B**2)


def _trim(coeffs: List[int]) -> List[int]:
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def _rem_mod_p(a: List[int], b: List[int], p: int) -> List[int]:
    a = list(a)
    inverse = int(gmpy2.invert(b[-1], p))
    while len(a) >= len(b):
        coef = a[-1] * inverse % p
        shift = len(a) - len(b)
        for i, bc in enumerate(b):
            a[shift + i] = (a[shift + i] - coef * bc) % p
        _trim(a)
    return a


def _mul_mod_p(a: List[int], b: List[int], modulus: List[int], p: int) -> List[int]:
    if not a or not b:
        return []
    product = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            product[i + j] = (product[i + j] + x * y) % p
    return _rem_mod_p(_trim(product), modulus, p)


def count_roots_mod_p(coeffs: Sequence[int], p: int) -> int:
    """Number of distinct roots in F_p of the polynomial with ascending ``coeffs``.

    Raises:
        DomainError: If the polynomial vanishes identically mod ``p``.
    """
    g = _trim([c % p for c in coeffs])
    if not g:
        raise DomainError(f"Polynomial vanishes identically mod {p}")
    if len(g) == 1:
        return 0
    if p <= _ENUMERATION_LIMIT:
        return sum(1 for x in range(p) if IntPoly(tuple(g)).eval(x) % p == 0)

    # gcd(X^p - X, g) is the product of the distinct linear factors of g.
    power, base, e = [1], [0, 1], p
    while e:
        if e & 1:
            power = _mul_mod_p(power, base, g, p)
        base = _mul_mod_p(base, base, g, p)
        e >>= 1
    h = list(power) + [0] * max(0, 2 - len(power))
    h[1] = (h[1] - 1) % p
    a, b = g, _trim(h)
    while b:
        a, b = b, _rem_mod_p(a, b, p)
    return len(a) - 1
