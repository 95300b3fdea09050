import re
from typing import List, NamedTuple, Optional, Tuple

import parse

from dagster_szpiro.errors import UsageError
from dagster_szpiro.polyz import IntPoly

_COEFFICIENT_LIST = re.compile(r"^\s*[-+]?\d+(\s*,\s*[-+]?\d+)+\s*$")
_TOKEN = re.compile(r"\s*(?:(?P<number>\d+)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*^()]))")

_BINDING_POWER = {"+": 10, "-": 10, "*": 20, "^": 30, "**": 30}
_UNARY_POWER = 25


class _Token(NamedTuple):
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = _TOKEN.match(text, position)
        if match is None:
            offset = position + len(text[position:]) - len(text[position:].lstrip())
            raise UsageError(f"Unexpected character {text[offset]!r} at position {offset}")
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(_Token(kind, match.group(kind), start))
        position = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _PrattParser:
    """Top-down operator precedence parser producing ``IntPoly`` values directly."""

    def __init__(self, text: str, variable: Optional[str]):
        self._tokens = _tokenize(text)
        self._index = 0
        self.variable = variable

    def _peek(self) -> _Token:
        return self._tokens[self._index]

    def _advance(self) -> _Token:
        token = self._tokens[self._index]
        self._index += 1
        return token

    def _expect(self, text: str) -> None:
        token = self._advance()
        if token.text != text:
            found = token.text or "end of input"
            raise UsageError(f"Expected {text!r} at position {token.position}, found {found!r}")

    def parse(self) -> IntPoly:
        value = self._expression(0)
        token = self._peek()
        if token.kind != "end":
            raise UsageError(f"Unexpected {token.text!r} at position {token.position}")
        return value

    def _expression(self, right_binding: int) -> IntPoly:
        left = self._prefix(self._advance())
        while right_binding < _BINDING_POWER.get(self._peek().text, 0):
            left = self._infix(self._advance(), left)
        return left

    def _prefix(self, token: _Token) -> IntPoly:
        if token.kind == "number":
            return IntPoly.constant(int(token.text))
        if token.kind == "name":
            if self.variable is None:
                self.variable = token.text
            elif token.text != self.variable:
                raise UsageError(
                    f"Second variable {token.text!r} at position {token.position}; "
                    f"polynomials are univariate in {self.variable!r}"
                )
            return IntPoly.monomial(1, 1)
        if token.text == "(":
            value = self._expression(0)
            self._expect(")")
            return value
        if token.text == "-":
            return -self._expression(_UNARY_POWER)
        if token.text == "+":
            return self._expression(_UNARY_POWER)
        found = token.text or "end of input"
        raise UsageError(f"Unexpected {found!r} at position {token.position}")

    def _infix(self, token: _Token, left: IntPoly) -> IntPoly:
        if token.text == "+":
            return left + self._expression(10)
        if token.text == "-":
            return left - self._expression(10)
        if token.text == "*":
            return left * self._expression(20)
        # Exponentiation is right associative and needs a nonnegative integer exponent.
        exponent = self._expression(_BINDING_POWER[token.text] - 1)
        if not exponent.is_constant or exponent.leading < 0:
            raise UsageError(
                f"Exponent at position {token.position} must be a nonnegative integer constant"
            )
        return left ** exponent.leading


def parse_poly(text: str, variable: Optional[str] = None) -> IntPoly:
    """Parse polynomial text.

    Two forms are accepted: an ascending coefficient list ``c0,c1,...,cd`` such as ``1,0,1``,
    or an expression in one variable such as ``x^2 + 1`` or ``(2*t+1)**3 - 5``.

    Args:
        text (str): The polynomial text.
        variable (Optional[str]): The variable symbol. By default the first identifier seen.

    Raises:
        UsageError: If the text is not a polynomial, with the offending position.
    """
    if not text or not text.strip():
        raise UsageError("Empty polynomial text")
    if _COEFFICIENT_LIST.match(text):
        return IntPoly(tuple(int(c) for c in text.split(",")))
    return _PrattParser(text, variable).parse()


def parse_triple(text: str) -> Tuple[int, int, int]:
    """Parse an ``a,b,c`` triple of integers."""
    result = parse.parse("{a},{b},{c}", "".join(text.split()))
    try:
        return int(result["a"]), int(result["b"]), int(result["c"])
    except (TypeError, ValueError):
        raise UsageError(f"Expected three comma separated integers, got {text!r}") from None
