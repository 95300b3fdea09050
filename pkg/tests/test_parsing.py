import pytest

from dagster_szpiro.errors import UsageError
from dagster_szpiro.parsing import parse_poly, parse_triple


@pytest.mark.parametrize(
    "text,expected",
    [
        ("x^2+1", (1, 0, 1)),
        ("1,0,1", (1, 0, 1)),
        ("1, 0, 1", (1, 0, 1)),
        ("-5,3", (-5, 3)),
        ("7", (7,)),
        ("n**2 + n + 1", (1, 1, 1)),
        ("(2*t+1)**3 - 5", (-4, 6, 12, 8)),
        ("-x^2", (0, 0, -1)),
        ("2^3^2", (512,)),
        ("x - -3", (3, 1)),
        ("x*(x-1)*(x+1)", (0, -1, 0, 1)),
        ("-110592*t^2 - 110592", (-110592, 0, -110592)),
        ("(x-1)^2 - (x^2 - 2*x + 1)", ()),
    ],
)
def test_parse_poly(text, expected):
    assert parse_poly(text).coeffs == expected


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("", "Empty"),
        ("x*y", "Second variable 'y'"),
        ("x^-1", "nonnegative integer"),
        ("x^x", "nonnegative integer"),
        ("x +", "end of input"),
        ("(x+1", "Expected ')'"),
        ("x $ 1", "position 2"),
        ("3x", "Unexpected 'x'"),
    ],
)
def test_parse_poly_rejects(text, fragment):
    with pytest.raises(UsageError) as error:
        parse_poly(text)
    assert fragment in str(error.value)


def test_parse_poly_with_variable():
    assert parse_poly("n+1", variable="n").coeffs == (1, 1)
    with pytest.raises(UsageError):
        parse_poly("t+1", variable="n")


@pytest.mark.parametrize(
    "text,expected", [("1,0,1", (1, 0, 1)), (" -2, 1,-1 ", (-2, 1, -1)), ("0,0,12", (0, 0, 12))]
)
def test_parse_triple(text, expected):
    assert parse_triple(text) == expected


@pytest.mark.parametrize("text", ["1,2", "a,b,c", "1,2,3,4", ""])
def test_parse_triple_rejects(text):
    with pytest.raises(UsageError):
        parse_triple(text)
