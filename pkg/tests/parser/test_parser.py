from pathlib import Path

import pytest

from superell.errors import ConfigError, PolynomialError
from superell.ff import make_field
from superell.parser import PolynomialParser, parse_int_list, parse_range
from superell.polyring import Poly

F3 = make_field(3)
F9 = make_field(3, 2)


def test_parse_prime_field():
    parser = PolynomialParser(F3)
    f = parser.parse("1,0,2")

    assert f == Poly(F3, (1, 0, 2))
    assert str(f) == "2*x^2 + 1"


def test_parse_strips_whitespace_and_trailing_zeros():
    parser = PolynomialParser(F3)
    f = parser.parse(" 0, 1 ,0,0")

    assert f.coeffs == (0, 1)
    assert f.degree == 1


def test_parse_rejects_bad_entries():
    parser = PolynomialParser(F3)

    with pytest.raises(PolynomialError):
        parser.parse("1,,2")
    with pytest.raises(PolynomialError):
        parser.parse("")
    with pytest.raises(PolynomialError):
        parser.parse("1,3")
    with pytest.raises(PolynomialError):
        parser.parse("1,x")


def test_integration():
    source_path = Path(__file__).parent / "examples" / "f9.txt"
    contents = source_path.read_text()

    parser = PolynomialParser(F9)
    polys = [parser.parse(line) for line in contents.splitlines() if line.strip()]

    # Entries are base-3 indices against 1, x with x^2 = -1
    assert [f.degree for f in polys] == [2, 2, 3, 2]
    assert polys[2].coeffs == (2, 8, 0, 1)
    assert F9.digits(polys[3].coeffs[0]) == [1, 1]


def test_parse_range():
    assert parse_range("2..5") == [2, 3, 4, 5]
    assert parse_range(" 7 ") == [7]
    assert parse_range("3..3") == [3]


def test_parse_range_errors():
    with pytest.raises(ConfigError, match="empty range"):
        parse_range("5..2")
    with pytest.raises(ConfigError):
        parse_range("a..b")
    with pytest.raises(ConfigError):
        parse_range("1...3")


def test_parse_int_list():
    assert parse_int_list("3,4,5") == [3, 4, 5]
    assert parse_int_list("2..4,7") == [2, 3, 4, 7]

    with pytest.raises(ConfigError):
        parse_int_list("3,,5")
