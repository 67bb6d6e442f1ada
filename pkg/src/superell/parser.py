import re
from typing import List

from superell.errors import ConfigError, FieldError, PolynomialError
from superell.ff import FieldSpec
from superell.polyring import Poly

_RANGE = re.compile(r"^\s*(-?\d+)\s*(?:\.\.\s*(-?\d+)\s*)?$")


class PolynomialParser:
    """Reads the comma-separated polynomial text format for one field."""

    def __init__(self, spec: FieldSpec):
        self.spec = spec

    def parse(self, text: str) -> Poly:
        """
        Parses low-to-high element indices, e.g. "1,0,2" is 2x^2 + 1 over F_3.

        For extension fields each entry is the base-p index of the element
        against the modulus basis.

        Raises:
            PolynomialError: If an entry is not an element of the field.
        """
        entries = [e for e in text.replace(" ", "").split(",")]
        if not entries or any(e == "" for e in entries):
            raise PolynomialError(f"malformed polynomial text: {text!r}")
        try:
            coeffs = tuple(self.spec.parse_element(e) for e in entries)
        except FieldError as e:
            raise PolynomialError(f"malformed polynomial text {text!r}: {e}") from None
        return Poly(self.spec, coeffs)


def parse_range(text: str) -> List[int]:
    """
    Parses an inclusive range "a..b" or a single integer "a".

    Raises:
        ConfigError: If the text is malformed or the range is empty.
    """
    match = _RANGE.match(text)
    if not match:
        raise ConfigError(f"expected 'a..b' or an integer, got {text!r}")
    lo = int(match.group(1))
    hi = int(match.group(2)) if match.group(2) is not None else lo
    if hi < lo:
        raise ConfigError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def parse_int_list(text: str) -> List[int]:
    """Parses "3,4,5" and ranges such as "2..4" or mixtures "2..4,7"."""
    out: List[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            raise ConfigError(f"empty entry in list {text!r}")
        out.extend(parse_range(chunk))
    return out
