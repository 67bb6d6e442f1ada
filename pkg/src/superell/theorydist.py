"""
Exact limiting distributions of per-x point counts, with rational masses.

All masses are Fractions; floating point only appears when a caller asks
for a rendering.
"""

import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from types import MappingProxyType
from typing import Any, NamedTuple

from superell.errors import TheoryError
from superell.ff import prime_power
from superell.polyring import zeta_value


class Variant(StrEnum):
    SINGULAR = "singular"
    NORMALIZATION = "normalization"


class ExactDist(Mapping[int, Fraction]):
    """
    A probability mass function on nonnegative integers with exact masses.

    Colliding outcomes are merged by adding their masses and zero masses are
    dropped, so equal distributions compare equal.
    """

    __slots__ = ("_masses",)

    def __init__(self, masses: Mapping[int, Fraction] | Iterable[tuple[int, Fraction]]) -> None:
        merged: dict[int, Fraction] = {}
        items = masses.items() if isinstance(masses, Mapping) else masses
        for outcome, mass in items:
            if not isinstance(outcome, int) or outcome < 0:
                raise TheoryError(f"outcomes must be nonnegative integers, got {outcome!r}")
            mass = Fraction(mass)
            if mass < 0:
                raise TheoryError(f"negative mass {mass} at outcome {outcome}")
            merged[outcome] = merged.get(outcome, Fraction(0)) + mass
        cleaned = {k: merged[k] for k in sorted(merged) if merged[k] != 0}
        total = sum(cleaned.values(), Fraction(0))
        if total != 1:
            raise TheoryError(f"masses sum to {total}, not 1")
        self._masses = MappingProxyType(cleaned)

    @classmethod
    def degenerate(cls, outcome: int) -> "ExactDist":
        return cls({outcome: Fraction(1)})

    def __getitem__(self, outcome: int) -> Fraction:
        return self._masses[outcome]

    def __iter__(self) -> Iterator[int]:
        return iter(self._masses)

    def __len__(self) -> int:
        return len(self._masses)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ExactDist):
            return dict(self._masses) == dict(other._masses)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self._masses.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v}" for k, v in self._masses.items())
        return f"ExactDist({{{body}}})"

    def prob(self, outcome: Any) -> Fraction:
        return self._masses.get(outcome, Fraction(0))

    def support(self) -> tuple[int, ...]:
        return tuple(self._masses)

    def mean(self) -> Fraction:
        return sum((k * p for k, p in self._masses.items()), Fraction(0))

    def convolve(self, other: "ExactDist") -> "ExactDist":
        """Distribution of X + Y for independent X ~ self, Y ~ other."""
        out: dict[int, Fraction] = {}
        for a, pa in self._masses.items():
            for b, pb in other._masses.items():
                out[a + b] = out.get(a + b, Fraction(0)) + pa * pb
        return ExactDist(out)

    def to_json(self) -> dict[str, dict[str, str]]:
        """outcome -> {num, den} with unbounded integers as decimal strings."""
        return {
            str(k): {"num": str(v.numerator), "den": str(v.denominator)}
            for k, v in self._masses.items()
        }


@dataclass(frozen=True)
class TheoremParams:
    q: int
    m: int
    n: int
    variant: Variant = Variant.SINGULAR

    def __post_init__(self) -> None:
        if prime_power(self.q) is None:
            raise TheoryError(f"q = {self.q} is not a prime power")
        if self.m < 2:
            raise TheoryError(f"m must be at least 2, got {self.m}")
        if math.gcd(self.q, self.m) != 1:
            raise TheoryError(f"gcd(q, m) = gcd({self.q}, {self.m}) must be 1")
        if self.n < 2:
            raise TheoryError(f"n must be at least 2, got {self.n}")


def _check_variant(params: TheoremParams, variant: Variant) -> None:
    if params.variant is not variant:
        raise TheoryError(f"expected {variant.value} parameters, got {params.variant.value}")


def valuation_weight(q: int, n: int, s: int) -> Fraction:
    """Limiting probability that an n-th power-free f has valuation s at a fixed x0."""
    return Fraction(1, q**s) * (1 - Fraction(1, q)) / (1 - Fraction(1, q**n))


def xj_singular(params: TheoremParams) -> ExactDist:
    """Per-site count on the affine model: outcomes 0, 1 and gcd(m, q-1)."""
    _check_variant(params, Variant.SINGULAR)
    q, n = params.q, params.n
    g = math.gcd(params.m, q - 1)
    unramified = valuation_weight(q, n, 0)
    return ExactDist(
        [
            (0, (1 - Fraction(1, g)) * unramified),
            (1, (Fraction(1, q) - Fraction(1, q**n)) / (1 - Fraction(1, q**n))),
            (g, Fraction(1, g) * unramified),
        ]
    )


def xj_normalization(params: TheoremParams) -> ExactDist:
    """
    Per-site count on the normalization.

    Valuation s (0 <= s < n) occurs with weight q^-s (1 - q^-1) / (1 - q^-n);
    given s, the count is N_s = gcd(m, s, q-1) with probability 1/N_s and 0
    otherwise. The zero outcome carries the same q^-s weight as the others.
    """
    _check_variant(params, Variant.NORMALIZATION)
    q, m, n = params.q, params.m, params.n
    masses: list[tuple[int, Fraction]] = []
    for s in range(n):
        w = valuation_weight(q, n, s)
        big_n = math.gcd(math.gcd(m, s), q - 1)
        masses.append((big_n, w / big_n))
        masses.append((0, w * (1 - Fraction(1, big_n))))
    return ExactDist(masses)


def printed_normalization_masses(params: TheoremParams) -> dict[int, Fraction]:
    """
    The normalization masses with P(0) in the unweighted form
    sum_s (1 - 1/N_s)(1 - q^-1)/(1 - q^-n).

    Not a pmf in general (for composite m the masses can exceed 1 in total),
    so it is returned as raw masses for discrepancy reports only.
    """
    _check_variant(params, Variant.NORMALIZATION)
    q, m, n = params.q, params.m, params.n
    base = (1 - Fraction(1, q)) / (1 - Fraction(1, q**n))
    masses: dict[int, Fraction] = {0: Fraction(0)}
    for s in range(n):
        big_n = math.gcd(math.gcd(m, s), q - 1)
        masses[0] += (1 - Fraction(1, big_n)) * base
        masses[big_n] = masses.get(big_n, Fraction(0)) + valuation_weight(q, n, s) / big_n
    return {k: v for k, v in sorted(masses.items()) if v != 0}


def xj(params: TheoremParams) -> ExactDist:
    if params.variant is Variant.SINGULAR:
        return xj_singular(params)
    return xj_normalization(params)


def total_dist(x: ExactDist, q: int) -> ExactDist:
    """Exact q-fold convolution of x with itself (q = 0 gives the point mass at 0)."""
    if q < 0:
        raise TheoryError(f"number of sites must be nonnegative, got {q}")
    result = ExactDist.degenerate(0)
    base = x
    while q:
        if q & 1:
            result = result.convolve(base)
        q >>= 1
        if q:
            base = base.convolve(base)
    return result


def joint_prob(x: ExactDist, k: Sequence[int]) -> Fraction:
    """P(X_i = k_i for all i) for independent sites distributed as x."""
    out = Fraction(1)
    for ki in k:
        out *= x.prob(ki)
        if out == 0:
            break
    return out


def mean(x: ExactDist) -> Fraction:
    return x.mean()


@dataclass(frozen=True)
class JointTheory:
    """Product law over the q sites, queried one outcome vector at a time."""

    site: ExactDist
    q: int

    def prob(self, outcome: Sequence[int]) -> Fraction:
        if len(outcome) != self.q:
            return Fraction(0)
        return joint_prob(self.site, outcome)


def interpolation_main_term(q: int, n: int, d: int, l: int) -> Fraction:
    """q^(d-l) (q-1) / (zeta(n) (1 - q^-n)^l)."""
    if not 0 <= l <= q:
        raise TheoryError(f"number of interpolation points must lie in [0, q], got {l}")
    return (
        Fraction(q) ** (d - l)
        * (q - 1)
        / (zeta_value(q, n) * (1 - Fraction(1, q**n)) ** l)
    )


def refined_main_term(q: int, n: int, d: int, s: Sequence[int]) -> Fraction:
    """Main term for prescribed valuations s_i and cofactor values at all q sites."""
    if len(s) != q:
        raise TheoryError(f"valuation vector must have length q = {q}, got {len(s)}")
    return (
        Fraction(q) ** (d - sum(s) - q)
        * (q - 1)
        / (zeta_value(q, n) * (1 - Fraction(1, q**n)) ** q)
    )


class TrigonalContrast(NamedTuple):
    degree_limit: ExactDist
    "Limit as deg f grows (normalization variant, m = n = 3)"

    signature_limit: ExactDist
    "Limit as the smallest signature entry grows, for the same cyclic trigonal covers"


def trigonal_contrast(q: int) -> TrigonalContrast:
    """The two per-site laws for cyclic trigonal curves, q = 1 mod 3."""
    if q % 3 != 1:
        raise TheoryError(f"cyclic trigonal covers need q = 1 mod 3, got q = {q}")
    u = Fraction(1, q)
    by_degree = 1 + u + u**2
    by_signature = 1 + 2 * u
    return TrigonalContrast(
        degree_limit=ExactDist(
            {
                0: Fraction(2, 3) / by_degree,
                1: (u + u**2) / by_degree,
                3: Fraction(1, 3) / by_degree,
            }
        ),
        signature_limit=ExactDist(
            {
                0: Fraction(2, 3) / by_signature,
                1: 2 * u / by_signature,
                3: Fraction(1, 3) / by_signature,
            }
        ),
    )
