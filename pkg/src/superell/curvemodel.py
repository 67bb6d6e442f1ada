"""
Point counts on y^m = f(x) and on its normalization, one x-value at a time.

Only degree-1 affine points are counted, indexed by their x-coordinate
x0 in F_q. Points at infinity are not modelled.
"""

import math
from dataclasses import dataclass
from typing import Any, Optional

from superell.config import DEFAULT_MAX_FIELD_ORDER
from superell.errors import (
    GeometricallyReducibleError,
    PolynomialError,
    SplittingFieldTooLarge,
    TheoryError,
)
from superell.ff import FieldElement, FieldSpec, make_field, prime_factors
from superell.polyring import (
    Poly,
    SquarefreeDecomposition,
    _eval,
    _valuation_and_unit,
    squarefree_decompose,
)


@dataclass(frozen=True)
class SuperellipticModel:
    """The affine curve C_f: y^m = f(x) over F_q."""

    spec: FieldSpec
    m: int
    f: Poly

    def __post_init__(self) -> None:
        if self.m < 2:
            raise TheoryError(f"m must be at least 2, got {self.m}")
        if math.gcd(self.spec.q, self.m) != 1:
            raise TheoryError(f"gcd(q, m) = gcd({self.spec.q}, {self.m}) must be 1")
        if self.f.spec != self.spec:
            raise PolynomialError("f is defined over a different field")
        if self.f.is_zero:
            raise PolynomialError("y^m = 0 is not a superelliptic model")


@dataclass(frozen=True)
class LocalPointData:
    """Counts over a single x-value; normalization_count None means undefined."""

    x0: int
    s: int
    a: int
    affine_count: int
    normalization_count: Optional[int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "x0": self.x0,
            "s": self.s,
            "a": self.a,
            "affine": self.affine_count,
            "normalized": "undefined"
            if self.normalization_count is None
            else self.normalization_count,
        }


@dataclass(frozen=True)
class CurveProfile:
    m: int
    n: int
    sites: tuple[LocalPointData, ...]
    smooth: bool
    geometrically_irreducible: bool
    irreducible_over_Fq: bool
    n_power_free: bool

    @property
    def total_affine(self) -> int:
        return sum(site.affine_count for site in self.sites)

    @property
    def total_normalized(self) -> Optional[int]:
        counts = [site.normalization_count for site in self.sites]
        if any(c is None for c in counts):
            return None
        return sum(c for c in counts if c is not None)

    def to_dict(self) -> dict[str, Any]:
        total_normalized = self.total_normalized
        return {
            "sites": [site.to_dict() for site in self.sites],
            "flags": {
                "smooth": self.smooth,
                "geometrically_irreducible": self.geometrically_irreducible,
                "irreducible": self.irreducible_over_Fq,
                "n": self.n,
                "n_power_free": self.n_power_free,
            },
            "totals": {
                "affine": self.total_affine,
                "normalized": "undefined" if total_normalized is None else total_normalized,
            },
        }


def _index(x0: int | FieldElement) -> int:
    return x0.value if isinstance(x0, FieldElement) else x0


def _require_nonconstant(model: SuperellipticModel) -> None:
    if model.f.is_constant:
        raise PolynomialError("irreducibility is only classified for nonconstant f")


def local_normalization_count(spec: FieldSpec, m: int, s: int, a: int) -> int:
    """gcd(d, q-1) if a is a d-th power, d = gcd(m, s) (gcd(m, 0) = m), else 0."""
    d = math.gcd(m, s)
    return math.gcd(d, spec.q - 1) if spec.is_rth_power(a, d) else 0


def geometrically_irreducible_from(dec: SquarefreeDecomposition, m: int) -> bool:
    return bool(dec.parts) and math.gcd(m, dec.bar_power) == 1


def irreducible_over_Fq_from(spec: FieldSpec, dec: SquarefreeDecomposition, m: int) -> bool:
    """
    Binomial criterion for y^m - f over F_q(x).

    Reducible iff f is an l-th power in F_q(x) for a prime l | m, or 4 | m
    and f lies in -4 * F_q(x)^4.
    """
    if not dec.parts:
        return False
    for ell in prime_factors(m):
        if all(i % ell == 0 for i in dec.multiplicities) and spec.is_rth_power(dec.unit, ell):
            return False
    if m % 4 == 0 and dec.bar_power % 4 == 0:
        minus_four = spec.neg(spec.from_int(4))
        if minus_four and spec.is_rth_power(spec.div(dec.unit, minus_four), 4):
            return False
    return True


def affine_count_at(model: SuperellipticModel, x0: int | FieldElement) -> int:
    """Number of y in F_q with y^m = f(x0)."""
    F = model.spec
    return F.root_count(_eval(F, list(model.f.coeffs), _index(x0)), model.m)


def is_geometrically_irreducible(model: SuperellipticModel) -> bool:
    """
    y^m - f irreducible over the algebraic closure iff gcd(m, bar_power(f)) = 1.

    Raises:
        PolynomialError: If f is constant.
    """
    _require_nonconstant(model)
    return geometrically_irreducible_from(squarefree_decompose(model.f), model.m)


def is_irreducible_over_Fq(model: SuperellipticModel) -> bool:
    """
    Raises:
        PolynomialError: If f is constant.
    """
    _require_nonconstant(model)
    return irreducible_over_Fq_from(model.spec, squarefree_decompose(model.f), model.m)


def _require_geometrically_irreducible(model: SuperellipticModel) -> None:
    if model.f.is_constant or not is_geometrically_irreducible(model):
        raise GeometricallyReducibleError(
            f"y^{model.m} = {model.f} is geometrically reducible; its normalization count is undefined"
        )


def normalization_count_at(model: SuperellipticModel, x0: int | FieldElement) -> int:
    """
    Degree-1 points of the normalization lying over x = x0.

    Raises:
        GeometricallyReducibleError: If gcd(m, bar_power(f)) != 1.
    """
    _require_geometrically_irreducible(model)
    F = model.spec
    s, a = _valuation_and_unit(F, list(model.f.coeffs), _index(x0))
    return local_normalization_count(F, model.m, s, a)


def frobenius_fixed_roots(
    spec: FieldSpec, d: int, a: int, *, max_order: Optional[int] = None
) -> int:
    """
    Count roots of z^d = a fixed by z -> z^q, computed in a splitting extension.

    The extension F_{q^e} is the smallest one in which z^d = a has d roots.

    Raises:
        SplittingFieldTooLarge: If q^e would exceed the field bound.
    """
    bound = DEFAULT_MAX_FIELD_ORDER if max_order is None else max_order
    e = 1
    while True:
        big_q = spec.q**e
        if big_q > bound:
            raise SplittingFieldTooLarge(
                f"z^{d} = {a} over F_{spec.q} does not split below order {bound}"
            )
        if (big_q - 1) % d == 0:
            big = make_field(spec.p, spec.k * e, max_order=bound)
            lifted = spec.embed_into(big)[a]
            if big.is_rth_power(lifted, d):
                break
        e += 1

    step = (big.q - 1) // d
    base = big.discrete_log(lifted) // d
    roots = [big.generator_power(base + j * step) for j in range(d)]
    if len(set(roots)) != d or any(big.pow(z, d) != lifted for z in roots):
        raise ArithmeticError(f"root enumeration of z^{d} = {a} in F_{big.q} is inconsistent")
    return sum(1 for z in roots if big.pow(z, spec.q) == z)


def branch_orbit_count(
    model: SuperellipticModel, x0: int | FieldElement, *, max_order: Optional[int] = None
) -> int:
    """
    Independent oracle for normalization_count_at: the branches over x0 are
    the roots of z^gcd(m,s) = a, and the degree-1 ones are those Frobenius fixes.
    """
    _require_geometrically_irreducible(model)
    F = model.spec
    s, a = _valuation_and_unit(F, list(model.f.coeffs), _index(x0))
    return frobenius_fixed_roots(F, math.gcd(model.m, s), a, max_order=max_order)


def profile(
    model: SuperellipticModel,
    n: int,
    *,
    decomposition: Optional[SquarefreeDecomposition] = None,
) -> CurveProfile:
    """Per-x local data, totals and classification flags for a model."""
    if n < 2:
        raise TheoryError(f"n must be at least 2, got {n}")
    F = model.spec
    m = model.m
    coeffs = list(model.f.coeffs)

    if model.f.is_constant:
        c = coeffs[0]
        count = F.root_count(c, m)
        sites = tuple(LocalPointData(x0, 0, c, count, None) for x0 in F.elements())
        return CurveProfile(
            m=m,
            n=n,
            sites=sites,
            smooth=True,
            geometrically_irreducible=False,
            irreducible_over_Fq=False,
            n_power_free=True,
        )

    dec = decomposition if decomposition is not None else squarefree_decompose(model.f)
    geometric = geometrically_irreducible_from(dec, m)
    records = []
    for x0 in F.elements():
        s, a = _valuation_and_unit(F, coeffs, x0)
        affine = 1 if s else F.root_count(a, m)
        normalized = local_normalization_count(F, m, s, a) if geometric else None
        records.append(LocalPointData(x0, s, a, affine, normalized))
    return CurveProfile(
        m=m,
        n=n,
        sites=tuple(records),
        smooth=dec.is_squarefree,
        geometrically_irreducible=geometric,
        irreducible_over_Fq=irreducible_over_Fq_from(F, dec, m),
        n_power_free=dec.is_nth_power_free(n),
    )
