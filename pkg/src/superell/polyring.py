"""
Polynomials over F_q and the structural tests the curve layer needs.

Coefficient sequences run from degree 0 upwards and carry no trailing
zeros; the zero polynomial is the empty sequence with degree ZERO_DEGREE.
The underscore helpers work on plain lists so that exhaustive scans avoid
object churn; Poly wraps them for everything user-facing.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from superell.config import DEFAULT_BUDGET
from superell.errors import BudgetExceeded, FieldError, PolynomialError
from superell.ff import FieldElement, FieldSpec

ZERO_DEGREE = -1

Coeffs = list[int]


def _trim(c: Coeffs) -> Coeffs:
    while c and c[-1] == 0:
        c.pop()
    return c


def _add(F: FieldSpec, a: Coeffs, b: Coeffs) -> Coeffs:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, v in enumerate(b):
        out[i] = F.add(out[i], v)
    return _trim(out)


def _neg(F: FieldSpec, a: Coeffs) -> Coeffs:
    return [F.neg(v) for v in a]


def _sub(F: FieldSpec, a: Coeffs, b: Coeffs) -> Coeffs:
    return _add(F, a, _neg(F, b))


def _scale(F: FieldSpec, a: Coeffs, c: int) -> Coeffs:
    if c == 0:
        return []
    return [F.mul(v, c) for v in a]


def _mul(F: FieldSpec, a: Coeffs, b: Coeffs) -> Coeffs:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] = F.add(out[i + j], F.mul(x, y))
    return _trim(out)


def _divmod(F: FieldSpec, a: Coeffs, b: Coeffs) -> tuple[Coeffs, Coeffs]:
    if not b:
        raise PolynomialError("division by the zero polynomial")
    db = len(b) - 1
    if len(a) <= db:
        return [], list(a)
    inv_lead = F.inv(b[-1])
    r = list(a)
    quot = [0] * (len(a) - db)
    for i in range(len(a) - 1, db - 1, -1):
        c = r[i]
        if c:
            c = F.mul(c, inv_lead)
            shift = i - db
            quot[shift] = c
            for j in range(db + 1):
                if b[j]:
                    r[shift + j] = F.sub(r[shift + j], F.mul(c, b[j]))
    return _trim(quot), _trim(r[:db])


def _monic(F: FieldSpec, a: Coeffs) -> Coeffs:
    if not a or a[-1] == 1:
        return list(a)
    return _scale(F, a, F.inv(a[-1]))


def _gcd(F: FieldSpec, a: Coeffs, b: Coeffs) -> Coeffs:
    while b:
        a, b = b, _divmod(F, a, b)[1]
    return _monic(F, a)


def _derivative(F: FieldSpec, a: Coeffs) -> Coeffs:
    return _trim([F.mul(F.from_int(i), a[i]) for i in range(1, len(a))])


def _eval(F: FieldSpec, a: Coeffs, x0: int) -> int:
    acc = 0
    for c in reversed(a):
        acc = F.add(F.mul(acc, x0), c)
    return acc


def _pth_root(F: FieldSpec, a: Coeffs) -> Coeffs:
    """h with h^p = a, for a whose derivative vanishes (F_q is perfect)."""
    return _trim([F.pth_root(a[i]) for i in range(0, len(a), F.p)])


def _powmod(F: FieldSpec, base: Coeffs, e: int, mod: Coeffs) -> Coeffs:
    result = [1]
    base = _divmod(F, base, mod)[1]
    while e:
        if e & 1:
            result = _divmod(F, _mul(F, result, base), mod)[1]
        base = _divmod(F, _mul(F, base, base), mod)[1]
        e >>= 1
    return _divmod(F, result, mod)[1]


def _valuation_and_unit(F: FieldSpec, a: Coeffs, x0: int) -> tuple[int, int]:
    """Repeated synthetic division by (x - x0); the first nonzero remainder is the unit."""
    s = 0
    c = a
    while True:
        n = len(c) - 1
        quot = [0] * n
        acc = 0
        for i in range(n, 0, -1):
            acc = F.add(F.mul(acc, x0), c[i])
            quot[i - 1] = acc
        rem = F.add(F.mul(acc, x0), c[0])
        if rem:
            return s, rem
        c = quot
        s += 1


def _sqf_monic(F: FieldSpec, f: Coeffs) -> list[tuple[Coeffs, int]]:
    """Square-free factorization of a monic polynomial, including the p-th power branch."""
    if len(f) <= 1:
        return []
    parts: list[tuple[Coeffs, int]] = []
    c = _gcd(F, f, _derivative(F, f))
    w = _divmod(F, f, c)[0]
    i = 1
    while len(w) > 1:
        y = _gcd(F, w, c)
        fac = _divmod(F, w, y)[0]
        if len(fac) > 1:
            parts.append((fac, i))
        w = y
        c = _divmod(F, c, y)[0]
        i += 1
    if len(c) > 1:
        root = _pth_root(F, c)
        parts.extend((g, j * F.p) for g, j in _sqf_monic(F, root))
    return parts


def _ddf_count(F: FieldSpec, f: Coeffs) -> int:
    """Number of distinct irreducible factors of a monic square-free f."""
    x = [0, 1]
    count = 0
    rest = f
    h = x
    i = 0
    while len(rest) - 1 >= 2 * (i + 1):
        i += 1
        h = _powmod(F, h, F.q, rest)
        g = _gcd(F, _sub(F, h, x), rest)
        if len(g) > 1:
            count += (len(g) - 1) // i
            rest = _divmod(F, rest, g)[0]
            h = _divmod(F, h, rest)[1]
    if len(rest) > 1:
        count += 1
    return count


@dataclass(frozen=True)
class Poly:
    """A polynomial over F_q with an exact degree."""

    spec: FieldSpec
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        c = _trim(list(self.coeffs))
        for v in c:
            if not 0 <= v < self.spec.q:
                raise PolynomialError(f"coefficient {v} is not an element of F_{self.spec.q}")
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def zero(cls, spec: FieldSpec) -> "Poly":
        return cls(spec, ())

    @classmethod
    def constant(cls, spec: FieldSpec, c: int) -> "Poly":
        return cls(spec, (c,))

    @classmethod
    def x(cls, spec: FieldSpec) -> "Poly":
        return cls(spec, (0, 1))

    @classmethod
    def linear(cls, spec: FieldSpec, root: int) -> "Poly":
        """The monic polynomial x - root."""
        return cls(spec, (spec.neg(root), 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def _same_field(self, other: "Poly") -> None:
        if other.spec != self.spec:
            raise FieldError(f"mixed-field operands: F_{self.spec.q} and F_{other.spec.q}")

    def _wrap(self, c: Coeffs) -> "Poly":
        return Poly(self.spec, tuple(c))

    def __add__(self, other: "Poly") -> "Poly":
        self._same_field(other)
        return self._wrap(_add(self.spec, list(self.coeffs), list(other.coeffs)))

    def __sub__(self, other: "Poly") -> "Poly":
        self._same_field(other)
        return self._wrap(_sub(self.spec, list(self.coeffs), list(other.coeffs)))

    def __neg__(self) -> "Poly":
        return self._wrap(_neg(self.spec, list(self.coeffs)))

    def __mul__(self, other: "Poly") -> "Poly":
        self._same_field(other)
        return self._wrap(_mul(self.spec, list(self.coeffs), list(other.coeffs)))

    def __pow__(self, e: int) -> "Poly":
        if e < 0:
            raise PolynomialError("negative powers are not polynomials")
        result = [1]
        base = list(self.coeffs)
        while e:
            if e & 1:
                result = _mul(self.spec, result, base)
            base = _mul(self.spec, base, base)
            e >>= 1
        return self._wrap(result)

    def scale(self, c: int) -> "Poly":
        return self._wrap(_scale(self.spec, list(self.coeffs), c))

    def divrem(self, other: "Poly") -> tuple["Poly", "Poly"]:
        self._same_field(other)
        quot, rem = _divmod(self.spec, list(self.coeffs), list(other.coeffs))
        return self._wrap(quot), self._wrap(rem)

    def __floordiv__(self, other: "Poly") -> "Poly":
        return self.divrem(other)[0]

    def __mod__(self, other: "Poly") -> "Poly":
        return self.divrem(other)[1]

    def eval(self, x0: int | FieldElement) -> int:
        """Horner evaluation at x0 (an element index or a FieldElement)."""
        if isinstance(x0, FieldElement):
            if x0.spec != self.spec:
                raise FieldError("mixed-field operands in evaluation")
            x0 = x0.value
        return _eval(self.spec, list(self.coeffs), x0)

    __call__ = eval

    def derivative(self) -> "Poly":
        return self._wrap(_derivative(self.spec, list(self.coeffs)))

    def monic(self) -> "Poly":
        return self._wrap(_monic(self.spec, list(self.coeffs)))

    def to_text(self) -> str:
        """Comma-separated element indices, low to high ("1,0,2" = 2x^2 + 1)."""
        return ",".join(str(c) for c in self.coeffs) if self.coeffs else "0"

    def __str__(self) -> str:
        terms: list[str] = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            else:
                mono = "x" if i == 1 else f"x^{i}"
                terms.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(terms) if terms else "0"


def _require_nonzero(f: Poly, what: str) -> None:
    if f.is_zero:
        raise PolynomialError(f"{what} is undefined for the zero polynomial")


def gcd(f: Poly, g: Poly) -> Poly:
    """Monic gcd (gcd(0, 0) = 0)."""
    f._same_field(g)
    return f._wrap(_gcd(f.spec, list(f.coeffs), list(g.coeffs)))


@dataclass(frozen=True)
class SquarefreeDecomposition:
    """f = unit * prod(A_i ** i) with monic, square-free, pairwise coprime A_i."""

    spec: FieldSpec
    unit: int
    parts: tuple[tuple[Poly, int], ...]

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(i for _, i in self.parts)

    @property
    def max_multiplicity(self) -> int:
        return max(self.multiplicities, default=0)

    @property
    def is_squarefree(self) -> bool:
        return self.max_multiplicity <= 1

    def is_nth_power_free(self, n: int) -> bool:
        return self.max_multiplicity < n

    @property
    def bar_power(self) -> int:
        if not self.parts:
            raise PolynomialError("the power over the algebraic closure needs a nonconstant f")
        return math.gcd(*self.multiplicities)

    def reconstruct(self) -> Poly:
        out = [self.unit]
        for part, i in self.parts:
            for _ in range(i):
                out = _mul(self.spec, out, list(part.coeffs))
        return Poly(self.spec, tuple(out))


def squarefree_decompose(f: Poly) -> SquarefreeDecomposition:
    """
    Square-free decomposition in characteristic p.

    When a derivative vanishes identically the remaining factor is g(x^p) =
    h(x)^p; h is taken coefficient-wise and its multiplicities scaled by p.

    Raises:
        PolynomialError: If f is zero.
    """
    _require_nonzero(f, "square-free decomposition")
    F = f.spec
    unit = f.leading
    raw = _sqf_monic(F, _monic(F, list(f.coeffs)))
    parts = sorted(((Poly(F, tuple(a)), i) for a, i in raw), key=lambda t: (t[1], t[0].coeffs))
    return SquarefreeDecomposition(spec=F, unit=unit, parts=tuple(parts))


def is_nth_power_free(f: Poly, n: int) -> bool:
    """True iff no nonconstant g has g^n | f."""
    if n < 2:
        raise PolynomialError(f"n must be at least 2, got {n}")
    return squarefree_decompose(f).is_nth_power_free(n)


def distinct_irreducible_factor_count(f: Poly) -> int:
    """Number of distinct monic irreducible factors, via distinct-degree factorization."""
    dec = squarefree_decompose(f)
    return sum(_ddf_count(f.spec, list(part.coeffs)) for part, _ in dec.parts)


def mobius(f: Poly) -> int:
    """
    Möbius function on F_q[x]; nonzero constants map to 1 (empty product).

    Raises:
        PolynomialError: If f is zero.
    """
    _require_nonzero(f, "Möbius function")
    if f.is_constant:
        return 1
    dec = squarefree_decompose(f)
    if not dec.is_squarefree:
        return 0
    count = _ddf_count(f.spec, list(dec.parts[0][0].coeffs))
    return -1 if count % 2 else 1


def bar_power(f: Poly) -> int:
    """Greatest r with f = g^r over the algebraic closure (gcd of root multiplicities)."""
    if f.is_constant:
        raise PolynomialError("the power over the algebraic closure needs a nonconstant f")
    return squarefree_decompose(f).bar_power


def power_over_Fq(f: Poly) -> int:
    """Greatest r with f = g^r for some g in F_q[x]."""
    if f.is_constant:
        raise PolynomialError("the power over F_q needs a nonconstant f")
    dec = squarefree_decompose(f)
    b = dec.bar_power
    for r in sorted((r for r in range(1, b + 1) if b % r == 0), reverse=True):
        if f.spec.is_rth_power(dec.unit, r):
            return r
    return 1


def valuation_and_unit(f: Poly, x0: int | FieldElement) -> tuple[int, int]:
    """
    (s, a) with f = (x - x0)^s * g and a = g(x0) != 0.

    Raises:
        PolynomialError: If f is zero.
    """
    _require_nonzero(f, "valuation")
    if isinstance(x0, FieldElement):
        x0 = x0.value
    return _valuation_and_unit(f.spec, list(f.coeffs), x0)


def enumeration_size(spec: FieldSpec, d: int) -> int:
    """Number of polynomials of exact degree d: (q-1) q^d."""
    if d < 0:
        raise PolynomialError(f"degree must be nonnegative, got {d}")
    return (spec.q - 1) * spec.q**d


def _index_digits(spec: FieldSpec, d: int, index: int) -> list[int]:
    digits = []
    for _ in range(d):
        index, r = divmod(index, spec.q)
        digits.append(r)
    digits.append(index + 1)
    return digits


def poly_at_index(spec: FieldSpec, d: int, index: int) -> Poly:
    """The polynomial at position `index` of the degree-d enumeration order."""
    if not 0 <= index < enumeration_size(spec, d):
        raise PolynomialError(f"index {index} outside the degree-{d} enumeration")
    return Poly(spec, tuple(_index_digits(spec, d, index)))


def iter_coefficients(
    spec: FieldSpec, d: int, start: int = 0, stop: Optional[int] = None
) -> Iterator[tuple[int, ...]]:
    """
    Coefficient tuples of exact-degree-d polynomials in positions [start, stop).

    Position i has coefficient j equal to the j-th base-q digit of i for
    j < d (constant coefficient fastest) and leading coefficient 1 + i // q^d.
    """
    size = enumeration_size(spec, d)
    stop = size if stop is None else min(stop, size)
    if start >= stop:
        return
    q = spec.q
    digits = _index_digits(spec, d, start)
    for _ in range(start, stop):
        yield tuple(digits)
        j = 0
        while j < d:
            digits[j] += 1
            if digits[j] < q:
                break
            digits[j] = 0
            j += 1
        else:
            digits[d] += 1


def enumerate_degree_d(
    spec: FieldSpec,
    d: int,
    start: int = 0,
    stop: Optional[int] = None,
    *,
    budget: Optional[int] = None,
) -> Iterator[Poly]:
    """
    Every polynomial of exact degree d, each exactly once, in enumeration order.

    Args:
        spec: The field.
        d: The exact degree.
        start: First enumeration position.
        stop: One past the last position; None runs to the end.
        budget: Largest full stream allowed; defaults to DEFAULT_BUDGET.

    Returns:
        An iterator of Poly in positions [start, stop).

    Raises:
        BudgetExceeded: If the full stream is requested and exceeds the budget.
    """
    size = enumeration_size(spec, d)
    limit = DEFAULT_BUDGET if budget is None else budget
    if start == 0 and stop is None and size > limit:
        raise BudgetExceeded(
            f"(q-1)q^d = {size} polynomials of degree {d} over F_{spec.q} exceeds the budget {limit}"
        )
    for coeffs in iter_coefficients(spec, d, start, stop):
        yield Poly(spec, coeffs)


def monic_polys(spec: FieldSpec, d: int) -> Iterator[Poly]:
    """Every monic polynomial of degree d, constant coefficient fastest."""
    for coeffs in iter_coefficients(spec, d, 0, spec.q**d):
        yield Poly(spec, coeffs)


def _order(spec: FieldSpec | int) -> int:
    return spec if isinstance(spec, int) else spec.q


def zeta_value(spec: FieldSpec | int, s: int) -> Fraction:
    """Zeta function of F_q[x] at an integer s >= 2: 1 / (1 - q^(1-s))."""
    if s <= 1:
        raise PolynomialError(f"zeta_value needs s >= 2 (pole at s = 1), got {s}")
    q = _order(spec)
    return 1 / (1 - Fraction(1, q ** (s - 1)))


def count_nth_power_free(spec: FieldSpec | int, n: int, d: int) -> int:
    """
    Number of n-th power-free polynomials of exact degree d.

    Args:
        spec: The field, or just its order q.
        n: The power; at least 2.
        d: The exact degree.

    Returns:
        (q-1) q^d for d < n, otherwise (q-1)(q^d - q^(d-n+1)).

    Raises:
        PolynomialError: If n < 2 or d < 0.
    """
    if n < 2:
        raise PolynomialError(f"n must be at least 2, got {n}")
    if d < 0:
        raise PolynomialError(f"degree must be nonnegative, got {d}")
    q = _order(spec)
    if d < n:
        return (q - 1) * q**d
    return (q - 1) * (q**d - q ** (d - n + 1))


def mobius_sum(spec: FieldSpec, d: int) -> int:
    """Sum of mu(f) over monic f of degree d."""
    return sum(mobius(f) for f in monic_polys(spec, d))


def count_by_inclusion_exclusion(spec: FieldSpec, n: int, d: int) -> int:
    """
    sum over monic f2 with n * deg(f2) <= d of mu(f2) * #F_q[x]_{d - n deg f2}.

    Independent of the closed form; both must agree for every d.
    """
    q = spec.q
    return sum(mobius_sum(spec, j) * (q - 1) * q ** (d - n * j) for j in range(d // n + 1))
