"""
Finite fields F_q (q = p^k) backed by exp/log and Zech logarithm tables.

Elements are plain integers: the index of an element is the base-p number
formed by its coefficients against the basis 1, x, ..., x^(k-1) of
F_p[x]/(modulus). For prime fields the index is simply the residue.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from superell.config import DEFAULT_MAX_FIELD_ORDER
from superell.errors import FieldError


def is_prime(n: int) -> bool:
    """Trial-division primality test, adequate for table-sized fields."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of n >= 1, ascending."""
    factors: list[int] = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        factors.append(n)
    return factors


def prime_power(q: int) -> Optional[tuple[int, int]]:
    """
    Split a prime power into its prime and exponent.

    Args:
        q: The candidate field order.

    Returns:
        (p, k) with q = p^k, or None if q is not a prime power.
    """
    if q < 2:
        return None
    factors = prime_factors(q)
    if len(factors) != 1:
        return None
    p = factors[0]
    k = 0
    while q > 1:
        q //= p
        k += 1
    return p, k


# Polynomials over F_p used while the tables are being built. Coefficient
# lists run low-to-high and are kept without trailing zeros.


def _fp_trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _fp_mod(a: list[int], m: tuple[int, ...], p: int) -> list[int]:
    """Remainder of a modulo the monic polynomial m."""
    a = list(a)
    dm = len(m) - 1
    for i in range(len(a) - 1, dm - 1, -1):
        c = a[i]
        if c:
            shift = i - dm
            for j in range(dm + 1):
                a[shift + j] = (a[shift + j] - c * m[j]) % p
    return _fp_trim(a[:dm])


def _fp_mulmod(a: list[int], b: list[int], m: tuple[int, ...], p: int) -> list[int]:
    if not a or not b:
        return []
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] = (prod[i + j] + x * y) % p
    return _fp_mod(prod, m, p)


def _fp_powmod(a: list[int], e: int, m: tuple[int, ...], p: int) -> list[int]:
    result = [1]
    base = a
    while e:
        if e & 1:
            result = _fp_mulmod(result, base, m, p)
        base = _fp_mulmod(base, base, m, p)
        e >>= 1
    return result


def _digits(index: int, p: int, k: int) -> list[int]:
    out = []
    for _ in range(k):
        index, r = divmod(index, p)
        out.append(r)
    return out


def _index(digits: list[int], p: int) -> int:
    value = 0
    for c in reversed(digits):
        value = value * p + c
    return value


def _is_irreducible_fp(m: tuple[int, ...], p: int) -> bool:
    """Trial factorization by every monic polynomial of degree <= deg(m) / 2."""
    k = len(m) - 1
    for deg in range(1, k // 2 + 1):
        for lower in range(p**deg):
            candidate = tuple(_digits(lower, p, deg) + [1])
            if not _fp_mod(list(m), candidate, p):
                return False
    return True


def _smallest_irreducible(p: int, k: int) -> tuple[int, ...]:
    """
    First monic irreducible of degree k in coefficient-lexicographic order.

    Candidates are visited by the index of their lower coefficients with the
    constant coefficient varying fastest. For k = 1 this yields x itself.
    """
    for lower in range(p**k):
        candidate = tuple(_digits(lower, p, k) + [1])
        if _is_irreducible_fp(candidate, p):
            return candidate
    raise FieldError(f"no irreducible polynomial of degree {k} over F_{p}")


def _format_fp_poly(coeffs: tuple[int, ...]) -> str:
    terms: list[str] = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if c == 0:
            continue
        if i == 0:
            terms.append(str(c))
            continue
        mono = "x" if i == 1 else f"x^{i}"
        terms.append(mono if c == 1 else f"{c}{mono}")
    return "+".join(terms) if terms else "0"


@dataclass(frozen=True)
class FieldSpec:
    """
    A finite field F_q with total arithmetic on integer element indices.

    Multiplication, inversion and powers go through the exp/log tables;
    addition in extension fields goes through the Zech logarithm table
    zech[n] = log(1 + g^n). FieldSpec is immutable and safe to share.
    """

    p: int
    k: int
    q: int
    modulus: tuple[int, ...]
    "Monic irreducible over F_p, low-to-high coefficients (x for prime fields)"

    generator: int
    "Index of a fixed element of multiplicative order q - 1"

    _exp: tuple[int, ...] = field(repr=False, compare=False)
    _log: tuple[int, ...] = field(repr=False, compare=False)
    _zech: tuple[int, ...] = field(repr=False, compare=False)

    @property
    def is_prime_field(self) -> bool:
        return self.k == 1

    @property
    def modulus_str(self) -> str:
        """Human-readable modulus, e.g. "x^2+x+1 over F_2"."""
        return f"{_format_fp_poly(self.modulus)} over F_{self.p}"

    def __str__(self) -> str:
        if self.k == 1:
            return f"F_{self.q}"
        return f"F_{self.q} = F_{self.p}[x]/({_format_fp_poly(self.modulus)})"

    # ------------------------------------------------------------------
    # elements

    def elements(self) -> range:
        return range(self.q)

    def units(self) -> range:
        return range(1, self.q)

    def element(self, value: int) -> "FieldElement":
        self._check(value)
        return FieldElement(self, value)

    def from_int(self, n: int) -> int:
        """Image of the integer n in the prime subfield."""
        return n % self.p

    def digits(self, a: int) -> list[int]:
        """Coefficients of a against 1, x, ..., x^(k-1)."""
        self._check(a)
        return _digits(a, self.p, self.k)

    def parse_element(self, text: str) -> int:
        try:
            value = int(text.strip())
        except ValueError:
            raise FieldError(f"not an element index: {text!r}") from None
        self._check(value)
        return value

    def _check(self, a: int) -> None:
        if not 0 <= a < self.q:
            raise FieldError(f"{a} is not an element index of F_{self.q}")

    # ------------------------------------------------------------------
    # arithmetic

    def add(self, a: int, b: int) -> int:
        if self.k == 1:
            s = a + b
            return s - self.p if s >= self.p else s
        if a == 0:
            return b
        if b == 0:
            return a
        la = self._log[a]
        n = self._log[b] - la
        if n < 0:
            n += self.q - 1
        z = self._zech[n]
        if z < 0:
            return 0
        return self._exp[la + z]

    def neg(self, a: int) -> int:
        if a == 0 or self.p == 2:
            return a
        if self.k == 1:
            return self.p - a
        # -1 = g^((q-1)/2) in odd characteristic
        return self._exp[self._log[a] + (self.q - 1) // 2]

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise FieldError(f"inversion of zero in F_{self.q}")
        return self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        """Square-and-multiply; negative exponents invert first, 0^0 = 1."""
        if e < 0:
            a = self.inv(a)
            e = -e
        result = 1
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def frobenius(self, a: int) -> int:
        return self.pow(a, self.p)

    def pth_root(self, a: int) -> int:
        """Inverse of Frobenius: a^(q/p)."""
        return self.pow(a, self.q // self.p)

    def discrete_log(self, a: int) -> int:
        if a == 0:
            raise FieldError("discrete logarithm of zero")
        return self._log[a]

    def generator_power(self, e: int) -> int:
        return self._exp[e % (self.q - 1)]

    # ------------------------------------------------------------------
    # power residues

    def is_rth_power(self, a: int, r: int) -> bool:
        """
        Whether a lies in (F_q^*)^r, decided by a^((q-1)/gcd(r, q-1)) = 1.

        Raises:
            FieldError: If a is zero (callers handle y = 0 themselves) or r < 1.
        """
        if a == 0:
            raise FieldError("is_rth_power is only defined on F_q^*")
        if r < 1:
            raise FieldError(f"power r must be positive, got {r}")
        return self.pow(a, (self.q - 1) // math.gcd(r, self.q - 1)) == 1

    def root_count(self, a: int, m: int) -> int:
        """Number of y in F_q with y^m = a."""
        if m < 1:
            raise FieldError(f"root degree m must be positive, got {m}")
        if a == 0:
            return 1
        if self.is_rth_power(a, m):
            return math.gcd(m, self.q - 1)
        return 0

    # ------------------------------------------------------------------
    # subfields

    def embed_into(self, bigger: "FieldSpec") -> tuple[int, ...]:
        """
        Table of the images of this field's elements inside `bigger`.

        The embedding sends x to the smallest-index root of the modulus in
        `bigger`, so it is deterministic.

        Raises:
            FieldError: If `bigger` does not contain a copy of this field.
        """
        return _embedding(self, bigger)


@lru_cache(maxsize=64)
def _embedding(small: FieldSpec, big: FieldSpec) -> tuple[int, ...]:
    if small.p != big.p or big.k % small.k:
        raise FieldError(f"F_{small.q} is not a subfield of F_{big.q}")
    if small.k == 1:
        return tuple(range(small.q))

    def evaluate(coeffs: list[int] | tuple[int, ...], r: int) -> int:
        acc = 0
        for c in reversed(coeffs):
            acc = big.add(big.mul(acc, r), c)
        return acc

    root = next((r for r in big.units() if evaluate(small.modulus, r) == 0), None)
    if root is None:
        raise FieldError(f"modulus of F_{small.q} has no root in F_{big.q}")
    return tuple(evaluate(small.digits(a), root) for a in small.elements())


@lru_cache(maxsize=32)
def make_field(p: int, k: int = 1, *, max_order: Optional[int] = None) -> FieldSpec:
    """
    Construct F_{p^k} with deterministic modulus and generator.

    The modulus is the first monic irreducible of degree k in
    coefficient-lexicographic order (constant coefficient fastest); the
    generator is the smallest element index of multiplicative order q - 1.

    Args:
        p: The characteristic.
        k: The extension degree.
        max_order: Largest admissible p^k; defaults to DEFAULT_MAX_FIELD_ORDER.

    Returns:
        The field's arithmetic tables.

    Raises:
        FieldError: If p is not prime, k < 1, or p^k exceeds the bound.
    """
    bound = DEFAULT_MAX_FIELD_ORDER if max_order is None else max_order
    if not is_prime(p):
        raise FieldError(f"{p} is not prime")
    if k < 1:
        raise FieldError(f"extension degree must be >= 1, got {k}")
    q = p**k
    if q > bound:
        raise FieldError(f"field order {p}^{k} = {q} exceeds the bound {bound}")

    modulus = _smallest_irreducible(p, k)
    order = q - 1
    cofactors = [order // r for r in prime_factors(order)] if order > 1 else []

    generator = None
    for candidate in range(1, q):
        digits = _fp_trim(_digits(candidate, p, k))
        if all(_fp_powmod(digits, e, modulus, p) != [1] for e in cofactors):
            generator = candidate
            g_digits = digits
            break
    if generator is None:
        raise FieldError(f"no generator found for F_{q}")

    exp = [0] * order
    log = [-1] * q
    current = [1]
    for i in range(order):
        idx = _index(current, p)
        exp[i] = idx
        log[idx] = i
        current = _fp_mulmod(current, g_digits, modulus, p)
    if current != [1] or min(log[1:], default=0) < 0:
        raise FieldError(f"exp/log tables for F_{q} are not a bijection")

    zech = [-1] * order
    for n in range(order):
        v = exp[n]
        c0 = v % p
        w = v - c0 + (c0 + 1) % p
        zech[n] = log[w] if w else -1

    return FieldSpec(
        p=p,
        k=k,
        q=q,
        modulus=modulus,
        generator=generator,
        _exp=tuple(exp + exp),
        _log=tuple(log),
        _zech=tuple(zech),
    )


def field_of_order(q: int, *, max_order: Optional[int] = None) -> FieldSpec:
    """make_field for a prime power given as q."""
    pk = prime_power(q)
    if pk is None:
        raise FieldError(f"{q} is not a prime power")
    return make_field(pk[0], pk[1], max_order=max_order)


@dataclass(frozen=True)
class FieldElement:
    """An element of a specific FieldSpec with operator arithmetic."""

    spec: FieldSpec
    value: int

    def _coerce(self, other: object) -> int:
        if isinstance(other, FieldElement):
            if other.spec != self.spec:
                raise FieldError(
                    f"mixed-field operands: F_{self.spec.q} and F_{other.spec.q}"
                )
            return other.value
        if isinstance(other, int):
            return self.spec.from_int(other)
        raise TypeError(f"cannot combine FieldElement with {type(other).__name__}")

    def _wrap(self, value: int) -> "FieldElement":
        return FieldElement(self.spec, value)

    def __add__(self, other: object) -> "FieldElement":
        return self._wrap(self.spec.add(self.value, self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other: object) -> "FieldElement":
        return self._wrap(self.spec.sub(self.value, self._coerce(other)))

    def __rsub__(self, other: object) -> "FieldElement":
        return self._wrap(self.spec.sub(self._coerce(other), self.value))

    def __mul__(self, other: object) -> "FieldElement":
        return self._wrap(self.spec.mul(self.value, self._coerce(other)))

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> "FieldElement":
        return self._wrap(self.spec.div(self.value, self._coerce(other)))

    def __neg__(self) -> "FieldElement":
        return self._wrap(self.spec.neg(self.value))

    def __pow__(self, e: int) -> "FieldElement":
        return self._wrap(self.spec.pow(self.value, e))

    def __int__(self) -> int:
        return self.value

    def __str__(self) -> str:
        return str(self.value)

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def inverse(self) -> "FieldElement":
        return self._wrap(self.spec.inv(self.value))

    def frobenius(self) -> "FieldElement":
        return self._wrap(self.spec.frobenius(self.value))

    def is_rth_power(self, r: int) -> bool:
        return self.spec.is_rth_power(self.value, r)

    def root_count(self, m: int) -> int:
        return self.spec.root_count(self.value, m)
