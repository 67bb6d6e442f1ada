"""
numpy kernels over blocks of polynomials of one exact degree.

A block is an integer array with one row per polynomial and one column per
coefficient (constant term first), holding element indices. Field
arithmetic goes through dense q x q addition and multiplication tables, so
every kernel is a short sequence of table lookups on whole columns.
"""

from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from superell.ff import FieldSpec, prime_factors
from superell.polyring import Poly, _ddf_count, enumeration_size, monic_polys, squarefree_decompose

MAX_TABLE_ORDER = 256
MODULI_LIMIT = 1 << 16
CANDIDATE_LIMIT = 1 << 20
ROW_LIMIT = 1 << 18


@lru_cache(maxsize=64)
def monic_irreducibles(spec: FieldSpec, k: int) -> tuple[tuple[int, ...], ...]:
    """Coefficient tuples of the monic irreducible polynomials of degree k."""
    out = []
    for g in monic_polys(spec, k):
        if squarefree_decompose(g).is_squarefree and _ddf_count(spec, list(g.coeffs)) == 1:
            out.append(g.coeffs)
    return tuple(out)


def _chunks(rows: np.ndarray, size: int) -> Iterator[np.ndarray]:
    for i in range(0, len(rows), size):
        yield rows[i : i + size]


class BlockKernel:
    """
    Vectorized arithmetic for exact-degree-d polynomials over one field.

    Positions follow the enumeration order of polyring.iter_coefficients,
    so a block built from a range of positions holds the same polynomials
    the per-polynomial path would visit.
    """

    def __init__(self, spec: FieldSpec, d: int):
        q = spec.q
        self.spec = spec
        self.d = d
        self.q = q
        self.add = np.array([[spec.add(a, b) for b in range(q)] for a in range(q)], dtype=np.int64)
        self.mul = np.array([[spec.mul(a, b) for b in range(q)] for a in range(q)], dtype=np.int64)
        self.sub = np.array([[spec.sub(a, b) for b in range(q)] for a in range(q)], dtype=np.int64)
        self.neg = np.array([spec.neg(a) for a in range(q)], dtype=np.int64)
        self._weights = np.array([q**j for j in range(d + 1)], dtype=np.int64)
        self._moduli: dict[int, list[tuple[int, np.ndarray]]] = {}
        self._candidates: dict[int, np.ndarray] = {}

    @staticmethod
    def supports(spec: FieldSpec, d: int, n: int, screened: bool = False) -> bool:
        """
        Whether blocks of degree d fit the kernel.

        Args:
            spec: The field.
            d: Exact degree of the block polynomials.
            n: Smallest power the power-free test will be asked about.
            screened: Whether the positions of c * g^l will be needed.
        """
        if spec.q > MAX_TABLE_ORDER or d < 1:
            return False
        if enumeration_size(spec, d) >= 1 << 62:
            return False
        if spec.q ** (d // n) > MODULI_LIMIT:
            return False
        return not screened or (spec.q - 1) * spec.q ** (d // 2) <= CANDIDATE_LIMIT

    def rows_at(self, positions: np.ndarray, d: Optional[int] = None) -> np.ndarray:
        """Coefficient rows of degree d (default: the kernel's) at the given positions."""
        d = self.d if d is None else d
        out = np.empty((len(positions), d + 1), dtype=np.int64)
        rest = np.asarray(positions, dtype=np.int64)
        for j in range(d):
            rest, out[:, j] = np.divmod(rest, self.q)
        out[:, d] = rest + 1
        return out

    def block(self, start: int, stop: int) -> np.ndarray:
        return self.rows_at(np.arange(start, stop, dtype=np.int64))

    def positions(self, rows: np.ndarray) -> np.ndarray:
        """Inverse of rows_at for rows of the kernel's degree."""
        d = self.d
        return rows[:, :d] @ self._weights[:d] + (rows[:, d] - 1) * self._weights[d]

    def _reduce(self, work: np.ndarray, moduli: np.ndarray) -> np.ndarray:
        """Row-wise remainders of `work` modulo the monic rows of `moduli`; `work` is overwritten."""
        e = moduli.shape[1] - 1
        for i in range(work.shape[1] - 1, e - 1, -1):
            lead = work[:, i]
            for j in range(e):
                col = i - e + j
                work[:, col] = self.sub[work[:, col], self.mul[lead, moduli[:, j]]]
        return work[:, :e]

    def power_moduli(self, n: int) -> list[tuple[int, np.ndarray]]:
        """g^n for the monic irreducible g with n * deg g <= d, grouped by degree."""
        if n not in self._moduli:
            groups = []
            for k in range(1, self.d // n + 1):
                powers = [(Poly(self.spec, g) ** n).coeffs for g in monic_irreducibles(self.spec, k)]
                groups.append((k * n, np.array(powers, dtype=np.int64)))
            self._moduli[n] = groups
        return self._moduli[n]

    def power_multiples(self, n: int, start: int, stop: int) -> np.ndarray:
        """
        Mask over positions [start, stop): True where some g^n divides the polynomial.

        For G = g^n of degree e, the multiples of G of degree d are exactly
        T * x^e - (T * x^e mod G) with T of degree d - e, and the position of
        T in the degree-(d - e) order is the position of the multiple
        divided by q^e. Only the T whose multiples can land in the range are
        built.
        """
        marked = np.zeros(stop - start, dtype=bool)
        if start >= stop:
            return marked
        d, q = self.d, self.q
        for e, moduli in self.power_moduli(n):
            qe = q**e
            heads = np.arange(start // qe, (stop - 1) // qe + 1, dtype=np.int64)
            top = self.rows_at(heads, d - e)
            per_chunk = max(1, ROW_LIMIT // len(heads))
            for chunk in _chunks(moduli, per_chunk):
                g = len(chunk)
                work = np.zeros((len(heads) * g, d + 1), dtype=np.int64)
                work[:, e:] = np.repeat(top, g, axis=0)
                low = self.neg[self._reduce(work, np.tile(chunk, (len(heads), 1)))]
                pos = np.repeat(heads, g) * qe + low @ self._weights[:e]
                inside = pos[(pos >= start) & (pos < stop)]
                marked[inside - start] = True
        return marked

    def power_divisible(self, rows: np.ndarray, n: int) -> np.ndarray:
        """Mask over arbitrary rows: True where some g^n divides the polynomial."""
        hit = np.zeros(len(rows), dtype=bool)
        if not len(rows):
            return hit
        per_chunk = max(1, ROW_LIMIT // len(rows))
        for _, moduli in self.power_moduli(n):
            for chunk in _chunks(moduli, per_chunk):
                g = len(chunk)
                work = np.repeat(rows, g, axis=0)
                rem = self._reduce(work, np.tile(chunk, (len(rows), 1)))
                hit |= ~rem.any(axis=1).reshape(len(rows), g).any(axis=1)
        return hit

    def values(self, rows: np.ndarray) -> np.ndarray:
        """f(x) for every row and every x, by Horner's rule; shape (rows, q)."""
        top = rows.shape[1] - 1
        out = np.empty((len(rows), self.q), dtype=np.int64)
        for x in range(self.q):
            times_x = self.mul[:, x]
            acc = rows[:, top]
            for i in range(top - 1, -1, -1):
                acc = self.add[times_x[acc], rows[:, i]]
            out[:, x] = acc
        return out

    def valuations(self, rows: np.ndarray, cap: int) -> tuple[np.ndarray, np.ndarray]:
        """
        (s, a) for every row and x: f = (X - x)^s * g with a = g(x) != 0.

        Valuations are found by repeated synthetic division and stop at
        `cap`; rows that reach it keep s = cap and a = 0.
        """
        count = len(rows)
        s_out = np.full((count, self.q), cap, dtype=np.int64)
        a_out = np.zeros((count, self.q), dtype=np.int64)
        for x in range(self.q):
            times_x = self.mul[:, x]
            current = rows
            open_rows = np.ones(count, dtype=bool)
            for s in range(cap):
                width = current.shape[1]
                quotient = np.empty((count, max(width - 1, 0)), dtype=np.int64)
                acc = current[:, width - 1]
                for i in range(width - 2, -1, -1):
                    quotient[:, i] = acc
                    acc = self.add[times_x[acc], current[:, i]]
                done = open_rows & (acc != 0)
                s_out[done, x] = s
                a_out[done, x] = acc[done]
                open_rows &= acc == 0
                if not open_rows.any():
                    break
                current = quotient
        return s_out, a_out

    def power_positions(self, m: int) -> np.ndarray:
        """
        Sorted positions of c * g^l for c a unit, g monic and l a prime
        dividing both m and d.

        Outside this set a polynomial has a simple root or multiplicities
        with no common prime factor with m, so y^m - f is irreducible over
        the closure and over F_q.
        """
        if m not in self._candidates:
            found: list[np.ndarray] = []
            for ell in prime_factors(m):
                if self.d % ell:
                    continue
                bases = np.array(
                    [(g**ell).coeffs for g in monic_polys(self.spec, self.d // ell)],
                    dtype=np.int64,
                )
                for c in self.spec.units():
                    found.append(self.positions(self.mul[c][bases]))
            self._candidates[m] = (
                np.unique(np.concatenate(found)) if found else np.empty(0, dtype=np.int64)
            )
        return self._candidates[m]
