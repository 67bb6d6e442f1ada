"""
The per-shard work unit: classify polynomials of one degree and tally the
configured point-count statistic.

A scanner is built once per (config, field) and only holds lookup tables,
so shards can run in any process in any order. Blocks of polynomials go
through the numpy kernels of superell.batch when the field and degree fit
them; otherwise, and for the rare polynomials whose curve may be
reducible, the per-polynomial path decides.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Iterable, Optional

import numpy as np
from numpy.random import Generator, Philox

from superell.batch import BlockKernel
from superell.config import DEFAULT_REJECTION_FACTOR
from superell.curvemodel import (
    geometrically_irreducible_from,
    irreducible_over_Fq_from,
)
from superell.errors import BudgetExceeded
from superell.ff import FieldSpec
from superell.models import ExperimentConfig, Histogram, Outcome, Statistic, SubsetFilter
from superell.polyring import (
    Poly,
    SquarefreeDecomposition,
    _eval,
    _valuation_and_unit,
    iter_coefficients,
    squarefree_decompose,
)
from superell.theorydist import Variant

GENERATOR_NAME = "philox"
MAX_BATCH = 4096


@dataclass
class ShardResult:
    """Histogram and bookkeeping of one shard; merged by exact addition."""

    index: int
    histogram: Histogram = field(default_factory=Histogram)
    visited: int = 0
    "Polynomials drawn or enumerated"

    rejected: int = 0
    "Visited polynomials that were not n-th power-free"

    filtered: int = 0
    "Power-free polynomials dropped by the subset filter"

    geometrically_reducible: int = 0
    "Admitted polynomials whose normalization count was taken formally"

    tallies: Counter[Hashable] = field(default_factory=Counter)
    "Named counts of a counting shard (see TallyRequest)"

    def merge(self, other: "ShardResult") -> None:
        self.histogram.merge(other.histogram)
        self.visited += other.visited
        self.rejected += other.rejected
        self.filtered += other.filtered
        self.geometrically_reducible += other.geometrically_reducible
        self.tallies.update(other.tallies)

    def counters(self) -> dict[str, int]:
        return {
            "visited": self.visited,
            "admitted": self.histogram.trials,
            "rejected": self.rejected,
            "filtered": self.filtered,
            "geometrically_reducible": self.geometrically_reducible,
        }


@dataclass(frozen=True)
class TallyRequest:
    """
    What a counting shard counts over its range.

    Keys of the resulting tallies:
        ("count", n): n-th power-free polynomials.
        ("interpolation", i): n-th power-free f with f(x) = a on the i-th
            (n, xs, avals) target.
        ("refined", i): n-th power-free f whose valuation and unit at every
            x equal the i-th (n, s_vec, a_vec) target.
    """

    ns: tuple[int, ...]
    interpolation: tuple[tuple[int, tuple[int, ...], tuple[int, ...]], ...] = ()
    refined: tuple[tuple[int, tuple[int, ...], tuple[int, ...]], ...] = ()

    @property
    def needs_local_data(self) -> bool:
        return bool(self.interpolation or self.refined)


class Verdict(Enum):
    KEEP = "keep"
    FILTERED = "filtered"
    REDUCIBLE = "reducible"  # kept; its normalization count is formal


def shard_seed(seed: int, shard_index: int) -> int:
    return seed ^ shard_index


def make_generator(seed: int, shard_index: int) -> Generator:
    return Generator(Philox(shard_seed(seed, shard_index)))


class PolynomialScanner:
    """
    Classifies exact-degree-d polynomials and records their point-count outcome.

    Per-site counts come from two tables: the affine count of y^m = a for
    every a, and the normalization rule gcd(m, s, q-1) [a is a gcd(m,s)-th
    power] for every valuation s < n and unit a.
    """

    def __init__(self, config: ExperimentConfig, spec: FieldSpec, vectorized: bool = True):
        """
        Args:
            config: The experiment; d, n, m, variant, statistic and subset matter here.
            spec: Field tables for F_q.
            vectorized: Use the numpy kernels when the field and degree fit them.
        """
        self.config = config
        self.spec = spec
        m = config.m
        self._affine = tuple(spec.root_count(a, m) for a in spec.elements())
        self._local: tuple[tuple[int, ...], ...] = ()
        if config.variant is Variant.NORMALIZATION:
            rows = []
            for s in range(config.n):
                g = math.gcd(m, s)
                big_n = math.gcd(g, spec.q - 1)
                rows.append(
                    tuple(
                        0 if a == 0 else (big_n if spec.is_rth_power(a, g) else 0)
                        for a in spec.elements()
                    )
                )
            self._local = tuple(rows)

        self._screened = (
            config.subset is not SubsetFilter.ALL or config.variant is Variant.NORMALIZATION
        )
        self._kernel: Optional[BlockKernel] = None
        if vectorized and BlockKernel.supports(spec, config.d, config.n, self._screened):
            self._kernel = BlockKernel(spec, config.d)
            self._site_table = np.array((1,) + self._affine[1:], dtype=np.int64)
            self._local_table = np.array(self._local, dtype=np.int64)

    @property
    def vectorized(self) -> bool:
        return self._kernel is not None

    def site_counts(self, coeffs: list[int]) -> tuple[int, ...]:
        """Per-x counts for the configured variant, x in element-index order."""
        F = self.spec
        if self.config.variant is Variant.SINGULAR:
            out = []
            for x0 in F.elements():
                v = _eval(F, coeffs, x0)
                out.append(self._affine[v] if v else 1)
            return tuple(out)
        out = []
        for x0 in F.elements():
            s, a = _valuation_and_unit(F, coeffs, x0)
            out.append(self._local[s][a])
        return tuple(out)

    def outcome(self, counts: tuple[int, ...]) -> Outcome:
        statistic = self.config.statistic
        if statistic is Statistic.TOTAL:
            return sum(counts)
        if statistic is Statistic.MARGINAL:
            return counts[self.config.site]
        return counts

    def _screen(self, dec: SquarefreeDecomposition) -> Verdict:
        """Subset filter and formal-count bookkeeping for an admitted polynomial."""
        config = self.config
        if config.subset is SubsetFilter.GEOMETRICALLY_IRREDUCIBLE:
            if not geometrically_irreducible_from(dec, config.m):
                return Verdict.FILTERED
        elif config.subset is SubsetFilter.IRREDUCIBLE:
            if not irreducible_over_Fq_from(self.spec, dec, config.m):
                return Verdict.FILTERED
        elif config.variant is Variant.NORMALIZATION and not geometrically_irreducible_from(
            dec, config.m
        ):
            return Verdict.REDUCIBLE
        return Verdict.KEEP

    def classify(self, coeffs: tuple[int, ...], result: ShardResult) -> Optional[Outcome]:
        """Outcome for an admitted polynomial, None (and a counter bump) otherwise."""
        result.visited += 1
        dec = squarefree_decompose(Poly(self.spec, coeffs))
        if not dec.is_nth_power_free(self.config.n):
            result.rejected += 1
            return None
        verdict = self._screen(dec)
        if verdict is Verdict.FILTERED:
            result.filtered += 1
            return None
        if verdict is Verdict.REDUCIBLE:
            result.geometrically_reducible += 1
        return self.outcome(self.site_counts(list(coeffs)))

    def _tally(self, stream: Iterable[tuple[int, ...]], result: ShardResult) -> None:
        for coeffs in stream:
            outcome = self.classify(coeffs, result)
            if outcome is not None:
                result.histogram.add(outcome)

    # ------------------------------------------------------------------
    # block path

    def _site_matrix(self, rows: np.ndarray) -> np.ndarray:
        assert self._kernel is not None
        if self.config.variant is Variant.SINGULAR:
            return self._site_table[self._kernel.values(rows)]
        s, a = self._kernel.valuations(rows, self.config.n)
        return self._local_table[s, a]

    def _screen_block(
        self, rows: np.ndarray, admitted: np.ndarray, positions: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Kept, filtered and formally counted masks over a block of rows."""
        kept = admitted.copy()
        filtered = np.zeros(len(rows), dtype=bool)
        reducible = np.zeros(len(rows), dtype=bool)
        if not self._screened:
            return kept, filtered, reducible
        assert self._kernel is not None
        suspects = admitted & np.isin(positions, self._kernel.power_positions(self.config.m))
        for i in np.flatnonzero(suspects):
            coeffs = tuple(int(c) for c in rows[i])
            verdict = self._screen(squarefree_decompose(Poly(self.spec, coeffs)))
            if verdict is Verdict.FILTERED:
                kept[i] = False
                filtered[i] = True
            elif verdict is Verdict.REDUCIBLE:
                reducible[i] = True
        return kept, filtered, reducible

    def _record(self, counts: np.ndarray, histogram: Histogram) -> None:
        statistic = self.config.statistic
        if statistic is Statistic.JOINT:
            vectors, times = np.unique(counts, axis=0, return_counts=True)
            for vector, n in zip(vectors, times):
                histogram.add(tuple(int(c) for c in vector), int(n))
            return
        if statistic is Statistic.TOTAL:
            column = counts.sum(axis=1)
        else:
            column = counts[:, self.config.site]
        values, times = np.unique(column, return_counts=True)
        for value, n in zip(values, times):
            histogram.add(int(value), int(n))

    def _account(
        self,
        rows: np.ndarray,
        admitted: np.ndarray,
        positions: np.ndarray,
        result: ShardResult,
        quota: Optional[int] = None,
        room: Optional[int] = None,
    ) -> None:
        """
        Fold a block into `result`, stopping after the row that fills
        `quota` or after `room` rows, whichever comes first.
        """
        kept, filtered, reducible = self._screen_block(rows, admitted, positions)
        cut = len(rows)
        if quota is not None:
            needed = quota - result.histogram.trials
            running = np.cumsum(kept)
            if running.size and running[-1] >= needed:
                cut = int(np.searchsorted(running, needed)) + 1
        if room is not None:
            cut = min(cut, room)
        result.visited += cut
        result.rejected += int(np.count_nonzero(~admitted[:cut]))
        result.filtered += int(np.count_nonzero(filtered[:cut]))
        result.geometrically_reducible += int(np.count_nonzero(reducible[:cut]))
        chosen = rows[:cut][kept[:cut]]
        if len(chosen):
            self._record(self._site_matrix(chosen), result.histogram)

    # ------------------------------------------------------------------
    # shard entry points

    def scan_range(self, index: int, start: int, stop: int) -> ShardResult:
        """Every polynomial in enumeration positions [start, stop)."""
        result = ShardResult(index=index)
        if self._kernel is None:
            self._tally(iter_coefficients(self.spec, self.config.d, start, stop), result)
            return result
        rows = self._kernel.block(start, stop)
        admitted = ~self._kernel.power_multiples(self.config.n, start, stop)
        self._account(rows, admitted, np.arange(start, stop, dtype=np.int64), result)
        return result

    def sample(
        self, index: int, quota: int, rejection_factor: int = DEFAULT_REJECTION_FACTOR
    ) -> ShardResult:
        """
        Draw until `quota` polynomials are admitted, from the stream of shard `index`.

        Leading coefficients are uniform on F_q^*, the others uniform on F_q.
        At most rejection_factor * (quota + 1) polynomials are drawn.

        Raises:
            BudgetExceeded: If the rejection cap is reached first.
        """
        config = self.config
        q, d = self.spec.q, config.d
        rng = make_generator(config.seed, index)
        cap = rejection_factor * quota + rejection_factor
        result = ShardResult(index=index)
        while result.histogram.trials < quota:
            if result.visited >= cap:
                raise BudgetExceeded(
                    f"shard {index}: {result.histogram.trials} of {quota} samples admitted "
                    f"after {result.visited} draws"
                )
            batch = min(MAX_BATCH, max(quota - result.histogram.trials, 64))
            leading = rng.integers(1, q, size=batch)
            lower = rng.integers(0, q, size=(batch, d))
            if self._kernel is not None:
                rows = np.column_stack([lower, leading]).astype(np.int64)
                admitted = ~self._kernel.power_divisible(rows, config.n)
                positions = self._kernel.positions(rows)
                self._account(
                    rows, admitted, positions, result, quota=quota, room=cap - result.visited
                )
                continue
            for i in range(batch):
                coeffs = tuple(int(c) for c in lower[i]) + (int(leading[i]),)
                outcome = self.classify(coeffs, result)
                if outcome is not None:
                    result.histogram.add(outcome)
                    if result.histogram.trials == quota:
                        break
                if result.visited >= cap:
                    break
        return result

    def tally_range(self, index: int, start: int, stop: int, request: TallyRequest) -> ShardResult:
        """Counting-suite tallies over enumeration positions [start, stop)."""
        result = ShardResult(index=index)
        result.visited = stop - start
        cap = max(request.ns, default=2)
        if self._kernel is None:
            self._tally_slowly(start, stop, request, result.tallies)
            return result

        kernel = self._kernel
        free = {n: ~kernel.power_multiples(n, start, stop) for n in request.ns}
        for n, mask in free.items():
            result.tallies[("count", n)] = int(np.count_nonzero(mask))
        if not request.needs_local_data:
            return result

        s, a = kernel.valuations(kernel.block(start, stop), cap)
        values = np.where(s == 0, a, 0)
        for i, (n, xs, avals) in enumerate(request.interpolation):
            hit = free[n] & np.all(values[:, list(xs)] == np.array(avals), axis=1)
            result.tallies[("interpolation", i)] = int(np.count_nonzero(hit))
        for i, (n, s_vec, a_vec) in enumerate(request.refined):
            hit = free[n] & np.all(s == np.array(s_vec), axis=1) & np.all(a == np.array(a_vec), axis=1)
            result.tallies[("refined", i)] = int(np.count_nonzero(hit))
        return result

    def _tally_slowly(
        self, start: int, stop: int, request: TallyRequest, tallies: Counter[Hashable]
    ) -> None:
        F = self.spec
        refined_index: dict[tuple[tuple[int, ...], tuple[int, ...]], list[int]] = {}
        for i, (_, s_vec, a_vec) in enumerate(request.refined):
            refined_index.setdefault((s_vec, a_vec), []).append(i)
        for n in request.ns:
            tallies[("count", n)] += 0
        for coeffs in iter_coefficients(F, self.config.d, start, stop):
            mm = squarefree_decompose(Poly(F, coeffs)).max_multiplicity
            for n in request.ns:
                if mm < n:
                    tallies[("count", n)] += 1
            if not request.needs_local_data:
                continue
            data = [_valuation_and_unit(F, list(coeffs), x0) for x0 in F.elements()]
            values = tuple(0 if s else a for s, a in data)
            for i, (n, xs, avals) in enumerate(request.interpolation):
                if mm < n and all(values[x] == v for x, v in zip(xs, avals)):
                    tallies[("interpolation", i)] += 1
            key = (tuple(s for s, _ in data), tuple(a for _, a in data))
            for i in refined_index.get(key, ()):
                if mm < request.refined[i][0]:
                    tallies[("refined", i)] += 1
