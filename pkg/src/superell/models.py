import math
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from fractions import Fraction
from typing import Any, Optional

from superell.config import Settings
from superell.errors import ConfigError
from superell.ff import is_prime
from superell.theorydist import Variant

Outcome = int | tuple[int, ...]


class Mode(StrEnum):
    EXHAUSTIVE = "exhaustive"
    MONTECARLO = "montecarlo"


class Statistic(StrEnum):
    TOTAL = "total"
    "Sum of the per-x counts over all q sites"

    JOINT = "joint"
    "The vector of per-x counts"

    MARGINAL = "marginal"
    "The count over a single x-value (ExperimentConfig.site)"


class SubsetFilter(StrEnum):
    ALL = "all"
    GEOMETRICALLY_IRREDUCIBLE = "geometrically-irreducible"
    IRREDUCIBLE = "irreducible"


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one scan or sampling run."""

    p: int
    k: int = 1
    m: int = 2
    n: int = 2
    d: int = 2
    variant: Variant = Variant.SINGULAR
    statistic: Statistic = Statistic.TOTAL
    mode: Mode = Mode.EXHAUSTIVE
    samples: int = 0
    seed: int = 0
    subset: SubsetFilter = SubsetFilter.ALL
    site: int = 0
    "Element index whose count is recorded by the marginal statistic"

    @property
    def q(self) -> int:
        return self.p**self.k

    def validate(self, settings: Settings) -> None:
        """
        Raises:
            ConfigError: With a one-line message naming the offending flag.
        """
        if not is_prime(self.p):
            raise ConfigError(f"--p: {self.p} is not prime")
        if self.k < 1:
            raise ConfigError(f"--k: extension degree must be >= 1, got {self.k}")
        if self.q > settings.max_field_order:
            raise ConfigError(
                f"--p/--k: field order {self.q} exceeds the bound {settings.max_field_order}"
            )
        if self.m < 2:
            raise ConfigError(f"--m: must be >= 2, got {self.m}")
        if math.gcd(self.q, self.m) != 1:
            raise ConfigError(f"--m: gcd(q, m) = gcd({self.q}, {self.m}) must be 1")
        if self.n < 2:
            raise ConfigError(f"--n: must be >= 2, got {self.n}")
        if self.d < 0:
            raise ConfigError(f"--d: degree must be >= 0, got {self.d}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"--seed: must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= self.site < self.q:
            raise ConfigError(f"--site: {self.site} is not an element index of F_{self.q}")
        if self.mode is Mode.MONTECARLO and self.samples < 1:
            raise ConfigError(f"--samples: Monte Carlo needs at least 1 sample, got {self.samples}")
        if self.mode is Mode.EXHAUSTIVE:
            size = (self.q - 1) * self.q**self.d
            if size > settings.budget:
                raise ConfigError(
                    f"--d: (q-1)q^d = {size} exceeds the enumeration budget {settings.budget}"
                )

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["q"] = self.q
        for key in ("variant", "statistic", "mode", "subset"):
            out[key] = str(out[key])
        return out


def sort_key(outcome: Outcome) -> tuple[int, tuple[int, ...]]:
    """Canonical outcome order: scalars first, then vectors lexicographically."""
    if isinstance(outcome, tuple):
        return (1, outcome)
    return (0, (outcome,))


@dataclass
class Histogram:
    """Occurrence counts per outcome; merging is exact addition."""

    counts: dict[Outcome, int] = field(default_factory=dict)
    trials: int = 0

    def add(self, outcome: Outcome, times: int = 1) -> None:
        self.counts[outcome] = self.counts.get(outcome, 0) + times
        self.trials += times

    def merge(self, other: "Histogram") -> None:
        for outcome, count in other.counts.items():
            self.counts[outcome] = self.counts.get(outcome, 0) + count
        self.trials += other.trials

    def items(self) -> list[tuple[Outcome, int]]:
        return sorted(self.counts.items(), key=lambda kv: sort_key(kv[0]))

    def frequency(self, outcome: Outcome) -> Fraction:
        if self.trials == 0:
            return Fraction(0)
        return Fraction(self.counts.get(outcome, 0), self.trials)

    def normalized(self) -> dict[Outcome, Fraction]:
        return {outcome: Fraction(count, self.trials) for outcome, count in self.items()}

    def mean(self) -> Optional[Fraction]:
        """Empirical mean of a scalar statistic (None for vectors or no trials)."""
        if self.trials == 0 or any(isinstance(k, tuple) for k in self.counts):
            return None
        total = sum(k * c for k, c in self.counts.items() if isinstance(k, int))
        return Fraction(total, self.trials)


@dataclass
class ExperimentReport:
    """Everything a run emits; verification runs fill `cases` instead of a histogram."""

    kind: str
    config: dict[str, Any]
    field_info: dict[str, Any]
    "p, k and the modulus string of the field the run used"

    seed: Optional[int] = None
    histogram: Histogram = field(default_factory=Histogram)
    theory: list[tuple[Outcome, Fraction]] = field(default_factory=list)
    tv: Optional[Fraction] = None
    mean: Optional[Fraction] = None
    runtime_ms: Optional[int] = None
    version: str = ""
    generator: Optional[str] = None
    counters: dict[str, int] = field(default_factory=dict)
    cases: list[dict[str, Any]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    extras: dict[str, Any] = field(default_factory=dict)
    passed: bool = True

    @property
    def trials(self) -> int:
        return self.histogram.trials


def field_record(p: int, k: int, modulus: str) -> dict[str, Any]:
    return {"p": p, "k": k, "modulus": modulus}

