import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Mapping, Optional, Protocol

from superell.errors import TheoryError
from superell.models import Histogram, Outcome, sort_key


class TheoryLaw(Protocol):
    def prob(self, outcome: Any) -> Fraction: ...


@dataclass(frozen=True)
class Distance:
    exact: Fraction
    value: float

    def to_json(self) -> dict[str, Any]:
        return {
            "num": str(self.exact.numerator),
            "den": str(self.exact.denominator),
            "float": self.value,
        }


@dataclass(frozen=True)
class OutcomeRow:
    outcome: Outcome
    count: int
    empirical: Fraction
    theory: Fraction


@dataclass(frozen=True)
class BandViolation:
    outcome: Outcome
    count: int
    expected: float
    sigma: float


def _prob(theory: Optional[TheoryLaw | Mapping[Outcome, Fraction]], outcome: Outcome) -> Fraction:
    if theory is None:
        return Fraction(0)
    if isinstance(theory, Mapping):
        return theory.get(outcome, Fraction(0))
    return theory.prob(outcome)


class DistributionComparator:
    """
    Compares empirical histograms against exact theory laws.

    Works for any law exposing prob(outcome): an ExactDist for scalar
    statistics or a JointTheory for outcome vectors, whose support is
    never materialized.
    """

    def tv_distance(self, empirical: Histogram, theory: TheoryLaw) -> Distance:
        """
        Total variation distance over the union of supports, exactly.

        Unobserved outcomes contribute their theory mass, so the sum over
        them is 1 minus the theory mass on observed outcomes.

        Raises:
            TheoryError: If the histogram has no trials.
        """
        if empirical.trials == 0:
            raise TheoryError("total variation of an empty histogram is undefined")
        observed = Fraction(0)
        deviation = Fraction(0)
        for outcome, count in empirical.items():
            t = theory.prob(outcome)
            observed += t
            deviation += abs(Fraction(count, empirical.trials) - t)
        exact = (deviation + 1 - observed) / 2
        return Distance(exact=exact, value=float(exact))

    def rows(
        self,
        empirical: Histogram,
        theory: Optional[TheoryLaw | Mapping[Outcome, Fraction]],
    ) -> List[OutcomeRow]:
        """
        Per-outcome rows over the observed outcomes. A mapping theory (an
        ExactDist, or a report's theory rows) also contributes its
        unobserved outcomes.
        """
        outcomes: set[Outcome] = set(empirical.counts)
        if isinstance(theory, Mapping):
            outcomes.update(theory)
        out = []
        for outcome in sorted(outcomes, key=sort_key):
            out.append(
                OutcomeRow(
                    outcome=outcome,
                    count=empirical.counts.get(outcome, 0),
                    empirical=empirical.frequency(outcome),
                    theory=_prob(theory, outcome),
                )
            )
        return out

    def binomial_band(
        self,
        empirical: Histogram,
        reference: Mapping[Outcome, Fraction],
        sigmas: float = 5.0,
    ) -> List[BandViolation]:
        """
        Outcomes whose count lies more than `sigmas` binomial standard
        deviations from trials * reference probability.

        Outcomes with reference probability 0 must not be observed at all.
        """
        n = empirical.trials
        outcomes = set(empirical.counts) | set(reference)
        violations = []
        for outcome in sorted(outcomes, key=sort_key):
            p = reference.get(outcome, Fraction(0))
            count = empirical.counts.get(outcome, 0)
            expected = n * float(p)
            sigma = math.sqrt(n * float(p) * (1 - float(p)))
            if p == 0:
                ok = count == 0
            else:
                ok = abs(count - expected) <= sigmas * sigma
            if not ok:
                violations.append(BandViolation(outcome, count, expected, sigma))
        return violations

    def within_binomial_band(
        self, count: int, trials: int, p: Fraction, sigmas: float = 5.0
    ) -> bool:
        """Whether count / trials is consistent with success probability p."""
        sigma = math.sqrt(trials * float(p) * (1 - float(p)))
        return abs(count - trials * float(p)) <= sigmas * sigma
