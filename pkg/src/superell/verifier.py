"""
Exact verification suites: counting lemmas, the local normalization rule,
and identities of the limiting laws.

Suites never raise on a failed identity. Each case becomes a row with a
`passed` flag and the report fails if any row does.
"""

import atexit
import math
import time
from fractions import Fraction
from typing import Any, Iterable, Optional, Sequence

from rich.console import Console

from superell.config import Settings
from superell.curvemodel import (
    SuperellipticModel,
    branch_orbit_count,
    normalization_count_at,
)
from superell.errors import SplittingFieldTooLarge, TheoryError
from superell.ff import FieldSpec, field_of_order, prime_power
from superell.models import ExperimentConfig, ExperimentReport, Histogram, field_record
from superell.parallel import ParallelScanner, range_tasks
from superell.polyring import (
    Poly,
    count_by_inclusion_exclusion,
    count_nth_power_free,
    enumeration_size,
    mobius_sum,
)
from superell.scanner import GENERATOR_NAME, TallyRequest, make_generator
from superell.theorydist import (
    ExactDist,
    TheoremParams,
    Variant,
    interpolation_main_term,
    printed_normalization_masses,
    refined_main_term,
    trigonal_contrast,
    xj_normalization,
    xj_singular,
)

DEFAULT_INTERPOLATION_POINTS = (1, 2, 3)
DEFAULT_SAMPLES_PER_CASE = 20


def _fraction_json(x: Fraction) -> dict[str, str]:
    return {"num": str(x.numerator), "den": str(x.denominator)}


def smooth_printed_masses(q: int, m: int) -> ExactDist:
    """The square-free (n = 2) per-site law as displayed for smooth curves."""
    g = math.gcd(m, q - 1)
    scale = 1 / (1 + Fraction(1, q))
    return ExactDist(
        [
            (0, (1 - Fraction(1, g)) * scale),
            (1, Fraction(1, q) * scale),
            (g, Fraction(1, g) * scale),
        ]
    )


def hyperelliptic_masses(q: int) -> ExactDist:
    """(1/2, q^-1, 1/2) / (1 + q^-1) on outcomes 0, 1, 2 for odd q."""
    scale = 1 / (1 + Fraction(1, q))
    return ExactDist(
        {0: Fraction(1, 2) * scale, 1: Fraction(1, q) * scale, 2: Fraction(1, 2) * scale}
    )


class LemmaVerifier:
    """Runs the exact verification suites and packages them as reports."""

    def __init__(
        self,
        settings: Optional[Settings] = None,
        console: Optional[Console] = None,
        version: str = "",
        reproducible: bool = False,
        max_workers: Optional[int] = None,
    ):
        """
        Args:
            settings: Budgets and bounds; defaults to Settings.from_env().
            console: Progress console (stderr).
            version: Package version recorded in reports.
            reproducible: Emit runtime_ms as None so reports are byte-identical.
            max_workers: Worker processes for the counting shards (1 runs inline).
        """
        self.settings = settings or Settings.from_env()
        self.console = console or Console(stderr=True)
        self.version = version
        self.reproducible = reproducible
        self.parallel = ParallelScanner(max_workers=max_workers, console=self.console)

        atexit.register(self.cleanup)

    def cleanup(self) -> None:
        """Shut down the worker pool."""
        self.parallel.cleanup()

    def _field(self, q: int) -> FieldSpec:
        return field_of_order(q, max_order=self.settings.max_field_order)

    def _report(
        self,
        suite: str,
        config: dict[str, Any],
        fields: Iterable[FieldSpec],
        cases: list[dict[str, Any]],
        started: float,
        seed: Optional[int] = None,
    ) -> ExperimentReport:
        failed = sum(1 for c in cases if c.get("status") == "failed")
        skipped = sum(1 for c in cases if c.get("status") == "skipped")
        runtime = None if self.reproducible else int((time.perf_counter() - started) * 1000)
        return ExperimentReport(
            kind="verify",
            config={"suite": suite, **config},
            field_info={"fields": [field_record(F.p, F.k, F.modulus_str) for F in fields]},
            seed=seed,
            runtime_ms=runtime,
            version=self.version,
            generator=GENERATOR_NAME if seed is not None else None,
            counters={"cases": len(cases), "failed": failed, "skipped": skipped},
            cases=cases,
            passed=failed == 0,
        )

    # ------------------------------------------------------------------
    # counting lemmas

    def verify_counting_lemmas(
        self,
        qs: Sequence[int],
        ns: Sequence[int],
        ds: Sequence[int],
        *,
        samples: int = DEFAULT_SAMPLES_PER_CASE,
        points: Sequence[int] = DEFAULT_INTERPOLATION_POINTS,
        seed: int = 0,
    ) -> ExperimentReport:
        """
        Brute-force checks of the power-free count and the interpolation lemmas.

        For every (q, d) one sharded pass over all polynomials of degree d
        counts the n-th power-free ones for every n and, for the sampled
        targets, those with the prescribed values or local data (valuations
        and units). Shards run on the verifier's worker pool.

        Cases beyond the enumeration budget are reported as skipped.
        """
        started = time.perf_counter()
        C = self.settings.error_constant
        cases: list[dict[str, Any]] = []
        fields = []
        max_ratio = {"interpolation": 0.0, "refined": 0.0}
        stream = 0

        for q in qs:
            spec = self._field(q)
            fields.append(spec)
            cases.extend(self._mobius_cases(spec, ns, ds))
            for d in ds:
                size = enumeration_size(spec, d)
                if size > self.settings.budget:
                    cases.extend(
                        {"check": "count", "q": q, "n": n, "d": d, "status": "skipped",
                         "reason": f"(q-1)q^d = {size} exceeds the budget"}
                        for n in ns
                    )
                    continue

                rng = make_generator(seed, stream)
                stream += 1
                interpolation: list[tuple[int, tuple[int, ...], tuple[int, ...]]] = []
                refined: list[tuple[int, tuple[int, ...], tuple[int, ...]]] = []
                if samples:
                    for n in ns:
                        for l in points:
                            if l > q:
                                continue
                            for _ in range(samples):
                                xs = tuple(int(x) for x in rng.choice(q, size=l, replace=False))
                                avals = tuple(int(a) for a in rng.integers(1, q, size=l))
                                interpolation.append((n, xs, avals))
                        for _ in range(samples):
                            s_vec = tuple(int(s) for s in rng.integers(0, n, size=q))
                            a_vec = tuple(int(a) for a in rng.integers(1, q, size=q))
                            refined.append((n, s_vec, a_vec))

                self.console.print(
                    f"Tallying {size} polynomials of degree {d} over F_{q}...",
                    markup=False,
                    highlight=False,
                )
                request = TallyRequest(
                    ns=tuple(ns), interpolation=tuple(interpolation), refined=tuple(refined)
                )
                config = ExperimentConfig(p=spec.p, k=spec.k, n=min(ns, default=2), d=d)
                tasks = range_tasks(
                    config,
                    size,
                    self.settings.range_shard_size,
                    self.settings.max_field_order,
                    tally=request,
                )
                tallies = self.parallel.run(tasks).tallies

                for n in ns:
                    brute = tallies[("count", n)]
                    expected = count_nth_power_free(spec, n, d)
                    cases.append(
                        {"check": "count", "q": q, "n": n, "d": d, "brute": brute,
                         "expected": expected,
                         "status": "passed" if brute == expected else "failed"}
                    )
                    via_mobius = count_by_inclusion_exclusion(spec, n, d)
                    cases.append(
                        {"check": "inclusion_exclusion", "q": q, "n": n, "d": d,
                         "value": via_mobius, "expected": expected,
                         "status": "passed" if via_mobius == expected else "failed"}
                    )

                for i, (n, xs, avals) in enumerate(interpolation):
                    count = tallies[("interpolation", i)]
                    l = len(xs)
                    main = interpolation_main_term(q, n, d, l)
                    case = self._envelope_case(
                        "interpolation", count, main, q ** (d / n + 1), C,
                        {"q": q, "n": n, "d": d, "l": l, "x": list(xs), "a": list(avals)},
                    )
                    max_ratio["interpolation"] = max(max_ratio["interpolation"], case["ratio"])
                    cases.append(case)

                for i, (n, s_vec, a_vec) in enumerate(refined):
                    count = tallies[("refined", i)]
                    main = refined_main_term(q, n, d, s_vec)
                    case = self._envelope_case(
                        "refined", count, main, q ** ((d - sum(s_vec)) / n + 1), C,
                        {"q": q, "n": n, "d": d, "s": list(s_vec), "a": list(a_vec)},
                    )
                    max_ratio["refined"] = max(max_ratio["refined"], case["ratio"])
                    cases.append(case)

        report = self._report(
            "counting",
            {"q": list(qs), "n": list(ns), "d": list(ds), "samples": samples,
             "points": list(points), "error_constant": C},
            fields,
            cases,
            started,
            seed=seed if samples else None,
        )
        report.notes.append(f"max interpolation ratio {max_ratio['interpolation']:.6f}")
        report.notes.append(f"max refined ratio {max_ratio['refined']:.6f}")
        return report

    @staticmethod
    def _envelope_case(
        check: str,
        count: int,
        main: Fraction,
        scale: float,
        constant: int,
        fields: dict[str, Any],
    ) -> dict[str, Any]:
        error = abs(float(count - main))
        ratio = error / scale
        return {
            "check": check,
            **fields,
            "count": count,
            "main_term": _fraction_json(main),
            "bound": constant * scale,
            "ratio": ratio,
            "status": "passed" if error <= constant * scale else "failed",
        }

    def _mobius_cases(
        self, spec: FieldSpec, ns: Sequence[int], ds: Sequence[int]
    ) -> list[dict[str, Any]]:
        """sum of mu over monic degree-j polynomials is 1, -q, 0 for j = 0, 1, >= 2."""
        top = max(ds, default=0) // max(min(ns, default=2), 2)
        cases = []
        for j in range(top + 1):
            if spec.q**j > self.settings.budget:
                break
            expected = 1 if j == 0 else (-spec.q if j == 1 else 0)
            value = mobius_sum(spec, j)
            cases.append(
                {"check": "mobius_sum", "q": spec.q, "j": j, "value": value,
                 "expected": expected,
                 "status": "passed" if value == expected else "failed"}
            )
        return cases

    # ------------------------------------------------------------------
    # local normalization rule

    def verify_local_lemma(
        self, qs: Sequence[int], ms: Sequence[int], ss: Sequence[int]
    ) -> ExperimentReport:
        """
        For f = x^s (x + a), compare at x = 0 the normalization rule, the
        Frobenius branch oracle, and a closed form whose power-residue test
        enumerates the d-th powers directly.

        Pairs with gcd(q, m) != 1 are left out; oracle cases whose splitting
        field exceeds the field bound are reported as skipped.
        """
        started = time.perf_counter()
        cases: list[dict[str, Any]] = []
        fields = []
        for q in qs:
            spec = self._field(q)
            fields.append(spec)
            for m in ms:
                if m < 2 or math.gcd(q, m) != 1:
                    continue
                for s in ss:
                    d = math.gcd(m, s)
                    powers = {spec.pow(b, d) for b in spec.units()}
                    for a in spec.units():
                        f = Poly(spec, (0,) * s + (a, 1))
                        model = SuperellipticModel(spec, m, f)
                        closed = math.gcd(d, q - 1) if a in powers else 0
                        rule = normalization_count_at(model, 0)
                        case: dict[str, Any] = {
                            "check": "local", "q": q, "m": m, "s": s, "a": a,
                            "rule": rule, "closed_form": closed,
                        }
                        try:
                            oracle = branch_orbit_count(
                                model, 0, max_order=self.settings.max_field_order
                            )
                        except SplittingFieldTooLarge as e:
                            case.update(oracle=None, status="skipped", reason=str(e))
                            cases.append(case)
                            continue
                        case["oracle"] = oracle
                        case["status"] = "passed" if rule == oracle == closed else "failed"
                        cases.append(case)
        return self._report(
            "local", {"q": list(qs), "m": list(ms), "s": list(ss)}, fields, cases, started
        )

    # ------------------------------------------------------------------
    # limiting-law identities

    def verify_theory_identities(
        self, q_max: int = 101, m_max: int = 12, n_max: int = 12
    ) -> ExperimentReport:
        """
        Exact identities over the grid q <= q_max (prime powers), 2 <= m <= m_max
        coprime to q, 2 <= n <= n_max: every per-site law sums to 1 with mean 1,
        the square-free case matches the smooth-curve masses, m = 2 matches the
        hyperelliptic masses and m = n = 3 matches the trigonal law.
        """
        started = time.perf_counter()
        cases: list[dict[str, Any]] = []
        for q in range(2, q_max + 1):
            if prime_power(q) is None:
                continue
            failures: dict[Variant, list[list[int]]] = {
                Variant.SINGULAR: [],
                Variant.NORMALIZATION: [],
            }
            checked = 0
            for m in range(2, m_max + 1):
                if math.gcd(q, m) != 1:
                    continue
                for n in range(2, n_max + 1):
                    for variant, law in (
                        (Variant.SINGULAR, xj_singular),
                        (Variant.NORMALIZATION, xj_normalization),
                    ):
                        checked += 1
                        try:
                            dist = law(TheoremParams(q, m, n, variant))
                        except TheoryError:
                            failures[variant].append([m, n])
                            continue
                        if dist.mean() != 1:
                            failures[variant].append([m, n])
                for_smooth = xj_singular(TheoremParams(q, m, 2, Variant.SINGULAR))
                cases.append(
                    {"check": "smooth_masses", "q": q, "m": m,
                     "status": "passed" if for_smooth == smooth_printed_masses(q, m) else "failed"}
                )
            for variant, failed in failures.items():
                cases.append(
                    {"check": "pmf_and_mean", "q": q, "variant": str(variant),
                     "cases": checked // 2, "failures": failed,
                     "status": "failed" if failed else "passed"}
                )
            if q % 2:
                hyper = xj_singular(TheoremParams(q, 2, 2, Variant.SINGULAR))
                cases.append(
                    {"check": "hyperelliptic", "q": q,
                     "status": "passed" if hyper == hyperelliptic_masses(q) else "failed"}
                )
            if q % 3 == 1:
                contrast = trigonal_contrast(q)
                trig = xj_normalization(TheoremParams(q, 3, 3, Variant.NORMALIZATION))
                cases.append(
                    {"check": "trigonal", "q": q,
                     "status": "passed" if trig == contrast.degree_limit else "failed"}
                )
                cases.append(
                    {"check": "trigonal_signature_mean", "q": q,
                     "status": "passed" if contrast.signature_limit.mean() == 1 else "failed"}
                )
        return self._report(
            "theory", {"q_max": q_max, "m_max": m_max, "n_max": n_max}, [], cases, started
        )

    # ------------------------------------------------------------------
    # printed normalization form

    def printed_form_discrepancy(
        self, params: TheoremParams, empirical: Optional[Histogram] = None
    ) -> ExperimentReport:
        """
        Contrast the weighted normalization law with the unweighted P(0) form.

        The unweighted masses are reported raw; they are not a pmf once some
        valuation s > 0 has gcd(m, s, q-1) > 1. With a per-site (marginal)
        histogram, the observed P(0) is compared against both forms.
        """
        started = time.perf_counter()
        weighted = xj_normalization(params)
        printed = printed_normalization_masses(params)
        printed_total = sum(printed.values(), Fraction(0))
        cases: list[dict[str, Any]] = [
            {"check": "weighted", "masses": weighted.to_json(),
             "total": _fraction_json(sum(weighted.values(), Fraction(0))),
             "status": "passed"},
            {"check": "printed",
             "masses": {str(k): _fraction_json(v) for k, v in printed.items()},
             "total": _fraction_json(printed_total),
             "normalizable": printed_total == 1,
             "agrees_with_weighted": dict(printed) == dict(weighted.items()),
             "status": "passed"},
        ]
        if empirical is not None and empirical.trials:
            observed = empirical.frequency(0)
            w0 = weighted.prob(0)
            p0 = printed.get(0, Fraction(0))
            closer = abs(observed - w0) <= abs(observed - p0)
            cases.append(
                {"check": "empirical_zero_mass", "trials": empirical.trials,
                 "observed": _fraction_json(observed),
                 "weighted": _fraction_json(w0), "printed": _fraction_json(p0),
                 "closer_to": "weighted" if closer else "printed",
                 "status": "passed" if closer or w0 == p0 else "failed"}
            )
        report = self._report(
            "printed",
            {"q": params.q, "m": params.m, "n": params.n},
            [],
            cases,
            started,
        )
        if printed_total != 1:
            report.notes.append(f"unweighted masses sum to {printed_total}, not 1")
        return report
