import atexit
import time
from dataclasses import replace
from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version
from typing import Iterable, Optional

from rich.console import Console

from superell.comparator import DistributionComparator
from superell.config import Settings
from superell.errors import ConfigError
from superell.ff import FieldSpec, make_field
from superell.models import (
    ExperimentConfig,
    ExperimentReport,
    Mode,
    Statistic,
    field_record,
)
from superell.parallel import ParallelScanner, range_tasks, sample_tasks
from superell.polyring import count_nth_power_free, enumeration_size
from superell.scanner import GENERATOR_NAME, ShardResult
from superell.theorydist import ExactDist, JointTheory, TheoremParams, total_dist, xj

DEFAULT_NOISE_BAND = 0.10


def package_version() -> str:
    try:
        return version("superell")
    except PackageNotFoundError:
        return "0+unknown"


class ExperimentOrchestrator:
    """
    Runs scans end to end: validate, fan out shards, merge, compare with theory.

    Owns the worker pool and releases it at exit.
    """

    def __init__(
        self,
        settings: Optional[Settings] = None,
        max_workers: Optional[int] = None,
        console: Optional[Console] = None,
        reproducible: bool = False,
    ):
        """
        Args:
            settings: Budgets and bounds; defaults to Settings.from_env().
            max_workers: Worker processes for shard fan-out (1 runs inline).
            console: Progress console (stderr).
            reproducible: Emit runtime_ms as None so reports are byte-identical.
        """
        self.settings = settings or Settings.from_env()
        self.console = console or Console(stderr=True)
        self.parallel = ParallelScanner(max_workers=max_workers, console=self.console)
        self.comparator = DistributionComparator()
        self.reproducible = reproducible

        atexit.register(self._cleanup)

    def field_for(self, config: ExperimentConfig) -> FieldSpec:
        return make_field(config.p, config.k, max_order=self.settings.max_field_order)

    def theory_for(self, config: ExperimentConfig) -> ExactDist | JointTheory:
        """The limiting law of the configured statistic."""
        site = xj(TheoremParams(config.q, config.m, config.n, config.variant))
        if config.statistic is Statistic.TOTAL:
            return total_dist(site, config.q)
        if config.statistic is Statistic.MARGINAL:
            return site
        return JointTheory(site=site, q=config.q)

    def run_exhaustive(self, config: ExperimentConfig) -> ExperimentReport:
        """
        Enumerate every polynomial of exact degree d and compare with theory.

        Raises:
            ConfigError: If the configuration is invalid or exceeds the budget.
        """
        config = replace(config, mode=Mode.EXHAUSTIVE)
        config.validate(self.settings)
        spec = self.field_for(config)
        tasks = range_tasks(
            config,
            enumeration_size(spec, config.d),
            self.settings.range_shard_size,
            self.settings.max_field_order,
        )
        self.console.print(
            f"Scanning {config.q - 1}*{config.q}^{config.d} polynomials in {len(tasks)} shards...",
            markup=False,
            highlight=False,
        )
        started = time.perf_counter()
        result = self.parallel.run(tasks)
        return self._build_report("exhaustive", config, spec, result, started, seed=None)

    def run_montecarlo(self, config: ExperimentConfig) -> ExperimentReport:
        """
        Draw `samples` admitted polynomials with the seeded shard streams.

        Raises:
            ConfigError: If the configuration is invalid.
            BudgetExceeded: If a shard hits its rejection cap.
        """
        config = replace(config, mode=Mode.MONTECARLO)
        config.validate(self.settings)
        spec = self.field_for(config)
        tasks = sample_tasks(
            config,
            config.samples,
            self.settings.shard_size,
            self.settings.max_field_order,
            self.settings.rejection_factor,
        )
        self.console.print(
            f"Sampling {config.samples} polynomials in {len(tasks)} shards...",
            markup=False,
            highlight=False,
        )
        started = time.perf_counter()
        result = self.parallel.run(tasks)
        report = self._build_report("montecarlo", config, spec, result, started, seed=config.seed)
        report.generator = GENERATOR_NAME
        report.counters["draws"] = result.visited
        report.notes.extend(self._agreement_notes(config, spec, result))
        return report

    def _agreement_notes(
        self, config: ExperimentConfig, spec: FieldSpec, result: ShardResult
    ) -> list[str]:
        """
        Whether the draws look like the laws they come from: the power-free
        rate against its exact finite-d value, and each observed outcome
        against the limiting law, both at 5 binomial standard deviations.
        """
        notes = []
        if result.visited:
            power_free = result.visited - result.rejected
            rate = Fraction(power_free, result.visited)
            expected = Fraction(
                count_nth_power_free(spec, config.n, config.d), enumeration_size(spec, config.d)
            )
            verdict = (
                "within"
                if self.comparator.within_binomial_band(power_free, result.visited, expected)
                else "outside"
            )
            notes.append(
                f"acceptance rate {float(rate):.6f} ({verdict} 5 sigma of {float(expected):.6f})"
            )
        histogram = result.histogram
        if histogram.trials:
            theory = self.theory_for(config)
            if isinstance(theory, ExactDist):
                reference = dict(theory.items())
            else:
                reference = {outcome: theory.prob(outcome) for outcome, _ in histogram.items()}
            violations = self.comparator.binomial_band(histogram, reference)
            if violations:
                notes.append(
                    f"theory agreement: {len(violations)} outcome(s) outside 5 sigma of the limiting law"
                )
            else:
                notes.append("theory agreement: every outcome within 5 sigma of the limiting law")
        return notes

    def convergence_scan(
        self,
        config: ExperimentConfig,
        degrees: Iterable[int],
        gate: Optional[float] = None,
        noise_band: float = DEFAULT_NOISE_BAND,
    ) -> ExperimentReport:
        """
        TV distance of the total-count statistic for each degree.

        Passes when the TV at the largest degree is at most `gate` (if given)
        and each TV is at most the previous one times (1 + noise_band).

        Raises:
            ConfigError: If no degree is given or a degree exceeds the budget.
        """
        degrees = sorted(set(degrees))
        if not degrees:
            raise ConfigError("--d-range: no degrees to scan")
        base = replace(config, statistic=Statistic.TOTAL, mode=Mode.EXHAUSTIVE)
        for d in degrees:
            replace(base, d=d).validate(self.settings)

        started = time.perf_counter()
        cases = []
        tvs: list[Fraction] = []
        last: Optional[ExperimentReport] = None
        for d in degrees:
            last = self.run_exhaustive(replace(base, d=d))
            assert last.tv is not None
            tvs.append(last.tv)
            cases.append(
                {
                    "d": d,
                    "trials": last.trials,
                    "tv": {
                        "num": str(last.tv.numerator),
                        "den": str(last.tv.denominator),
                        "float": float(last.tv),
                    },
                    "mean": None if last.mean is None else str(last.mean),
                }
            )
        assert last is not None

        notes = []
        monotone = True
        for (d0, tv0), (d1, tv1) in zip(zip(degrees, tvs), zip(degrees[1:], tvs[1:])):
            if float(tv1) > float(tv0) * (1 + noise_band):
                monotone = False
                notes.append(f"TV increased from d={d0} to d={d1} beyond the noise band")
        within_gate = gate is None or float(tvs[-1]) <= gate
        if not within_gate:
            notes.append(f"non-convergence: TV {float(tvs[-1]):.6f} at d={degrees[-1]} exceeds gate {gate}")

        last.kind = "convergence"
        last.config = {
            **base.to_dict(),
            "d_range": [degrees[0], degrees[-1]],
            "gate": gate,
            "noise_band": noise_band,
        }
        last.cases = cases
        last.notes.extend(notes)
        last.passed = monotone and within_gate
        last.runtime_ms = self._elapsed(started)
        return last

    def _elapsed(self, started: float) -> Optional[int]:
        if self.reproducible:
            return None
        return int((time.perf_counter() - started) * 1000)

    def _build_report(
        self,
        kind: str,
        config: ExperimentConfig,
        spec: FieldSpec,
        result: ShardResult,
        started: float,
        seed: Optional[int],
    ) -> ExperimentReport:
        theory = self.theory_for(config)
        histogram = result.histogram
        if isinstance(theory, ExactDist):
            theory_rows = list(theory.items())
        else:
            theory_rows = [(outcome, theory.prob(outcome)) for outcome, _ in histogram.items()]
        tv = self.comparator.tv_distance(histogram, theory).exact if histogram.trials else None
        return ExperimentReport(
            kind=kind,
            config=config.to_dict(),
            field_info=field_record(spec.p, spec.k, spec.modulus_str),
            seed=seed,
            histogram=histogram,
            theory=theory_rows,
            tv=tv,
            mean=histogram.mean(),
            runtime_ms=self._elapsed(started),
            version=package_version(),
            counters=result.counters(),
        )

    def _cleanup(self) -> None:
        """Shut down the worker pool."""
        self.parallel.cleanup()

    def cleanup(self) -> None:
        """Manually trigger cleanup of the worker pool."""
        self._cleanup()
