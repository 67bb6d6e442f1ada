import io
from dataclasses import replace

import pytest
from rich.console import Console

from superell.curvemodel import SuperellipticModel, profile
from superell.errors import BudgetExceeded, FieldError
from superell.ff import FieldSpec, make_field
from superell.models import ExperimentConfig, Statistic, SubsetFilter
from superell.parallel import ParallelScanner, ShardTask, range_tasks, sample_tasks, run_shard
from superell.polyring import Poly, count_nth_power_free, enumerate_degree_d, is_nth_power_free
from superell.scanner import (
    PolynomialScanner,
    ShardResult,
    TallyRequest,
    make_generator,
    shard_seed,
)
from superell.theorydist import Variant

BOUND = 1 << 16


def scan_all(config: ExperimentConfig, spec: FieldSpec) -> ShardResult:
    scanner = PolynomialScanner(config, spec)
    return scanner.scan_range(0, 0, (spec.q - 1) * spec.q**config.d)


class TestSiteCounts:
    """Tests for the per-x count tables."""

    def test_singular_split_cubic(self, F3: FieldSpec) -> None:
        """Test y^2 = x^3 - x over F_3, which vanishes everywhere."""
        # Arrange
        scanner = PolynomialScanner(ExperimentConfig(p=3, m=2, d=3), F3)

        # Act & Assert
        assert scanner.site_counts([0, 2, 0, 1]) == (1, 1, 1)

    def test_normalization_matches_profile(self, F5: FieldSpec) -> None:
        """Test the table lookup against the curve layer on every admitted cubic."""
        # Arrange
        config = ExperimentConfig(p=5, m=2, n=3, d=3, variant=Variant.NORMALIZATION)
        scanner = PolynomialScanner(config, F5)

        for f in enumerate_degree_d(F5, 3):
            if not is_nth_power_free(f, 3):
                continue
            expected = profile(SuperellipticModel(F5, 2, f), 3)
            if not expected.geometrically_irreducible:
                continue

            # Act
            counts = scanner.site_counts(list(f.coeffs))

            # Assert
            assert counts == tuple(site.normalization_count for site in expected.sites)

    def test_singular_matches_profile(self, F4: FieldSpec) -> None:
        """Test the affine table against the curve layer over F_4 with m = 3."""
        # Arrange
        scanner = PolynomialScanner(ExperimentConfig(p=2, k=2, m=3, d=2), F4)

        for f in enumerate_degree_d(F4, 2):
            # Act
            counts = scanner.site_counts(list(f.coeffs))

            # Assert
            expected = profile(SuperellipticModel(F4, 3, f), 2)
            assert counts == tuple(site.affine_count for site in expected.sites)

    def test_outcome_statistics(self, F5: FieldSpec) -> None:
        """Test the total, marginal and joint views of one count vector."""
        # Arrange
        counts = (2, 0, 0, 2, 1)
        base = ExperimentConfig(p=5)

        # Act & Assert
        assert PolynomialScanner(base, F5).outcome(counts) == 5
        marginal = ExperimentConfig(p=5, statistic=Statistic.MARGINAL, site=4)
        assert PolynomialScanner(marginal, F5).outcome(counts) == 1
        joint = ExperimentConfig(p=5, statistic=Statistic.JOINT)
        assert PolynomialScanner(joint, F5).outcome(counts) == counts


class TestClassify:
    """Tests for admission and the subset filters."""

    def test_rejects_powerful(self, F5: FieldSpec) -> None:
        """Test that x^2(x+1) is rejected for n = 2 and admitted for n = 3."""
        # Arrange
        result = ShardResult(index=0)
        f = Poly(F5, (0, 0, 1, 1)).coeffs

        # Act
        square = PolynomialScanner(ExperimentConfig(p=5, d=3), F5).classify(f, result)
        cube = PolynomialScanner(ExperimentConfig(p=5, n=3, d=3), F5).classify(f, result)

        # Assert
        assert square is None
        assert cube == 4
        assert result.visited == 2 and result.rejected == 1

    def test_totals_small_scan(self, F3: FieldSpec) -> None:
        """Test q = 3, m = n = 2, d = 2: 12 square-free quadratics with totals 2 or 4."""
        # Act
        result = scan_all(ExperimentConfig(p=3, m=2, n=2, d=2), F3)

        # Assert
        assert result.histogram.counts == {2: 6, 4: 6}
        assert result.counters() == {
            "visited": 18,
            "admitted": 12,
            "rejected": 6,
            "filtered": 0,
            "geometrically_reducible": 0,
        }

    @pytest.mark.parametrize(
        ("subset", "trials", "filtered"),
        [
            (SubsetFilter.ALL, 18, 0),
            (SubsetFilter.GEOMETRICALLY_IRREDUCIBLE, 12, 6),
            (SubsetFilter.IRREDUCIBLE, 15, 3),
        ],
    )
    def test_subset_filters(
        self, F3: FieldSpec, subset: SubsetFilter, trials: int, filtered: int
    ) -> None:
        """Test that c(x - r)^2 is geometrically reducible and only c = 1 is reducible over F_3."""
        # Act
        result = scan_all(ExperimentConfig(p=3, m=2, n=3, d=2, subset=subset), F3)

        # Assert
        assert result.histogram.trials == trials
        assert result.filtered == filtered

    def test_filter_monotonicity(self, F3: FieldSpec) -> None:
        """Test that the irreducible histogram is pointwise below the unfiltered one."""
        # Arrange
        base = ExperimentConfig(p=3, m=2, n=3, d=3)

        # Act
        everything = scan_all(base, F3).histogram
        irreducible = scan_all(
            ExperimentConfig(p=3, m=2, n=3, d=3, subset=SubsetFilter.IRREDUCIBLE), F3
        ).histogram

        # Assert
        for outcome, count in irreducible.counts.items():
            assert count <= everything.counts[outcome]

    def test_formal_normalization_counts(self, F3: FieldSpec) -> None:
        """Test that filter=all keeps geometrically reducible f and counts them."""
        # Arrange
        config = ExperimentConfig(p=3, m=2, n=3, d=2, variant=Variant.NORMALIZATION)

        # Act
        result = scan_all(config, F3)

        # Assert
        assert result.histogram.trials == 18
        assert result.geometrically_reducible == 6


class TestSharding:
    """Tests for shard layout, merging and the worker pool."""

    def test_range_tasks(self) -> None:
        """Test that ranges are consecutive and cover [0, size)."""
        # Arrange
        config = ExperimentConfig(p=3)

        # Act
        tasks = range_tasks(config, 18, 7, BOUND)

        # Assert
        assert [(t.start, t.stop) for t in tasks] == [(0, 7), (7, 14), (14, 18)]
        assert tasks[1].describe() == "shard 1 [7, 14)"

    def test_sample_tasks(self) -> None:
        """Test that quotas depend on the shard size only."""
        # Arrange
        config = ExperimentConfig(p=3, samples=20)

        # Act
        tasks = sample_tasks(config, 20, 7, BOUND)

        # Assert
        assert [t.quota for t in tasks] == [7, 7, 6]
        assert tasks[2].describe() == "shard 2 (6 samples)"

    def test_partition_soundness(self, F4: FieldSpec, quiet_console: Console) -> None:
        """Test that merged shards equal a single pass over the whole range."""
        # Arrange
        config = ExperimentConfig(p=2, k=2, m=3, n=2, d=3, statistic=Statistic.JOINT)
        size = 3 * 4**3
        scanner = ParallelScanner(max_workers=1, console=quiet_console)

        # Act
        merged = scanner.run(range_tasks(config, size, 17, BOUND))
        whole = scan_all(config, F4)

        # Assert
        assert merged.histogram.counts == whole.histogram.counts
        assert merged.counters() == whole.counters()

    def test_worker_pool(self, quiet_console: Console) -> None:
        """Test that two worker processes reproduce the inline result."""
        # Arrange
        config = ExperimentConfig(p=5, m=2, n=2, d=3)
        tasks = range_tasks(config, 4 * 5**3, 50, BOUND)
        pooled = ParallelScanner(max_workers=2, console=quiet_console)

        # Act
        try:
            result = pooled.run(tasks)
        finally:
            pooled.cleanup()
        inline = ParallelScanner(max_workers=1, console=quiet_console).run(tasks)

        # Assert
        assert result.histogram.counts == inline.histogram.counts
        assert result.counters() == inline.counters()

    def test_progress_and_failure(self) -> None:
        """Test that a failing shard is reported and re-raised."""
        # Arrange
        buffer = io.StringIO()
        console = Console(file=buffer, width=200)
        task = ShardTask(0, ExperimentConfig(p=5), max_field_order=2, start=0, stop=10)

        # Act & Assert
        with pytest.raises(FieldError):
            ParallelScanner(max_workers=1, console=console).run([task])
        assert "[1/1] Failed shard 0 [0, 10)" in buffer.getvalue()

    def test_progress_lines(self) -> None:
        """Test one Completed line per shard."""
        # Arrange
        buffer = io.StringIO()
        console = Console(file=buffer, width=200)
        tasks = range_tasks(ExperimentConfig(p=3, d=2), 18, 10, BOUND)

        # Act
        ParallelScanner(max_workers=1, console=console).run(tasks)

        # Assert
        assert buffer.getvalue().splitlines() == [
            "[1/2] Completed shard 0 [0, 10)",
            "[2/2] Completed shard 1 [10, 18)",
        ]


class TestSampling:
    """Tests for the seeded Monte-Carlo streams."""

    def test_shard_seed(self) -> None:
        """Test that shard streams are keyed by seed XOR shard index."""
        # Act & Assert
        assert shard_seed(5, 1) == 4
        first = make_generator(5, 1).integers(0, 100, size=10)
        second = make_generator(4, 0).integers(0, 100, size=10)
        assert first.tolist() == second.tolist()

    def test_quota_is_admitted_draws(self, F3: FieldSpec) -> None:
        """Test that a shard stops at exactly `quota` admitted polynomials."""
        # Arrange
        config = ExperimentConfig(p=3, m=2, n=2, d=4, seed=11)

        # Act
        result = PolynomialScanner(config, F3).sample(0, 300)

        # Assert
        assert result.histogram.trials == 300
        assert result.visited == 300 + result.rejected

    def test_deterministic(self, F5: FieldSpec) -> None:
        """Test that the same seed and shard give identical histograms."""
        # Arrange
        config = ExperimentConfig(p=5, m=2, n=2, d=5, seed=2024, statistic=Statistic.JOINT)

        # Act
        first = PolynomialScanner(config, F5).sample(3, 200)
        second = PolynomialScanner(config, F5).sample(3, 200)

        # Assert
        assert first.histogram.counts == second.histogram.counts
        assert first.counters() == second.counters()

    def test_linear_draws_are_all_admitted(self, F4: FieldSpec) -> None:
        """Test that degree-1 draws are square-free, so none is rejected."""
        # Arrange
        config = ExperimentConfig(p=2, k=2, m=3, n=2, d=1, seed=7)

        # Act
        result = PolynomialScanner(config, F4).sample(0, 100)

        # Assert
        assert result.visited == 100
        assert result.rejected == 0

    def test_rejection_cap(self, F3: FieldSpec) -> None:
        """Test that hitting the rejection cap raises instead of looping."""
        # Arrange
        config = ExperimentConfig(p=3, d=4)

        # Act & Assert
        with pytest.raises(BudgetExceeded):
            PolynomialScanner(config, F3).sample(0, 10, rejection_factor=0)

    def test_task_carries_rejection_factor(self) -> None:
        """Test that sample tasks hand their rejection factor to the scanner."""
        # Arrange
        tasks = sample_tasks(ExperimentConfig(p=3, d=4), 10, 10, BOUND, rejection_factor=0)

        # Act & Assert
        assert tasks[0].rejection_factor == 0
        with pytest.raises(BudgetExceeded):
            run_shard(tasks[0])

    def test_run_shard_dispatch(self) -> None:
        """Test that a quota task samples and a range task enumerates."""
        # Arrange
        config = ExperimentConfig(p=3, d=2, seed=1)

        # Act
        sampled = run_shard(ShardTask(0, config, BOUND, quota=5))
        scanned = run_shard(ShardTask(0, config, BOUND, start=0, stop=18))

        # Assert
        assert sampled.histogram.trials == 5
        assert scanned.visited == 18


BLOCK_CONFIGS = [
    ExperimentConfig(p=3, m=2, n=2, d=5),
    ExperimentConfig(p=5, m=4, n=4, d=4, variant=Variant.NORMALIZATION),
    ExperimentConfig(p=2, k=2, m=3, n=3, d=4, statistic=Statistic.JOINT),
    ExperimentConfig(p=3, m=2, n=3, d=4, subset=SubsetFilter.GEOMETRICALLY_IRREDUCIBLE),
    ExperimentConfig(p=5, m=4, n=3, d=4, subset=SubsetFilter.IRREDUCIBLE),
    ExperimentConfig(
        p=7, m=3, n=3, d=3, variant=Variant.NORMALIZATION, statistic=Statistic.MARGINAL, site=2
    ),
    ExperimentConfig(p=3, k=2, m=2, n=2, d=3, variant=Variant.NORMALIZATION),
]


class TestBlockPath:
    """Tests that the numpy path agrees with the per-polynomial path."""

    @pytest.mark.parametrize("config", BLOCK_CONFIGS)
    def test_scan_range(self, config: ExperimentConfig) -> None:
        """Test identical histograms and counters on a range with ragged ends."""
        # Arrange
        spec = make_field(config.p, config.k)
        size = (spec.q - 1) * spec.q**config.d
        fast = PolynomialScanner(config, spec)
        slow = PolynomialScanner(config, spec, vectorized=False)

        # Act
        got = fast.scan_range(0, 5, size - 3)
        expected = slow.scan_range(0, 5, size - 3)

        # Assert
        assert fast.vectorized and not slow.vectorized
        assert got.histogram.counts == expected.histogram.counts
        assert got.counters() == expected.counters()

    @pytest.mark.parametrize("config", BLOCK_CONFIGS)
    def test_sample(self, config: ExperimentConfig) -> None:
        """Test identical draws, stopping points and histograms from one stream."""
        # Arrange
        spec = make_field(config.p, config.k)
        seeded = replace(config, seed=99)

        # Act
        got = PolynomialScanner(seeded, spec).sample(4, 300)
        expected = PolynomialScanner(seeded, spec, vectorized=False).sample(4, 300)

        # Assert
        assert got.histogram.counts == expected.histogram.counts
        assert got.counters() == expected.counters()

    def test_cap_inside_a_batch(self, F3: FieldSpec) -> None:
        """Test that both paths stop at the same draw when the cap falls mid-batch."""
        # Arrange
        config = ExperimentConfig(p=3, m=2, n=2, d=6, seed=5)

        # Act & Assert
        for vectorized in (True, False):
            with pytest.raises(BudgetExceeded, match="after 101 draws"):
                PolynomialScanner(config, F3, vectorized=vectorized).sample(0, 100, 1)

    def test_constant_polynomials_fall_back(self, F5: FieldSpec) -> None:
        """Test that d = 0 runs on the per-polynomial path."""
        # Arrange
        scanner = PolynomialScanner(ExperimentConfig(p=5, d=0), F5)

        # Act
        result = scanner.scan_range(0, 0, 4)

        # Assert
        assert not scanner.vectorized
        assert result.histogram.trials == 4


class TestTallies:
    """Tests for the counting shards."""

    @pytest.fixture
    def request_f3(self) -> TallyRequest:
        return TallyRequest(
            ns=(2, 3),
            interpolation=((2, (0,), (1,)), (3, (1, 2), (2, 2)), (2, (0, 1, 2), (1, 1, 1))),
            refined=((2, (0, 1, 0), (1, 2, 2)), (3, (2, 0, 1), (1, 1, 2))),
        )

    def test_block_matches_per_polynomial(self, F3: FieldSpec, request_f3: TallyRequest) -> None:
        """Test identical tallies from both paths over two ranges."""
        # Arrange
        config = ExperimentConfig(p=3, n=2, d=6)
        fast = PolynomialScanner(config, F3)
        slow = PolynomialScanner(config, F3, vectorized=False)

        for start, stop in ((0, 2 * 3**6), (100, 700)):
            # Act
            got = fast.tally_range(0, start, stop, request_f3).tallies
            expected = slow.tally_range(0, start, stop, request_f3).tallies

            # Assert
            keys = [("count", 2), ("count", 3)]
            keys += [("interpolation", i) for i in range(3)]
            keys += [("refined", i) for i in range(2)]
            assert [got[k] for k in keys] == [expected[k] for k in keys]

    def test_counts_match_closed_form(self, F4: FieldSpec, quiet_console: Console) -> None:
        """Test that sharded tallies add up to the power-free counts."""
        # Arrange
        config = ExperimentConfig(p=2, k=2, n=2, d=5)
        size = 3 * 4**5
        tasks = range_tasks(config, size, 1000, BOUND, tally=TallyRequest(ns=(2, 3, 4)))

        # Act
        merged = ParallelScanner(max_workers=1, console=quiet_console).run(tasks)

        # Assert
        assert merged.visited == size
        assert merged.tallies[("count", 2)] == count_nth_power_free(F4, 2, 5)
        assert merged.tallies[("count", 3)] == count_nth_power_free(F4, 3, 5)
        assert merged.tallies[("count", 4)] == count_nth_power_free(F4, 4, 5)

    def test_run_shard_dispatch(self) -> None:
        """Test that a task with a tally request counts instead of scanning."""
        # Arrange
        config = ExperimentConfig(p=3, d=2)

        # Act
        task = ShardTask(0, config, BOUND, start=0, stop=18, tally=TallyRequest(ns=(2,)))
        result = run_shard(task)

        # Assert
        assert result.tallies[("count", 2)] == 12
        assert result.histogram.trials == 0
