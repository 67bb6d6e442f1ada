import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from superell.curvemodel import (
    SuperellipticModel,
    affine_count_at,
    branch_orbit_count,
    is_geometrically_irreducible,
    is_irreducible_over_Fq,
    normalization_count_at,
    profile,
)
from superell.errors import (
    GeometricallyReducibleError,
    PolynomialError,
    SplittingFieldTooLarge,
    TheoryError,
)
from superell.ff import FieldSpec, field_of_order, make_field
from superell.polyring import Poly, enumerate_degree_d, is_nth_power_free

F5 = make_field(5)

ORACLE_ORDERS = [3, 4, 5, 7, 8, 9, 11, 13]


def model(q: int, m: int, *coeffs: int) -> SuperellipticModel:
    spec = field_of_order(q)
    return SuperellipticModel(spec, m, Poly(spec, coeffs))


def shift(f: Poly, c: int) -> Poly:
    """f(x - c)."""
    out = Poly.zero(f.spec)
    step = Poly.linear(f.spec, c)
    for i, coeff in enumerate(f.coeffs):
        out = out + (step**i).scale(coeff)
    return out


def nonzero_polys(spec: FieldSpec, max_degree: int) -> st.SearchStrategy[Poly]:
    return (
        st.lists(st.integers(min_value=0, max_value=spec.q - 1), min_size=1, max_size=max_degree + 1)
        .map(lambda c: Poly(spec, tuple(c)))
        .filter(lambda f: not f.is_zero)
    )


class TestSuperellipticModel:
    """Tests for the model's standing hypotheses."""

    def test_m_at_least_two(self) -> None:
        """Test that y^1 = f is rejected."""
        # Act & Assert
        with pytest.raises(TheoryError):
            model(5, 1, 0, 1)

    def test_coprime_characteristic(self) -> None:
        """Test that gcd(q, m) != 1 is rejected."""
        # Act & Assert
        with pytest.raises(TheoryError, match="gcd"):
            model(3, 3, 0, 1)
        with pytest.raises(TheoryError):
            model(4, 2, 0, 1)

    def test_zero_f(self) -> None:
        """Test that f = 0 is rejected."""
        # Act & Assert
        with pytest.raises(PolynomialError):
            model(5, 2)

    def test_mixed_fields(self) -> None:
        """Test that f must live over the model's field."""
        # Act & Assert
        with pytest.raises(PolynomialError):
            SuperellipticModel(make_field(7), 2, Poly(F5, (0, 1)))


class TestAffineCount:
    """Tests for affine_count_at."""

    @pytest.mark.parametrize(("x0", "expected"), [(0, 1), (3, 2), (1, 0)])
    def test_examples(self, x0: int, expected: int) -> None:
        """Test y^2 = x^2(x+1) over F_5 at a root, a square value and a nonsquare value."""
        # Arrange
        curve = model(5, 2, 0, 0, 1, 1)

        # Act & Assert
        assert affine_count_at(curve, x0) == expected
        assert affine_count_at(curve, F5.element(x0)) == expected

    @pytest.mark.parametrize(("q", "m"), [(3, 2), (4, 3), (5, 2), (5, 4), (7, 3)])
    @pytest.mark.parametrize("d", [1, 2])
    def test_total_over_all_f(self, q: int, m: int, d: int) -> None:
        """Test sum over f and x0 of root_count(f(x0), m) = q^(d+1) (q-1)."""
        # Arrange
        spec = field_of_order(q)

        # Act
        total = sum(
            affine_count_at(SuperellipticModel(spec, m, f), x0)
            for f in enumerate_degree_d(spec, d)
            for x0 in spec.elements()
        )

        # Assert
        assert total == q ** (d + 1) * (q - 1)


class TestIrreducibility:
    """Tests for the geometric and F_q irreducibility classifications."""

    def test_geometric_examples(self) -> None:
        """Test y^2 = x and y^2 = x^2 over F_5, and y^4 = 2x^2 over F_3."""
        # Act & Assert
        assert is_geometrically_irreducible(model(5, 2, 0, 1))
        assert not is_geometrically_irreducible(model(5, 2, 0, 0, 1))
        assert not is_geometrically_irreducible(model(3, 4, 0, 0, 2))

    def test_reducible_witness_over_f9(self, F9: FieldSpec) -> None:
        """Test that y^4 - 2x^2 splits over F_9 via c^2 = 2 but stays irreducible over F_3."""
        # Arrange
        two = F9.from_int(2)

        # Act
        roots = [c for c in F9.units() if F9.mul(c, c) == two]

        # Assert
        assert len(roots) == 2
        assert is_irreducible_over_Fq(model(3, 4, 0, 0, 2))

    def test_reducible_witness_over_f5(self) -> None:
        """Test that y^2 - 4x^2 = (y - 2x)(y + 2x) over F_5."""
        # Arrange
        c = 2

        # Act
        product = Poly(F5, (0, c)) * Poly(F5, (0, F5.neg(c)))

        # Assert
        assert product == Poly(F5, (0, 0, F5.neg(4)))
        assert not is_irreducible_over_Fq(model(5, 2, 0, 0, 4))

    @pytest.mark.parametrize(
        ("q", "m", "coeffs", "expected"),
        [
            (5, 2, (0, 0, 4), False),
            (5, 2, (0, 0, 2), True),
            (7, 3, (0, 1, 1), True),
            (5, 4, (0, 0, 0, 0, 1), False),
            (7, 4, (0, 0, 3), True),
            (7, 4, (0, 0, 2), False),
        ],
    )
    def test_over_fq_examples(
        self, q: int, m: int, coeffs: tuple[int, ...], expected: bool
    ) -> None:
        """Test the binomial criterion on squares, nonsquares and a square-free f."""
        # Act & Assert
        assert is_irreducible_over_Fq(model(q, m, *coeffs)) is expected

    def test_minus_four_fourth_power(self) -> None:
        """Test y^4 + 4x^4 over F_7, reducible although -4 = 3 is not a square."""
        # Arrange
        F7 = make_field(7)
        minus_four = F7.neg(F7.from_int(4))
        curve = model(7, 4, 0, 0, 0, 0, minus_four)

        # Act & Assert
        assert not F7.is_rth_power(minus_four, 2)
        assert not is_irreducible_over_Fq(curve)
        assert not is_geometrically_irreducible(curve)

    def test_geometric_implies_over_fq(self) -> None:
        """Test that every geometrically irreducible y^2 = f is irreducible over F_5."""
        # Arrange
        spec = field_of_order(5)

        for f in enumerate_degree_d(spec, 2):
            curve = SuperellipticModel(spec, 2, f)

            # Act
            over_fq = is_irreducible_over_Fq(curve)

            # Assert
            if is_geometrically_irreducible(curve):
                assert over_fq

    def test_constant_f_is_rejected(self) -> None:
        """Test that irreducibility is not classified for constant f."""
        # Act & Assert
        with pytest.raises(PolynomialError):
            is_geometrically_irreducible(model(5, 2, 3))
        with pytest.raises(PolynomialError):
            is_irreducible_over_Fq(model(5, 2, 3))


class TestNormalizationCount:
    """Tests for normalization_count_at and its Frobenius oracle."""

    @pytest.mark.parametrize(
        ("q", "m", "coeffs", "expected"),
        [
            (5, 2, (0, 0, 1, 1), 2),
            (5, 2, (0, 0, 2, 1), 0),
            (7, 3, (0, 0, 3, 1), 1),
            (5, 4, (0, 0, 1, 1), 2),
        ],
    )
    def test_examples(self, q: int, m: int, coeffs: tuple[int, ...], expected: int) -> None:
        """Test the local rule at x0 = 0 and the oracle on the same models."""
        # Arrange
        curve = model(q, m, *coeffs)

        # Act & Assert
        assert normalization_count_at(curve, 0) == expected
        assert branch_orbit_count(curve, 0) == expected

    def test_reducible_model(self) -> None:
        """Test that y^2 = x^2 has no normalization count."""
        # Act & Assert
        with pytest.raises(GeometricallyReducibleError):
            normalization_count_at(model(5, 2, 0, 0, 1), 0)
        with pytest.raises(GeometricallyReducibleError):
            branch_orbit_count(model(5, 2, 0, 0, 1), 0)

    def test_oracle_bound(self) -> None:
        """Test that the oracle refuses splitting fields above the bound."""
        # Arrange
        curve = model(5, 2, 0, 0, 2, 1)

        # Act & Assert
        with pytest.raises(SplittingFieldTooLarge):
            branch_orbit_count(curve, 0, max_order=24)

    @pytest.mark.parametrize("q", ORACLE_ORDERS)
    def test_oracle_agrees_on_grid(self, q: int) -> None:
        """Test rule = oracle for f = x^s (x + a), m <= 8 and s <= 8 at x0 = 0."""
        # Arrange
        spec = field_of_order(q)
        compared = 0

        for m in range(2, 9):
            if math.gcd(q, m) != 1:
                continue
            for s in range(9):
                for a in spec.units():
                    curve = SuperellipticModel(spec, m, Poly(spec, (0,) * s + (a, 1)))

                    # Act
                    rule = normalization_count_at(curve, 0)
                    try:
                        oracle = branch_orbit_count(curve, 0)
                    except SplittingFieldTooLarge:
                        continue

                    # Assert
                    assert rule == oracle, (q, m, s, a)
                    assert rule in (0, math.gcd(math.gcd(m, s), q - 1))
                    compared += 1

        assert compared > 0

    @pytest.mark.parametrize(("q", "m"), [(3, 2), (4, 3), (5, 2), (5, 3), (7, 2), (7, 3)])
    def test_smooth_agreement(self, q: int, m: int) -> None:
        """Test that square-free f have equal affine and normalization counts at every x0."""
        # Arrange
        spec = field_of_order(q)

        for d in range(1, 4):
            for f in enumerate_degree_d(spec, d):
                if not is_nth_power_free(f, 2):
                    continue

                # Act
                result = profile(SuperellipticModel(spec, m, f), 2)

                # Assert
                assert result.smooth
                assert all(site.normalization_count == site.affine_count for site in result.sites)

    @pytest.mark.parametrize(("q", "m"), [(5, 2), (7, 3), (4, 3)])
    def test_unit_scaling(self, q: int, m: int) -> None:
        """Test that replacing f by u^m f leaves every count unchanged."""
        # Arrange
        spec = field_of_order(q)

        for f, u in itertools.product(enumerate_degree_d(spec, 2), spec.units()):
            scaled = f.scale(spec.pow(u, m))

            # Act
            before = profile(SuperellipticModel(spec, m, f), 2)
            after = profile(SuperellipticModel(spec, m, scaled), 2)

            # Assert
            assert [s.affine_count for s in before.sites] == [s.affine_count for s in after.sites]
            assert [s.normalization_count for s in before.sites] == [
                s.normalization_count for s in after.sites
            ]

    @given(nonzero_polys(F5, 4), nonzero_polys(F5, 2), st.sampled_from([2, 3, 4]))
    def test_mth_power_absorption(self, f: Poly, g: Poly, m: int) -> None:
        """Test that f and f g^m share normalization counts wherever g does not vanish."""
        # Act
        plain = profile(SuperellipticModel(F5, m, f), 2)
        absorbed = profile(SuperellipticModel(F5, m, f * g**m), 2)

        # Assert
        for x0 in F5.elements():
            if g.eval(x0):
                assert plain.sites[x0].normalization_count == absorbed.sites[x0].normalization_count

    @given(nonzero_polys(F5, 5), st.integers(min_value=0, max_value=4))
    def test_translation_equivariance(self, f: Poly, c: int) -> None:
        """Test that the profile of f(x - c) at x0 + c is the profile of f at x0."""
        # Act
        plain = profile(SuperellipticModel(F5, 2, f), 3)
        moved = profile(SuperellipticModel(F5, 2, shift(f, c)), 3)

        # Assert
        for x0 in F5.elements():
            here, there = plain.sites[x0], moved.sites[F5.add(x0, c)]
            assert (here.s, here.a, here.affine_count, here.normalization_count) == (
                there.s,
                there.a,
                there.affine_count,
                there.normalization_count,
            )


class TestProfile:
    """Tests for profile and its JSON form."""

    def test_split_cubic(self) -> None:
        """Test y^2 = x(x+1)(x+2) over F_3, which vanishes at every x0."""
        # Act
        result = profile(model(3, 2, 0, 2, 0, 1), 2)

        # Assert
        assert result.smooth
        assert [site.affine_count for site in result.sites] == [1, 1, 1]
        assert result.total_affine == 3
        assert result.total_normalized == 3

    def test_geometrically_reducible(self) -> None:
        """Test that y^2 = x^6 over F_3 has undefined normalization counts."""
        # Act
        result = profile(model(3, 2, 0, 0, 0, 0, 0, 0, 1), 2)

        # Assert
        assert not result.geometrically_irreducible
        assert result.total_normalized is None
        assert result.to_dict()["totals"]["normalized"] == "undefined"
        assert result.to_dict()["sites"][0]["normalized"] == "undefined"

    def test_bijective_f(self) -> None:
        """Test y^3 = x over F_4, whose affine total is q."""
        # Act
        result = profile(model(4, 3, 0, 1), 3)

        # Assert
        assert result.total_affine == 4

    def test_constant_f(self) -> None:
        """Test the degenerate constant case: s = 0 everywhere and false flags."""
        # Act
        result = profile(model(5, 2, 4), 2)

        # Assert
        assert [site.affine_count for site in result.sites] == [2] * 5
        assert all(site.s == 0 for site in result.sites)
        assert not result.geometrically_irreducible
        assert not result.irreducible_over_Fq

    def test_flags(self) -> None:
        """Test the flags of x^2(x+1) over F_5 with n = 2 and n = 3."""
        # Arrange
        curve = model(5, 2, 0, 0, 1, 1)

        # Act
        square = profile(curve, 2)
        cube = profile(curve, 3)

        # Assert
        assert not square.smooth
        assert not square.n_power_free
        assert cube.n_power_free
        assert square.to_dict()["flags"] == {
            "smooth": False,
            "geometrically_irreducible": True,
            "irreducible": True,
            "n": 2,
            "n_power_free": False,
        }

    def test_totals_match_sites(self) -> None:
        """Test that the totals are the sums of the per-x entries."""
        # Act
        result = profile(model(5, 2, 0, 0, 1, 1), 2)

        # Assert
        assert result.total_affine == sum(site.affine_count for site in result.sites) == 4
        assert [site.normalization_count for site in result.sites] == [2, 0, 0, 2, 1]
        assert result.total_normalized == 5

    def test_n_below_two(self) -> None:
        """Test that n < 2 is rejected."""
        # Act & Assert
        with pytest.raises(TheoryError):
            profile(model(5, 2, 0, 1), 1)
