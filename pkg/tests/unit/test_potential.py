"""Unit tests for potential models."""

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from app.core.errors import SymmetryError, ValidationError
from app.domain.models.potential import (
    BUILTIN_POTENTIALS,
    PiecewiseConstantPotential,
    SplinePotential,
    ZeroPotential,
    check_bump,
    even_halfline,
    figure1_left_whole,
    figure1_right_whole,
    parse_potential,
    reflect,
    symmetry_defect,
)


class TestEvaluate:
    """Test point evaluation."""

    def test_zero_potential_is_zero(self, zero_potential):
        """Test the zero potential vanishes everywhere."""
        assert zero_potential.evaluate(0.3) == 0.0
        assert zero_potential.evaluate(-5.0) == 0.0

    def test_piecewise_constant_values(self, step_well):
        """Test values inside each segment."""
        assert step_well.evaluate(0.25) == 1.0
        assert step_well.evaluate(0.75) == -4.0

    def test_discontinuity_returns_right_limit(self, step_well):
        """Test evaluation at a jump picks the right-hand segment."""
        assert step_well.evaluate(0.5) == -4.0

    def test_zero_outside_support(self, step_well, rng):
        """Test V vanishes outside [0, B]."""
        xs = np.concatenate([rng.uniform(-10, -1e-9, 500), rng.uniform(1 + 1e-9, 10, 500)])
        assert np.all(step_well.evaluate_many(xs) == 0.0)

    def test_spline_passes_through_knots(self):
        """Test the figure1 spline interpolates its knot values."""
        p = figure1_left_whole()
        assert p.evaluate(0.0) == pytest.approx(-0.2, abs=1e-14)
        assert p.evaluate(-1.0) == pytest.approx(-1.0, abs=1e-14)
        assert p.evaluate(2.5) == 0.0

    def test_evaluate_many_matches_evaluate(self, rng):
        """Test vectorized evaluation agrees with scalar evaluation."""
        p = figure1_right_whole()
        xs = rng.uniform(-2.5, 2.5, 200)
        expected = np.array([p.evaluate(float(x)) for x in xs])
        np.testing.assert_allclose(p.evaluate_many(xs), expected, atol=1e-15)


class TestBreakpoints:
    """Test breakpoint enumeration."""

    def test_zero_potential(self, zero_potential):
        """Test breakpoints of V = 0 are the support ends."""
        assert zero_potential.breakpoints() == [0.0, 1.0]

    def test_piecewise_constant(self, step_well):
        """Test piecewise-constant breakpoints."""
        assert step_well.breakpoints() == [0.0, 0.5, 1.0]

    def test_figure1_halfline_orientation(self):
        """Test the half-line knots run from the support edge to the centre."""
        half = even_halfline(figure1_left_whole())
        assert half.breakpoints() == [0.0, 0.5, 1.0, 2.0]


class TestBounds:
    """Test bounds_on envelopes."""

    def test_piecewise_constant_bounds(self, step_well):
        """Test inf and sup over the whole support."""
        assert step_well.bounds_on(0.0, 1.0) == (-4.0, 1.0)

    def test_subinterval_ignores_touching_segment(self, step_well):
        """Test a segment meeting the interval only at an endpoint is ignored."""
        assert step_well.bounds_on(0.0, 0.5) == (1.0, 1.0)

    def test_invalid_interval_raises(self, step_well):
        """Test reversed or out-of-support intervals are rejected."""
        with pytest.raises(ValidationError):
            step_well.bounds_on(0.6, 0.2)
        with pytest.raises(ValidationError):
            step_well.bounds_on(0.0, 3.0)

    def test_spline_bounds_enclose_dense_samples(self):
        """Test the spline envelope contains interior extrema."""
        p = SplinePotential(knots=(0.0, 0.7, 2.0), values=(0.0, 1.0, 0.5))
        xs = np.linspace(0.0, 2.0, 20001)
        dense = p.evaluate_many(xs)
        lo, hi = p.bounds_on(0.0, 2.0)
        assert hi >= dense.max() - 1e-12
        assert hi - dense.max() < 1e-6
        assert lo <= dense.min() + 1e-12

    def test_sup_abs(self, step_well):
        """Test sup |V|."""
        assert step_well.sup_abs() == 4.0


class TestBumpCheck:
    """Test the positivity condition near the support edge."""

    def test_positive_step_holds(self, step_well):
        """Test V = 1 on [0, 0.5] satisfies the condition."""
        result = check_bump(step_well, 0.5)
        assert result.holds is True
        assert result.margin == 1.0

    def test_zero_potential_fails(self, zero_potential):
        """Test V = 0 never satisfies strict positivity."""
        result = check_bump(zero_potential, 0.5)
        assert result.holds is False
        assert result.margin == 0.0

    def test_figure1_right_holds(self):
        """Test the right figure1 potential has a positive bump."""
        result = check_bump(even_halfline(figure1_right_whole()), 0.5)
        assert result.holds is True
        assert result.margin > 0

    def test_figure1_left_fails(self):
        """Test the left figure1 potential is negative next to the edge."""
        assert check_bump(even_halfline(figure1_left_whole()), 0.5).holds is False

    def test_width_outside_domain_raises(self, step_well):
        """Test A must lie in (0, B]."""
        with pytest.raises(ValidationError):
            check_bump(step_well, 2.0)


class TestEvenHalfline:
    """Test reduction of even whole-line potentials."""

    def test_zero_potential(self):
        """Test V = 0 on [-1, 1] reduces to V = 0 on [0, 1]."""
        half = even_halfline(ZeroPotential(support_left=-1.0, support_right=1.0))
        assert isinstance(half, ZeroPotential)
        assert (half.support_left, half.support_right) == (0.0, 1.0)

    def test_piecewise_constant(self):
        """Test a symmetric step potential folds onto [0, B]."""
        whole = PiecewiseConstantPotential(
            breaks=(-1.0, -0.5, 0.5, 1.0), values=(1.0, -2.0, 1.0), support_left=-1.0
        )
        half = even_halfline(whole)
        assert half.breaks == (0.0, 0.5, 1.0)
        assert half.values == (1.0, -2.0)

    def test_spline_restriction_is_exact(self, rng):
        """Test the half-line spline reproduces V(x) at x_half = B - |x|."""
        whole = figure1_right_whole()
        half = even_halfline(whole)
        xs = rng.uniform(-2.0, 2.0, 400)
        halves = 2.0 - np.abs(xs)
        np.testing.assert_allclose(half.evaluate_many(halves), whole.evaluate_many(xs), atol=1e-10)

    def test_reflection_invariance(self, rng):
        """Test reflecting an even potential gives the same half-line potential."""
        whole = figure1_left_whole()
        xs = rng.uniform(0.0, 2.0, 200)
        np.testing.assert_allclose(
            even_halfline(reflect(whole)).evaluate_many(xs),
            even_halfline(whole).evaluate_many(xs),
            atol=1e-12,
        )

    def test_odd_potential_raises(self):
        """Test a non-even potential is rejected with the defect."""
        whole = PiecewiseConstantPotential(
            breaks=(-1.0, 0.0, 1.0), values=(1.0, 2.0), support_left=-1.0
        )
        with pytest.raises(SymmetryError) as exc:
            even_halfline(whole)
        assert exc.value.details["max_defect"] == pytest.approx(1.0)

    def test_asymmetric_support_raises(self):
        """Test the support must be symmetric about zero."""
        with pytest.raises(SymmetryError):
            even_halfline(ZeroPotential(support_left=-1.0, support_right=2.0))

    def test_symmetry_defect_of_even_spline(self):
        """Test the figure1 splines are even to rounding."""
        defect, _ = symmetry_defect(figure1_left_whole())
        assert defect < 1e-12


class TestParsing:
    """Test tagged-object parsing and validation."""

    def test_parse_piecewise_constant(self):
        """Test support_right defaults to the last break."""
        p = parse_potential({"kind": "pc", "breaks": [0, 0.5, 1], "values": [1, -4]})
        assert isinstance(p, PiecewiseConstantPotential)
        assert p.support_right == 1.0

    def test_parse_spline_with_end_conditions(self):
        """Test spline end conditions are parsed."""
        p = parse_potential(
            {
                "kind": "spline",
                "knots": [0, 1, 2],
                "values": [0, 1, 0],
                "end_conditions": ["natural", "clamped"],
            }
        )
        assert p.end_conditions == ("natural", "clamped")

    def test_unknown_key_rejected(self):
        """Test extra keys are not accepted."""
        with pytest.raises(PydanticValidationError):
            parse_potential({"kind": "zero", "support_right": 1.0, "colour": "red"})

    def test_value_count_mismatch_rejected(self):
        """Test one value per segment is required."""
        with pytest.raises(PydanticValidationError):
            PiecewiseConstantPotential(breaks=(0.0, 0.5, 1.0), values=(1.0,))

    def test_descending_breaks_rejected(self):
        """Test breaks must be strictly ascending."""
        with pytest.raises(PydanticValidationError):
            PiecewiseConstantPotential(breaks=(0.0, 0.5, 0.5, 1.0), values=(1.0, 2.0, 3.0))

    def test_bump_width_beyond_support_rejected(self):
        """Test A must not exceed B."""
        with pytest.raises(PydanticValidationError):
            ZeroPotential(support_right=1.0, bump_width=2.0)

    def test_potentials_are_hashable(self, step_well):
        """Test frozen potentials can key caches."""
        same = PiecewiseConstantPotential(
            breaks=(0.0, 0.5, 1.0), values=(1.0, -4.0), bump_width=0.5
        )
        assert hash(step_well) == hash(same)

    @pytest.mark.parametrize("name", sorted(BUILTIN_POTENTIALS))
    def test_builtins_are_halfline(self, name):
        """Test every built-in potential lives on [0, B]."""
        p = BUILTIN_POTENTIALS[name]()
        assert p.support_left == 0.0
        assert p.support_right > 0
