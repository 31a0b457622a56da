"""Acceptance-scale sweeps: oracle agreement, decay, interlacing and the spline scatter."""

from __future__ import annotations

import math

import numpy as np
import pytest

from app.domain.models.phase import BoundaryKind, PhaseEngine, PhasePoint, PhaseProblem, StateKind
from app.domain.models.potential import bump_well, positive_barrier
from app.schemas.run_config import SweepConfig
from app.services.experiments import (
    envelope_gaps,
    figure1,
    h_sweep,
    interlacing_check,
    is_eventually_decreasing,
    lemma_suite,
    nearest_partner_gaps,
    tracked_pair_gaps,
)
from app.services.prufer import (
    dtheta_dk,
    integrate_phase,
    propagate_oracle,
    wronskian_drift,
)
from app.services.spectra import find_states
from tests.conftest import random_piecewise_constant

pytestmark = pytest.mark.integration

PRECISE = 1e-12
EXACT = PhaseEngine.TRANSFER


@pytest.fixture
def fuzz_potentials(rng):
    """Random step potentials on [0, 2] with up to six pieces."""
    return [random_piecewise_constant(rng, B=2.0) for _ in range(50)]


class TestOracleEquivalence:
    """Test the integrator against the transfer-matrix propagation."""

    def test_random_potentials(self, fuzz_potentials):
        """Test angle and log-length agree at x = B."""
        for p in fuzz_potentials:
            for k in (0.5, 1.0, 2.0):
                for h in (1.0, 0.25, 0.05):
                    problem = PhaseProblem(potential=p, k=k, h=h, tol=PRECISE)
                    start = PhasePoint(x=0.0, theta=0.0)
                    exact = propagate_oracle(p, k, h, start, 2.0)
                    numeric = integrate_phase(problem, start, 2.0)
                    assert abs(numeric.theta - exact.theta) <= 1e-8
                    assert abs(numeric.log_length - exact.log_length) <= 1e-8


class TestLemmaIdentities:
    """Test the derivative and Wronskian identities on randomized problems."""

    def test_dtheta_dk_matches_finite_difference(self, fuzz_potentials, rng):
        """Test the mass formula against central differences."""
        eps = 1e-5
        for p in fuzz_potentials[:30]:
            k = float(rng.uniform(0.5, 2.0))
            h = float(rng.choice([1.0, 0.5, 0.25]))
            problem = PhaseProblem(potential=p, k=k, h=h, tol=PRECISE)
            bc = BoundaryKind.NEUMANN_LEFT
            analytic = dtheta_dk(problem, bc.start_point(k, 2.0), 2.0, bc.initial_angle_dk(k))
            ends = [
                integrate_phase(problem.with_k(kk), bc.start_point(kk, 2.0), 2.0).theta
                for kk in (k + eps, k - eps)
            ]
            finite = (ends[0] - ends[1]) / (2 * eps)
            assert abs(analytic - finite) <= 1e-5 * abs(finite)

    def test_wronskian_constancy(self, fuzz_potentials):
        """Test the scaled Wronskian of two solutions stays constant."""
        for p in fuzz_potentials[:30]:
            problem = PhaseProblem(potential=p, k=1.0, h=1.0, tol=PRECISE)
            drift = wronskian_drift(problem, 0.0, math.pi / 2)
            assert drift.relative_drift <= 1e-7

    def test_lemma_suite_has_no_violations(self, fuzz_potentials):
        """Test every hypothesis-satisfying check passes."""
        for p in fuzz_potentials[:10]:
            report = lemma_suite(p, [0.5, 1.0, 2.0], [1.0, 0.5, 0.25], engine=EXACT)
            assert report.passed, [c for c in report.checks if not c.passed]
            assert all(m >= -1e-9 for m in report.worst_margins().values())


class TestExponentialPairing:
    """Test bound and antibound states collapse onto Neumann eigenvalues."""

    @pytest.fixture(scope="class", params=["bump_well", "wide_bump"])
    def report(self, request):
        if request.param == "bump_well":
            potential, band = bump_well(), (0.6, 1.6)
        else:
            potential, band = bump_well(bump=1.0, width=0.6, well=-3.0, B=2.0), (0.7, 1.5)
        config = SweepConfig(
            potential=potential,
            band=band,
            h_values=[1.0 / n for n in range(2, 13)],
            engine=EXACT,
        )
        return h_sweep(config)

    def test_sweep_completes(self, report):
        """Test no h failed."""
        assert report.failed == []

    def test_full_pairing_for_small_h(self, report):
        """Test every Neumann eigenvalue of the shrunk band is paired once h <= 1/4."""
        assert report.first_paired_h is not None
        assert report.first_paired_h >= 0.25
        for entry in report.entries:
            if entry.h <= 0.25:
                assert all(p.fully_paired for p in entry.pairings)

    def test_positive_decay_rate(self, report):
        """Test the fitted envelope decays exponentially in 1/h."""
        assert report.gap_fit is not None
        assert report.gap_fit.delta_hat > 0
        assert report.gap_fit.r_squared > 0.98
        assert report.envelope_violations == []

    def test_closeness_fit(self, report):
        """Test angle closeness at the bump edge is exponential in 1/h."""
        assert report.closeness_fit is not None
        assert report.closeness_fit.delta_hat > 0
        assert report.closeness_fit.r_squared > 0.98

    def test_envelope_decreases(self, report):
        """Test the envelope decreases over the last four h values."""
        gaps = [gap for _, gap in sorted(envelope_gaps(report), reverse=True)]
        assert is_eventually_decreasing(gaps, last=4)

    def test_each_pair_gap_decreases(self, report):
        """Test every Neumann eigenvalue's pair gap decreases over the last four h values."""
        tracked = tracked_pair_gaps(report, last=4)
        assert tracked
        for k0, gaps in tracked.items():
            assert is_eventually_decreasing(gaps, last=4), (k0, gaps)


class TestInterlacing:
    """Test antibound states separate bound states."""

    def test_random_potentials(self, fuzz_potentials):
        """Test zero resolved violations without any positivity assumption."""
        for p in fuzz_potentials[:20]:
            for h in (0.5, 1.0 / 6, 0.1):
                bound = find_states(p, h, StateKind.BOUND, 0.5, 3.0, engine=EXACT)
                anti = find_states(p, h, StateKind.ANTIBOUND, 0.5, 3.0, engine=EXACT)
                violations = interlacing_check(bound, anti, h=h)
                assert [v for v in violations if not v.unresolved] == []


class TestPositiveBarrier:
    """Test a positive potential has no bound or antibound states for small h."""

    @pytest.mark.parametrize("h", [0.25, 0.1, 0.05])
    def test_no_states(self, h):
        """Test both lists are empty on [0.5, 3]."""
        p = positive_barrier()
        for kind in (StateKind.BOUND, StateKind.ANTIBOUND):
            assert find_states(p, h, kind, 0.5, 3.0, engine=EXACT) == []


class TestMatchingPoint:
    """Test state locations do not depend on the matching point."""

    def test_bump_well(self):
        """Test x_match among A, B/2 and B/4 moves states by at most ten tolerances."""
        p = bump_well()
        tol = 1e-11
        found = [
            [
                r.k
                for r in find_states(
                    p, 0.2, StateKind.BOUND, 0.6, 1.6, tol=tol, x_match=x, engine=EXACT
                )
            ]
            for x in (0.4, 1.0, 0.5)
        ]
        assert found[0]
        for other in found[1:]:
            assert len(other) == len(found[0])
            assert np.max(np.abs(np.subtract(other, found[0]))) <= 10 * tol


class TestSplineScatter:
    """Test the spline potentials behind the bound and antibound scatter."""

    def test_right_potential_gaps_shrink(self):
        """Test nearest bound/antibound gaps shrink as 1/h grows on the right-hand potential."""
        h_values = [1.0 / 6, 0.1, 1.0 / 16]
        reports = figure1(h_values)
        assert set(reports) == {"left", "right"}
        gaps = nearest_partner_gaps(reports["right"])
        coarse, fine = gaps[h_values[0]], gaps[h_values[-1]]
        assert coarse and fine
        assert 5 * max(fine) <= max(coarse)
