import math

import pytest

from walks.harness import (
    compare_kappas,
    half_staircase,
    segment_profile,
    spread_config,
    strictly_decreasing,
    verify_jack,
    verify_ldp,
    verify_macdonald,
)
from walks.errors import WalkError


class TestShapes:
    def test_half_staircase(self):
        """Test λ_i = ⌊(N − i + 1)/2⌋"""
        assert half_staircase(4).rows == (2, 1, 1)
        assert half_staircase(5).rows == (2, 2, 1, 1)

    def test_spread_config(self):
        """Test gaps of θ + 1 from x_1 = 0"""
        x = spread_config(3, "1/2")
        assert [str(p) for p in x.positions] == ["0", "-3/2", "-3"]

    def test_segment_profile(self):
        """Test constant density θ/(right − left)"""
        h = segment_profile(-1.0, 1.0, 1.0)
        assert h.mass == pytest.approx(1.0)
        assert max(h.density()) == pytest.approx(0.5)


class TestTrend:
    def test_strictly_decreasing(self):
        """Test the trend verdict"""
        assert strictly_decreasing([0.3, 0.2, 0.1])
        assert not strictly_decreasing([0.3])
        assert not strictly_decreasing([0.3, 0.3])
        assert not strictly_decreasing([0.3, math.nan])

    def test_skipped_schedule(self):
        """Test N with a non-integer number of steps is skipped with a note"""
        report = verify_ldp(schedule=(3,), speed=0.25)
        assert report.schedule == ()
        assert len(report.notes) == 1
        assert not report.passed

    def test_macdonald_needs_negative_kappa(self):
        """Test κ ≥ 0 is rejected before any work"""
        with pytest.raises(WalkError):
            verify_macdonald(kappa=0.0)


@pytest.mark.slow
class TestHarnessRuns:
    def test_verify_jack(self):
        """Test the Jack trend reports every N and its principal values"""
        report = verify_jack(theta="1", schedule=(4, 6), grid_steps=8)
        assert report.schedule == (4, 6)
        assert all(math.isfinite(v) for v in report.values)
        assert [p.n for p in report.principal] == [4, 6]
        assert report.target > 0

    def test_verify_ldp(self):
        """Test ball probabilities are computed along the schedule"""
        report = verify_ldp(theta="1", schedule=(2, 4), grid_steps=8)
        assert report.schedule == (2, 4)
        assert len(report.gaps) == 2
        assert report.tolerances["eps"] == 0.25

    def test_compare_kappas(self):
        """Test two κ share a schedule"""
        result = compare_kappas(theta="1", kappas=(-0.5, -2.0), schedule=(4, 6), grid_steps=8)
        assert result.schedule == (4, 6)
        assert len(result.gaps) == 2
        assert result.first.kappa == -0.5


@pytest.mark.slow
class TestConvergenceTrends:
    def test_ldp_gaps_shrink(self):
        """Test the ball-probability gap strictly decreases over N = 4, 6, 8 for θ in {1/2, 1, 2}"""
        for theta in ("1/2", "1", "2"):
            report = verify_ldp(theta=theta, schedule=(4, 6, 8))
            assert report.schedule == (4, 6, 8), report.notes
            assert all(math.isfinite(v) for v in report.values)
            assert report.decreasing, (theta, report.gaps)

    def test_jack_gaps_shrink(self):
        """Test the Jack gap strictly decreases over N = 4, 6, 8, 10"""
        report = verify_jack(theta="1", schedule=(4, 6, 8, 10))
        assert report.schedule == (4, 6, 8, 10), report.notes
        assert report.decreasing, report.gaps

    def test_kappa_gap_shrinks(self):
        """Test the gap between κ = −0.5 and κ = −2 strictly decreases over N = 4, 6, 8"""
        result = compare_kappas(theta="1", kappas=(-0.5, -2.0), schedule=(4, 6, 8))
        assert result.schedule == (4, 6, 8)
        assert result.converging, result.gaps
