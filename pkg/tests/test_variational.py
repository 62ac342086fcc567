import math

import numpy as np
import pytest

from models.lattice import BoundaryProfile, GridSpec, YoungDiagram
from models.weights import DriftFunction
from walks.errors import SolverError, WalkError
from walks.lattice import canonical_path, diagram_to_config, height_field
from walks.variational import (
    admissible_extensions,
    drift_functional,
    entropy_functional,
    euler_lagrange_residual,
    field_from_height,
    max_violation,
    rate,
    rate_J,
    solve_limit_shape,
    solver_grid,
    translating_ramp,
    two_start_gap,
)

H_STEP = 1 / 8


def block(left, width=1.0, theta=1.0):
    return BoundaryProfile(
        xs=np.array([left - 1.0, left, left + width, left + width + 1.0]),
        h=np.array([0.0, 0.0, theta, theta]),
        theta=theta,
    )


def ramp_grid(T=1.0):
    return GridSpec(x_min=-1.0, dx=H_STEP, nx=45, dt=H_STEP, nt=int(round(T / H_STEP)) + 1)


def ramp():
    return translating_ramp(rho=0.5, v=0.5, ell=2.0, T=1.0, theta=1.0, grid=ramp_grid())


class TestGrid:
    def test_square_cells(self):
        """Test the solver grid has dx = dt = T/steps and covers both profiles"""
        grid = solver_grid(block(0.0), block(0.5), 0.5, steps=10)
        assert grid.dx == grid.dt == pytest.approx(0.05)
        assert grid.nt == 11
        assert grid.xs[0] <= -1.0 and grid.xs[-1] >= 2.5

    def test_bad_horizon(self):
        """Test a non-positive horizon is rejected"""
        with pytest.raises(WalkError):
            solver_grid(block(0.0), block(0.0), 0.0)


class TestAdmissibleExtensions:
    def test_frozen_block_is_unique(self):
        """Test a packed block that does not move has one admissible field"""
        h0 = block(0.0)
        grid = solver_grid(h0, h0, 0.25, steps=8)
        upper, lower = admissible_extensions(h0, h0, grid)
        assert np.allclose(upper, lower, atol=1e-12)

    def test_unreachable_boundary(self):
        """Test a final profile too far to reach raises"""
        h0, hT = block(0.0), block(3.0)
        grid = solver_grid(h0, hT, 0.5, steps=16)
        with pytest.raises(SolverError):
            admissible_extensions(h0, hT, grid)

    def test_extensions_are_admissible(self):
        """Test both extreme fields satisfy the edge constraints"""
        h0, hT = block(0.0, width=2.0), block(0.5, width=2.0)
        grid = solver_grid(h0, hT, 1.0, steps=8)
        upper, lower = admissible_extensions(h0, hT, grid)
        assert np.all(lower <= upper + 1e-12)
        assert max_violation(upper, grid.dx) <= 1e-9
        assert max_violation(lower, grid.dx) <= 1e-9


class TestTranslatingRamp:
    def test_mass_check(self):
        """Test the ramp mass ρℓ must equal θ"""
        with pytest.raises(WalkError):
            translating_ramp(rho=0.5, v=0.5, ell=1.0, T=1.0, theta=1.0, grid=ramp_grid())

    def test_euler_lagrange_interior(self):
        """Test the ramp is stationary at nodes where it is linear"""
        residual, count = euler_lagrange_residual(ramp())
        assert count > 0
        assert residual < 1e-9

    def test_rate_terms(self):
        """Test the entropy of a ramp and the translation invariance of the free entropy"""
        report = rate_J(ramp())
        assert 0.45 < report.entropy_term < 0.65
        assert report.free_entropy_term == pytest.approx(0.0, abs=1e-12)
        assert report.J_value == pytest.approx(-report.sup_value)
        assert report.I_value is None

    def test_drift_term_constant(self):
        """Test a constant drift weighs the mass moved right"""
        assert drift_functional(ramp(), DriftFunction.constant(2.0)) == pytest.approx(1.0, abs=1e-12)
        assert rate_J(ramp(), DriftFunction.constant(2.0)).drift_term == pytest.approx(1.0, abs=1e-12)

    def test_drift_term_linear(self):
        """Test f(s) = s by parts: −Q(T) + ∫ Q(s) ds"""
        f = DriftFunction(coefficients=(0.0, 1.0))
        assert drift_functional(ramp(), f) == pytest.approx(0.25, abs=1e-12)
        assert drift_functional(ramp(), None) == 0.0

    def test_inadmissible_field_rejected(self):
        """Test a field that grows in time is refused"""
        F = ramp()
        bad = F.model_copy(update={"H": np.asarray(F.H)[:, ::-1]})
        with pytest.raises(WalkError):
            entropy_functional(bad)


class TestFieldFromHeight:
    def test_projected_field_is_admissible(self):
        """Test a sampled height is resampled onto an admissible square grid"""
        y = diagram_to_config(YoungDiagram(), 3, 1)
        z = diagram_to_config(YoungDiagram(rows=(2, 1)), 3, 1)
        F = field_from_height(height_field(canonical_path(y, z, 3), n_scale=3))
        assert F.dx == pytest.approx(F.dt)
        assert max_violation(np.asarray(F.H), F.dx) <= 1e-6
        assert F.h0.mass == pytest.approx(1.0)


@pytest.mark.slow
class TestSolver:
    def test_frozen_block(self):
        """Test equal packed boundaries give zero entropy and zero rate"""
        h0 = block(0.0)
        F, report = solve_limit_shape(h0, h0, 0.25, grid=solver_grid(h0, h0, 0.25, steps=8))
        assert report.sup_value == pytest.approx(0.0, abs=1e-9)
        assert report.I_value == 0.0

    def test_starts_agree_on_frozen_block(self):
        """Test upper and lower starts reach the same field when it is unique"""
        h0 = block(0.0)
        gap, field_gap = two_start_gap(h0, h0, 0.25, grid=solver_grid(h0, h0, 0.25, steps=8))
        assert gap == pytest.approx(0.0, abs=1e-9)
        assert field_gap == pytest.approx(0.0, abs=1e-9)

    def test_ascent_is_monotone(self):
        """Test the objective never decreases along the iteration"""
        F = ramp()
        _, report = solve_limit_shape(F.h0, F.hT, 1.0, grid=ramp_grid())
        values = [v for _, v in report.history]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
        assert math.isfinite(report.J_value)

    def test_ramp_is_near_optimal(self):
        """Test the translating ramp has rate close to zero"""
        report = rate(ramp())
        assert report.I_value == pytest.approx(0.0, abs=0.02)
