import math
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from models.lattice import GridSpec, HeightField, ParticleConfig, WalkEnsemble, YoungDiagram
from walks.errors import InfeasibleEndpointsError, LatticeError, WalkError
from walks.lattice import (
    apply_step,
    canonical_path,
    config_to_diagram,
    diagram_to_config,
    empirical_profile,
    feasible_steps,
    height_distance,
    height_field,
    height_to_walk,
    is_in_lattice,
    path_feasible,
    step_feasible,
    transpose,
)


def packed(n, theta=1):
    return diagram_to_config(YoungDiagram(), n, theta)


class TestYoungDiagram:
    def test_trailing_zeros_dropped(self):
        """Test trailing zero rows are removed"""
        assert YoungDiagram(rows=(3, 1, 0, 0)).rows == (3, 1)

    def test_increasing_rows_rejected(self):
        """Test a non-partition is rejected"""
        with pytest.raises(ValidationError):
            YoungDiagram(rows=(1, 2))

    def test_transpose(self):
        """Test the conjugate partition"""
        assert transpose(YoungDiagram(rows=(3, 1))).rows == (2, 1, 1)
        assert YoungDiagram(rows=(2, 2)).transpose().rows == (2, 2)

    def test_contains(self):
        """Test diagram inclusion"""
        assert YoungDiagram(rows=(2, 1)).contains(YoungDiagram(rows=(1, 1)))
        assert not YoungDiagram(rows=(2,)).contains(YoungDiagram(rows=(1, 1)))


class TestDiagramToConfig:
    def test_rational_theta(self):
        """Test x_i = λ_i − (i−1)θ stays exact for rational θ"""
        x = diagram_to_config(YoungDiagram(rows=(2, 1)), 3, "1/2")
        assert x.positions == (Fraction(2), Fraction(1, 2), Fraction(-1))
        assert x.theta == Fraction(1, 2)

    def test_inverse(self):
        """Test config_to_diagram undoes diagram_to_config"""
        d = YoungDiagram(rows=(4, 2, 2))
        assert config_to_diagram(diagram_to_config(d, 5, "7/3")) == d

    def test_too_many_rows(self):
        """Test a diagram longer than N is rejected"""
        with pytest.raises(LatticeError):
            diagram_to_config(YoungDiagram(rows=(1, 1, 1)), 2, 1)

    def test_off_lattice_config_rejected(self):
        """Test gaps outside θ + Z≥0 are rejected"""
        with pytest.raises(ValidationError):
            ParticleConfig(positions=(0, Fraction(-1, 2)), theta=1)
        assert not is_in_lattice((Fraction(0), Fraction(-1, 2)), Fraction(1))


class TestSteps:
    def test_packed_block_moves_from_the_left(self):
        """Test a packed block only admits steps 1..10..0"""
        x = packed(4, "1/2")
        steps = set(feasible_steps(x.positions, x.theta))
        assert steps == {(1,) * k + (0,) * (4 - k) for k in range(5)}

    def test_free_config_admits_every_step(self):
        """Test well separated particles admit all 2^N steps"""
        x = ParticleConfig(positions=(6, 3, 0), theta=1)
        assert len(list(feasible_steps(x.positions, x.theta))) == 8

    def test_step_feasible_and_apply(self):
        """Test applying feasible and infeasible steps"""
        x = packed(2)
        assert step_feasible(x, (1, 0))
        assert not step_feasible(x, (0, 1))
        assert apply_step(x, (1, 0)).positions == (1, -1)
        with pytest.raises(LatticeError):
            apply_step(x, (0, 1))

    def test_wrong_length(self):
        """Test a step of the wrong length is rejected"""
        with pytest.raises(LatticeError):
            step_feasible(packed(2), (1,))


class TestWalks:
    def test_canonical_path(self):
        """Test the latest-moving witness connects the endpoints"""
        y = packed(2)
        z = diagram_to_config(YoungDiagram(rows=(2, 1)), 2, 1)
        w = canonical_path(y, z, 3)
        assert w.horizon == 3
        assert w.steps[0] == y and w.steps[-1] == z
        assert w.step_vectors() == [(0, 0), (1, 0), (1, 1)]

    def test_infeasible_endpoints(self):
        """Test endpoints farther apart than T raise"""
        y = packed(1)
        z = ParticleConfig(positions=(3,), theta=1)
        assert not path_feasible(y, z, 2)
        with pytest.raises(InfeasibleEndpointsError):
            canonical_path(y, z, 2)

    def test_ensemble_rejects_long_jump(self):
        """Test a particle may move by at most one per step"""
        y = packed(2)
        with pytest.raises(ValidationError):
            WalkEnsemble(steps=(y, ParticleConfig(positions=(2, -1), theta=1)), theta=1)


class TestHeight:
    def test_height_field_range(self):
        """Test the rescaled height runs from 0 to θ"""
        y = packed(3, "1/2")
        z = diagram_to_config(YoungDiagram(rows=(2, 1)), 3, "1/2")
        H = height_field(canonical_path(y, z, 2), n_scale=3)
        assert np.allclose(H.grid[0, :], 0.0)
        assert np.allclose(H.grid[-1, :], 0.5)
        assert np.all(np.diff(H.grid, axis=0) >= -1e-12)

    def test_empirical_profile_mass(self):
        """Test the profile of a configuration carries mass θ"""
        x = ParticleConfig(positions=(5, 2, 0), theta=1)
        h = empirical_profile(x, 3)
        assert math.isclose(h.mass, 1.0)
        assert np.all(h.density() <= 1.0)

    def test_height_distance(self):
        """Test the sup distance vanishes on equal fields and needs a shared grid"""
        y, z = packed(3), diagram_to_config(YoungDiagram(rows=(2, 1)), 3, 1)
        H = height_field(canonical_path(y, z, 3), n_scale=3)
        assert height_distance(H, H) == 0.0
        shifted = H.model_copy(update={"x_min": H.x_min + 1.0})
        with pytest.raises(WalkError):
            height_distance(H, shifted)


class TestHeightToWalk:
    def test_endpoints_kept(self):
        """Test the clipped walk still runs from y to z"""
        y, z = packed(3), diagram_to_config(YoungDiagram(rows=(2, 1)), 3, 1)
        H = height_field(canonical_path(y, z, 3), n_scale=3)
        walk = height_to_walk(H, y, z, 3, eps=1.0)
        assert walk.horizon == 3
        assert walk.steps[0] == y
        assert walk.steps[-1] == z

    def test_window_too_narrow(self):
        """Test eps below 2θ/N is refused"""
        y, z = packed(3), diagram_to_config(YoungDiagram(rows=(1,)), 3, 1)
        H = height_field(canonical_path(y, z, 1), n_scale=3)
        with pytest.raises(WalkError):
            height_to_walk(H, y, z, 1, eps=0.1)

    def test_canonical_path_is_fixed(self):
        """Test the height of the canonical path gives the canonical path back"""
        for n in (6, 10, 20):
            y, z = packed(n), diagram_to_config(YoungDiagram(rows=(3, 2, 2, 1)), n, 1)
            H = height_field(canonical_path(y, z, 4), n_scale=n)
            walk = height_to_walk(H, y, z, 4, eps=0.5)
            assert walk == canonical_path(y, z, 4)
            assert height_distance(height_field(walk, n_scale=n), H) == pytest.approx(0.0, abs=1e-12)

    def test_translating_ramp(self):
        """Test a packed block moving at speed 1/2 is followed within eps at N = 20"""
        n, T, eps = 20, 20, 0.25
        y = packed(n)
        z = ParticleConfig(positions=tuple(p + 10 for p in y.positions), theta=1)
        grid = GridSpec(x_min=-1.5, dx=1 / 80, nx=241, dt=1 / 20, nt=T + 1)
        ramp = np.clip(grid.xs[:, None] + 0.95 - 0.5 * grid.ts[None, :], 0.0, 1.0)
        H = HeightField(grid=ramp, x_min=grid.x_min, dx=grid.dx, dt=grid.dt, theta=1.0, t_horizon=1.0, n_scale=n)
        walk = height_to_walk(H, y, z, T, eps)
        assert walk.steps[0] == y
        assert walk.steps[-1] == z
        assert height_distance(height_field(walk, n, grid), H) <= eps
