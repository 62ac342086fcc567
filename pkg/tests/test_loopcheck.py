import numpy as np
import pytest

from models.lattice import ParticleConfig
from models.loop import AnalyticWeight, ConformalMap, LoopSetup
from utils.data_generator import random_loop_setup
from walks.errors import EnumerationCapError, PoleError, WalkError
from walks.harness import segment_profile
from walks.loopcheck import (
    b_function,
    contour_integral,
    loop_observable,
    residue_report,
    run_loop_corpus,
    step_law,
)


def one_particle():
    return LoopSetup(x=ParticleConfig(positions=(0,), theta=1), label="single")


def three_particles(kind="identity"):
    return LoopSetup(
        x=ParticleConfig(positions=(4, "5/2", -1), theta="3/2"),
        b_map=ConformalMap(kind=kind, q=0.9 if kind == "q" else None),
        phi_plus=AnalyticWeight(kind="polynomial", coefficients=(1.0, 0.2)),
        phi_minus=AnalyticWeight(kind="exponential", coefficients=(0.8, -0.1)),
        label="three",
    )


class TestStepLaw:
    def test_single_particle(self):
        """Test constant weights give a fair coin"""
        law = dict(step_law(one_particle()))
        assert law[(0,)] == pytest.approx(0.5)
        assert law[(1,)] == pytest.approx(0.5)

    def test_sums_to_one(self):
        """Test the general kernel is normalized"""
        for kind in ("identity", "q"):
            assert sum(p for _, p in step_law(three_particles(kind))) == pytest.approx(1.0, abs=1e-12)

    def test_enumeration_cap(self):
        """Test configurations above the loop cap are refused"""
        x = ParticleConfig(positions=tuple(-2 * i for i in range(13)), theta=1)
        with pytest.raises(EnumerationCapError):
            step_law(LoopSetup(x=x))


class TestObservable:
    def test_single_particle_constant(self):
        """Test one particle with unit weights gives the constant 2"""
        setup = one_particle()
        z = np.array([0.3 + 0.2j, -4.0 + 1.0j, 7.5 - 3.0j])
        assert np.allclose(loop_observable(setup, z), 2.0)

    def test_pole_at_particle(self):
        """Test evaluation on a particle raises"""
        with pytest.raises(PoleError):
            loop_observable(three_particles(), 2.5)

    def test_no_residues(self):
        """Test small circles around particles integrate to zero"""
        for kind in ("identity", "q"):
            setup = three_particles(kind)
            for xj in (4.0, 2.5, -1.0):
                assert abs(contour_integral(setup, complex(xj), 0.1)) < 1e-10


class TestResidueReport:
    def test_passes(self):
        """Test residues and the deformation gap vanish"""
        report = residue_report(three_particles("q"))
        assert report.passed
        assert len(report.residues) == 3
        assert report.deformation_gap < 1e-9

    def test_radius_too_large(self):
        """Test circles that would overlap neighbours are refused"""
        with pytest.raises(WalkError):
            residue_report(three_particles(), radius=1.0)

    def test_corpus(self):
        """Test a seeded random corpus passes and replays"""
        first = run_loop_corpus(count=12, seed=4, n_max=5, threads=2)
        second = run_loop_corpus(count=12, seed=4, n_max=5, threads=1)
        assert first.passed
        assert first.max_residue == second.max_residue
        assert [r.label for r in first.reports] == [f"case-{k}" for k in range(12)]

    def test_random_setup_is_seeded(self):
        """Test the same generator state gives the same setup"""
        a = random_loop_setup(np.random.default_rng(9))
        b = random_loop_setup(np.random.default_rng(9))
        assert a == b


class TestBFunction:
    def test_uniform_profile(self):
        """Test 𝒢(3) = 3/2 for unit density on [0, 1]"""
        h = segment_profile(0.0, 1.0, 1.0)
        one = AnalyticWeight()
        assert b_function(one, one, h, 3.0) == pytest.approx(2.5, rel=1e-10)

    def test_on_support(self):
        """Test points on the support are poles"""
        h = segment_profile(0.0, 1.0, 1.0)
        with pytest.raises(PoleError):
            b_function(AnalyticWeight(), AnalyticWeight(), h, 0.5)
