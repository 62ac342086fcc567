import math
from fractions import Fraction

import pytest

from models.lattice import YoungDiagram
from models.symfun import QParams
from models.weights import DriftProfile
from utils.data_generator import diagrams_in_box
from walks.errors import PoleError, WalkError
from walks.harness import segment_profile
from walks.symfun import (
    branching_sum,
    complete_homogeneous,
    jack_principal,
    jack_principal_box,
    jack_principal_gamma,
    jack_principal_limit,
    log_q_pochhammer_ratio,
    macdonald_principal,
    macdonald_principal_limit,
    macdonald_principal_pochhammer,
    macdonald_principal_qgamma,
    q_gamma,
    q_pochhammer,
    schur_skew_jt,
    skew_jack_pathsum,
    skew_macdonald_pathsum,
)

EMPTY = YoungDiagram()
B = DriftProfile(b=(Fraction(1, 2), Fraction(1, 3)))


class TestQFunctions:
    def test_q_pochhammer(self):
        """Test (1/2; 1/2)_∞ and a vanishing factor"""
        assert q_pochhammer(0.5, 0.5) == pytest.approx(0.28878809508660253, rel=1e-14)
        assert q_pochhammer(1.0, 0.3) == 0.0

    def test_pochhammer_ratio(self):
        """Test the joint ratio against two separate products"""
        log_ratio, sign = log_q_pochhammer_ratio(0.25, 0.5, 0.5)
        assert sign == 1
        assert log_ratio == pytest.approx(math.log(q_pochhammer(0.25, 0.5) / q_pochhammer(0.5, 0.5)), abs=1e-12)
        assert log_q_pochhammer_ratio(1.0, 0.5, 0.5) == (-math.inf, 0)
        with pytest.raises(PoleError):
            log_q_pochhammer_ratio(0.5, 2.0, 0.5)

    def test_q_gamma_factorial(self):
        """Test Γ_q(n + 1) = [n]_q!"""
        assert q_gamma(1.0, 0.5) == pytest.approx(1.0, rel=1e-14)
        assert q_gamma(3.0, 0.5) == pytest.approx(1.5, rel=1e-14)
        assert q_gamma(4.0, 0.5) == pytest.approx(1.5 * 1.75, rel=1e-14)

    def test_q_gamma_poles(self):
        """Test non-positive integers are poles"""
        with pytest.raises(PoleError):
            q_gamma(0.0, 0.5)
        with pytest.raises(PoleError):
            q_gamma(-2.0, 0.5)

    def test_matches_finite_product(self):
        """Test the vectorized product against a direct loop, negative factors included"""
        for a, q in ((0.3, 0.9), (2.5, 0.5), (-0.7, 0.95), (7.0, 0.8)):
            direct = math.prod(1 - a * q ** k for k in range(5000))
            assert q_pochhammer(a, q) == pytest.approx(direct, rel=1e-12)

    def test_q_gamma_near_one(self):
        """Test Γ_q(3) = 1 + q still evaluates at q = 1 − 1e-5"""
        q = 1 - 1e-5
        assert q_gamma(3.0, q) == pytest.approx(1 + q, rel=1e-9)
        assert q_gamma(1.0, q) == pytest.approx(1.0, rel=1e-9)

    def test_q_outside_unit_interval(self):
        """Test q must lie in (0, 1)"""
        with pytest.raises(WalkError):
            q_pochhammer(0.5, 1.0)


class TestJackPrincipal:
    def test_single_box(self):
        """Test J_(1)(1^N) = N"""
        for n in (1, 3, 7):
            assert jack_principal(YoungDiagram(rows=(1,)), n, "2/3").exact == n

    def test_schur_dimensions(self):
        """Test θ = 1 gives the number of semistandard tableaux"""
        assert jack_principal(YoungDiagram(rows=(2, 1)), 3, 1).exact == 8
        assert jack_principal(YoungDiagram(rows=(2, 2)), 3, 1).exact == 6

    def test_too_many_rows(self):
        """Test a diagram longer than N specializes to zero"""
        assert jack_principal(YoungDiagram(rows=(1, 1, 1)), 2, 1).is_zero

    def test_forms_agree_over_box(self):
        """Test the box and Gamma forms agree to 1e-10 for every λ in a 4 × 4 box and N ≤ 6"""
        for theta in ("1/3", "1/2", "1", "2", 0.37):
            for d in diagrams_in_box(4, 4):
                for n in range(max(d.length, 1), 7):
                    box = math.log(float(jack_principal_box(d, n, theta)))
                    gamma = jack_principal_gamma(d, n, theta)
                    assert gamma == pytest.approx(box, rel=0, abs=1e-10 * max(1.0, abs(box)))

    def test_float_theta(self):
        """Test irrational-looking θ runs through the Gamma cross-check"""
        value = jack_principal(YoungDiagram(rows=(3, 1)), 4, 0.37)
        assert value.exact is None
        assert value.value > 0


class TestMacdonaldPrincipal:
    def test_small_values(self):
        """Test P_(1)(1, t) = 1 + t and P_(1,1)(1, t) = t"""
        qp = QParams(q=0.5, theta=2.0)
        assert macdonald_principal(YoungDiagram(rows=(1,)), 2, qp).value == pytest.approx(1.25, rel=1e-12)
        assert macdonald_principal(YoungDiagram(rows=(1, 1)), 2, qp).value == pytest.approx(0.25, rel=1e-12)

    def test_jack_limit(self):
        """Test q → 1 with t = q^θ recovers the Jack value"""
        d = YoungDiagram(rows=(2, 1))
        mac = macdonald_principal(d, 3, QParams(q=0.999, theta=1.5)).value
        assert mac == pytest.approx(jack_principal(d, 3, "3/2").value, rel=1e-2)

    def test_forms_agree_over_box(self):
        """Test the Pochhammer and q-Gamma forms agree to 1e-9 for every λ in a 4 × 4 box and N ≤ 6"""
        for q, theta in ((0.3, 0.5), (0.5, 1.0), (0.7, 2.0), (0.85, 1.5)):
            qp = QParams(q=q, theta=theta)
            for d in diagrams_in_box(4, 4):
                for n in range(max(d.length, 1), 7):
                    poch = macdonald_principal_pochhammer(d, n, qp)
                    qgam = macdonald_principal_qgamma(d, n, qp)
                    assert qgam == pytest.approx(poch, rel=0, abs=1e-9 * max(1.0, abs(poch)))

    @pytest.mark.slow
    def test_jack_limit_near_one(self):
        """Test the extrapolated value at q = 1 − 1e-5 matches the Jack value to 1e-5"""
        h = 1e-5
        for rows, n, theta in (((2, 1), 3, "1/2"), ((3, 2, 1), 4, "1"), ((4, 4), 6, "1/2")):
            d = YoungDiagram(rows=rows)
            theta_f = float(Fraction(theta))
            near = macdonald_principal(d, n, QParams(q=1 - h, theta=theta_f)).log_value
            nearer = macdonald_principal(d, n, QParams(q=1 - 2 * h, theta=theta_f)).log_value
            jack = jack_principal(d, n, theta).log_value
            assert 2 * near - nearer == pytest.approx(jack, abs=1e-5)

    def test_from_kappa(self):
        """Test q = e^{κ/N} and t = q^θ"""
        qp = QParams.from_kappa(-2.0, 4, 0.5)
        assert qp.q == pytest.approx(0.6065306597126334)
        assert qp.t == pytest.approx(qp.q ** 0.5)


class TestSkewValues:
    def test_column_pair(self):
        """Test λ = (1,1), μ = ∅ gives h_2(b) = 19/36"""
        value = skew_jack_pathsum(YoungDiagram(rows=(1, 1)), EMPTY, B, 2, 1)
        assert value.exact == Fraction(19, 36)
        assert schur_skew_jt(YoungDiagram(rows=(2,)), EMPTY, B.b).exact == Fraction(19, 36)

    def test_hook(self):
        """Test λ = (2,1) gives s_(2,1)(b_0, b_1) = b_0 b_1 (b_0 + b_1)"""
        lam = YoungDiagram(rows=(2, 1))
        value = skew_jack_pathsum(lam, EMPTY, B, 3, 1)
        assert value.exact == Fraction(5, 36)
        assert schur_skew_jt(lam.transpose(), EMPTY, B.b).exact == Fraction(5, 36)

    def test_skew_schur(self):
        """Test a genuinely skew shape at θ = 1 against Jacobi-Trudi"""
        lam, mu = YoungDiagram(rows=(2, 2, 1)), YoungDiagram(rows=(1,))
        b = DriftProfile(b=(Fraction(1, 2), Fraction(2, 3), Fraction(3, 4)))
        value = skew_jack_pathsum(lam, mu, b, 3, 1)
        assert value.exact == schur_skew_jt(lam.transpose(), mu.transpose(), b.b).exact

    def test_skew_schur_over_box(self):
        """Test θ = 1 path sums equal Jacobi-Trudi for every μ ⊆ λ in a 3 × 3 box and T ≤ 4"""
        letters = (Fraction(1, 2), Fraction(2, 3), Fraction(3, 4), Fraction(5, 4))
        checked = 0
        for lam in diagrams_in_box(3, 3):
            for mu in diagrams_in_box(3, 3):
                if not lam.contains(mu):
                    continue
                for T in range(1, 5):
                    b = DriftProfile(b=letters[:T])
                    value = skew_jack_pathsum(lam, mu, b, 3, 1)
                    expected = schur_skew_jt(lam.transpose(), mu.transpose(), b.b)
                    assert value.exact == expected.exact, (lam.rows, mu.rows, T)
                    checked += 1
        assert checked > 100

    def test_macdonald_at_theta_one(self):
        """Test t = q makes the Macdonald skew a Schur value"""
        b = DriftProfile(b=(0.5, 1 / 3))
        value = skew_macdonald_pathsum(YoungDiagram(rows=(1, 1)), EMPTY, b, 2, QParams(q=0.5, theta=1.0))
        assert value.value == pytest.approx(19 / 36, rel=1e-12)

    def test_not_contained(self):
        """Test μ must sit inside λ"""
        with pytest.raises(WalkError):
            skew_jack_pathsum(YoungDiagram(rows=(1,)), YoungDiagram(rows=(2,)), B, 2, 1)

    def test_out_of_reach(self):
        """Test a skew shape with a row longer than T is zero"""
        assert skew_jack_pathsum(YoungDiagram(rows=(3,)), EMPTY, B, 2, 1).is_zero

    def test_branching_rule(self):
        """Test one-step extensions of μ carry total mass one"""
        assert branching_sum(YoungDiagram(rows=(2, 1)), 3, "1/2", "1/3") == 1
        assert branching_sum(EMPTY, 4, "5/2", 2) == 1

    def test_branching_rule_over_box(self):
        """Test the branching rule for every μ in a 2 × 2 box"""
        for mu in diagrams_in_box(2, 2):
            assert branching_sum(mu, 3, "1/2", "2/3") == 1


class TestJacobiTrudi:
    def test_complete_homogeneous(self):
        """Test h_k of two letters"""
        h = complete_homogeneous([Fraction(1, 2), Fraction(1, 3)], 2)
        assert h == [1, Fraction(5, 6), Fraction(19, 36)]

    def test_not_contained(self):
        """Test a non-contained skew shape is zero"""
        assert schur_skew_jt(YoungDiagram(rows=(1,)), YoungDiagram(rows=(2,)), [1, 1]).is_zero


class TestPrincipalLimits:
    def test_packed_profile(self):
        """Test the empty diagram has zero limit"""
        for theta in (0.5, 1.0, 2.0):
            h = segment_profile(-theta, 0.0, theta)
            assert jack_principal_limit(h, theta) == pytest.approx(0.0, abs=1e-10)
            assert macdonald_principal_limit(h, theta, -1.5) == pytest.approx(0.0, abs=1e-8)

    def test_positive_kappa(self):
        """Test κ must be negative"""
        with pytest.raises(WalkError):
            macdonald_principal_limit(segment_profile(-1.0, 0.0, 1.0), 1.0, 0.5)
