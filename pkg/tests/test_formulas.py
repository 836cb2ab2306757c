import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from volform.decomp import cholesky
from volform.errors import DomainError, InputError
from volform.formulas import (
    JacobianFactor, jac_cholesky, jac_pinv_general, jac_pinv_indef, jac_pinv_symmetric,
    jac_sd_indef_full, jac_sd_indef_singular, jac_sd_posdef_full, jac_sd_semidef,
    jac_svd_measure, jacobian_for,
)
from volform.spectra import MatrixClass, Spectrum

descending = st.lists(st.floats(0.01, 100.0), min_size=1, max_size=6, unique=True).map(
    lambda v: sorted(v, reverse=True))


def approx(x, rel=1e-14):
    return pytest.approx(x, rel=rel, abs=0)


class TestJacobianFactor:
    def test_value_and_dict(self):
        f = JacobianFactor(math.log(3.0), -1, -2)
        assert f.value() == approx(-0.75)
        assert f.to_dict()["value"] == approx(-0.75)

    def test_multiplication_is_fieldwise(self):
        a = JacobianFactor(1.0, -1, 3)
        b = JacobianFactor(2.0, -1, -1, degenerate=True)
        c = a * b
        assert (c.log_abs, c.sign, c.pow2, c.degenerate) == (3.0, 1, 2, True)

    def test_degenerate_serializes_null_log(self):
        f = jac_sd_posdef_full([2.0, 2.0])
        assert f.to_dict()["log_abs"] is None
        assert f.to_dict()["value"] == 0.0


class TestSdFull:
    def test_examples(self):
        assert jac_sd_posdef_full([3.0, 1.0]).value() == 0.5
        assert jac_sd_posdef_full([1.0]).value() == 0.5
        assert jac_sd_posdef_full([1.0]).pow2 == -1

    def test_tie_is_degenerate(self):
        f = jac_sd_posdef_full([1.7, 1.7])
        assert f.value() == 0.0 and f.degenerate

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            jac_sd_posdef_full([1.0, -1.0])

    @settings(max_examples=60, deadline=None)
    @given(descending, st.floats(0.1, 10.0))
    def test_scale_covariance(self, d, c):
        m = len(d)
        base = jac_sd_posdef_full(d)
        scaled = jac_sd_posdef_full([c * x for x in d])
        assert scaled.log_abs == pytest.approx(base.log_abs + m * (m - 1) / 2 * math.log(c), abs=1e-9)
        assert scaled.pow2 == base.pow2 == -m


class TestCholesky:
    def test_examples(self):
        assert jac_cholesky(np.eye(2)).value() == 4.0
        assert jac_cholesky(np.diag([2.0, 3.0])).value() == approx(48.0)

    @pytest.mark.parametrize("t", [0.5, 5.0, 12.0])
    def test_scalar_matches_derivative(self, t):
        # a = t^2, so da/dt = 2t
        assert jac_cholesky([[t]]).value() == approx(2 * t)

    def test_accepts_parts(self):
        parts = cholesky([[4.0, 2.0], [2.0, 2.0]])
        # T = [[2, 1], [0, 1]]: 4 * 2^2 * 1
        assert jac_cholesky(parts).value() == approx(16.0)

    def test_nonpositive_diagonal(self):
        with pytest.raises(DomainError):
            jac_cholesky(np.diag([1.0, 0.0]))


class TestSemidef:
    def test_examples(self):
        assert jac_sd_semidef([2.0], 3).value() == approx(2.0)
        assert jac_sd_semidef([3.0, 1.0], 2).value() == approx(0.5)
        assert jac_sd_semidef([2.0, 1.0], 4).value() == approx(1.0)

    def test_rank_exceeds_dimension(self):
        with pytest.raises(DomainError):
            jac_sd_semidef([3.0, 2.0, 1.0], 2)


class TestIndefinite:
    def test_theorem_one_examples(self):
        assert jac_sd_indef_full([2.0], [1.0, 0.5]).value() == approx(0.46875)
        assert jac_sd_indef_full([2.0, 1.0], [1.0]).value() == approx(0.75)
        assert jac_sd_indef_full([1.0], []) == jac_sd_posdef_full([1.0])

    def test_theorem_two_examples(self):
        assert jac_sd_indef_singular([2.0], [1.0], 3).value() == approx(1.5)
        assert jac_sd_indef_singular([2.0], [1.0], 2).value() == approx(0.75)
        assert jac_sd_indef_singular([3.0, 1.0], [], 3) == jac_sd_semidef([3.0, 1.0], 3)

    def test_same_sign_ties_are_degenerate(self):
        assert jac_sd_indef_full([2.0, 2.0], [1.0]).degenerate
        assert jac_sd_indef_singular([2.0], [1.0, 1.0], 4).value() == 0.0

    def test_opposite_sign_equal_magnitude_is_not_a_tie(self):
        f = jac_sd_indef_full([1.0], [1.0])
        assert not f.degenerate
        assert f.value() == approx(0.5)


class TestBoundaryChain:
    @settings(max_examples=60, deadline=None)
    @given(descending, descending)
    def test_exact_equalities(self, lam, delta):
        m = len(lam) + len(delta)
        assert jac_sd_indef_singular(lam, delta, m) == jac_sd_indef_full(lam, delta)
        assert jac_sd_indef_full(lam, []) == jac_sd_posdef_full(lam)
        assert jac_sd_semidef(lam, len(lam)) == jac_sd_posdef_full(lam)
        assert jac_sd_indef_singular(lam, [], m) == jac_sd_semidef(lam, m)


class TestSvdMeasure:
    def test_examples(self):
        assert jac_svd_measure([2.0, 1.0], 3, 2).value() == approx(1.5)
        for s in (0.3, 1.0, 7.0):
            assert jac_svd_measure([s], 1, 1).value() == 0.5
        assert jac_svd_measure([2.0, 2.0], 4, 3).value() == 0.0

    def test_k_too_large(self):
        with pytest.raises(DomainError):
            jac_svd_measure([3.0, 2.0, 1.0], 4, 2)

    def test_no_overflow(self):
        f = jac_svd_measure([1e150, 1e-150], 4, 3)
        assert math.isfinite(f.log_abs)
        expected = 3 * (150 - 150) * math.log(10) + math.log(1e150 - 1e-150) + math.log(1e150 + 1e-150)
        assert f.log_abs == pytest.approx(expected, rel=1e-14)


class TestPinv:
    def test_general_examples(self):
        for s in (0.5, 2.0, 9.0):
            assert jac_pinv_general([s], 1, 1).value() == approx(s ** -2)
        assert jac_pinv_general([2.0], 2, 1).value() == approx(1 / 16)
        assert jac_pinv_general([2.0, 1.0], 3, 2).value() == approx(1 / 64)

    def test_symmetric_examples(self):
        assert jac_pinv_symmetric([2.0], 1).value() == approx(0.25)
        assert jac_pinv_symmetric([2.0], 2).value() == approx(1 / 16)
        assert jac_pinv_symmetric([3.0, 1.0], 2).value() == approx(1 / 27)

    @settings(max_examples=40, deadline=None)
    @given(descending)
    def test_full_rank_symmetric_classical(self, lam):
        m = len(lam)
        det = math.prod(lam)
        assert jac_pinv_symmetric(lam, m).value() == pytest.approx(det ** -(m + 1), rel=1e-12)

    def test_indef_agreeing_case(self):
        r = jac_pinv_indef([2.0], [1.0], 2)
        assert r.paper_value.value() == approx(0.125)
        assert r.oracle_value.value() == approx(0.125)
        assert not r.discrepancy

    def test_indef_flagged_case(self):
        r = jac_pinv_indef([2.0], [1.5, 0.5], 3)
        assert (r.lambda_exponent_paper, r.lambda_exponent_oracle) == (-3, -4)
        assert r.delta_exponent_paper == r.delta_exponent_oracle == -4
        assert r.discrepancy
        # the gap is exactly one power of the positive eigenvalue product
        assert r.paper_value.log_abs - r.oracle_value.log_abs == pytest.approx(math.log(2.0))

    @pytest.mark.parametrize("a1,a2,m", [(1, 1, 2), (2, 1, 3), (3, 1, 5), (1, 2, 3), (2, 3, 6)])
    def test_indef_agree_iff_single_negative(self, a1, a2, m):
        r = jac_pinv_indef([3.0 + i for i in range(a1)][::-1], [2.0 - 0.5 * j for j in range(a2)], m)
        assert r.discrepancy == (a2 != 1)

    def test_indef_delegates_when_one_sided(self):
        r = jac_pinv_indef([3.0, 1.0], [], 3)
        assert r.paper_value == jac_pinv_symmetric([3.0, 1.0], 3)
        assert not r.discrepancy


class TestOverflow:
    @pytest.mark.parametrize("fn", [
        lambda v: jac_sd_posdef_full(v),
        lambda v: jac_sd_semidef(v, 8),
        lambda v: jac_svd_measure(v, 7, 6),
        lambda v: jac_pinv_general(v, 7, 6),
        lambda v: jac_pinv_symmetric(v, 7),
    ])
    def test_extreme_spectrum(self, fn):
        v = [1e150, 1e75, 1.0, 1e-75, 1e-150]
        f = fn(v)
        assert math.isfinite(f.log_abs)
        assert not f.degenerate

    def test_indefinite_extreme(self):
        f = jac_sd_indef_singular([1e150, 1.0], [1e100, 1e-150], 6)
        assert math.isfinite(f.log_abs)


class TestDispatch:
    def test_multiplicity_convention(self):
        cls = MatrixClass("PosDefMult", m=2, l=1)
        spec = Spectrum((1.3,), (), (2,), (), 0)
        assert jacobian_for(cls, spec, "sd") == jac_sd_semidef([1.3], 2)

    def test_semidef_pinv(self):
        cls = MatrixClass("SemiDef", m=3, q=2)
        spec = Spectrum((3.0, 1.0), (), (1, 1), (), 1)
        assert jacobian_for(cls, spec, "pinv") == jac_pinv_symmetric([3.0, 1.0], 3)

    def test_rect_pinv(self):
        cls = MatrixClass("Rect", N=3, m=2, q=2)
        spec = Spectrum((2.0, 1.0), (), (1, 1), (), 0)
        assert jacobian_for(cls, spec, "pinv") == jac_pinv_general([2.0, 1.0], 3, 2)
        assert jacobian_for(cls, spec, "svd") == jac_svd_measure([2.0, 1.0], 3, 2)

    def test_indefinite(self):
        cls = MatrixClass("Indef", m=3, m1=1, m2=2)
        spec = Spectrum((2.0,), (1.0, 0.5), (1,), (1, 1), 0)
        assert jacobian_for(cls, spec, "sd") == jac_sd_indef_full([2.0], [1.0, 0.5])
        assert jacobian_for(cls, spec, "pinv") == jac_pinv_indef([2.0], [1.0, 0.5], 3).paper_value

    def test_negdef_uses_magnitudes(self):
        cls = MatrixClass("NegDef", m=2)
        spec = Spectrum((), (3.0, 1.0), (), (1, 1), 0)
        assert jacobian_for(cls, spec, "sd") == jac_sd_posdef_full([3.0, 1.0])

    def test_unsupported(self):
        cls = MatrixClass("PosDef", m=2)
        spec = Spectrum((3.0, 1.0), (), (1, 1), (), 0)
        with pytest.raises(InputError):
            jacobian_for(cls, spec, "svd")
        with pytest.raises(InputError):
            jacobian_for(cls, spec, "qr")
