import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import leibniz_det, random_system
from volform.errors import DomainError, InputError
from volform.exterior import (
    FormBasis, Multivector, OneForm, coefficient_matrix, det_coefficient, wedge, wedge_all,
)

B3 = FormBasis(("e1", "e2", "e3"))
B5 = FormBasis(tuple(f"e{i}" for i in range(5)))


def e(i, basis=B3):
    return OneForm(basis, {i: 1.0})


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


class TestBasics:
    def test_duplicate_labels(self):
        with pytest.raises(InputError):
            FormBasis(("a", "a"))

    def test_form_by_label(self):
        f = B3.form({"e2": 2.0}, e3=0.0)
        assert f.coeffs == {1: 2.0}

    def test_zero_coefficients_dropped(self):
        assert (e(0) + (-1.0) * e(0)).coeffs == {}

    def test_multivector_rejects_unsorted(self):
        with pytest.raises(InputError):
            Multivector(2, {(1, 0): 1.0}, 3)


class TestWedge:
    def test_sign_rule(self):
        assert wedge(e(0), e(1)).terms == {(0, 1): 1.0}
        assert wedge(e(1), e(0)).terms == {(0, 1): -1.0}

    def test_repeated_factor_vanishes(self):
        assert wedge(e(0) + e(1), e(0)).terms == {(0, 1): -1.0}

    def test_bilinearity(self):
        w = wedge(wedge(2.0 * e(0), 3.0 * e(1)), e(2))
        assert w.terms == {(0, 1, 2): 6.0}

    def test_grade_overflow_is_zero(self):
        top = wedge(wedge(e(0), e(1)), e(2))
        over = wedge(top, e(0) + e(1) + e(2))
        assert over.is_zero() and over.grade == 4

    def test_scalar_identity(self):
        a = wedge(e(0), e(2))
        assert wedge(Multivector.scalar(2.5, 3), a).allclose(2.5 * a)


def random_mv(rng, grade, dim=5):
    from itertools import combinations

    keys = list(combinations(range(dim), grade))
    pick = rng.choice(len(keys), size=min(len(keys), 4), replace=False)
    return Multivector(grade, {keys[i]: rng.standard_normal() for i in pick}, dim)


class TestAlgebraicLaws:
    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3))
    def test_anticommutativity(self, seed, ga, gb):
        rng = np.random.default_rng(seed)
        a, b = random_mv(rng, ga), random_mv(rng, gb)
        assert wedge(a, b).allclose((-1.0) ** (ga * gb) * wedge(b, a))

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 2), st.integers(1, 2), st.integers(1, 2))
    def test_associativity(self, seed, ga, gb, gc):
        rng = np.random.default_rng(seed)
        a, b, c = random_mv(rng, ga), random_mv(rng, gb), random_mv(rng, gc)
        assert wedge(wedge(a, b), c).allclose(wedge(a, wedge(b, c)), rtol=1e-12, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.floats(-5, 5), st.floats(-5, 5))
    def test_multilinearity(self, seed, s, t):
        rng = np.random.default_rng(seed)
        forms, _ = random_system(rng, 5)
        extra, _ = random_system(rng, 5)
        k = int(rng.integers(5))
        mixed = list(forms)
        mixed[k] = s * forms[k] + t * extra[k]
        left = list(forms)
        right = list(forms)
        right[k] = extra[k]
        want = s * wedge_all(left) + t * wedge_all(right)
        assert abs(wedge_all(mixed) - want) <= 1e-10 * (abs(s * wedge_all(left)) + abs(t * wedge_all(right)) + 1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31))
    def test_alternation(self, seed):
        rng = np.random.default_rng(seed)
        forms, _ = random_system(rng, 6)
        i, j = rng.choice(6, size=2, replace=False)
        swapped = list(forms)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        assert rel_close(wedge_all(swapped), -wedge_all(forms), 1e-12)
        repeated = list(forms)
        repeated[i] = repeated[j]
        assert wedge_all(repeated) == pytest.approx(0.0, abs=1e-12 * np.prod([max(abs(v) for v in f.coeffs.values()) for f in forms]))


class TestWedgeAll:
    def test_identity_and_swap(self):
        basis = [e(i, B5) for i in range(5)]
        assert wedge_all(basis) == 1.0
        basis[1], basis[3] = basis[3], basis[1]
        assert wedge_all(basis) == -1.0
        assert det_coefficient(basis) == pytest.approx(-1.0, abs=1e-15)

    def test_singular(self):
        f = [e(0) + e(1), 2.0 * e(0) + 2.0 * e(1), e(2)]
        assert wedge_all(f) == 0.0
        assert det_coefficient(f) == pytest.approx(0.0, abs=1e-15)

    def test_row_scaling(self):
        rng = np.random.default_rng(11)
        forms, _ = random_system(rng, 4)
        base_w, base_d = wedge_all(forms), det_coefficient(forms)
        scaled = [3.5 * forms[0]] + forms[1:]
        assert rel_close(wedge_all(scaled), 3.5 * base_w, 1e-12)
        assert rel_close(det_coefficient(scaled), 3.5 * base_d, 1e-12)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            wedge_all([e(0), e(1)])
        with pytest.raises(DomainError):
            det_coefficient([e(0), e(1)])

    def test_matches_folded_wedge(self):
        rng = np.random.default_rng(5)
        forms, _ = random_system(rng, 5)
        acc = forms[0].as_multivector()
        for f in forms[1:]:
            acc = wedge(acc, f)
        assert rel_close(acc.terms.get(tuple(range(5)), 0.0), wedge_all(forms), 1e-12)

    def test_coefficient_matrix(self):
        f = [B3.form(e1=1.0, e3=2.0), B3.form(e2=-1.0), B3.form(e1=4.0)]
        np.testing.assert_array_equal(coefficient_matrix(f), [[1, 0, 2], [0, -1, 0], [4, 0, 0]])

    @pytest.mark.parametrize("n", range(1, 8))
    def test_leibniz_oracle(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(5):
            forms, C = random_system(rng, n)
            want = leibniz_det(C)
            assert rel_close(wedge_all(forms), want, 1e-10)
            assert rel_close(det_coefficient(forms), want, 1e-10)

    def test_six_by_six_agreement(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            forms, _ = random_system(rng, 6)
            assert rel_close(wedge_all(forms), det_coefficient(forms), 1e-12)

    def test_large_sparse_agreement(self):
        rng = np.random.default_rng(24)
        for n in (12, 16, 20, 24):
            for _ in range(10):
                forms, _ = random_system(rng, n)
                assert rel_close(wedge_all(forms), det_coefficient(forms), 1e-10)
