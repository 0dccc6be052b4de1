import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypercube.optable import make_modular, make_symmetric
from hypercube.tensor import (
    ModelParams,
    eval_cell,
    eval_full,
    eval_naive,
    frobenius_sq,
    gram_sums,
    init_factors,
    regular_representation,
    representation_factors,
)


def rep_params(op, **kw):
    return representation_factors(regular_representation(op.table), **kw)


class TestInit:
    def test_std(self):
        p = init_factors(100, seed=0)
        assert abs(p.A.std() - 0.1) < 0.005
        assert abs(p.C.std() - 0.1) < 0.005

    def test_deterministic(self):
        a, b = init_factors(5, 7), init_factors(5, 7)
        for x, y in zip((a.A, a.B, a.C), (b.A, b.B, b.C)):
            np.testing.assert_array_equal(x, y)
        assert not np.array_equal(a.A, init_factors(5, 8).A)

    def test_tied(self):
        p = init_factors(4, 1, tied=True)
        assert p.tied
        np.testing.assert_array_equal(p.B, p.A)
        np.testing.assert_array_equal(p.C, p.A.transpose(0, 2, 1))
        assert len(p.free()) == 1

    def test_custom_std_and_errors(self):
        assert abs(init_factors(60, 0, std=2.0).A.std() - 2.0) < 0.05
        with pytest.raises(ValueError):
            init_factors(0, 0)
        with pytest.raises(ValueError):
            init_factors(3, 0, std=0.0)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            ModelParams(np.zeros((2, 2, 2)), np.zeros((3, 3, 3)), np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            ModelParams(np.zeros((2, 3, 3)), np.zeros((2, 3, 3)), np.zeros((2, 3, 3)))


class TestEval:
    def test_c2_regular_rep(self):
        p = rep_params(make_modular("add", 2))
        np.testing.assert_allclose(eval_cell(p, 0, 1), [0.0, 1.0], atol=1e-15)

    def test_zero(self):
        z = np.zeros((3, 3, 3))
        np.testing.assert_array_equal(eval_cell(ModelParams(z, z, z), 1, 2), np.zeros(3))

    def test_scaling_one_factor(self):
        p = init_factors(4, 2)
        q = ModelParams(3.0 * p.A, p.B, p.C)
        np.testing.assert_allclose(eval_cell(q, 1, 3), 3.0 * eval_cell(p, 1, 3), rtol=1e-13)

    def test_index_check(self):
        p = init_factors(3, 0)
        with pytest.raises(IndexError):
            eval_cell(p, 3, 0)
        with pytest.raises(IndexError):
            eval_cell(p, 0, -1)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_full_matches_naive(self, n):
        for seed in range(20):
            p = init_factors(n, seed)
            np.testing.assert_allclose(eval_full(p), eval_naive(p), rtol=0, atol=1e-12)

    def test_full_matches_cells(self):
        p = init_factors(5, 3)
        T = eval_full(p)
        for a in range(5):
            for b in range(5):
                np.testing.assert_allclose(T[a, b], eval_cell(p, a, b), atol=1e-13)

    @pytest.mark.parametrize("op", [make_modular("add", 6), make_symmetric(3), make_symmetric(4)],
                             ids=["C6", "S3", "S4"])
    def test_exact_representation_reproduces_table(self, op):
        np.testing.assert_allclose(eval_full(rep_params(op)), op.data_tensor(), atol=1e-12)
        np.testing.assert_allclose(eval_full(rep_params(op, tied=True)), op.data_tensor(), atol=1e-12)

    def test_transposed_layout_gives_subtraction(self):
        add, sub = make_modular("add", 7), make_modular("sub", 7)
        p = rep_params(add, transposed=True)
        np.testing.assert_allclose(eval_full(p), sub.data_tensor(), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 10**6), st.floats(-3, 3), st.floats(-3, 3))
    def test_trilinear(self, n, seed, s, t):
        p, q = init_factors(n, seed), init_factors(n, seed + 1)
        for which in range(3):
            def mix(x):
                parts = [p.A, p.B, p.C]
                parts[which] = x
                return eval_full(ModelParams(*parts))
            X, Y = (p.A, p.B, p.C)[which], (q.A, q.B, q.C)[which]
            lhs = mix(s * X + t * Y)
            rhs = s * mix(X) + t * mix(Y)
            np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(rhs).max()))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10**6))
    def test_cyclic_symmetry(self, n, seed):
        p = init_factors(n, seed)
        T = eval_full(p)
        Tc = eval_full(ModelParams(p.B, p.C, p.A))
        # T'[b, c, a] == T[a, b, c]
        np.testing.assert_allclose(Tc, T.transpose(1, 2, 0), atol=1e-12)


class TestFrobenius:
    def test_zero(self):
        z = np.zeros((4, 4, 4))
        assert frobenius_sq(ModelParams(z, z, z)) == 0.0

    @pytest.mark.parametrize("n", [2, 5, 8])
    def test_cyclic_rep(self, n):
        assert frobenius_sq(rep_params(make_modular("add", n))) == pytest.approx(3 * n, abs=1e-12)

    def test_quadratic_scaling(self):
        p = init_factors(4, 0)
        assert frobenius_sq(p.scaled(1.7)) == pytest.approx(1.7**2 * frobenius_sq(p), rel=1e-13)


class TestRegularRepresentation:
    @pytest.mark.parametrize("op", [make_modular("add", 5), make_symmetric(3)], ids=["C5", "S3"])
    def test_homomorphism(self, op):
        rho = regular_representation(op.table)
        for g in range(op.n):
            for h in range(op.n):
                np.testing.assert_array_equal(rho[g] @ rho[h], rho[op.table[g, h]])

    def test_permutation_matrices(self):
        rho = regular_representation(make_symmetric(3).table)
        np.testing.assert_array_equal(rho.sum(axis=1), np.ones((6, 6)))
        np.testing.assert_array_equal(rho.sum(axis=2), np.ones((6, 6)))


def test_gram_sums_match_loops():
    p = init_factors(4, 9)
    g = gram_sums(p)
    for X, left, right in ((p.A, g.A_left, g.A_right), (p.B, g.B_left, g.B_right), (p.C, g.C_left, g.C_right)):
        np.testing.assert_allclose(left, sum(x @ x.T for x in X), atol=1e-13)
        np.testing.assert_allclose(right, sum(x.T @ x for x in X), atol=1e-13)
