"""Tests for exact linear algebra and linear relations."""

import random
import unittest

import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from courant_verify.errors import DegenerateFormError, DimensionMismatchError
from courant_verify.exactcalc import Chart
from courant_verify.linalgrel import (
    BilForm,
    LinearRelation,
    LinSpace,
    SpanSolver,
    Subspace,
    ann_natural,
    check_ann_lemma,
    compose,
    is_coisotropic,
    is_isotropic,
    is_lagrangian,
    nullspace,
    orth_complement,
    random_relation,
    rank,
    row_reduce,
)

M = Chart("M", ("x", "y"))
x, y = M.symbols


class TestEchelon(unittest.TestCase):
    """Test cases for elimination over rationals and rational functions."""

    def test_rank_over_rationals(self):
        self.assertEqual(rank([(1, 2, 3), (2, 4, 6), (0, 1, 1)], 3), 2)

    def test_rank_over_function_field(self):
        # dependent over Q(x, y) even though no constant combination vanishes
        self.assertEqual(rank([(x, y), (x**2, x * y)], 2), 1)

    def test_empty_inputs(self):
        reduced, pivots, _ = row_reduce([], 3)
        self.assertEqual((reduced, pivots), ([], []))
        self.assertEqual(len(nullspace([], 2)), 2)

    def test_nullspace(self):
        rows = [(1, 1, 0), (0, 1, 1)]
        for v in nullspace(rows, 3):
            self.assertTrue(all(sum(r[i] * v[i] for i in range(3)) == 0 for r in rows))

    def test_row_length_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            rank([(1, 2), (1, 2, 3)], 2)


class TestSpanSolver(unittest.TestCase):
    """Test cases for expressing vectors in a frame."""

    def test_solve_recovers_coefficients(self):
        gens = [(x, 1, 0), (0, y, 1)]
        solver = SpanSolver(gens, 3)
        target = tuple(sympy.cancel(y * a + x * b) for a, b in zip(*gens))
        coeffs = solver.solve(target)
        self.assertEqual(coeffs, (y, x))

    def test_outside_span(self):
        solver = SpanSolver([(1, 0, 0)], 3)
        self.assertIsNone(solver.solve((0, 1, 0)))
        self.assertEqual(solver.residual((2, 1, 0)), (0, 1, 0))

    def test_dependent_generators(self):
        self.assertFalse(SpanSolver([(1, 1), (2, 2)], 2).independent)


class TestSubspaces(unittest.TestCase):
    """Test cases for canonical subspaces and bilinear forms."""

    def setUp(self):
        self.V = LinSpace(4)
        self.split = BilForm(sympy.Matrix([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]]))

    def test_equality_is_canonical(self):
        a = Subspace(self.V, [(1, 0, 0, 0), (0, 1, 0, 0)])
        b = Subspace(self.V, [(1, 1, 0, 0), (1, -1, 0, 0)])
        self.assertEqual(a, b)

    def test_intersection(self):
        a = Subspace(self.V, [(1, 0, 0, 0), (0, 1, 0, 0)])
        b = Subspace(self.V, [(0, 1, 0, 0), (0, 0, 1, 0)])
        self.assertEqual(a.intersect(b), Subspace(self.V, [(0, 1, 0, 0)]))

    def test_lagrangian(self):
        L = Subspace(self.V, [(1, 0, 0, 0), (0, 1, 0, 0)])
        self.assertTrue(is_lagrangian(L, self.split))
        self.assertEqual(orth_complement(L, self.split), L)

    def test_coisotropic_not_lagrangian(self):
        C = Subspace(self.V, [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0)])
        self.assertTrue(is_coisotropic(C, self.split))
        self.assertFalse(is_isotropic(C, self.split))
        self.assertFalse(is_lagrangian(C, self.split))

    def test_degenerate_form(self):
        with self.assertRaises(DegenerateFormError):
            is_lagrangian(Subspace(LinSpace(2), [(1, 0)]), BilForm([[1, 0], [0, 0]]))

    def test_asymmetric_form(self):
        with self.assertRaises(ValueError):
            BilForm([[0, 1], [0, 0]])


class TestRelations(unittest.TestCase):
    """Test cases for composition and the natural annihilator."""

    def test_graph_composition(self):
        A = sympy.Matrix([[1, 2], [0, 1]])
        B = sympy.Matrix([[3, 0], [1, 1]])
        composed = compose(LinearRelation.graph(B), LinearRelation.graph(A))
        self.assertEqual(composed.relation, LinearRelation.graph(B * A))
        self.assertEqual(composed.kernel_dim, 0)

    def test_identity_is_neutral(self):
        R = LinearRelation.from_pairs(2, 3, [((1, 0, 1), (1, 1)), ((0, 1, 0), (0, 1))])
        self.assertEqual(compose(LinearRelation.identity(3), R).relation, R)
        self.assertEqual(compose(R, LinearRelation.identity(2)).relation, R)

    def test_transpose_twice(self):
        R = LinearRelation.from_pairs(2, 1, [((1,), (1, 2))])
        self.assertEqual(R.transpose().transpose(), R)

    def test_ann_of_graph(self):
        # ann of the graph of A is the graph of the transpose: μ1 = Aᵀμ2
        A = sympy.Matrix([[1, 2], [3, 4], [0, 1]])
        ann = ann_natural(LinearRelation.graph(A))
        units = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        pairs = [(mu, tuple(A.T * sympy.Matrix(mu))) for mu in units]
        self.assertEqual(ann, LinearRelation.from_pairs(2, 3, pairs))

    def test_ann_dimension(self):
        R = LinearRelation.from_pairs(2, 3, [((1, 0, 1), (1, 1))])
        self.assertEqual(ann_natural(R).dim, 5 - 1)

    def test_mismatched_composition(self):
        with self.assertRaises(DimensionMismatchError):
            compose(LinearRelation.identity(2), LinearRelation.identity(3))

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=40, deadline=None, derandomize=True)
    def test_ann_lemma_property(self, seed):
        rng = random.Random(seed)
        dims = [rng.randint(0, 3) for _ in range(3)]
        first = random_relation(rng, dims[0], dims[1], rng.randint(0, dims[0] + dims[1]))
        second = random_relation(rng, dims[1], dims[2], rng.randint(0, dims[1] + dims[2]))
        lhs = ann_natural(compose(second, first).relation)
        rhs = compose(ann_natural(second), ann_natural(first)).relation
        self.assertEqual(lhs, rhs)

    def test_ann_lemma_sweep(self):
        report = check_ann_lemma(count=100, max_dim=6, seed=0)
        self.assertTrue(report.passed, report.failed_identities())
        self.assertEqual(report.checked, 100)


if __name__ == '__main__':
    unittest.main()
