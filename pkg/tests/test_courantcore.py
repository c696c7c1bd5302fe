"""Tests for Courant backends and the axiom sweep."""

import unittest

from courant_verify.courantcore import (
    ActionBackend,
    Bivector,
    ExactBackend,
    PointBackend,
    ProductBackend,
    compare_brackets,
    conjugate,
    coisotropic_stabilizers,
    koszul_bracket,
    poisson_graph_frame,
    poisson_jacobiator,
    relocate,
    relocate_section,
    verify_axioms,
)
from courant_verify.errors import BackendMismatchError, ChartMismatchError, PreconditionError
from courant_verify.exactcalc import Chart, KForm, VectorField, differential, scalar
from courant_verify.quadlie import QuadLieAlgebra, abelian, sl2

R3 = Chart("R3", ("x", "y", "z"))
x, y, z = R3.symbols
LINE = Chart("R", ("t",))
(t,) = LINE.symbols


def sl2_on_line():
    rho = [VectorField(LINE, (-1,)), VectorField(LINE, (-2 * t,)), VectorField(LINE, (t**2,))]
    return ActionBackend(LINE, sl2(), rho)


def exact_trials(backend):
    return [
        backend.make(VectorField.coordinate(R3, 0)),
        backend.make(None, KForm.coordinate(R3, 1)),
        backend.make(VectorField(R3, (z, 0, x)), None),
        backend.make(VectorField(R3, (0, 0, y)), KForm.one_form(R3, (0, 0, x))),
    ]


class TestExactBackend(unittest.TestCase):
    """Test cases for the twisted exact Courant algebroid."""

    def setUp(self):
        self.T = ExactBackend(R3, KForm(R3, 3, {(0, 1, 2): x}))

    def test_labels_and_split_metric(self):
        self.assertEqual(self.T.labels[:3], ("d/dx", "d/dy", "d/dz"))
        self.assertEqual(self.T.labels[3:], ("dx", "dy", "dz"))
        dx = self.T.make(None, KForm.coordinate(R3, 0))
        ddx = self.T.make(VectorField.coordinate(R3, 0))
        self.assertEqual(self.T.pairing(dx, ddx), 1)
        self.assertEqual(self.T.pairing(dx, dx), 0)

    def test_coanchor_is_the_form_part(self):
        alpha = KForm.one_form(R3, (y, 0, 1))
        self.assertEqual(self.T.coanchor(alpha), self.T.make(None, alpha))

    def test_axioms(self):
        report = verify_axioms(self.T, exact_trials(self.T))
        self.assertTrue(report.passed, report.failed_identities())
        self.assertGreater(report.checked, 64)

    def test_closed_formula_matches_frame_expansion(self):
        self.assertTrue(compare_brackets(self.T, exact_trials(self.T)).passed)

    def test_twist_enters_vector_bracket(self):
        bracket = self.T.dorfman(self.T.frame(0), self.T.frame(1))
        _, form = self.T.split(bracket)
        # ι_{∂x} ι_{∂y}(x dx∧dy∧dz) = -x dz
        self.assertEqual(form.components[2], -x)

    def test_non_closed_twist(self):
        R4 = Chart("R4", ("a", "b", "c", "w"))
        w = R4.symbols[3]
        with self.assertRaises(PreconditionError):
            ExactBackend(R4, KForm(R4, 3, {(0, 1, 2): w}))

    def test_empty_trial_list(self):
        with self.assertRaises(PreconditionError):
            verify_axioms(self.T, [])

    def test_sections_of_another_backend(self):
        other = ExactBackend(R3)
        with self.assertRaises(BackendMismatchError):
            self.T.pairing(self.T.frame(0), other.frame(0))

    def test_relocation_keeps_the_twist(self):
        S = Chart("S", ("u", "v", "w"))
        moved = relocate(self.T, S)
        u = S.symbols[0]
        self.assertEqual(moved.gamma, KForm(S, 3, {(0, 1, 2): u}))
        section = relocate_section(self.T.make(VectorField(R3, (y, 0, 0))), moved)
        self.assertEqual(section.coeffs[0], S.symbols[1])


class TestActionBackends(unittest.TestCase):
    """Test cases for action and point algebroids of quadratic Lie algebras."""

    def test_point_axioms(self):
        self.assertTrue(verify_axioms(PointBackend(sl2())).passed)

    def test_action_axioms(self):
        backend = sl2_on_line()
        report = verify_axioms(backend)
        self.assertTrue(report.passed, report.failed_identities())
        self.assertTrue(compare_brackets(backend).passed)

    def test_anchor(self):
        backend = sl2_on_line()
        sigma = backend.section((1, t, 0))
        self.assertEqual(backend.anchor(sigma), VectorField(LINE, (-1 - 2 * t**2,)))

    def test_broken_invariance_fails_c2(self):
        d = sl2()
        broken = QuadLieAlgebra(d.labels, d.structure, [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "broken")
        report = verify_axioms(PointBackend(broken))
        self.assertIn("c2", report.failed_identities())

    def test_stabilizers(self):
        points = [(0,), (1,), (-2,)]
        self.assertTrue(coisotropic_stabilizers(sl2_on_line(), points).passed)

    def test_free_action_has_no_coisotropic_stabilizers(self):
        translation = ActionBackend(LINE, abelian([[1]]), [VectorField.coordinate(LINE, 0)])
        report = coisotropic_stabilizers(translation, [(0,), (3,)])
        self.assertEqual(report.failed_identities(), ["coisotropic_stabilizer"])
        self.assertEqual(len(report.failures), 2)

    def test_stabilizers_need_an_action(self):
        with self.assertRaises(PreconditionError):
            coisotropic_stabilizers(ExactBackend(R3), [(0, 0, 0)])

    def test_point_relocation(self):
        backend = PointBackend(sl2())
        with self.assertRaises(ChartMismatchError):
            backend.relocated(LINE)


class TestDerivedBackends(unittest.TestCase):
    """Test cases for conjugates and products."""

    def test_conjugate_negates_pairing(self):
        T = ExactBackend(R3)
        bar = conjugate(T)
        sigma = bar.section((1, 0, 0, 1, 0, 0))
        self.assertEqual(bar.pairing(sigma, sigma), -T.pairing(bar.to_base(sigma), bar.to_base(sigma)))
        self.assertIs(conjugate(bar), T)

    def test_conjugate_axioms(self):
        bar = conjugate(sl2_on_line())
        self.assertTrue(verify_axioms(bar).passed)

    def test_conjugate_coanchor_flips_sign(self):
        T = ExactBackend(R3)
        bar = conjugate(T)
        dx = KForm.coordinate(R3, 0)
        self.assertEqual(bar.to_base(bar.coanchor(dx)), -T.coanchor(dx))

    def test_product_axioms(self):
        product = ProductBackend(PointBackend(sl2()), sl2_on_line())
        self.assertEqual(product.rank, 6)
        self.assertEqual(product.chart.coords, ("t",))
        report = verify_axioms(product)
        self.assertTrue(report.passed, report.failed_identities())

    def test_product_embedding(self):
        first, second = PointBackend(sl2()), sl2_on_line()
        product = ProductBackend(first, second)
        sigma = product.pair_sections(first.frame(0), second.frame(2))
        self.assertEqual(product.components(sigma), ((1, 0, 0), (0, 0, 1)))
        self.assertEqual(product.pairing(sigma, sigma), 0)

    def test_product_coordinate_clash(self):
        with self.assertRaises(ChartMismatchError):
            ProductBackend(sl2_on_line(), sl2_on_line())


class TestPoissonHelpers(unittest.TestCase):
    """Test cases for bivectors and their graphs."""

    def setUp(self):
        self.heisenberg = Bivector.from_brackets(R3, {("x", "y"): z})
        self.broken = Bivector.from_brackets(R3, {("x", "y"): 1, ("x", "z"): x})

    def test_not_skew(self):
        with self.assertRaises(ValueError):
            Bivector(R3, [[1, 0, 0], [0, 0, 0], [0, 0, 0]])

    def test_sharp(self):
        self.assertEqual(self.heisenberg.sharp(KForm.coordinate(R3, 0)), VectorField(R3, (0, z, 0)))

    def test_jacobiator(self):
        self.assertEqual(poisson_jacobiator(self.heisenberg, x, y, z), 0)
        self.assertEqual(poisson_jacobiator(self.broken, x, y, z), 1)

    def test_koszul_bracket_of_differentials(self):
        dx, dy = KForm.coordinate(R3, 0), KForm.coordinate(R3, 1)
        for pi in (self.heisenberg, self.broken):
            expected = differential(R3, pi.poisson_bracket(x, y))
            self.assertEqual(koszul_bracket(pi, dx, dy), expected)

    def test_graph_is_isotropic(self):
        T = ExactBackend(R3)
        frame = poisson_graph_frame(T, self.broken)
        for sigma in frame:
            for tau in frame:
                self.assertEqual(scalar(T.pairing(sigma, tau)), 0)


if __name__ == '__main__':
    unittest.main()
