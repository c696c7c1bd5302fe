"""Tests for Courant relations and images of pseudo-Dirac structures."""

import unittest

from courant_verify.courantcore import ActionBackend, Bivector, ExactBackend, poisson_graph_frame
from courant_verify.errors import NonCleanCompositionError, PreconditionError
from courant_verify.exactcalc import Chart, ChartMap, KForm, VectorField
from courant_verify.pseudodirac import (
    PseudoConnection,
    SubbundleFrame,
    action_subalgebra,
    check_lie_algebroid,
    induced_lie_algebroid,
    is_pseudo_dirac,
    same_structure,
)
from courant_verify.quadlie import SubalgebraSpec, semidirect_dual
from courant_verify.relcompose import (
    action_decomposition,
    action_decomposition_formula,
    backward_image,
    check_fiber_composition,
    check_involutive_along_support,
    check_lagrangian,
    check_transverse_pair,
    composition_identity,
    diagonal_morphism,
    dual_basis,
    fiberwise_lie_morphism,
    forward_image,
    graph_relation,
    identity_relation,
    manin_pair_morphism,
    morphism_check,
    pullback_formula,
    q_poisson,
    transverse_pair,
    transverse_target,
)

M = Chart("M", ("x", "y"))
N = Chart("N", ("u", "v"))
x, y = M.symbols
u, v = N.symbols
PLANE = Chart("P", ("p", "q"))
p, q = PLANE.symbols


def graph_connection(backend, brackets):
    pi = Bivector.from_brackets(backend.chart, brackets)
    frame = SubbundleFrame(backend, poisson_graph_frame(backend, pi), "gr(pi)")
    return PseudoConnection.zero(frame)


def manin_action():
    d = semidirect_dual(("a", "b"), [("a", "b", {"b": 1})])
    rho = [
        VectorField(PLANE, (0, q)),
        VectorField(PLANE, (-q, 0)),
        VectorField(PLANE, (1, 0)),
        VectorField(PLANE, (0, 1)),
    ]
    return ActionBackend(PLANE, d, rho)


class TestRelations(unittest.TestCase):
    """Test cases for Courant relations along graphs of maps."""

    def setUp(self):
        self.phi = ChartMap(M, N, (x, y + x**2))
        self.inverse = ChartMap(N, M, (u, v - u**2))

    def test_graph_relation(self):
        R = graph_relation(self.phi)
        self.assertEqual(R.rank, 4)
        self.assertTrue(check_lagrangian(R).passed)
        self.assertTrue(check_involutive_along_support(R).passed)

    def test_transpose(self):
        R = graph_relation(self.phi).transpose(self.inverse)
        self.assertIs(R.source.chart, N)
        self.assertTrue(check_lagrangian(R).passed)

    def test_transpose_needs_an_inverse(self):
        wrong = ChartMap(N, M, (u, v))
        with self.assertRaises(PreconditionError):
            graph_relation(self.phi).transpose(wrong)

    def test_twists_must_match(self):
        R3 = Chart("R3", ("x", "y", "z"))
        S3 = Chart("S3", ("a", "b", "c"))
        phi = ChartMap(R3, S3, R3.symbols)
        with self.assertRaises(PreconditionError):
            graph_relation(phi, gamma_target=KForm(S3, 3, {(0, 1, 2): 1}))

    def test_identity_relation(self):
        R = identity_relation(manin_action())
        self.assertTrue(check_lagrangian(R).passed)
        self.assertTrue(R.contains(R.pairs[0][0], R.pairs[0][1]))

    def test_diagonal_morphism(self):
        R = diagonal_morphism(ExactBackend(M))
        self.assertEqual(R.rank, 6)
        self.assertTrue(check_lagrangian(R).passed)

    def test_manin_pair_morphism(self):
        backend = manin_action()
        g = SubalgebraSpec.from_labels(backend.algebra, [{"a": 1}, {"b": 1}], "g")
        R = manin_pair_morphism(backend, g)
        self.assertTrue(check_lagrangian(R).passed)
        self.assertTrue(check_involutive_along_support(R).passed)

    def test_manin_pair_needs_lagrangian(self):
        backend = manin_action()
        e = SubalgebraSpec.from_labels(backend.algebra, [{"a": 1}, {"a*": 1}], "e")
        with self.assertRaises(PreconditionError):
            manin_pair_morphism(backend, e)


class TestImages(unittest.TestCase):
    """Test cases for backward and forward images along a diffeomorphism."""

    def setUp(self):
        self.phi = ChartMap(M, N, (x, y + x**2))
        self.inverse = ChartMap(N, M, (u, v - u**2))
        self.R = graph_relation(self.phi)
        self.TM, self.TN = self.R.source, self.R.target

    def test_backward_image_of_a_poisson_graph(self):
        # {u, v} = u pulls back to {x, y} = x
        target = graph_connection(self.TN, {("u", "v"): u})
        nabla, psi = backward_image(self.R, target)
        self.assertTrue(nabla.flat_frame)
        self.assertTrue(same_structure(nabla, graph_connection(self.TM, {("x", "y"): x})))
        self.assertTrue(pullback_formula(self.R, nabla, target).passed)
        self.assertTrue(composition_identity(self.R, nabla, target).passed)
        self.assertTrue(check_fiber_composition(self.R, nabla, target).passed)
        self.assertTrue(morphism_check(psi, nabla, target).passed)

    def test_forward_image_of_a_poisson_graph(self):
        # {x, y} = y pushes forward to {u, v} = v - u^2
        source = graph_connection(self.TM, {("x", "y"): y})
        nabla, _ = forward_image(self.R, source, self.inverse)
        self.assertIs(nabla.backend, self.TN)
        self.assertTrue(same_structure(nabla, graph_connection(self.TN, {("u", "v"): v - u**2})))

    def test_forward_image_needs_an_invertible_support(self):
        source = graph_connection(self.TM, {("x", "y"): y})
        with self.assertRaises(PreconditionError) as ctx:
            forward_image(self.R, source, ChartMap(N, M, (u, v)))
        self.assertIn("invertible support", str(ctx.exception))
        # a right inverse of a projection is not enough
        Y = Chart("Y", ("w",))
        projection = graph_relation(ChartMap(M, Y, (x,)))
        with self.assertRaises(PreconditionError) as ctx:
            forward_image(projection, source, ChartMap(Y, M, (Y.symbols[0], 0)))
        self.assertIn("not a left inverse", str(ctx.exception))

    def test_non_clean_composition(self):
        S, Y = Chart("S", ("s",)), Chart("Y", ("w",))
        R = graph_relation(ChartMap(S, Y, (S.symbols[0] ** 2,)))
        cotangent = SubbundleFrame(R.target, [R.target.make(None, KForm.coordinate(Y, 0))], "T*Y")
        with self.assertRaises(NonCleanCompositionError) as ctx:
            backward_image(R, PseudoConnection.zero(cotangent), points=[(0,), (1,)])
        dims = ctx.exception.dimensions
        self.assertEqual(dims["generic"], {"intersection": 1, "image": 1})
        self.assertEqual(dims["0"], {"intersection": 2, "image": 1})


class TestTransversePairs(unittest.TestCase):
    """Test cases for transverse pairs and matched-pair decompositions."""

    def test_tangent_and_poisson_graph(self):
        T = ExactBackend(M)
        tangent = PseudoConnection.zero(SubbundleFrame(T, [T.frame(0), T.frame(1)], "TM"))
        graph = graph_connection(T, {("x", "y"): x})
        W = transverse_pair(tangent, graph)
        self.assertTrue(same_structure(W, graph_connection(T, {("x", "y"): -x})))
        report = check_transverse_pair(tangent, graph)
        self.assertTrue(report.passed, report.failed_identities())

    def test_not_complementary(self):
        T = ExactBackend(M)
        tangent = PseudoConnection.zero(SubbundleFrame(T, [T.frame(0), T.frame(1)], "TM"))
        with self.assertRaises(PreconditionError):
            transverse_pair(tangent, tangent)

    def test_transverse_target(self):
        T = ExactBackend(M)
        tangent = PseudoConnection.zero(SubbundleFrame(T, [T.frame(0), T.frame(1)], "TM"))
        target = transverse_target(tangent, graph_connection(T, {("x", "y"): x}))
        self.assertEqual(target.frame.k, 4)
        self.assertEqual(target.chart.coords, ("x", "y", "x_2", "y_2"))

    def test_manin_triple_decomposition(self):
        backend = manin_action()
        d = backend.algebra
        g = SubalgebraSpec.from_labels(d, [{"a": 1}, {"b": 1}], "g")
        dual = SubalgebraSpec.from_labels(d, [{"a*": 1}, {"b*": 1}], "g*")
        W = action_decomposition(backend, g, dual)
        self.assertTrue(W.flat_frame)
        # the graph of {p, q} = q
        self.assertTrue(same_structure(W, graph_connection(W.backend, {("p", "q"): q})))
        self.assertTrue(same_structure(W, action_decomposition_formula(backend, g, dual)))

    def test_generic_matched_pair(self):
        backend = manin_action()
        d = backend.algebra
        e = SubalgebraSpec.from_labels(d, [{"a": 1}, {"a*": 1}], "e")
        f = SubalgebraSpec.from_labels(d, [{"b": 1, "a*": -1}, {"b*": 1, "a": 1, "a*": 1}], "f")
        W = action_decomposition(backend, e, f)
        self.assertTrue(is_pseudo_dirac(W).passed)
        self.assertTrue(same_structure(W, action_decomposition_formula(backend, e, f)))

    def test_not_a_matched_pair(self):
        backend = manin_action()
        g = SubalgebraSpec.from_labels(backend.algebra, [{"a": 1}, {"b": 1}], "g")
        with self.assertRaises(PreconditionError):
            action_decomposition(backend, g, g)

    def test_dual_basis(self):
        d = manin_action().algebra
        g = SubalgebraSpec.from_labels(d, [{"a": 1}, {"b": 1}], "g")
        dual = SubalgebraSpec.from_labels(d, [{"a*": 1}, {"b*": 1}], "g*")
        duals = dual_basis(list(g.basis), dual)
        self.assertEqual(duals, [d.element({"a*": 1}), d.element({"b*": 1})])
        self.assertEqual(dual_basis([], dual), [])

    def test_bundle_of_lie_algebras(self):
        backend = manin_action()
        d = backend.algebra
        zero = SubalgebraSpec(d, [], "0")
        whole = SubalgebraSpec.from_labels(d, [{l: 1} for l in d.labels], "d")
        target = transverse_target(action_subalgebra(backend, zero), action_subalgebra(backend, whole))
        W, psi = backward_image(diagonal_morphism(backend), target)
        self.assertTrue(is_pseudo_dirac(W).passed)
        self.assertTrue(fiberwise_lie_morphism(psi, W, target).passed)
        self.assertTrue(check_lie_algebroid(induced_lie_algebroid(W)).passed)

    def test_q_poisson(self):
        backend = manin_action()
        d = backend.algebra
        g = SubalgebraSpec.from_labels(d, [{"a": 1}, {"b": 1}], "g")
        h = SubalgebraSpec.from_labels(d, [{"b": 1, "a*": -1}, {"b*": 1, "a": 1, "a*": 1}], "h")
        nabla, psi, R, target = q_poisson(backend, g, h)
        self.assertEqual(nabla.frame.k, 2)
        self.assertTrue(is_pseudo_dirac(nabla).passed)
        self.assertTrue(morphism_check(psi, nabla, target).passed)

    def test_q_poisson_needs_a_transverse_subalgebra(self):
        backend = manin_action()
        g = SubalgebraSpec.from_labels(backend.algebra, [{"a": 1}, {"b": 1}], "g")
        with self.assertRaises(PreconditionError):
            q_poisson(backend, g, g)


if __name__ == '__main__':
    unittest.main()
