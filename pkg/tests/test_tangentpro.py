"""Tests for the tangent prolongation and VB-Dirac structures."""

import unittest

from courant_verify.courantcore import (
    ActionBackend,
    Bivector,
    ExactBackend,
    PointBackend,
    ProductBackend,
    conjugate,
    poisson_graph_frame,
)
from courant_verify.errors import PreconditionError
from courant_verify.exactcalc import CORE, TANGENT, Chart, KForm, VectorField
from courant_verify.pseudodirac import PseudoConnection, SubbundleFrame, metric_connection
from courant_verify.quadlie import sl2
from courant_verify.tangentpro import (
    REVERSE,
    TangentProlongation,
    build_vb_dirac,
    check_correspondence,
    check_involutive,
    check_lagrangian,
    check_lift_independence,
    check_linear_bracket,
    extract_connection,
    same_matrix,
    verify_lift_calculus,
)

M = Chart("M", ("x", "y"))
x, y = M.symbols
R3 = Chart("R3", ("x", "y", "z"))
LINE = Chart("R", ("t",))
(t,) = LINE.symbols


def graph_connection(backend, brackets):
    pi = Bivector.from_brackets(backend.chart, brackets)
    frame = SubbundleFrame(backend, poisson_graph_frame(backend, pi), "gr(pi)")
    return PseudoConnection.zero(frame)


class TestProlongation(unittest.TestCase):
    """Test cases for tangent and core lifts."""

    def test_exact_lifts(self):
        T = ExactBackend(M)
        TE = TangentProlongation(T)
        self.assertEqual(TE.tangent.rank, 8)
        v_x, _ = TE.fiber_symbols
        section = T.make(VectorField(M, (0, x)))
        lifted = TE.lift(section, TANGENT)
        # x d/dy lifts to x d/dy + v_x d/dv_y
        self.assertEqual(lifted.coeffs[1], x)
        self.assertEqual(lifted.coeffs[3], v_x)
        self.assertEqual(sum(1 for c in lifted.coeffs if c != 0), 2)
        core = TE.lift(section, CORE)
        self.assertEqual([c for c in core.coeffs if c != 0], [x])

    def test_side_projection(self):
        T = ExactBackend(M)
        TE = TangentProlongation(T)
        sigma = T.make(VectorField(M, (y, 1)), KForm.one_form(M, (x, 0)))
        self.assertEqual(TE.side_projection(TE.lift(sigma, TANGENT)), sigma)

    def test_lift_calculus_exact(self):
        report = verify_lift_calculus(TangentProlongation(ExactBackend(M)))
        self.assertTrue(report.passed, report.failed_identities())

    def test_lift_calculus_point(self):
        TE = TangentProlongation(PointBackend(sl2()))
        self.assertEqual(TE.tangent.algebra.dim, 6)
        self.assertTrue(verify_lift_calculus(TE).passed)

    def test_lift_calculus_action(self):
        rho = [VectorField(LINE, (-1,)), VectorField(LINE, (-2 * t,)), VectorField(LINE, (t**2,))]
        TE = TangentProlongation(ActionBackend(LINE, sl2(), rho))
        report = verify_lift_calculus(TE)
        self.assertTrue(report.passed, report.failed_identities())

    def test_conjugate(self):
        TE = TangentProlongation(conjugate(ExactBackend(M)))
        self.assertEqual(TE.tangent.kind, "conjugate")

    def test_product_has_no_prolongation(self):
        other = ExactBackend(Chart("N", ("u",)))
        with self.assertRaises(PreconditionError):
            TangentProlongation(ProductBackend(ExactBackend(M), other))

    def test_linear_bracket(self):
        T = ExactBackend(M)
        TE = TangentProlongation(T)
        sigma = T.make(VectorField(M, (y, 0)))
        tau = T.make(VectorField(M, (0, 1)), KForm.one_form(M, (x, 0)))
        sigma_prime = [T.make(None, KForm.coordinate(M, 1)), T.make(VectorField(M, (x, 0)))]
        tau_prime = [T.zero(), T.make(None, KForm.coordinate(M, 0))]
        report = check_linear_bracket(TE, sigma, sigma_prime, tau, tau_prime)
        self.assertTrue(report.passed, report.failures)

    def test_core_injection_needs_one_section_per_coordinate(self):
        T = ExactBackend(M)
        with self.assertRaises(PreconditionError):
            TangentProlongation(T).core_injection([T.zero()])


class TestVBDirac(unittest.TestCase):
    """Test cases for the Lagrangian subbundle attached to a pseudo-connection."""

    def setUp(self):
        self.T = ExactBackend(M)
        self.poisson = graph_connection(self.T, {("x", "y"): x})

    def test_lagrangian(self):
        L = build_vb_dirac(self.poisson)
        self.assertEqual(L.frame.k, 4)
        self.assertTrue(check_lagrangian(L).passed)

    def test_poisson_graph_gives_involutive_L(self):
        self.assertTrue(check_involutive(build_vb_dirac(self.poisson)).passed)

    def test_complement_choice(self):
        self.assertTrue(check_lift_independence(self.poisson).passed)
        self.assertEqual(build_vb_dirac(self.poisson, REVERSE).order, REVERSE)

    def test_round_trip(self):
        L = build_vb_dirac(self.poisson)
        self.assertTrue(same_matrix(extract_connection(L), self.poisson))

    def test_correspondence_for_poisson(self):
        report = check_correspondence(self.poisson)
        self.assertTrue(report.passed, report.failed_identities())
        self.assertTrue(report.details["involutive"])
        self.assertTrue(report.details["pseudo_dirac"])

    def test_correspondence_for_non_poisson(self):
        T = ExactBackend(R3)
        xs, ys, _ = R3.symbols
        nabla = graph_connection(T, {("x", "y"): ys, ("y", "z"): xs})
        report = check_correspondence(nabla)
        self.assertTrue(report.passed, report.failed_identities())
        self.assertFalse(report.details["involutive"])
        self.assertFalse(report.details["pseudo_dirac"])

    def test_metric_connection_round_trip(self):
        g = [[1, 0], [0, 1 + x**2]]
        omega = [[0, y], [-y, 0]]
        nabla = metric_connection(self.T, g, omega)
        extracted = extract_connection(build_vb_dirac(nabla))
        self.assertTrue(same_matrix(extracted, nabla))

    def test_not_metric_compatible(self):
        dx = KForm.coordinate(M, 0)
        zero = KForm.zero(M, 1)
        broken = PseudoConnection(self.poisson.frame, [[dx, zero], [zero, zero]])
        with self.assertRaises(PreconditionError):
            build_vb_dirac(broken)

    def test_to_dict(self):
        described = build_vb_dirac(self.poisson).to_dict()
        self.assertEqual(len(described["linear"]), 2)
        self.assertEqual(len(described["core"]), 2)
        self.assertEqual(len(described["complement"]), 2)
        self.assertTrue(all(isinstance(s, str) for s in described["linear"]))


if __name__ == '__main__':
    unittest.main()
