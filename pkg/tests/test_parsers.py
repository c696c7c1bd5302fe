"""Tests for parsing scenario values."""

import unittest

import sympy

from courant_verify.errors import ScenarioError
from courant_verify.exactcalc import Chart, KForm, Rational, VectorField, scalar
from courant_verify.parsers import (
    parse_form,
    parse_matrix,
    parse_point,
    parse_rational,
    parse_scalar,
    parse_vector_field,
    render_rational,
)

R3 = Chart("R3", ("x", "y", "z"))
x, y, z = R3.symbols


class TestRationals(unittest.TestCase):
    """Test cases for exact rational parsing."""

    def test_parse_rational(self):
        self.assertEqual(parse_rational("3/4"), Rational(3, 4))
        self.assertEqual(parse_rational(" -2 "), Rational(-2))
        self.assertEqual(parse_rational(5), Rational(5))

    def test_reject_inexact(self):
        for value in (1.5, "1.5", True, None):
            with self.assertRaises(ScenarioError):
                parse_rational(value)

    def test_render_rational(self):
        self.assertEqual(render_rational(Rational(3, 4)), "3/4")
        self.assertEqual(render_rational(Rational(-6, 3)), "-2")

    def test_matrix(self):
        self.assertEqual(parse_matrix([["1", "1/2"], [0, -1]]), sympy.Matrix([[1, Rational(1, 2)], [0, -1]]))
        with self.assertRaises(ScenarioError) as ctx:
            parse_matrix([[1, 0], [0]], ("metric",))
        self.assertEqual(ctx.exception.path, ("metric", 1))


class TestScalars(unittest.TestCase):
    """Test cases for scalar expressions and monomial lists."""

    def test_expression(self):
        self.assertEqual(parse_scalar("x**2 + y/2", R3), scalar(x**2 + y / 2))
        self.assertEqual(parse_scalar("x/(y + 1)", R3), scalar(x / (y + 1)))
        self.assertEqual(parse_scalar(3, R3), 3)

    def test_monomials(self):
        value = parse_scalar([{"coeff": "1/2", "exponents": [1, 0, 2]}, {"coeff": -1, "exponents": [0, 0, 0]}], R3)
        self.assertEqual(value, scalar(x * z**2 / 2 - 1))

    def test_monomial_needs_every_exponent(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scalar([{"coeff": 1, "exponents": [1, 0]}], R3, ("value",))
        self.assertEqual(ctx.exception.path, ("value", 0, "exponents"))

    def test_decimal_in_expression(self):
        with self.assertRaises(ScenarioError):
            parse_scalar("0.5*x", R3)

    def test_unknown_symbol(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scalar("x + w", R3, ("maps", "phi", "components", 0))
        self.assertEqual(ctx.exception.path, ("maps", "phi", "components", 0))
        self.assertTrue(str(ctx.exception).startswith("maps/phi/components/0: "))

    def test_not_rational_function(self):
        with self.assertRaises(ScenarioError):
            parse_scalar("sin(x)", R3)

    def test_syntax_error(self):
        with self.assertRaises(ScenarioError):
            parse_scalar("x +* y", R3)


class TestGeometricValues(unittest.TestCase):
    """Test cases for vector fields, forms and points."""

    def test_vector_field(self):
        self.assertEqual(parse_vector_field(["1", 0, "x"], R3), VectorField(R3, (1, 0, x)))
        self.assertEqual(parse_vector_field({"y": "x"}, R3), VectorField(R3, (0, x, 0)))

    def test_vector_field_errors(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_vector_field({"w": 1}, R3, ("rho", "a"))
        self.assertEqual(ctx.exception.path, ("rho", "a", "w"))
        with self.assertRaises(ScenarioError):
            parse_vector_field([1, 0], R3)

    def test_form_with_names_and_positions(self):
        form = parse_form([{"indices": ["x", 1, "z"], "scalar": "x"}], R3, 3)
        self.assertEqual(form, KForm(R3, 3, {(0, 1, 2): x}))

    def test_unsorted_indices_take_the_sign(self):
        form = parse_form([{"indices": ["y", "x"], "scalar": 1}, {"indices": ["x", "z"], "scalar": "y"}], R3, 2)
        self.assertEqual(form, KForm(R3, 2, {(0, 1): -1, (0, 2): y}))

    def test_form_errors(self):
        with self.assertRaises(ScenarioError):
            parse_form([{"indices": ["x"], "scalar": 1}], R3, 2)
        with self.assertRaises(ScenarioError):
            parse_form([{"indices": ["x", 3], "scalar": 1}], R3, 2)
        with self.assertRaises(ScenarioError):
            parse_form([{"indices": ["x", "w"], "scalar": 1}], R3, 2)

    def test_point(self):
        self.assertEqual(parse_point([1, "1/2", "-3"], R3), (Rational(1), Rational(1, 2), Rational(-3)))
        with self.assertRaises(ScenarioError):
            parse_point([1, 2], R3)


if __name__ == '__main__':
    unittest.main()
