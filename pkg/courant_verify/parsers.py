"""Functions for parsing scenario values into exact objects."""

import logging
from typing import Dict, Sequence

import sympy
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .errors import ScenarioError
from .exactcalc import Chart, KForm, Rational, Scalar, VectorField, scalar

logger = logging.getLogger(__name__)


def parse_rational(value, path=()) -> Rational:
    """Parse "p/q", "p" or an integer into an exact rational."""
    if isinstance(value, bool) or isinstance(value, float):
        raise ScenarioError(f"{value!r} is not an exact rational", path)
    if isinstance(value, int):
        return Rational(value)
    if not isinstance(value, str):
        raise ScenarioError(f"{value!r} is not a rational", path)
    try:
        parsed = Rational(value.strip())
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"cannot parse rational {value!r}: {e}", path)
    if "." in value:
        raise ScenarioError(f"decimal {value!r} is not accepted, write p/q", path)
    return parsed


def render_rational(value) -> str:
    value = Rational(value)
    return str(value.p) if value.q == 1 else f"{value.p}/{value.q}"


def _parse_expression(text: str, chart: Chart, path) -> Scalar:
    local = {name: symbol for name, symbol in zip(chart.coords, chart.symbols)}
    try:
        expr = parse_expr(text, local_dict=local, transformations=standard_transformations, evaluate=True)
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        raise ScenarioError(f"cannot parse {text!r}: {e}", path)
    if expr.atoms(sympy.Float):
        raise ScenarioError(f"{text!r} contains a decimal; write p/q", path)
    unknown = expr.free_symbols - set(chart.symbols)
    if unknown:
        names = sorted(str(s) for s in unknown)
        raise ScenarioError(f"{text!r} uses {names}, not coordinates of chart {chart.name!r}", path)
    if not expr.is_rational_function(*chart.symbols):
        raise ScenarioError(f"{text!r} is not a rational function of {chart.coords}", path)
    return scalar(expr)


def _parse_terms(terms: Sequence[Dict], chart: Chart, path) -> Scalar:
    total = sympy.S.Zero
    for i, term in enumerate(terms):
        exponents = term.get("exponents", [])
        if len(exponents) != chart.dim:
            raise ScenarioError(
                f"monomial needs {chart.dim} exponents, got {len(exponents)}", tuple(path) + (i, "exponents")
            )
        monomial = parse_rational(term["coeff"], tuple(path) + (i, "coeff"))
        for symbol, e in zip(chart.symbols, exponents):
            monomial *= symbol**e
        total += monomial
    return scalar(total)


def parse_scalar(value, chart: Chart, path=()) -> Scalar:
    """An expression string, an integer, or a list of {coeff, exponents} monomials."""
    if isinstance(value, bool) or isinstance(value, float):
        raise ScenarioError(f"{value!r} is not an exact scalar", path)
    if isinstance(value, int):
        return scalar(value)
    if isinstance(value, str):
        return _parse_expression(value, chart, path)
    if isinstance(value, list):
        return _parse_terms(value, chart, path)
    raise ScenarioError(f"{value!r} is not a scalar", path)


def parse_vector_field(value, chart: Chart, path=()) -> VectorField:
    """Either one scalar per coordinate, or a mapping from coordinate name to scalar."""
    if isinstance(value, dict):
        coeffs = [sympy.S.Zero] * chart.dim
        for name, c in value.items():
            if name not in chart.coords:
                raise ScenarioError(f"{name!r} is not a coordinate of {chart.name!r}", tuple(path) + (name,))
            coeffs[chart.index(name)] = parse_scalar(c, chart, tuple(path) + (name,))
        return VectorField(chart, tuple(coeffs))
    if len(value) != chart.dim:
        raise ScenarioError(f"vector field needs {chart.dim} coefficients, got {len(value)}", path)
    return VectorField(chart, tuple(parse_scalar(c, chart, tuple(path) + (i,)) for i, c in enumerate(value)))


def _index(value, chart: Chart, path) -> int:
    if isinstance(value, int) and not isinstance(value, bool):
        if 0 <= value < chart.dim:
            return value
    elif value in chart.coords:
        return chart.index(value)
    raise ScenarioError(f"{value!r} is not a coordinate of {chart.name!r}", path)


def parse_form(value, chart: Chart, degree: int, path=()) -> KForm:
    """A list of {indices, scalar}; indices are coordinate names or positions."""
    result = KForm.zero(chart, degree)
    for i, term in enumerate(value):
        here = tuple(path) + (i,)
        indices = tuple(_index(v, chart, here + ("indices", k)) for k, v in enumerate(term["indices"]))
        if len(indices) != degree:
            raise ScenarioError(f"a {degree}-form term needs {degree} indices, got {len(indices)}", here)
        # unsorted indices pick up the permutation sign
        result = result + KForm(chart, degree, {indices: parse_scalar(term["scalar"], chart, here + ("scalar",))})
    return result


def parse_matrix(rows, path=()) -> sympy.Matrix:
    if not rows:
        return sympy.zeros(0, 0)
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ScenarioError("matrix rows have different lengths", tuple(path) + (i,))
    return sympy.Matrix([[parse_rational(c, tuple(path) + (i, j)) for j, c in enumerate(row)] for i, row in enumerate(rows)])


def parse_scalar_matrix(rows, chart: Chart, path=()) -> sympy.Matrix:
    """A square matrix of scalars on ``chart``."""
    return sympy.Matrix(
        [[parse_scalar(c, chart, tuple(path) + (i, j)) for j, c in enumerate(row)] for i, row in enumerate(rows)]
    )


def parse_point(value, chart: Chart, path=()) -> tuple:
    if len(value) != chart.dim:
        raise ScenarioError(f"point needs {chart.dim} coordinates, got {len(value)}", path)
    return tuple(parse_rational(v, tuple(path) + (i,)) for i, v in enumerate(value))
