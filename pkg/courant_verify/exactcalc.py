"""Exact scalars, vector fields and differential forms on polynomial charts.

Scalars are sympy expressions kept in the reduced ``p/q`` form produced by
``sympy.cancel``; rational numbers are ``sympy.Rational``. Vector fields and
forms carry the chart they live on, and every binary operation insists that
both operands share that chart.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import sympy

from .errors import ChartMismatchError, DimensionMismatchError, PoleError

logger = logging.getLogger(__name__)

Rational = sympy.Rational
Poly = sympy.Poly
Scalar = sympy.Expr

ZERO = sympy.S.Zero
ONE = sympy.S.One

CORE = "C"
TANGENT = "T"


def scalar(value) -> Scalar:
    """Return the canonical reduced quotient for ``value``."""
    if isinstance(value, float):
        raise TypeError("floating point values are not exact scalars")
    return sympy.cancel(sympy.sympify(value))


def is_zero(value) -> bool:
    return scalar(value) == 0


def scalars_equal(a, b) -> bool:
    return is_zero(sympy.sympify(a) - sympy.sympify(b))


def render(value) -> str:
    """Canonical string form used in reports (graded lexicographic order)."""
    return sympy.sstr(scalar(value), order="grlex")


def denominator(value) -> Scalar:
    return sympy.fraction(scalar(value))[1]


@dataclass(frozen=True)
class Chart:
    """A global coordinate chart R^n; ``n = 0`` is the point manifold."""

    name: str
    coords: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"chart {self.name!r} repeats a coordinate name: {self.coords}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def symbols(self) -> Tuple[sympy.Symbol, ...]:
        return tuple(sympy.Symbol(c) for c in self.coords)

    def index(self, coord: str) -> int:
        return self.coords.index(coord)

    def copy(self, suffix: str, name: Optional[str] = None) -> "Chart":
        """Same dimension, every coordinate renamed with ``suffix``."""
        return Chart(name or f"{self.name}{suffix}", tuple(f"{c}{suffix}" for c in self.coords))

    def require(self, other: "Chart"):
        if self != other:
            raise ChartMismatchError(f"chart {other.name!r} used where {self.name!r} is expected")

    def point(self, values: Sequence) -> Dict[sympy.Symbol, Rational]:
        if len(values) != self.dim:
            raise DimensionMismatchError(
                f"point has {len(values)} coordinates, chart {self.name!r} has {self.dim}"
            )
        return {s: Rational(v) for s, v in zip(self.symbols, values)}


@dataclass(frozen=True)
class TangentChart(Chart):
    """Coordinates (x_1..x_n, v_x1..v_xn) on the tangent bundle of ``base``."""

    base: Optional[Chart] = None

    @classmethod
    def over(cls, base: Chart) -> "TangentChart":
        coords = base.coords + tuple(f"v_{c}" for c in base.coords)
        return cls(f"T{base.name}", coords, base)

    @property
    def base_symbols(self) -> Tuple[sympy.Symbol, ...]:
        return self.symbols[: self.base.dim]

    @property
    def fiber_symbols(self) -> Tuple[sympy.Symbol, ...]:
        return self.symbols[self.base.dim :]


POINT = Chart("pt", ())


def evaluate(value, chart: Chart, point: Sequence) -> Rational:
    """Exact value of a scalar at a rational point of ``chart``."""
    numer, denom = sympy.fraction(scalar(value))
    subs = chart.point(point)
    den = denom.xreplace(subs)
    if den == 0:
        raise PoleError(f"denominator {render(denom)} vanishes at {tuple(point)}")
    result = numer.xreplace(subs) / den
    if result.free_symbols:
        raise ChartMismatchError(
            f"scalar {render(value)} has symbols outside chart {chart.name!r}"
        )
    return Rational(result)


def derivative(value, symbol) -> Scalar:
    return scalar(sympy.diff(value, symbol))


def differential(chart: Chart, value) -> "KForm":
    return exterior_d(KForm.function(chart, value))


def _sorted_indices(indices: Sequence[int]):
    """Sign of the sorting permutation and the sorted tuple; sign 0 on repeats."""
    if len(set(indices)) != len(indices):
        return 0, None
    items = list(indices)
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


@dataclass(frozen=True, eq=False)
class VectorField:
    chart: Chart
    coeffs: Tuple[Scalar, ...]

    def __post_init__(self):
        coeffs = tuple(scalar(c) for c in self.coeffs)
        if len(coeffs) != self.chart.dim:
            raise DimensionMismatchError(
                f"vector field has {len(coeffs)} coefficients on a chart of dim {self.chart.dim}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, (ZERO,) * chart.dim)

    @classmethod
    def coordinate(cls, chart: Chart, i: int) -> "VectorField":
        return cls(chart, tuple(ONE if j == i else ZERO for j in range(chart.dim)))

    def __add__(self, other: "VectorField") -> "VectorField":
        self.chart.require(other.chart)
        return VectorField(self.chart, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-other)

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, tuple(-a for a in self.coeffs))

    def scale(self, f) -> "VectorField":
        return VectorField(self.chart, tuple(f * a for a in self.coeffs))

    def __call__(self, f) -> Scalar:
        """Directional derivative X(f)."""
        return scalar(sum((a * sympy.diff(f, s) for a, s in zip(self.coeffs, self.chart.symbols)), ZERO))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorField) or self.chart != other.chart:
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def substitute(self, mapping: Mapping, chart: Chart) -> "VectorField":
        """Rewrite the coefficients with ``mapping`` and re-home them on ``chart``."""
        if chart.dim != self.chart.dim:
            raise DimensionMismatchError("substitution must preserve the chart dimension")
        return VectorField(chart, tuple(c.xreplace(dict(mapping)) for c in self.coeffs))

    def render(self) -> str:
        parts = [f"({render(c)})*d/d{name}" for c, name in zip(self.coeffs, self.chart.coords) if c != 0]
        return " + ".join(parts) or "0"

    def __repr__(self):
        return f"VectorField[{self.chart.name}]({self.render()})"


def vf_bracket(X: VectorField, Y: VectorField) -> VectorField:
    X.chart.require(Y.chart)
    return VectorField(X.chart, tuple(X(b) - Y(a) for a, b in zip(X.coeffs, Y.coeffs)))


@dataclass(frozen=True, eq=False)
class KForm:
    """A k-form stored as {strictly increasing index tuple: coefficient}."""

    chart: Chart
    degree: int
    terms: Mapping[Tuple[int, ...], Scalar]

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("form degree must be non-negative")
        canonical = {}
        for indices, coeff in self.terms.items():
            indices = tuple(indices)
            if len(indices) != self.degree:
                raise DimensionMismatchError(
                    f"index tuple {indices} does not match degree {self.degree}"
                )
            if any(i < 0 or i >= self.chart.dim for i in indices):
                raise DimensionMismatchError(f"index tuple {indices} outside chart {self.chart.name!r}")
            sign, key = _sorted_indices(indices)
            if sign == 0:
                continue
            canonical[key] = canonical.get(key, ZERO) + sign * coeff
        cleaned = {}
        for key in sorted(canonical):
            value = scalar(canonical[key])
            if value != 0:
                cleaned[key] = value
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "KForm":
        return cls(chart, degree, {})

    @classmethod
    def function(cls, chart: Chart, f) -> "KForm":
        return cls(chart, 0, {(): f})

    @classmethod
    def coordinate(cls, chart: Chart, i: int) -> "KForm":
        """The coordinate differential dx_i."""
        return cls(chart, 1, {(i,): ONE})

    @classmethod
    def one_form(cls, chart: Chart, coeffs: Sequence) -> "KForm":
        if len(coeffs) != chart.dim:
            raise DimensionMismatchError("one-form needs one coefficient per coordinate")
        return cls(chart, 1, {(i,): c for i, c in enumerate(coeffs)})

    def coefficient(self, indices: Sequence[int]) -> Scalar:
        sign, key = _sorted_indices(tuple(indices))
        if sign == 0:
            return ZERO
        return sign * self.terms.get(key, ZERO)

    @property
    def components(self) -> Tuple[Scalar, ...]:
        """Coefficients of a one-form, one per coordinate."""
        if self.degree != 1:
            raise ValueError("components are defined for one-forms only")
        return tuple(self.terms.get((i,), ZERO) for i in range(self.chart.dim))

    def as_scalar(self) -> Scalar:
        if self.degree != 0:
            raise ValueError("only 0-forms are scalars")
        return self.terms.get((), ZERO)

    def _require(self, other: "KForm"):
        self.chart.require(other.chart)
        if self.degree != other.degree:
            raise DimensionMismatchError(f"cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other: "KForm") -> "KForm":
        self._require(other)
        terms = dict(self.terms)
        for key, value in other.terms.items():
            terms[key] = terms.get(key, ZERO) + value
        return KForm(self.chart, self.degree, terms)

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-other)

    def __neg__(self) -> "KForm":
        return KForm(self.chart, self.degree, {k: -v for k, v in self.terms.items()})

    def scale(self, f) -> "KForm":
        return KForm(self.chart, self.degree, {k: f * v for k, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, KForm) or self.chart != other.chart:
            return NotImplemented
        return self.degree == other.degree and (self - other).is_zero()

    __hash__ = None

    def __call__(self, *fields: VectorField) -> Scalar:
        """ω(X_1, ..., X_k)."""
        if len(fields) != self.degree:
            raise DimensionMismatchError(f"a {self.degree}-form takes {self.degree} vector fields")
        result = self
        for X in fields:
            result = interior(X, result)
        return result.as_scalar()

    def substitute(self, mapping: Mapping, chart: Chart) -> "KForm":
        if chart.dim != self.chart.dim:
            raise DimensionMismatchError("substitution must preserve the chart dimension")
        mapping = dict(mapping)
        return KForm(chart, self.degree, {k: v.xreplace(mapping) for k, v in self.terms.items()})

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for key, value in self.terms.items():
            basis = "^".join(f"d{self.chart.coords[i]}" for i in key)
            parts.append(f"({render(value)})*{basis}" if basis else f"({render(value)})")
        return " + ".join(parts)

    def __repr__(self):
        return f"KForm[{self.chart.name},{self.degree}]({self.render()})"


def wedge(alpha: KForm, beta: KForm) -> KForm:
    alpha.chart.require(beta.chart)
    terms: Dict[Tuple[int, ...], Scalar] = {}
    for i_idx, a in alpha.terms.items():
        for j_idx, b in beta.terms.items():
            key = i_idx + j_idx
            if len(set(key)) == len(key):
                terms[key] = terms.get(key, ZERO) + a * b
    return KForm(alpha.chart, alpha.degree + beta.degree, terms)


def exterior_d(omega: KForm) -> KForm:
    chart = omega.chart
    terms: Dict[Tuple[int, ...], Scalar] = {}
    for indices, coeff in omega.terms.items():
        for j, sym in enumerate(chart.symbols):
            if j in indices:
                continue
            partial = sympy.diff(coeff, sym)
            if partial != 0:
                key = (j,) + indices
                terms[key] = terms.get(key, ZERO) + partial
    return KForm(chart, omega.degree + 1, terms)


def interior(X: VectorField, omega: KForm) -> KForm:
    X.chart.require(omega.chart)
    if omega.degree == 0:
        return KForm.zero(omega.chart, 0)
    terms: Dict[Tuple[int, ...], Scalar] = {}
    for indices, coeff in omega.terms.items():
        for slot, i in enumerate(indices):
            if X.coeffs[i] == 0:
                continue
            key = indices[:slot] + indices[slot + 1 :]
            terms[key] = terms.get(key, ZERO) + (-1) ** slot * X.coeffs[i] * coeff
    return KForm(omega.chart, omega.degree - 1, terms)


def lie_derivative(X: VectorField, omega: KForm) -> KForm:
    """Slot-by-slot coordinate formula, independent of the Cartan identity."""
    X.chart.require(omega.chart)
    chart = omega.chart
    result = KForm(chart, omega.degree, {k: X(v) for k, v in omega.terms.items()})
    for indices, coeff in omega.terms.items():
        for slot, i in enumerate(indices):
            dXi = differential(chart, X.coeffs[i])
            before = KForm(chart, slot, {indices[:slot]: ONE})
            after = KForm(chart, len(indices) - slot - 1, {indices[slot + 1 :]: ONE})
            result = result + wedge(wedge(before, dXi), after).scale(coeff)
    return result


class ChartMap:
    """A polynomial (or rational) map between charts, given by its components."""

    def __init__(self, source: Chart, target: Chart, components: Sequence):
        if len(components) != target.dim:
            raise DimensionMismatchError(
                f"map into {target.name!r} needs {target.dim} components, got {len(components)}"
            )
        self.source = source
        self.target = target
        self.components = tuple(scalar(c) for c in components)
        allowed = set(source.symbols)
        for c in self.components:
            if not c.free_symbols <= allowed:
                raise ChartMismatchError(f"component {render(c)} is not a function on {source.name!r}")

    @classmethod
    def identity(cls, chart: Chart) -> "ChartMap":
        return cls(chart, chart, chart.symbols)

    @property
    def substitution(self) -> Dict[sympy.Symbol, Scalar]:
        return dict(zip(self.target.symbols, self.components))

    def pullback_scalar(self, f) -> Scalar:
        return scalar(sympy.sympify(f).xreplace(self.substitution))

    def pullback(self, omega: KForm) -> KForm:
        self.target.require(omega.chart)
        dphi = [differential(self.source, c) for c in self.components]
        result = KForm.zero(self.source, omega.degree)
        for indices, coeff in omega.terms.items():
            term = KForm.function(self.source, self.pullback_scalar(coeff))
            for i in indices:
                term = wedge(term, dphi[i])
            result = result + term
        return result

    def pushforward(self, X: VectorField) -> Tuple[Scalar, ...]:
        """dφ(X) as component functions on the source chart."""
        self.source.require(X.chart)
        return tuple(X(c) for c in self.components)

    def jacobian(self) -> sympy.Matrix:
        return sympy.Matrix(
            [[sympy.diff(c, s) for s in self.source.symbols] for c in self.components]
        )

    def __repr__(self):
        comps = ", ".join(render(c) for c in self.components)
        return f"ChartMap({self.source.name} -> {self.target.name}: {comps})"


def relabel(source: Chart, target: Chart) -> Dict[sympy.Symbol, sympy.Symbol]:
    """Positional coordinate renaming between charts of equal dimension."""
    if source.dim != target.dim:
        raise DimensionMismatchError("relabelling needs charts of equal dimension")
    return dict(zip(source.symbols, target.symbols))


def tangent_chart(chart: Chart) -> TangentChart:
    return TangentChart.over(chart)


def _lift_to_tangent(omega: KForm, tc: TangentChart) -> KForm:
    # base coordinates are the leading coordinates of the tangent chart
    return KForm(tc, omega.degree, dict(omega.terms))


def lift_function(f, base: Chart, mode: str) -> Scalar:
    """f_C is the base pullback; f_T = df read as a fiberwise-linear function."""
    if mode == CORE:
        return scalar(f)
    if mode == TANGENT:
        return scalar(
            sum((sympy.diff(f, x) * v for x, v in zip(base.symbols, TangentChart.over(base).fiber_symbols)), ZERO)
        )
    raise ValueError(f"unknown lift mode {mode!r}")


def lift_vf(X: VectorField, mode: str) -> VectorField:
    """X_C is the vertical translation field, X_T the complete lift."""
    tc = TangentChart.over(X.chart)
    n = X.chart.dim
    if mode == CORE:
        return VectorField(tc, (ZERO,) * n + X.coeffs)
    if mode == TANGENT:
        fiber = tuple(lift_function(a, X.chart, TANGENT) for a in X.coeffs)
        return VectorField(tc, X.coeffs + fiber)
    raise ValueError(f"unknown lift mode {mode!r}")


def _tau(omega: KForm, tc: TangentChart) -> KForm:
    """(k-1)-form on TM whose value at (x, v) is ι_v ω."""
    if omega.degree == 0:
        return KForm.zero(tc, 0)
    lifted = _lift_to_tangent(omega, tc)
    result = KForm.zero(tc, omega.degree - 1)
    for i, v in enumerate(tc.fiber_symbols):
        result = result + interior(VectorField.coordinate(tc, i), lifted).scale(v)
    return result


def tangent_lift_form(alpha: KForm) -> KForm:
    """α_T = d(τα) + τ(dα)."""
    tc = TangentChart.over(alpha.chart)
    return exterior_d(_tau(alpha, tc)) + _tau(exterior_d(alpha), tc)


def lift_form(alpha: KForm, mode: str) -> KForm:
    if mode == CORE:
        return _lift_to_tangent(alpha, TangentChart.over(alpha.chart))
    if mode == TANGENT:
        return tangent_lift_form(alpha)
    raise ValueError(f"unknown lift mode {mode!r}")
