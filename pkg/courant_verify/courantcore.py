"""Courant algebroid backends: anchor, coanchor, pairing and the Dorfman bracket.

Every backend is described by a global frame e_1..e_N with a constant Gram
matrix, the anchors a(e_i) and the brackets ⟦e_i, e_j⟧. Sections are
coefficient tuples over that frame. The Dorfman bracket of arbitrary
sections follows from the frame data by the Leibniz rules; the exact and
action backends override it with their closed formulas so the two can be
compared.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import sympy

from .errors import BackendMismatchError, ChartMismatchError, DimensionMismatchError, PreconditionError
from .exactcalc import (
    ONE,
    POINT,
    ZERO,
    Chart,
    KForm,
    Scalar,
    VectorField,
    differential,
    evaluate,
    exterior_d,
    interior,
    lie_derivative,
    relabel,
    render,
    scalar,
    vf_bracket,
)
from .linalgrel import BilForm, LinSpace, Subspace, nullspace, orth_complement
from .quadlie import QuadLieAlgebra
from .report import VerificationReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Section:
    """A section of a backend, stored as coefficients over its frame."""

    backend: "CourantBackend"
    coeffs: Tuple[Scalar, ...]

    def __post_init__(self):
        coeffs = tuple(scalar(c) for c in self.coeffs)
        if len(coeffs) != self.backend.rank:
            raise DimensionMismatchError(
                f"section has {len(coeffs)} coefficients, backend rank is {self.backend.rank}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    def _require(self, other: "Section"):
        self.backend.require(other.backend)

    def __add__(self, other: "Section") -> "Section":
        self._require(other)
        return Section(self.backend, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "Section") -> "Section":
        return self + (-other)

    def __neg__(self) -> "Section":
        return Section(self.backend, tuple(-a for a in self.coeffs))

    def scale(self, f) -> "Section":
        return Section(self.backend, tuple(f * a for a in self.coeffs))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Section):
            return NotImplemented
        try:
            return (self - other).is_zero()
        except BackendMismatchError:
            return False

    __hash__ = None

    def at(self, point: Sequence) -> Tuple:
        return tuple(evaluate(c, self.backend.chart, point) for c in self.coeffs)

    def render(self) -> str:
        parts = [f"({render(c)})*[{l}]" for c, l in zip(self.coeffs, self.backend.labels) if c != 0]
        return " + ".join(parts) or "0"

    def __repr__(self):
        return f"Section({self.render()})"


class CourantBackend:
    """Frame description of a Courant algebroid over a chart."""

    kind = "abstract"

    def __init__(self, chart: Chart, labels: Sequence[str], metric):
        self.chart = chart
        self.labels = tuple(labels)
        self.metric = sympy.Matrix(metric).applyfunc(scalar)
        if self.metric.shape != (self.rank, self.rank):
            raise DimensionMismatchError(f"metric must be {self.rank}x{self.rank}")
        self._inverse = None
        self._frame_brackets = {}

    @property
    def rank(self) -> int:
        return len(self.labels)

    @property
    def key(self) -> tuple:
        return (self.kind, self.chart, self.labels)

    def require(self, other: "CourantBackend"):
        if self is not other and self.key != other.key:
            raise BackendMismatchError(f"sections of {other!r} used with {self!r}")

    # frame data

    def frame_anchor(self, i: int) -> VectorField:
        raise NotImplementedError

    def coefficients(self) -> List[Scalar]:
        """Frame anchor coefficients; sample points must avoid their poles."""
        return [c for i in range(self.rank) for c in self.frame_anchor(i).coeffs]

    def compute_frame_bracket(self, i: int, j: int) -> Tuple[Scalar, ...]:
        raise NotImplementedError

    def frame_bracket(self, i: int, j: int) -> Section:
        if (i, j) not in self._frame_brackets:
            self._frame_brackets[(i, j)] = Section(self, self.compute_frame_bracket(i, j))
        return self._frame_brackets[(i, j)]

    def relocated(self, chart: Chart) -> "CourantBackend":
        """The same algebroid expressed on a chart with renamed coordinates."""
        raise NotImplementedError

    # sections

    def section(self, coeffs: Sequence) -> Section:
        return Section(self, tuple(coeffs))

    def zero(self) -> Section:
        return Section(self, (ZERO,) * self.rank)

    def frame(self, i: int) -> Section:
        return Section(self, tuple(ONE if k == i else ZERO for k in range(self.rank)))

    def frame_sections(self) -> List[Section]:
        return [self.frame(i) for i in range(self.rank)]

    def metric_form(self) -> BilForm:
        return BilForm(self.metric)

    def raise_index(self, covector: Sequence) -> Tuple[Scalar, ...]:
        """Coefficients of the section s with ⟨s, e_m⟩ = covector_m."""
        if self._inverse is None:
            self._inverse = self.metric.inv()
        return tuple(scalar(v) for v in self._inverse * sympy.Matrix(list(covector)))

    # structure maps

    def pairing(self, sigma: Section, tau: Section) -> Scalar:
        self.require(sigma.backend)
        self.require(tau.backend)
        G = self.metric
        total = ZERO
        for i, a in enumerate(sigma.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(tau.coeffs):
                if b != 0 and G[i, j] != 0:
                    total += a * G[i, j] * b
        return scalar(total)

    def anchor(self, sigma: Section) -> VectorField:
        self.require(sigma.backend)
        result = VectorField.zero(self.chart)
        for i, f in enumerate(sigma.coeffs):
            if f != 0:
                result = result + self.frame_anchor(i).scale(f)
        return result

    def coanchor(self, alpha: KForm) -> Section:
        self.chart.require(alpha.chart)
        if alpha.degree != 1:
            raise ValueError("the coanchor takes a one-form")
        values = [alpha(self.frame_anchor(m)) for m in range(self.rank)]
        return Section(self, self.raise_index(values))

    def dorfman(self, sigma: Section, tau: Section) -> Section:
        return self.leibniz_dorfman(sigma, tau)

    def leibniz_dorfman(self, sigma: Section, tau: Section) -> Section:
        """⟦Σ f^i e_i, Σ g^j e_j⟧ expanded through the frame brackets."""
        self.require(sigma.backend)
        self.require(tau.backend)
        n = self.rank
        out = [ZERO] * n
        G = self.metric
        df_cache = {}
        for i, f in enumerate(sigma.coeffs):
            if f == 0:
                continue
            a_i = self.frame_anchor(i)
            for j, g in enumerate(tau.coeffs):
                if g == 0:
                    continue
                fb = self.frame_bracket(i, j)
                for k, c in enumerate(fb.coeffs):
                    if c != 0:
                        out[k] += f * g * c
                out[j] += f * a_i(g)
                out[i] -= g * self.frame_anchor(j)(f)
                if G[i, j] != 0:
                    if i not in df_cache:
                        df_cache[i] = self.coanchor(differential(self.chart, f))
                    for k, c in enumerate(df_cache[i].coeffs):
                        if c != 0:
                            out[k] += g * G[i, j] * c
        return Section(self, tuple(out))

    def describe(self) -> dict:
        return {"kind": self.kind, "chart": self.chart.name, "rank": self.rank, "labels": list(self.labels)}

    def __repr__(self):
        return f"{type(self).__name__}({self.chart.name}, rank={self.rank})"


class ExactBackend(CourantBackend):
    """The exact Courant algebroid TM ⊕ T*M twisted by a closed 3-form γ."""

    kind = "exact"

    def __init__(self, chart: Chart, gamma: Optional[KForm] = None, check_closed: bool = True):
        n = chart.dim
        labels = tuple(f"d/d{c}" for c in chart.coords) + tuple(f"d{c}" for c in chart.coords)
        metric = sympy.zeros(2 * n, 2 * n)
        metric[:n, n:] = sympy.eye(n)
        metric[n:, :n] = sympy.eye(n)
        super().__init__(chart, labels, metric)
        if gamma is None:
            gamma = KForm.zero(chart, 3)
        chart.require(gamma.chart)
        if gamma.degree != 3:
            raise ValueError("the twisting form must have degree 3")
        if check_closed and not exterior_d(gamma).is_zero():
            raise PreconditionError(f"twisting form {gamma.render()} is not closed")
        self.gamma = gamma

    @property
    def key(self) -> tuple:
        return super().key + (self.gamma.render(),)

    def make(self, X: Optional[VectorField] = None, alpha: Optional[KForm] = None) -> Section:
        """The section (X, α)."""
        n = self.chart.dim
        vf = X.coeffs if X is not None else (ZERO,) * n
        form = alpha.components if alpha is not None else (ZERO,) * n
        if X is not None:
            self.chart.require(X.chart)
        if alpha is not None:
            self.chart.require(alpha.chart)
        return Section(self, tuple(vf) + tuple(form))

    def split(self, sigma: Section) -> Tuple[VectorField, KForm]:
        self.require(sigma.backend)
        n = self.chart.dim
        return VectorField(self.chart, sigma.coeffs[:n]), KForm.one_form(self.chart, sigma.coeffs[n:])

    def frame_anchor(self, i: int) -> VectorField:
        n = self.chart.dim
        if i < n:
            return VectorField.coordinate(self.chart, i)
        return VectorField.zero(self.chart)

    def compute_frame_bracket(self, i: int, j: int) -> Tuple[Scalar, ...]:
        n = self.chart.dim
        if i >= n or j >= n:
            return (ZERO,) * (2 * n)
        ei = VectorField.coordinate(self.chart, i)
        ej = VectorField.coordinate(self.chart, j)
        form = interior(ei, interior(ej, self.gamma))
        return (ZERO,) * n + form.components

    def dorfman(self, sigma: Section, tau: Section) -> Section:
        X, alpha = self.split(sigma)
        Y, beta = self.split(tau)
        form = lie_derivative(X, beta) - interior(Y, exterior_d(alpha)) + interior(X, interior(Y, self.gamma))
        return self.make(vf_bracket(X, Y), form)

    def coanchor(self, alpha: KForm) -> Section:
        self.chart.require(alpha.chart)
        return self.make(None, alpha)

    def relocated(self, chart: Chart) -> "ExactBackend":
        return ExactBackend(chart, self.gamma.substitute(relabel(self.chart, chart), chart), check_closed=False)


class ActionBackend(CourantBackend):
    """d × M for an action ρ of a quadratic Lie algebra d on the chart."""

    kind = "action"

    def __init__(self, chart: Chart, algebra: QuadLieAlgebra, rho: Sequence[VectorField]):
        super().__init__(chart, algebra.labels, algebra.metric)
        if len(rho) != algebra.dim:
            raise DimensionMismatchError(f"action needs {algebra.dim} vector fields, got {len(rho)}")
        for X in rho:
            chart.require(X.chart)
        self.algebra = algebra
        self.rho = tuple(rho)

    @property
    def key(self) -> tuple:
        return super().key + (
            self.algebra.structure,
            tuple(self.algebra.metric),
            tuple(X.render() for X in self.rho),
        )

    def frame_anchor(self, i: int) -> VectorField:
        return self.rho[i]

    def compute_frame_bracket(self, i: int, j: int) -> Tuple[Scalar, ...]:
        return self.algebra.structure[i][j]

    def raise_index(self, covector: Sequence) -> Tuple[Scalar, ...]:
        return self.algebra.raise_(covector)

    def dorfman(self, sigma: Section, tau: Section) -> Section:
        """[σ1,σ2]_pointwise + ℒ_{ρσ1}σ2 − ℒ_{ρσ2}σ1 + ρ*⟨dσ1, σ2⟩."""
        self.require(sigma.backend)
        self.require(tau.backend)
        d = self.algebra
        pointwise = d.bracket(sigma.coeffs, tau.coeffs)
        X = self.anchor(sigma)
        Y = self.anchor(tau)
        lie_tau = tuple(X(g) for g in tau.coeffs)
        lie_sigma = tuple(Y(f) for f in sigma.coeffs)
        # ⟨dσ1, σ2⟩ = Σ_ij g_ij g^j df^i
        lowered = d.lower(tau.coeffs)
        correction = KForm.zero(self.chart, 1)
        for f, w in zip(sigma.coeffs, lowered):
            if w != 0:
                correction = correction + differential(self.chart, f).scale(w)
        rho_star = self.coanchor(correction)
        coeffs = tuple(
            p + a - b + c for p, a, b, c in zip(pointwise, lie_tau, lie_sigma, rho_star.coeffs)
        )
        return Section(self, coeffs)

    def relocated(self, chart: Chart) -> "ActionBackend":
        mapping = relabel(self.chart, chart)
        return ActionBackend(chart, self.algebra, [X.substitute(mapping, chart) for X in self.rho])

    def rho_matrix(self, point: Sequence) -> sympy.Matrix:
        """ρ at a point as a dim(M) x dim(d) rational matrix."""
        return sympy.Matrix(
            self.chart.dim,
            self.algebra.dim,
            lambda k, j: evaluate(self.rho[j].coeffs[k], self.chart, point),
        )


class PointBackend(ActionBackend):
    """A quadratic Lie algebra viewed as a Courant algebroid over a point."""

    kind = "point"

    def __init__(self, algebra: QuadLieAlgebra):
        super().__init__(POINT, algebra, [VectorField.zero(POINT)] * algebra.dim)

    def relocated(self, chart: Chart) -> "PointBackend":
        if chart.dim:
            raise ChartMismatchError("a point backend lives on the zero-dimensional chart")
        return self


class ConjugateBackend(CourantBackend):
    """Same bracket and anchor as ``base``, metric negated."""

    kind = "conjugate"

    def __init__(self, base: CourantBackend):
        super().__init__(base.chart, base.labels, -base.metric)
        self.base = base

    @property
    def key(self) -> tuple:
        return ("conjugate",) + self.base.key

    def frame_anchor(self, i: int) -> VectorField:
        return self.base.frame_anchor(i)

    def compute_frame_bracket(self, i: int, j: int) -> Tuple[Scalar, ...]:
        return self.base.frame_bracket(i, j).coeffs

    def to_base(self, sigma: Section) -> Section:
        self.require(sigma.backend)
        return Section(self.base, sigma.coeffs)

    def from_base(self, sigma: Section) -> Section:
        self.base.require(sigma.backend)
        return Section(self, sigma.coeffs)

    def dorfman(self, sigma: Section, tau: Section) -> Section:
        return self.from_base(self.base.dorfman(self.to_base(sigma), self.to_base(tau)))

    def relocated(self, chart: Chart) -> "ConjugateBackend":
        return ConjugateBackend(self.base.relocated(chart))


def conjugate(backend: CourantBackend) -> CourantBackend:
    if isinstance(backend, ConjugateBackend):
        return backend.base
    return ConjugateBackend(backend)


class ProductBackend(CourantBackend):
    """The product of two backends over the product of their charts.

    The charts must use disjoint coordinate names; the frame is the
    concatenation of the two frames and the metric is block diagonal.
    """

    kind = "product"

    def __init__(self, first: CourantBackend, second: CourantBackend):
        clash = set(first.chart.coords) & set(second.chart.coords)
        if clash:
            raise ChartMismatchError(f"product charts share coordinates {sorted(clash)}")
        chart = Chart(f"{first.chart.name}x{second.chart.name}", first.chart.coords + second.chart.coords)
        labels = tuple(f"1:{l}" for l in first.labels) + tuple(f"2:{l}" for l in second.labels)
        super().__init__(chart, labels, sympy.diag(first.metric, second.metric))
        self.first = first
        self.second = second

    @property
    def key(self) -> tuple:
        return ("product", self.first.key, self.second.key)

    def _embed_vf(self, X: VectorField, slot: int) -> VectorField:
        n1, n2 = self.first.chart.dim, self.second.chart.dim
        if slot == 0:
            return VectorField(self.chart, X.coeffs + (ZERO,) * n2)
        return VectorField(self.chart, (ZERO,) * n1 + X.coeffs)

    def frame_anchor(self, i: int) -> VectorField:
        r1 = self.first.rank
        if i < r1:
            return self._embed_vf(self.first.frame_anchor(i), 0)
        return self._embed_vf(self.second.frame_anchor(i - r1), 1)

    def compute_frame_bracket(self, i: int, j: int) -> Tuple[Scalar, ...]:
        r1, r2 = self.first.rank, self.second.rank
        if i < r1 and j < r1:
            return self.first.frame_bracket(i, j).coeffs + (ZERO,) * r2
        if i >= r1 and j >= r1:
            return (ZERO,) * r1 + self.second.frame_bracket(i - r1, j - r1).coeffs
        return (ZERO,) * (r1 + r2)

    def embed(self, sigma: Section, slot: int) -> Section:
        """The section of the product supported on one factor."""
        r1, r2 = self.first.rank, self.second.rank
        if slot == 0:
            self.first.require(sigma.backend)
            return Section(self, sigma.coeffs + (ZERO,) * r2)
        self.second.require(sigma.backend)
        return Section(self, (ZERO,) * r1 + sigma.coeffs)

    def pair_sections(self, first: Section, second: Section) -> Section:
        return self.embed(first, 0) + self.embed(second, 1)

    def components(self, sigma: Section) -> Tuple[Tuple[Scalar, ...], Tuple[Scalar, ...]]:
        self.require(sigma.backend)
        r1 = self.first.rank
        return sigma.coeffs[:r1], sigma.coeffs[r1:]

    def relocated(self, chart: Chart) -> "ProductBackend":
        n1 = self.first.chart.dim
        first = self.first.relocated(Chart(self.first.chart.name, chart.coords[:n1]))
        second = self.second.relocated(Chart(self.second.chart.name, chart.coords[n1:]))
        return ProductBackend(first, second)


def relation_backend(target: CourantBackend, source: CourantBackend) -> ProductBackend:
    """F × Ē, the ambient algebroid of a relation from ``source`` to ``target``."""
    return ProductBackend(target, conjugate(source))


def relocate(backend: CourantBackend, chart: Chart) -> CourantBackend:
    if chart.dim != backend.chart.dim:
        raise DimensionMismatchError("relocation needs a chart of the same dimension")
    return backend.relocated(chart)


def relocate_section(sigma: Section, backend: CourantBackend) -> Section:
    """Carry a section to a relocated copy of its backend."""
    mapping = relabel(sigma.backend.chart, backend.chart)
    return Section(backend, tuple(c.xreplace(mapping) for c in sigma.coeffs))


def default_trials(backend: CourantBackend) -> List[Section]:
    """The frame plus one section with degree-one coefficients."""
    trials = backend.frame_sections()
    symbols = backend.chart.symbols
    if symbols:
        coeffs = [symbols[i % len(symbols)] + (i % 2) for i in range(backend.rank)]
        trials.append(backend.section(coeffs))
    return trials


def default_test_function(chart: Chart) -> Scalar:
    symbols = chart.symbols
    if not symbols:
        return sympy.Integer(2)
    return scalar(1 + symbols[0] * symbols[-1] + sum(symbols, ZERO))


def verify_axioms(backend: CourantBackend, trials: Optional[Sequence[Section]] = None, f=None) -> VerificationReport:
    """Checks c1)-c6), the coanchor duality and a∘a* = 0 over the trials."""
    trials = list(trials) if trials is not None else default_trials(backend)
    if not trials:
        raise PreconditionError("axiom sweep needs at least one trial section")
    f = scalar(f) if f is not None else default_test_function(backend.chart)
    report = VerificationReport(f"Courant axioms of {backend!r}")
    names = [p.render() for p in trials]
    chart = backend.chart
    br = {}

    def bracket(i, j):
        if (i, j) not in br:
            br[(i, j)] = backend.dorfman(trials[i], trials[j])
        return br[(i, j)]

    m = len(trials)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                lhs = backend.dorfman(trials[i], bracket(j, k))
                rhs = backend.dorfman(bracket(i, j), trials[k]) + backend.dorfman(trials[j], bracket(i, k))
                residual = lhs - rhs
                report.record("c1", residual.is_zero(), sections=[names[i], names[j], names[k]], residual=residual)
                if k < j:
                    continue
                value = scalar(
                    backend.anchor(trials[i])(backend.pairing(trials[j], trials[k]))
                    - backend.pairing(bracket(i, j), trials[k])
                    - backend.pairing(trials[j], bracket(i, k))
                )
                report.record("c2", value == 0, sections=[names[i], names[j], names[k]], residual=render(value))
    for i in range(m):
        for j in range(m):
            sigma, tau = trials[i], trials[j]
            pair = [names[i], names[j]]
            residual = bracket(i, j) + bracket(j, i) - backend.coanchor(
                differential(chart, backend.pairing(sigma, tau))
            )
            report.record("c3", residual.is_zero(), sections=pair, residual=residual)
            residual = (
                backend.dorfman(sigma, tau.scale(f))
                - bracket(i, j).scale(f)
                - tau.scale(backend.anchor(sigma)(f))
            )
            report.record("c4", residual.is_zero(), sections=pair, function=render(f), residual=residual)
            residual = (
                backend.dorfman(sigma.scale(f), tau)
                - bracket(i, j).scale(f)
                + sigma.scale(backend.anchor(tau)(f))
            )
            residual = residual - backend.coanchor(differential(chart, f)).scale(backend.pairing(sigma, tau))
            report.record("c5", residual.is_zero(), sections=pair, function=render(f), residual=residual)
            residual = backend.anchor(bracket(i, j)) - vf_bracket(backend.anchor(sigma), backend.anchor(tau))
            report.record("c6", residual.is_zero(), sections=pair, residual=residual)
    for k in range(chart.dim):
        dx = KForm.coordinate(chart, k)
        image = backend.anchor(backend.coanchor(dx))
        report.record("anchor_coanchor", image.is_zero(), covector=f"d{chart.coords[k]}", residual=image)
        for i, p in enumerate(trials):
            value = scalar(backend.pairing(backend.coanchor(dx), p) - dx(backend.anchor(p)))
            report.record(
                "coanchor_duality", value == 0, covector=f"d{chart.coords[k]}", section=names[i], residual=render(value)
            )
    logger.info(f"{report.subject}: {report.checked} identities, {len(report.failures)} failures")
    return report


def compare_brackets(backend: CourantBackend, trials: Optional[Sequence[Section]] = None) -> VerificationReport:
    """The closed-form bracket against the frame expansion on all trial pairs."""
    trials = list(trials) if trials is not None else default_trials(backend)
    report = VerificationReport(f"bracket formulas of {backend!r}")
    for sigma in trials:
        for tau in trials:
            residual = backend.dorfman(sigma, tau) - backend.leibniz_dorfman(sigma, tau)
            report.record("bracket_formula", residual.is_zero(), sections=[sigma, tau], residual=residual)
    return report


def coisotropic_stabilizers(backend: ActionBackend, points: Sequence[Sequence]) -> VerificationReport:
    """At each point, ker ρ(·, m) must contain its orthogonal complement."""
    if not isinstance(backend, ActionBackend):
        raise PreconditionError("coisotropic stabilizers are defined for action backends")
    report = VerificationReport(f"stabilizers of {backend!r}")
    d = backend.algebra
    g = d.metric_form()
    ambient = LinSpace(d.dim)
    for point in points:
        if backend.chart.dim:
            rho = backend.rho_matrix(point)
            rows = [tuple(rho.row(k)) for k in range(rho.rows)]
            kernel = Subspace(ambient, nullspace(rows, d.dim))
        else:
            kernel = Subspace.full(ambient)
        perp = orth_complement(kernel, g)
        ok = perp.is_subspace_of(kernel)
        report.record(
            "coisotropic_stabilizer",
            ok,
            point=[str(v) for v in point],
            stabilizer=[d.render(v) for v in kernel.basis],
            orthogonal=[d.render(v) for v in perp.basis],
        )
    return report


class Bivector:
    """A bivector field π = Σ_{i<j} π_ij ∂_i ∧ ∂_j given by its skew matrix."""

    def __init__(self, chart: Chart, matrix):
        matrix = sympy.Matrix(matrix).applyfunc(scalar)
        if matrix.shape != (chart.dim, chart.dim):
            raise DimensionMismatchError("bivector matrix must be square of the chart dimension")
        if any(scalar(matrix[i, j] + matrix[j, i]) != 0 for i in range(chart.dim) for j in range(i + 1)):
            raise ValueError("bivector matrix is not skew")
        self.chart = chart
        self.matrix = matrix

    @classmethod
    def from_brackets(cls, chart: Chart, brackets) -> "Bivector":
        """From entries {(x, y): {x,y}} on coordinate names."""
        n = chart.dim
        matrix = sympy.zeros(n, n)
        for (a, b), value in brackets.items():
            i, j = chart.index(a), chart.index(b)
            matrix[i, j] = scalar(value)
            matrix[j, i] = -scalar(value)
        return cls(chart, matrix)

    def __call__(self, alpha: KForm, beta: KForm) -> Scalar:
        a, b = alpha.components, beta.components
        n = self.chart.dim
        return scalar(sum((a[i] * self.matrix[i, j] * b[j] for i in range(n) for j in range(n)), ZERO))

    def sharp(self, alpha: KForm) -> VectorField:
        """π♯α = π(α, ·)."""
        self.chart.require(alpha.chart)
        a = alpha.components
        n = self.chart.dim
        return VectorField(self.chart, tuple(sum((a[i] * self.matrix[i, j] for i in range(n)), ZERO) for j in range(n)))

    def poisson_bracket(self, f, g) -> Scalar:
        return self(differential(self.chart, f), differential(self.chart, g))


def poisson_graph_frame(backend: ExactBackend, pi: Bivector) -> List[Section]:
    """Sections (π♯dx_i, dx_i) spanning gr(π♯)."""
    backend.chart.require(pi.chart)
    frame = []
    for i in range(backend.chart.dim):
        dx = KForm.coordinate(backend.chart, i)
        frame.append(backend.make(pi.sharp(dx), dx))
    return frame


def koszul_bracket(pi: Bivector, alpha: KForm, beta: KForm) -> KForm:
    """[α,β]_π = ℒ_{π♯α}β − ℒ_{π♯β}α − dπ(α,β)."""
    return (
        lie_derivative(pi.sharp(alpha), beta)
        - lie_derivative(pi.sharp(beta), alpha)
        - differential(pi.chart, pi(alpha, beta))
    )


def poisson_jacobiator(pi: Bivector, f, g, h) -> Scalar:
    pb = pi.poisson_bracket
    return scalar(pb(f, pb(g, h)) + pb(g, pb(h, f)) + pb(h, pb(f, g)))
