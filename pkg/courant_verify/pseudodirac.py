"""Pseudo-connections on subbundles of Courant algebroids.

A subbundle W is given by a frame σ_1..σ_k of sections and a
pseudo-connection ∇ by the one-forms A_ij = ⟨∇σ_i, σ_j⟩. Sections of W are
coefficient tuples over the frame; ∇ of a general section follows from

    ⟨∇(Σ f^i σ_i), σ_j⟩ = Σ_i (f^i A_ij + df^i ⟨σ_i, σ_j⟩).

When every A_ij vanishes, ⟨∇σ, e⟩ = Σ df^i ⟨σ_i, e⟩ is used for any section
e of the ambient algebroid, so brackets that leave W can still be fed back
into ∇. This is how the Jacobi defect of a non-involutive Lagrangian W is
computed.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from .courantcore import (
    ActionBackend,
    CourantBackend,
    ExactBackend,
    Section,
    conjugate,
)
from .errors import (
    DimensionMismatchError,
    NotInSpanError,
    PreconditionError,
    RankDropError,
)
from .exactcalc import (
    ONE,
    ZERO,
    Chart,
    KForm,
    Scalar,
    VectorField,
    differential,
    evaluate,
    exterior_d,
    interior,
    render,
    scalar,
    vf_bracket,
    wedge,
)
from .linalgrel import SpanSolver, nullspace, rank
from .quadlie import SubalgebraSpec
from .report import VerificationReport
from .utils import sample_points

logger = logging.getLogger(__name__)

Coeffs = Tuple[Scalar, ...]


class SubbundleFrame:
    """A frame of k sections spanning a subbundle W of a backend."""

    def __init__(self, backend: CourantBackend, sections: Sequence[Section], name: str = "W"):
        for s in sections:
            backend.require(s.backend)
        self.backend = backend
        self.sections = tuple(sections)
        self.name = name
        self.rows = [s.coeffs for s in self.sections]
        self.solver = SpanSolver(self.rows, backend.rank)
        if not self.solver.independent:
            raise RankDropError(
                f"frame of {name} has rank {self.solver.rank} < {len(self.sections)} over the function field"
            )
        self._gram = None

    @property
    def k(self) -> int:
        return len(self.sections)

    @property
    def chart(self) -> Chart:
        return self.backend.chart

    @property
    def gram(self) -> sympy.Matrix:
        """⟨σ_i, σ_j⟩."""
        if self._gram is None:
            pair = self.backend.pairing
            self._gram = sympy.Matrix(self.k, self.k, lambda i, j: pair(self.sections[i], self.sections[j]))
        return self._gram

    def combine(self, coeffs: Sequence) -> Section:
        if len(coeffs) != self.k:
            raise DimensionMismatchError(f"{self.name} needs {self.k} coefficients, got {len(coeffs)}")
        out = [ZERO] * self.backend.rank
        for f, s in zip(coeffs, self.sections):
            f = scalar(f)
            if f == 0:
                continue
            for m, c in enumerate(s.coeffs):
                if c != 0:
                    out[m] += f * c
        return Section(self.backend, tuple(out))

    def unit(self, i: int) -> Coeffs:
        return tuple(ONE if j == i else ZERO for j in range(self.k))

    def solve(self, sigma: Section) -> Optional[Coeffs]:
        self.backend.require(sigma.backend)
        return self.solver.solve(sigma.coeffs)

    def express(self, sigma: Section, points: Optional[Sequence] = None) -> Coeffs:
        """Frame coefficients of ``sigma``, or NotInSpanError with a witness."""
        coeffs = self.solve(sigma)
        if coeffs is None:
            raise self.not_in_span(sigma, points)
        return coeffs

    def not_in_span(self, sigma: Section, points: Optional[Sequence] = None) -> NotInSpanError:
        residual = self.solver.residual(sigma.coeffs)
        avoid = [c for row in self.rows for c in row] + list(sigma.coeffs) + list(residual)
        candidates = points if points is not None else sample_points(self.chart, 8, avoid=avoid)
        n = self.backend.rank
        for point in candidates:
            rows = [tuple(evaluate(c, self.chart, point) for c in row) for row in self.rows]
            target = sigma.at(point)
            for covector in nullspace(rows, n):
                if sum((a * b for a, b in zip(covector, target)), ZERO) != 0:
                    return NotInSpanError(
                        f"section is not in the span of {self.name}",
                        point=tuple(str(v) for v in point),
                        covector=tuple(str(v) for v in covector),
                        residual=[render(r) for r in residual],
                    )
        return NotInSpanError(
            f"section is not in the span of {self.name} over the function field",
            residual=[render(r) for r in residual],
        )

    def coefficients(self) -> List[Scalar]:
        return [c for row in self.rows for c in row]

    def rank_at(self, point: Sequence) -> int:
        rows = [tuple(evaluate(c, self.chart, point) for c in row) for row in self.rows]
        return rank(rows, self.backend.rank)

    def check_rank(self, points: Sequence[Sequence]):
        for point in points:
            r = self.rank_at(point)
            if r < self.k:
                raise RankDropError(
                    f"frame of {self.name} drops to rank {r} at {tuple(str(v) for v in point)}"
                )

    def perp_sections(self) -> List[Section]:
        """A frame of W⊥ over the function field."""
        G = self.backend.metric
        n = self.backend.rank
        rows = [
            tuple(scalar(sum((row[a] * G[a, b] for a in range(n)), ZERO)) for b in range(n))
            for row in self.rows
        ]
        return [Section(self.backend, v) for v in nullspace(rows, n)]

    def is_lagrangian(self) -> bool:
        return 2 * self.k == self.backend.rank and all(v == 0 for v in self.gram)

    def __repr__(self):
        return f"SubbundleFrame({self.name}, k={self.k}, {self.backend!r})"


class PseudoConnection:
    """∇ on a frame, stored as the matrix of one-forms A_ij = ⟨∇σ_i, σ_j⟩."""

    def __init__(self, frame: SubbundleFrame, matrix, name: str = "nabla"):
        self.frame = frame
        self.name = name
        k = frame.k
        chart = frame.chart
        A = []
        for i in range(k):
            row = []
            for j in range(k):
                entry = matrix[i][j]
                if not isinstance(entry, KForm):
                    entry = KForm.one_form(chart, entry)
                chart.require(entry.chart)
                if entry.degree != 1:
                    raise ValueError("connection entries must be one-forms")
                row.append(entry)
            A.append(tuple(row))
        self.A = tuple(A)
        self.flat_frame = all(a.is_zero() for row in self.A for a in row)
        self._closure: Dict[Tuple[int, int], Coeffs] = {}

    @classmethod
    def zero(cls, frame: SubbundleFrame, name: str = "zero") -> "PseudoConnection":
        k = frame.k
        return cls(frame, [[KForm.zero(frame.chart, 1)] * k for _ in range(k)], name)

    @property
    def backend(self) -> CourantBackend:
        return self.frame.backend

    @property
    def chart(self) -> Chart:
        return self.frame.chart

    def pair_form(self, sigma: Sequence, j: int) -> KForm:
        """⟨∇σ, σ_j⟩ for σ = Σ f^i σ_i."""
        chart = self.chart
        G = self.frame.gram
        result = KForm.zero(chart, 1)
        for i, f in enumerate(sigma):
            f = scalar(f)
            if f == 0:
                continue
            if not self.A[i][j].is_zero():
                result = result + self.A[i][j].scale(f)
            if G[i, j] != 0:
                result = result + differential(chart, f).scale(G[i, j])
        return result

    def pair(self, sigma: Sequence, tau: Sequence) -> KForm:
        """⟨∇σ, τ⟩ for W-sections σ and τ."""
        result = KForm.zero(self.chart, 1)
        for j, g in enumerate(tau):
            g = scalar(g)
            if g != 0:
                result = result + self.pair_form(sigma, j).scale(g)
        return result

    def pair_with_section(self, sigma: Sequence, e: Section) -> KForm:
        """⟨∇σ, e⟩ for a section e of the ambient algebroid."""
        if self.flat_frame:
            result = KForm.zero(self.chart, 1)
            for i, f in enumerate(sigma):
                f = scalar(f)
                if f == 0:
                    continue
                value = self.backend.pairing(self.frame.sections[i], e)
                if value != 0:
                    result = result + differential(self.chart, f).scale(value)
            return result
        return self.pair(sigma, self.frame.express(e))

    def closure_pair(self, i: int, j: int) -> Coeffs:
        if (i, j) not in self._closure:
            bracket = modified_bracket(self, self.frame.unit(i), self.frame.unit(j))
            self._closure[(i, j)] = self.frame.express(bracket)
        return self._closure[(i, j)]

    def render(self) -> List[List[str]]:
        return [[a.render() for a in row] for row in self.A]

    def __repr__(self):
        return f"PseudoConnection({self.name} on {self.frame.name})"


def nabla_apply(nabla: PseudoConnection, sigma: Sequence, X: VectorField) -> Coeffs:
    """Values of ∇_X σ against the frame."""
    return tuple(nabla.pair_form(sigma, j)(X) for j in range(nabla.frame.k))


def modified_bracket(nabla: PseudoConnection, sigma: Sequence, tau: Sequence) -> Section:
    """[σ,τ] = ⟦σ,τ⟧ − a*⟨∇σ,τ⟩."""
    frame = nabla.frame
    backend = nabla.backend
    return backend.dorfman(frame.combine(sigma), frame.combine(tau)) - backend.coanchor(nabla.pair(sigma, tau))


def bracket_into(nabla: PseudoConnection, sigma: Sequence, e: Section) -> Section:
    """[σ, e] for a W-section σ and an ambient section e."""
    backend = nabla.backend
    return backend.dorfman(nabla.frame.combine(sigma), e) - backend.coanchor(nabla.pair_with_section(sigma, e))


def closure_solve(nabla: PseudoConnection, i: int, j: int) -> Coeffs:
    """Coefficients c with [σ_i, σ_j] = Σ c^k σ_k; NotInSpanError otherwise."""
    return nabla.closure_pair(i, j)


def modified_bracket_coeffs(nabla: PseudoConnection, sigma: Sequence, tau: Sequence) -> Coeffs:
    return nabla.frame.express(modified_bracket(nabla, sigma, tau))


def torsion_value(nabla: PseudoConnection, sigma: Sequence, tau: Sequence, upsilon: Sequence) -> Scalar:
    """T(σ,τ,υ) = ⟨∇_{a(σ)}τ − ∇_{a(τ)}σ − [σ,τ], υ⟩."""
    frame = nabla.frame
    backend = nabla.backend
    a_sigma = backend.anchor(frame.combine(sigma))
    a_tau = backend.anchor(frame.combine(tau))
    value = (
        nabla.pair(tau, upsilon)(a_sigma)
        - nabla.pair(sigma, upsilon)(a_tau)
        - backend.pairing(modified_bracket(nabla, sigma, tau), frame.combine(upsilon))
    )
    return scalar(value)


def torsion(nabla: PseudoConnection) -> List[List[List[Scalar]]]:
    k = nabla.frame.k
    unit = nabla.frame.unit
    return [[[torsion_value(nabla, unit(i), unit(j), unit(l)) for l in range(k)] for j in range(k)] for i in range(k)]


def psi_value(nabla: PseudoConnection, sigma: Sequence, tau: Sequence, upsilon: Sequence) -> KForm:
    """The obstruction one-form Ψ(σ,τ,υ)."""
    backend = nabla.backend
    frame = nabla.frame
    chart = nabla.chart

    def anchor(s):
        return backend.anchor(frame.combine(s))

    total = (
        nabla.pair_with_section(upsilon, modified_bracket(nabla, sigma, tau))
        + nabla.pair_with_section(tau, modified_bracket(nabla, upsilon, sigma))
        + nabla.pair_with_section(sigma, modified_bracket(nabla, tau, upsilon))
        + interior(anchor(sigma), exterior_d(nabla.pair(tau, upsilon)))
        + interior(anchor(upsilon), exterior_d(nabla.pair(sigma, tau)))
        + interior(anchor(tau), exterior_d(nabla.pair(upsilon, sigma)))
        + differential(chart, torsion_value(nabla, sigma, tau, upsilon))
    )
    return total


def psi(nabla: PseudoConnection) -> Dict[Tuple[int, int, int], KForm]:
    """Ψ on frame triples i < j < l; other entries follow by skewness."""
    k = nabla.frame.k
    unit = nabla.frame.unit
    return {
        (i, j, l): psi_value(nabla, unit(i), unit(j), unit(l))
        for i in range(k)
        for j in range(i + 1, k)
        for l in range(j + 1, k)
    }


def jacobi_defect(nabla: PseudoConnection, sigma: Sequence, tau: Sequence, upsilon: Sequence) -> Section:
    """[σ,[τ,υ]] + [τ,[υ,σ]] + [υ,[σ,τ]] as an ambient section."""
    return (
        bracket_into(nabla, sigma, modified_bracket(nabla, tau, upsilon))
        + bracket_into(nabla, tau, modified_bracket(nabla, upsilon, sigma))
        + bracket_into(nabla, upsilon, modified_bracket(nabla, sigma, tau))
    )


def check_metric_compatibility(nabla: PseudoConnection) -> VerificationReport:
    report = VerificationReport(f"metric compatibility of {nabla.name}")
    G = nabla.frame.gram
    chart = nabla.chart
    for i in range(nabla.frame.k):
        for j in range(i, nabla.frame.k):
            residual = differential(chart, G[i, j]) - nabla.A[i][j] - nabla.A[j][i]
            report.record("metric_compatibility", residual.is_zero(), pair=[i, j], residual=residual)
    return report


def check_jacobi_defect(nabla: PseudoConnection, triples: Sequence[Tuple[Sequence, Sequence, Sequence]]) -> VerificationReport:
    """Jacobi defect against −a*Ψ on the given W-section triples."""
    report = VerificationReport(f"Jacobi defect of {nabla.name}")
    backend = nabla.backend
    for sigma, tau, upsilon in triples:
        defect = jacobi_defect(nabla, sigma, tau, upsilon)
        expected = -backend.coanchor(psi_value(nabla, sigma, tau, upsilon))
        residual = defect - expected
        report.record(
            "jacobi_defect",
            residual.is_zero(),
            sections=[_render_coeffs(c) for c in (sigma, tau, upsilon)],
            defect=defect,
            residual=residual,
        )
        report.details.setdefault("defects", []).append(defect.render())
    return report


def check_tensoriality(nabla: PseudoConnection, f=None, check_psi: bool = True) -> VerificationReport:
    """Skewness of the bracket, T and Ψ and their behaviour under σ ↦ fσ."""
    frame = nabla.frame
    k = frame.k
    chart = nabla.chart
    if f is None:
        symbols = chart.symbols
        f = 1 + symbols[0] ** 2 + symbols[-1] if symbols else sympy.Integer(3)
    f = scalar(f)
    unit = frame.unit
    report = VerificationReport(f"tensoriality of {nabla.name}")

    def scaled(i):
        return tuple(f if j == i else ZERO for j in range(k))

    for i in range(k):
        for j in range(k):
            residual = modified_bracket(nabla, unit(i), unit(j)) + modified_bracket(nabla, unit(j), unit(i))
            report.record("bracket_skew", residual.is_zero(), pair=[i, j], residual=residual)
    T = torsion(nabla)
    for i in range(k):
        for j in range(k):
            for l in range(k):
                for perm, sign in (((j, i, l), -1), ((i, l, j), -1), ((l, j, i), -1)):
                    a, b, c = perm
                    value = scalar(T[i][j][l] - sign * T[a][b][c])
                    report.record("torsion_skew", value == 0, triple=[i, j, l], against=list(perm), residual=render(value))
                for slot in range(3):
                    args = [unit(i), unit(j), unit(l)]
                    args[slot] = scaled((i, j, l)[slot])
                    value = scalar(torsion_value(nabla, *args) - f * T[i][j][l])
                    report.record(
                        "torsion_linear", value == 0, triple=[i, j, l], slot=slot, function=render(f), residual=render(value)
                    )
    if not check_psi:
        return report
    for i in range(k):
        for j in range(k):
            for l in range(k):
                base = psi_value(nabla, unit(i), unit(j), unit(l))
                if len({i, j, l}) < 3:
                    report.record("psi_skew", base.is_zero(), triple=[i, j, l], residual=base)
                    continue
                for perm in ((j, i, l), (i, l, j), (l, j, i)):
                    swapped = psi_value(nabla, *(unit(m) for m in perm))
                    report.record(
                        "psi_skew", (base + swapped).is_zero(), triple=[i, j, l], against=list(perm), residual=base + swapped
                    )
                for slot in range(3):
                    args = [unit(i), unit(j), unit(l)]
                    args[slot] = scaled((i, j, l)[slot])
                    residual = psi_value(nabla, *args) - base.scale(f)
                    report.record(
                        "psi_linear", residual.is_zero(), triple=[i, j, l], slot=slot, function=render(f), residual=residual
                    )
    return report


def _render_coeffs(coeffs: Sequence) -> List[str]:
    return [render(c) for c in coeffs]


def is_pseudo_dirac(nabla: PseudoConnection, points: Optional[Sequence] = None) -> VerificationReport:
    """Full rank at the sample points, metric compatibility, closure of the modified bracket and Ψ = 0.

    Without ``points`` the frame rank is checked at seeded samples avoiding the poles of its coefficients.
    """
    report = VerificationReport(f"pseudo-Dirac test of ({nabla.frame.name}, {nabla.name})")
    frame = nabla.frame
    if points is None:
        points = sample_points(frame.chart, avoid=frame.coefficients())
    for point in points:
        r = frame.rank_at(point)
        report.record("rank", r == frame.k, point=[str(v) for v in point], rank=r, expected=frame.k)
    report.merge(check_metric_compatibility(nabla))
    k = nabla.frame.k
    closed = True
    for i in range(k):
        for j in range(i + 1, k):
            try:
                coeffs = closure_solve(nabla, i, j)
                report.record("closure", True)
                logger.debug(f"[{i},{j}] = {_render_coeffs(coeffs)}")
            except NotInSpanError as e:
                closed = False
                report.record(
                    "closure", False, pair=[i, j], point=e.point, covector=e.covector, residual=e.residual
                )
    report.details["closed"] = closed
    if not closed and not nabla.flat_frame:
        report.details["psi"] = "not computed: the modified bracket leaves W"
        return report
    nonzero = {}
    for (i, j, l), form in psi(nabla).items():
        if report.record("psi", form.is_zero(), triple=[i, j, l], value=form):
            continue
        nonzero[f"{i},{j},{l}"] = form.render()
    report.details["psi_nonzero"] = nonzero
    return report


@dataclass
class LieAlgebroidData:
    """Structure functions and anchors of a Lie algebroid on a frame."""

    chart: Chart
    labels: Tuple[str, ...]
    structure: Dict[Tuple[int, int], Coeffs]
    anchors: Tuple[VectorField, ...]
    name: str = "algebroid"

    @property
    def rank(self) -> int:
        return len(self.labels)

    def c(self, i: int, j: int) -> Coeffs:
        return self.structure.get((i, j), (ZERO,) * self.rank)

    def anchor(self, coeffs: Sequence) -> VectorField:
        result = VectorField.zero(self.chart)
        for f, X in zip(coeffs, self.anchors):
            if scalar(f) != 0:
                result = result + X.scale(f)
        return result

    def bracket(self, sigma: Sequence, tau: Sequence) -> Coeffs:
        n = self.rank
        out = [ZERO] * n
        for i, f in enumerate(sigma):
            f = scalar(f)
            if f == 0:
                continue
            for j, g in enumerate(tau):
                g = scalar(g)
                if g == 0:
                    continue
                for l, c in enumerate(self.c(i, j)):
                    if c != 0:
                        out[l] += f * g * c
                out[j] += f * self.anchors[i](g)
                out[i] -= g * self.anchors[j](f)
        return tuple(scalar(v) for v in out)

    def equals(self, other: "LieAlgebroidData") -> bool:
        if self.rank != other.rank or self.chart != other.chart:
            return False
        n = self.rank
        return all(
            scalar(a - b) == 0 for i in range(n) for j in range(n) for a, b in zip(self.c(i, j), other.c(i, j))
        ) and all(X == Y for X, Y in zip(self.anchors, other.anchors))

    def to_dict(self) -> dict:
        n = self.rank
        return {
            "labels": list(self.labels),
            "anchors": [X.render() for X in self.anchors],
            "brackets": {
                f"[{self.labels[i]},{self.labels[j]}]": _render_coeffs(self.c(i, j))
                for i in range(n)
                for j in range(i + 1, n)
                if any(scalar(c) != 0 for c in self.c(i, j))
            },
        }


def induced_lie_algebroid(nabla: PseudoConnection) -> LieAlgebroidData:
    """The bracket and anchor that a pseudo-Dirac structure induces on W."""
    k = nabla.frame.k
    structure = {}
    for i in range(k):
        for j in range(k):
            if i == j:
                structure[(i, j)] = (ZERO,) * k
            elif i < j:
                structure[(i, j)] = closure_solve(nabla, i, j)
                structure[(j, i)] = tuple(-c for c in structure[(i, j)])
    anchors = tuple(nabla.backend.anchor(s) for s in nabla.frame.sections)
    labels = tuple(f"{nabla.frame.name}[{i}]" for i in range(k))
    return LieAlgebroidData(nabla.chart, labels, structure, anchors, f"Lie algebroid of {nabla.frame.name}")


def check_lie_algebroid(data: LieAlgebroidData) -> VerificationReport:
    report = VerificationReport(f"Lie algebroid axioms of {data.name}")
    n = data.rank
    unit = [tuple(ONE if j == i else ZERO for j in range(n)) for i in range(n)]
    for i in range(n):
        for j in range(i, n):
            residual = [scalar(a + b) for a, b in zip(data.c(i, j), data.c(j, i))]
            report.record("antisymmetry", all(r == 0 for r in residual), pair=[data.labels[i], data.labels[j]], residual=residual)
            image = data.anchor(data.c(i, j)) - vf_bracket(data.anchors[i], data.anchors[j])
            report.record("anchor", image.is_zero(), pair=[data.labels[i], data.labels[j]], residual=image)
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                total = [ZERO] * n
                for a, b, c in ((i, j, l), (j, l, i), (l, i, j)):
                    term = data.bracket(unit[a], data.bracket(unit[b], unit[c]))
                    total = [s + t for s, t in zip(total, term)]
                total = [scalar(t) for t in total]
                report.record(
                    "jacobi",
                    all(t == 0 for t in total),
                    triple=[data.labels[i], data.labels[j], data.labels[l]],
                    residual=total,
                )
    return report


def tangent_algebroid(chart: Chart) -> LieAlgebroidData:
    n = chart.dim
    labels = tuple(f"d/d{c}" for c in chart.coords)
    anchors = tuple(VectorField.coordinate(chart, i) for i in range(n))
    return LieAlgebroidData(chart, labels, {}, anchors, f"T{chart.name}")


def cotangent_connection(backend: ExactBackend, data: LieAlgebroidData) -> PseudoConnection:
    """The pseudo-connection on gr(a′) ⊂ TM ⊕ T*M of a Lie algebroid on T*M.

    ``data`` is given on the coordinate coframe dx_1..dx_n.
    """
    chart = backend.chart
    if data.chart != chart or data.rank != chart.dim:
        raise PreconditionError("the algebroid must live on the coordinate coframe of the backend chart")
    axioms = check_lie_algebroid(data)
    if not axioms.passed:
        raise PreconditionError(f"input fails the Lie algebroid axioms: {axioms.failed_identities()}")
    n = chart.dim
    sections = [backend.make(data.anchors[i], KForm.coordinate(chart, i)) for i in range(n)]
    frame = SubbundleFrame(backend, sections, f"gr({data.name})")
    A = []
    for i in range(n):
        row = []
        for j in range(n):
            # ℒ_{a′σ_i} dx_j − ι_{a′σ_j} d(dx_i) − j[σ_i, σ_j]
            entry = differential(chart, data.anchors[i].coeffs[j]) - KForm.one_form(chart, data.c(i, j))
            row.append(entry)
        A.append(row)
    return PseudoConnection(frame, A, f"cotangent({data.name})")


def flat_sections_check(nabla: PseudoConnection, sigma: Sequence, tau: Sequence) -> VerificationReport:
    """For ∇-flat σ, τ: ∇⟦σ,τ⟧ = 0 and ⟦σ,τ⟧ = [σ,τ]."""
    k = nabla.frame.k
    for name, s in (("sigma", sigma), ("tau", tau)):
        if not all(nabla.pair_form(s, j).is_zero() for j in range(k)):
            raise PreconditionError(f"{name} is not a flat section of {nabla.name}")
    report = VerificationReport(f"flat sections of {nabla.name}")
    backend = nabla.backend
    dorfman = backend.dorfman(nabla.frame.combine(sigma), nabla.frame.combine(tau))
    difference = dorfman - modified_bracket(nabla, sigma, tau)
    report.record("bracket_agrees", difference.is_zero(), residual=difference)
    coeffs = nabla.frame.solve(dorfman)
    if coeffs is None:
        report.record("bracket_in_W", False, bracket=dorfman)
        return report
    for j in range(k):
        form = nabla.pair_form(coeffs, j)
        report.record("bracket_flat", form.is_zero(), index=j, value=form)
    return report


def twist(nabla: PseudoConnection, gamma: KForm) -> PseudoConnection:
    """Move (W, ∇) from TM ⊕ T*M to the γ-twisted algebroid.

    ⟨∇′σ, τ⟩ = ⟨∇σ, τ⟩ + ι_{a(σ)}ι_{a(τ)}γ.
    """
    backend = nabla.backend
    if not isinstance(backend, ExactBackend):
        raise PreconditionError("twisting needs an exact backend")
    twisted = ExactBackend(backend.chart, backend.gamma + gamma)
    sections = [twisted.section(s.coeffs) for s in nabla.frame.sections]
    frame = SubbundleFrame(twisted, sections, nabla.frame.name)
    anchors = [backend.anchor(s) for s in nabla.frame.sections]
    k = frame.k
    A = [
        [nabla.A[i][j] + interior(anchors[i], interior(anchors[j], gamma)) for j in range(k)]
        for i in range(k)
    ]
    return PseudoConnection(frame, A, f"{nabla.name}+twist")


def conjugate_connection(nabla: PseudoConnection) -> PseudoConnection:
    """(W, ∇) in E gives (W, −∇) in the conjugate algebroid."""
    target = conjugate(nabla.backend)
    sections = [target.section(s.coeffs) for s in nabla.frame.sections]
    frame = SubbundleFrame(target, sections, nabla.frame.name)
    A = [[-a for a in row] for row in nabla.A]
    return PseudoConnection(frame, A, f"-{nabla.name}")


def action_subalgebra(backend: ActionBackend, sub: SubalgebraSpec) -> PseudoConnection:
    """h × M with the flat trivialization; constant sections have ∇ = 0."""
    if sub.algebra is not backend.algebra:
        raise PreconditionError("the subalgebra must live in the acting algebra")
    sections = [backend.section(v) for v in sub.basis]
    frame = SubbundleFrame(backend, sections, sub.name)
    return PseudoConnection.zero(frame, "flat")


def action_algebroid(backend: ActionBackend, sub: SubalgebraSpec) -> LieAlgebroidData:
    """The action Lie algebroid h × M on the basis of ``sub``."""
    d = backend.algebra
    basis = sub.basis
    solver = SpanSolver(basis, d.dim)
    structure = {}
    for i, x in enumerate(basis):
        for j, y in enumerate(basis):
            coeffs = solver.solve(d.bracket(x, y))
            if coeffs is None:
                raise PreconditionError(f"{sub.name} is not a subalgebra")
            structure[(i, j)] = coeffs
    anchors = tuple(backend.anchor(backend.section(x)) for x in basis)
    labels = tuple(f"{sub.name}[{i}]" for i in range(len(basis)))
    return LieAlgebroidData(backend.chart, labels, structure, anchors, f"{sub.name} x {backend.chart.name}")


def metric_connection(backend: ExactBackend, g, omega, eta: Optional[KForm] = None) -> PseudoConnection:
    """gr(ω♭ + g♭) ⊂ TM ⊕ T*M with the metric connection of torsion η.

    σ_i = (∂_i, Σ_j (g_ij + ω_ij) dx_j) and
    A_ij = Σ_l (∂_l g_ij + ∂_i g_lj − ∂_j g_li + η_ijl) dx_l.
    """
    chart = backend.chart
    n = chart.dim
    g = sympy.Matrix(g).applyfunc(scalar)
    omega = sympy.Matrix(omega).applyfunc(scalar)
    if g.shape != (n, n) or omega.shape != (n, n):
        raise DimensionMismatchError(f"metric and two-form must be {n}x{n}")
    if eta is None:
        eta = KForm.zero(chart, 3)
    chart.require(eta.chart)
    x = chart.symbols
    sections = []
    for i in range(n):
        form = KForm.one_form(chart, [g[i, j] + omega[i, j] for j in range(n)])
        sections.append(backend.make(VectorField.coordinate(chart, i), form))
    frame = SubbundleFrame(backend, sections, "gr(g+omega)")
    A = []
    for i in range(n):
        row = []
        for j in range(n):
            coeffs = [
                sympy.diff(g[i, j], x[l]) + sympy.diff(g[l, j], x[i]) - sympy.diff(g[l, i], x[j])
                + eta.coefficient((i, j, l))
                for l in range(n)
            ]
            row.append(KForm.one_form(chart, coeffs))
        A.append(row)
    return PseudoConnection(frame, A, "metric")


def two_form_matrix(omega: KForm) -> sympy.Matrix:
    """ω_ij = ω(∂_i, ∂_j)."""
    n = omega.chart.dim
    return sympy.Matrix(n, n, lambda i, j: omega.coefficient((i, j)))


def _connection_forms(nabla: PseudoConnection):
    """ω_i^l with ∇σ_i = Σ_l ω_i^l σ_l (quadratic W only)."""
    G = nabla.frame.gram
    if scalar(G.det()) == 0:
        raise PreconditionError(f"{nabla.frame.name} is not quadratic")
    Ginv = G.inv().applyfunc(scalar)
    k = nabla.frame.k
    return [
        [
            sum((nabla.A[i][m].scale(Ginv[m, l]) for m in range(k)), KForm.zero(nabla.chart, 1))
            for l in range(k)
        ]
        for i in range(k)
    ]


def curvature(nabla: PseudoConnection) -> List[List[KForm]]:
    """⟨Rσ_i, σ_j⟩ = dA_ij + Σ_kl G_kl ω_i^k ∧ ω_j^l."""
    omega = _connection_forms(nabla)
    G = nabla.frame.gram
    k = nabla.frame.k
    R = []
    for i in range(k):
        row = []
        for j in range(k):
            entry = exterior_d(nabla.A[i][j])
            for a in range(k):
                for b in range(k):
                    if G[a, b] != 0:
                        entry = entry + wedge(omega[i][a], omega[j][b]).scale(G[a, b])
            row.append(entry)
        R.append(row)
    return R


def covariant_torsion(nabla: PseudoConnection) -> Dict[Tuple[int, int, int], KForm]:
    """(∇T)_ijl = dT_ijl − Σ_m (ω_i^m T_mjl + ω_j^m T_iml + ω_l^m T_ijm)."""
    omega = _connection_forms(nabla)
    T = torsion(nabla)
    k = nabla.frame.k
    chart = nabla.chart
    result = {}
    for i in range(k):
        for j in range(k):
            for l in range(k):
                entry = differential(chart, T[i][j][l])
                for m in range(k):
                    entry = entry - omega[i][m].scale(T[m][j][l]) - omega[j][m].scale(T[i][m][l]) - omega[l][m].scale(T[i][j][m])
                result[(i, j, l)] = entry
    return result


def psi_from_curvature(nabla: PseudoConnection) -> Dict[Tuple[int, int, int], KForm]:
    """Ψ_ijl = ι_{a_i}R_jl + ι_{a_l}R_ij + ι_{a_j}R_li + (∇T)_ijl."""
    R = curvature(nabla)
    DT = covariant_torsion(nabla)
    anchors = [nabla.backend.anchor(s) for s in nabla.frame.sections]
    k = nabla.frame.k
    return {
        (i, j, l): interior(anchors[i], R[j][l])
        + interior(anchors[l], R[i][j])
        + interior(anchors[j], R[l][i])
        + DT[(i, j, l)]
        for i in range(k)
        for j in range(i + 1, k)
        for l in range(j + 1, k)
    }


def check_curvature_form(nabla: PseudoConnection) -> VerificationReport:
    report = VerificationReport(f"curvature form of Psi for {nabla.name}")
    direct = psi(nabla)
    for key, form in psi_from_curvature(nabla).items():
        residual = direct[key] - form
        report.record("psi_curvature", residual.is_zero(), triple=list(key), residual=residual)
    return report


def reframe(nabla: PseudoConnection, sections: Sequence[Section], name: Optional[str] = None) -> PseudoConnection:
    """The same pseudo-connection expressed on another frame of W."""
    frame = SubbundleFrame(nabla.backend, sections, name or nabla.frame.name)
    if frame.k != nabla.frame.k:
        raise DimensionMismatchError("the new frame has a different rank")
    P = [nabla.frame.express(s) for s in sections]
    k = frame.k
    A = [
        [
            sum((nabla.pair_form(P[p], j).scale(P[q][j]) for j in range(k)), KForm.zero(nabla.chart, 1))
            for q in range(k)
        ]
        for p in range(k)
    ]
    return PseudoConnection(frame, A, nabla.name)


def same_structure(first: PseudoConnection, second: PseudoConnection) -> bool:
    """Same subbundle and same pseudo-connection, frames may differ."""
    first.backend.require(second.backend)
    if first.frame.k != second.frame.k:
        return False
    if any(first.frame.solve(s) is None for s in second.frame.sections):
        return False
    moved = reframe(second, first.frame.sections)
    return all(a == b for ra, rb in zip(first.A, moved.A) for a, b in zip(ra, rb))
