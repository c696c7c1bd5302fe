"""Courant relations along graphs and images of pseudo-Dirac structures.

A relation R: E ⇢ F along the graph of φ: M → N is stored over the source
chart M as a frame of pairs (t_a, s_a), where t_a are coefficients of a
section of φ*F and s_a of a section of E. The fiber metric on such pairs is
⟨·,·⟩_F − ⟨·,·⟩_E.

Backward images follow the pullback rule: W = W′∘R is spanned by the
sources of pairs whose targets lie in φ*W′, the bundle map Ψ: W → φ*W′ sends
a source to its unique partner, and ∇ = Ψ*∘(φ*∇′)∘Ψ.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import sympy

from .courantcore import (
    ActionBackend,
    CourantBackend,
    ExactBackend,
    PointBackend,
    ProductBackend,
    Section,
    coisotropic_stabilizers,
    relation_backend,
    relocate,
    relocate_section,
)
from .errors import NonCleanCompositionError, PreconditionError
from .exactcalc import (
    ZERO,
    Chart,
    ChartMap,
    KForm,
    Scalar,
    VectorField,
    differential,
    evaluate,
    relabel,
    render,
    scalar,
)
from .linalgrel import LinearRelation, LinSpace, SpanSolver, Subspace, compose, nullspace, orth_complement, rank
from .pseudodirac import (
    PseudoConnection,
    SubbundleFrame,
    action_subalgebra,
    closure_solve,
    conjugate_connection,
    same_structure,
)
from .quadlie import SubalgebraSpec, check_matched_pair, check_subalgebra, is_lagrangian_subalgebra
from .report import VerificationReport
from .utils import sample_points

logger = logging.getLogger(__name__)

Coeffs = Tuple[Scalar, ...]


class CourantRelation:
    """A Lagrangian subbundle R ⊂ φ*F × Ē over the source chart."""

    def __init__(
        self,
        source: CourantBackend,
        target: CourantBackend,
        phi: ChartMap,
        pairs: Sequence[Tuple[Sequence, Sequence]],
        name: str = "R",
    ):
        source.chart.require(phi.source)
        target.chart.require(phi.target)
        self.source = source
        self.target = target
        self.phi = phi
        self.name = name
        self.pairs: List[Tuple[Coeffs, Coeffs]] = []
        for t, s in pairs:
            t = tuple(scalar(c) for c in t)
            s = tuple(scalar(c) for c in s)
            if len(t) != target.rank or len(s) != source.rank:
                raise PreconditionError(f"pair of sizes ({len(t)}, {len(s)}) in {name}")
            self.pairs.append((t, s))
        self.rows = [t + s for t, s in self.pairs]
        self.solver = SpanSolver(self.rows, target.rank + source.rank)
        self.metric = sympy.diag(target.metric, -source.metric)

    @property
    def chart(self) -> Chart:
        return self.source.chart

    @property
    def rank(self) -> int:
        return len(self.pairs)

    def pairing(self, u: Sequence, v: Sequence) -> Scalar:
        G = self.metric
        n = G.rows
        return scalar(sum((u[i] * G[i, j] * v[j] for i in range(n) for j in range(n) if G[i, j] != 0), ZERO))

    def coefficients(self) -> List[Scalar]:
        return [c for row in self.rows for c in row]

    def fiber_relation(self, point: Sequence) -> LinearRelation:
        """The linear relation E_x ⇢ F_φ(x) at a point of the support."""
        pairs = [
            (tuple(evaluate(c, self.chart, point) for c in t), tuple(evaluate(c, self.chart, point) for c in s))
            for t, s in self.pairs
        ]
        return LinearRelation.from_pairs(self.source.rank, self.target.rank, pairs)

    def contains(self, target: Sequence, source: Sequence) -> bool:
        return self.solver.solve(tuple(target) + tuple(source)) is not None

    def transpose(self, inverse: ChartMap, name: Optional[str] = None) -> "CourantRelation":
        """Rᵀ: F ⇢ E along the graph of φ⁻¹."""
        inverse.source.require(self.phi.target)
        inverse.target.require(self.phi.source)
        back = [inverse.pullback_scalar(c) for c in self.phi.components]
        if any(scalar(b - y) != 0 for b, y in zip(back, self.phi.target.symbols)):
            raise PreconditionError(f"{inverse!r} does not invert the support map of {self.name}")
        pairs = [
            (tuple(inverse.pullback_scalar(c) for c in s), tuple(inverse.pullback_scalar(c) for c in t))
            for t, s in self.pairs
        ]
        return CourantRelation(self.target, self.source, inverse, pairs, name or f"{self.name}^T")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "source": self.source.describe(),
            "target": self.target.describe(),
            "support": [render(c) for c in self.phi.components],
            "rank": self.rank,
        }

    def __repr__(self):
        return f"CourantRelation({self.name}: {self.source!r} -> {self.target!r})"


def check_lagrangian(R: CourantRelation, points: Optional[Sequence] = None) -> VerificationReport:
    report = VerificationReport(f"Lagrangian test of {R.name}")
    for a in range(R.rank):
        for b in range(a, R.rank):
            value = R.pairing(R.rows[a], R.rows[b])
            report.record("isotropic", value == 0, pair=[a, b], value=render(value))
    total = R.source.rank + R.target.rank
    report.record("half_rank", 2 * R.rank == total and R.solver.independent, rank=R.solver.rank, ambient=total)
    points = points if points is not None else sample_points(R.chart, avoid=R.coefficients())
    for point in points:
        rows = [tuple(evaluate(c, R.chart, point) for c in row) for row in R.rows]
        r = rank(rows, total)
        report.record("fiber_rank", 2 * r == total, point=[str(v) for v in point], rank=r)
    report.details["points"] = len(points)
    return report


def _ambient(R: CourantRelation):
    """F × Ē over N × M, with the source chart renamed when names clash."""
    source = R.source
    if set(source.chart.coords) & set(R.target.chart.coords):
        source = relocate(source, source.chart.copy("_0"))
    return relation_backend(R.target, source), source


def check_involutive_along_support(R: CourantRelation) -> VerificationReport:
    """Brackets of extended frame pairs, restricted to the graph, stay in R."""
    ambient, source = _ambient(R)
    report = VerificationReport(f"involutivity of {R.name} along its support")
    to_copy = relabel(R.chart, source.chart)
    from_copy = relabel(source.chart, R.chart)
    graph = {y: c.xreplace(to_copy) for y, c in zip(R.target.chart.symbols, R.phi.components)}

    def extend(row):
        return Section(ambient, tuple(c.xreplace(to_copy) for c in row))

    def restrict(value):
        return scalar(sympy.sympify(value).xreplace(graph).xreplace(from_copy))

    sections = [extend(row) for row in R.rows]
    n_target = R.target.chart.dim
    for a, sigma in enumerate(sections):
        X = ambient.anchor(sigma)
        along = tuple(restrict(c) for c in X.coeffs)
        Y, Xs = along[:n_target], along[n_target:]
        moved = R.phi.pushforward(VectorField(R.chart, Xs))
        ok = all(scalar(u - v) == 0 for u, v in zip(Y, moved))
        report.record("anchor_tangent", ok, section=a, anchor=[render(c) for c in along])
        for b in range(a + 1, len(sections)):
            bracket = ambient.dorfman(sigma, sections[b])
            restricted = tuple(restrict(c) for c in bracket.coeffs)
            ok = R.solver.solve(restricted) is not None
            report.record("involutive", ok, pair=[a, b], bracket=[render(c) for c in restricted])
    return report


def identity_relation(backend: CourantBackend) -> CourantRelation:
    """The diagonal of E × Ē as the relation E ⇢ E."""
    n = backend.rank
    pairs = [(backend.frame(i).coeffs, backend.frame(i).coeffs) for i in range(n)]
    return CourantRelation(backend, backend, ChartMap.identity(backend.chart), pairs, f"id({backend.chart.name})")


def diagonal_morphism(backend: CourantBackend) -> CourantRelation:
    """TM ⊕ T*M ⇢ E × Ē over the diagonal: (v, μ) ~ (x, y) iff v = a(x), x − y = a*μ."""
    chart = backend.chart
    second = relocate(backend, chart.copy("_2"))
    target = relation_backend(backend, second)
    source = ExactBackend(chart)
    phi = ChartMap(chart, target.chart, chart.symbols + chart.symbols)
    pairs = []
    for i in range(backend.rank):
        e = backend.frame(i)
        pairs.append((e.coeffs + e.coeffs, source.make(backend.frame_anchor(i)).coeffs))
    for k in range(chart.dim):
        dx = KForm.coordinate(chart, k)
        pairs.append((backend.coanchor(dx).coeffs + (ZERO,) * backend.rank, source.make(None, dx).coeffs))
    return CourantRelation(source, target, phi, pairs, f"diag({chart.name})")


def graph_relation(phi: ChartMap, gamma_source: Optional[KForm] = None, gamma_target: Optional[KForm] = None):
    """The standard lift Tgr(φ) ⊕ ann♮(Tgr(φ)) as a relation of twisted exact algebroids."""
    source = ExactBackend(phi.source, gamma_source)
    target = ExactBackend(phi.target, gamma_target)
    residual = phi.pullback(target.gamma) - source.gamma
    if not residual.is_zero():
        raise PreconditionError(f"φ*γ_N differs from γ_M by {residual.render()}")
    m, n = phi.source.dim, phi.target.dim
    pairs = []
    for i in range(m):
        pushed = phi.pushforward(VectorField.coordinate(phi.source, i))
        pairs.append((tuple(pushed) + (ZERO,) * n, source.make(VectorField.coordinate(phi.source, i)).coeffs))
    for k in range(n):
        dy = KForm.coordinate(phi.target, k)
        pairs.append(((ZERO,) * n + dy.components, source.make(None, phi.pullback(dy)).coeffs))
    return CourantRelation(source, target, phi, pairs, f"gr({phi.source.name}->{phi.target.name})")


def manin_pair_morphism(backend: ActionBackend, sub: SubalgebraSpec) -> CourantRelation:
    """(TM ⊕ T*M, TM) ⇢ (d, g): pairs (ξ; (ρ(ξ), μ)) with ξ − ρ*μ ∈ g."""
    if sub.algebra is not backend.algebra:
        raise PreconditionError("the subalgebra must live in the acting algebra")
    if not is_lagrangian_subalgebra(sub):
        raise PreconditionError(f"{sub.name} is not a Lagrangian subalgebra")
    chart = backend.chart
    source = ExactBackend(chart)
    target = PointBackend(backend.algebra)
    phi = ChartMap(chart, target.chart, ())
    pairs = []
    for g in sub.basis:
        pairs.append((tuple(g), source.make(backend.anchor(backend.section(g))).coeffs))
    for k in range(chart.dim):
        dx = KForm.coordinate(chart, k)
        pairs.append((backend.coanchor(dx).coeffs, source.make(None, dx).coeffs))
    return CourantRelation(source, target, phi, pairs, f"manin({sub.name})")


@dataclass
class MorphismMap:
    """Ψ: W → φ*W′, row p holding the W′-frame coefficients of Ψ(σ_p)."""

    relation: CourantRelation
    source: SubbundleFrame
    target: SubbundleFrame
    matrix: Tuple[Coeffs, ...]

    def apply(self, coeffs: Sequence) -> Coeffs:
        out = [ZERO] * self.target.k
        for c, row in zip(coeffs, self.matrix):
            c = scalar(c)
            if c == 0:
                continue
            for j, d in enumerate(row):
                out[j] += c * d
        return tuple(scalar(v) for v in out)

    def render(self) -> List[List[str]]:
        return [[render(c) for c in row] for row in self.matrix]


def _pulled_rows(R: CourantRelation, frame: SubbundleFrame) -> List[Coeffs]:
    frame.backend.require(R.target)
    return [tuple(R.phi.pullback_scalar(c) for c in s.coeffs) for s in frame.sections]


def psi_map(R: CourantRelation, frame: SubbundleFrame, target_frame: SubbundleFrame) -> MorphismMap:
    """The unique Ψ with (Ψ(λ), λ) ∈ R, for λ in the frame of W."""
    frame.backend.require(R.source)
    w_rows = _pulled_rows(R, target_frame)
    nt, ns = R.target.rank, R.source.rank
    generators = list(R.rows) + [tuple(-c for c in w) + (ZERO,) * ns for w in w_rows]
    solver = SpanSolver(generators, nt + ns)
    r = R.rank
    for relation in solver.relations:
        if any(scalar(c) != 0 for c in relation[r:]):
            raise PreconditionError(f"Ψ is not unique: ran({R.name}) + φ*W′⊥ is not all of φ*F")
    matrix = []
    for p, sigma in enumerate(frame.sections):
        coeffs = solver.solve((ZERO,) * nt + sigma.coeffs)
        if coeffs is None:
            raise PreconditionError(f"section {p} of {frame.name} has no partner in {target_frame.name} through {R.name}")
        matrix.append(tuple(coeffs[r:]))
    return MorphismMap(R, frame, target_frame, tuple(matrix))


def pullback_connection(psi: MorphismMap, nabla_prime: PseudoConnection, name: Optional[str] = None) -> PseudoConnection:
    """⟨∇σ_p, σ_q⟩ = ⟨(φ*∇′)Ψσ_p, Ψσ_q⟩."""
    phi = psi.relation.phi
    chart = psi.source.chart
    kp = psi.target.k
    A_pulled = [[phi.pullback(nabla_prime.A[b][c]) for c in range(kp)] for b in range(kp)]
    G_pulled = nabla_prime.frame.gram.applyfunc(phi.pullback_scalar)
    D = psi.matrix
    k = psi.source.k

    def entry(p, q):
        total = KForm.zero(chart, 1)
        for c in range(kp):
            if D[q][c] == 0:
                continue
            inner = KForm.zero(chart, 1)
            for b in range(kp):
                if D[p][b] == 0:
                    continue
                inner = inner + A_pulled[b][c].scale(D[p][b])
                if G_pulled[b, c] != 0:
                    inner = inner + differential(chart, D[p][b]).scale(G_pulled[b, c])
            total = total + inner.scale(D[q][c])
        return total

    A = [[entry(p, q) for q in range(k)] for p in range(k)]
    return PseudoConnection(psi.source, A, name or f"{nabla_prime.name}∘{psi.relation.name}")


def _sample(R: CourantRelation, extra: Sequence[Scalar] = (), points: Optional[Sequence] = None):
    if points is not None:
        return list(points)
    return sample_points(R.chart, avoid=list(R.coefficients()) + list(extra))


def backward_image(
    R: CourantRelation, nabla_prime: PseudoConnection, points: Optional[Sequence] = None
) -> Tuple[PseudoConnection, MorphismMap]:
    """(W, ∇) = (W′, ∇′)∘R for a relation along the graph of a map."""
    w_rows = _pulled_rows(R, nabla_prime.frame)
    nt, ns = R.target.rank, R.source.rank
    r, kp = R.rank, len(w_rows)
    equations = [[t[i] for t, _ in R.pairs] + [-w[i] for w in w_rows] for i in range(nt)]
    combos = nullspace(equations, r + kp)
    candidates = []
    for combo in combos:
        s = tuple(scalar(sum((combo[a] * R.pairs[a][1][i] for a in range(r)), ZERO)) for i in range(ns))
        candidates.append((s, tuple(combo[r:])))
    chosen: List[Coeffs] = []
    for s, _ in candidates:
        if rank(chosen + [s], ns) > len(chosen):
            chosen.append(s)
    joint = rank([s + d for s, d in candidates], ns + kp)
    if joint != len(chosen):
        raise PreconditionError(f"Ψ is not unique: ran({R.name}) + φ*W′⊥ is not all of φ*F")
    extra = [c for row in w_rows for c in row] + [c for s in chosen for c in s]
    dims = {}
    for point in _sample(R, extra, points):
        eq = [[evaluate(c, R.chart, point) for c in row] for row in equations]
        local = nullspace(eq, r + kp)
        image = [
            tuple(sum((v[a] * evaluate(R.pairs[a][1][i], R.chart, point) for a in range(r)), ZERO) for i in range(ns))
            for v in local
        ]
        dims[",".join(str(v) for v in point)] = {"intersection": len(local), "image": rank(image, ns) if image else 0}
    generic = {"intersection": len(combos), "image": len(chosen)}
    if any(d != generic for d in dims.values()):
        dims["generic"] = generic
        raise NonCleanCompositionError(f"{nabla_prime.frame.name}∘{R.name} is not clean", dims)
    logger.debug(f"backward image through {R.name}: rank {len(chosen)}, fiber dims {generic}")
    frame = SubbundleFrame(R.source, [Section(R.source, s) for s in chosen], f"{nabla_prime.frame.name}∘{R.name}")
    psi = psi_map(R, frame, nabla_prime.frame)
    return pullback_connection(psi, nabla_prime), psi


def forward_image(
    R: CourantRelation, nabla: PseudoConnection, inverse: ChartMap, points: Optional[Sequence] = None
) -> Tuple[PseudoConnection, MorphismMap]:
    """R∘(W, ∇), computed as the backward image of (W, ∇) through Rᵀ.

    Only invertible supports are handled: ``inverse`` must be a polynomial map with
    φ∘inverse = id and inverse∘φ = id. Anything else raises PreconditionError.
    """
    inverse.source.require(R.phi.target)
    inverse.target.require(R.phi.source)
    back = [R.phi.pullback_scalar(c) for c in inverse.components]
    if any(scalar(b - s) != 0 for b, s in zip(back, R.phi.source.symbols)):
        raise PreconditionError(
            f"forward images need an invertible support; {inverse!r} is not a left inverse of the support map of {R.name}"
        )
    try:
        transposed = R.transpose(inverse)
    except PreconditionError as e:
        raise PreconditionError(f"forward images need an invertible support; {e}") from e
    return backward_image(transposed, nabla, points)


def pullback_formula(R: CourantRelation, nabla: PseudoConnection, nabla_prime: PseudoConnection) -> VerificationReport:
    """∇ = Ψ*∘(φ*∇′)∘Ψ on the frame of W, symbolically."""
    psi = psi_map(R, nabla.frame, nabla_prime.frame)
    expected = pullback_connection(psi, nabla_prime)
    report = VerificationReport(f"pullback formula for {nabla.name} through {R.name}")
    for p, (row, erow) in enumerate(zip(nabla.A, expected.A)):
        for q, (a, b) in enumerate(zip(row, erow)):
            report.record("pullback_formula", a == b, entry=[p, q], connection=a, pullback=b)
    report.details["psi"] = psi.render()
    return report


def composition_identity(
    R: CourantRelation, nabla: PseudoConnection, nabla_prime: PseudoConnection, points: Optional[Sequence] = None
) -> VerificationReport:
    """⟨(φ*∇′)_X σ′, λ′⟩ = ⟨∇_X σ, λ⟩ for related frame elements at sample points."""
    psi = psi_map(R, nabla.frame, nabla_prime.frame)
    pulled = pullback_connection(psi, nabla_prime)
    chart = R.chart
    k = nabla.frame.k
    report = VerificationReport(f"composition identity for {nabla.name} through {R.name}")
    for p in range(k):
        row = psi.matrix[p]
        report.record(
            "graph_contained",
            R.contains(_pulled_combination(R, psi.target, row), nabla.frame.sections[p].coeffs),
            section=p,
        )
    extra = [c for row in psi.matrix for c in row]
    for point in _sample(R, extra, points):
        for p in range(k):
            for q in range(k):
                for i in range(chart.dim):
                    X = VectorField.coordinate(chart, i)
                    lhs = evaluate(pulled.A[p][q](X), chart, point)
                    rhs = evaluate(nabla.A[p][q](X), chart, point)
                    report.record(
                        "composition_identity",
                        lhs == rhs,
                        point=[str(v) for v in point],
                        entry=[p, q],
                        direction=chart.coords[i],
                        target_side=str(lhs),
                        source_side=str(rhs),
                    )
    return report


def _pulled_combination(R: CourantRelation, frame: SubbundleFrame, coeffs: Sequence) -> Coeffs:
    rows = _pulled_rows(R, frame)
    return tuple(scalar(sum((c * row[i] for c, row in zip(coeffs, rows)), ZERO)) for i in range(R.target.rank))


def morphism_check(psi: MorphismMap, nabla: PseudoConnection, nabla_prime: PseudoConnection) -> VerificationReport:
    """Anchors and brackets of W and W′ intertwined by Ψ over φ."""
    R = psi.relation
    phi = R.phi
    chart = R.chart
    source, target = psi.source, psi.target
    report = VerificationReport(f"Lie algebroid morphism {source.name} -> {target.name}")
    for p in range(source.k):
        row = psi.matrix[p]
        report.record(
            "graph_contained",
            R.contains(_pulled_combination(R, target, row), source.sections[p].coeffs),
            section=p,
        )
    anchors = [R.target.anchor(s) for s in target.sections]
    for p in range(source.k):
        moved = phi.pushforward(R.source.anchor(source.sections[p]))
        image = [
            scalar(sum((d * phi.pullback_scalar(anchors[b].coeffs[j]) for b, d in enumerate(psi.matrix[p])), ZERO))
            for j in range(phi.target.dim)
        ]
        ok = all(scalar(u - v) == 0 for u, v in zip(moved, image))
        report.record("anchor", ok, section=p, pushed=[render(c) for c in moved], image=[render(c) for c in image])
    kp = target.k
    structure = {}
    for b in range(kp):
        for c in range(kp):
            if b == c:
                structure[(b, c)] = (ZERO,) * kp
            elif b < c:
                structure[(b, c)] = tuple(phi.pullback_scalar(v) for v in closure_solve(nabla_prime, b, c))
                structure[(c, b)] = tuple(-v for v in structure[(b, c)])
    D = psi.matrix
    for p in range(source.k):
        for q in range(p + 1, source.k):
            lhs = psi.apply(closure_solve(nabla, p, q))
            a_p = R.source.anchor(source.sections[p])
            a_q = R.source.anchor(source.sections[q])
            rhs = [ZERO] * kp
            for b in range(kp):
                for c in range(kp):
                    w = D[p][b] * D[q][c]
                    if w != 0:
                        rhs = [x + w * y for x, y in zip(rhs, structure[(b, c)])]
            for c in range(kp):
                rhs[c] += a_p(D[q][c]) - a_q(D[p][c])
            residual = [scalar(x - y) for x, y in zip(lhs, rhs)]
            report.record("bracket", all(v == 0 for v in residual), pair=[p, q], residual=[render(v) for v in residual])
    return report


def fiberwise_lie_morphism(psi: MorphismMap, nabla: PseudoConnection, nabla_prime: PseudoConnection) -> VerificationReport:
    """Ψ on a bundle of Lie algebras: anchors vanish and Ψ is a morphism at every fiber."""
    report = VerificationReport(f"fiberwise morphism {psi.source.name} -> {psi.target.name}")
    for p, s in enumerate(psi.source.sections):
        X = nabla.backend.anchor(s)
        report.record("anchor_zero", X.is_zero(), section=p, anchor=X)
    return report.merge(morphism_check(psi, nabla, nabla_prime))


def relocate_connection(nabla: PseudoConnection, chart: Chart) -> PseudoConnection:
    backend = relocate(nabla.backend, chart)
    mapping = relabel(nabla.chart, chart)
    frame = SubbundleFrame(backend, [relocate_section(s, backend) for s in nabla.frame.sections], nabla.frame.name)
    A = [[a.substitute(mapping, chart) for a in row] for row in nabla.A]
    return PseudoConnection(frame, A, nabla.name)


def _embed_form(form: KForm, chart: Chart, offset: int) -> KForm:
    return KForm(chart, form.degree, {tuple(i + offset for i in key): c for key, c in form.terms.items()})


def product_connection(first: PseudoConnection, second: PseudoConnection) -> PseudoConnection:
    """W1 × W2 in E1 × E2 with ∇1 ⊕ ∇2."""
    backend = ProductBackend(first.backend, second.backend)
    chart = backend.chart
    sections = [backend.embed(s, 0) for s in first.frame.sections] + [backend.embed(s, 1) for s in second.frame.sections]
    frame = SubbundleFrame(backend, sections, f"{first.frame.name}x{second.frame.name}")
    k1, k2 = first.frame.k, second.frame.k
    offset = first.chart.dim
    zero = KForm.zero(chart, 1)
    A = []
    for i in range(k1):
        A.append([_embed_form(a, chart, 0) for a in first.A[i]] + [zero] * k2)
    for i in range(k2):
        A.append([zero] * k1 + [_embed_form(a, chart, offset) for a in second.A[i]])
    return PseudoConnection(frame, A, f"{first.name}+{second.name}")


def _require_complementary(nabla_e: PseudoConnection, nabla_f: PseudoConnection, points: Optional[Sequence] = None):
    backend = nabla_e.backend
    backend.require(nabla_f.backend)
    rows = list(nabla_e.frame.rows) + list(nabla_f.frame.rows)
    n = backend.rank
    if len(rows) != n or rank(rows, n) != n:
        raise PreconditionError(f"{nabla_e.frame.name} and {nabla_f.frame.name} are not complementary")
    avoid = [c for row in rows for c in row]
    for point in points if points is not None else sample_points(backend.chart, avoid=avoid):
        local = [tuple(evaluate(c, backend.chart, point) for c in row) for row in rows]
        if rank(local, n) != n:
            raise PreconditionError(
                f"{nabla_e.frame.name} and {nabla_f.frame.name} meet at {tuple(str(v) for v in point)}"
            )
    return SpanSolver(rows, n)


def transverse_pair(nabla_e: PseudoConnection, nabla_f: PseudoConnection, points: Optional[Sequence] = None) -> PseudoConnection:
    """(W, ∇) on TM ⊕ T*M from complementary (E, ∇^E) and (F, ∇^F).

    With a*dx_k = x_k − y_k, x_k ∈ E, y_k ∈ F: W is spanned by
    (a(x_k), dx_k) and ⟨∇σ_k, σ_l⟩ = ⟨∇^E x_k, x_l⟩ − ⟨∇^F y_k, y_l⟩.
    """
    solver = _require_complementary(nabla_e, nabla_f, points)
    backend = nabla_e.backend
    chart = backend.chart
    exact = ExactBackend(chart)
    ke = nabla_e.frame.k
    xs, ys, sections = [], [], []
    for k in range(chart.dim):
        dx = KForm.coordinate(chart, k)
        coeffs = solver.solve(backend.coanchor(dx).coeffs)
        x, y = coeffs[:ke], tuple(-c for c in coeffs[ke:])
        xs.append(x)
        ys.append(y)
        sections.append(exact.make(backend.anchor(nabla_e.frame.combine(x)), dx))
    frame = SubbundleFrame(exact, sections, f"W({nabla_e.frame.name},{nabla_f.frame.name})")
    bar_f = conjugate_connection(nabla_f)
    A = [[nabla_e.pair(xs[k], xs[l]) + bar_f.pair(ys[k], ys[l]) for l in range(chart.dim)] for k in range(chart.dim)]
    return PseudoConnection(frame, A, f"transverse({nabla_e.name},{nabla_f.name})")


def transverse_target(nabla_e: PseudoConnection, nabla_f: PseudoConnection) -> PseudoConnection:
    """(E × F, ∇^E ⊕ −∇^F) in E × Ē, the second factor on renamed coordinates."""
    chart = nabla_f.chart
    second = relocate_connection(conjugate_connection(nabla_f), chart.copy("_2"))
    return product_connection(nabla_e, second)


def check_transverse_pair(
    nabla_e: PseudoConnection, nabla_f: PseudoConnection, points: Optional[Sequence] = None
) -> VerificationReport:
    """The closed form against the backward image along the diagonal morphism."""

    closed = transverse_pair(nabla_e, nabla_f, points)
    R = diagonal_morphism(nabla_e.backend)
    target = transverse_target(nabla_e, nabla_f)
    generic, psi = backward_image(R, target, points)
    report = VerificationReport(f"transverse pair ({nabla_e.frame.name}, {nabla_f.frame.name})")
    report.record("backward_image_agrees", same_structure(closed, generic), closed=closed.render(), generic=generic.render())
    report.merge(morphism_check(psi, generic, target), "psi.")
    backend = nabla_e.backend
    chart = backend.chart
    ambient = LinSpace(chart.dim)
    avoid = [c for s in closed.frame.sections for c in s.coeffs]
    for point in points if points is not None else sample_points(chart, avoid=avoid):
        leaves = []
        for nabla in (nabla_e, nabla_f):
            vectors = [tuple(evaluate(c, chart, point) for c in backend.anchor(s).coeffs) for s in nabla.frame.sections]
            leaves.append(Subspace(ambient, vectors))
        for k, s in enumerate(closed.frame.sections):
            v = tuple(evaluate(c, chart, point) for c in closed.backend.anchor(s).coeffs)
            ok = leaves[0].contains(v) and leaves[1].contains(v)
            report.record("leaf_compatible", ok, point=[str(x) for x in point], section=k)
    return report


def dual_basis(basis: Sequence[Sequence], complement: SubalgebraSpec) -> List[Coeffs]:
    """Basis of complement⊥ dual to ``basis`` under the metric."""
    if not basis:
        return []
    d = complement.algebra
    g = d.metric_form()
    perp = orth_complement(complement.subspace, g).basis
    if len(perp) != len(basis):
        raise PreconditionError("dual basis needs complementary dimensions")
    M = sympy.Matrix(len(perp), len(basis), lambda i, j: g(perp[i], basis[j]))
    C = M.inv()
    return [
        tuple(scalar(sum((C[m, i] * perp[m][c] for m in range(len(perp))), ZERO)) for c in range(d.dim))
        for i in range(len(basis))
    ]


def _decomposition_preconditions(backend: ActionBackend, e: SubalgebraSpec, f: SubalgebraSpec, points):
    if not check_matched_pair(e, f):
        raise PreconditionError(f"{e.name} and {f.name} do not form a matched pair")
    if backend.chart.dim:
        points = points if points is not None else sample_points(backend.chart)
        stabilizers = coisotropic_stabilizers(backend, points)
        if not stabilizers.passed:
            raise PreconditionError(f"stabilizers of {backend!r} are not coisotropic")


def action_decomposition(
    backend: ActionBackend, e: SubalgebraSpec, f: SubalgebraSpec, points: Optional[Sequence] = None
) -> PseudoConnection:
    """(W, ∇) on TM ⊕ T*M from a matched pair d = e ⊕ f acting on M."""
    _decomposition_preconditions(backend, e, f, points)
    return transverse_pair(action_subalgebra(backend, e), action_subalgebra(backend, f), points)


def action_decomposition_formula(
    backend: ActionBackend, e: SubalgebraSpec, f: SubalgebraSpec, points: Optional[Sequence] = None
) -> PseudoConnection:
    """Closed form in dual bases: W = {(Σ ρ(e_i) μ(ρ(e^i)), μ)} and

    ⟨∇dx_k, dx_l⟩ = Σ d(ρ(e^i)_k) ρ(ẽ_i)_l − Σ d(ρ(f^i)_k) ρ(f̃_i)_l.
    """
    _decomposition_preconditions(backend, e, f, points)
    d = backend.algebra
    chart = backend.chart
    exact = ExactBackend(chart)

    def rho(x):
        return backend.anchor(backend.section(x))

    def tilde(basis, duals):
        return [
            tuple(sum((duals[j][c] * d.pair(basis[j], basis[i]) for j in range(len(basis))), ZERO) for c in range(d.dim))
            for i in range(len(basis))
        ]

    e_basis, f_basis = list(e.basis), list(f.basis)
    e_dual, f_dual = dual_basis(e_basis, f), dual_basis(f_basis, e)
    e_tilde, f_tilde = tilde(e_basis, e_dual), tilde(f_basis, f_dual)
    sections = []
    for k in range(chart.dim):
        X = VectorField.zero(chart)
        for ei, edual in zip(e_basis, e_dual):
            X = X + rho(ei).scale(rho(edual).coeffs[k])
        sections.append(exact.make(X, KForm.coordinate(chart, k)))
    frame = SubbundleFrame(exact, sections, f"W({e.name},{f.name})")
    A = []
    for k in range(chart.dim):
        row = []
        for l in range(chart.dim):
            entry = KForm.zero(chart, 1)
            for dual, tl in zip(e_dual, e_tilde):
                entry = entry + differential(chart, rho(dual).coeffs[k]).scale(rho(tl).coeffs[l])
            for dual, tl in zip(f_dual, f_tilde):
                entry = entry - differential(chart, rho(dual).coeffs[k]).scale(rho(tl).coeffs[l])
            row.append(entry)
        A.append(row)
    return PseudoConnection(frame, A, f"decomposition({e.name},{f.name})")


def check_fiber_composition(
    R: CourantRelation, nabla: PseudoConnection, nabla_prime: PseudoConnection, points: Optional[Sequence] = None
) -> VerificationReport:
    """W at each sample point against the linear composition Rᵀ∘W′."""
    report = VerificationReport(f"fiberwise composition {nabla_prime.frame.name}∘{R.name}")
    w_rows = _pulled_rows(R, nabla_prime.frame)
    chart = R.chart
    extra = [c for row in w_rows for c in row] + [c for row in nabla.frame.rows for c in row]
    for point in _sample(R, extra, points):
        w_prime = LinearRelation.from_pairs(
            0, R.target.rank, [(tuple(evaluate(c, chart, point) for c in row), ()) for row in w_rows]
        )
        composed = compose(R.fiber_relation(point).transpose(), w_prime).relation
        local = LinearRelation.from_pairs(
            0, R.source.rank, [(tuple(evaluate(c, chart, point) for c in row), ()) for row in nabla.frame.rows]
        )
        report.record("fiber_composition", composed == local, point=[str(v) for v in point], dim=composed.dim)
    return report


def q_poisson(
    backend: ActionBackend, g: SubalgebraSpec, h: SubalgebraSpec, points: Optional[Sequence] = None
) -> Tuple[PseudoConnection, MorphismMap, CourantRelation, PseudoConnection]:
    """F = h∘R for the Manin pair morphism R of (d, g) and a subalgebra h transverse to g."""
    if not check_subalgebra(h):
        raise PreconditionError(f"{h.name} is not a subalgebra")
    n = backend.algebra.dim
    if g.dim + h.dim != n or (g.subspace + h.subspace).dim != n:
        raise PreconditionError(f"{h.name} is not transverse to {g.name}")
    R = manin_pair_morphism(backend, g)
    point_backend = R.target
    frame = SubbundleFrame(point_backend, [point_backend.section(v) for v in h.basis], h.name)
    target = PseudoConnection.zero(frame, "flat")
    nabla, psi = backward_image(R, target, points)
    return nabla, psi, R, target
