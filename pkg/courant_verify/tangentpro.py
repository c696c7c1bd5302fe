"""The tangent prolongation TE → TM and VB-Dirac structures built from (W, ∇).

Sections of TE are coefficient tuples over the frame of the prolonged
backend. Every frame element e_i of E has a tangent lift (e_i)_T and a core
lift (e_i)_C which are themselves frame elements of TE, so lifts of general
sections follow from

    (Σ f^i e_i)_T = Σ (f^i_C (e_i)_T + f^i_T (e_i)_C),
    (Σ f^i e_i)_C = Σ f^i_C (e_i)_C.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import sympy

from .courantcore import (
    ActionBackend,
    ConjugateBackend,
    CourantBackend,
    ExactBackend,
    PointBackend,
    Section,
    conjugate,
    default_trials,
    default_test_function,
)
from .errors import PreconditionError, RankDropError
from .exactcalc import (
    CORE,
    POINT,
    TANGENT,
    ZERO,
    Chart,
    KForm,
    Scalar,
    TangentChart,
    VectorField,
    evaluate,
    lift_form,
    lift_function,
    lift_vf,
    render,
    scalar,
)
from .linalgrel import LinSpace, Subspace, rank
from .pseudodirac import PseudoConnection, SubbundleFrame, check_metric_compatibility, is_pseudo_dirac
from .quadlie import double
from .report import VerificationReport
from .utils import sample_points

logger = logging.getLogger(__name__)

FORWARD = "forward"
REVERSE = "reverse"


class TangentProlongation:
    """TE for an exact, action, point or conjugate backend E."""

    def __init__(self, base: CourantBackend):
        self.base = base
        n = base.rank
        if isinstance(base, ConjugateBackend):
            inner = TangentProlongation(base.base)
            self.tangent = conjugate(inner.tangent)
            self.tangent_index = inner.tangent_index
            self.core_index = inner.core_index
        elif isinstance(base, ExactBackend):
            m = base.chart.dim
            gamma = lift_form(base.gamma, TANGENT)
            self.tangent = ExactBackend(TangentChart.over(base.chart), gamma, check_closed=False)
            # frame of TE: d/dx, d/dv, dx, dv
            self.tangent_index = tuple(range(m)) + tuple(3 * m + i for i in range(m))
            self.core_index = tuple(m + i for i in range(m)) + tuple(2 * m + i for i in range(m))
        elif isinstance(base, PointBackend):
            self.tangent = PointBackend(double(base.algebra))
            self.tangent_index = tuple(range(n))
            self.core_index = tuple(n + i for i in range(n))
        elif isinstance(base, ActionBackend):
            chart = TangentChart.over(base.chart)
            rho = [lift_vf(X, TANGENT) for X in base.rho] + [lift_vf(X, CORE) for X in base.rho]
            self.tangent = ActionBackend(chart, double(base.algebra), rho)
            self.tangent_index = tuple(range(n))
            self.core_index = tuple(n + i for i in range(n))
        else:
            raise PreconditionError(f"no tangent prolongation for {base!r}")
        logger.debug(f"prolonged {base!r} to {self.tangent!r}")

    @property
    def chart(self) -> Chart:
        return self.tangent.chart

    @property
    def base_chart(self) -> Chart:
        return self.base.chart

    @property
    def fiber_symbols(self) -> Tuple[sympy.Symbol, ...]:
        if isinstance(self.chart, TangentChart):
            return self.chart.fiber_symbols
        return ()

    def lift_scalar(self, f, mode: str) -> Scalar:
        if self.base_chart.dim == 0:
            return scalar(f) if mode == CORE else ZERO
        return lift_function(f, self.base_chart, mode)

    def lift_vector_field(self, X: VectorField, mode: str) -> VectorField:
        if self.base_chart.dim == 0:
            return VectorField.zero(POINT)
        return lift_vf(X, mode)

    def lift(self, sigma: Section, mode: str) -> Section:
        """σ_T for ``mode`` TANGENT, σ_C for ``mode`` CORE."""
        self.base.require(sigma.backend)
        out = [ZERO] * self.tangent.rank
        for i, f in enumerate(sigma.coeffs):
            if f == 0:
                continue
            if mode == TANGENT:
                out[self.tangent_index[i]] += self.lift_scalar(f, CORE)
                out[self.core_index[i]] += self.lift_scalar(f, TANGENT)
            elif mode == CORE:
                out[self.core_index[i]] += self.lift_scalar(f, CORE)
            else:
                raise ValueError(f"unknown lift mode {mode!r}")
        return Section(self.tangent, tuple(out))

    def decompose(self, xi: Section) -> Tuple[Tuple[Scalar, ...], Tuple[Scalar, ...]]:
        """Coefficients (a, b) with ξ = Σ a^i (e_i)_T + b^i (e_i)_C."""
        self.tangent.require(xi.backend)
        a = tuple(xi.coeffs[p] for p in self.tangent_index)
        b = tuple(xi.coeffs[p] for p in self.core_index)
        return a, b

    def side_projection(self, xi: Section) -> Section:
        """The section of E under a linear section of TE (tangent part at v = 0)."""
        a, _ = self.decompose(xi)
        zero_fiber = {v: ZERO for v in self.fiber_symbols}
        return Section(self.base, tuple(scalar(c.xreplace(zero_fiber)) for c in a))

    def core_injection(self, sigma_prime: Sequence[Section]) -> Section:
        """ι(σ′) = Σ_k v_k (s_k)_C for σ′ = Σ_k dx_k ⊗ s_k."""
        fiber = self.fiber_symbols
        if len(sigma_prime) != len(fiber):
            raise PreconditionError(f"σ′ needs one section per coordinate, got {len(sigma_prime)}")
        result = self.tangent.zero()
        for v, s in zip(fiber, sigma_prime):
            result = result + self.lift(s, CORE).scale(v)
        return result

    def linear_section(self, sigma: Section, sigma_prime: Sequence[Section]) -> Section:
        """ι(σ′) + σ_T."""
        return self.lift(sigma, TANGENT) + self.core_injection(sigma_prime)

    def __repr__(self):
        return f"TangentProlongation({self.base!r})"


def verify_lift_calculus(
    prolongation: TangentProlongation, trials: Optional[Sequence[Section]] = None, f=None
) -> VerificationReport:
    """Pairings, brackets and anchors of tangent and core lifts on trial pairs."""
    base = prolongation.base
    tangent = prolongation.tangent
    trials = list(trials) if trials is not None else default_trials(base)
    f = scalar(f) if f is not None else default_test_function(base.chart)
    report = VerificationReport(f"lift calculus of {base!r}")
    lift = prolongation.lift
    lift_scalar = prolongation.lift_scalar
    T = {id(p): lift(p, TANGENT) for p in trials}
    C = {id(p): lift(p, CORE) for p in trials}
    for sigma in trials:
        sT, sC = T[id(sigma)], C[id(sigma)]
        X = base.anchor(sigma)
        residual = tangent.anchor(sT) - prolongation.lift_vector_field(X, TANGENT)
        report.record("anchor_T", residual.is_zero(), section=sigma, residual=residual)
        residual = tangent.anchor(sC) - prolongation.lift_vector_field(X, CORE)
        report.record("anchor_C", residual.is_zero(), section=sigma, residual=residual)
        expected = lift(sigma, CORE).scale(lift_scalar(f, TANGENT)) + lift(sigma, TANGENT).scale(lift_scalar(f, CORE))
        residual = lift(sigma.scale(f), TANGENT) - expected
        report.record("lift_leibniz", residual.is_zero(), section=sigma, function=render(f), residual=residual)
        for tau in trials:
            tT, tC = T[id(tau)], C[id(tau)]
            pair = [sigma, tau]
            value = base.pairing(sigma, tau)
            for name, lhs, rhs in (
                ("pair_TT", tangent.pairing(sT, tT), lift_scalar(value, TANGENT)),
                ("pair_TC", tangent.pairing(sT, tC), lift_scalar(value, CORE)),
                ("pair_CT", tangent.pairing(sC, tT), lift_scalar(value, CORE)),
                ("pair_CC", tangent.pairing(sC, tC), ZERO),
            ):
                residual = scalar(lhs - rhs)
                report.record(name, residual == 0, sections=pair, residual=render(residual))
            bracket = base.dorfman(sigma, tau)
            for name, lhs, rhs in (
                ("bracket_TT", tangent.dorfman(sT, tT), lift(bracket, TANGENT)),
                ("bracket_TC", tangent.dorfman(sT, tC), lift(bracket, CORE)),
                ("bracket_CT", tangent.dorfman(sC, tT), lift(bracket, CORE)),
                ("bracket_CC", tangent.dorfman(sC, tC), tangent.zero()),
            ):
                residual = lhs - rhs
                report.record(name, residual.is_zero(), sections=pair, residual=residual)
    logger.info(f"{report.subject}: {report.checked} identities, {len(report.failures)} failures")
    return report


def check_linear_bracket(
    prolongation: TangentProlongation,
    sigma: Section,
    sigma_prime: Sequence[Section],
    tau: Section,
    tau_prime: Sequence[Section],
) -> VerificationReport:
    """Side projection of ⟦ισ′ + σ_T, ιτ′ + τ_T⟧ against ⟦σ,τ⟧ + a*⟨σ′,τ⟩."""
    base = prolongation.base
    chart = base.chart
    bracket = prolongation.tangent.dorfman(
        prolongation.linear_section(sigma, sigma_prime), prolongation.linear_section(tau, tau_prime)
    )
    projected = prolongation.side_projection(bracket)
    pairing = KForm.one_form(chart, [base.pairing(s, tau) for s in sigma_prime])
    expected = base.dorfman(sigma, tau) + base.coanchor(pairing)
    residual = projected - expected
    report = VerificationReport(f"linear section bracket on {base!r}")
    report.record("linear_bracket", residual.is_zero(), sections=[sigma, tau], residual=residual)
    return report


def _complement(frame: SubbundleFrame, order: str) -> List[int]:
    """Frame indices of E completing W to a frame, chosen greedily."""
    backend = frame.backend
    n = backend.rank
    indices = range(n) if order == FORWARD else range(n - 1, -1, -1)
    rows = list(frame.rows)
    chosen = []
    for m in indices:
        if len(rows) == n:
            break
        candidate = rows + [backend.frame(m).coeffs]
        if rank(candidate, n) == len(candidate):
            rows = candidate
            chosen.append(m)
    if len(rows) != n:
        raise RankDropError(f"could not complete {frame.name} to a frame of {backend!r}")
    return chosen


class VBDiracFrame:
    """The Lagrangian subbundle L ⊂ TE attached to (W, ∇).

    ``linear`` holds the sections σ̃_i = σ_{i,T} + ι(σ′_i) over the frame of W,
    ``core`` the core lifts of a frame of W⊥.
    """

    def __init__(self, prolongation: TangentProlongation, nabla: PseudoConnection, complement: str = FORWARD):
        self.prolongation = prolongation
        self.nabla = nabla
        self.order = complement
        frame = nabla.frame
        base = nabla.backend
        n = base.rank
        k = frame.k
        chart = base.chart
        self.complement = _complement(frame, complement)
        G = base.metric
        rows = [list(s.coeffs) for s in frame.sections] + [list(base.frame(m).coeffs) for m in self.complement]
        M = (sympy.Matrix(rows) * G).applyfunc(scalar)
        Minv = M.inv().applyfunc(scalar)
        # ⟨σ′_i(∂_k), σ_j⟩ = −A_ij(∂_k) and ⟨σ′_i(∂_k), c⟩ = 0 on the complement
        self.sigma_prime: List[List[Section]] = []
        for i in range(k):
            row = []
            for c in range(chart.dim):
                rhs = sympy.Matrix([-nabla.A[i][j].components[c] for j in range(k)] + [ZERO] * (n - k))
                row.append(Section(base, tuple(scalar(v) for v in Minv * rhs)))
            self.sigma_prime.append(row)
        self.linear = [
            prolongation.linear_section(s, self.sigma_prime[i]) for i, s in enumerate(frame.sections)
        ]
        self.perp = frame.perp_sections()
        self.core = [prolongation.lift(w, CORE) for w in self.perp]
        self.frame = SubbundleFrame(prolongation.tangent, self.linear + self.core, f"L({frame.name},{nabla.name})")
        self._along = None
        logger.debug(f"built {self.frame!r} with complement {self.complement}")

    @property
    def tangent(self) -> CourantBackend:
        return self.prolongation.tangent

    @property
    def sections(self) -> Tuple[Section, ...]:
        return self.frame.sections

    def along_w(self) -> SubbundleFrame:
        """The frame {σ̃_i} ∪ {(e_m)_C} of TE restricted along W."""
        if self._along is None:
            base = self.nabla.backend
            cores = [self.prolongation.lift(e, CORE) for e in base.frame_sections()]
            self._along = SubbundleFrame(self.tangent, self.linear + cores, f"T({self.nabla.frame.name})")
        return self._along

    def to_dict(self) -> dict:
        return {
            "subbundle": self.frame.name,
            "complement": [self.nabla.backend.labels[m] for m in self.complement],
            "linear": [s.render() for s in self.linear],
            "core": [s.render() for s in self.core],
        }

    def __repr__(self):
        return f"VBDiracFrame({self.frame.name}, rank={self.frame.k})"


def build_vb_dirac(nabla: PseudoConnection, complement: str = FORWARD) -> VBDiracFrame:
    compatibility = check_metric_compatibility(nabla)
    if not compatibility.passed:
        raise PreconditionError(f"{nabla.name} is not metric compatible")
    return VBDiracFrame(TangentProlongation(nabla.backend), nabla, complement)


def _points(L: VBDiracFrame, points: Optional[Sequence]) -> List:
    if points is not None:
        return list(points)
    avoid = [c for s in L.sections for c in s.coeffs]
    return sample_points(L.tangent.chart, avoid=avoid)


def check_lagrangian(L: VBDiracFrame, points: Optional[Sequence] = None) -> VerificationReport:
    report = VerificationReport(f"Lagrangian test of {L.frame.name}")
    tangent = L.tangent
    sections = L.sections
    for a in range(len(sections)):
        for b in range(a, len(sections)):
            value = tangent.pairing(sections[a], sections[b])
            report.record("isotropic", value == 0, pair=[a, b], value=render(value))
    report.record("half_rank", 2 * L.frame.k == tangent.rank, rank=L.frame.k, ambient=tangent.rank)
    L.frame.check_rank(_points(L, points))
    return report


def check_involutive(L: VBDiracFrame, points: Optional[Sequence] = None) -> VerificationReport:
    """Dorfman brackets of the frame of L solved back into L."""
    report = VerificationReport(f"involutivity of {L.frame.name}")
    tangent = L.tangent
    sections = L.sections
    for a in range(len(sections)):
        for b in range(a + 1, len(sections)):
            bracket = tangent.dorfman(sections[a], sections[b])
            coeffs = L.frame.solve(bracket)
            if coeffs is not None:
                report.record("involutive", True)
                continue
            error = L.frame.not_in_span(bracket, points)
            report.record(
                "involutive", False, pair=[a, b], point=error.point, covector=error.covector, residual=error.residual
            )
    return report


def quotient_qL(L: VBDiracFrame, xi: Section) -> Tuple[Scalar, ...]:
    """q_L(ξ) as the values against σ_1..σ_k of W."""
    along = L.along_w()
    coeffs = along.express(xi)
    k = L.nabla.frame.k
    base = L.nabla.backend
    h = coeffs[k:]
    G = base.metric
    values = []
    for s in L.nabla.frame.sections:
        lowered = G * sympy.Matrix(list(s.coeffs))
        values.append(scalar(sum((h[m] * lowered[m] for m in range(base.rank)), ZERO)))
    return tuple(values)


def extract_connection(L: VBDiracFrame, name: Optional[str] = None) -> PseudoConnection:
    """∇ recovered through ∇σ = q_L ∘ σ_T."""
    nabla = L.nabla
    frame = nabla.frame
    chart = frame.chart
    fiber = L.prolongation.fiber_symbols
    A = []
    for sigma in frame.sections:
        q = quotient_qL(L, L.prolongation.lift(sigma, TANGENT))
        row = []
        for value in q:
            coeffs = [scalar(sympy.diff(value, v)) for v in fiber]
            if any(c.free_symbols & set(fiber) for c in coeffs):
                raise PreconditionError(f"q_L of a tangent lift is not fiberwise linear: {render(value)}")
            row.append(KForm.one_form(chart, coeffs))
        A.append(row)
    return PseudoConnection(frame, A, name or f"extracted({nabla.name})")


def same_matrix(first: PseudoConnection, second: PseudoConnection) -> bool:
    return all(a == b for ra, rb in zip(first.A, second.A) for a, b in zip(ra, rb))


def check_lift_independence(nabla: PseudoConnection, points: Optional[Sequence] = None) -> VerificationReport:
    """L does not depend on the complement used to lift ∇σ_i."""
    first = build_vb_dirac(nabla, FORWARD)
    second = build_vb_dirac(nabla, REVERSE)
    report = VerificationReport(f"lift choice for {nabla.name}")
    for x, y, label in ((first, second, "reverse_in_forward"), (second, first, "forward_in_reverse")):
        missing = [s for s in y.sections if x.frame.solve(s) is None]
        report.record("span_equal", not missing, direction=label, missing=missing)
    chart = first.tangent.chart
    ambient = LinSpace(first.tangent.rank)
    for point in _points(first, points):
        spans = [
            Subspace(ambient, [tuple(evaluate(c, chart, point) for c in s.coeffs) for s in L.sections])
            for L in (first, second)
        ]
        report.record("pointwise_span", spans[0] == spans[1], point=[str(v) for v in point])
    return report


def check_correspondence(nabla: PseudoConnection, points: Optional[Sequence] = None) -> VerificationReport:
    """L Lagrangian, involutive exactly when (W, ∇) is pseudo-Dirac, and ∇ recoverable from L."""
    L = build_vb_dirac(nabla)
    report = VerificationReport(f"correspondence for ({nabla.frame.name}, {nabla.name})")
    report.merge(check_lagrangian(L, points), "lagrangian.")
    involutive = check_involutive(L, points)
    dirac = is_pseudo_dirac(nabla)
    report.details["involutive"] = involutive.passed
    report.details["pseudo_dirac"] = dirac.passed
    report.details["failed"] = {
        "involutive": involutive.failed_identities(),
        "pseudo_dirac": dirac.failed_identities(),
    }
    report.record(
        "equivalence",
        involutive.passed == dirac.passed,
        involutive=involutive.passed,
        pseudo_dirac=dirac.passed,
    )
    extracted = extract_connection(L)
    for i, (ra, rb) in enumerate(zip(nabla.A, extracted.A)):
        for j, (a, b) in enumerate(zip(ra, rb)):
            report.record("round_trip", a == b, entry=[i, j], expected=a, extracted=b)
    report.merge(check_lift_independence(nabla, points), "lift.")
    return report
