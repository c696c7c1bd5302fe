"""Quadratic Lie algebras given by structure constants and an invariant metric."""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import sympy

from .errors import DegenerateFormError, DimensionMismatchError, PreconditionError
from .exactcalc import ONE, ZERO, Rational, render, scalar
from .linalgrel import BilForm, LinSpace, Subspace, is_isotropic, is_lagrangian
from .report import VerificationReport

logger = logging.getLogger(__name__)


class QuadLieAlgebra:
    """A Lie algebra with basis ``labels``, dense structure constants and metric.

    ``structure[i][j]`` is the coordinate vector of [e_i, e_j]. Nothing is
    assumed about the data; ``verify_quadlie`` checks the axioms.
    """

    def __init__(self, labels: Sequence[str], structure, metric, name: str = ""):
        self.labels = tuple(labels)
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError(f"algebra labels repeat: {self.labels}")
        self.structure = tuple(
            tuple(tuple(Rational(c) for c in structure[i][j]) for j in range(n)) for i in range(n)
        )
        if any(len(v) != n for row in self.structure for v in row):
            raise DimensionMismatchError("structure constants must be an n x n x n array")
        self.metric = sympy.Matrix(metric).applyfunc(Rational)
        if self.metric.shape != (n, n):
            raise DimensionMismatchError(f"metric must be {n}x{n}")
        self.name = name or "algebra"
        self._inverse = None

    @classmethod
    def from_brackets(cls, labels: Sequence[str], brackets, metric, name: str = "") -> "QuadLieAlgebra":
        """Build from entries ``(i, j, {k: coeff})`` keyed by label.

        The entry for (j, i) is filled in by antisymmetry unless it is given
        explicitly as well.
        """
        labels = tuple(labels)
        n = len(labels)
        index = {l: k for k, l in enumerate(labels)}
        given: Dict[Tuple[int, int], List[Rational]] = {}
        for left, right, coeffs in brackets:
            i, j = index[left], index[right]
            vector = [ZERO] * n
            for label, c in coeffs.items():
                vector[index[label]] = Rational(c)
            given[(i, j)] = vector
        structure = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
        for (i, j), vector in given.items():
            structure[i][j] = vector
            if (j, i) not in given:
                structure[j][i] = [-c for c in vector]
        return cls(labels, structure, metric, name)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def basis_vector(self, i: int) -> Tuple[Rational, ...]:
        return tuple(ONE if k == i else ZERO for k in range(self.dim))

    def element(self, coeffs: Dict[str, object]) -> Tuple[Rational, ...]:
        vector = [ZERO] * self.dim
        for label, c in coeffs.items():
            vector[self.index(label)] = Rational(c)
        return tuple(vector)

    def bracket(self, x: Sequence, y: Sequence) -> Tuple:
        n = self.dim
        out = [ZERO] * n
        for i in range(n):
            if x[i] == 0:
                continue
            for j in range(n):
                if y[j] == 0:
                    continue
                for k, c in enumerate(self.structure[i][j]):
                    if c != 0:
                        out[k] += x[i] * y[j] * c
        return tuple(scalar(v) for v in out)

    def pair(self, x: Sequence, y: Sequence) -> sympy.Expr:
        return self.metric_form()(x, y)

    def metric_form(self) -> BilForm:
        return BilForm(self.metric)

    def ad(self, x: Sequence) -> sympy.Matrix:
        columns = [self.bracket(x, self.basis_vector(j)) for j in range(self.dim)]
        return sympy.Matrix(self.dim, self.dim, lambda i, j: columns[j][i])

    def lower(self, x: Sequence) -> Tuple:
        """The covector ⟨x, ·⟩ in the dual basis."""
        return tuple(scalar(v) for v in self.metric * sympy.Matrix(list(x)))

    def raise_(self, covector: Sequence) -> Tuple:
        """The element x with ⟨x, e_i⟩ = covector_i."""
        if self._inverse is None:
            if self.metric.det() == 0:
                raise DegenerateFormError(f"metric of {self.name} is degenerate")
            self._inverse = self.metric.inv()
        return tuple(scalar(v) for v in self._inverse * sympy.Matrix(list(covector)))

    def render(self, x: Sequence) -> str:
        parts = [f"({render(c)})*{l}" for c, l in zip(x, self.labels) if scalar(c) != 0]
        return " + ".join(parts) or "0"

    def __repr__(self):
        return f"QuadLieAlgebra({self.name}, {self.labels})"


def verify_quadlie(d: QuadLieAlgebra) -> VerificationReport:
    report = VerificationReport(f"quadratic Lie algebra {d.name}")
    n = d.dim
    labels = d.labels
    g = d.metric
    for i in range(n):
        for j in range(i + 1):
            residual = tuple(a + b for a, b in zip(d.structure[i][j], d.structure[j][i]))
            report.record(
                "antisymmetry",
                all(r == 0 for r in residual),
                triple=[labels[i], labels[j]],
                residual=d.render(residual),
            )
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                x, y, z = d.basis_vector(i), d.basis_vector(j), d.basis_vector(k)
                total = [ZERO] * n
                for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
                    term = d.bracket(a, d.bracket(b, c))
                    total = [s + t for s, t in zip(total, term)]
                report.record(
                    "jacobi",
                    all(scalar(t) == 0 for t in total),
                    triple=[labels[i], labels[j], labels[k]],
                    residual=d.render(total),
                )
    report.record(
        "metric_symmetric",
        all(g[i, j] == g[j, i] for i in range(n) for j in range(i)),
        metric=[[str(g[i, j]) for j in range(n)] for i in range(n)],
    )
    report.record("nondegeneracy", n == 0 or g.det() != 0, determinant=str(g.det() if n else 1))
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                x, y, z = d.basis_vector(i), d.basis_vector(j), d.basis_vector(k)
                value = scalar(
                    _pair(g, d.bracket(x, y), z) + _pair(g, y, d.bracket(x, z))
                )
                report.record(
                    "invariance",
                    value == 0,
                    triple=[labels[i], labels[j], labels[k]],
                    residual=render(value),
                )
    logger.debug(f"verified {d.name}: {report.checked} identities, {len(report.failures)} failures")
    return report


def _pair(g, x, y):
    n = g.rows
    return sum((x[i] * g[i, j] * y[j] for i in range(n) for j in range(n)), ZERO)


def double(d: QuadLieAlgebra) -> QuadLieAlgebra:
    """The semidirect double d⋉d; basis (l_T for the first copy, l_C for the second)."""
    n = d.dim
    labels = tuple(f"{l}_T" for l in d.labels) + tuple(f"{l}_C" for l in d.labels)
    structure = [[[ZERO] * (2 * n) for _ in range(2 * n)] for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            c = d.structure[i][j]
            for k in range(n):
                # [(ξ,0),(η,0)] = ([ξ,η],0); [(ξ,0),(0,η)] = (0,[ξ,η]); core copy abelian
                structure[i][j][k] = c[k]
                structure[i][n + j][n + k] = c[k]
                structure[n + i][j][n + k] = c[k]
    metric = sympy.zeros(2 * n, 2 * n)
    metric[:n, n:] = d.metric
    metric[n:, :n] = d.metric
    return QuadLieAlgebra(labels, structure, metric, f"T({d.name})")


def sl2() -> QuadLieAlgebra:
    """sl2 with basis e, h, f and the trace form."""
    brackets = [
        ("h", "e", {"e": 2}),
        ("h", "f", {"f": -2}),
        ("e", "f", {"h": 1}),
    ]
    metric = [[0, 0, 1], [0, 2, 0], [1, 0, 0]]
    return QuadLieAlgebra.from_brackets(("e", "h", "f"), brackets, metric, "sl2")


def abelian(metric, labels: Optional[Sequence[str]] = None, name: str = "abelian") -> QuadLieAlgebra:
    metric = sympy.Matrix(metric)
    n = metric.rows
    labels = tuple(labels) if labels else tuple(f"e{i + 1}" for i in range(n))
    structure = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    return QuadLieAlgebra(labels, structure, metric, name)


def semidirect_dual(labels: Sequence[str], brackets, name: str = "") -> QuadLieAlgebra:
    """g⋉g* with the coadjoint action and the canonical split pairing.

    Dual basis elements are labelled ``<label>*``.
    """
    labels = tuple(labels)
    m = len(labels)
    base = QuadLieAlgebra.from_brackets(labels, brackets, sympy.eye(m))
    n = 2 * m
    structure = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for i in range(m):
        for j in range(m):
            c = base.structure[i][j]
            for k in range(m):
                structure[i][j][k] = c[k]
            # ad*_{x_i} ξ^j = -Σ_k c_ik^j ξ^k
            for k in range(m):
                value = -base.structure[i][k][j]
                structure[i][m + j][m + k] = value
                structure[m + j][i][m + k] = -value
    metric = sympy.zeros(n, n)
    metric[:m, m:] = sympy.eye(m)
    metric[m:, :m] = sympy.eye(m)
    duals = tuple(f"{l}*" for l in labels)
    return QuadLieAlgebra(labels + duals, structure, metric, name or f"({','.join(labels)})+dual")


def direct_sum(k: QuadLieAlgebra, conjugate: bool = True) -> QuadLieAlgebra:
    """k ⊕ k with metric g ⊕ (−g) when ``conjugate``, otherwise g ⊕ g."""
    n = k.dim
    labels = tuple(f"{l}_1" for l in k.labels) + tuple(f"{l}_2" for l in k.labels)
    structure = [[[ZERO] * (2 * n) for _ in range(2 * n)] for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            for c_idx, c in enumerate(k.structure[i][j]):
                structure[i][j][c_idx] = c
                structure[n + i][n + j][n + c_idx] = c
    metric = sympy.diag(k.metric, -k.metric if conjugate else k.metric)
    return QuadLieAlgebra(labels, structure, metric, f"{k.name}+{k.name}{'bar' if conjugate else ''}")


class SubalgebraSpec:
    """A subspace of a quadratic Lie algebra given by spanning vectors."""

    def __init__(self, algebra: QuadLieAlgebra, vectors: Iterable[Sequence], name: str = ""):
        self.algebra = algebra
        self.subspace = Subspace(LinSpace(algebra.dim), [tuple(Rational(c) for c in v) for v in vectors])
        self.name = name or "subspace"

    @classmethod
    def from_labels(cls, algebra: QuadLieAlgebra, elements: Sequence[Dict[str, object]], name: str = ""):
        return cls(algebra, [algebra.element(e) for e in elements], name)

    @property
    def basis(self) -> Tuple[Tuple, ...]:
        return self.subspace.basis

    @property
    def dim(self) -> int:
        return self.subspace.dim

    def contains(self, x: Sequence) -> bool:
        return self.subspace.contains(x)

    def __repr__(self):
        return f"SubalgebraSpec({self.name}, dim={self.dim} in {self.algebra.name})"


def check_subalgebra(s: SubalgebraSpec) -> bool:
    basis = s.basis
    for i, x in enumerate(basis):
        for y in basis[i + 1 :]:
            if not s.contains(s.algebra.bracket(x, y)):
                logger.debug(f"{s.name} not closed: [{s.algebra.render(x)}, {s.algebra.render(y)}]")
                return False
    return True


def is_ideal(s: SubalgebraSpec) -> bool:
    d = s.algebra
    return all(
        s.contains(d.bracket(d.basis_vector(i), x)) for i in range(d.dim) for x in s.basis
    )


def is_isotropic_subalgebra(s: SubalgebraSpec) -> bool:
    return check_subalgebra(s) and is_isotropic(s.subspace, s.algebra.metric_form())


def is_lagrangian_subalgebra(s: SubalgebraSpec) -> bool:
    return check_subalgebra(s) and is_lagrangian(s.subspace, s.algebra.metric_form())


def check_matched_pair(e: SubalgebraSpec, f: SubalgebraSpec) -> bool:
    if e.algebra is not f.algebra:
        raise PreconditionError("matched pair components must live in the same algebra")
    if not (check_subalgebra(e) and check_subalgebra(f)):
        return False
    n = e.algebra.dim
    return e.dim + f.dim == n and (e.subspace + f.subspace).dim == n


def complement_projection(e: SubalgebraSpec, f: SubalgebraSpec):
    """Projections onto e and f along the direct sum d = e ⊕ f.

    Returns ``(proj_e, proj_f)`` as functions of an algebra vector.
    """
    n = e.algebra.dim
    if e.dim + f.dim != n or (e.subspace + f.subspace).dim != n:
        raise PreconditionError(f"{e.name} and {f.name} are not complementary")
    basis = list(e.basis) + list(f.basis)
    matrix = sympy.Matrix(basis).T
    inverse = matrix.inv()

    def split(x):
        coeffs = inverse * sympy.Matrix(list(x))
        pe = [ZERO] * e.algebra.dim
        pf = [ZERO] * e.algebra.dim
        for idx, vec in enumerate(basis):
            target = pe if idx < e.dim else pf
            for k, c in enumerate(vec):
                target[k] += coeffs[idx] * c
        return tuple(scalar(v) for v in pe), tuple(scalar(v) for v in pf)

    return (lambda x: split(x)[0]), (lambda x: split(x)[1])
