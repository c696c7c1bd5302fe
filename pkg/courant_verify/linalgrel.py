"""Exact linear algebra, subspaces, bilinear forms and linear relations.

Entries are exact scalars: ``sympy.Rational`` for fiber computations at a
point, or reduced rational functions of a chart when working over the
function field. Every subspace is stored by its reduced row echelon basis,
so equality of subspaces is a comparison of canonical data.
"""

import logging
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import sympy

from .errors import DegenerateFormError, DimensionMismatchError
from .exactcalc import ONE, ZERO, Chart, Scalar, scalar
from .report import VerificationReport

logger = logging.getLogger(__name__)

Vector = Tuple[Scalar, ...]


def _total_degree(entry: Scalar) -> int:
    symbols = sorted(entry.free_symbols, key=str)
    if not symbols:
        return 0
    numer, denom = sympy.fraction(entry)
    return sympy.Poly(numer, *symbols).total_degree() + sympy.Poly(denom, *symbols).total_degree()


def row_reduce(rows: Sequence[Sequence], ncols: int, track: bool = False):
    """Gauss-Jordan elimination to reduced row echelon form.

    Returns ``(reduced, pivots, transform)`` where ``reduced`` holds the
    nonzero rows, ``pivots`` their pivot columns and, when ``track`` is set,
    ``transform`` is the full matrix with ``transform @ rows`` equal to the
    reduced rows followed by zero rows. Pivot rows are chosen by lowest total
    degree to keep rational-function entries small.
    """
    work = [[scalar(x) for x in row] for row in rows]
    for row in work:
        if len(row) != ncols:
            raise DimensionMismatchError(f"row of length {len(row)} in a matrix with {ncols} columns")
    m = len(work)
    transform = [[ONE if i == j else ZERO for j in range(m)] for i in range(m)] if track else None
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r == m:
            break
        candidates = [i for i in range(r, m) if work[i][c] != 0]
        if not candidates:
            continue
        p = min(candidates, key=lambda i: (_total_degree(work[i][c]), i))
        work[r], work[p] = work[p], work[r]
        if track:
            transform[r], transform[p] = transform[p], transform[r]
        pivot = work[r][c]
        work[r] = [scalar(x / pivot) for x in work[r]]
        if track:
            transform[r] = [scalar(x / pivot) for x in transform[r]]
        for i in range(m):
            if i == r or work[i][c] == 0:
                continue
            factor = work[i][c]
            work[i] = [scalar(a - factor * b) for a, b in zip(work[i], work[r])]
            if track:
                transform[i] = [scalar(a - factor * b) for a, b in zip(transform[i], transform[r])]
        pivots.append(c)
        r += 1
    reduced = [tuple(row) for row in work[:r]]
    return reduced, pivots, transform


def rank(rows: Sequence[Sequence], ncols: int) -> int:
    return len(row_reduce(rows, ncols)[0])


def nullspace(rows: Sequence[Sequence], ncols: int) -> List[Vector]:
    """Basis of {x : rows · x = 0}."""
    reduced, pivots, _ = row_reduce(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [ZERO] * ncols
        vec[f] = ONE
        for row, p in zip(reduced, pivots):
            vec[p] = scalar(-row[f])
        basis.append(tuple(vec))
    return basis


class SpanSolver:
    """Expresses targets in a fixed list of generators.

    The echelon form and its transformation are computed once; ``solve``
    returns coefficients against the original generators or ``None`` when the
    target is outside their span.
    """

    def __init__(self, generators: Sequence[Sequence], ncols: int):
        self.generators = [tuple(scalar(x) for x in g) for g in generators]
        self.ncols = ncols
        self.reduced, self.pivots, transform = row_reduce(self.generators, ncols, track=True)
        self.rank = len(self.reduced)
        self.transform = transform[: self.rank]
        self.relations = transform[self.rank :]

    @property
    def independent(self) -> bool:
        return self.rank == len(self.generators)

    def residual(self, target: Sequence) -> Vector:
        target = [scalar(x) for x in target]
        if len(target) != self.ncols:
            raise DimensionMismatchError(f"target of length {len(target)}, expected {self.ncols}")
        residual = list(target)
        for row, p in zip(self.reduced, self.pivots):
            weight = target[p]
            if weight != 0:
                residual = [a - weight * b for a, b in zip(residual, row)]
        return tuple(scalar(x) for x in residual)

    def solve(self, target: Sequence) -> Optional[Vector]:
        if any(x != 0 for x in self.residual(target)):
            return None
        target = [scalar(x) for x in target]
        coeffs = [ZERO] * len(self.generators)
        for t_row, p in zip(self.transform, self.pivots):
            weight = target[p]
            if weight != 0:
                coeffs = [a + weight * b for a, b in zip(coeffs, t_row)]
        return tuple(scalar(x) for x in coeffs)


@dataclass(frozen=True)
class LinSpace:
    """A fiber of dimension ``dim``; ``chart`` is None for rational scalars."""

    dim: int
    chart: Optional[Chart] = None

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dimension must be non-negative")


class Subspace:
    def __init__(self, ambient: LinSpace, vectors: Sequence[Sequence] = ()):
        self.ambient = ambient
        reduced, self.pivots, _ = row_reduce(vectors, ambient.dim)
        self.basis: Tuple[Vector, ...] = tuple(reduced)

    @classmethod
    def full(cls, ambient: LinSpace) -> "Subspace":
        return cls(ambient, [tuple(ONE if i == j else ZERO for j in range(ambient.dim)) for i in range(ambient.dim)])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, vector: Sequence) -> bool:
        return rank(list(self.basis) + [tuple(vector)], self.ambient.dim) == self.dim

    def is_subspace_of(self, other: "Subspace") -> bool:
        return all(other.contains(v) for v in self.basis)

    def __add__(self, other: "Subspace") -> "Subspace":
        self._require(other)
        return Subspace(self.ambient, list(self.basis) + list(other.basis))

    def intersect(self, other: "Subspace") -> "Subspace":
        self._require(other)
        n = self.ambient.dim
        k = self.dim
        columns = list(self.basis) + [tuple(-x for x in v) for v in other.basis]
        equations = [[col[i] for col in columns] for i in range(n)]
        vectors = []
        for combo in nullspace(equations, len(columns)):
            vectors.append(tuple(sum((combo[j] * self.basis[j][i] for j in range(k)), ZERO) for i in range(n)))
        return Subspace(self.ambient, vectors)

    def _require(self, other: "Subspace"):
        if self.ambient.dim != other.ambient.dim:
            raise DimensionMismatchError("subspaces live in different ambient spaces")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        if self.ambient.dim != other.ambient.dim or self.dim != other.dim:
            return False
        return all(
            scalar(a - b) == 0 for u, v in zip(self.basis, other.basis) for a, b in zip(u, v)
        )

    __hash__ = None

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient.dim})"


class BilForm:
    """A symmetric bilinear form given by its Gram matrix."""

    def __init__(self, matrix):
        matrix = sympy.Matrix(matrix).applyfunc(scalar)
        if matrix.rows != matrix.cols:
            raise DimensionMismatchError("bilinear form needs a square matrix")
        if any(scalar(matrix[i, j] - matrix[j, i]) != 0 for i in range(matrix.rows) for j in range(i)):
            raise ValueError("bilinear form matrix is not symmetric")
        self.matrix = matrix

    @property
    def dim(self) -> int:
        return self.matrix.rows

    def __call__(self, u: Sequence, v: Sequence) -> Scalar:
        n = self.dim
        return scalar(sum((u[i] * self.matrix[i, j] * v[j] for i in range(n) for j in range(n)), ZERO))

    def is_nondegenerate(self) -> bool:
        return scalar(self.matrix.det(method="bareiss")) != 0

    def direct_sum(self, other: "BilForm", sign: int = 1) -> "BilForm":
        return BilForm(sympy.diag(self.matrix, sign * other.matrix))

    def __neg__(self) -> "BilForm":
        return BilForm(-self.matrix)


def orth_complement(subspace: Subspace, g: BilForm) -> Subspace:
    if g.dim != subspace.ambient.dim:
        raise DimensionMismatchError("form and subspace dimensions differ")
    n = g.dim
    rows = [
        tuple(sum((v[i] * g.matrix[i, j] for i in range(n)), ZERO) for j in range(n))
        for v in subspace.basis
    ]
    return Subspace(subspace.ambient, nullspace(rows, n))


def is_isotropic(subspace: Subspace, g: BilForm) -> bool:
    return all(g(u, v) == 0 for i, u in enumerate(subspace.basis) for v in subspace.basis[i:])


def is_coisotropic(subspace: Subspace, g: BilForm) -> bool:
    return orth_complement(subspace, g).is_subspace_of(subspace)


def is_lagrangian(subspace: Subspace, g: BilForm) -> bool:
    if not g.is_nondegenerate():
        raise DegenerateFormError("Lagrangian test requires a nondegenerate form")
    return 2 * subspace.dim == subspace.ambient.dim and is_isotropic(subspace, g)


@dataclass
class CompositionResult:
    relation: "LinearRelation"
    intersection_dim: int
    kernel_dim: int

    @property
    def clean_report(self) -> dict:
        return {"intersection_dim": self.intersection_dim, "kernel_dim": self.kernel_dim}


class LinearRelation:
    """A relation V1 ⇢ V2 stored as a subspace of V2 ⊕ V1 (target block first)."""

    def __init__(self, source_dim: int, target_dim: int, subspace: Subspace):
        if subspace.ambient.dim != source_dim + target_dim:
            raise DimensionMismatchError("relation subspace has the wrong ambient dimension")
        self.source_dim = source_dim
        self.target_dim = target_dim
        self.subspace = subspace

    @classmethod
    def from_pairs(cls, source_dim: int, target_dim: int, pairs, chart: Optional[Chart] = None):
        """Span of pairs ``(target_vector, source_vector)``."""
        vectors = []
        for target, source in pairs:
            if len(target) != target_dim or len(source) != source_dim:
                raise DimensionMismatchError("pair does not match the relation dimensions")
            vectors.append(tuple(target) + tuple(source))
        return cls(source_dim, target_dim, Subspace(LinSpace(source_dim + target_dim, chart), vectors))

    @classmethod
    def graph(cls, matrix) -> "LinearRelation":
        """{(A v, v)} for a target_dim x source_dim matrix A."""
        A = sympy.Matrix(matrix)
        pairs = []
        for j in range(A.cols):
            unit = [ONE if i == j else ZERO for i in range(A.cols)]
            pairs.append((tuple(A[:, j]), tuple(unit)))
        return cls.from_pairs(A.cols, A.rows, pairs)

    @classmethod
    def identity(cls, n: int) -> "LinearRelation":
        return cls.graph(sympy.eye(n))

    @property
    def dim(self) -> int:
        return self.subspace.dim

    def pairs(self):
        t = self.target_dim
        return [(v[:t], v[t:]) for v in self.subspace.basis]

    def transpose(self) -> "LinearRelation":
        return LinearRelation.from_pairs(
            self.target_dim, self.source_dim, [(s, t) for t, s in self.pairs()], self.subspace.ambient.chart
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearRelation):
            return NotImplemented
        return (
            self.source_dim == other.source_dim
            and self.target_dim == other.target_dim
            and self.subspace == other.subspace
        )

    __hash__ = None

    def __repr__(self):
        return f"LinearRelation({self.source_dim} -> {self.target_dim}, dim={self.dim})"


def compose(second: LinearRelation, first: LinearRelation) -> CompositionResult:
    """second ∘ first, with the dimensions needed to judge cleanness."""
    if first.target_dim != second.source_dim:
        raise DimensionMismatchError(
            f"cannot compose: middle dimensions {first.target_dim} and {second.source_dim} differ"
        )
    outer = second.pairs()
    inner = first.pairs()
    middle = first.target_dim
    unknowns = len(outer) + len(inner)
    equations = []
    for i in range(middle):
        row = [pair[1][i] for pair in outer] + [-pair[0][i] for pair in inner]
        equations.append(row)
    combos = nullspace(equations, unknowns) if unknowns else []
    vectors = []
    for combo in combos:
        a, b = combo[: len(outer)], combo[len(outer) :]
        target = tuple(
            scalar(sum((a[k] * outer[k][0][i] for k in range(len(outer))), ZERO))
            for i in range(second.target_dim)
        )
        source = tuple(
            scalar(sum((b[k] * inner[k][1][i] for k in range(len(inner))), ZERO))
            for i in range(first.source_dim)
        )
        vectors.append((target, source))
    relation = LinearRelation.from_pairs(first.source_dim, second.target_dim, vectors)
    logger.debug(f"composed relations: diamond dim {len(combos)}, result dim {relation.dim}")
    return CompositionResult(relation, len(combos), len(combos) - relation.dim)


def ann_natural(relation: LinearRelation) -> LinearRelation:
    """{(μ2, -μ1) : (μ2, μ1) ∈ ann(R)} as a relation V1* ⇢ V2*."""
    total = relation.source_dim + relation.target_dim
    annihilator = nullspace(list(relation.subspace.basis), total)
    t = relation.target_dim
    pairs = [(mu[:t], tuple(scalar(-x) for x in mu[t:])) for mu in annihilator]
    return LinearRelation.from_pairs(relation.source_dim, relation.target_dim, pairs)


def random_relation(rng: random.Random, source_dim: int, target_dim: int, dim: int, spread: int = 2):
    """Span of ``dim`` random integer vectors in V2 ⊕ V1."""
    pairs = []
    for _ in range(dim):
        target = tuple(sympy.Integer(rng.randint(-spread, spread)) for _ in range(target_dim))
        source = tuple(sympy.Integer(rng.randint(-spread, spread)) for _ in range(source_dim))
        pairs.append((target, source))
    return LinearRelation.from_pairs(source_dim, target_dim, pairs)


def check_ann_lemma(count: int = 100, max_dim: int = 6, seed: int = 0) -> VerificationReport:
    """ann♮(R2∘R1) = ann♮(R2)∘ann♮(R1) on seeded random relation pairs."""
    rng = random.Random(seed)
    report = VerificationReport(f"ann-natural composition lemma (seed {seed})")
    for trial in range(count):
        dims = [rng.randint(0, max_dim // 2) for _ in range(3)]
        first = random_relation(rng, dims[0], dims[1], rng.randint(0, dims[0] + dims[1]))
        second = random_relation(rng, dims[1], dims[2], rng.randint(0, dims[1] + dims[2]))
        lhs = ann_natural(compose(second, first).relation)
        rhs = compose(ann_natural(second), ann_natural(first)).relation
        report.record(
            "ann_composition",
            lhs == rhs,
            trial=trial,
            dims=dims,
            first=[list(map(str, v)) for v in first.subspace.basis],
            second=[list(map(str, v)) for v in second.subspace.basis],
        )
    return report
