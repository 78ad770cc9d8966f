"""Orthant, finitely generated and ice cream cones.

Polyhedral cones are stored by their generators (V-representation).  The
dual cone is computed once, at construction, by an incremental double
description in exact arithmetic and doubles as the facet description
(H-representation) of the cone itself.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, DimensionError
from .feasibility import LPStatus, eq, solve_feasibility
from .numerics import (
    RationalMatrix,
    Vector,
    _row_echelon,
    dot,
    is_zero_vector,
    primitive_line,
    primitive_ray,
    rank,
    rational_vector,
)


class ConeKind(enum.Enum):
    ORTHANT = "orthant"
    POLYHEDRAL = "polyhedral"
    ICECREAM = "icecream"


class Membership(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def _dedup_rays(vectors: Iterable[Sequence]) -> tuple[Vector, ...]:
    seen: dict[Vector, None] = {}
    for v in vectors:
        v = rational_vector(v)
        if is_zero_vector(v):
            continue
        seen.setdefault(primitive_ray(v), None)
    return tuple(seen)


@dataclass(frozen=True)
class DualRep:
    """Dual cone as extreme rays plus a lineality basis.

    ``generators`` lists the rays followed by each lineality vector and its
    negative; the primal cone is ``{x : v.x >= 0 for v in generators}``.
    """

    dim: int
    rays: tuple
    lineality: tuple = ()

    @property
    def generators(self) -> tuple[Vector, ...]:
        out = list(self.rays)
        for l in self.lineality:
            out.append(l)
            out.append(tuple(-x for x in l))
        return tuple(out)

    facet_functionals = generators

    @property
    def is_solid(self) -> bool:
        return rank(self.generators) == self.dim if self.generators else self.dim == 0


# double description ------------------------------------------------------------


def _project_out(v: Vector, basis: Sequence[Vector]) -> Vector:
    """Orthogonal projection of ``v`` onto the complement of span(basis)."""
    if not basis:
        return v
    k = len(basis)
    gram = RationalMatrix([[dot(a, b) for b in basis] for a in basis])
    coeffs = gram.inverse().apply([dot(b, v) for b in basis])
    return tuple(v[i] - sum(coeffs[j] * basis[j][i] for j in range(k)) for i in range(len(v)))


def extreme_rays(inequalities: Sequence[Sequence], dim: int) -> DualRep:
    """Extreme rays and lineality of ``{v : a.v >= 0 for every a}``.

    Incremental double description: inequalities are inserted one at a
    time.  While the current lineality space is not orthogonal to the new
    row, one lineality direction is turned into a ray; otherwise rays are
    split by sign and adjacent positive/negative pairs are combined, with
    adjacency decided by a rank test on the common tight set.
    """
    rows = [rational_vector(a) for a in inequalities]
    if any(len(a) != dim for a in rows):
        raise DimensionError("inequality of wrong length")
    zero = Fraction(0)
    lineality: list[Vector] = [
        tuple(Fraction(int(i == j)) for j in range(dim)) for i in range(dim)
    ]
    rays: list[Vector] = []
    processed: list[Vector] = []

    for a in rows:
        if is_zero_vector(a):
            processed.append(a)
            continue
        vals = [dot(a, l) for l in lineality]
        k = next((i for i, x in enumerate(vals) if x != 0), None)
        if k is not None:
            l0, al0 = lineality[k], vals[k]
            if al0 < 0:
                l0, al0 = tuple(-x for x in l0), -al0
            lineality = [
                tuple(x - (vals[i] / vals[k]) * y for x, y in zip(lineality[i], lineality[k]))
                for i in range(len(lineality))
                if i != k
            ]
            rays = [
                primitive_ray(tuple(x - (dot(a, r) / al0) * y for x, y in zip(r, l0)))
                for r in rays
            ]
            rays.append(primitive_ray(l0))
            processed.append(a)
            continue

        processed.append(a)
        d_eff = dim - len(lineality)
        signs = [dot(a, r) for r in rays]
        pos = [r for r, s in zip(rays, signs) if s > 0]
        neg = [(r, s) for r, s in zip(rays, signs) if s < 0]
        new_rays = [r for r, s in zip(rays, signs) if s >= 0]
        if neg and pos:
            tight = {r: frozenset(i for i, b in enumerate(processed[:-1]) if dot(b, r) == zero) for r in rays}
            for p in pos:
                ap = dot(a, p)
                for n, an in neg:
                    common = tight[p] & tight[n]
                    if rank([processed[i] for i in common]) != d_eff - 2:
                        continue
                    w = tuple(ap * y - an * x for x, y in zip(p, n))
                    new_rays.append(primitive_ray(w))
        rays = list(dict.fromkeys(new_rays))

    if lineality:
        ech, _ = _row_echelon([list(l) for l in lineality])
        lineality = [primitive_line(r) for r in ech if not is_zero_vector(r)]
        rays = [_project_out(r, lineality) for r in rays]
    return DualRep(dim, _dedup_rays(rays), tuple(lineality))


# cone specification ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConeSpec:
    """A cone in R^n: ``orthant(n)``, ``polyhedral(generators)`` or ``icecream(n)``.

    Build instances through the classmethods; polyhedral generators are
    canonicalized to primitive integer vectors and deduplicated.
    """

    kind: ConeKind
    dim: int
    generators: tuple | None = None
    dual: DualRep | None = field(default=None, repr=False)

    @classmethod
    def orthant(cls, n: int) -> "ConeSpec":
        basis = tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))
        return cls(ConeKind.ORTHANT, n, basis, DualRep(n, basis))

    @classmethod
    def icecream(cls, n: int) -> "ConeSpec":
        if n < 1:
            raise ContractError("ice cream cone needs n >= 1")
        return cls(ConeKind.ICECREAM, n)

    @classmethod
    def polyhedral(cls, generators: Iterable[Sequence], dim: int | None = None) -> "ConeSpec":
        gens = [rational_vector(g) for g in generators]
        if dim is None:
            if not gens:
                raise ContractError("cannot infer the dimension of an empty generator list")
            dim = len(gens[0])
        for g in gens:
            if len(g) != dim:
                raise DimensionError(f"generator {g} does not have length {dim}")
            if is_zero_vector(g):
                raise ContractError("zero generator is not allowed")
        canon = _dedup_rays(gens)
        return cls(ConeKind.POLYHEDRAL, dim, canon, extreme_rays(canon, dim))

    def product(self, m: int) -> "ConeSpec":
        """The product cone C^m, with dual identified blockwise as (C*)^m."""
        if self.kind is ConeKind.ORTHANT:
            return ConeSpec.orthant(self.dim * m)
        if self.kind is not ConeKind.POLYHEDRAL:
            raise ContractError("product cones are only built for polyhedral kinds")
        n = self.dim

        def embed(v, i):
            out = [Fraction(0)] * (n * m)
            out[i * n:(i + 1) * n] = v
            return tuple(out)

        gens = tuple(embed(g, i) for i in range(m) for g in self.generators)
        dual = DualRep(
            n * m,
            tuple(embed(r, i) for i in range(m) for r in self.dual.rays),
            tuple(embed(l, i) for i in range(m) for l in self.dual.lineality),
        )
        return ConeSpec(ConeKind.POLYHEDRAL, n * m, gens, dual)

    # predicates --------------------------------------------------------------
    @property
    def is_polyhedral(self) -> bool:
        return self.kind in (ConeKind.ORTHANT, ConeKind.POLYHEDRAL)

    @property
    def facets(self) -> tuple[Vector, ...]:
        self.require_polyhedral()
        return self.dual.generators

    def require_polyhedral(self) -> None:
        if not self.is_polyhedral:
            raise ContractError(f"operation needs a polyhedral cone, got {self.kind.value}")

    def is_pointed(self) -> bool:
        if self.kind is not ConeKind.POLYHEDRAL:
            return True
        return is_pointed(self.generators)

    def is_solid(self) -> bool:
        if self.kind is not ConeKind.POLYHEDRAL:
            return True
        return is_solid(self.generators, self.dim)

    def is_proper(self) -> bool:
        return self.is_pointed() and self.is_solid()

    def require_proper(self) -> None:
        if not self.is_proper():
            raise ContractError("cone must be proper (pointed and solid)")

    def __eq__(self, other):
        if not isinstance(other, ConeSpec):
            return NotImplemented
        return (self.kind, self.dim, self.generators) == (other.kind, other.dim, other.generators)

    def __hash__(self):
        return hash((self.kind, self.dim, self.generators))

    def describe(self) -> str:
        if self.kind is ConeKind.POLYHEDRAL:
            return f"polyhedral cone in R^{self.dim} with {len(self.generators)} generators"
        return f"{self.kind.value} cone in R^{self.dim}"

    # membership ----------------------------------------------------------------
    def contains(self, x: Sequence, tol: float | None = None) -> Membership:
        return contains(self, x, tol)

    def margin(self, x: Sequence) -> float:
        """Signed float distance-like quantity; negative means outside."""
        x = np.asarray([float(v) for v in x], dtype=float)
        if len(x) != self.dim:
            raise DimensionError(f"point of length {len(x)} for cone in R^{self.dim}")
        if self.kind is ConeKind.ICECREAM:
            return float(x[-1] - np.linalg.norm(x[:-1]))
        normals = _unit_facets(self)
        if normals.size == 0:
            return math.inf
        return float((normals @ x).min())


def _unit_facets(cone: ConeSpec) -> np.ndarray:
    facets = np.array([[float(c) for c in v] for v in cone.facets], dtype=float)
    if facets.size == 0:
        return facets.reshape(0, cone.dim)
    return facets / np.linalg.norm(facets, axis=1, keepdims=True)


def contains(C: ConeSpec, x: Sequence, tol: float | None = None) -> Membership:
    """Classify ``x`` as interior, boundary or outside of ``C``.

    With ``tol=None`` the test is exact and ``x`` must be rational.  With a
    tolerance ``tol`` the boundary band is ``|value| <= tol * (1 + ||x||)``.
    """
    if len(x) != C.dim:
        raise DimensionError(f"point of length {len(x)} for cone in R^{C.dim}")
    if tol is None:
        x = rational_vector(x)
        if C.kind is ConeKind.ICECREAM:
            top = x[-1]
            radial = sum((v * v for v in x[:-1]), Fraction(0))
            if top < 0 or top * top < radial:
                return Membership.OUTSIDE
            return Membership.INTERIOR if top * top > radial else Membership.BOUNDARY
        values = [dot(v, x) for v in C.facets]
        if any(v < 0 for v in values):
            return Membership.OUTSIDE
        return Membership.INTERIOR if all(v > 0 for v in values) else Membership.BOUNDARY

    xf = np.asarray([float(v) for v in x], dtype=float)
    band = tol * (1.0 + float(np.linalg.norm(xf)))
    value = C.margin(xf)
    if value < -band:
        return Membership.OUTSIDE
    if value <= band:
        return Membership.BOUNDARY
    return Membership.INTERIOR


def dual_cone(cone: ConeSpec | Sequence[Sequence], dim: int | None = None) -> DualRep:
    """Dual of a polyhedral cone given as a ConeSpec or as a generator list."""
    if isinstance(cone, ConeSpec):
        cone.require_polyhedral()
        return cone.dual
    gens = [rational_vector(g) for g in cone]
    if dim is None:
        if not gens:
            raise ContractError("cannot infer the dimension of an empty generator list")
        dim = len(gens[0])
    return extreme_rays(gens, dim)


def cone_contains(outer: ConeSpec | Sequence[Sequence], points: Iterable[Sequence], dim: int | None = None) -> bool:
    """Exact test that every point lies in the cone generated by ``outer``."""
    facets = dual_cone(outer, dim).generators
    return all(dot(v, p) >= 0 for p in points for v in facets)


def same_cone(g1: Sequence[Sequence], g2: Sequence[Sequence], dim: int | None = None) -> bool:
    """Mutual containment of two generated cones."""
    if dim is None:
        dim = len((list(g1) or list(g2))[0])
    return cone_contains(g1, g2, dim) and cone_contains(g2, g1, dim)


def _generators_of(C: ConeSpec | Sequence[Sequence]) -> tuple[Vector, ...]:
    if isinstance(C, ConeSpec):
        C.require_polyhedral()
        return C.generators
    return tuple(rational_vector(g) for g in C)


def is_pointed(generators: Sequence[Sequence]) -> bool:
    """True iff no nontrivial nonnegative combination of the generators vanishes."""
    gens = [rational_vector(g) for g in generators if not is_zero_vector(g)]
    if not gens:
        return True
    n, p = len(gens[0]), len(gens)
    rows = [eq([g[i] for g in gens], 0) for i in range(n)]
    rows.append(eq([1] * p, 1))
    return solve_feasibility(rows, nonneg_vars=range(p)).status is LPStatus.INFEASIBLE


def is_solid(generators: Sequence[Sequence], dim: int | None = None) -> bool:
    """True iff the generators span R^dim."""
    gens = [rational_vector(g) for g in generators]
    if dim is None:
        if not gens:
            raise ContractError("cannot infer the dimension of an empty generator list")
        dim = len(gens[0])
    return rank(gens) == dim


def image(A: RationalMatrix, generators: Iterable[Sequence]) -> tuple[Vector, ...]:
    """A applied to every generator, zero images kept."""
    return tuple(A.apply(g) for g in generators)


def sum_cone(cones: Iterable[Iterable[Sequence]]) -> tuple[Vector, ...]:
    """Generators of K_1 + ... + K_m: concatenation with zeros dropped and rays deduplicated."""
    return _dedup_rays(g for gens in cones for g in gens)


def negate(generators: Iterable[Sequence]) -> tuple[Vector, ...]:
    return tuple(tuple(-x for x in rational_vector(g)) for g in generators)


def intersection_witness(C: ConeSpec | Sequence[Sequence], K: Sequence[Sequence]):
    """A nonzero point of C ∩ cone(K), or None when the intersection is {0}."""
    cgens = _generators_of(C)
    if not is_pointed(cgens):
        raise ContractError("trivial-intersection test needs a pointed cone C")
    kgens = [rational_vector(g) for g in K if not is_zero_vector(g)]
    if not cgens:
        return None
    n, p, q = len(cgens[0]), len(cgens), len(kgens)
    rows = [
        eq([c[i] for c in cgens] + [-k[i] for k in kgens], 0)
        for i in range(n)
    ]
    rows.append(eq([1] * p + [0] * q, 1))
    out = solve_feasibility(rows, nonneg_vars=range(p + q))
    if out.status is LPStatus.INFEASIBLE:
        return None
    alpha = out.witness[:p]
    return tuple(sum((a * c[i] for a, c in zip(alpha, cgens)), Fraction(0)) for i in range(n))


def intersect_trivially(C: ConeSpec | Sequence[Sequence], K: Sequence[Sequence]) -> bool:
    """True iff C ∩ cone(K) = {0}; C must be pointed."""
    return intersection_witness(C, K) is None


@dataclass(frozen=True)
class BlockMap:
    """T(x_0, x_1, ..., x_m) = x_0 - A_1 x_1 - ... - A_m x_m."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(b if isinstance(b, RationalMatrix) else RationalMatrix(b) for b in self.blocks)
        dims = {b.shape for b in blocks}
        if len(dims) > 1 or any(not b.is_square() for b in blocks):
            raise DimensionError("BlockMap blocks must be square and of one size")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return self.blocks[0].nrows if self.blocks else 0

    def __call__(self, x0: Sequence, *xs: Sequence) -> Vector:
        if len(xs) != len(self.blocks):
            raise DimensionError(f"expected {len(self.blocks)} block arguments, got {len(xs)}")
        out = list(rational_vector(x0))
        for A, x in zip(self.blocks, xs):
            out = [a - b for a, b in zip(out, A.apply(x))]
        return tuple(out)


def kernel_witness(T: BlockMap, C: ConeSpec):
    """A nonzero (c_0, ..., c_m) in Ker(T) ∩ C^{m+1}, or None."""
    C.require_polyhedral()
    if not C.is_pointed():
        raise ContractError("kernel condition needs a pointed cone")
    if T.blocks and T.dim != C.dim:
        raise DimensionError(f"BlockMap acts on R^{T.dim}, cone lives in R^{C.dim}")
    gens = C.generators
    n, p, m = C.dim, len(gens), len(T.blocks)
    columns = [g for g in gens]
    for A in T.blocks:
        columns.extend(tuple(-x for x in A.apply(g)) for g in gens)
    rows = [eq([col[i] for col in columns], 0) for i in range(n)]
    rows.append(eq([1] * len(columns), 1))
    out = solve_feasibility(rows, nonneg_vars=range(len(columns)))
    if out.status is LPStatus.INFEASIBLE:
        return None
    alpha = out.witness
    parts = []
    for j in range(m + 1):
        coeffs = alpha[j * p:(j + 1) * p]
        parts.append(tuple(sum((a * g[i] for a, g in zip(coeffs, gens)), Fraction(0)) for i in range(n)))
    return tuple(parts)


def kernel_condition(T: BlockMap, C: ConeSpec) -> bool:
    """True iff Ker(T) ∩ C^{m+1} = {0}."""
    return kernel_witness(T, C) is None
