"""Linear Lyapunov functions on cones: search, validation and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cones import (
    BlockMap,
    ConeKind,
    ConeSpec,
    contains,
    Membership,
    image,
    intersect_trivially,
    is_pointed,
    kernel_condition,
    sum_cone,
)
from .errors import ConsistencyError, ContractError, DimensionError
from .feasibility import LPStatus, eq, ge, le, solve_feasibility
from .monotone import is_qm_family, require_qm
from .numerics import (
    RationalMatrix,
    as_matrix,
    char_poly,
    dot,
    format_rational,
    is_zero_vector,
    rational_vector,
)


@dataclass(frozen=True)
class LinearFunctional:
    """lambda(x) = v . x for a nonzero rational vector v."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = rational_vector(self.coefficients)
        if not coeffs or is_zero_vector(coeffs):
            raise ContractError("a linear functional needs a nonzero coefficient vector")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dim(self) -> int:
        return len(self.coefficients)

    def __call__(self, x: Sequence):
        if len(x) != self.dim:
            raise DimensionError(f"functional on R^{self.dim} applied to a vector of length {len(x)}")
        if all(isinstance(v, (int, Fraction)) for v in x):
            return dot(self.coefficients, x)
        return float(np.dot(self.as_array(), np.asarray(x, dtype=float)))

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coefficients])

    def scaled(self, c) -> "LinearFunctional":
        c = Fraction(c)
        return LinearFunctional(tuple(c * x for x in self.coefficients))

    def repeated(self, m: int) -> "LinearFunctional":
        """Lambda(x_1, ..., x_m) = lambda(x_1) + ... + lambda(x_m)."""
        return LinearFunctional(self.coefficients * m)

    def to_strings(self) -> list[str]:
        return [format_rational(c) for c in self.coefficients]

    def __str__(self):
        return "(" + ", ".join(self.to_strings()) + ")"


@dataclass(frozen=True)
class CLLFReport:
    exists: bool
    certificate: LinearFunctional | None
    cond1_kernel: tuple
    cond2_pointed: bool
    cond3_trivial_intersection: bool
    kernel_sufficient: bool
    qm_hypothesis: bool = True

    @property
    def cond1(self) -> bool:
        return all(self.cond1_kernel)

    @property
    def conditions(self) -> tuple[bool, bool, bool]:
        return (self.cond1, self.cond2_pointed, self.cond3_trivial_intersection)

    def summary(self) -> str:
        marks = ["✓" if c else "✗" for c in self.conditions]
        return f"conditions: 1 {marks[0]} 2 {marks[1]} 3 {marks[2]}"


def _check_family(As, C: ConeSpec) -> list[RationalMatrix]:
    As = [as_matrix(A) for A in As]
    if not As:
        raise ContractError("need at least one matrix")
    for A in As:
        if A.shape != (C.dim, C.dim):
            raise DimensionError(f"matrix of shape {A.shape} against a cone in R^{C.dim}")
    return As


def _cllf_lp(As: Sequence[RationalMatrix], C: ConeSpec) -> LinearFunctional | None:
    # v.k >= 1 and v.(A k) <= -1 for every generator k; strictness recovered by scaling
    rows = [ge(k, 1) for k in C.generators]
    for A in As:
        rows.extend(le(A.apply(k), -1) for k in C.generators)
    out = solve_feasibility(rows, n_vars=C.dim)
    if out.status is LPStatus.INFEASIBLE:
        return None
    return LinearFunctional(out.witness)


def _require_polyhedral_proper(C: ConeSpec) -> None:
    if not C.is_polyhedral:
        raise ContractError(
            "Lyapunov search needs a polyhedral cone; for the ice cream cone use validate_certificate"
        )
    C.require_proper()


def find_llf(A, C: ConeSpec) -> LinearFunctional | None:
    """A linear Lyapunov function for x' = Ax on C, or None when none exists."""
    return find_cllf([A], C)


def find_cllf(As: Sequence, C: ConeSpec) -> LinearFunctional | None:
    """A common linear Lyapunov function for the family on C, or None."""
    _require_polyhedral_proper(C)
    As = _check_family(As, C)
    require_qm(As, C)
    return _cllf_lp(As, C)


def validate_certificate(v, As: Sequence, C: ConeSpec) -> bool:
    """Exact check that v > 0 on C minus the origin and v∘A_i < 0 there for every i.

    Polyhedral cones are checked on generators.  The ice cream cone is
    self-dual, so both conditions are interior-membership tests of v and
    -A_i^T v, decided exactly in rational arithmetic.
    """
    if not isinstance(v, LinearFunctional):
        try:
            v = LinearFunctional(v)
        except ContractError:
            return False
    As = [as_matrix(A) for A in As]
    if v.dim != C.dim or any(A.shape != (C.dim, C.dim) for A in As):
        return False
    if C.kind is ConeKind.ICECREAM:
        if contains(C, v.coefficients) is not Membership.INTERIOR:
            return False
        return all(
            contains(C, tuple(-x for x in A.T.apply(v.coefficients))) is Membership.INTERIOR
            for A in As
        )
    if not all(dot(v.coefficients, k) > 0 for k in C.generators):
        return False
    return all(dot(v.coefficients, A.apply(k)) < 0 for A in As for k in C.generators)


def kernel_meets_cone(A: RationalMatrix, C: ConeSpec) -> bool:
    """True iff Ker(A) ∩ C contains a nonzero point."""
    gens = C.generators
    images = [A.apply(k) for k in gens]
    rows = [eq([im[i] for im in images], 0) for i in range(C.dim)]
    rows.append(eq([1] * len(gens), 1))
    return solve_feasibility(rows, nonneg_vars=range(len(gens))).status is not LPStatus.INFEASIBLE


def cllf_conditions(As: Sequence, C: ConeSpec) -> CLLFReport:
    """The three existence conditions, the kernel sufficient condition and the LP verdict.

    When every matrix is QM the LP verdict must equal the conjunction of the
    three conditions, and the kernel condition must imply existence; a
    mismatch raises ConsistencyError.
    """
    _require_polyhedral_proper(C)
    As = _check_family(As, C)
    qm_ok = is_qm_family(As, C).verdict

    cond1 = tuple(not kernel_meets_cone(A, C) for A in As)
    images = sum_cone(image(A, C.generators) for A in As)
    cond2 = is_pointed(images)
    cond3 = intersect_trivially(C, images)
    kernel_ok = kernel_condition(BlockMap(tuple(As)), C)
    certificate = _cllf_lp(As, C)
    exists = certificate is not None

    if certificate is not None and not validate_certificate(certificate, As, C):
        raise ConsistencyError(f"LP returned {certificate}, which fails exact validation")
    if qm_ok:
        if exists != (all(cond1) and cond2 and cond3):
            raise ConsistencyError(
                f"LP existence {exists} disagrees with conditions {(all(cond1), cond2, cond3)}"
            )
        if kernel_ok and not exists:
            raise ConsistencyError("kernel condition holds but no common Lyapunov function was found")
    return CLLFReport(exists, certificate, cond1, cond2, cond3, kernel_ok, qm_ok)


def gurvits_planar(A1, A2) -> bool:
    """True iff A1 A2^{-1} has no negative real eigenvalue (2x2, exact)."""
    A1, A2 = as_matrix(A1), as_matrix(A2)
    if A1.shape != (2, 2) or A2.shape != (2, 2):
        raise DimensionError("gurvits_planar works on 2x2 matrices")
    if A2.det() == 0:
        raise ContractError("A2 must be invertible")
    M = A1 @ A2.inverse()
    _, b, c = char_poly(M).coefficients  # s^2 + b s + c
    disc = b * b - 4 * c
    if disc < 0:
        return True
    # real roots r1 <= r2 with r1 + r2 = -b, r1 r2 = c; a negative root exists
    # iff c < 0, or c >= 0 with both roots <= 0 and not both zero
    if c < 0:
        return False
    if c > 0:
        return b < 0  # both roots share a sign; positive iff their sum -b > 0
    return b <= 0  # roots 0 and -b
