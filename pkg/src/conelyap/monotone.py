"""Quasi-monotonicity (cross-positivity) of a matrix with respect to a cone.

* orthant: the Metzler sign pattern, exactly;
* polyhedral: every incident generator/dual-generator pair (l.k = 0) must
  satisfy l.(A k) >= 0, exactly;
* ice cream: min over alpha of the largest eigenvalue of QA + A^T Q + alpha Q
  must be <= 1e-9 (Q = diag(1, ..., 1, -1)), found by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cones import ConeKind, ConeSpec
from .errors import ContractError, DimensionError
from .numerics import RationalMatrix, _sym_eig_max_float, as_matrix, dot

QM_THRESHOLD = 1e-9
GOLDEN_WIDTH = 1e-12
ICECREAM_SAMPLES = 720


@dataclass(frozen=True)
class WolkowiczCertificate:
    alpha: float
    max_eig: float

    @property
    def marginal(self) -> bool:
        return abs(self.max_eig) <= QM_THRESHOLD


@dataclass(frozen=True)
class QMReport:
    """Outcome of a QM test.

    Polyhedral violations are ``(generator index, facet index, value)``;
    ice cream violations are ``(boundary point, value)``.
    """

    verdict: bool
    violations: tuple = ()
    certificate: WolkowiczCertificate | None = None

    @property
    def marginal(self) -> bool:
        return self.certificate is not None and self.certificate.marginal

    def __bool__(self):
        return self.verdict


@dataclass(frozen=True)
class FamilyQMReport:
    reports: tuple = field(default_factory=tuple)

    @property
    def verdict(self) -> bool:
        return all(r.verdict for r in self.reports)

    @property
    def vacuous(self) -> bool:
        return not self.reports

    def failing(self) -> list[int]:
        return [i for i, r in enumerate(self.reports) if not r.verdict]

    def __bool__(self):
        return self.verdict


def lorentz_form(n: int) -> RationalMatrix:
    """Q = diag(1, ..., 1, -1)."""
    return RationalMatrix.diag([1] * (n - 1) + [-1])


def _golden_min(f, lo: float, hi: float, width: float = GOLDEN_WIDTH):
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width * max(1.0, abs(a) + abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def wolkowicz_objective(A: RationalMatrix):
    """Return ``(f, B)`` where f(alpha) = max eig(QA + A^T Q + alpha Q) and [-B, B] brackets its minimizer."""
    n = A.nrows
    Q = lorentz_form(n)
    S = Q @ A + A.T @ Q
    S_f, Q_f = S.to_numpy(), Q.to_numpy()
    bound = 2.0 * (1.0 + float(S.norm_inf()))

    def f(alpha: float) -> float:
        return _sym_eig_max_float(S_f + alpha * Q_f)

    return f, bound


def icecream_boundary_samples(n: int, count: int = ICECREAM_SAMPLES) -> np.ndarray:
    """Deterministic unit-height points on the boundary of the ice cream cone."""
    if n == 1:
        return np.array([[0.0]])
    if n == 2:
        return np.array([[1.0, 1.0], [-1.0, 1.0]])
    if n == 3:
        theta = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta), np.ones(count)])
    rng = np.random.default_rng(20240613 + n)
    u = rng.standard_normal((count, n - 1))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return np.column_stack([u, np.ones(count)])


def _icecream_qm(A: RationalMatrix) -> QMReport:
    f, bound = wolkowicz_objective(A)
    alpha, value = _golden_min(f, -bound, bound)
    cert = WolkowiczCertificate(alpha, value)
    verdict = value <= QM_THRESHOLD
    if verdict:
        return QMReport(True, (), cert)
    # boundary witnesses x with supporting functional -Qx: rate is -x^T Q A x
    n = A.nrows
    Af = A.to_numpy()
    Qf = lorentz_form(n).to_numpy()
    pts = icecream_boundary_samples(n)
    rates = np.einsum("ij,ij->i", -(pts @ Qf), pts @ Af.T)
    bad = np.nonzero(rates < -QM_THRESHOLD)[0]
    if bad.size == 0:
        bad = np.array([int(np.argmin(rates))])
    violations = tuple((tuple(pts[i]), float(rates[i])) for i in bad)
    return QMReport(False, violations, cert)


def _polyhedral_qm(A: RationalMatrix, C: ConeSpec) -> QMReport:
    violations = []
    facets = C.facets
    for i, k in enumerate(C.generators):
        Ak = None
        for j, lam in enumerate(facets):
            if dot(lam, k) != 0:
                continue
            if Ak is None:
                Ak = A.apply(k)
            value = dot(lam, Ak)
            if value < 0:
                violations.append((i, j, value))
    return QMReport(not violations, tuple(violations))


def _orthant_qm(A: RationalMatrix) -> QMReport:
    n = A.nrows
    violations = tuple(
        (j, i, A[i, j]) for j in range(n) for i in range(n) if i != j and A[i, j] < 0
    )
    return QMReport(not violations, violations)


def is_qm(A, C: ConeSpec) -> QMReport:
    """Test whether ``A`` is quasi-monotone (cross-positive) for ``C``."""
    A = as_matrix(A)
    n = A.require_square()
    if n != C.dim:
        raise DimensionError(f"{n}x{n} matrix against a cone in R^{C.dim}")
    if C.kind is ConeKind.ORTHANT:
        return _orthant_qm(A)
    if C.kind is ConeKind.POLYHEDRAL:
        return _polyhedral_qm(A, C)
    if C.kind is ConeKind.ICECREAM:
        return _icecream_qm(A)
    raise ContractError(f"unsupported cone kind {C.kind}")


def is_qm_family(As: Sequence, C: ConeSpec) -> FamilyQMReport:
    """Per-matrix QM reports; the family is QM iff every member is."""
    return FamilyQMReport(tuple(is_qm(A, C) for A in As))


def require_qm(As: Sequence, C: ConeSpec) -> None:
    family = is_qm_family(As, C)
    if not family.verdict:
        raise ContractError(f"matrices {family.failing()} are not quasi-monotone for the {C.kind.value} cone")
