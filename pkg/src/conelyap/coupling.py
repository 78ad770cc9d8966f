"""Diffusively coupled systems.

Subsystems are indexed from 0.  The coupled dynamics are

    x_i' = A_i x_i + sum_{j != i} D_ij (x_j - x_i),

whose matrix A_D has diagonal blocks A_i - sum_j D_ij and off-diagonal
blocks D_ij.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .cones import ConeKind, ConeSpec
from .errors import ConsistencyError, ContractError, DimensionError, ParameterError
from .lyapunov import LinearFunctional, find_cllf, validate_certificate
from .monotone import icecream_boundary_samples, is_qm, is_qm_family, lorentz_form
from .numerics import (
    RationalMatrix,
    RouthVerdict,
    as_matrix,
    as_rational,
    char_poly,
    dot,
    routh_verdict,
    spectral_abscissa,
)

DEFAULT_MAX_DIM = 12
SAMPLED_TOL = 1e-9
POWER_TOL = 1e-10
POWER_SQUARINGS = 64


def max_exact_dim() -> int:
    """Cap on mn for exact characteristic-polynomial work (CONELYAP_MAX_DIM)."""
    raw = os.environ.get("CONELYAP_MAX_DIM")
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError:
        raise ContractError(f"CONELYAP_MAX_DIM must be an integer, got {raw!r}") from None
    if value < 1:
        raise ContractError("CONELYAP_MAX_DIM must be positive")
    return value


class DiffusiveFamily:
    """Coupling matrices D_ij for m subsystems of dimension n.

    With ``symmetric=True`` (the default) one matrix is stored per unordered
    pair, so D_ij = D_ji holds by construction; supplying both orders with
    different matrices is an error.  ``symmetric=False`` keeps ordered pairs
    for invariance-only analyses.  Missing pairs are zero.
    """

    def __init__(self, m: int, n: int, entries: Mapping | None = None, symmetric: bool = True):
        if m < 1 or n < 1:
            raise ContractError("need m >= 1 subsystems of dimension n >= 1")
        self.m, self.n, self.symmetric = m, n, symmetric
        store: dict[tuple[int, int], RationalMatrix] = {}
        for (i, j), D in (entries or {}).items():
            if not (0 <= i < m and 0 <= j < m) or i == j:
                raise ContractError(f"coupling index pair ({i}, {j}) invalid for m = {m}")
            D = as_matrix(D)
            if D.shape != (n, n):
                raise DimensionError(f"D[{i},{j}] has shape {D.shape}, expected {(n, n)}")
            key = (min(i, j), max(i, j)) if symmetric else (i, j)
            if key in store and store[key] != D:
                raise ContractError(f"asymmetric coupling: D[{i},{j}] != D[{j},{i}]")
            store[key] = D
        self._entries = store

    @classmethod
    def uniform(cls, m: int, D) -> "DiffusiveFamily":
        D = as_matrix(D)
        return cls(m, D.nrows, {(i, j): D for i in range(m) for j in range(i + 1, m)})

    @classmethod
    def zero(cls, m: int, n: int) -> "DiffusiveFamily":
        return cls(m, n, {})

    def get(self, i: int, j: int) -> RationalMatrix:
        key = (min(i, j), max(i, j)) if self.symmetric else (i, j)
        return self._entries.get(key, RationalMatrix.zeros(self.n))

    @property
    def entries(self) -> dict:
        return dict(self._entries)

    def matrices(self):
        return list(self._entries.values())

    def __eq__(self, other):
        if not isinstance(other, DiffusiveFamily):
            return NotImplemented
        return (self.m, self.n, self.symmetric, self._entries) == (other.m, other.n, other.symmetric, other._entries)

    def __repr__(self):
        return f"DiffusiveFamily(m={self.m}, n={self.n}, pairs={sorted(self._entries)})"

    def __reduce__(self):
        return (DiffusiveFamily, (self.m, self.n, self._entries, self.symmetric))


@dataclass(frozen=True)
class DiffusiveValidation:
    valid: bool
    mode: str  # "exact-polyhedral", "rule-alpha-identity", "sampled-icecream" or "mixed"
    failures: tuple = ()
    numerically_validated: bool = False

    def __bool__(self):
        return self.valid


def _alpha_identity(D: RationalMatrix):
    """alpha if D = alpha I, else None."""
    a = D[0, 0]
    return a if D == RationalMatrix.identity(D.nrows) * a else None


def _validate_one_polyhedral(D: RationalMatrix, C: ConeSpec) -> list[str]:
    problems = []
    facets = C.facets
    for l, k in enumerate(C.generators):
        Dk = D.apply(k)
        for q, lam in enumerate(facets):
            value = dot(lam, Dk)
            if value < 0:
                problems.append(f"D k_{l} leaves the cone (facet {q}: {value})")
            elif value != 0 and dot(lam, k) == 0:
                problems.append(f"facet {q} vanishes on k_{l} but not on D k_{l} ({value})")
    return problems


def _validate_one_icecream(D: RationalMatrix, C: ConeSpec) -> list[str]:
    n = C.dim
    pts = icecream_boundary_samples(n)
    Df = D.to_numpy()
    Qf = lorentz_form(n).to_numpy()
    images = pts @ Df.T
    problems = []
    support = np.einsum("ij,ij->i", pts @ Qf, images)
    bad = np.nonzero(np.abs(support) > SAMPLED_TOL)[0]
    if bad.size:
        problems.append(f"supporting functional does not vanish on D x at {bad.size} boundary samples")
    outside = [i for i in range(len(pts)) if C.margin(images[i]) < -SAMPLED_TOL * (1 + np.linalg.norm(images[i]))]
    if outside:
        problems.append(f"D x leaves the cone at {len(outside)} boundary samples")
    return problems


def validate_diffusive(F: DiffusiveFamily, C: ConeSpec) -> DiffusiveValidation:
    """Check that every D_ij maps C into C and annihilates supporting functionals on the boundary."""
    if F.n != C.dim:
        raise DimensionError(f"coupling matrices are {F.n}x{F.n}, cone lives in R^{C.dim}")
    if F.symmetric is False:
        for (i, j) in F.entries:
            if F.get(i, j) != F.get(j, i):
                raise ContractError(f"asymmetric coupling: D[{i},{j}] != D[{j},{i}]")
    failures = []
    modes = set()
    numeric = False
    for (i, j), D in sorted(F.entries.items()):
        alpha = _alpha_identity(D)
        if alpha is not None and alpha >= 0:
            modes.add("rule-alpha-identity")
            continue
        if C.is_polyhedral:
            modes.add("exact-polyhedral")
            problems = _validate_one_polyhedral(D, C)
        elif C.kind is ConeKind.ICECREAM:
            modes.add("sampled-icecream")
            numeric = True
            problems = _validate_one_icecream(D, C)
        else:
            raise ContractError(f"unsupported cone kind {C.kind}")
        failures.extend(f"D[{i},{j}]: {p}" for p in problems)
    if not modes:
        mode = "rule-alpha-identity"
    elif len(modes) == 1:
        mode = modes.pop()
    else:
        mode = "mixed"
    return DiffusiveValidation(not failures, mode, tuple(failures), numeric)


@dataclass(frozen=True)
class CoupledMatrix:
    m: int
    n: int
    matrix: RationalMatrix
    systems: tuple
    family: DiffusiveFamily = field(repr=False)

    @property
    def A_D(self) -> RationalMatrix:
        return self.matrix


def assemble_coupled(As: Sequence, F: DiffusiveFamily) -> CoupledMatrix:
    """Block matrix with A_i - sum_j D_ij on the diagonal and D_ij off it."""
    As = tuple(as_matrix(A) for A in As)
    if len(As) != F.m:
        raise DimensionError(f"{len(As)} systems for a family of {F.m}")
    for A in As:
        if A.shape != (F.n, F.n):
            raise DimensionError(f"system of shape {A.shape}, expected {(F.n, F.n)}")
    m = F.m
    blocks = []
    for i in range(m):
        row = []
        for j in range(m):
            if i == j:
                diag = As[i]
                for k in range(m):
                    if k != i:
                        diag = diag - F.get(i, k)
                row.append(diag)
            else:
                row.append(F.get(i, j))
        blocks.append(row)
    return CoupledMatrix(m, F.n, RationalMatrix.from_blocks(blocks), As, F)


def principal_eigenvalue(M) -> float:
    """Real eigenvalue of maximal real part of a Metzler matrix.

    Power iteration on B = M + sI, s = 1 + max|M_ii|, which is entrywise
    nonnegative with spectral radius lambda_p + s.  The iterates are B^(2^k)
    (repeated squaring, normalized) and the estimate is ||B^N||^(1/N), which
    converges even when the Perron root is defective.
    """
    M = as_matrix(M)
    n = M.require_square()
    if not M.is_metzler():
        raise ContractError("principal_eigenvalue needs a Metzler matrix")
    s = 1.0 + max(abs(float(M[i, i])) for i in range(n))
    B = M.to_numpy() + s * np.eye(n)
    scale = np.abs(B).max()
    P = B / scale
    log_norm = np.log(scale)  # log ||B^N||_max with N = 2^k
    # the estimate's error is about log(c N) / N, so N = 2^64 is far below POWER_TOL
    for _ in range(POWER_SQUARINGS):
        P = P @ P
        top = np.abs(P).max()
        P /= top
        log_norm = 2.0 * log_norm + np.log(top)
    return float(np.exp(log_norm / 2.0**POWER_SQUARINGS)) - s


@dataclass(frozen=True)
class StabilityReport:
    verdict: RouthVerdict
    spectral_abscissa: float
    principal_eig: float | None = None
    qm_on_product: bool | None = None
    certificate: LinearFunctional | None = None
    diagnostics: tuple = ()

    @property
    def hurwitz(self) -> bool:
        return self.verdict is RouthVerdict.HURWITZ

    @property
    def marginal(self) -> bool:
        return self.verdict is RouthVerdict.MARGINAL


def analyze_coupled(
    As: Sequence,
    F: DiffusiveFamily,
    C: ConeSpec | None = None,
    *,
    certificate=None,
    require_hypotheses: bool = True,
) -> StabilityReport:
    """Exact Hurwitz verdict for the coupled system plus cone-based evidence.

    With a cone, each A_i must be QM and F must be diffusive; a broken
    hypothesis raises ContractError naming it, unless
    ``require_hypotheses=False`` in which case it is recorded in the
    diagnostics and the cone-based fields are left empty.  A common linear
    Lyapunov function of the A_i (searched for polyhedral cones, or passed
    as ``certificate``) lifts to Lambda(X) = sum lambda(x_i) on C^m and
    forces a Hurwitz verdict.
    """
    coupled = assemble_coupled(As, F)
    AD = coupled.matrix
    size = AD.nrows
    if size > max_exact_dim():
        raise ContractError(f"coupled dimension {size} exceeds CONELYAP_MAX_DIM={max_exact_dim()}")
    verdict = routh_verdict(char_poly(AD))
    abscissa = spectral_abscissa(AD)
    principal = principal_eigenvalue(AD) if AD.is_metzler() else None
    diagnostics = []
    qm_product = None
    lifted = None

    if C is not None:
        broken = []
        family_qm = is_qm_family(coupled.systems, C)
        if not family_qm.verdict:
            broken.append(f"systems {family_qm.failing()} are not QM for the {C.kind.value} cone")
        validation = validate_diffusive(F, C)
        if not validation.valid:
            broken.append("coupling is not diffusive: " + "; ".join(validation.failures))
        elif validation.numerically_validated:
            diagnostics.append("coupling numerically validated on boundary samples")
        if broken:
            if require_hypotheses:
                raise ContractError("; ".join(broken))
            diagnostics.extend(broken)
        else:
            if C.is_polyhedral:
                qm_product = is_qm(AD, C.product(F.m)).verdict
            lam = None
            if certificate is not None:
                cand = certificate if isinstance(certificate, LinearFunctional) else LinearFunctional(certificate)
                if validate_certificate(cand, coupled.systems, C):
                    lam = cand
                else:
                    diagnostics.append(f"supplied certificate {cand} does not validate")
            elif C.is_polyhedral and C.is_proper():
                lam = find_cllf(coupled.systems, C)
            if lam is not None:
                lifted = lam.repeated(F.m)
                if verdict is not RouthVerdict.HURWITZ:
                    raise ConsistencyError(
                        f"common Lyapunov function {lam} exists but the coupled matrix is {verdict}"
                    )
    if verdict is RouthVerdict.HURWITZ and abscissa >= 1e-7:
        raise ConsistencyError(f"exact Hurwitz verdict but spectral abscissa {abscissa}")
    return StabilityReport(verdict, abscissa, principal, qm_product, lifted, tuple(diagnostics))


# parameter sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class CouplingTemplate:
    """Coupling matrices whose entries are rationals or parameter names."""

    m: int
    n: int
    entries: tuple  # ((i, j), rows) pairs

    @classmethod
    def from_mapping(cls, m: int, n: int, entries: Mapping) -> "CouplingTemplate":
        items = []
        for (i, j), rows in entries.items():
            rows = tuple(tuple(x if isinstance(x, str) and not _is_literal(x) else as_rational(x) for x in r) for r in rows)
            if len(rows) != n or any(len(r) != n for r in rows):
                raise DimensionError(f"template block ({i}, {j}) is not {n}x{n}")
            items.append(((i, j), rows))
        return cls(m, n, tuple(items))

    @property
    def parameters(self) -> list[str]:
        names = []
        for _, rows in self.entries:
            for r in rows:
                for x in r:
                    if isinstance(x, str) and x not in names:
                        names.append(x)
        return names

    def instantiate(self, values: Mapping[str, Fraction], symmetric: bool = True) -> DiffusiveFamily:
        def resolve(x):
            if isinstance(x, str):
                if x not in values:
                    raise ParameterError(f"unbound parameter {x!r}")
                return as_rational(values[x])
            return x

        entries = {
            pair: RationalMatrix([[resolve(x) for x in r] for r in rows])
            for pair, rows in self.entries
        }
        return DiffusiveFamily(self.m, self.n, entries, symmetric=symmetric)


def _is_literal(text: str) -> bool:
    try:
        as_rational(text)
    except (ValueError, ZeroDivisionError):
        return False
    return True


@dataclass(frozen=True)
class SweepCell:
    index: int
    point: tuple  # ((name, value), ...)
    report: StabilityReport

    @property
    def values(self) -> dict:
        return dict(self.point)


_CATEGORY = {RouthVerdict.UNSTABLE: 0, RouthVerdict.MARGINAL: 1, RouthVerdict.HURWITZ: 2}


def _sweep_cell(args):
    index, point, As, template, C, require = args
    F = template.instantiate(dict(point))
    return SweepCell(index, point, analyze_coupled(As, F, C, require_hypotheses=require))


def sweep_destabilize(
    As: Sequence,
    template: CouplingTemplate,
    grid: Mapping[str, Sequence],
    C: ConeSpec | None = None,
    *,
    require_hypotheses: bool = False,
    max_workers: int | None = None,
) -> list[SweepCell]:
    """Analyze the coupled system at every point of a parameter grid.

    Unstable cells come first, then marginal, then Hurwitz; within a
    category cells keep grid order.  Every template parameter must appear
    in ``grid`` (a fixed value is a one-point range).
    """
    As = tuple(as_matrix(A) for A in As)
    names = list(grid)
    for name in template.parameters:
        if name not in grid:
            raise ParameterError(f"unbound parameter {name!r}")
    axes = [[as_rational(v) for v in grid[name]] for name in names]
    points = [tuple(zip(names, combo)) for combo in itertools.product(*axes)]
    jobs = [(i, p, As, template, C, require_hypotheses) for i, p in enumerate(points)]
    if max_workers and max_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            cells = list(pool.map(_sweep_cell, jobs))
    else:
        cells = [_sweep_cell(job) for job in jobs]
    cells.sort(key=lambda c: (_CATEGORY[c.report.verdict], c.index))
    return cells


def rational_range(lo, hi, steps: int) -> list[Fraction]:
    """``steps`` evenly spaced rationals from lo to hi inclusive."""
    lo, hi = as_rational(lo), as_rational(hi)
    if steps < 1:
        raise ContractError("a range needs at least one step")
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * Fraction(k, steps - 1) for k in range(steps)]
