"""Exact two-phase simplex over the rationals with Bland's rule.

Strict inequalities are not representable: callers working with cones
replace ``> 0`` by ``>= 1`` (valid by positive homogeneity).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DimensionError
from .numerics import as_rational, dot, rational_vector


class Relation(str, enum.Enum):
    GE = ">="
    EQ = "="
    LE = "<="

    def holds(self, lhs: Fraction, rhs: Fraction) -> bool:
        if self is Relation.GE:
            return lhs >= rhs
        if self is Relation.LE:
            return lhs <= rhs
        return lhs == rhs

    def flipped(self) -> "Relation":
        return {Relation.GE: Relation.LE, Relation.LE: Relation.GE}.get(self, self)


@dataclass(frozen=True)
class LinearConstraint:
    coefficients: tuple
    relation: Relation
    rhs: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coefficients", rational_vector(self.coefficients))
        object.__setattr__(self, "relation", Relation(self.relation))
        object.__setattr__(self, "rhs", as_rational(self.rhs))

    def satisfied_by(self, x: Sequence) -> bool:
        return self.relation.holds(dot(self.coefficients, x), self.rhs)

    def scaled(self, factor) -> "LinearConstraint":
        c = as_rational(factor)
        rel = self.relation if c > 0 else self.relation.flipped()
        return LinearConstraint(tuple(c * a for a in self.coefficients), rel, c * self.rhs)


def ge(coefficients, rhs=0) -> LinearConstraint:
    return LinearConstraint(coefficients, Relation.GE, rhs)


def le(coefficients, rhs=0) -> LinearConstraint:
    return LinearConstraint(coefficients, Relation.LE, rhs)


def eq(coefficients, rhs=0) -> LinearConstraint:
    return LinearConstraint(coefficients, Relation.EQ, rhs)


class LPStatus(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPOutcome:
    status: LPStatus
    witness: tuple | None = None
    objective_value: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status in (LPStatus.FEASIBLE, LPStatus.OPTIMAL, LPStatus.UNBOUNDED)


class _Tableau:
    """Canonical-form tableau; column ``-1`` of every row is the right-hand side."""

    def __init__(self, rows, basis, ncols):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols

    def pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        p = prow[c]
        prow = [x / p for x in prow]
        self.rows[r] = prow
        for i, row in enumerate(self.rows):
            if i != r:
                f = row[c]
                if f != 0:
                    self.rows[i] = [a - f * b for a, b in zip(row, prow)]
        self.basis[r] = c

    def reduced_costs(self, cost):
        d = list(cost) + [Fraction(0)]
        for i, row in enumerate(self.rows):
            cb = cost[self.basis[i]]
            if cb != 0:
                d = [a - cb * b for a, b in zip(d, row)]
        return d

    def minimize(self, cost, allowed) -> bool:
        """Bland's-rule primal simplex.  Returns False if unbounded."""
        while True:
            d = self.reduced_costs(cost)
            entering = next((j for j in allowed if d[j] < 0), None)
            if entering is None:
                return True
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (row[-1] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return False
            self.pivot(best[1], entering)

    def solution(self):
        x = [Fraction(0)] * self.ncols
        for i, b in enumerate(self.basis):
            x[b] = self.rows[i][-1]
        return x


def _standard_form(constraints, n_vars, nonneg):
    # column layout: one column per nonneg var, two (plus/minus) per free var
    var_cols = []
    ncols = 0
    for j in range(n_vars):
        if j in nonneg:
            var_cols.append((ncols, None))
            ncols += 1
        else:
            var_cols.append((ncols, ncols + 1))
            ncols += 2
    n_struct = ncols

    prepared = []
    for con in constraints:
        coeffs, rel, rhs = con.coefficients, con.relation, con.rhs
        if rhs < 0:
            coeffs, rel, rhs = tuple(-a for a in coeffs), rel.flipped(), -rhs
        prepared.append((coeffs, rel, rhs))

    n_slack = sum(1 for _, rel, _ in prepared if rel is not Relation.EQ)
    n_art = sum(1 for _, rel, _ in prepared if rel is not Relation.LE)
    total = n_struct + n_slack + n_art
    rows, basis = [], []
    slack_at, art_at = n_struct, n_struct + n_slack
    for coeffs, rel, rhs in prepared:
        row = [Fraction(0)] * (total + 1)
        for j, a in enumerate(coeffs):
            plus, minus = var_cols[j]
            row[plus] = a
            if minus is not None:
                row[minus] = -a
        if rel is Relation.LE:
            row[slack_at] = Fraction(1)
            basis.append(slack_at)
            slack_at += 1
        else:
            if rel is Relation.GE:
                row[slack_at] = Fraction(-1)
                slack_at += 1
            row[art_at] = Fraction(1)
            basis.append(art_at)
            art_at += 1
        row[-1] = rhs
        rows.append(row)
    return _Tableau(rows, basis, total), var_cols, n_struct + n_slack


def _prepare(constraints, nonneg_vars, n_vars):
    constraints = list(constraints)
    if n_vars is None:
        if not constraints:
            n_vars = 0
        else:
            n_vars = len(constraints[0].coefficients)
    for con in constraints:
        if len(con.coefficients) != n_vars:
            raise DimensionError(
                f"constraint has {len(con.coefficients)} coefficients, expected {n_vars}"
            )
    nonneg = frozenset(nonneg_vars or ())
    if any(not 0 <= j < n_vars for j in nonneg):
        raise DimensionError("nonnegative variable index out of range")
    return constraints, nonneg, n_vars


def _phase_one(constraints, nonneg, n_vars):
    tab, var_cols, n_real = _standard_form(constraints, n_vars, nonneg)
    cost = [Fraction(0)] * n_real + [Fraction(1)] * (tab.ncols - n_real)
    tab.minimize(cost, range(tab.ncols))
    infeasibility = sum((tab.rows[i][-1] for i, b in enumerate(tab.basis) if b >= n_real), Fraction(0))
    if infeasibility > 0:
        return None, var_cols, n_real
    # drive remaining (zero-valued) artificials out of the basis
    i = 0
    while i < len(tab.rows):
        if tab.basis[i] >= n_real:
            col = next((j for j in range(n_real) if tab.rows[i][j] != 0), None)
            if col is None:
                del tab.rows[i]
                del tab.basis[i]
                continue
            tab.pivot(i, col)
        i += 1
    return tab, var_cols, n_real


def _extract(tab, var_cols):
    x = tab.solution()
    out = []
    for plus, minus in var_cols:
        out.append(x[plus] - (x[minus] if minus is not None else 0))
    return tuple(out)


def solve_feasibility(
    constraints: Iterable[LinearConstraint],
    nonneg_vars: Iterable[int] = (),
    n_vars: int | None = None,
) -> LPOutcome:
    """Decide whether the constraint system has a solution.

    Variables listed in ``nonneg_vars`` are restricted to be >= 0, all
    others are free.  A feasible outcome carries an exact witness.
    """
    constraints, nonneg, n_vars = _prepare(constraints, nonneg_vars, n_vars)
    if not constraints:
        return LPOutcome(LPStatus.FEASIBLE, tuple(Fraction(0) for _ in range(n_vars)))
    tab, var_cols, _ = _phase_one(constraints, nonneg, n_vars)
    if tab is None:
        return LPOutcome(LPStatus.INFEASIBLE)
    return LPOutcome(LPStatus.FEASIBLE, _extract(tab, var_cols))


def solve_lp(
    objective: Sequence,
    sense: str,
    constraints: Iterable[LinearConstraint],
    nonneg_vars: Iterable[int] = (),
    n_vars: int | None = None,
) -> LPOutcome:
    """Minimize or maximize ``objective . x`` subject to ``constraints``.

    ``sense`` is ``"min"`` or ``"max"``.  Returns OPTIMAL with an exact
    optimizer and value, UNBOUNDED (with a feasible point), or INFEASIBLE.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', not {sense!r}")
    objective = rational_vector(objective)
    constraints, nonneg, n_vars = _prepare(constraints, nonneg_vars, len(objective) if n_vars is None else n_vars)
    if len(objective) != n_vars:
        raise DimensionError(f"objective has {len(objective)} coefficients, expected {n_vars}")

    if constraints:
        tab, var_cols, n_real = _phase_one(constraints, nonneg, n_vars)
        if tab is None:
            return LPOutcome(LPStatus.INFEASIBLE)
    else:
        tab, var_cols, n_real = _standard_form([], n_vars, nonneg)

    sign = 1 if sense == "min" else -1
    cost = [Fraction(0)] * tab.ncols
    for j, c in enumerate(objective):
        plus, minus = var_cols[j]
        cost[plus] = sign * c
        if minus is not None:
            cost[minus] = -sign * c
    if not tab.rows:
        # no rows left: any nonzero cost on a column is unbounded
        if any(cost[j] < 0 for j in range(n_real)):
            return LPOutcome(LPStatus.UNBOUNDED, tuple(Fraction(0) for _ in range(n_vars)))
        x = tuple(Fraction(0) for _ in range(n_vars))
        return LPOutcome(LPStatus.OPTIMAL, x, Fraction(0))
    bounded = tab.minimize(cost, range(n_real))
    x = _extract(tab, var_cols)
    if not bounded:
        return LPOutcome(LPStatus.UNBOUNDED, x)
    return LPOutcome(LPStatus.OPTIMAL, x, dot(objective, x))
