import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelyap.errors import DimensionError
from conelyap.feasibility import LinearConstraint, LPStatus, Relation, eq, ge, le, solve_feasibility, solve_lp

import oracles


def test_trivially_infeasible():
    assert solve_feasibility([ge([1], 1), le([1], 0)]).status is LPStatus.INFEASIBLE


def test_simplex_feasible():
    out = solve_feasibility([eq([1, 1], 1)], nonneg_vars=[0, 1])
    assert out.status is LPStatus.FEASIBLE
    assert sum(out.witness) == 1 and min(out.witness) >= 0


def test_cllf_system_for_f_pair():
    rows = [ge([1, 0], 1), ge([1, 1], 1), le([-2, 1], -1), le([1, -2], -1)]
    out = solve_feasibility(rows)
    assert out.feasible
    assert all(r.satisfied_by(out.witness) for r in rows)


def test_empty_system_is_feasible():
    out = solve_feasibility([], n_vars=3)
    assert out.status is LPStatus.FEASIBLE and out.witness == (0, 0, 0)


def test_lp_examples():
    out = solve_lp([1], "max", [le([1], 3)])
    assert out.status is LPStatus.OPTIMAL and out.objective_value == 3
    assert solve_lp([1], "max", [ge([1], 0)]).status is LPStatus.UNBOUNDED
    out = solve_lp([1, 1], "min", [eq([1, 1], 1)], nonneg_vars=[0, 1])
    assert out.status is LPStatus.OPTIMAL and out.objective_value == 1


def test_lp_infeasible_and_bad_sense():
    assert solve_lp([1], "min", [ge([1], 1), le([1], 0)]).status is LPStatus.INFEASIBLE
    with pytest.raises(ValueError):
        solve_lp([1], "sideways", [])


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        solve_feasibility([ge([1, 2], 0), ge([1], 0)])


def test_degenerate_cycling_prone_lp_terminates():
    # Beale's example; Dantzig's rule cycles here, Bland's rule must not
    c = [Fraction(-3, 4), 150, Fraction(-1, 50), 6]
    rows = [
        le([Fraction(1, 4), -60, Fraction(-1, 25), 9], 0),
        le([Fraction(1, 2), -90, Fraction(-1, 50), 3], 0),
        le([0, 0, 1, 0], 1),
    ]
    out = solve_lp(c, "min", rows, nonneg_vars=range(4))
    assert out.status is LPStatus.OPTIMAL
    assert out.objective_value == Fraction(-1, 20)


# random systems --------------------------------------------------------------------

coef = st.integers(-3, 3)


@st.composite
def systems(draw, max_vars=6, max_rows=10):
    n = draw(st.integers(1, max_vars))
    m = draw(st.integers(1, max_rows))
    rows = []
    for _ in range(m):
        rel = draw(st.sampled_from(list(Relation)))
        rows.append(LinearConstraint(tuple(draw(st.lists(coef, min_size=n, max_size=n))), rel, draw(coef)))
    nonneg = draw(st.sets(st.integers(0, n - 1)))
    return rows, sorted(nonneg), n


@given(systems())
@settings(max_examples=150)
def test_status_matches_vertex_enumeration(system):
    rows, nonneg, n = system
    out = solve_feasibility(rows, nonneg_vars=nonneg, n_vars=n)
    expected = oracles.feasible_by_vertices(rows, nonneg, n)
    assert out.feasible == expected
    assert out.feasible == oracles.feasible_by_linprog(rows, nonneg, n)
    if out.feasible:
        assert all(r.satisfied_by(out.witness) for r in rows)
        assert all(out.witness[j] >= 0 for j in nonneg)


@given(systems(), st.randoms(use_true_random=False), st.lists(st.fractions(Fraction(1, 5), 5), min_size=10, max_size=10))
@settings(max_examples=100)
def test_status_invariant_under_permutation_and_scaling(system, rnd, scales):
    rows, nonneg, n = system
    base = solve_feasibility(rows, nonneg_vars=nonneg, n_vars=n).status
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    scaled = [r.scaled(s) for r, s in zip(shuffled, scales)]
    assert solve_feasibility(scaled, nonneg_vars=nonneg, n_vars=n).status is base


def test_lp_optimum_matches_linprog():
    from scipy.optimize import linprog

    rng = random.Random(5)
    for _ in range(100):
        n = rng.randint(1, 4)
        rows = [le([rng.randint(-3, 3) for _ in range(n)], rng.randint(0, 5)) for _ in range(rng.randint(1, 6))]
        rows += [le([1] * n, 10)]
        c = [rng.randint(-3, 3) for _ in range(n)]
        out = solve_lp(c, "min", rows, nonneg_vars=range(n))
        ref = linprog(c, A_ub=[[float(x) for x in r.coefficients] for r in rows],
                      b_ub=[float(r.rhs) for r in rows], bounds=[(0, None)] * n, method="highs")
        assert out.status is LPStatus.OPTIMAL and ref.status == 0
        assert float(out.objective_value) == pytest.approx(ref.fun, abs=1e-9)
        assert sum(a * b for a, b in zip(c, out.witness)) == out.objective_value
