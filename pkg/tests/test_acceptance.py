"""Acceptance criteria 1 to 10.

Each test records one PASS/FAIL line; the lines are printed in the terminal
summary of a pytest run, and also when this file is executed directly:

    python3 tests/test_acceptance.py
"""

import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conelyap.cones import ConeSpec
from conelyap.coupling import (
    CouplingTemplate,
    DiffusiveFamily,
    analyze_coupled,
    assemble_coupled,
    rational_range,
    sweep_destabilize,
)
from conelyap.dynamics import monitor_invariance, monitor_lyapunov, simulate
from conelyap.lyapunov import LinearFunctional, cllf_conditions, find_cllf, gurvits_planar, validate_certificate
from conelyap.monotone import QM_THRESHOLD, is_qm
from conelyap.numerics import RationalMatrix, RouthVerdict, char_poly, mat_exp, routh_hurwitz, spectral_abscissa
from conelyap.problem import parse_problem

import oracles
from helpers import (
    A_PAIR, B_PAIR, E_PAIR, F_PAIR, GURVITS, INTRO_A,
    eps_matrix, rand_generators, rand_hurwitz_metzler, rand_matrix,
)
from test_cones import (
    check_dual_of_sum,
    check_duality_round_trip,
    check_pointed_iff_dual_solid,
    check_pointed_sum,
    random_cone_corpus,
)

GALLERY = Path(__file__).resolve().parents[1] / "src" / "conelyap" / "gallery"
R2 = ConeSpec.orthant(2)
RESULTS: dict[int, tuple[bool, str]] = {}


def record(number, ok, detail):
    RESULTS[number] = (bool(ok), detail)
    return ok


def result_lines():
    return [f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}" for k, (ok, msg) in sorted(RESULTS.items())]


def diag_family(d1, d2):
    return DiffusiveFamily.uniform(2, RationalMatrix.diag([d1, d2]))


# 1 -------------------------------------------------------------------------------------------


def test_criterion_01_intro_destabilization():
    start = time.perf_counter()
    template = CouplingTemplate.from_mapping(2, 2, {(0, 1): [[1, 0], [0, "d"]]})
    expected = {
        Fraction(1, 32): RouthVerdict.UNSTABLE,
        Fraction(1, 16): RouthVerdict.UNSTABLE,
        Fraction(3, 32): RouthVerdict.UNSTABLE,
        Fraction(1, 8): RouthVerdict.MARGINAL,
        Fraction(5, 32): RouthVerdict.HURWITZ,
        Fraction(1, 4): RouthVerdict.HURWITZ,
        Fraction(1): RouthVerdict.HURWITZ,
    }
    cells = sweep_destabilize([INTRO_A, INTRO_A], template, {"d": list(expected)}, R2)
    got = {c.values["d"]: c.report.verdict for c in cells}
    elapsed = time.perf_counter() - start
    wrong = [str(d) for d in expected if got[d] is not expected[d]]
    ok = not wrong and elapsed < 1.0
    record(1, ok, f"intro sweep, {len(wrong)} wrong verdicts, {elapsed:.3f}s")
    assert not wrong, wrong
    assert elapsed < 1.0


# 2 -------------------------------------------------------------------------------------------


def test_criterion_02_orthant_qm_is_metzler():
    rng = random.Random(2)
    C = ConeSpec.orthant(3)
    disagree = 0
    for _ in range(1000):
        A = rand_matrix(rng, 3, max_den=4)
        disagree += is_qm(A, C).verdict != oracles.metzler_scan(A)
    record(2, disagree == 0, f"orthant QM vs sign scan, {disagree}/1000 disagreements")
    assert disagree == 0


# 3 -------------------------------------------------------------------------------------------


def test_criterion_03_icecream_boundary():
    start = time.perf_counter()
    C = ConeSpec.icecream(3)
    r1 = is_qm(eps_matrix(1, Fraction(1, 2)), C)
    r2 = is_qm(eps_matrix(1, 1), C)
    r3 = is_qm(eps_matrix(Fraction(1, 2), 1), C)
    elapsed = time.perf_counter() - start
    checks = [
        r1.verdict and not r1.marginal and r1.certificate.max_eig < -QM_THRESHOLD,
        r2.verdict and r2.marginal and abs(r2.certificate.max_eig) <= QM_THRESHOLD,
        not r3.verdict and r3.certificate.max_eig > QM_THRESHOLD,
        QM_THRESHOLD == 1e-9,
        elapsed < 1.0,
    ]
    record(3, all(checks), f"epsilon family QM/marginal/not-QM, {elapsed:.3f}s")
    assert all(checks), checks


# 4 -------------------------------------------------------------------------------------------


def test_criterion_04_gurvits():
    start = time.perf_counter()
    no_cllf = find_cllf(GURVITS, R2) is None
    planar = gurvits_planar(*GURVITS)
    rng = random.Random(4)
    bad_det = 0
    for _ in range(50):
        d1 = Fraction(rng.randint(0, 200), rng.randint(1, 30))
        d2 = Fraction(rng.randint(0, 200), rng.randint(1, 30))
        det = assemble_coupled(GURVITS, diag_family(d1, d2)).matrix.det()
        bad_det += det != 3 * d1 * d2 + 2 * (d1 + d2) + 1
    grid = [(a, b) for a in rational_range(0, 10, 11) for b in rational_range(0, 10, 11)]
    not_hurwitz = sum(not analyze_coupled(GURVITS, diag_family(a, b), R2).hurwitz for a, b in grid)
    elapsed = time.perf_counter() - start
    ok = no_cllf and planar and bad_det == 0 and not_hurwitz == 0 and elapsed < 10.0
    record(
        4, ok,
        f"no CLLF={no_cllf}, planar test={planar}, det mismatches {bad_det}/50, "
        f"non-Hurwitz cells {not_hurwitz}/121, {elapsed:.2f}s",
    )
    assert ok


# 5 -------------------------------------------------------------------------------------------


def test_criterion_05_sharpness_pairs():
    expected = {
        "A": (A_PAIR, (True, True, False)),
        "B": (B_PAIR, (False, True, True)),
        "E": (E_PAIR, (True, False, True)),
        "F": (F_PAIR, (True, True, True)),
    }
    mark = {True: "✓", False: "✗"}
    wrong = []
    for name, (pair, want) in expected.items():
        got = cllf_conditions(pair, R2).conditions
        if got != want:
            wrong.append(f"{name}: got {''.join(mark[c] for c in got)} want {''.join(mark[c] for c in want)}")
    f_report = cllf_conditions(F_PAIR, R2)
    f_cert = f_report.certificate is not None and validate_certificate(f_report.certificate, F_PAIR, R2)
    unit = validate_certificate((1, 1), F_PAIR, R2)
    ok = not wrong and f_cert and unit
    record(5, ok, "condition vectors " + ("match" if not wrong else "; ".join(wrong)) + f", (1,1) on F: {unit}")
    assert ok, wrong


# 6 -------------------------------------------------------------------------------------------


def test_criterion_06_three_conditions_equivalence():
    rng = random.Random(6)
    mismatches = kernel_counterexamples = existing = 0
    for _ in range(500):
        pair = [rand_hurwitz_metzler(rng, 2), rand_hurwitz_metzler(rng, 2)]
        r = cllf_conditions(pair, R2)
        exists = find_cllf(pair, R2) is not None
        existing += exists
        mismatches += exists != all(r.conditions)
        kernel_counterexamples += r.kernel_sufficient and not exists
    ok = mismatches == 0 and kernel_counterexamples == 0
    record(
        6, ok,
        f"LP vs conditions {mismatches}/500 mismatches ({existing} with a CLLF), "
        f"kernel condition counterexamples {kernel_counterexamples}",
    )
    assert ok


# 7 -------------------------------------------------------------------------------------------


def test_criterion_07_coupled_invariance_and_decrease():
    rng = random.Random(7)
    nrng = np.random.default_rng(7)
    lam = LinearFunctional((1, 1)).repeated(2)
    P = R2.product(2)
    violations = 0
    worst = -np.inf
    for _ in range(20):
        F = diag_family(Fraction(rng.randint(0, 40), 8), Fraction(rng.randint(0, 40), 8))
        M = assemble_coupled(F_PAIR, F).matrix
        for _ in range(20):
            x0 = nrng.uniform(0, 1, size=4)
            traj = simulate(M, x0, 10.0, 0.05)
            violations += len(monitor_invariance(traj, P, 1e-8))
            worst = max(worst, monitor_lyapunov(traj, lam).max_increase)
    ok = violations == 0 and worst <= 1e-9
    record(7, ok, f"F-pair coupled, 400 runs, {violations} invariance violations, max Λ increase {worst:.3g}")
    assert ok


# 8 -------------------------------------------------------------------------------------------


def test_criterion_08_icecream_coupled():
    prob = parse_problem(GALLERY / "icecream_coupled.json")
    As = prob.matrices
    eps2 = min(-A[2, 2] for A in As)
    assert all(0 < -A[2, 2] <= -A[0, 0] for A in As)
    T = float(20 / eps2)
    C = prob.cone
    rng = np.random.default_rng(8)
    worst_ratio, not_decreasing, runs = 0.0, 0, 0
    for d in (Fraction(0), Fraction(1, 2), Fraction(5)):
        M = assemble_coupled(As, DiffusiveFamily.uniform(2, RationalMatrix.diag([d] * 3))).matrix
        for _ in range(20):
            blocks = []
            for _ in range(2):
                v = rng.normal(size=2)
                h = rng.uniform(0.5, 2.0)
                blocks.append([*(v / np.linalg.norm(v) * h * rng.uniform(0, 0.95)), h])
            x0 = np.concatenate(blocks)
            assert all(C.margin(np.array(b)) > 0 for b in blocks)
            traj = simulate(M, x0, T, 0.1)
            worst_ratio = max(worst_ratio, np.linalg.norm(traj.final()) / np.linalg.norm(x0))
            height = traj.states[:, 2] + traj.states[:, 5]
            not_decreasing += not np.all(np.diff(height) < 0)
            runs += 1
    ok = worst_ratio <= 1e-3 and not_decreasing == 0
    record(
        8, ok,
        f"ice-cream coupled, {runs} runs to T={T:g}, worst |x(T)|/|x0| {worst_ratio:.3g}, "
        f"{not_decreasing} runs with non-decreasing height",
    )
    assert ok


# 9 -------------------------------------------------------------------------------------------


def test_criterion_09_cone_properties():
    rng = random.Random(9)
    failures = []
    suites = {
        "duality round trip": lambda n, g: check_duality_round_trip(g, n),
        "dual of a sum": lambda n, g: check_dual_of_sum(g, _partner(rng, n), n),
        "pointed sum": lambda n, g: check_pointed_sum(g, _partner(rng, n)),
        "pointed iff dual solid": lambda n, g: check_pointed_iff_dual_solid(g, n),
    }
    for label, check in suites.items():
        for n, gens in random_cone_corpus(900, 200):
            try:
                check(n, gens)
            except AssertionError:
                failures.append((label, n, gens))
    record(9, not failures, f"4 suites x 200 cones (n<=4), {len(failures)} failures")
    assert not failures, failures[:3]


def _partner(rng, n):
    return rand_generators(rng, n, rng.randint(1, 4))


# 10 ------------------------------------------------------------------------------------------


def test_criterion_10_numerics():
    prng = random.Random(10)
    nrng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(100):
        A = rand_matrix(prng, 4, lo=-5, hi=5, max_den=4)
        while float(A.norm_inf()) > 5:
            A = A * Fraction(1, 2)
        s, t = nrng.uniform(0, 1, size=2)
        worst = max(worst, float(np.max(np.abs(mat_exp(A, s + t) - mat_exp(A, s) @ mat_exp(A, t)))))
    disagree = checked = 0
    while checked < 1000:
        A = rand_matrix(prng, prng.randint(1, 5), max_den=2)
        alpha = spectral_abscissa(A)
        if abs(alpha) < 1e-3:
            continue
        disagree += routh_hurwitz(char_poly(A)) != (alpha < 0)
        checked += 1
    ok = worst <= 1e-9 and disagree == 0
    record(10, ok, f"semigroup max error {worst:.3g} over 100 matrices, Routh vs abscissa {disagree}/1000 disagreements")
    assert ok


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(result_lines()))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
