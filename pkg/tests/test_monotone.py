import math
import random
from fractions import Fraction

import numpy as np
import pytest

from conelyap.cones import ConeSpec, Membership, contains
from conelyap.errors import ContractError, DimensionError
from conelyap.monotone import (
    QM_THRESHOLD,
    is_qm,
    is_qm_family,
    lorentz_form,
    require_qm,
    wolkowicz_objective,
)
from conelyap.numerics import RationalMatrix, mat_exp

import oracles
from helpers import GURVITS, INTRO_A, eps_matrix, rand_matrix, rand_metzler, rand_proper_generators


def icecream_min_rate(A: RationalMatrix, samples=4000, seed=0) -> float:
    """min over sampled boundary points x of lambda_x(Ax), lambda_x = (-x', x_n) the supporting functional."""
    n = A.nrows
    rng = np.random.default_rng(seed)
    xs = rng.normal(size=(samples, n - 1))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    pts = np.hstack([xs, np.ones((samples, 1))])
    lams = np.hstack([-xs, np.ones((samples, 1))])
    return float(np.min(np.einsum("ij,ij->i", lams, pts @ A.to_numpy().T)))


# examples ---------------------------------------------------------------------------


def test_orthant_examples():
    R2 = ConeSpec.orthant(2)
    assert is_qm(GURVITS[0], R2).verdict
    r = is_qm(INTRO_A, R2)
    assert not r.verdict
    assert (1, 0, -3) in r.violations  # column 1, row 0, entry A_12 = -3


def test_icecream_epsilon_family():
    C = ConeSpec.icecream(3)
    r = is_qm(eps_matrix(1, Fraction(1, 2)), C)
    assert r.verdict and not r.marginal
    r = is_qm(eps_matrix(1, 1), C)
    assert r.verdict and r.marginal
    assert abs(r.certificate.max_eig) <= QM_THRESHOLD
    r = is_qm(eps_matrix(Fraction(1, 2), 1), C)
    assert not r.verdict and r.violations
    assert r.certificate.max_eig > QM_THRESHOLD


def test_icecream_certificate_alpha_in_admissible_interval():
    # QA + A^T Q + alpha Q <= 0 exactly when 2 eps2 <= alpha <= 2 eps1
    r = is_qm(eps_matrix(1, Fraction(1, 2)), ConeSpec.icecream(3))
    assert 1 - 1e-6 <= r.certificate.alpha <= 2 + 1e-6


def test_family_examples():
    R2 = ConeSpec.orthant(2)
    fam = is_qm_family(GURVITS, R2)
    assert fam.verdict and [r.verdict for r in fam.reports] == [True, True]
    C = ConeSpec.polyhedral([(1, 0), (1, 1)], 2)
    assert is_qm_family([RationalMatrix.identity(2)], C).verdict
    fam = is_qm_family([RationalMatrix([[0, 0], [1, 0]])], C)
    assert not fam.verdict
    (viol,) = fam.reports[0].violations
    i, j, value = viol
    assert C.generators[i] == (1, 1) and C.facets[j] == (1, -1) and value == -1
    assert fam.failing() == [0]


def test_empty_family_is_vacuous():
    fam = is_qm_family([], ConeSpec.orthant(2))
    assert fam.verdict and fam.vacuous


def test_require_qm_and_dimension_errors():
    with pytest.raises(ContractError):
        require_qm([INTRO_A], ConeSpec.orthant(2))
    with pytest.raises(DimensionError):
        is_qm(INTRO_A, ConeSpec.orthant(3))


def test_lorentz_form():
    assert lorentz_form(3) == RationalMatrix.diag([1, 1, -1])


# orthant: sign scan oracle ---------------------------------------------------------------


def test_orthant_matches_metzler_scan():
    rng = random.Random(42)
    C = ConeSpec.orthant(3)
    for _ in range(1000):
        A = rand_matrix(rng, 3, max_den=3)
        assert is_qm(A, C).verdict == oracles.metzler_scan(A)


# ice cream: boundary sampling oracle ------------------------------------------------------


def test_icecream_matches_boundary_sampling():
    rng = random.Random(5)
    C = ConeSpec.icecream(3)
    agree = 0
    while agree < 150:
        A = rand_matrix(rng, 3, max_den=2)
        rate = icecream_min_rate(A)
        if abs(rate) < 0.05:
            continue  # too close to the boundary for a sampling oracle
        assert is_qm(A, C).verdict == (rate >= 0), A
        agree += 1


def test_icecream_objective_convex_bracket():
    rng = random.Random(8)
    C = ConeSpec.icecream(3)
    for _ in range(30):
        A = rand_matrix(rng, 3, max_den=2)
        f, bound = wolkowicz_objective(A)
        cert = is_qm(A, C).certificate
        assert f(-bound) >= cert.max_eig - 1e-9
        assert f(bound) >= cert.max_eig - 1e-9
        grid = np.linspace(-bound, bound, 401)
        assert cert.max_eig <= min(f(a) for a in grid) + 1e-7


# polyhedral: invariance cross-checks ----------------------------------------------------------


def simplicial_qm(rng, n):
    """K M K^{-1} with M Metzler is QM for the simplicial cone spanned by K's columns."""
    while True:
        gens = rand_proper_generators(rng, n, n)
        K = RationalMatrix(gens).T
        if K.det() != 0:
            break
    M = rand_metzler(rng, n)
    return gens, K @ M @ K.inverse()


def test_polyhedral_qm_matches_facet_oracle():
    rng = random.Random(13)
    for _ in range(80):
        n = rng.randint(2, 3)
        gens = rand_proper_generators(rng, n, rng.randint(n, n + 2))
        C = ConeSpec.polyhedral(gens, n)
        A = rand_matrix(rng, n)
        facets = oracles.dual_generators_by_facets(list(C.generators), n)
        expected = all(
            sum(a * b for a, b in zip(lam, A.apply(k))) >= 0
            for lam in facets for k in C.generators if sum(a * b for a, b in zip(lam, k)) == 0
        )
        assert is_qm(A, C).verdict == expected


def test_qm_implies_forward_invariance():
    rng = random.Random(21)
    nrng = np.random.default_rng(21)
    for _ in range(20):
        n = rng.randint(2, 3)
        gens, A = simplicial_qm(rng, n)
        C = ConeSpec.polyhedral(gens, n)
        assert is_qm(A, C).verdict
        A = A * Fraction(1, max(1, math.ceil(A.norm_inf())))  # positive scaling keeps QM
        G = np.array(gens, dtype=float).T
        for _ in range(50):
            x0 = G @ nrng.uniform(0, 1, size=len(gens))
            for t in (0.1, 1.0, 10.0):
                assert contains(C, mat_exp(A, t) @ x0, 1e-8) is not Membership.OUTSIDE


def test_non_qm_violation_exits_the_cone():
    rng = random.Random(34)
    found = 0
    while found < 30:
        n = rng.randint(2, 3)
        gens = rand_proper_generators(rng, n, rng.randint(n, n + 1))
        C = ConeSpec.polyhedral(gens, n)
        A = rand_matrix(rng, n)
        r = is_qm(A, C)
        if r.verdict:
            continue
        found += 1
        i, j, _ = r.violations[0]
        k = np.array(C.generators[i], dtype=float)
        lam = np.array(C.facets[j], dtype=float)
        assert any(lam @ (mat_exp(A, t) @ k) < 0 for t in (1e-3, 1e-2, 1e-1))


def test_icecream_qm_is_forward_invariant():
    C = ConeSpec.icecream(3)
    A = eps_matrix(2, 1)
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = rng.normal(size=2)
        x0 = np.array([*(v / np.linalg.norm(v) * rng.uniform(0, 1)), 1.0])
        for t in (0.1, 1.0, 10.0):
            assert contains(C, mat_exp(A, t) @ x0, 1e-8) is not Membership.OUTSIDE
