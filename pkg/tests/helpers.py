"""Fixed example data and seeded random corpora shared by the test modules."""

import random
from fractions import Fraction

import numpy as np

from conelyap.numerics import RationalMatrix

# worked examples
INTRO_A = RationalMatrix([[-2, -3], [1, 1]])
GURVITS = (RationalMatrix([[-1, 0], [1, -1]]), RationalMatrix([[-1, 1], [0, -1]]))
A_PAIR = (RationalMatrix([[-1, 0], [2, 1]]), RationalMatrix([[1, 2], [0, -1]]))
B_PAIR = (RationalMatrix([[-1, 1], [1, -1]]), RationalMatrix([[-1, 1], [1, -1]]))
E_PAIR = GURVITS
F_PAIR = (RationalMatrix([[-2, 0], [1, -1]]), RationalMatrix([[-1, 1], [0, -2]]))


def eps_matrix(e1, e2) -> RationalMatrix:
    e1, e2 = Fraction(e1), Fraction(e2)
    return RationalMatrix([[-e1, -1, 0], [1, -e1, 0], [0, 0, -e2]])


def rand_rational(rng: random.Random, lo=-3, hi=3, max_den=1) -> Fraction:
    return Fraction(rng.randint(lo * max_den, hi * max_den), rng.randint(1, max_den))


def rand_matrix(rng: random.Random, n: int, lo=-3, hi=3, max_den=1) -> RationalMatrix:
    return RationalMatrix([[rand_rational(rng, lo, hi, max_den) for _ in range(n)] for _ in range(n)])


def rand_metzler(rng: random.Random, n: int, lo=-3, hi=3) -> RationalMatrix:
    rows = [[rng.randint(lo, hi) if i == j else rng.randint(0, hi) for j in range(n)] for i in range(n)]
    return RationalMatrix(rows)


def rand_hurwitz_metzler(rng: random.Random, n: int, lo=-3, hi=3) -> RationalMatrix:
    while True:
        A = rand_metzler(rng, n, lo, hi)
        if max(np.linalg.eigvals(A.to_numpy()).real) < -1e-9:
            return A


def rand_generators(rng: random.Random, n: int, count: int, lo=-3, hi=3) -> list[tuple]:
    out = []
    while len(out) < count:
        g = tuple(rng.randint(lo, hi) for _ in range(n))
        if any(g):
            out.append(g)
    return out


def rand_proper_generators(rng: random.Random, n: int, count: int) -> list[tuple]:
    """Random generators, redrawn until the cone they span is pointed and solid."""
    from conelyap.cones import is_pointed, is_solid

    while True:
        gens = rand_generators(rng, n, count)
        if is_solid(gens, n) and is_pointed(gens):
            return gens
