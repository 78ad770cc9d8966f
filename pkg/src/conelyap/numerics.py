"""Exact rational linear algebra and the floating-point kernels built on it.

Everything that decides a property (Hurwitz, membership, rank) runs on
:class:`fractions.Fraction`.  Floating point appears only in the advisory
kernels at the bottom of the module: eigenvalues, the extremal eigenvalue of
a symmetric matrix and the matrix exponential.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import ContractError, DimensionError, NumericalFailure, RangeError

Rational = Fraction
Vector = tuple  # tuple[Fraction, ...]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")

# Largest ||tA||_inf for which mat_exp promises 1e-12 relative accuracy.
MAT_EXP_MAX_NORM = 50.0


def as_rational(value) -> Fraction:
    """Convert ``value`` to an exact Fraction.

    Accepts ints, Fractions and strings ``"p"`` or ``"p/q"``.  Floats are
    rejected unless they are integral, so that binary round-off never leaks
    into an exact computation.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if not match:
            raise ValueError(f"not a rational literal: {value!r}")
        num, den = match.group(1), match.group(2)
        if den is not None and int(den) == 0:
            raise ZeroDivisionError(f"zero denominator in {value!r}")
        return Fraction(int(num), int(den) if den is not None else 1)
    if isinstance(value, float) and value.is_integer():
        return Fraction(int(value))
    if isinstance(value, (np.integer,)):
        return Fraction(int(value))
    raise TypeError(f"cannot convert {type(value).__name__} {value!r} to an exact rational")


def rational_vector(values: Iterable) -> Vector:
    return tuple(as_rational(v) for v in values)


def format_rational(q: Fraction) -> str:
    """Serialize as ``"p/q"`` (or ``"p"`` for integers)."""
    return str(q)


def dot(u: Sequence, v: Sequence):
    if len(u) != len(v):
        raise DimensionError(f"dot product of lengths {len(u)} and {len(v)}")
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def is_zero_vector(v: Sequence) -> bool:
    return all(x == 0 for x in v)


def primitive_ray(v: Sequence) -> Vector:
    """Scale a nonzero rational vector by a positive factor to a primitive integer vector."""
    v = rational_vector(v)
    if is_zero_vector(v):
        raise ContractError("zero vector has no ray direction")
    lcm = reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in v), 1)
    ints = [int(x * lcm) for x in v]
    g = reduce(math.gcd, (abs(x) for x in ints))
    return tuple(Fraction(x // g) for x in ints)


def primitive_line(v: Sequence) -> Vector:
    """Like :func:`primitive_ray` but with the first nonzero coordinate made positive."""
    r = primitive_ray(v)
    first = next(x for x in r if x != 0)
    return r if first > 0 else tuple(-x for x in r)


def _row_echelon(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form by exact Gauss-Jordan elimination."""
    rows = [list(r) for r in rows]
    pivots: list[int] = []
    if not rows:
        return rows, pivots
    ncols = len(rows[0])
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        p = rows[r][c]
        rows[r] = [x / p for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(vectors: Sequence[Sequence]) -> int:
    """Exact rank of a list of rational vectors."""
    vectors = [rational_vector(v) for v in vectors]
    if not vectors:
        return 0
    return len(_row_echelon(vectors)[1])


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[Vector]:
    """Exact basis of ``{x : r.x = 0 for every row r}``."""
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    ech, pivots = _row_echelon([rational_vector(r) for r in rows])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for i, p in enumerate(pivots):
            x[p] = -ech[i][f]
        basis.append(tuple(x))
    return basis


class RationalMatrix:
    """Immutable dense matrix of Fractions.

    Equality is exact and entrywise.  ``A @ B`` multiplies matrices,
    ``A @ v`` (with ``v`` a sequence) applies ``A`` to a vector and returns
    a tuple.
    """

    __slots__ = ("_rows", "_shape")

    def __init__(self, rows: Iterable[Iterable]):
        data = tuple(rational_vector(r) for r in rows)
        ncols = len(data[0]) if data else 0
        if any(len(r) != ncols for r in data):
            raise DimensionError("ragged rows")
        self._rows = data
        self._shape = (len(data), ncols)

    # construction -------------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, nrows: int, ncols: int | None = None) -> "RationalMatrix":
        ncols = nrows if ncols is None else ncols
        return cls([[0] * ncols for _ in range(nrows)])

    @classmethod
    def diag(cls, values: Iterable) -> "RationalMatrix":
        values = rational_vector(values)
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence["RationalMatrix"]]) -> "RationalMatrix":
        rows = []
        for block_row in blocks:
            heights = {b.nrows for b in block_row}
            if len(heights) != 1:
                raise DimensionError("blocks in one block row differ in height")
            for i in range(heights.pop()):
                rows.append([x for b in block_row for x in b._rows[i]])
        return cls(rows)

    # access ---------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    @property
    def nrows(self) -> int:
        return self._shape[0]

    @property
    def ncols(self) -> int:
        return self._shape[1]

    @property
    def rows(self) -> tuple[Vector, ...]:
        return self._rows

    def row(self, i: int) -> Vector:
        return self._rows[i]

    def column(self, j: int) -> Vector:
        return tuple(r[j] for r in self._rows)

    def __getitem__(self, index):
        i, j = index
        return self._rows[i][j]

    def __iter__(self):
        return iter(self._rows)

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def __repr__(self):
        body = ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self._rows)
        return f"RationalMatrix([{body}])"

    def __reduce__(self):
        return (RationalMatrix, (self._rows,))

    # arithmetic -----------------------------------------------------------
    def _check_same_shape(self, other):
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same_shape(other)
        return RationalMatrix(
            [a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)
        )

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same_shape(other)
        return RationalMatrix(
            [a - b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)
        )

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix([-a for a in r] for r in self._rows)

    def __mul__(self, scalar) -> "RationalMatrix":
        c = as_rational(scalar)
        return RationalMatrix([c * a for a in r] for r in self._rows)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, RationalMatrix):
            if self.ncols != other.nrows:
                raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
            cols = list(zip(*other._rows)) if other.nrows else [() for _ in range(other.ncols)]
            return RationalMatrix([dot(r, c) for c in cols] for r in self._rows)
        return self.apply(other)

    def apply(self, v: Sequence) -> Vector:
        v = rational_vector(v)
        if len(v) != self.ncols:
            raise DimensionError(f"vector of length {len(v)} for matrix {self.shape}")
        return tuple(dot(r, v) for r in self._rows)

    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix(zip(*self._rows)) if self.nrows else RationalMatrix.zeros(0)

    # predicates / scalars ---------------------------------------------------
    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def require_square(self, what: str = "matrix") -> int:
        if not self.is_square():
            raise DimensionError(f"{what} must be square, got {self.shape}")
        return self.nrows

    def is_symmetric(self) -> bool:
        return self.is_square() and all(
            self._rows[i][j] == self._rows[j][i] for i in range(self.nrows) for j in range(i)
        )

    def is_metzler(self) -> bool:
        """All off-diagonal entries nonnegative."""
        return all(
            self._rows[i][j] >= 0
            for i in range(self.nrows)
            for j in range(self.ncols)
            if i != j
        )

    def trace(self) -> Fraction:
        self.require_square()
        return sum((self._rows[i][i] for i in range(self.nrows)), Fraction(0))

    def det(self) -> Fraction:
        """Exact determinant by fraction-valued Gaussian elimination."""
        n = self.require_square()
        a = [list(r) for r in self._rows]
        det = Fraction(1)
        for c in range(n):
            p = next((i for i in range(c, n) if a[i][c] != 0), None)
            if p is None:
                return Fraction(0)
            if p != c:
                a[c], a[p] = a[p], a[c]
                det = -det
            piv = a[c][c]
            det *= piv
            for i in range(c + 1, n):
                if a[i][c] != 0:
                    f = a[i][c] / piv
                    a[i] = [x - f * y for x, y in zip(a[i], a[c])]
        return det

    def inverse(self) -> "RationalMatrix":
        n = self.require_square()
        aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self._rows)]
        ech, pivots = _row_echelon(aug)
        if pivots[:n] != list(range(n)):
            raise ZeroDivisionError("matrix is singular")
        return RationalMatrix(r[n:] for r in ech)

    def rank(self) -> int:
        return rank(self._rows)

    def norm_inf(self) -> Fraction:
        return max((sum((abs(x) for x in r), Fraction(0)) for r in self._rows), default=Fraction(0))

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self._rows], dtype=float).reshape(self.shape)


def as_matrix(value) -> RationalMatrix:
    return value if isinstance(value, RationalMatrix) else RationalMatrix(value)


# characteristic polynomial and Routh-Hurwitz ----------------------------------


@dataclass(frozen=True)
class CharPoly:
    """Monic polynomial, coefficients in descending degree."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = rational_vector(self.coefficients)
        if not coeffs or coeffs[0] != 1:
            raise ContractError("characteristic polynomial must be monic")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z):
        acc = 0
        for c in self.coefficients:
            acc = acc * z + (c if isinstance(z, Fraction) else float(c))
        return acc

    def __str__(self):
        terms = []
        n = self.degree
        for k, c in enumerate(self.coefficients):
            if c == 0:
                continue
            p = n - k
            mono = "" if p == 0 else ("s" if p == 1 else f"s^{p}")
            mag = abs(c)
            coef = "" if (mag == 1 and p > 0) else str(mag)
            body = f"{coef}*{mono}" if coef and mono else (coef or mono)
            terms.append(("-" if c < 0 else "+", body))
        if not terms:
            return "0"
        out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out


def char_poly(A: RationalMatrix) -> CharPoly:
    """det(sI - A) by the Faddeev-LeVerrier recurrence, exactly."""
    A = as_matrix(A)
    n = A.require_square()
    coeffs = [Fraction(1)]
    M = RationalMatrix.zeros(n)
    ident = RationalMatrix.identity(n)
    for k in range(1, n + 1):
        M = A @ M + ident * coeffs[-1]
        coeffs.append(-(A @ M).trace() / k)
    return CharPoly(tuple(coeffs))


class RouthVerdict(enum.Enum):
    HURWITZ = "hurwitz"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"  # zero pivot: a root on, or a degenerate array near, the imaginary axis

    def __str__(self):
        return self.value


def routh_array(p: CharPoly) -> list[list[Fraction]]:
    """Rows of the Routh array, stopping at the first zero pivot."""
    c = list(p.coefficients)
    width = (len(c) + 1) // 2
    r0 = c[0::2] + [Fraction(0)] * (width - len(c[0::2]))
    r1 = c[1::2] + [Fraction(0)] * (width - len(c[1::2]))
    table = [r0]
    if p.degree == 0:
        return table
    table.append(r1)
    for _ in range(p.degree - 1):
        prev, cur = table[-2], table[-1]
        if cur[0] == 0:
            break
        nxt = [
            (cur[0] * prev[k + 1] - prev[0] * cur[k + 1]) / cur[0]
            for k in range(width - 1)
        ] + [Fraction(0)]
        table.append(nxt)
    return table


def routh_verdict(p: CharPoly) -> RouthVerdict:
    """Three-way exact stability verdict for a monic real polynomial.

    A negative coefficient or a negative first-column entry proves a root in
    the open right half plane.  A zero first-column entry reached with no
    sign change so far is reported as MARGINAL rather than guessed.
    """
    if any(x < 0 for x in p.coefficients):
        return RouthVerdict.UNSTABLE
    table = routh_array(p)
    for row in table:
        if row[0] < 0:
            return RouthVerdict.UNSTABLE
        if row[0] == 0:
            return RouthVerdict.MARGINAL
    if len(table) < p.degree + 1:
        return RouthVerdict.MARGINAL
    return RouthVerdict.HURWITZ


def routh_hurwitz(p: CharPoly) -> bool:
    """True iff every root of ``p`` has negative real part."""
    return routh_verdict(p) is RouthVerdict.HURWITZ


def hurwitz_verdict(A: RationalMatrix) -> RouthVerdict:
    return routh_verdict(char_poly(A))


# floating-point kernels ------------------------------------------------------


def _as_float_array(A) -> np.ndarray:
    if isinstance(A, RationalMatrix):
        return A.to_numpy()
    return np.asarray(A, dtype=float)


def eigenvalues(A) -> np.ndarray:
    """All eigenvalues, sorted by real part (then imaginary part) descending."""
    M = _as_float_array(A)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"eigenvalues need a square matrix, got {M.shape}")
    if M.size == 0:
        return np.zeros(0, dtype=complex)
    try:
        w = scipy.linalg.eigvals(M, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigenvalue iteration failed: {exc}") from exc
    w = np.asarray(w, dtype=complex)
    order = np.lexsort((-w.imag, -w.real))
    return w[order]


def spectral_abscissa(A) -> float:
    w = eigenvalues(A)
    return float(w.real.max()) if w.size else float("-inf")


def _sym_eig_max_float(S: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(S)[-1])


def sym_eig_max(S) -> float:
    """Largest eigenvalue of an exactly symmetric rational matrix."""
    S = as_matrix(S)
    S.require_square("sym_eig_max input")
    if not S.is_symmetric():
        raise ContractError("sym_eig_max requires an exactly symmetric matrix")
    if S.nrows == 0:
        raise DimensionError("empty matrix has no eigenvalues")
    return _sym_eig_max_float(S.to_numpy())


def mat_exp(A, t: float = 1.0) -> np.ndarray:
    """e^{tA} by scaling and squaring.

    Raises RangeError when ||tA||_inf exceeds MAT_EXP_MAX_NORM, beyond which
    the 1e-12 relative accuracy is not promised.
    """
    M = _as_float_array(A)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"mat_exp needs a square matrix, got {M.shape}")
    t = float(t)
    if not math.isfinite(t):
        raise RangeError("time must be finite")
    tM = t * M
    norm = float(np.abs(tM).sum(axis=1).max()) if tM.size else 0.0
    if norm > MAT_EXP_MAX_NORM:
        raise RangeError(f"||tA||_inf = {norm:.3g} exceeds {MAT_EXP_MAX_NORM}")
    if t == 0.0:
        return np.eye(M.shape[0])
    return scipy.linalg.expm(tM)
