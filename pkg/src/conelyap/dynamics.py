"""Trajectories of linear, switched and coupled systems, plus monitors.

Propagation is by exact matrix exponentials per step, never by an ODE
integrator.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .cones import ConeSpec, Membership, contains
from .errors import ContractError, DimensionError
from .lyapunov import LinearFunctional
from .numerics import as_matrix, mat_exp

LYAPUNOV_SLACK = 1e-9
STEPS_PER_SEGMENT = 20


def propagate(A, x0: Sequence, t: float) -> np.ndarray:
    """e^{tA} x0."""
    if t < 0:
        raise ContractError("propagation time must be nonnegative")
    x0 = np.asarray([float(v) for v in x0], dtype=float)
    E = mat_exp(A, t)
    if E.shape[0] != x0.shape[0]:
        raise DimensionError(f"state of length {x0.shape[0]} for a {E.shape[0]}x{E.shape[0]} system")
    return E @ x0


@dataclass(frozen=True)
class SwitchingSchedule:
    """Ordered (mode index, duration) segments; modes index the system list."""

    segments: tuple

    def __post_init__(self):
        segs = tuple((int(mode), float(duration)) for mode, duration in self.segments)
        if not segs:
            raise ContractError("a schedule needs at least one segment")
        for mode, duration in segs:
            if not duration > 0 or not np.isfinite(duration):
                raise ContractError(f"segment duration must be positive and finite, got {duration}")
            if mode < 0:
                raise ContractError(f"invalid mode index {mode}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def alternating(cls, modes: Sequence[int], duration: float, total: float) -> "SwitchingSchedule":
        count = int(round(total / duration))
        return cls(tuple((modes[k % len(modes)], duration) for k in range(count)))

    @property
    def total_duration(self) -> float:
        return sum(d for _, d in self.segments)

    @property
    def min_duration(self) -> float:
        return min(d for _, d in self.segments)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.states.shape[0] != self.times.shape[0]:
            raise DimensionError("one state per sample time required")
        if np.any(np.diff(self.times) <= 0):
            raise ContractError("sample times must be strictly increasing")

    @property
    def samples(self):
        return list(zip(self.times.tolist(), self.states))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, out: TextIO | None = None) -> str:
        """Write ``t,x1,...,xn`` rows with 17 significant digits; also returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(self.dim)])
        for t, x in zip(self.times, self.states):
            writer.writerow([format(float(t), ".17g")] + [format(float(v), ".17g") for v in x])
        text = buf.getvalue()
        if out is not None:
            out.write(text)
        return text


def read_trajectory_csv(text: str) -> Trajectory:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return Trajectory(data[:, 0], data[:, 1:])


def _segment_steps(duration: float, dt: float) -> list[float]:
    full = int(np.floor(duration / dt * (1 + 1e-12)))
    steps = [dt] * full
    remainder = duration - full * dt
    if remainder > 1e-12 * duration:
        steps.append(remainder)
    elif steps:
        steps[-1] += remainder
    return steps


def simulate_switched(
    As: Sequence,
    schedule: SwitchingSchedule,
    x0: Sequence,
    dt: float | None = None,
    *,
    system_id: str = "switched",
) -> Trajectory:
    """Sample x' = A(t) x where A(t) follows ``schedule``.

    Each segment is advanced by exact exponential steps of ``dt`` (default:
    shortest segment / 20), with one final partial step when dt does not
    divide the segment.
    """
    mats = [as_matrix(A) for A in As]
    for mode, _ in schedule.segments:
        if mode >= len(mats):
            raise ContractError(f"schedule refers to mode {mode}, only {len(mats)} systems given")
    if dt is None:
        dt = schedule.min_duration / STEPS_PER_SEGMENT
    if not dt > 0:
        raise ContractError("sampling step must be positive")
    x = np.asarray([float(v) for v in x0], dtype=float)
    n = x.shape[0]
    if any(M.shape != (n, n) for M in mats):
        raise DimensionError(f"state of length {n} does not match the system matrices")

    cache: dict[tuple[int, float], np.ndarray] = {}
    times, states = [0.0], [x.copy()]
    t = 0.0
    for mode, duration in schedule.segments:
        start = t
        elapsed = 0.0
        for h in _segment_steps(duration, dt):
            key = (mode, h)
            if key not in cache:
                cache[key] = mat_exp(mats[mode], h)
            x = cache[key] @ x
            elapsed += h
            t = start + elapsed
            times.append(t)
            states.append(x.copy())
        t = start + duration
        times[-1] = t
    meta = {"system": system_id, "x0": [float(v) for v in x0], "dt": float(dt)}
    return Trajectory(np.array(times), np.array(states), meta)


def simulate(A, x0: Sequence, horizon: float, dt: float | None = None, *, system_id: str = "linear") -> Trajectory:
    """Single-mode special case of :func:`simulate_switched`."""
    if dt is None:
        dt = horizon / STEPS_PER_SEGMENT
    return simulate_switched([A], SwitchingSchedule(((0, horizon),)), x0, dt, system_id=system_id)


@dataclass(frozen=True)
class InvarianceViolation:
    index: int
    time: float
    state: tuple
    margin: float


def monitor_invariance(traj: Trajectory, C: ConeSpec, tol: float = 1e-8) -> list[InvarianceViolation]:
    """Samples that lie outside C by more than the tolerance band."""
    if traj.dim != C.dim:
        raise DimensionError(f"trajectory in R^{traj.dim}, cone in R^{C.dim}")
    out = []
    for k, (t, x) in enumerate(zip(traj.times, traj.states)):
        if contains(C, x, tol) is Membership.OUTSIDE:
            out.append(InvarianceViolation(k, float(t), tuple(float(v) for v in x), C.margin(x)))
    return out


@dataclass(frozen=True)
class LyapunovMonitor:
    values: np.ndarray
    max_increase: float
    passed: bool
    strictly_decreasing: bool

    def __bool__(self):
        return self.passed


def monitor_lyapunov(traj: Trajectory, v) -> LyapunovMonitor:
    """Track v . x(t_k); pass iff no step increases it by more than 1e-9 (1 + |v . x|)."""
    coeffs = v.as_array() if isinstance(v, LinearFunctional) else np.asarray(v, dtype=float)
    if coeffs.shape[0] != traj.dim:
        raise DimensionError(f"functional on R^{coeffs.shape[0]}, trajectory in R^{traj.dim}")
    values = traj.states @ coeffs
    if values.size < 2:
        return LyapunovMonitor(values, 0.0, True, True)
    inc = np.diff(values)
    allowed = LYAPUNOV_SLACK * (1.0 + np.abs(values[:-1]))
    return LyapunovMonitor(
        values,
        float(inc.max()),
        bool(np.all(inc <= allowed)),
        bool(np.all(inc < 0)),
    )
