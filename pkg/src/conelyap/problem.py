"""Problem and schedule files.

Problem file (UTF-8 JSON)::

    {"dimension": 2,
     "cone": {"kind": "orthant" | "icecream" | "polyhedral", "generators": [[rat, ...], ...]},
     "systems": [{"name": "A1", "matrix": [[rat, ...], ...]}, ...],
     "coupling": [{"between": ["A1", "A2"], "matrix": [[rat-or-param, ...], ...]}],
     "params": {"d": {"min": rat, "max": rat, "steps": 11}}}

where ``rat`` is an integer or a ``"p/q"`` string.  Schedule file::

    [{"mode": "A1", "duration": rat}, ...]
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .cones import ConeSpec
from .coupling import CouplingTemplate, rational_range
from .dynamics import SwitchingSchedule
from .errors import ConelyapError, ParseError
from .numerics import RationalMatrix, as_rational

_PARAM_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
CONE_KINDS = ("orthant", "icecream", "polyhedral")


@dataclass(frozen=True)
class ParamRange:
    min: Fraction
    max: Fraction
    steps: int

    def values(self) -> list[Fraction]:
        return rational_range(self.min, self.max, self.steps)


@dataclass(frozen=True)
class CouplingEntry:
    between: tuple  # (name, name)
    matrix: tuple  # rows of Fraction or parameter name


@dataclass(frozen=True)
class ProblemFile:
    dimension: int
    cone: ConeSpec
    cone_descriptor: dict
    systems: dict  # name -> RationalMatrix, file order
    coupling: tuple = ()
    params: dict = field(default_factory=dict)
    source: str | None = None

    @property
    def names(self) -> list[str]:
        return list(self.systems)

    @property
    def matrices(self) -> list[RationalMatrix]:
        return list(self.systems.values())

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def template(self) -> CouplingTemplate:
        entries = {
            (self.index_of(a), self.index_of(b)): rows for (a, b), rows in
            ((c.between, c.matrix) for c in self.coupling)
        }
        return CouplingTemplate.from_mapping(len(self.systems), self.dimension, entries)

    @property
    def parameters(self) -> list[str]:
        names = list(self.params)
        used = self.template().parameters if self.coupling else []
        for name in used:
            if name not in names:
                names.append(name)
        return names


def _rational(value, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ParseError(f"expected an integer or a \"p/q\" string, got {value!r}", where)
    try:
        return as_rational(value)
    except ZeroDivisionError:
        raise ParseError(f"zero denominator in {value!r}", where) from None
    except (ValueError, TypeError):
        raise ParseError(f"malformed rational {value!r}", where) from None


def _rat_or_param(value, where: str):
    if isinstance(value, str) and _PARAM_RE.match(value.strip()):
        return value.strip()
    return _rational(value, where)


def _matrix(rows, n: int, where: str, entry=_rational) -> tuple:
    if not isinstance(rows, list) or len(rows) != n:
        raise ParseError(f"expected {n} rows", where)
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"expected {n} entries", f"{where}[{i}]")
        out.append(tuple(entry(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)))
    return tuple(out)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ParseError(f"missing field {key!r}", where or "<root>")
    return obj[key]


def _parse_cone(raw, n: int) -> ConeSpec:
    if not isinstance(raw, dict):
        raise ParseError("cone must be an object", "cone")
    kind = _require(raw, "kind", "cone")
    if kind not in CONE_KINDS:
        raise ParseError(f"unknown cone kind {kind!r}; expected one of {', '.join(CONE_KINDS)}", "cone.kind")
    if kind == "orthant":
        return ConeSpec.orthant(n)
    if kind == "icecream":
        return ConeSpec.icecream(n)
    gens = _require(raw, "generators", "cone")
    if not isinstance(gens, list) or not gens:
        raise ParseError("polyhedral cone needs a nonempty generator list", "cone.generators")
    parsed = []
    for i, g in enumerate(gens):
        where = f"cone.generators[{i}]"
        if not isinstance(g, list) or len(g) != n:
            raise ParseError(f"generator must have {n} entries", where)
        vec = tuple(_rational(x, f"{where}[{j}]") for j, x in enumerate(g))
        if all(x == 0 for x in vec):
            raise ParseError("zero generator is not allowed", where)
        parsed.append(vec)
    return ConeSpec.polyhedral(parsed, n)


def load_problem(data: dict, source: str | None = None) -> ProblemFile:
    """Validate an already-decoded problem object."""
    if not isinstance(data, dict):
        raise ParseError("problem must be a JSON object")
    n = _require(data, "dimension", "")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ParseError("dimension must be a positive integer", "dimension")
    cone = _parse_cone(_require(data, "cone", ""), n)

    raw_systems = _require(data, "systems", "")
    if not isinstance(raw_systems, list) or not raw_systems:
        raise ParseError("need a nonempty list of systems", "systems")
    systems: dict[str, RationalMatrix] = {}
    for i, s in enumerate(raw_systems):
        where = f"systems[{i}]"
        if not isinstance(s, dict):
            raise ParseError("system must be an object", where)
        name = _require(s, "name", where)
        if not isinstance(name, str) or not name:
            raise ParseError("system name must be a nonempty string", f"{where}.name")
        if name in systems:
            raise ParseError(f"duplicate system name {name!r}", f"{where}.name")
        systems[name] = RationalMatrix(_matrix(_require(s, "matrix", where), n, f"{where}.matrix"))

    coupling = []
    seen_pairs = set()
    for i, c in enumerate(data.get("coupling") or []):
        where = f"coupling[{i}]"
        if not isinstance(c, dict):
            raise ParseError("coupling entry must be an object", where)
        between = _require(c, "between", where)
        if not isinstance(between, list) or len(between) != 2:
            raise ParseError("between must name two systems", f"{where}.between")
        a, b = between
        for name in (a, b):
            if name not in systems:
                raise ParseError(f"unknown system {name!r}", f"{where}.between")
        if a == b:
            raise ParseError("a system cannot be coupled to itself", f"{where}.between")
        pair = frozenset((a, b))
        if pair in seen_pairs:
            raise ParseError(f"pair {a}/{b} coupled twice", f"{where}.between")
        seen_pairs.add(pair)
        rows = _matrix(_require(c, "matrix", where), n, f"{where}.matrix", entry=_rat_or_param)
        coupling.append(CouplingEntry((a, b), rows))

    params = {}
    raw_params = data.get("params") or {}
    if not isinstance(raw_params, dict):
        raise ParseError("params must be an object", "params")
    for name, spec in raw_params.items():
        where = f"params.{name}"
        if not _PARAM_RE.match(name):
            raise ParseError("parameter names must be identifiers", where)
        if not isinstance(spec, dict):
            raise ParseError("parameter range must be an object", where)
        lo = _rational(_require(spec, "min", where), f"{where}.min")
        hi = _rational(_require(spec, "max", where), f"{where}.max")
        steps = _require(spec, "steps", where)
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
            raise ParseError("steps must be a positive integer", f"{where}.steps")
        if hi < lo:
            raise ParseError("max is below min", where)
        params[name] = ParamRange(lo, hi, steps)

    return ProblemFile(n, cone, dict(data["cone"]), systems, tuple(coupling), params, source)


def _decode(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{source}: line {exc.lineno} column {exc.colno}") from None


def parse_problem(path) -> ProblemFile:
    """Read and validate a problem file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read problem file: {exc.strerror}", str(path)) from None
    try:
        return load_problem(_decode(text, str(path)), str(path))
    except ParseError:
        raise
    except ConelyapError as exc:
        raise ParseError(str(exc), str(path)) from None


def parse_schedule(path, system_names: list[str]) -> SwitchingSchedule:
    """Read a schedule file; mode names resolve against ``system_names``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read schedule file: {exc.strerror}", str(path)) from None
    data = _decode(text, str(path))
    if not isinstance(data, list) or not data:
        raise ParseError("schedule must be a nonempty list", str(path))
    segments = []
    for i, seg in enumerate(data):
        where = f"schedule[{i}]"
        if not isinstance(seg, dict):
            raise ParseError("segment must be an object", where)
        mode = _require(seg, "mode", where)
        if mode not in system_names:
            raise ParseError(f"unknown mode {mode!r}", f"{where}.mode")
        duration = _rational(_require(seg, "duration", where), f"{where}.duration")
        if duration <= 0:
            raise ParseError("duration must be positive", f"{where}.duration")
        segments.append((system_names.index(mode), float(duration)))
    return SwitchingSchedule(tuple(segments))
