"""Command line front end.

    conelyap <command> <file> [--system NAME] [--set name=rat]... [--param name]
             [--json] [--verify-certificate FILE] [--schedule FILE] [--x0 CSV]
             [--dt rat] [--tol float] [--horizon rat] [--out FILE]

Exit codes: 0 the property holds / the analysis is clean, 1 it fails,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .cones import ConeKind
from .coupling import analyze_coupled, assemble_coupled, max_exact_dim, sweep_destabilize
from .dynamics import Trajectory, monitor_invariance, monitor_lyapunov, simulate, simulate_switched
from .errors import ConelyapError, ParameterError, ParseError
from .lyapunov import LinearFunctional, cllf_conditions, find_cllf, validate_certificate
from .monotone import is_qm, is_qm_family
from .numerics import as_rational, char_poly, format_rational, routh_verdict
from .problem import ProblemFile, parse_problem, parse_schedule

COMMANDS = ("cone-info", "qm", "llf", "cllf", "couple", "sweep", "simulate")
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ConelyapError):
    """Bad command line or unsupported request; exit code 2."""


def _vec(v) -> list[str]:
    return [format_rational(Fraction(x)) for x in v]


@dataclass
class Report:
    command: str
    inputs_digest: str
    verdicts: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    exit_code: int = EXIT_OK
    summary: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self, timestamp: bool = True) -> dict:
        out = {
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "verdicts": self.verdicts,
            "certificates": self.certificates,
            "diagnostics": self.diagnostics,
            "exit_code": self.exit_code,
            "summary": self.summary,
        }
        out.update(self.extra)
        if timestamp:
            out["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return out

    def to_json(self, timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(timestamp), indent=2, sort_keys=True, ensure_ascii=False)

    def to_text(self) -> str:
        lines = [f"{self.command}: {self.summary}"]
        for name, cert in self.certificates.items():
            if isinstance(cert, dict):
                for sub, v in cert.items():
                    lines.append(f"  certificate {name}[{sub}] = ({', '.join(v)})")
            elif isinstance(cert, list) and cert and isinstance(cert[0], str):
                lines.append(f"  certificate {name} = ({', '.join(cert)})")
        for d in self.diagnostics:
            lines.append(f"  - {d}")
        return "\n".join(lines)


def resolve_problem_path(raw: str) -> Path:
    """The path as given, falling back to the bundled gallery for ``gallery/NAME``."""
    path = Path(raw)
    if path.exists():
        return path
    if path.parent.name == "gallery" or raw.startswith("gallery"):
        bundled = resources.files("conelyap").joinpath("gallery").joinpath(path.name)
        if bundled.is_file():
            return Path(str(bundled))
    return path


def _digest(args, problem_path: Path) -> str:
    h = hashlib.sha256()
    h.update(problem_path.read_bytes())
    for extra in (args.schedule, args.verify_certificate):
        if extra:
            h.update(Path(extra).read_bytes())
    h.update(json.dumps(
        [args.command, args.system, args.set, args.param, args.x0, args.dt, args.tol, args.horizon],
        sort_keys=True,
    ).encode())
    return h.hexdigest()


def _bindings(args) -> dict[str, Fraction]:
    out = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects name=rat, got {item!r}")
        name, value = item.split("=", 1)
        try:
            out[name.strip()] = as_rational(value.strip())
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise UsageError(f"--set {item!r}: {exc}") from None
    return out


def _selected(problem: ProblemFile, args) -> list[str]:
    names = args.system or problem.names
    for name in names:
        if name not in problem.systems:
            raise UsageError(f"unknown system {name!r}; known: {', '.join(problem.names)}")
    return names


def _load_certificate(path: str, dim: int, key: str):
    """Read a certificate: a JSON list, {"certificate": [...]}, or an emitted report."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read certificate: {exc}", path) from None
    if isinstance(data, dict):
        if "certificate" in data:
            data = data["certificate"]
        elif "certificates" in data:
            certs = data["certificates"]
            data = certs.get(key) or next(iter(certs.values()), None)
    if isinstance(data, dict):
        return {name: _parse_vector(v, dim, path) for name, v in data.items()}
    return _parse_vector(data, dim, path)


def _parse_vector(data, dim: int, path: str) -> LinearFunctional:
    if not isinstance(data, list) or len(data) != dim:
        raise ParseError(f"certificate must be a list of {dim} rationals", path)
    try:
        return LinearFunctional(tuple(as_rational(x) for x in data))
    except (ValueError, TypeError, ZeroDivisionError, ConelyapError) as exc:
        raise ParseError(f"bad certificate entry: {exc}", path) from None


def _parse_x0(text: str) -> list[float]:
    try:
        return [float(as_rational(x)) if "/" in x else float(x) for x in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"--x0: {exc}") from None


def _default_start(problem: ProblemFile, copies: int) -> list[float]:
    cone = problem.cone
    if cone.kind is ConeKind.ICECREAM:
        point = [0.0] * (cone.dim - 1) + [1.0]
    else:
        point = [float(sum(g[i] for g in cone.generators)) for i in range(cone.dim)]
    return point * copies


# commands --------------------------------------------------------------------


def cmd_cone_info(problem, args, report):
    cone = problem.cone
    report.verdicts = {
        "kind": cone.kind.value,
        "dimension": cone.dim,
        "pointed": cone.is_pointed(),
        "solid": cone.is_solid(),
        "proper": cone.is_proper(),
    }
    if cone.is_polyhedral:
        report.certificates = {
            "generators": [_vec(g) for g in cone.generators],
            "dual_generators": [_vec(v) for v in cone.dual.generators],
        }
    report.summary = f"{cone.describe()}; " + ("proper" if cone.is_proper() else "not proper")
    report.exit_code = EXIT_OK if cone.is_proper() else EXIT_FAIL


def cmd_qm(problem, args, report):
    names = _selected(problem, args)
    verdicts = {}
    for name in names:
        r = is_qm(problem.systems[name], problem.cone)
        verdicts[name] = r.verdict
        if r.certificate is not None:
            report.extra.setdefault("wolkowicz", {})[name] = {
                "alpha": r.certificate.alpha,
                "max_eig": r.certificate.max_eig,
                "marginal": r.marginal,
            }
            if r.marginal:
                report.diagnostics.append(f"{name}: marginal (|max_eig| <= 1e-9)")
        sampled = [v for v in r.violations if len(v) != 3]
        for v in r.violations[:5]:
            if len(v) == 3:
                report.diagnostics.append(
                    f"{name}: facet {v[1]} at generator {v[0]} gives {format_rational(v[2])} < 0"
                )
        if sampled:
            worst = min(v[1] for v in sampled)
            report.diagnostics.append(
                f"{name}: {len(sampled)} sampled boundary points with negative rate (worst {worst:.3g})"
            )
    report.verdicts = {"qm": verdicts}
    ok = all(verdicts.values())
    report.summary = "all quasi-monotone" if ok else "not quasi-monotone: " + ", ".join(
        n for n, v in verdicts.items() if not v
    )
    report.exit_code = EXIT_OK if ok else EXIT_FAIL


def _require_search_cone(problem, args):
    cone = problem.cone
    if not cone.is_polyhedral and not args.verify_certificate:
        raise UsageError(
            "Lyapunov search is only offered for polyhedral cones; pass --verify-certificate"
        )


def cmd_llf(problem, args, report):
    _require_search_cone(problem, args)
    names = _selected(problem, args)
    cone = problem.cone
    supplied = _load_certificate(args.verify_certificate, cone.dim, "llf") if args.verify_certificate else None
    found, certs = {}, {}
    for name in names:
        A = problem.systems[name]
        qm = is_qm(A, cone)
        hurwitz = routh_verdict(char_poly(A))
        report.extra.setdefault("hurwitz", {})[name] = str(hurwitz)
        if not qm.verdict:
            found[name] = False
            report.diagnostics.append(f"{name}: not quasi-monotone, no linear Lyapunov function is defined")
            continue
        if supplied is not None:
            cand = supplied.get(name) if isinstance(supplied, dict) else supplied
            ok = cand is not None and validate_certificate(cand, [A], cone)
            found[name] = ok
            if ok:
                certs[name] = cand.to_strings()
            continue
        cone.require_proper()
        from .lyapunov import find_llf

        lam = find_llf(A, cone)
        found[name] = lam is not None
        if lam is not None:
            certs[name] = lam.to_strings()
    report.verdicts = {"llf": found}
    if certs:
        report.certificates = {"llf": certs}
    ok = all(found.values())
    verb = "validated" if supplied is not None else "found"
    report.summary = (f"linear Lyapunov function {verb} for " + ", ".join(names)) if ok else (
        "no linear Lyapunov function for " + ", ".join(n for n, v in found.items() if not v)
    )
    report.exit_code = EXIT_OK if ok else EXIT_FAIL


def cmd_cllf(problem, args, report):
    _require_search_cone(problem, args)
    names = _selected(problem, args)
    cone = problem.cone
    As = [problem.systems[n] for n in names]
    family = is_qm_family(As, cone)
    report.verdicts["qm"] = dict(zip(names, (r.verdict for r in family.reports)))
    if args.verify_certificate:
        cand = _load_certificate(args.verify_certificate, cone.dim, "cllf")
        if isinstance(cand, dict):
            raise UsageError("cllf expects a single certificate vector")
        ok = validate_certificate(cand, As, cone)
        report.verdicts["certificate_valid"] = ok
        if ok:
            report.certificates = {"cllf": cand.to_strings()}
        report.summary = f"certificate {cand} " + ("validates" if ok else "does not validate")
        report.exit_code = EXIT_OK if ok else EXIT_FAIL
        return
    cone.require_proper()
    r = cllf_conditions(As, cone)
    report.verdicts.update({
        "exists": r.exists,
        "cond1_kernel": dict(zip(names, r.cond1_kernel)),
        "cond2_pointed": r.cond2_pointed,
        "cond3_trivial_intersection": r.cond3_trivial_intersection,
        "kernel_sufficient": r.kernel_sufficient,
    })
    if not family.verdict:
        report.diagnostics.append("not every system is quasi-monotone; the existence theorem does not apply")
    if r.certificate is not None:
        report.certificates = {"cllf": r.certificate.to_strings()}
        report.summary = f"common linear Lyapunov function {r.certificate}; {r.summary()}"
    else:
        report.summary = f"no common linear Lyapunov function; {r.summary()}"
    report.exit_code = EXIT_OK if r.exists else EXIT_FAIL


def _check_dim(problem):
    size = len(problem.systems) * problem.dimension
    if size > max_exact_dim():
        raise UsageError(f"coupled dimension {size} exceeds CONELYAP_MAX_DIM={max_exact_dim()}")


def _coupled_family(problem, bindings):
    if not problem.coupling:
        raise UsageError("problem file has no coupling section")
    try:
        return problem.template().instantiate(bindings)
    except ParameterError as exc:
        raise UsageError(f"{exc}; bind it with --set") from None


def cmd_couple(problem, args, report):
    _check_dim(problem)
    F = _coupled_family(problem, _bindings(args))
    cone = problem.cone
    cert = None
    if args.verify_certificate:
        cert = _load_certificate(args.verify_certificate, cone.dim, "cllf")
    r = analyze_coupled(problem.matrices, F, cone, certificate=cert, require_hypotheses=False)
    coupled = assemble_coupled(problem.matrices, F)
    report.verdicts = {
        "stability": str(r.verdict),
        "hurwitz": r.hurwitz,
        "qm_on_product": r.qm_on_product,
    }
    report.extra["spectral_abscissa"] = r.spectral_abscissa
    report.extra["principal_eigenvalue"] = r.principal_eig
    report.extra["determinant"] = format_rational(coupled.matrix.det())
    report.extra["char_poly"] = str(char_poly(coupled.matrix))
    if r.certificate is not None:
        report.certificates = {"coupled": r.certificate.to_strings()}
    report.diagnostics.extend(r.diagnostics)
    report.summary = f"coupled matrix is {r.verdict} (spectral abscissa {r.spectral_abscissa:.6g})"
    report.exit_code = EXIT_OK if r.hurwitz else EXIT_FAIL


def cmd_sweep(problem, args, report):
    _check_dim(problem)
    if not problem.coupling:
        raise UsageError("problem file has no coupling section")
    bindings = _bindings(args)
    sweep_names = args.param or [p for p in problem.params if p not in bindings]
    grid = {}
    for name in sweep_names:
        if name not in problem.params:
            raise UsageError(f"--param {name!r} has no range in the problem file")
        grid[name] = problem.params[name].values()
    for name, value in bindings.items():
        grid.setdefault(name, [value])
    for name in problem.template().parameters:
        if name not in grid:
            raise UsageError(f"unbound parameter {name!r}; bind it with --set or sweep it with --param")
    cells = sweep_destabilize(problem.matrices, problem.template(), grid, problem.cone)
    rows = []
    for c in cells:
        rows.append({
            "point": {k: format_rational(v) for k, v in c.point},
            "stability": str(c.report.verdict),
            "spectral_abscissa": c.report.spectral_abscissa,
        })
    report.extra["cells"] = rows
    bad = [c for c in cells if not c.report.hurwitz]
    report.verdicts = {
        "cells": len(cells),
        "unstable": sum(1 for c in cells if c.report.verdict.value == "unstable"),
        "marginal": sum(1 for c in cells if c.report.marginal),
        "hurwitz": len(cells) - len(bad),
    }
    for c in bad:
        point = ", ".join(f"{k}={format_rational(v)}" for k, v in c.point)
        report.diagnostics.append(f"{c.report.verdict} at {point}")
    report.summary = (
        f"{len(bad)} of {len(cells)} grid points not Hurwitz" if bad else f"all {len(cells)} grid points Hurwitz"
    )
    report.exit_code = EXIT_FAIL if bad else EXIT_OK


def cmd_simulate(problem, args, report):
    cone = problem.cone
    dt = float(as_rational(args.dt)) if args.dt else None
    tol = args.tol if args.tol is not None else 1e-8
    horizon = float(as_rational(args.horizon)) if args.horizon else 10.0
    names = problem.names
    lam = None
    if args.verify_certificate:
        lam = _load_certificate(args.verify_certificate, cone.dim, "cllf")
        if isinstance(lam, dict):
            raise UsageError("simulate expects a single certificate vector")

    if args.schedule:
        schedule = parse_schedule(args.schedule, names)
        used = sorted({m for m, _ in schedule.segments})
        x0 = _parse_x0(args.x0) if args.x0 else _default_start(problem, 1)
        traj = simulate_switched(problem.matrices, schedule, x0, dt, system_id="switched")
        blocks, systems = 1, [problem.matrices[i] for i in used]
    elif problem.coupling:
        _check_dim(problem)
        F = _coupled_family(problem, _bindings(args))
        coupled = assemble_coupled(problem.matrices, F)
        x0 = _parse_x0(args.x0) if args.x0 else _default_start(problem, len(names))
        traj = simulate(coupled.matrix, x0, horizon, dt, system_id="coupled")
        blocks, systems = len(names), problem.matrices
    else:
        name = _selected(problem, args)[0]
        x0 = _parse_x0(args.x0) if args.x0 else _default_start(problem, 1)
        traj = simulate(problem.systems[name], x0, horizon, dt, system_id=name)
        blocks, systems = 1, [problem.systems[name]]

    if len(x0) != problem.dimension * blocks:
        raise UsageError(f"--x0 needs {problem.dimension * blocks} entries, got {len(x0)}")

    violations = []
    n = problem.dimension
    for b in range(blocks):
        part = Trajectory(traj.times, traj.states[:, b * n:(b + 1) * n])
        violations.extend((b, v) for v in monitor_invariance(part, cone, tol))
    if lam is None and cone.is_polyhedral and cone.is_proper() and is_qm_family(systems, cone).verdict:
        lam = find_cllf(systems, cone)
    elif lam is not None and not validate_certificate(lam, systems, cone):
        report.diagnostics.append(f"certificate {lam} does not validate for the simulated systems")
        lam = None
    monitor = monitor_lyapunov(traj, lam.repeated(blocks)) if lam is not None else None

    report.verdicts = {
        "invariance_violations": len(violations),
        "lyapunov_nonincreasing": None if monitor is None else monitor.passed,
    }
    if monitor is not None:
        report.certificates = {"lyapunov": lam.to_strings()}
        report.extra["lyapunov_max_increase"] = monitor.max_increase
    for b, v in violations[:5]:
        report.diagnostics.append(f"block {b} leaves the cone at t={v.time:.6g} (margin {v.margin:.3g})")
    report.extra["samples"] = len(traj.times)
    report.extra["final_norm"] = float(np.linalg.norm(traj.final()))
    csv_text = traj.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        report.extra["trajectory_file"] = args.out
    else:
        report.extra["trajectory_csv"] = csv_text
    clean = not violations and (monitor is None or monitor.passed)
    report.summary = (
        f"{len(traj.times)} samples, {len(violations)} invariance violations"
        + ("" if monitor is None else f", Lyapunov {'nonincreasing' if monitor.passed else 'increases'}")
    )
    report.exit_code = EXIT_OK if clean else EXIT_FAIL


HANDLERS = {
    "cone-info": cmd_cone_info,
    "qm": cmd_qm,
    "llf": cmd_llf,
    "cllf": cmd_cllf,
    "couple": cmd_couple,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="conelyap",
        description="Certify cone invariance and linear Lyapunov stability of coupled linear systems.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("file", help="problem file (JSON); gallery/NAME.json resolves to the bundled gallery")
    p.add_argument("--system", action="append", metavar="NAME", help="restrict to this system (repeatable)")
    p.add_argument("--set", action="append", metavar="name=rat", help="bind a coupling parameter")
    p.add_argument("--param", action="append", metavar="name", help="parameter to sweep (repeatable)")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.add_argument("--verify-certificate", metavar="FILE", help="validate this certificate instead of searching")
    p.add_argument("--schedule", metavar="FILE", help="switching schedule for simulate")
    p.add_argument("--x0", metavar="CSV", help="initial state, comma separated")
    p.add_argument("--dt", metavar="rat", help="sampling step for simulate")
    p.add_argument("--tol", type=float, help="invariance tolerance for simulate (default 1e-8)")
    p.add_argument("--horizon", metavar="rat", help="simulation horizon without a schedule (default 10)")
    p.add_argument("--out", metavar="FILE", help="write the trajectory CSV here")
    return p


def run(argv=None, stdout=None, stderr=None) -> tuple[Report | None, int]:
    """Parse ``argv``, dispatch, print the report; returns (report, exit code)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return None, int(exc.code or 0)

    path = resolve_problem_path(args.file)
    try:
        problem = parse_problem(path)
        report = Report(args.command, _digest(args, path))
        HANDLERS[args.command](problem, args, report)
    except ParseError as exc:
        print(f"conelyap: input error: {exc}", file=stderr)
        return None, EXIT_USAGE
    except (ConelyapError, OSError) as exc:
        print(f"conelyap: {exc}", file=stderr)
        return None, EXIT_USAGE

    if args.json:
        print(report.to_json(), file=stdout)
    else:
        csv_text = report.extra.pop("trajectory_csv", None)
        if csv_text is not None:
            stdout.write(csv_text)
            print(report.to_text(), file=stderr)
        else:
            print(report.to_text(), file=stdout)
    return report, report.exit_code


def main(argv=None) -> int:
    _, code = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
