"""Command-line front end: run a construction on a problem file, emit a certificate.

Exit codes: 0 verified, 1 hypothesis violation, 2 verification failure,
3 parse or validation error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .applications import (
    brute_equilibria,
    brute_fixed_points,
    caristi_fixed_point,
    caristi_objective,
    check_caristi_hypothesis,
    equilibrium_solve,
)
from .distance import axiom_report, product_distance
from .engine import (
    DEFAULT_TOL,
    EXACT,
    QUASI,
    Certificate,
    Claim,
    ConstructionTrace,
    PerturbationSchedule,
    _num,
    borwein_preiss,
    ekeland,
    verify_bp,
    verify_ekeland,
)
from .errors import BadParameter, HypothesisViolation, ParseError, ProblemError, ValidationError, VarprinError
from .problem import (
    GENERATOR_FAMILIES,
    MODES,
    ProblemFile,
    digest,
    generate_instance,
    parse_problem,
    problem_from_dict,
    serialize,
)

EXIT_OK, EXIT_HYPOTHESIS, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2, 3
VERIFIED = "verified"
HYPOTHESIS_VIOLATION = "hypothesis-violation"
VERIFICATION_FAILURE = "verification-failure"
INPUT_ERROR = "input-error"
CERT_FORMAT = "varprin-certificate/1"
COMMANDS = ("check-distance", "bp", "ekeland", "caristi", "ep")


@dataclass
class RunReport:
    command: str
    digest: str
    verdict: str
    summary: dict = field(default_factory=dict)
    certificate: dict | None = None
    wall_time: float = 0.0
    error: str | None = None

    @property
    def exit_code(self) -> int:
        return {VERIFIED: EXIT_OK, HYPOTHESIS_VIOLATION: EXIT_HYPOTHESIS,
                VERIFICATION_FAILURE: EXIT_VERIFY}.get(self.verdict, EXIT_INPUT)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "digest": self.digest,
            "verdict": self.verdict,
            "summary": self.summary,
            "certificate": self.certificate,
            "wall_time": self.wall_time,
            "error": self.error,
        }


def parse_schedule(text: str) -> PerturbationSchedule:
    parts = [p.strip() for p in text.split(",")]
    if not 1 <= len(parts) <= 3:
        raise BadParameter(f"--schedule wants 'eps[,delta0[,gamma]]', got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise BadParameter(f"--schedule values must be numbers, got {text!r}") from None
    defaults = [None, 1.0, 0.5]
    vals += defaults[len(vals):]
    return PerturbationSchedule(*vals)


def run_flags(tol=DEFAULT_TOL, seed=None, picker=EXACT, max_iter=None, schedule=None, sample=None) -> dict:
    """Normalized flag record; part of the digest."""
    return {
        "tol": float(tol),
        "seed": seed,
        "picker": picker,
        "max_iter": max_iter,
        "schedule": None if schedule is None else schedule.to_dict(),
        "sample": sample,
    }


def input_digest(problem: ProblemFile, command: str, flags: dict) -> str:
    return digest({"problem": problem.to_dict(), "command": command, "flags": flags})


# --- per-command runners --------------------------------------------------------
# each returns (certificate, summary, payload); payload is what `verify` needs


def _schedule_for(problem: ProblemFile, flags: dict) -> PerturbationSchedule:
    if flags["schedule"] is not None:
        return PerturbationSchedule.from_dict(flags["schedule"])
    return problem.schedule


def _bp_setup(problem, flags):
    sched = _schedule_for(problem, flags)
    if problem.z0 is None:
        # weak form: eps = 1 from the global minimizer
        sched = PerturbationSchedule(1.0, sched.delta0, sched.gamma) if not sched.finite else \
            PerturbationSchedule.explicit(1.0, sched.deltas)
        return sched, problem.objective.argmin
    return sched, problem.z0


def _run_bp(problem, flags):
    sched, z0 = _bp_setup(problem, flags)
    f = problem.objective
    zbar, trace = borwein_preiss(problem.distance, f, sched, z0, flags["picker"], flags["seed"], flags["max_iter"])
    cert = verify_bp(problem.distance, f, sched, z0, zbar, trace, flags["tol"])
    summary = {"zbar": zbar, "z0": z0, "iterations": trace.stabilized_at, "weak": problem.z0 is None}
    return cert, summary, {"z0": z0, "schedule": sched.to_dict(), "trace": trace.to_dict()}


def _ekeland_setup(problem, flags):
    eps = _schedule_for(problem, flags).epsilon
    z0 = problem.objective.argmin if problem.z0 is None else problem.z0
    return eps, z0


def _run_ekeland(problem, flags):
    eps, z0 = _ekeland_setup(problem, flags)
    f = problem.objective
    zbar, trace = ekeland(problem.distance, f, eps, z0, flags["picker"], flags["seed"], flags["max_iter"])
    cert = verify_ekeland(problem.distance, f, eps, z0, zbar, flags["tol"], trace)
    summary = {"zbar": zbar, "z0": z0, "iterations": trace.stabilized_at, "weak": problem.z0 is None}
    return cert, summary, {"z0": z0, "epsilon": eps, "trace": trace.to_dict()}


def _caristi_eps(problem, flags) -> float:
    sched = _schedule_for(problem, flags)
    return 0.25 if sched is None else sched.epsilon


def caristi_certificate(problem: ProblemFile, point, pair, eps: float, tol: float) -> Certificate:
    """Recheck a Caristi answer from scratch, without rerunning the solver."""
    spec, phi, T = problem.distance, problem.potential, problem.map
    space = spec.space
    ok, wit = check_caristi_hypothesis(spec, phi, T)
    if not ok:
        raise HypothesisViolation("Caristi condition fails", witness=wit)
    xbar, ybar = pair
    images = T.image_indices(space.index(point))
    fixed = space.index(point) in images
    claims = [
        Claim("pair", bool(ybar == point and space.index(ybar) in T.image_indices(space.index(xbar))),
              0.0, list(pair), "(xbar, ybar) lies on the graph and ybar is the reported point"),
        Claim("fixed", bool(fixed), 0.0, point, "point in T(point)"),
        Claim("endpoint", bool(fixed and images.size == 1), float(1 - images.size), point, "T(point) = {point}"),
    ]
    # the variational inequality at (xbar, ybar) on the graph
    f = caristi_objective(spec, phi, T, eps)
    rho = product_distance(spec)
    k = space.square.index(tuple(pair))
    graph = T.pair_indices()
    with np.errstate(invalid="ignore"):
        gaps = f.values[graph] + eps * rho.column(k)[graph] - f.values[k]
    margin = float(np.nan_to_num(gaps, nan=math.inf).min())
    claims.append(Claim("evp", bool(margin >= -tol), margin, None,
                        "f(x, y) + eps rho((x, y), (xbar, ybar)) >= f(xbar, ybar) on the graph"))
    fix, ends = brute_fixed_points(T)
    info = {"brute_fixed": list(fix), "brute_endpoints": list(ends), "fixed_equals_endpoints": fix == ends}
    notes = []
    if fix != ends:
        notes.append("this instance has fixed points that are not endpoints")
    return Certificate("caristi", point, claims, tol, notes, info)


def _run_caristi(problem, flags):
    eps = _caristi_eps(problem, flags)
    res = caristi_fixed_point(problem.distance, problem.potential, problem.map, eps, flags["tol"])
    cert = caristi_certificate(problem, res.point, res.pair, eps, flags["tol"])
    summary = {"point": res.point, "pair": list(res.pair), "endpoint": res.endpoint_ok}
    return cert, summary, {"epsilon": eps, "pair": list(res.pair)}


def ep_certificate(problem: ProblemFile, xbar, tol: float) -> Certificate:
    F = problem.bifunction
    i = F.space.index(xbar)
    row = F.matrix[i]
    k = int(np.argmin(row))
    margin = float(row[k])
    claims = [
        Claim("equilibrium", bool(margin >= -tol), margin, F.space.points[k], "min_y F(xbar, y) >= 0"),
        Claim("brute", bool(xbar in brute_equilibria(F, tol)), 0.0, xbar, "xbar in EP(F, X) by enumeration"),
    ]
    return Certificate("ep", xbar, claims, tol)


def _run_ep(problem, flags):
    res = equilibrium_solve(problem.distance, problem.bifunction, problem.potential, problem.epsilons, flags["tol"])
    cert = ep_certificate(problem, res.xbar, flags["tol"])
    cert.info.update(stages=len(res.stage_points), residuals=[_num(r) for r in res.residuals])
    summary = {"xbar": res.xbar, "stages": len(res.stage_points)}
    return cert, summary, {"stage_points": list(res.stage_points), "epsilons": res.epsilons}


def distance_certificate(problem: ProblemFile, flags) -> Certificate:
    rep = axiom_report(problem.distance, flags["tol"], sample=flags["sample"], seed=flags["seed"], max_witnesses=20)
    claims = [Claim("identity", bool(rep.identity_ok), 0.0, rep.identity_failures or None,
                    "d(x, y) = 0 exactly when x = y")]
    info = {
        "mode": rep.mode,
        "triples_checked": rep.triples_checked,
        "symmetric": rep.symmetric,
        "asymmetric_pairs": rep.n_symmetry,
        "triangle_violations": rep.n_triangle,
        "symmetry_witnesses": [list(w) for w in rep.symmetry_witnesses],
        "triangle_witnesses": [list(w) for w in rep.triangle_witnesses],
    }
    return Certificate("check-distance", None, claims, flags["tol"], [], info)


def _run_check_distance(problem, flags):
    cert = distance_certificate(problem, flags)
    summary = {k: cert.info[k] for k in ("mode", "asymmetric_pairs", "triangle_violations")}
    return cert, summary, {}


RUNNERS = {
    "check-distance": _run_check_distance,
    "bp": _run_bp,
    "ekeland": _run_ekeland,
    "caristi": _run_caristi,
    "ep": _run_ep,
}


def _jsonable(x):
    return json.loads(json.dumps(x, default=_default))


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return _num(o)
    if isinstance(o, (tuple, set, frozenset)):
        return list(o)
    return str(o)


def run(command: str, problem: ProblemFile, flags: dict | None = None) -> RunReport:
    """Run ``command`` on ``problem``, verify the result and build a report.

    Errors from the construction are mapped to verdicts rather than raised:
    hypothesis violations give ``hypothesis-violation``; anything else that
    goes wrong after the inputs validated is a ``verification-failure``.
    """
    if command not in RUNNERS:
        raise BadParameter(f"unknown command {command!r}")
    flags = run_flags() if flags is None else flags
    if flags["picker"] not in (EXACT, QUASI):
        raise BadParameter(f"picker must be 'exact' or 'quasi', got {flags['picker']!r}")
    problem.require(command)
    if command in ("bp", "ekeland") and flags["schedule"] is None and problem.schedule is None:
        raise ValidationError("no schedule section and no --schedule flag", kind="MissingSection")
    dig = input_digest(problem, command, flags)
    t0 = time.perf_counter()
    try:
        cert, summary, payload = RUNNERS[command](problem, flags)
    except HypothesisViolation as e:
        return RunReport(command, dig, HYPOTHESIS_VIOLATION, {"error_type": type(e).__name__},
                         None, time.perf_counter() - t0, str(e))
    except ProblemError:
        raise
    except VarprinError as e:
        return RunReport(command, dig, VERIFICATION_FAILURE, {"error_type": type(e).__name__},
                         None, time.perf_counter() - t0, str(e))
    wall = time.perf_counter() - t0
    cert.digest = dig
    body = {
        "format": CERT_FORMAT,
        "command": command,
        "digest": dig,
        "flags": flags,
        "problem": problem.to_dict(),
        "result": payload,
        "certificate": cert.to_dict(),
    }
    verdict = VERIFIED if cert.verified else VERIFICATION_FAILURE
    return RunReport(command, dig, verdict, _jsonable(summary), _jsonable(body), wall)


def verify_certificate(body: dict, problem: ProblemFile | None = None) -> RunReport:
    """Recheck a stored certificate without rerunning the construction.

    The embedded problem is rebuilt and its digest compared with the stored
    one; if ``problem`` is given it must match too. Then the claims are
    re-derived from the stored result (trace, point or pair).
    """
    t0 = time.perf_counter()
    if body.get("format") != CERT_FORMAT:
        raise ParseError(f"not a certificate file (format {body.get('format')!r})", locus="/format")
    command, flags, stored = body["command"], body["flags"], body["digest"]
    embedded = problem_from_dict(body["problem"])
    dig = input_digest(embedded, command, flags)

    def fail(msg):
        return RunReport("verify", stored, VERIFICATION_FAILURE, {"command": command}, None,
                         time.perf_counter() - t0, msg)

    if dig != stored:
        return fail(f"digest mismatch: stored {stored}, recomputed {dig}")
    if problem is not None and input_digest(problem, command, flags) != stored:
        return fail("the given problem file does not match the certificate digest")
    res = body["result"]
    zbar = body["certificate"]["zbar"]
    tol = flags["tol"]
    p = embedded
    try:
        if command == "bp":
            sched = PerturbationSchedule.from_dict(res["schedule"])
            trace = ConstructionTrace.from_dict(res["trace"])
            cert = verify_bp(p.distance, p.objective, sched, res["z0"], zbar, trace, tol)
        elif command == "ekeland":
            trace = ConstructionTrace.from_dict(res["trace"])
            cert = verify_ekeland(p.distance, p.objective, res["epsilon"], res["z0"], zbar, tol, trace)
        elif command == "caristi":
            cert = caristi_certificate(p, zbar, tuple(res["pair"]), res["epsilon"], tol)
        elif command == "ep":
            cert = ep_certificate(p, zbar, tol)
        elif command == "check-distance":
            cert = distance_certificate(p, flags)
        else:
            raise ParseError(f"unknown command {command!r} in certificate", locus="/command")
    except ProblemError:
        raise
    except VarprinError as e:
        return fail(f"{type(e).__name__}: {e}")
    cert.digest = dig
    verdict = VERIFIED if cert.verified else VERIFICATION_FAILURE
    summary = {"command": command, "zbar": zbar, "claims": {c.label: c.satisfied for c in cert.claims}}
    return RunReport("verify", dig, verdict, _jsonable(summary), _jsonable(cert.to_dict()),
                     time.perf_counter() - t0)


# --- argparse plumbing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varprin", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run {name} on a problem file")
        sp.add_argument("problem", type=Path)
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--picker", choices=(EXACT, QUASI), default=EXACT)
        sp.add_argument("--max-iter", type=int, default=None, help="default 10 * |X|")
        sp.add_argument("--schedule", default=None, help="'eps,delta0,gamma' overriding the file")
        sp.add_argument("--sample", type=int, default=None, help="random triples for check-distance")
        sp.add_argument("--out", type=Path, default=None, help="certificate path")
        sp.add_argument("--json", action="store_true", help="print the report as JSON")

    sp = sub.add_parser("verify", help="recheck a stored certificate")
    sp.add_argument("certificate", type=Path)
    sp.add_argument("--problem", type=Path, default=None, help="also require this problem to match")
    sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("generate", help="write a random problem file")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--size", type=int, required=True)
    sp.add_argument("--family", choices=GENERATOR_FAMILIES, default="table")
    sp.add_argument("--mode", choices=MODES, default="bp")
    sp.add_argument("--out", type=Path, default=None, help="default: stdout")
    return ap


def _print_report(rep: RunReport, as_json: bool, out=None):
    out = sys.stdout if out is None else out
    if as_json:
        print(json.dumps(rep.to_dict(), indent=2, default=_default), file=out)
        return
    print(f"command: {rep.command}", file=out)
    print(f"digest:  {rep.digest}", file=out)
    for k, v in rep.summary.items():
        print(f"{k}: {v}", file=out)
    cert = rep.certificate
    if cert is not None:
        claims = cert["certificate"]["claims"] if "certificate" in cert else cert["claims"]
        for c in claims:
            mark = "ok " if c["satisfied"] else "FAIL"
            print(f"  [{mark}] ({c['label']}) {c['detail']}  margin={c['margin']}", file=out)
    if rep.error:
        print(f"error: {rep.error}", file=out)
    print(f"verdict: {rep.verdict}  ({rep.wall_time:.3f} s)", file=out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            p = generate_instance(args.seed, args.size, args.family, args.mode)
            text = serialize(p)
            if args.out is None:
                sys.stdout.write(text)
            else:
                args.out.write_text(text)
            return EXIT_OK
        if args.command == "verify":
            try:
                body = json.loads(args.certificate.read_text())
            except OSError as e:
                raise ParseError(f"cannot read {args.certificate}: {e.strerror}") from e
            except json.JSONDecodeError as e:
                raise ParseError(e.msg, locus=f"line {e.lineno}, column {e.colno}") from e
            problem = None if args.problem is None else parse_problem(args.problem)
            rep = verify_certificate(body, problem)
        else:
            problem = parse_problem(args.problem)
            sched = None if args.schedule is None else parse_schedule(args.schedule)
            flags = run_flags(args.tol, args.seed, args.picker, args.max_iter, sched, args.sample)
            rep = run(args.command, problem, flags)
            if args.out is not None and rep.certificate is not None:
                args.out.write_text(json.dumps(rep.certificate, indent=2, sort_keys=True) + "\n")
    except ProblemError as e:
        kind = getattr(e, "kind", None)
        label = f"{type(e).__name__}({kind})" if kind else type(e).__name__
        print(f"error: {label}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (BadParameter, VarprinError, KeyError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
    _print_report(rep, args.json)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
