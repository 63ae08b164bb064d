"""Problem files: JSON schema validation, canonical serialization, generation.

A problem file is one JSON document (schema in ``schema/problem.schema.json``).
Infinite objective or potential values are written as the string ``"+inf"``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .applications import Bifunction, PotentialFn, SetValuedMap, default_eps_schedule
from .distance import COORD_FAMILIES, DistanceSpec, PointSpace, distance_from_dict, make_builtin
from .engine import ExtendedObjective, PerturbationSchedule
from .errors import AxiomViolation, BadParameter, DomainViolation, ParseError, ValidationError, VarprinError

MODES = ("bp", "ekeland", "caristi", "ep")
GENERATOR_FAMILIES = ("table",) + COORD_FAMILIES

REQUIRED = {
    "check-distance": (),
    "bp": ("objective", "schedule"),
    "ekeland": ("objective", "schedule"),
    "caristi": ("potential", "map"),
    "ep": ("potential", "bifunction"),
}


def load_schema() -> dict:
    text = resources.files("varprin").joinpath("schema/problem.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = None


def _validator():
    global _VALIDATOR
    if _VALIDATOR is None:
        _VALIDATOR = jsonschema.Draft202012Validator(load_schema())
    return _VALIDATOR


@dataclass(eq=False)
class ProblemFile:
    space: PointSpace
    distance: DistanceSpec
    objective: ExtendedObjective | None = None
    z0: Any = None
    schedule: PerturbationSchedule | None = None
    map: SetValuedMap | None = None
    bifunction: Bifunction | None = None
    potential: PotentialFn | None = None
    epsilons: list | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {}
        if self.meta:
            d["meta"] = dict(self.meta)
        space: dict[str, Any] = {"points": list(self.space.points)}
        if self.space.coords is not None:
            space["coords"] = {p: [float(v) for v in c] for p, c in zip(self.space.points, self.space.coords)}
        d["space"] = space
        d["distance"] = self.distance.to_dict()
        if self.objective is not None:
            d["objective"] = self.objective.to_mapping()
        if self.z0 is not None:
            d["z0"] = self.z0
        if self.schedule is not None:
            d["schedule"] = self.schedule.to_dict()
        if self.map is not None:
            d["map"] = [list(p) for p in self.map.pairs]
        if self.bifunction is not None:
            d["bifunction"] = [[float(v) for v in row] for row in self.bifunction.matrix]
        if self.potential is not None:
            d["potential"] = self.potential.to_mapping()
        if self.epsilons is not None:
            d["epsilons"] = [float(e) for e in self.epsilons]
        return d

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        return canonical_json(self.to_dict()) == canonical_json(other.to_dict())

    def require(self, command: str):
        missing = [s for s in REQUIRED[command] if getattr(self, s) is None]
        if missing:
            raise ValidationError(f"command {command!r} needs section(s) {missing}", kind="MissingSection")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def serialize(problem: ProblemFile) -> str:
    return json.dumps(problem.to_dict(), indent=2, allow_nan=False) + "\n"


def write_problem(problem: ProblemFile, path) -> None:
    Path(path).write_text(serialize(problem))


def _locus(err: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def problem_from_dict(data: dict) -> ProblemFile:
    """Build a :class:`ProblemFile` from decoded JSON, enforcing every invariant."""
    err = jsonschema.exceptions.best_match(_validator().iter_errors(data))
    if err is not None:
        raise ParseError(f"schema: {err.message}", locus=_locus(err))
    try:
        sp = data["space"]
        space = PointSpace(sp["points"], sp.get("coords"))
        if data["distance"]["family"] == "product":
            raise ValidationError(
                "the product family lives on ordered pairs and is built internally; give the base distance",
                kind="BadParameter",
            )
        dist = distance_from_dict(data["distance"], space)
        p = ProblemFile(space, dist, meta=dict(data.get("meta", {})))
        if "objective" in data:
            p.objective = ExtendedObjective.from_mapping(space, data["objective"])
        if "z0" in data:
            space.index(data["z0"])
            p.z0 = data["z0"]
        if "schedule" in data:
            s = data["schedule"]
            if "deltas" in s:
                p.schedule = PerturbationSchedule.explicit(s["epsilon"], s["deltas"])
            else:
                p.schedule = PerturbationSchedule(s["epsilon"], s.get("delta0", 1.0), s.get("gamma", 0.5))
        if "map" in data:
            p.map = SetValuedMap(space, data["map"])
        if "bifunction" in data:
            p.bifunction = Bifunction(space, data["bifunction"])
        if "potential" in data:
            p.potential = PotentialFn.from_mapping(space, data["potential"])
        if "epsilons" in data:
            p.epsilons = [float(e) for e in data["epsilons"]]
    except ValidationError:
        raise
    except AxiomViolation as e:
        raise ValidationError(str(e), kind="AxiomViolation", element=e.element) from e
    except DomainViolation as e:
        raise ValidationError(str(e), kind="DomainViolation") from e
    except LookupError as e:
        raise ValidationError(str(e), kind="UnknownPoint", element=getattr(e, "point", None)) from e
    except (VarprinError, ValueError) as e:
        raise ValidationError(str(e), kind=type(e).__name__) from e
    return p


def parse_text(text: str, source: str = "<string>") -> ProblemFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}: {e.msg}", locus=f"line {e.lineno}, column {e.colno}") from e
    return problem_from_dict(data)


def parse_problem(path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from e
    return parse_text(text, str(path))


def generate_instance(seed: int, size: int, family: str = "table", mode: str = "bp", dim: int = 3) -> ProblemFile:
    """Random instance satisfying the hypotheses of ``mode`` by construction.

    Table distances have zero diagonal and off-diagonal entries in (0, 10].
    ``caristi`` draws ``T(x)`` as a nonempty random subset of the descent set
    ``{y : phi(y) <= phi(x) - d(x, y)}`` (which always contains ``x``);
    ``ep`` uses ``F(x, y) = phi(y) - phi(x) + noise`` with nonnegative noise.
    """
    if size < 2:
        raise BadParameter("instance size must be at least 2")
    if mode not in MODES:
        raise BadParameter(f"mode must be one of {MODES}, got {mode!r}")
    if family not in GENERATOR_FAMILIES:
        raise BadParameter(f"family must be one of {GENERATOR_FAMILIES}, got {family!r}")
    rng = np.random.default_rng(seed)
    n = size
    points = [f"p{i}" for i in range(n)]
    if family == "table":
        space = PointSpace(points)
        m = 10.0 * (1.0 - rng.random((n, n)))
        np.fill_diagonal(m, 0.0)
        dist = make_builtin("table", {"matrix": m}, space)
    else:
        c = 0.05 + rng.random((n, dim))
        if family == "kl":
            c = c / c.sum(axis=1, keepdims=True)
        space = PointSpace(points, c)
        params = {"p": float(rng.uniform(0.2, 0.9))} if family == "lp_frac" else None
        dist = make_builtin(family, params, space)
    meta = {"name": f"{mode}-{family}-n{n}-s{seed}", "seed": int(seed), "mode": mode}
    p = ProblemFile(space, dist, meta=meta)

    if mode in ("bp", "ekeland"):
        f = 100.0 * rng.random(n)
        z0 = int(rng.integers(n))
        eps = float(f[z0] - f.min()) + 50.0 * (1.0 - rng.random())
        delta0 = 10.0 * (1.0 - rng.random())
        p.objective = ExtendedObjective(space, f)
        p.z0 = points[z0]
        p.schedule = PerturbationSchedule(eps, delta0, 0.5)
    elif mode == "caristi":
        phi = 100.0 * rng.random(n)
        D = dist.matrix
        pairs = []
        for x in range(n):
            # same expression as check_caristi_hypothesis
            allowed = np.nonzero((phi[x] - D[x]) - phi >= 0)[0]
            keep = allowed[rng.random(allowed.size) < 0.5]
            if not keep.size:
                keep = allowed[[int(rng.integers(allowed.size))]]
            pairs += [(points[x], points[y]) for y in keep]
        p.potential = PotentialFn(space, phi)
        p.map = SetValuedMap(space, pairs)
        p.schedule = PerturbationSchedule(0.25, 1.0, 0.5)
    else:
        phi = 100.0 * rng.random(n)
        noise = np.where(rng.random((n, n)) < 0.5, 0.0, 5.0 * rng.random((n, n)))
        p.potential = PotentialFn(space, phi)
        p.bifunction = Bifunction(space, (phi[None, :] - phi[:, None]) + noise)
        p.epsilons = default_eps_schedule()
    return p


def finite_or_literal(x: float):
    return "+inf" if math.isinf(x) else x
