"""Borwein-Preiss and Ekeland constructions on finite spaces, plus verifiers.

The constructions follow the inductive proofs: pick a quasi-minimizer of the
running perturbed function on the current set, then cut the set down to the
points that the new perturbation term does not push above it. Verifiers
recheck the theorems' conclusions by full enumeration and report margins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Sequence

import numpy as np

from . import _kernels
from .distance import DistanceSpec, PointSpace
from .errors import BadParameter, HypothesisViolation, IterationLimit, TraceMismatch
from .sequences import NestedFamily, PointSet

INF_LITERAL = "+inf"
DEFAULT_TOL = 1e-9
EXACT, QUASI = "exact", "quasi"


def _parse_value(v):
    if isinstance(v, str):
        if v.strip().lower() in ("+inf", "inf", "infinity", "+infinity"):
            return math.inf
        raise BadParameter(f"objective value {v!r} is neither a number nor '+inf'")
    if isinstance(v, bool) or v is None:
        raise BadParameter(f"objective value {v!r} is not a number")
    return float(v)


class ExtendedObjective:
    """``f : X -> R u {+inf}`` stored as an array in space order."""

    def __init__(self, space: PointSpace, values):
        arr = np.array([_parse_value(v) for v in values], dtype=float)
        if arr.shape != (len(space),):
            raise BadParameter(f"objective needs {len(space)} values, got {arr.shape[0]}")
        if np.isnan(arr).any() or (arr == -math.inf).any():
            raise BadParameter("objective values must be real or +inf")
        if not np.isfinite(arr).any():
            raise BadParameter("objective must be finite somewhere")
        arr.setflags(write=False)
        self.space = space
        self.values = arr

    @classmethod
    def from_mapping(cls, space: PointSpace, mapping: Mapping[Hashable, Any]) -> "ExtendedObjective":
        for p in mapping:
            space.index(p)
        missing = [p for p in space if p not in mapping]
        if missing:
            raise BadParameter(f"objective has no value for {missing[0]!r}")
        return cls(space, [mapping[p] for p in space])

    def __call__(self, x) -> float:
        return float(self.values[self.space.index(x)])

    def __eq__(self, other):
        if not isinstance(other, ExtendedObjective):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    @property
    def inf(self) -> float:
        return float(self.values.min())

    @property
    def argmin(self):
        """Lowest-index global minimizer."""
        return self.space.points[int(np.argmin(self.values))]

    def to_mapping(self) -> dict:
        return {p: (INF_LITERAL if math.isinf(v) else float(v)) for p, v in zip(self.space, self.values)}


@dataclass(frozen=True)
class PerturbationSchedule:
    """``epsilon`` and the weights ``delta_i``: geometric ``delta0 * gamma**i``
    or an explicit finite list (the sequence is treated as ending there)."""

    epsilon: float
    delta0: float
    gamma: float | None = 0.5
    deltas: tuple | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise BadParameter("epsilon must be positive")
        if self.deltas is not None:
            ds = tuple(float(d) for d in self.deltas)
            if not ds or any(not d > 0 for d in ds):
                raise BadParameter("explicit deltas must be a nonempty list of positive reals")
            object.__setattr__(self, "deltas", ds)
            object.__setattr__(self, "delta0", ds[0])
            object.__setattr__(self, "gamma", None)
        else:
            if self.gamma is None or not 0 < self.gamma < 1:
                raise BadParameter("gamma must lie in (0, 1)")
        if not self.delta0 > 0:
            raise BadParameter("delta0 must be positive")

    @classmethod
    def explicit(cls, epsilon: float, deltas: Sequence[float]) -> "PerturbationSchedule":
        return cls(epsilon, float(deltas[0]) if len(deltas) else 0.0, None, tuple(deltas))

    @property
    def finite(self) -> bool:
        return self.deltas is not None

    def delta(self, i: int) -> float:
        if self.deltas is not None:
            if i >= len(self.deltas):
                raise IterationLimit(f"explicit schedule has no delta_{i}")
            return self.deltas[i]
        return self.delta0 * self.gamma ** i

    def tail_weight(self, s: int) -> float:
        """``sum_{k > s} delta_k``."""
        if self.deltas is not None:
            return float(sum(self.deltas[s + 1:]))
        return self.delta0 * self.gamma ** (s + 1) / (1.0 - self.gamma)

    def bp_radius(self, i: int) -> float:
        return self.epsilon / (2.0 ** i * self.delta0)

    def to_dict(self) -> dict:
        if self.deltas is not None:
            return {"epsilon": self.epsilon, "deltas": list(self.deltas)}
        return {"epsilon": self.epsilon, "delta0": self.delta0, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PerturbationSchedule":
        if "deltas" in d:
            return cls.explicit(float(d["epsilon"]), [float(x) for x in d["deltas"]])
        return cls(float(d["epsilon"]), float(d["delta0"]), float(d.get("gamma", 0.5)))


def ekeland_radius(i: int) -> float:
    return 2.0 ** -i


@dataclass
class Iterate:
    z: Hashable
    members: PointSet
    slack: float
    slack_allowed: float
    radius: float


@dataclass
class ConstructionTrace:
    """Per-iteration record ``(z_i, S_i, slack, r_i)`` of one run."""

    kind: str
    iterates: list
    stabilized_at: int | None = None
    picker: str = EXACT
    seed: int | None = None

    @property
    def zs(self) -> list:
        return [it.z for it in self.iterates]

    @property
    def sets(self) -> list:
        return [it.members for it in self.iterates]

    @property
    def radii(self) -> list:
        return [it.radius for it in self.iterates]

    def __len__(self):
        return len(self.iterates)

    def nested_family(self, spec: DistanceSpec, cutoff: float | None = None) -> NestedFamily:
        """The trace as a nested family, extended by its constant tail.

        After stabilization every later ``S_i`` is ``{zbar}`` and radii keep
        halving, so the tail is appended until the radius drops below
        ``cutoff`` (default: half the smallest positive distance).
        """
        if cutoff is None:
            cutoff = spec.min_positive / 2
        sets, centers, radii = list(self.sets), list(self.zs), list(self.radii)
        if self.stabilized_at is not None:
            zbar = centers[-1]
            r = radii[-1]
            while not r < cutoff:
                r = r / 2.0
                sets.append(PointSet((zbar,)))
                centers.append(zbar)
                radii.append(r)
        return NestedFamily(tuple(sets), tuple(centers), tuple(radii), closed_balls=True)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "picker": self.picker,
            "seed": self.seed,
            "stabilized_at": self.stabilized_at,
            "iterates": [
                {
                    "z": it.z,
                    "members": list(it.members),
                    "slack": it.slack,
                    "slack_allowed": it.slack_allowed,
                    "radius": it.radius,
                }
                for it in self.iterates
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ConstructionTrace":
        its = [
            Iterate(it["z"], PointSet(tuple(it["members"])), float(it["slack"]),
                    float(it["slack_allowed"]), float(it["radius"]))
            for it in d["iterates"]
        ]
        return cls(d["kind"], its, d.get("stabilized_at"), d.get("picker", EXACT), d.get("seed"))


@dataclass
class Claim:
    label: str
    satisfied: bool
    margin: float
    witness: Any = None
    detail: str = ""


@dataclass
class Certificate:
    kind: str
    zbar: Hashable
    claims: list
    tolerance: float
    notes: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    digest: str | None = None

    @property
    def verified(self) -> bool:
        return all(c.satisfied for c in self.claims)

    def claim(self, label: str) -> Claim:
        return next(c for c in self.claims if c.label == label)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "zbar": self.zbar,
            "tolerance": self.tolerance,
            "verified": self.verified,
            "claims": [
                {"label": c.label, "satisfied": c.satisfied, "margin": _num(c.margin),
                 "witness": c.witness, "detail": c.detail}
                for c in self.claims
            ],
            "notes": list(self.notes),
            "info": self.info,
            "digest": self.digest,
        }


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


def _check_start(f: ExtendedObjective, z0, epsilon: float) -> int:
    i0 = f.space.index(z0)
    fz0 = f.values[i0]
    if not math.isfinite(fz0):
        raise HypothesisViolation(f"f(z0) = +inf at z0 = {z0!r}", witness=z0)
    if not fz0 < f.inf + epsilon:
        raise HypothesisViolation(
            f"z0 = {z0!r} is not an epsilon-quasi-minimizer: f(z0) = {fz0!r} >= inf f + epsilon = {f.inf + epsilon!r}",
            witness=z0,
        )
    return i0


def _check_picker(picker):
    if picker not in (EXACT, QUASI):
        raise BadParameter(f"picker must be 'exact' or 'quasi', got {picker!r}")


def _pick(values, active, allowed, picker, rng):
    if picker == EXACT:
        return _kernels.argmin_active(values, active)
    cands = _kernels.within_slack(values, active, allowed)
    return int(cands[rng.integers(cands.size)])


def borwein_preiss(
    spec: DistanceSpec,
    f: ExtendedObjective,
    sched: PerturbationSchedule,
    z0,
    picker: str = EXACT,
    seed: int | None = None,
    max_iter: int | None = None,
):
    """Run the Borwein-Preiss construction from ``z0``; return ``(zbar, trace)``.

    The running perturbed function is ``g_i(z) = f(z) + sum_{k<i} delta_k d(z, z_k)``.
    ``S_0 = {z : f(z) + delta_0 d(z, z0) <= f(z0)}``; then ``z_i`` is picked
    in ``S_{i-1}`` within ``eps * delta_i / (2**i * delta_0)`` of ``inf g_i``
    (exact argmin, lowest index on ties, or uniformly at random under
    ``seed`` for the quasi picker) and
    ``S_i = {z in S_{i-1} : g_i(z) + delta_i d(z, z_i) <= g_i(z_i)}``.
    The run stops once ``S_i = {z_i}``.
    """
    _check_picker(picker)
    space = spec.space
    n = len(space)
    eps = sched.epsilon
    i0 = _check_start(f, z0, eps)
    max_iter = 10 * n if max_iter is None else max_iter
    rng = np.random.default_rng(seed) if picker == QUASI else None

    g = np.array(f.values, dtype=float)
    active = np.arange(n, dtype=np.int64)
    active = _kernels.filter_leq(g, spec.column(i0), active, sched.delta(0), g[i0], g)
    iterates = [
        Iterate(space.points[i0], PointSet.from_indices(space, active),
                float(f.values[i0] - f.inf), eps, sched.bp_radius(0))
    ]
    i = 0
    while active.size > 1:
        i += 1
        if i > max_iter:
            raise IterationLimit(f"no stabilization within {max_iter} iterations")
        allowed = eps * sched.delta(i) / (2.0 ** i * sched.delta0)
        z = _pick(g, active, allowed, picker, rng)
        used = float(g[z] - g[active].min())
        active = _kernels.filter_leq(g, spec.column(z), active, sched.delta(i), g[z], g)
        iterates.append(
            Iterate(space.points[z], PointSet.from_indices(space, active), used, allowed, sched.bp_radius(i))
        )
    trace = ConstructionTrace("bp", iterates, i, picker, seed)
    return iterates[-1].z, trace


def ekeland(
    spec: DistanceSpec,
    f: ExtendedObjective,
    epsilon: float,
    z0,
    picker: str = EXACT,
    seed: int | None = None,
    max_iter: int | None = None,
):
    """Run the Ekeland construction from ``z0``; return ``(zbar, trace)``.

    ``S_0 = {z : f(z) + eps d(z, z0) <= f(z0)}``; ``z_i`` is picked in
    ``S_{i-1}`` with ``f(z_i) <= inf_{S_{i-1}} f + eps / 2**i`` and
    ``S_i = {z in S_{i-1} : f(z) + eps d(z, z_i) <= f(z_i)}``.

    The cut keeps only points of ``S_{i-1}``: without the triangle inequality
    the unrestricted set ``{z in X : ...}`` need not shrink, and nesting is
    what the radius bounds and the intersection argument rely on.
    """
    _check_picker(picker)
    if not epsilon > 0:
        raise BadParameter("epsilon must be positive")
    space = spec.space
    n = len(space)
    i0 = _check_start(f, z0, epsilon)
    max_iter = 10 * n if max_iter is None else max_iter
    rng = np.random.default_rng(seed) if picker == QUASI else None

    fv = np.ascontiguousarray(f.values, dtype=float)
    scratch = np.empty(n)
    active = np.arange(n, dtype=np.int64)
    active = _kernels.filter_leq(fv, spec.column(i0), active, epsilon, fv[i0], scratch)
    iterates = [
        Iterate(space.points[i0], PointSet.from_indices(space, active),
                float(fv[i0] - f.inf), float(epsilon), ekeland_radius(0))
    ]
    i = 0
    while active.size > 1:
        i += 1
        if i > max_iter:
            raise IterationLimit(f"no stabilization within {max_iter} iterations")
        allowed = epsilon / 2.0 ** i
        z = _pick(fv, active, allowed, picker, rng)
        used = float(fv[z] - fv[active].min())
        active = _kernels.filter_leq(fv, spec.column(z), active, epsilon, fv[z], scratch)
        iterates.append(
            Iterate(space.points[z], PointSet.from_indices(space, active), used, allowed, ekeland_radius(i))
        )
    trace = ConstructionTrace("ekeland", iterates, i, picker, seed)
    return iterates[-1].z, trace


def weak_borwein_preiss(spec: DistanceSpec, f: ExtendedObjective, delta0: float, gamma: float = 0.5):
    """Weak form: ``eps = 1`` started at the lowest-index global minimizer."""
    sched = PerturbationSchedule(1.0, delta0, gamma)
    return borwein_preiss(spec, f, sched, f.argmin)


def weak_ekeland(spec: DistanceSpec, f: ExtendedObjective, epsilon: float):
    return ekeland(spec, f, epsilon, f.argmin)


# --- verification -----------------------------------------------------------


def _check_trace_structure(spec, trace, kind, z0):
    space = spec.space
    if trace.kind != kind:
        raise TraceMismatch(f"trace kind {trace.kind!r} is not {kind!r}")
    if not trace.iterates:
        raise TraceMismatch("empty trace")
    if trace.iterates[0].z != z0:
        raise TraceMismatch(f"trace starts at {trace.iterates[0].z!r}, not z0 = {z0!r}")
    prev = None
    for i, it in enumerate(trace.iterates):
        try:
            idx = set(space.indices(it.members).tolist())
            zi = space.index(it.z)
        except LookupError as e:
            raise TraceMismatch(f"iterate {i}: {e}") from None
        if zi not in idx:
            raise TraceMismatch(f"z_{i} = {it.z!r} is not in S_{i}")
        if prev is not None:
            if not idx <= prev:
                raise TraceMismatch(f"S_{i} is not contained in S_{i - 1}")
            if zi not in prev:
                raise TraceMismatch(f"z_{i} = {it.z!r} is not in S_{i - 1}")
        prev = idx
    if len(trace.iterates[-1].members) != 1:
        raise TraceMismatch("trace did not stabilize (last set is not a singleton)")


def _check_cut(space, i, lhs, rhs, prev_idx, members_idx, tol):
    member = np.zeros(len(space), dtype=bool)
    member[members_idx] = True
    lhs, rhs = lhs[prev_idx], rhs
    inside = member[prev_idx]
    if np.any(inside & ~(lhs <= rhs + tol)) or np.any(~inside & (lhs < rhs - tol)):
        raise TraceMismatch(f"S_{i} does not match its defining inequality")


def _safe_sub(a, b):
    with np.errstate(invalid="ignore"):
        r = np.asarray(a, dtype=float) - b
    return np.where(np.isnan(r), -math.inf, r)


def bp_perturbed(spec: DistanceSpec, f: ExtendedObjective, sched: PerturbationSchedule, zs) -> np.ndarray:
    """``f(z) + sum_k delta_k d(z, z_k)`` over the whole infinite sequence,
    whose terms after the last stored index repeat that last point."""
    space = spec.space
    idx = [space.index(z) for z in zs]
    total = np.array(f.values, dtype=float)
    for k, j in enumerate(idx):
        total = total + sched.delta(k) * spec.column(j)
    tail = sched.tail_weight(len(idx) - 1)
    if tail:
        total = total + tail * spec.column(idx[-1])
    return total


def verify_bp(
    spec: DistanceSpec,
    f: ExtendedObjective,
    sched: PerturbationSchedule,
    z0,
    zbar,
    trace: ConstructionTrace,
    tol: float = DEFAULT_TOL,
) -> Certificate:
    """Check conclusions (a), (b), (c) of the Borwein-Preiss principle.

    (a) ``d(zbar, z_i) <= eps / (2**i delta_0)`` for every ``i >= 0``, with the
    recorded radii matching that law. (b) ``f(zbar) + sum delta_k d(zbar, z_k)
    <= f(z0)``. (c) the perturbed function exceeds its value at ``zbar``
    everywhere else, by more than ``tol``.
    """
    space = spec.space
    _check_trace_structure(spec, trace, "bp", z0)
    izbar = space.index(zbar)

    # recompute each cut from the recorded z_i
    g = np.array(f.values, dtype=float)
    prev = np.arange(len(space))
    for i, it in enumerate(trace.iterates):
        zi = space.index(it.z)
        lhs = g + sched.delta(i) * spec.column(zi)
        _check_cut(space, i, lhs, g[zi], prev, it.members.indices(space), tol)
        g = lhs
        prev = it.members.indices(space)

    zs = trace.zs
    s = len(zs) - 1
    notes = []
    d_bar = spec.row(izbar)
    radii_ok = True
    margin_a = math.inf
    witness_a = None
    for i, it in enumerate(trace.iterates):
        law = sched.bp_radius(i)
        if abs(it.radius - law) > tol * max(1.0, law):
            radii_ok = False
            m = -abs(it.radius - law)
            if m < margin_a:
                margin_a, witness_a = m, i
        m = law - d_bar[space.index(it.z)]
        if m < margin_a:
            margin_a, witness_a = m, i
    if zbar != zs[-1]:
        # z_k = z_s for all k > s while the radii tend to 0
        m = -float(d_bar[space.index(zs[-1])])
        if m < margin_a:
            margin_a, witness_a = m, "limit"
    claim_a = Claim("a", bool(radii_ok and margin_a >= -tol), float(margin_a), witness_a,
                    "d(zbar, z_i) <= eps / (2^i delta_0) for all i >= 0")
    notes.append("claim (a) checked for every i >= 0, which also covers the i >= 1 reading")

    P = bp_perturbed(spec, f, sched, zs)
    pbar = P[izbar]
    margin_b = float(_safe_sub(f.values[space.index(z0)], pbar))
    claim_b = Claim("b", bool(margin_b >= -tol), margin_b, None,
                    "f(zbar) + sum_k delta_k d(zbar, z_k) <= f(z0)")

    others = np.arange(len(space)) != izbar
    if others.any():
        gaps = _safe_sub(P[others], pbar) if math.isfinite(pbar) else np.full(others.sum(), -math.inf)
        k = int(np.argmin(gaps))
        margin_c = float(gaps[k])
        witness_c = space.points[np.nonzero(others)[0][k]]
    else:
        margin_c, witness_c = math.inf, None
    claim_c = Claim("c", bool(margin_c > tol), margin_c, witness_c,
                    "strict minimum of the perturbed function at zbar")
    if sched.finite:
        notes.append("explicit delta list: the series is treated as ending with the list")
    info = {"stabilized_at": trace.stabilized_at, "series_tail_weight": sched.tail_weight(s)}
    return Certificate("bp", zbar, [claim_a, claim_b, claim_c], tol, notes, info)


def verify_ekeland(
    spec: DistanceSpec,
    f: ExtendedObjective,
    epsilon: float,
    z0,
    zbar,
    tol: float = DEFAULT_TOL,
    trace: ConstructionTrace | None = None,
) -> Certificate:
    """Check conclusions (a) ``d(zbar, z0) <= 1``, (b) ``f(zbar) + eps d(zbar, z0)
    <= f(z0)`` and (c) ``f(z) + eps d(z, zbar) >= f(zbar)`` for all ``z``.

    With a ``trace`` the cuts are re-derived and both radius readings are
    reported in ``info``: the derivable ``2**-i`` and the stated ``eps / 2**i``.
    """
    space = spec.space
    izbar = space.index(zbar)
    i0 = space.index(z0)
    fv = f.values
    info = {}
    notes = []
    if trace is not None:
        _check_trace_structure(spec, trace, "ekeland", z0)
        prev = np.arange(len(space))
        derivable_ok = stated_ok = True
        for i, it in enumerate(trace.iterates):
            zi = space.index(it.z)
            col = spec.column(zi)
            members = it.members.indices(space)
            _check_cut(space, i, fv + epsilon * col, fv[zi], prev, members, tol)
            dmax = float(col[members].max())
            derivable_ok &= dmax <= ekeland_radius(i) + tol
            stated_ok &= dmax <= epsilon / 2.0 ** i + tol
            prev = members
        info.update(stabilized_at=trace.stabilized_at, radius_2_pow_minus_i_ok=bool(derivable_ok),
                    radius_eps_over_2_pow_i_ok=bool(stated_ok))
        if not stated_ok:
            notes.append("a set escapes the stated radius eps/2^i; the derivable bound 2^-i is the one enforced")

    d0 = spec.evaluate(zbar, z0)
    margin_a = 1.0 - d0
    claim_a = Claim("a", bool(margin_a >= -tol), margin_a, None, "d(zbar, z0) <= 1")
    margin_b = float(_safe_sub(fv[i0], fv[izbar] + epsilon * d0))
    claim_b = Claim("b", bool(margin_b >= -tol), margin_b, None, "f(zbar) + eps d(zbar, z0) <= f(z0)")
    others = np.arange(len(space)) != izbar
    if others.any():
        vals = fv + epsilon * spec.column(izbar)
        gaps = _safe_sub(vals[others], fv[izbar]) if math.isfinite(fv[izbar]) else np.full(others.sum(), -math.inf)
        k = int(np.argmin(gaps))
        margin_c = float(gaps[k])
        witness_c = space.points[np.nonzero(others)[0][k]]
    else:
        margin_c, witness_c = math.inf, None
    claim_c = Claim("c", bool(margin_c >= -tol), margin_c, witness_c, "f(z) + eps d(z, zbar) >= f(zbar) for all z")
    return Certificate("ekeland", zbar, [claim_a, claim_b, claim_c], tol, notes, info)


def ekeland_admissible_exists(spec: DistanceSpec, f: ExtendedObjective, epsilon: float, z0, tol: float = DEFAULT_TOL):
    """Brute force: every point satisfying (b) and (c) of the Ekeland principle.

    An empty list means no choice of ``zbar`` can satisfy the conclusions on
    this instance.
    """
    space = spec.space
    fv = f.values
    i0 = space.index(z0)
    D = spec.matrix
    out = []
    for j in range(len(space)):
        if not math.isfinite(fv[j]):
            continue
        if fv[j] + epsilon * D[j, i0] > fv[i0] + tol:
            continue
        if np.all(fv + epsilon * D[:, j] >= fv[j] - tol):
            out.append(space.points[j])
    return out
