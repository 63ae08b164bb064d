"""Convergence vocabulary for distance functions, decided on finite data.

On a finite space the identity axiom makes a sequence right (or left)
d-convergent exactly when it is eventually constant, so only traces with an
explicit eventually-constant tail get definite verdicts.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .distance import DistanceSpec, PointSpace
from .errors import BadParameter, HypothesisViolation, NonSingleton


class Verdict(enum.Enum):
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


RIGHT, LEFT = "right", "left"


def _check_side(side):
    if side not in (RIGHT, LEFT):
        raise BadParameter(f"side must be 'right' or 'left', got {side!r}")


@dataclass(frozen=True)
class PointSet:
    """Subset of a space, stored in space order."""

    members: tuple

    @classmethod
    def of(cls, space: PointSpace, ids: Iterable[Hashable]) -> "PointSet":
        idx = sorted({space.index(p) for p in ids})
        return cls(tuple(space.points[i] for i in idx))

    @classmethod
    def from_indices(cls, space: PointSpace, idx) -> "PointSet":
        return cls(tuple(space.points[i] for i in sorted(set(int(k) for k in idx))))

    def indices(self, space: PointSpace) -> np.ndarray:
        return space.indices(self.members)

    def __contains__(self, p):
        return p in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __le__(self, other: "PointSet"):
        return set(self.members) <= set(other.members)

    def as_set(self) -> frozenset:
        return frozenset(self.members)


@dataclass(frozen=True)
class SequenceTrace:
    """Finite prefix ``x_0..x_m`` of a sequence plus what is known about its tail.

    ``constant_from=k`` declares the sequence equal to ``x_m`` from index
    ``k`` onward; ``None`` leaves the tail unspecified.
    """

    terms: tuple
    constant_from: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise BadParameter("a sequence trace needs at least one term")
        k = self.constant_from
        if k is not None:
            m = len(self.terms) - 1
            if not 0 <= k <= m:
                raise BadParameter(f"constant_from={k} outside 0..{m}")
            if any(t != self.terms[k] for t in self.terms[k:]):
                raise BadParameter(f"terms from index {k} are not constant")

    @property
    def eventually_constant(self) -> bool:
        return self.constant_from is not None

    def validate(self, space: PointSpace):
        for t in self.terms:
            space.index(t)


def right_ball(spec: DistanceSpec, x, r: float) -> PointSet:
    """``B(x, r) = {y : d(y, x) < r}``; note the argument order."""
    if not r > 0:
        raise BadParameter("ball radius must be positive")
    j = spec.space.index(x)
    return PointSet.from_indices(spec.space, np.nonzero(spec.column(j) < r)[0])


def cauchy_modulus(spec: DistanceSpec, seq: SequenceTrace, side: str = RIGHT) -> list[float]:
    """Entry ``i`` is ``max_{j >= i} d(x_j, x_i)`` (right) or ``d(x_i, x_j)`` (left)
    over the stored prefix. Exact for the whole sequence under a constant tail,
    since the tail only repeats the last stored term."""
    _check_side(side)
    space = spec.space
    idx = space.indices(seq.terms)
    out = []
    for i, a in enumerate(idx):
        rest = idx[i:]
        vals = spec._values(rest, np.full(rest.size, a)) if side == RIGHT else spec._values(np.full(rest.size, a), rest)
        out.append(float(vals.max()))
    return out


def converges_to(spec: DistanceSpec, seq: SequenceTrace, x, side: str = RIGHT, tol: float = 1e-9) -> Verdict:
    """Decide right (``d(x, x_i) -> 0``) or left (``d(x_i, x) -> 0``) convergence to ``x``.

    Unspecified tails are always inconclusive: a finite prefix says nothing
    about the limit, whatever its last distance is.
    """
    _check_side(side)
    spec.space.index(x)
    seq.validate(spec.space)
    if seq.eventually_constant:
        return Verdict.YES if seq.terms[-1] == x else Verdict.NO
    return Verdict.INCONCLUSIVE


def limits(spec: DistanceSpec, seq: SequenceTrace, side: str = RIGHT) -> list:
    """All points the sequence provably converges to."""
    return [x for x in spec.space if converges_to(spec, seq, x, side) is Verdict.YES]


def sublevel_set(space: PointSpace, f, lam: float) -> PointSet:
    """``{x : f(x) <= lam}``; points with value ``+inf`` never qualify."""
    vals = np.asarray(getattr(f, "values", f), dtype=float)
    return PointSet.from_indices(space, np.nonzero(vals <= lam)[0])


@dataclass(frozen=True)
class NestedFamily:
    """Decreasing sets ``S_i`` with centers ``x_i in S_i`` and radii ``r_i``.

    ``closed_balls`` relaxes containment to ``d(y, x_i) <= r_i``; families
    harvested from engine traces carry it, since the construction only proves
    the non-strict bound.
    """

    sets: tuple
    centers: tuple
    radii: tuple
    closed_balls: bool = False


def cantor_intersect(spec: DistanceSpec, fam: NestedFamily, cutoff: float | None = None, tol: float = 1e-9):
    """Return ``(limit, singleton_check)`` for a nested family.

    The finite stand-in for ``r_i -> 0`` is that the last radius lies below
    ``cutoff`` (default: half the smallest positive distance), which pins the
    last ball to its center. ``tol`` only loosens the closed-ball check.
    """
    space = spec.space
    sets, centers, radii = fam.sets, fam.centers, fam.radii
    if not sets or not (len(sets) == len(centers) == len(radii)):
        raise HypothesisViolation("sets, centers and radii must be nonempty and of equal length")
    if cutoff is None:
        cutoff = spec.min_positive / 2
    idx_sets = []
    for i, (S, c, r) in enumerate(zip(sets, centers, radii)):
        if not len(S):
            raise HypothesisViolation(f"S_{i} is empty", witness=i)
        if not r > 0:
            raise HypothesisViolation(f"radius r_{i} = {r!r} is not positive", witness=i)
        if c not in S:
            raise HypothesisViolation(f"center x_{i} = {c!r} is not in S_{i}", witness=i)
        idx = PointSet.of(space, S).indices(space)
        if idx_sets and not set(idx.tolist()) <= idx_sets[-1]:
            raise HypothesisViolation(f"S_{i} is not contained in S_{i - 1}", witness=i)
        d = spec.column(space.index(c))[idx]
        bad = d > r + tol if fam.closed_balls else d >= r
        if bad.any():
            y = space.points[idx[np.argmax(bad)]]
            raise HypothesisViolation(
                f"S_{i} escapes the ball about {c!r}: d({y!r},{c!r}) = {float(d[np.argmax(bad)])!r} vs r = {r!r}",
                witness=(i, y),
            )
        idx_sets.append(set(idx.tolist()))
    if not radii[-1] < cutoff:
        raise HypothesisViolation(f"last radius {radii[-1]!r} does not fall below cutoff {cutoff!r}")
    common = set.intersection(*idx_sets)
    if len(common) != 1:
        raise NonSingleton(f"intersection has {len(common)} points: {sorted(space.points[i] for i in common)!r}")
    limit = space.points[common.pop()]
    return limit, centers[-1] == limit

