"""Caristi fixed points and equilibrium problems via the Ekeland principle.

Both solvers run the weak Ekeland construction and then check their answer
against exhaustive enumeration.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .distance import DistanceSpec, PointSpace, product_distance
from .engine import ExtendedObjective, weak_ekeland
from .errors import BadParameter, EmptyGraph, EstimateViolation, HypothesisViolation, NoConvergence
from .sequences import PointSet

DEFAULT_TOL = 1e-9


class PotentialFn(ExtendedObjective):
    """``phi : X -> R u {+inf}``, same storage as :class:`ExtendedObjective`."""


class SetValuedMap:
    """``T : X -o X`` given by its graph ``{(x, y) : y in T(x)}``."""

    def __init__(self, space: PointSpace, pairs: Iterable[Sequence[Hashable]]):
        n = len(space)
        img = [set() for _ in range(n)]
        for pair in pairs:
            if len(pair) != 2:
                raise BadParameter(f"graph entries must be pairs, got {pair!r}")
            x, y = pair
            img[space.index(x)].add(space.index(y))
        self.space = space
        self._img = [np.array(sorted(s), dtype=np.int64) for s in img]

    @classmethod
    def from_images(cls, space: PointSpace, images: Mapping[Hashable, Iterable[Hashable]]) -> "SetValuedMap":
        return cls(space, [(x, y) for x, ys in images.items() for y in ys])

    def __call__(self, x) -> PointSet:
        return PointSet.from_indices(self.space, self._img[self.space.index(x)])

    def image_indices(self, i: int) -> np.ndarray:
        return self._img[i]

    @property
    def pairs(self) -> list:
        pts = self.space.points
        return [(pts[i], pts[j]) for i, ys in enumerate(self._img) for j in ys]

    def pair_indices(self) -> np.ndarray:
        """Graph as indices into ``space.square`` (row-major)."""
        n = len(self.space)
        return np.array([i * n + j for i, ys in enumerate(self._img) for j in ys], dtype=np.int64)

    def __len__(self):
        return sum(len(ys) for ys in self._img)

    def __eq__(self, other):
        if not isinstance(other, SetValuedMap):
            return NotImplemented
        return self.space == other.space and self.pairs == other.pairs


class Bifunction:
    """Total finite ``F : X x X -> R`` as a dense matrix in space order."""

    def __init__(self, space: PointSpace, matrix):
        m = np.array(matrix, dtype=float)
        n = len(space)
        if m.shape != (n, n):
            raise BadParameter(f"bifunction must be {n}x{n}, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise BadParameter("bifunction values must be finite")
        m.setflags(write=False)
        self.space = space
        self.matrix = m

    def __call__(self, x, y) -> float:
        return float(self.matrix[self.space.index(x), self.space.index(y)])

    def __eq__(self, other):
        if not isinstance(other, Bifunction):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.matrix, other.matrix)


# --- Caristi ------------------------------------------------------------------


def check_caristi_hypothesis(spec: DistanceSpec, phi: ExtendedObjective, T: SetValuedMap):
    """Check ``phi(y) <= phi(x) - d(x, y)`` on every graph pair.

    Pairs off the graph are vacuous (the indicator is ``+inf`` there).
    Returns ``(ok, witnesses)`` with one ``(x, y, margin)`` per violating
    pair, ``margin = phi(x) - d(x, y) - phi(y) < 0``.
    """
    space = spec.space
    pv = phi.values
    witnesses = []
    for i in range(len(space)):
        ys = T.image_indices(i)
        if not ys.size:
            continue
        rhs = pv[i] - spec.row(i)[ys]
        with np.errstate(invalid="ignore"):
            margin = rhs - pv[ys]
        # inf - inf only arises with phi(x) = phi(y) = +inf, where the inequality holds
        margin = np.where(np.isnan(margin), math.inf, margin)
        for j, m in zip(ys, margin):
            if m < 0:
                witnesses.append((space.points[i], space.points[j], float(m)))
    return not witnesses, witnesses


def brute_fixed_points(T: SetValuedMap):
    """``(fix(T), Endpoints(T))`` by enumeration."""
    space = T.space
    fixed, ends = [], []
    for i in range(len(space)):
        ys = T.image_indices(i)
        if i in ys:
            fixed.append(i)
            if ys.size == 1:
                ends.append(i)
    return PointSet.from_indices(space, fixed), PointSet.from_indices(space, ends)


@dataclass
class CaristiResult:
    point: Hashable
    endpoint_ok: bool
    pair: tuple
    evp_margin: float
    forcing: list = field(default_factory=list)

    @property
    def fixed(self) -> bool:
        return any(z == self.point for z, _, _ in self.forcing)


def caristi_objective(spec: DistanceSpec, phi: ExtendedObjective, T: SetValuedMap, eps: float) -> ExtendedObjective:
    """``f(x, y) = phi(x) - (1 - eps) d(x, y)`` on the graph, ``+inf`` off it."""
    space = spec.space
    n = len(space)
    vals = np.full(n * n, math.inf)
    pv = phi.values
    for i in range(n):
        ys = T.image_indices(i)
        if ys.size:
            vals[i * n + ys] = pv[i] - (1.0 - eps) * spec.row(i)[ys]
    return ExtendedObjective(space.square, vals)


def caristi_fixed_point(
    spec: DistanceSpec,
    phi: ExtendedObjective,
    T: SetValuedMap,
    eps: float = 0.25,
    tol: float = DEFAULT_TOL,
) -> CaristiResult:
    """Find a fixed point of ``T`` under the Caristi condition.

    Minimizes ``f(x, y) = phi(x) - (1 - eps) d(x, y) + indicator_grT(x, y)``
    on ordered pairs with the weak Ekeland construction under the swapped pair
    distance, then reads the fixed point off the second component ``ybar``.
    ``forcing`` lists, for every ``z in T(ybar)``, the two sides of
    ``0 <= phi(xbar) - phi(ybar) - d(xbar, ybar) <= -(1 - 2 eps) d(ybar, z)``.
    """
    if not 0.0 < eps < 0.5:
        raise BadParameter(f"eps must lie in the open interval (0, 1/2), got {eps!r}")
    space = spec.space
    n = len(space)
    if len(T) == 0:
        raise EmptyGraph("the graph of T is empty")
    ok, wit = check_caristi_hypothesis(spec, phi, T)
    if not ok:
        x, y, m = wit[0]
        raise HypothesisViolation(
            f"Caristi condition fails on {len(wit)} graph pair(s), e.g. ({x!r},{y!r}) by {-m!r}", witness=wit
        )
    empty = [space.points[i] for i in range(n) if not T.image_indices(i).size]
    if empty:
        raise HypothesisViolation(f"T has empty values, e.g. T({empty[0]!r})", witness=empty)
    f = caristi_objective(spec, phi, T, eps)
    if not np.isfinite(f.values).any():
        raise HypothesisViolation("phi is +inf at every graph source")

    rho = product_distance(spec)
    (xbar, ybar), _trace = weak_ekeland(rho, f, eps)
    k = space.square.index((xbar, ybar))
    graph = T.pair_indices()
    with np.errstate(invalid="ignore"):
        gaps = f.values[graph] + eps * rho.column(k)[graph] - f.values[k]
    evp_margin = float(np.nan_to_num(gaps, nan=math.inf).min())

    ix, iy = space.index(xbar), space.index(ybar)
    lhs = float(phi.values[ix] - phi.values[iy] - spec.row(ix)[iy])
    forcing = [
        (space.points[z], lhs, float(-(1.0 - 2.0 * eps) * spec.row(iy)[z]))
        for z in T.image_indices(iy)
    ]
    images = T.image_indices(iy)
    endpoint_ok = images.size == 1 and images[0] == iy
    return CaristiResult(ybar, bool(endpoint_ok), (xbar, ybar), evp_margin, forcing)


# --- equilibrium problems -----------------------------------------------------


def brute_equilibria(F: Bifunction, tol: float = 0.0) -> PointSet:
    """``EP(F, X) = {x : F(x, y) >= 0 for all y}`` (``>= -tol`` when loosened)."""
    rows = np.nonzero((F.matrix >= -tol).all(axis=1))[0]
    return PointSet.from_indices(F.space, rows)


def check_lower_estimate(F: Bifunction, phi: ExtendedObjective, tol: float = DEFAULT_TOL) -> list:
    """Pairs breaking ``F(x, y) >= phi(y) - phi(x)``, as ``(x, y, margin)``."""
    pv = phi.values
    margin = F.matrix - (pv[None, :] - pv[:, None])
    bad = np.argwhere(margin < -tol)
    pts = F.space.points
    return [(pts[i], pts[j], float(margin[i, j])) for i, j in bad]


def default_eps_schedule(stages: int = 20) -> list:
    return [2.0 ** -i for i in range(stages)]


@dataclass
class EquilibriumResult:
    xbar: Hashable
    residuals: list
    stage_points: list
    stage_bounds: list
    epsilons: list

    def __iter__(self):
        yield self.xbar
        yield self.residuals


def equilibrium_solve(
    spec: DistanceSpec,
    F: Bifunction,
    phi: ExtendedObjective,
    eps_schedule: Sequence[float] | None = None,
    tol: float = DEFAULT_TOL,
) -> EquilibriumResult:
    """Solve ``EP(F, X)`` under the lower estimate ``F(x, y) >= phi(y) - phi(x)``.

    Stage ``i`` runs weak Ekeland on ``phi`` with ``eps_i`` and records
    ``residual_i = min_y F(x_i, y)`` and ``bound_i = min_y [F(x_i, y) + eps_i d(y, x_i)]``.
    Stages stop early once the residual clears ``-tol``; the answer is the
    most frequent stage point (lowest index on ties), which on a finite space
    stands in for a convergent subsequence.
    """
    space = spec.space
    eps_schedule = default_eps_schedule() if eps_schedule is None else [float(e) for e in eps_schedule]
    if not eps_schedule or any(not e > 0 for e in eps_schedule):
        raise BadParameter("epsilon schedule must be a nonempty list of positive reals")
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise BadParameter("epsilon schedule must be strictly decreasing")
    if not np.all(np.isfinite(phi.values)):
        raise BadParameter("the potential must be finite for equilibrium problems")
    bad = check_lower_estimate(F, phi, tol)
    if bad:
        x, y, m = bad[0]
        raise EstimateViolation(
            f"lower estimate fails on {len(bad)} pair(s), e.g. F({x!r},{y!r}) short by {-m!r}", witness=bad
        )

    points, residuals, bounds, used = [], [], [], []
    for eps in eps_schedule:
        x, _ = weak_ekeland(spec, phi, eps)
        i = space.index(x)
        row = F.matrix[i]
        points.append(x)
        residuals.append(float(row.min()))
        bounds.append(float((row + eps * spec.column(i)).min()))
        used.append(eps)
        if residuals[-1] >= -tol:
            break
    counts = Counter(points)
    top = max(counts.values())
    xbar = min((p for p in counts if counts[p] == top), key=space.index)
    if F.matrix[space.index(xbar)].min() < -tol:
        raise NoConvergence(f"schedule exhausted with min_y F({xbar!r}, y) < -tol")
    return EquilibriumResult(xbar, residuals, points, bounds, used)
