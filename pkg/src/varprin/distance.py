"""Generalized distance functions: no symmetry, no triangle inequality.

A :class:`DistanceSpec` is bound to a :class:`PointSpace` and is evaluated
through one vectorized routine per family, so that scalar evaluation, columns
and full matrices agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import AxiomViolation, BadParameter, BudgetExceeded, DomainViolation, UnknownPoint

FAMILIES = (
    "table",
    "euclidean",
    "lp_frac",
    "kl",
    "itakura_saito",
    "sq_euclidean",
    "symmetrized",
    "product",
)
COORD_FAMILIES = ("euclidean", "lp_frac", "kl", "itakura_saito", "sq_euclidean")

KL_SUM_TOL = 1e-9
DEFAULT_TOL = 1e-9


class PointSpace:
    """Finite ordered ground set, optionally carrying real coordinates.

    Point identifiers are opaque hashables (strings in problem files, pairs
    on product spaces). ``coords`` is an ``(n, dim)`` array aligned with
    ``points``.
    """

    def __init__(self, points: Sequence[Hashable], coords=None):
        points = tuple(points)
        if not points:
            raise BadParameter("point space must be nonempty")
        index = {}
        for i, p in enumerate(points):
            if p in index:
                raise BadParameter(f"duplicate point identifier {p!r}")
            index[p] = i
        if coords is not None:
            if isinstance(coords, Mapping):
                missing = [p for p in points if p not in coords]
                if missing:
                    raise BadParameter(f"no coordinates for {missing[0]!r}")
                extra = [p for p in coords if p not in index]
                if extra:
                    raise UnknownPoint(extra[0])
                coords = [coords[p] for p in points]
            arr = np.array(coords, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != len(points) or arr.shape[1] < 1:
                raise BadParameter("coordinates must share one dimension n >= 1")
            if not np.all(np.isfinite(arr)):
                raise BadParameter("coordinates must be finite")
            arr.setflags(write=False)
            coords = arr
        self.points = points
        self.coords = coords
        self._index = index

    @classmethod
    def from_coords(cls, coords: Mapping[Hashable, Sequence[float]]) -> "PointSpace":
        return cls(list(coords), coords)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p):
        try:
            return p in self._index
        except TypeError:
            return False

    def __eq__(self, other):
        if not isinstance(other, PointSpace):
            return NotImplemented
        if self.points != other.points:
            return False
        if (self.coords is None) != (other.coords is None):
            return False
        return self.coords is None or np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.points)

    def __repr__(self):
        dim = "" if self.coords is None else f", dim={self.coords.shape[1]}"
        return f"PointSpace(n={len(self)}{dim})"

    def index(self, p) -> int:
        try:
            return self._index[p]
        except (KeyError, TypeError):
            raise UnknownPoint(p) from None

    def indices(self, ps) -> np.ndarray:
        return np.fromiter((self.index(p) for p in ps), dtype=np.int64)

    @cached_property
    def square(self) -> "PointSpace":
        """The space of ordered pairs, in row-major order."""
        return PointSpace([(x, y) for x in self.points for y in self.points])


@dataclass(frozen=True, eq=False)
class DistanceSpec:
    """A distance function on ``space``: builtin family plus parameters.

    Construct through :func:`make_builtin`, :func:`symmetrize` or
    :func:`product_distance`; those validate the invariants.
    """

    family: str
    params: Mapping[str, Any]
    space: PointSpace
    _values: Any = field(repr=False)

    def evaluate(self, x, y) -> float:
        i = np.array([self.space.index(x)])
        j = np.array([self.space.index(y)])
        return float(self._values(i, j)[0])

    def column(self, j: int) -> np.ndarray:
        """``d(x_i, x_j)`` for every ``i`` (distances *to* point index ``j``), contiguous."""
        if self.family != "product":
            return self._columns[j]
        n = len(self.space)
        return self._values(np.arange(n), np.full(n, j))

    def row(self, i: int) -> np.ndarray:
        """``d(x_i, x_j)`` for every ``j`` (distances *from* point index ``i``)."""
        if self.family != "product":
            return self.matrix[i]
        n = len(self.space)
        return self._values(np.full(n, i), np.arange(n))

    @cached_property
    def _columns(self) -> np.ndarray:
        c = np.ascontiguousarray(self.matrix.T)
        c.setflags(write=False)
        return c

    @cached_property
    def matrix(self) -> np.ndarray:
        n = len(self.space)
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        m = np.ascontiguousarray(self._values(i.ravel(), j.ravel()).reshape(n, n))
        m.setflags(write=False)
        return m

    @cached_property
    def min_positive(self) -> float:
        """Smallest off-diagonal value; ``inf`` on a one-point space."""
        if self.family == "product":
            return self.params["inner"].min_positive
        n = len(self.space)
        if n < 2:
            return math.inf
        m = self.matrix
        return float(m[~np.eye(n, dtype=bool)].min())

    def to_dict(self) -> dict:
        params = dict(self.params)
        if "inner" in params:
            params["inner"] = params["inner"].to_dict()
        if self.family == "table":
            params["matrix"] = [list(map(float, r)) for r in self.params["matrix"]]
        if "weights" in params:
            params["weights"] = list(params["weights"])
        return {"family": self.family, "params": params}


def evaluate(spec: DistanceSpec, x, y) -> float:
    """``d(x, y)`` for two point identifiers of ``spec.space``."""
    return spec.evaluate(x, y)


def _coord_sum(term, X, Y):
    # fixed summation order over coordinates
    acc = term(X[:, 0], Y[:, 0])
    for k in range(1, X.shape[1]):
        acc = acc + term(X[:, k], Y[:, k])
    return acc


def _coord_values(family, coords, p=None):
    def euclid(i, j):
        return np.sqrt(_coord_sum(lambda a, b: (a - b) ** 2, coords[i], coords[j]))

    def sq(i, j):
        return _coord_sum(lambda a, b: (a - b) ** 2, coords[i], coords[j])

    def lp(i, j):
        return _coord_sum(lambda a, b: np.abs(a - b) ** p, coords[i], coords[j]) ** (1.0 / p)

    def kl(i, j):
        # Bregman form of KL: termwise nonnegative, equals KL on the simplex
        s = _coord_sum(lambda a, b: a * np.log(a / b) - a + b, coords[i], coords[j])
        return np.maximum(s, 0.0)

    def isd(i, j):
        s = _coord_sum(lambda a, b: a / b - np.log(a / b) - 1.0, coords[i], coords[j])
        return np.maximum(s, 0.0)

    return {"euclidean": euclid, "sq_euclidean": sq, "lp_frac": lp, "kl": kl, "itakura_saito": isd}[family]


def _check_table(matrix, space):
    m = np.array(matrix, dtype=float)
    n = len(space)
    if m.shape != (n, n):
        raise BadParameter(f"table must be {n}x{n}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise BadParameter("table entries must be finite")
    for i in range(n):
        if m[i, i] != 0.0:
            p = space.points[i]
            raise AxiomViolation(
                f"identity axiom: d({p!r},{p!r}) = {float(m[i, i])!r} must be 0", element=(p, p)
            )
    bad = np.argwhere((m <= 0.0) & ~np.eye(n, dtype=bool))
    if bad.size:
        i, j = bad[0]
        x, y = space.points[i], space.points[j]
        raise AxiomViolation(
            f"identity axiom: d({x!r},{y!r}) = {float(m[i, j])!r} must be > 0 for distinct points",
            element=(x, y),
        )
    m.setflags(write=False)
    return m


def _check_coords(family, space):
    if space.coords is None:
        raise BadParameter(f"family {family!r} needs point coordinates")
    c = space.coords
    if family in ("kl", "itakura_saito"):
        bad = np.argwhere(c <= 0.0)
        if bad.size:
            p = space.points[bad[0][0]]
            raise DomainViolation(f"{family} needs strictly positive coordinates; point {p!r} has {float(c[tuple(bad[0])])!r}")
    if family == "kl":
        sums = c.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > KL_SUM_TOL)[0]
        if bad.size:
            p = space.points[bad[0]]
            raise DomainViolation(f"kl needs probability vectors; coordinates of {p!r} sum to {float(sums[bad[0]])!r}")
    # distinct points must have distinct coordinates or the identity axiom fails
    _, first = np.unique(c, axis=0, return_index=True)
    if first.size != len(space):
        dup = sorted(set(range(len(space))) - set(first.tolist()))[0]
        same = next(i for i in first if np.array_equal(c[i], c[dup]))
        raise AxiomViolation(
            f"identity axiom: points {space.points[same]!r} and {space.points[dup]!r} share coordinates",
            element=(space.points[same], space.points[dup]),
        )


def make_builtin(family: str, params: Mapping[str, Any] | None, space: PointSpace) -> DistanceSpec:
    """Build and validate a distance spec.

    ``params`` per family: ``table`` takes ``{"matrix": [[...]]}`` indexed in
    space order, ``lp_frac`` takes ``{"p": p}`` with ``0 < p < 1``,
    ``symmetrized`` takes ``{"inner": spec, "weights": (w_r, w_l)}`` and
    ``product`` takes ``{"inner": spec}`` (the result lives on
    ``inner.space.square``). The coordinate families take no parameters.
    """
    params = dict(params or {})
    if family not in FAMILIES:
        raise BadParameter(f"unknown distance family {family!r}")
    if family == "symmetrized":
        w_r, w_l = params.get("weights", (1.0, 1.0))
        return symmetrize(params["inner"], w_r, w_l)
    if family == "product":
        return product_distance(params["inner"])
    if family == "table":
        if "matrix" not in params:
            raise BadParameter("table family needs params['matrix']")
        m = _check_table(params["matrix"], space)
        return DistanceSpec("table", {"matrix": m}, space, lambda i, j: m[i, j])
    _check_coords(family, space)
    if family == "lp_frac":
        p = params.get("p")
        if p is None or not (0.0 < float(p) < 1.0):
            raise BadParameter(f"lp_frac exponent must lie in (0, 1), got {p!r}")
        fn = _coord_values(family, space.coords, float(p))
        return DistanceSpec(family, {"p": float(p)}, space, fn)
    if params:
        raise BadParameter(f"family {family!r} takes no parameters")
    return DistanceSpec(family, {}, space, _coord_values(family, space.coords))


def symmetrize(spec: DistanceSpec, w_r: float = 1.0, w_l: float = 1.0) -> DistanceSpec:
    """Weighted symmetrization ``w_r d(x, y) + w_l d(y, x)``.

    With equal weights the result is symmetric bit for bit.
    """
    w_r, w_l = float(w_r), float(w_l)
    if w_r < 0 or w_l < 0 or not (w_r + w_l > 0):
        raise BadParameter("symmetrization weights must be >= 0 and not both zero")
    inner = spec._values
    if w_r == w_l:
        def values(i, j):
            return w_r * (inner(i, j) + inner(j, i))
    else:
        def values(i, j):
            return w_r * inner(i, j) + w_l * inner(j, i)
    return DistanceSpec("symmetrized", {"inner": spec, "weights": (w_r, w_l)}, spec.space, values)


def product_distance(spec: DistanceSpec) -> DistanceSpec:
    """Pair distance ``rho((x,y),(x',y')) = d(x',x) + d(y',y)`` on ordered pairs.

    Note the swapped argument order. Pair ``(x_a, x_b)`` has index
    ``a * n + b`` in ``spec.space.square``.
    """
    n = len(spec.space)
    inner = spec._values

    def values(p, q):
        p = np.asarray(p)
        q = np.asarray(q)
        return inner(q // n, p // n) + inner(q % n, p % n)

    return DistanceSpec("product", {"inner": spec}, spec.space.square, values)


def distance_from_dict(data: Mapping[str, Any], space: PointSpace) -> DistanceSpec:
    """Inverse of :meth:`DistanceSpec.to_dict`.

    For ``product`` the returned spec lives on ``space.square``.
    """
    family = data.get("family")
    params = dict(data.get("params") or {})
    if family in ("symmetrized", "product"):
        if "inner" not in params:
            raise BadParameter(f"{family} needs params['inner']")
        params["inner"] = distance_from_dict(params["inner"], space)
    return make_builtin(family, params, space)


@dataclass
class AxiomReport:
    identity_ok: bool
    symmetry_witnesses: list
    triangle_witnesses: list
    mode: str = "full"
    tol: float = DEFAULT_TOL
    n_symmetry: int = 0
    n_triangle: int = 0
    triples_checked: int = 0
    identity_failures: list = field(default_factory=list)

    @property
    def symmetric(self) -> bool:
        return self.n_symmetry == 0

    @property
    def triangular(self) -> bool:
        return self.n_triangle == 0


def axiom_report(
    spec: DistanceSpec,
    tol: float = DEFAULT_TOL,
    *,
    sample: int | None = None,
    seed: int | None = None,
    max_full: int = 8_000_000,
    max_witnesses: int | None = None,
) -> AxiomReport:
    """Scan ``spec`` for identity failures, asymmetric pairs and triangle violations.

    The full scan is O(n^3) and runs when ``n**3 <= max_full``; otherwise a
    ``sample`` budget of random triples is required. Witness lists are
    exhaustive under the full scan unless capped by ``max_witnesses``.
    """
    space = spec.space
    n = len(space)
    if sample is None and n ** 3 > max_full:
        raise BudgetExceeded(f"full scan needs {n ** 3} triples (> {max_full}); pass a sample budget")
    D = spec.matrix
    pts = space.points
    offdiag = ~np.eye(n, dtype=bool)
    bad_diag = np.nonzero(np.diag(D) != 0.0)[0]
    bad_off = np.argwhere((D <= 0.0) & offdiag)
    identity_failures = [(pts[i], pts[i]) for i in bad_diag] + [(pts[i], pts[j]) for i, j in bad_off]

    sym = _kernels.symmetry_scan(D, tol)
    cap = len(sym) if max_witnesses is None else min(max_witnesses, len(sym))
    sym_w = [(pts[i], pts[j], float(D[i, j]), float(D[j, i])) for i, j in sym[:cap]]

    if sample is None:
        limit = -1 if max_witnesses is None else max_witnesses
        count, tri = _kernels.triangle_scan(D, tol, limit)
        mode, checked = "full", n ** 3
    else:
        rng = np.random.default_rng(seed)
        triples = np.ascontiguousarray(rng.integers(0, n, size=(int(sample), 3)), dtype=np.int64)
        hits = _kernels.triangle_sample(D, triples, tol)
        tri = triples[hits]
        count = len(tri)
        if max_witnesses is not None:
            tri = tri[:max_witnesses]
        mode, checked = "sampled", int(sample)
    tri_w = [
        (pts[x], pts[y], pts[z], float(D[x, z]), float(D[x, y] + D[y, z])) for x, y, z in tri
    ]
    return AxiomReport(
        identity_ok=not identity_failures,
        symmetry_witnesses=sym_w,
        triangle_witnesses=tri_w,
        mode=mode,
        tol=tol,
        n_symmetry=len(sym),
        n_triangle=int(count),
        triples_checked=checked,
        identity_failures=identity_failures,
    )
