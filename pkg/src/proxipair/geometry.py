"""Ambient lp spaces, convex bodies, nearest-point projections, set distances.

Everything downstream (projectors, solvers, certification) reduces to three
primitives defined here: the lp norm, the metric projection onto a convex
body, and the distance between a pair of bodies computed by alternating
projections.  Projections come in closed form wherever possible and fall back
to Dykstra's scheme for intersections and 2-D polygons at p = 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    ProjectionConvergenceError,
    UnboundedBodyError,
    UnsupportedProjectionError,
)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000

Side = Literal["A", "B"]


def _as_matrix(X: np.ndarray | Sequence, dim: int) -> np.ndarray:
    """Coerce one point or a stack of points into an (n, dim) float array."""
    arr = np.atleast_2d(np.asarray(X, dtype=float))
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatchError(
            f"expected points of dimension {dim}, got shape {np.asarray(X).shape}")
    return arr


@dataclass(frozen=True)
class LpSpace:
    """R^dim under the lp norm with 1 < p < inf.

    The endpoint exponents are rejected on purpose: at p = 1 and p = inf the
    norm is not strictly convex, nearest points stop being unique, and every
    operator built on top of the projection breaks down.
    """

    dim: int
    p: float

    def __post_init__(self):
        if not isinstance(self.dim, int) or isinstance(self.dim, bool) or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        p = float(self.p)
        if not math.isfinite(p) or not p > 1.0:
            raise ValueError(f"p must satisfy 1 < p < inf, got {self.p!r}")
        object.__setattr__(self, "p", p)

    def check_vector(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected a vector of length {self.dim}, got shape {arr.shape}")
        return arr

    def norms(self, X: np.ndarray, axis: int = -1) -> np.ndarray:
        """lp norms along `axis`; works on single vectors and stacks alike."""
        X = np.asarray(X, dtype=float)
        if self.p == 2.0:
            return np.sqrt(np.sum(X * X, axis=axis))
        return np.sum(np.abs(X) ** self.p, axis=axis) ** (1.0 / self.p)

    def norm(self, x) -> float:
        return float(self.norms(self.check_vector(x)))

    def distance(self, x, y) -> float:
        return float(self.norms(self.check_vector(x) - self.check_vector(y)))


def norm(space: LpSpace, x) -> float:
    """Norm of x in the given space."""
    return space.norm(x)


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


class ConvexBody:
    """Closed convex subset of an LpSpace with a nearest-point projection.

    Subclasses implement `project_many` on (n, dim) stacks; everything else
    (single-point projection, membership, sampling) builds on that.  Bodies
    are immutable after construction.
    """

    space: LpSpace

    def project_many(self, X: np.ndarray, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
        raise NotImplementedError

    def member(self, x, tol: float = DEFAULT_TOL) -> bool:
        """Direct membership test, no projection involved."""
        raise NotImplementedError

    def member_many(self, X: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Boolean membership mask over an (n, dim) stack."""
        X = _as_matrix(X, self.space.dim)
        return np.array([self.member(x, tol) for x in X], dtype=bool)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise UnboundedBodyError(f"{type(self).__name__} has no bounding box")

    def is_bounded(self) -> bool:
        try:
            self.bounding_box()
            return True
        except UnboundedBodyError:
            return False

    def anchor(self) -> np.ndarray:
        """Some point of the body, used to seed iterations."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n points of the body, uniform-ish.  Default: bounding-box rejection."""
        lo, hi = self.bounding_box()
        out = np.empty((n, self.space.dim))
        have = 0
        for _ in range(10_000):
            batch = rng.uniform(lo, hi, size=(max(n, 32), self.space.dim))
            keep = self.member_many(batch, 1e-12)
            took = batch[keep][: n - have]
            out[have:have + len(took)] = took
            have += len(took)
            if have == n:
                return out
        raise RuntimeError(
            f"rejection sampling failed to hit {type(self).__name__}")  # pragma: no cover


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    """lp ball {x : ||x - center||_p <= radius}."""

    space: LpSpace
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _readonly(self.space.check_vector(self.center)))
        r = float(self.radius)
        if not (math.isfinite(r) and r > 0):
            raise ValueError(f"radius must be positive and finite, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    def project_many(self, X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        # Radial pullback is the exact lp nearest point for every p in
        # (1, inf): stationarity of ||x-y||_p^p on the sphere forces y - c
        # colinear with x - c, with a nonnegative multiplier.
        X = _as_matrix(X, self.space.dim)
        D = X - self.center
        r = self.space.norms(D, axis=1)
        scale = np.ones_like(r)
        outside = r > self.radius
        scale[outside] = self.radius / r[outside]
        return self.center + D * scale[:, None]

    def member(self, x, tol=DEFAULT_TOL):
        return self.space.distance(x, self.center) <= self.radius + tol

    def member_many(self, X, tol=DEFAULT_TOL):
        X = _as_matrix(X, self.space.dim)
        return self.space.norms(X - self.center, axis=1) <= self.radius + tol

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def anchor(self):
        return np.array(self.center)


@dataclass(frozen=True, eq=False)
class Box(ConvexBody):
    """Axis-aligned box {x : lo <= x <= hi}; flat faces (lo == hi) allowed."""

    space: LpSpace
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = self.space.check_vector(self.lo)
        hi = self.space.check_vector(self.hi)
        if np.any(lo > hi):
            raise ValueError("box needs lo <= hi componentwise")
        object.__setattr__(self, "lo", _readonly(lo))
        object.__setattr__(self, "hi", _readonly(hi))

    def project_many(self, X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        # clamp is exact for every p: the objective separates per coordinate
        X = _as_matrix(X, self.space.dim)
        return np.clip(X, self.lo, self.hi)

    def member(self, x, tol=DEFAULT_TOL):
        x = self.space.check_vector(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def member_many(self, X, tol=DEFAULT_TOL):
        X = _as_matrix(X, self.space.dim)
        return np.all((X >= self.lo - tol) & (X <= self.hi + tol), axis=1)

    def bounding_box(self):
        return np.array(self.lo), np.array(self.hi)

    def anchor(self):
        return (self.lo + self.hi) / 2.0

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, size=(n, self.space.dim))

    def corners(self) -> np.ndarray | None:
        if self.space.dim > 16:
            return None
        cols = [(self.lo[i], self.hi[i]) for i in range(self.space.dim)]
        return np.array(list(itertools.product(*cols)))


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexBody):
    """{x : normal . x <= offset}."""

    space: LpSpace
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = self.space.check_vector(self.normal)
        if not np.any(a != 0.0):
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", _readonly(a))
        object.__setattr__(self, "offset", float(self.offset))

    def project_many(self, X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        if self.space.p != 2.0:
            raise UnsupportedProjectionError(
                f"halfspace projection only available at p=2, space has p={self.space.p}")
        X = _as_matrix(X, self.space.dim)
        a = self.normal
        excess = np.maximum(0.0, X @ a - self.offset) / float(a @ a)
        return X - excess[:, None] * a

    def member(self, x, tol=DEFAULT_TOL):
        x = self.space.check_vector(x)
        return (x @ self.normal - self.offset) / np.linalg.norm(self.normal) <= tol

    def anchor(self):
        a = self.normal
        return (self.offset / float(a @ a)) * a


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexBody):
    """{x : normal . x == offset}."""

    space: LpSpace
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = self.space.check_vector(self.normal)
        if not np.any(a != 0.0):
            raise ValueError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", _readonly(a))
        object.__setattr__(self, "offset", float(self.offset))

    def project_many(self, X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        if self.space.p != 2.0:
            raise UnsupportedProjectionError(
                f"hyperplane projection only available at p=2, space has p={self.space.p}")
        X = _as_matrix(X, self.space.dim)
        a = self.normal
        res = (X @ a - self.offset) / float(a @ a)
        return X - res[:, None] * a

    def member(self, x, tol=DEFAULT_TOL):
        x = self.space.check_vector(x)
        return abs(x @ self.normal - self.offset) / np.linalg.norm(self.normal) <= tol

    def anchor(self):
        a = self.normal
        return (self.offset / float(a @ a)) * a


def _hull_edges_2d(vertices: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]] | None:
    """Hull edges (v0, v1) of 2-D vertices in counter-clockwise order.

    Returns None when the vertices are affinely degenerate (point / segment),
    which callers handle through the lower-dimensional paths.
    """
    try:
        from scipy.spatial import ConvexHull, QhullError
    except ImportError:  # pragma: no cover
        from scipy.spatial import ConvexHull
        from scipy.spatial.qhull import QhullError
    try:
        hull = ConvexHull(vertices)
    except QhullError:
        return None
    order = hull.vertices  # counter-clockwise in 2-D
    return [(vertices[order[i]], vertices[order[(i + 1) % len(order)]])
            for i in range(len(order))]


def _edges_to_halfspaces(edges: list[tuple[np.ndarray, np.ndarray]]
                         ) -> list[tuple[np.ndarray, float]]:
    out = []
    for v0, v1 in edges:
        d = v1 - v0
        a = np.array([d[1], -d[0]])  # outward for CCW orientation
        out.append((a, float(a @ v0)))
    return out


@dataclass(frozen=True, eq=False)
class Polytope(ConvexBody):
    """Convex hull of finitely many vertices.

    Projection support depends on shape: single points and axis-aligned
    segments work at every p; general segments, 2-D polygons, and polytopes
    of dimension >= 3 carrying an explicit halfspace list work at p = 2
    (Dykstra over the face halfspaces).
    """

    space: LpSpace
    vertices: np.ndarray
    halfspaces: tuple[tuple[np.ndarray, float], ...] | None = None

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.ndim != 2 or V.shape[1] != self.space.dim or V.shape[0] < 1:
            raise ValueError(
                f"vertices must be a nonempty (k, {self.space.dim}) array, got {V.shape}")
        object.__setattr__(self, "vertices", _readonly(V))
        if self.halfspaces is not None:
            hs = tuple((_readonly(self.space.check_vector(a)), float(b))
                       for a, b in self.halfspaces)
            object.__setattr__(self, "halfspaces", hs)
        object.__setattr__(self, "_distinct", _readonly(np.unique(V, axis=0)))

    @property
    def distinct_vertices(self) -> np.ndarray:
        return self._distinct

    def _segment(self) -> tuple[np.ndarray, np.ndarray] | None:
        W = self._distinct
        if len(W) != 2:
            return None
        return W[0], W[1]

    def _hull_edges(self) -> list[tuple[np.ndarray, np.ndarray]] | None:
        cached = getattr(self, "_hull_edge_cache", False)
        if cached is False:
            cached = _hull_edges_2d(self._distinct) if self.space.dim == 2 else None
            object.__setattr__(self, "_hull_edge_cache", cached)
        return cached

    def _face_halfspaces(self) -> list[tuple[np.ndarray, float]]:
        if self.halfspaces is not None:
            return list(self.halfspaces)
        edges = self._hull_edges()
        if edges is not None:
            return _edges_to_halfspaces(edges)
        raise UnsupportedProjectionError(
            "polytope with >= 3 vertices needs dim == 2 or an explicit halfspace list")

    def project_many(self, X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        X = _as_matrix(X, self.space.dim)
        W = self._distinct
        if len(W) == 1:
            return np.tile(W[0], (len(X), 1))
        seg = self._segment()
        if seg is not None:
            v0, v1 = seg
            d = v1 - v0
            axes = np.nonzero(d != 0.0)[0]
            if len(axes) == 1:
                # axis-aligned segment: degenerate box, clamp works at every p
                lo, hi = np.minimum(v0, v1), np.maximum(v0, v1)
                return np.clip(X, lo, hi)
            if self.space.p != 2.0:
                raise UnsupportedProjectionError(
                    f"general segment projection only available at p=2, got p={self.space.p}")
            t = np.clip((X - v0) @ d / float(d @ d), 0.0, 1.0)
            return v0 + t[:, None] * d
        if self.space.p != 2.0:
            raise UnsupportedProjectionError(
                f"polytope projection only available at p=2, got p={self.space.p}")
        if self.halfspaces is not None:
            return _dykstra_halfspaces(self.space, list(self.halfspaces), X, tol, max_iter)
        edges = self._hull_edges()
        if edges is None:
            raise UnsupportedProjectionError(
                "polytope with >= 3 vertices needs dim == 2 or an explicit halfspace list")
        return _project_polygon_edges(self.space, edges, X)

    def member(self, x, tol=DEFAULT_TOL):
        x = self.space.check_vector(x)
        W = self._distinct
        if len(W) == 1:
            return bool(np.max(np.abs(x - W[0])) <= tol)
        seg = self._segment()
        if seg is not None:
            v0, v1 = seg
            d = v1 - v0
            t = float((x - v0) @ d / (d @ d))
            if not (-tol <= t <= 1.0 + tol):
                return False
            return bool(np.max(np.abs(x - (v0 + np.clip(t, 0, 1) * d))) <= tol)
        for a, b in self._face_halfspaces():
            if (x @ a - b) / np.linalg.norm(a) > tol:
                return False
        return True

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def anchor(self):
        return self.vertices.mean(axis=0)

    def sample(self, rng, n):
        W = self._distinct
        if len(W) == 1:
            return np.tile(W[0], (n, 1))
        seg = self._segment()
        if seg is not None:
            v0, v1 = seg
            t = rng.uniform(0.0, 1.0, size=n)
            return v0 + t[:, None] * (v1 - v0)
        return super().sample(rng, n)


@dataclass(frozen=True, eq=False)
class Intersection(ConvexBody):
    """Intersection of member bodies, with a feasible witness point.

    The witness certifies nonemptiness at construction and seeds iterations.
    """

    space: LpSpace
    bodies: tuple[ConvexBody, ...]
    witness: np.ndarray

    def __post_init__(self):
        if len(self.bodies) < 1:
            raise ValueError("intersection needs at least one body")
        for body in self.bodies:
            if body.space != self.space:
                raise DimensionMismatchError("intersection members live in different spaces")
        w = self.space.check_vector(self.witness)
        for i, body in enumerate(self.bodies):
            if not body.member(w, 1e-7):
                raise ValueError(f"witness is not a member of intersection body {i}")
        object.__setattr__(self, "bodies", tuple(self.bodies))
        object.__setattr__(self, "witness", _readonly(w))

    def project_many(self, X, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        X = _as_matrix(X, self.space.dim)
        if all(isinstance(b, Box) for b in self.bodies):
            lo = np.max([b.lo for b in self.bodies], axis=0)
            hi = np.min([b.hi for b in self.bodies], axis=0)
            return np.clip(X, lo, hi)
        if self.space.p != 2.0:
            raise UnsupportedProjectionError(
                f"general intersection projection only available at p=2, got p={self.space.p}")
        projs = [lambda Y, b=b: b.project_many(Y, tol, max_iter) for b in self.bodies]

        def violation(Y):
            return max(float(np.max(self.space.norms(Y - P(Y), axis=1))) for P in projs)

        return _dykstra(projs, X, violation, tol, max_iter)

    def member(self, x, tol=DEFAULT_TOL):
        return all(b.member(x, tol) for b in self.bodies)

    def bounding_box(self):
        boxes = []
        for b in self.bodies:
            try:
                boxes.append(b.bounding_box())
            except UnboundedBodyError:
                continue
        if not boxes:
            raise UnboundedBodyError("no bounded member to bound the intersection")
        lo = np.max([lo for lo, _ in boxes], axis=0)
        hi = np.min([hi for _, hi in boxes], axis=0)
        return lo, hi

    def anchor(self):
        return np.array(self.witness)


def _dykstra(projectors: list[Callable[[np.ndarray], np.ndarray]],
             X0: np.ndarray, violation: Callable[[np.ndarray], float],
             tol: float, max_iter: int) -> np.ndarray:
    """Dykstra's alternating scheme with per-set increments, batched over rows.

    Stops when one full sweep moves nothing (within tol*1e-3) and the iterate
    is feasible within tol for every member set.
    """
    X = np.array(X0, dtype=float)
    increments = [np.zeros_like(X) for _ in projectors]
    inner_tol = tol * 1e-3
    for sweep in range(max_iter):
        X_prev = X
        for i, proj in enumerate(projectors):
            Y = X + increments[i]
            X = proj(Y)
            increments[i] = Y - X
        disp = float(np.max(np.abs(X - X_prev)))
        if disp < inner_tol and violation(X) <= tol:
            return X
    raise ProjectionConvergenceError(
        f"Dykstra hit the iteration cap ({max_iter}) before tolerance",
        achieved_gap=violation(X), iterations=max_iter)


def _project_polygon_edges(space: LpSpace, edges: list[tuple[np.ndarray, np.ndarray]],
                           X: np.ndarray) -> np.ndarray:
    """Exact p=2 projection onto a 2-D polygon via its hull edges.

    Points inside stay put; for points outside the nearest point lies on the
    boundary, so it is the best of the per-edge segment projections.  Unlike
    halfspace-Dykstra this does not degrade on sliver polygons.
    """
    normals, offsets = zip(*_edges_to_halfspaces(edges))
    normals = np.array(normals)
    offsets = np.array(offsets)
    inside = np.all(X @ normals.T - offsets <= 0.0, axis=1)
    out = np.array(X, dtype=float)
    todo = ~inside
    if not np.any(todo):
        return out
    Y = X[todo]
    best = None
    best_d = None
    for v0, v1 in edges:
        d = v1 - v0
        t = np.clip((Y - v0) @ d / float(d @ d), 0.0, 1.0)
        cand = v0 + t[:, None] * d
        dist = space.norms(Y - cand, axis=1)
        if best is None:
            best, best_d = cand, dist
        else:
            better = dist < best_d
            best[better] = cand[better]
            best_d[better] = dist[better]
    out[todo] = best
    return out


def _dykstra_halfspaces(space: LpSpace, faces: list[tuple[np.ndarray, float]],
                        X: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    normals = np.array([a for a, _ in faces])
    offsets = np.array([b for _, b in faces])
    scales = np.linalg.norm(normals, axis=1)

    def proj_face(i):
        a, b = normals[i], offsets[i]
        aa = float(a @ a)

        def proj(Y):
            excess = np.maximum(0.0, Y @ a - b) / aa
            return Y - excess[:, None] * a
        return proj

    def violation(Y):
        res = np.maximum(0.0, Y @ normals.T - offsets) / scales
        return float(np.max(res))

    return _dykstra([proj_face(i) for i in range(len(faces))], X, violation, tol, max_iter)


def project(body: ConvexBody, x, tol: float = DEFAULT_TOL,
            max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Nearest point of `body` to x in the body's own lp norm."""
    x = body.space.check_vector(x)
    return body.project_many(x[None, :], tol, max_iter)[0]


def project_many(body: ConvexBody, X, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    return body.project_many(X, tol, max_iter)


def contains(body: ConvexBody, x, tol: float = DEFAULT_TOL) -> bool:
    """Projection-based membership: distance to the body at most tol."""
    x = body.space.check_vector(x)
    return body.space.distance(x, project(body, x, tol)) <= tol


@dataclass
class DistanceResult:
    """Distance between two bodies plus the realizing pair found."""

    dist: float
    a: np.ndarray
    b: np.ndarray
    converged: bool
    iterations: int

    def __iter__(self):
        return iter((self.dist, self.a, self.b))


def distance_between(A: ConvexBody, B: ConvexBody, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> DistanceResult:
    """dist(A, B) by alternating projections, with the realizing pair.

    a_{k+1} = proj_A(b_k), b_{k+1} = proj_B(a_{k+1}); stops when consecutive
    a-iterates move less than tol.  On hitting the cap the best pair so far is
    returned with converged=False.
    """
    if A.space != B.space:
        raise DimensionMismatchError("bodies live in different spaces")
    space = A.space
    b = space.check_vector(B.anchor())
    a = project(A, b, tol, max_iter)
    b = project(B, a, tol, max_iter)
    converged = False
    iterations = 1
    for k in range(2, max_iter + 1):
        a_next = project(A, b, tol, max_iter)
        b_next = project(B, a_next, tol, max_iter)
        iterations = k
        moved = space.distance(a_next, a)
        a, b = a_next, b_next
        if moved < tol:
            converged = True
            break
    return DistanceResult(space.distance(a, b), a, b, converged, iterations)


class ProximityInstance:
    """A pair of convex bodies with cached separation data.

    The distance and a realizing pair are computed once at construction;
    proximal membership and proximal sampling are answered against that
    cache.  `tol` is this instance's default tolerance for membership.
    """

    def __init__(self, A: ConvexBody, B: ConvexBody, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER):
        if A.space != B.space:
            raise DimensionMismatchError("bodies live in different spaces")
        self.space = A.space
        self.A = A
        self.B = B
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        res = distance_between(A, B, self.tol, self.max_iter)
        if not res.converged:
            raise ProjectionConvergenceError(
                "alternating projections did not converge while computing dist(A, B)",
                achieved_gap=res.dist, iterations=res.iterations)
        self.dist = res.dist
        self.realizing_pair = (_readonly(res.a), _readonly(res.b))

    def body(self, side: Side) -> ConvexBody:
        if side == "A":
            return self.A
        if side == "B":
            return self.B
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")

    def opposite_body(self, side: Side) -> ConvexBody:
        return self.body("B" if side == "A" else "A")

    def proximal_gaps(self, X: np.ndarray, side: Side) -> np.ndarray:
        """||x - proj_opposite(x)|| - dist for each row; ~0 on the proximal set."""
        X = _as_matrix(X, self.space.dim)
        other = self.opposite_body(side)
        P = other.project_many(X, self.tol, self.max_iter)
        return self.space.norms(X - P, axis=1) - self.dist

    def proximal_membership(self, x, side: Side, slack: float = 1.0) -> bool:
        """True when x lies in the declared side and realizes dist(A, B).

        Raises DomainError when x is not even a member of the declared side.
        The acceptance window is dist + slack*tol.
        """
        x = self.space.check_vector(x)
        body = self.body(side)
        if not contains(body, x, self.tol):
            d = self.space.distance(x, project(body, x, self.tol, self.max_iter))
            raise DomainError(
                f"point is not in side {side} (distance {d:.3e} exceeds tol {self.tol:.1e})")
        gap = float(self.proximal_gaps(x[None, :], side)[0])
        return gap <= slack * self.tol

    def proximalize(self, X: np.ndarray, side: Side,
                    max_sweeps: int = 10_000) -> np.ndarray:
        """Drive points of `side` into its proximal set by alternating projections."""
        body = self.body(side)
        other = self.opposite_body(side)
        X = _as_matrix(X, self.space.dim)
        for _ in range(max_sweeps):
            Y = other.project_many(X, self.tol, self.max_iter)
            X_next = body.project_many(Y, self.tol, self.max_iter)
            moved = float(np.max(self.space.norms(X_next - X, axis=1)))
            X = X_next
            if moved < self.tol:
                return X
        raise ProjectionConvergenceError(
            "proximal refinement did not converge", iterations=max_sweeps)

    def sample_proximal(self, side: Side, n: int, rng: np.random.Generator,
                        max_sweeps: int = 10_000) -> np.ndarray:
        """n points of the proximal part of `side`, via alternating projections.

        Starts spread over the full body and runs the batched alternating
        scheme until the batch stops moving; each limit realizes dist(A, B).
        The realizing pair's point is always included.
        """
        body = self.body(side)
        X = body.sample(rng, max(n - 1, 0))
        own = self.realizing_pair[0 if side == "A" else 1]
        X = np.vstack([own[None, :], X])[:n]
        return self.proximalize(X, side, max_sweeps)


def proximal_membership(instance: ProximityInstance, x, side: Side,
                        slack: float = 1.0) -> bool:
    """Module-level alias for ProximityInstance.proximal_membership."""
    return instance.proximal_membership(x, side, slack)
