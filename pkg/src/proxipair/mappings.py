"""Cyclic and noncyclic maps on a body pair, with numeric certification.

A map is cyclic when it swaps the two bodies (T(A) in B, T(B) in A) and
noncyclic when each body is invariant.  Certification routines sample (or,
for affine maps on vertex-enumerable bodies, enumerate exactly) to check the
declared mode, relative nonexpansiveness, and the contraction modulus

    d(Tx, Ty) <= alpha * d(x, y) + (1 - alpha) * dist(A, B)

over cross pairs, reporting the smallest alpha consistent with the samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .errors import DimensionMismatchError
from .geometry import (
    Box,
    ConvexBody,
    Polytope,
    ProximityInstance,
    Side,
)

Mode = Literal["cyclic", "noncyclic"]

MODES = ("cyclic", "noncyclic")

DEFAULT_MODE_SAMPLES = 1000
DEFAULT_CONTRACTION_SAMPLES = 10_000
GRID_BUDGET = 1024
REFINE_ROUNDS = 3


def opposite(side: Side) -> Side:
    return "B" if side == "A" else "A"


def flip_mode(mode: Mode) -> Mode:
    return "noncyclic" if mode == "cyclic" else "cyclic"


@dataclass(frozen=True, eq=False)
class MapSpec:
    """A self-map of A union B, either affine (matrix, offset) or a callable.

    `mode` is the declared behavior; use certify_mode to check it.  Affine
    maps evaluate as x @ matrix.T + offset and vectorize over stacks.
    """

    instance: ProximityInstance
    mode: Mode
    name: str = ""
    matrix: np.ndarray | None = None
    offset: np.ndarray | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None

    domain = "full"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        has_affine = self.matrix is not None
        if has_affine == (self.func is not None):
            raise ValueError("exactly one of (matrix, offset) or func is required")
        if has_affine:
            dim = self.instance.space.dim
            M = np.asarray(self.matrix, dtype=float)
            if M.shape != (dim, dim):
                raise DimensionMismatchError(
                    f"matrix must be ({dim}, {dim}), got {M.shape}")
            b = self.instance.space.check_vector(
                np.zeros(dim) if self.offset is None else self.offset)
            M.setflags(write=False)
            b.setflags(write=False)
            object.__setattr__(self, "matrix", M)
            object.__setattr__(self, "offset", b)

    @classmethod
    def affine(cls, instance: ProximityInstance, mode: Mode, matrix, offset=None,
               name: str = "") -> "MapSpec":
        return cls(instance, mode, name=name, matrix=np.asarray(matrix, dtype=float),
                   offset=offset)

    @classmethod
    def blackbox(cls, instance: ProximityInstance, mode: Mode,
                 func: Callable[[np.ndarray], np.ndarray], name: str = "") -> "MapSpec":
        return cls(instance, mode, name=name, func=func)

    @property
    def is_affine(self) -> bool:
        return self.matrix is not None

    def apply(self, x) -> np.ndarray:
        x = self.instance.space.check_vector(x)
        if self.is_affine:
            return self.matrix @ x + self.offset
        out = self.instance.space.check_vector(self.func(x))
        return out

    def apply_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.is_affine:
            return X @ self.matrix.T + self.offset
        return np.array([self.apply(x) for x in X])


def apply(m, x) -> np.ndarray:
    """Evaluate the map at a point."""
    return m.apply(x)


def _vertex_set(body: ConvexBody) -> np.ndarray | None:
    """Enumerable extreme points, when the body has them (box / polytope)."""
    if isinstance(body, Box):
        return body.corners()
    if isinstance(body, Polytope):
        return np.array(body.distinct_vertices)
    return None


def _sample_domain(m, side: Side, n: int, rng: np.random.Generator) -> np.ndarray:
    inst = m.instance
    if getattr(m, "domain", "full") == "proximal":
        return inst.sample_proximal(side, n, rng)
    return inst.body(side).sample(rng, n)


def _target_deviations(m, side: Side, images: np.ndarray) -> np.ndarray:
    """How far each image is from where the declared mode says it must land."""
    inst = m.instance
    target: Side = opposite(side) if m.mode == "cyclic" else side
    body = inst.body(target)
    proj = body.project_many(images, inst.tol, inst.max_iter)
    dev = inst.space.norms(images - proj, axis=1)
    if getattr(m, "domain", "full") == "proximal":
        gaps = np.maximum(0.0, inst.proximal_gaps(images, target))
        dev = np.maximum(dev, gaps)
    return dev


@dataclass
class ModeCheck:
    """Outcome of mode certification, with a violating point when it fails."""

    ok: bool
    mode: Mode
    exact: bool
    worst_deviation: float
    witness: tuple[np.ndarray, np.ndarray] | None = None

    def __bool__(self) -> bool:
        return self.ok


def certify_mode(m, samples: int = DEFAULT_MODE_SAMPLES, seed: int = 0,
                 tol: float | None = None) -> ModeCheck:
    """Check the declared mode on both sides.

    Affine maps on vertex-enumerable bodies are checked exactly through
    vertex images (the image of a hull is the hull of the images, and a hull
    lies in a convex target iff its vertices do); everything else is sampled.
    """
    inst = m.instance
    tol = 10.0 * inst.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    exact = True
    worst = 0.0
    witness = None
    for side in ("A", "B"):
        pts = None
        if m.is_affine and getattr(m, "domain", "full") == "full":
            pts = _vertex_set(inst.body(side))
        if pts is None:
            pts = _sample_domain(m, side, samples, rng)
            exact = False
        imgs = m.apply_many(pts)
        devs = _target_deviations(m, side, imgs)
        i = int(np.argmax(devs))
        if devs[i] > worst:
            worst = float(devs[i])
            witness = (pts[i], imgs[i])
    ok = worst <= tol
    return ModeCheck(ok=ok, mode=m.mode, exact=exact, worst_deviation=worst,
                     witness=None if ok else witness)


@dataclass
class NonexpansiveCheck:
    """Relative nonexpansiveness on sampled cross pairs."""

    ok: bool
    worst_excess: float
    witness: tuple[np.ndarray, np.ndarray] | None = None

    def __bool__(self) -> bool:
        return self.ok


def _cross_pairs(m, samples: int, rng: np.random.Generator
                 ) -> tuple[np.ndarray, np.ndarray]:
    xs = _sample_domain(m, "A", samples, rng)
    ys = _sample_domain(m, "B", samples, rng)
    if m.is_affine and getattr(m, "domain", "full") == "full":
        vx = _vertex_set(m.instance.A)
        vy = _vertex_set(m.instance.B)
        if vx is not None and vy is not None and len(vx) * len(vy) <= 4096:
            gx, gy = np.broadcast_arrays(vx[:, None, :], vy[None, :, :])
            xs = np.vstack([xs, gx.reshape(-1, xs.shape[1])])
            ys = np.vstack([ys, gy.reshape(-1, ys.shape[1])])
    return xs, ys


def certify_relatively_nonexpansive(m, samples: int = DEFAULT_MODE_SAMPLES,
                                    seed: int = 0,
                                    tol: float | None = None) -> NonexpansiveCheck:
    """d(Tx, Ty) <= d(x, y) over sampled cross pairs (plus vertex pairs)."""
    inst = m.instance
    tol = inst.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    xs, ys = _cross_pairs(m, samples, rng)
    before = inst.space.norms(xs - ys, axis=1)
    after = inst.space.norms(m.apply_many(xs) - m.apply_many(ys), axis=1)
    excess = after - before
    i = int(np.argmax(excess))
    worst = float(excess[i])
    ok = worst <= tol
    return NonexpansiveCheck(ok=ok, worst_excess=worst,
                             witness=None if ok else (xs[i], ys[i]))


@dataclass
class ContractionCertificate:
    """Smallest contraction modulus consistent with the evaluated cross pairs.

    exact is True only on the affine + grid-able path (dense cross-pair grid
    refined around the worst pair); degenerate flags instances where every
    cross pair already realizes dist(A, B), so no ratio is defined.
    """

    alpha_hat: float
    samples: int
    exact: bool
    degenerate: bool
    worst_pair: tuple[np.ndarray, np.ndarray] | None

    def __bool__(self) -> bool:
        return bool(self.alpha_hat < 1.0)


def _grid_points(body: ConvexBody, center: np.ndarray | None,
                 half: np.ndarray | None) -> np.ndarray | None:
    """Regular grid over the body (or a window of it); None when not grid-able."""
    if isinstance(body, Box):
        lo, hi = body.lo, body.hi
    elif isinstance(body, Polytope):
        W = body.distinct_vertices
        if len(W) == 1:
            return np.array(W)
        if len(W) == 2 and np.count_nonzero(W[1] - W[0]) == 1:
            lo, hi = np.minimum(W[0], W[1]), np.maximum(W[0], W[1])
        else:
            return None
    else:
        return None
    if center is not None:
        lo = np.maximum(lo, center - half)
        hi = np.minimum(hi, center + half)
    dim = len(lo)
    free = np.nonzero(hi > lo)[0]
    if len(free) == 0:
        return lo[None, :]
    k = max(2, min(41, int(round(GRID_BUDGET ** (1.0 / len(free))))))
    axes = [np.linspace(lo[i], hi[i], k) if i in free else np.array([lo[i]])
            for i in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def _pairwise_alpha(m, xs: np.ndarray, ys: np.ndarray, dist: float, tol: float,
                    chunk: int = 256):
    """Max contraction ratio over the full cross product of xs and ys."""
    inst = m.instance
    t_ys = m.apply_many(ys)
    best = -np.inf
    best_pair = None
    for start in range(0, len(xs), chunk):
        x_blk = xs[start:start + chunk]
        tx_blk = m.apply_many(x_blk)
        before = inst.space.norms(x_blk[:, None, :] - ys[None, :, :], axis=2)
        after = inst.space.norms(tx_blk[:, None, :] - t_ys[None, :, :], axis=2)
        num = after - dist
        den = before - dist
        valid = den > tol
        if not np.any(valid):
            continue
        ratios = np.where(valid, num / np.where(valid, den, 1.0), -np.inf)
        i, j = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
        if ratios[i, j] > best:
            best = float(ratios[i, j])
            best_pair = (x_blk[i], ys[j])
    return best, best_pair


def certify_contraction(m, samples: int = DEFAULT_CONTRACTION_SAMPLES, seed: int = 0,
                        tol: float | None = None) -> ContractionCertificate:
    """Estimate the contraction modulus over cross pairs.

    Sampled pairs always contribute; affine maps on boxes / segments also get
    a dense cross-pair grid with local refinement around the worst pair,
    which marks the certificate exact.
    """
    inst = m.instance
    tol = inst.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    dist = inst.dist

    xs, ys = _cross_pairs(m, samples, rng)
    before = inst.space.norms(xs - ys, axis=1)
    after = inst.space.norms(m.apply_many(xs) - m.apply_many(ys), axis=1)
    valid = before - dist > tol
    evaluated = int(len(xs))
    alpha = 0.0
    worst_pair = None
    if np.any(valid):
        ratios = (after[valid] - dist) / (before[valid] - dist)
        i = int(np.argmax(ratios))
        alpha = float(ratios[i])
        idx = np.nonzero(valid)[0][i]
        worst_pair = (xs[idx], ys[idx])

    exact = False
    if m.is_affine and getattr(m, "domain", "full") == "full":
        gx = _grid_points(inst.A, None, None)
        gy = _grid_points(inst.B, None, None)
        if gx is not None and gy is not None:
            exact = True
            extent_x = np.ptp(gx, axis=0)
            extent_y = np.ptp(gy, axis=0)
            a, pair = _pairwise_alpha(m, gx, gy, dist, tol)
            if pair is not None and a > alpha:
                alpha, worst_pair = a, pair
            evaluated += len(gx) * len(gy)
            for r in range(1, REFINE_ROUNDS + 1):
                if worst_pair is None:
                    break
                shrink = 8.0 ** (-r)
                gx = _grid_points(inst.A, worst_pair[0], extent_x * shrink)
                gy = _grid_points(inst.B, worst_pair[1], extent_y * shrink)
                a, pair = _pairwise_alpha(m, gx, gy, dist, tol)
                if pair is not None and a > alpha:
                    alpha, worst_pair = a, pair
                evaluated += len(gx) * len(gy)

    degenerate = worst_pair is None
    return ContractionCertificate(alpha_hat=max(alpha, 0.0), samples=evaluated,
                                  exact=exact, degenerate=degenerate,
                                  worst_pair=worst_pair)
