"""The proximal projection operator and its certified algebraic properties.

On a pair (A, B) at distance d, points of the proximal sets A0, B0 project
onto the opposite body at exactly distance d.  That projection, restricted
to A0 union B0, is the pivot of the whole package: it swaps the two proximal
sets, realizes the distance everywhere, and is an affine isometric involution
between them.  `verify_projector_properties` checks all of that numerically;
`compose_with_projector` uses it to flip a map's mode while preserving its
contraction behavior, and `check_commutation` measures how far a map is from
commuting with the projector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError, PreconditionError
from .geometry import ProximityInstance, Side, _as_matrix
from .mappings import Mode, certify_relatively_nonexpansive, flip_mode, opposite

PROPERTY_TOL = 1e-8
DOMAIN_SLACK = 10.0
DEGENERATE_SPREAD = 1e-7


@dataclass(frozen=True, eq=False)
class ProximalProjector:
    """Projection onto the opposite body, restricted to the proximal sets.

    Accepts points within `slack` * tol of realizing dist(A, B); everything
    else raises DomainError.  Callable on single points; `project_many`
    handles stacks with a known or row-detected side.
    """

    instance: ProximityInstance
    slack: float = DOMAIN_SLACK

    def _window(self) -> float:
        return self.slack * self.instance.tol

    def _admit(self, X: np.ndarray, side: Side) -> np.ndarray:
        """Domain-check a single-side stack, returning the projected images."""
        inst = self.instance
        body = inst.body(side)
        res = inst.space.norms(X - body.project_many(X, inst.tol, inst.max_iter), axis=1)
        i = int(np.argmax(res))
        if res[i] > self._window():
            raise DomainError(
                f"point {X[i].tolist()} is not in side {side} "
                f"(residual {res[i]:.3e} exceeds window {self._window():.1e})")
        other = inst.opposite_body(side)
        images = other.project_many(X, inst.tol, inst.max_iter)
        gaps = inst.space.norms(X - images, axis=1) - inst.dist
        j = int(np.argmax(gaps))
        if gaps[j] > self._window():
            raise DomainError(
                f"point {X[j].tolist()} is in side {side} but does not realize "
                f"dist(A, B): achieved {inst.dist + gaps[j]:.12g} vs dist {inst.dist:.12g}")
        return images

    def sides_of(self, X: np.ndarray) -> np.ndarray:
        """Boolean mask: True where the row belongs to side A (nearest body)."""
        inst = self.instance
        X = _as_matrix(X, inst.space.dim)
        res_a = inst.space.norms(
            X - inst.A.project_many(X, inst.tol, inst.max_iter), axis=1)
        res_b = inst.space.norms(
            X - inst.B.project_many(X, inst.tol, inst.max_iter), axis=1)
        nearest = np.minimum(res_a, res_b)
        i = int(np.argmax(nearest))
        if nearest[i] > self._window():
            raise DomainError(
                f"point {X[i].tolist()} is in neither body "
                f"(best residual {nearest[i]:.3e})")
        return res_a <= res_b

    def project_many(self, X: np.ndarray, side: Side | None = None) -> np.ndarray:
        X = _as_matrix(X, self.instance.space.dim)
        if side is not None:
            return self._admit(X, side)
        in_a = self.sides_of(X)
        out = np.empty_like(X)
        if np.any(in_a):
            out[in_a] = self._admit(X[in_a], "A")
        if np.any(~in_a):
            out[~in_a] = self._admit(X[~in_a], "B")
        return out

    def project(self, x, side: Side | None = None) -> np.ndarray:
        x = self.instance.space.check_vector(x)
        return self.project_many(x[None, :], side)[0]

    def __call__(self, x) -> np.ndarray:
        return self.project(x)


def proximal_project(projector: ProximalProjector, x) -> np.ndarray:
    """Image of x under the proximal projection operator."""
    return projector.project(x)


@dataclass
class PropertyCheck:
    holds: bool
    worst_deviation: float
    witness: Any = None
    note: str = ""

    def to_dict(self) -> dict:
        witness = self.witness
        if witness is not None:
            witness = [np.asarray(w).tolist() for w in witness]
        out = {"holds": bool(self.holds),
               "worst_deviation": float(self.worst_deviation),
               "witness": witness}
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class ProjectorReport:
    """Five property checks of the projector, plus degeneracy information."""

    cyclic_distance: PropertyCheck
    isometry: PropertyCheck
    affine: PropertyCheck
    involution: PropertyCheck
    continuity: PropertyCheck
    degenerate: bool
    samples: int
    tol: float = PROPERTY_TOL

    def checks(self) -> dict[str, PropertyCheck]:
        return {"cyclic_distance": self.cyclic_distance,
                "isometry": self.isometry,
                "affine": self.affine,
                "involution": self.involution,
                "continuity": self.continuity}

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks().values())

    def __bool__(self) -> bool:
        return self.all_hold

    def to_dict(self) -> dict:
        out = {name: check.to_dict() for name, check in self.checks().items()}
        out["degenerate"] = bool(self.degenerate)
        out["samples"] = int(self.samples)
        out["tol"] = float(self.tol)
        return out


def _check(devs: np.ndarray, witnesses, tol: float, note: str = "") -> PropertyCheck:
    i = int(np.argmax(devs))
    worst = float(devs[i])
    holds = worst <= tol
    witness = None if holds else tuple(w[i] for w in witnesses)
    return PropertyCheck(holds=holds, worst_deviation=worst, witness=witness, note=note)


def verify_projector_properties(projector: ProximalProjector, samples: int = 1000,
                                seed: int = 0, tol: float = PROPERTY_TOL
                                ) -> ProjectorReport:
    """Numerically certify the five defining properties of the projector.

    1. cyclic_distance: images land in the opposite proximal set and realize
       dist(A, B);
    2. isometry: cross-pair distances are preserved;
    3. affine: images of proximal segments' midcombinations match the
       combinations of the images;
    4. involution: applying the operator twice returns the start;
    5. continuity: probed as nonexpansiveness on nearby pairs (already forced
       by the isometry property; reported for completeness).

    Singleton proximal sets make several checks vacuous; the report flags
    that via `degenerate` instead of failing.
    """
    inst = projector.instance
    rng = np.random.default_rng(seed)
    xs = inst.sample_proximal("A", samples, rng)
    ys = inst.sample_proximal("B", samples, rng)
    spread = max(float(inst.space.norms(np.ptp(xs, axis=0))),
                 float(inst.space.norms(np.ptp(ys, axis=0))))
    degenerate = spread < DEGENERATE_SPREAD

    p_xs = projector.project_many(xs, "A")
    p_ys = projector.project_many(ys, "B")

    # 1: cyclicity and distance realization, both sides at once
    def landing_devs(points, images, target: Side):
        body = inst.body(target)
        res = inst.space.norms(
            images - body.project_many(images, inst.tol, inst.max_iter), axis=1)
        gap = np.abs(inst.proximal_gaps(images, target))
        realize = np.abs(inst.space.norms(points - images, axis=1) - inst.dist)
        return np.maximum(res, np.maximum(gap, realize))

    dev1 = np.concatenate([landing_devs(xs, p_xs, "B"), landing_devs(ys, p_ys, "A")])
    check1 = _check(dev1, (np.vstack([xs, ys]), np.vstack([p_xs, p_ys])), tol)

    # 2: isometry over randomly matched cross pairs
    j = rng.integers(0, len(ys), size=len(xs))
    before = inst.space.norms(xs - ys[j], axis=1)
    after = inst.space.norms(p_xs - p_ys[j], axis=1)
    check2 = _check(np.abs(after - before), (xs, ys[j]), tol)

    # 3: affineness on random proximal combinations, both sides
    def affine_devs(points, images, side: Side):
        k = rng.integers(0, len(points), size=len(points))
        lam = rng.uniform(0.0, 1.0, size=len(points))[:, None]
        z = lam * points + (1.0 - lam) * points[k]
        p_z = projector.project_many(z, side)
        combo = lam * images + (1.0 - lam) * images[k]
        return inst.space.norms(p_z - combo, axis=1), z

    dev3a, za = affine_devs(xs, p_xs, "A")
    dev3b, zb = affine_devs(ys, p_ys, "B")
    check3 = _check(np.concatenate([dev3a, dev3b]),
                    (np.vstack([za, zb]),), tol)

    # 4: involution
    back_x = projector.project_many(p_xs, "B")
    back_y = projector.project_many(p_ys, "A")
    dev4 = np.concatenate([inst.space.norms(back_x - xs, axis=1),
                           inst.space.norms(back_y - ys, axis=1)])
    check4 = _check(dev4, (np.vstack([xs, ys]), np.vstack([back_x, back_y])), tol)

    # 5: continuity probe on jittered nearby pairs
    scale = max(spread, 1.0)
    jitter = rng.normal(size=xs.shape) * (1e-3 * scale)
    xs2 = inst.proximalize(inst.A.project_many(xs + jitter, inst.tol, inst.max_iter), "A")
    p_xs2 = projector.project_many(xs2, "A")
    moved_in = inst.space.norms(xs - xs2, axis=1)
    moved_out = inst.space.norms(p_xs - p_xs2, axis=1)
    dev5 = np.maximum(0.0, moved_out - moved_in)
    check5 = _check(dev5, (xs, xs2), tol,
                    note="nonexpansiveness on nearby pairs; implied by isometry")

    return ProjectorReport(cyclic_distance=check1, isometry=check2, affine=check3,
                           involution=check4, continuity=check5,
                           degenerate=degenerate, samples=samples, tol=tol)


@dataclass(frozen=True, eq=False)
class ComposedMap:
    """outer applied after the proximal projection; flips the outer's mode.

    Lives on the proximal sets only (domain 'proximal'): iterating it only
    makes sense from points that realize dist(A, B).
    """

    outer: Any
    projector: ProximalProjector
    mode: Mode
    name: str = ""

    domain = "proximal"

    @property
    def instance(self) -> ProximityInstance:
        return self.outer.instance

    @property
    def is_affine(self) -> bool:
        return False

    def apply(self, x) -> np.ndarray:
        return self.outer.apply(self.projector.project(x))

    def apply_many(self, X: np.ndarray) -> np.ndarray:
        return self.outer.apply_many(self.projector.project_many(X))


def compose_with_projector(outer, projector: ProximalProjector | None = None,
                           samples: int = 200, seed: int = 0) -> ComposedMap:
    """Build the map x -> outer(P(x)) after checking it is legitimate.

    Requires outer to be relatively nonexpansive and to preserve the proximal
    sets (sampled); the result's mode is the opposite of outer's.
    """
    inst = outer.instance
    if projector is None:
        projector = ProximalProjector(inst)
    if projector.instance is not inst:
        raise PreconditionError("projector and map belong to different instances")

    nonexp = certify_relatively_nonexpansive(outer, samples=samples, seed=seed)
    if not nonexp:
        raise PreconditionError(
            "map is not relatively nonexpansive "
            f"(worst excess {nonexp.worst_excess:.3e} at {nonexp.witness})")

    rng = np.random.default_rng(seed)
    window = projector.slack * inst.tol
    for side in ("A", "B"):
        pts = inst.sample_proximal(side, samples, rng)
        imgs = outer.apply_many(pts)
        target: Side = side if outer.mode == "noncyclic" else opposite(side)
        body = inst.body(target)
        res = inst.space.norms(
            imgs - body.project_many(imgs, inst.tol, inst.max_iter), axis=1)
        gaps = np.maximum(0.0, inst.proximal_gaps(imgs, target))
        devs = np.maximum(res, gaps)
        i = int(np.argmax(devs))
        if devs[i] > window:
            raise PreconditionError(
                f"map does not preserve the proximal sets: point {pts[i].tolist()} "
                f"maps {devs[i]:.3e} away from the proximal part of side {target}")

    mode: Mode = flip_mode(outer.mode)
    name = f"{outer.name or 'map'}*P"
    return ComposedMap(outer=outer, projector=projector, mode=mode, name=name)


@dataclass
class CommutationReport:
    """Worst deviation of map(P(x)) from P(map(x)) over sampled proximal points."""

    max_deviation: float
    witness: tuple[np.ndarray, np.ndarray, np.ndarray] | None
    samples: int

    def __float__(self) -> float:
        return float(self.max_deviation)


def check_commutation(m, projector: ProximalProjector | None = None,
                      samples: int = 1000, seed: int = 0) -> CommutationReport:
    """Measure max ||T(Px) - P(Tx)|| over proximal samples of both sides."""
    inst = m.instance
    if projector is None:
        projector = ProximalProjector(inst)
    rng = np.random.default_rng(seed)
    worst = 0.0
    witness = None
    for side in ("A", "B"):
        pts = inst.sample_proximal(side, samples, rng)
        t_p = m.apply_many(projector.project_many(pts, side))
        try:
            p_t = projector.project_many(m.apply_many(pts))
        except DomainError:
            # the map threw an iterate off the proximal sets entirely
            return CommutationReport(max_deviation=math.inf,
                                     witness=(pts[0], t_p[0], np.full_like(pts[0], np.nan)),
                                     samples=2 * samples)
        devs = inst.space.norms(t_p - p_t, axis=1)
        i = int(np.argmax(devs))
        if devs[i] >= worst:
            worst = float(devs[i])
            witness = (pts[i], t_p[i], p_t[i])
    return CommutationReport(max_deviation=worst, witness=witness, samples=2 * samples)
