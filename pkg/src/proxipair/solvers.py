"""Iteration schemes returning best proximity points and pairs.

Two direct solvers (Picard iteration for cyclic contractions, map-then-
project iteration for noncyclic ones) and two reductions that route one kind
of problem through the other by composing with the proximal projector.  All
solvers certify their preconditions, record a full trace with the gap
d(x_n, companion_n) - dist(A, B), and flag non-convergence instead of
raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Literal

import numpy as np

from .errors import DomainError, PreconditionError
from .geometry import ProximityInstance, Side, contains
from .mappings import ContractionCertificate, certify_contraction, certify_mode
from .operators import ProximalProjector, compose_with_projector

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000
IDENTITY_TERMS = 20

Kind = Literal["best_proximity_point", "best_proximity_pair"]


@dataclass
class TraceStep:
    index: int
    side: Side
    point: np.ndarray
    companion: np.ndarray
    gap: float


@dataclass
class IterationTrace:
    """Per-iteration record of a solver run."""

    steps: list[TraceStep]
    converged: bool
    iterations_used: int
    dist: float
    predicted_iterations: int | None = None

    def gaps(self) -> np.ndarray:
        return np.array([s.gap for s in self.steps])

    def write_csv(self, handle: IO[str]) -> None:
        dim = len(self.steps[0].point)
        cols = ["index", "side"]
        cols += [f"x{i}" for i in range(dim)]
        cols += [f"y{i}" for i in range(dim)]
        cols.append("gap")
        handle.write(",".join(cols) + "\n")
        for s in self.steps:
            row = [str(s.index), s.side]
            row += [repr(float(v)) for v in s.point]
            row += [repr(float(v)) for v in s.companion]
            row.append(repr(float(s.gap)))
            handle.write(",".join(row) + "\n")


@dataclass
class SolveResult:
    """Outcome of a solver run; `summary()` is the JSON-ready view."""

    kind: Kind
    residual: float
    converged: bool
    trace: IterationTrace
    alpha_hat: float
    map_name: str = ""
    x_star: np.ndarray | None = None
    pair: tuple[np.ndarray, np.ndarray] | None = None
    identity_deviation: float | None = None
    odd_membership_deviation: float | None = None

    def __bool__(self) -> bool:
        return self.converged

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "map": self.map_name,
            "converged": bool(self.converged),
            "iterations": int(self.trace.iterations_used),
            "predicted_iterations": self.trace.predicted_iterations,
            "residual": float(self.residual),
            "alpha_hat": float(self.alpha_hat),
            "dist": float(self.trace.dist),
            "final_gap": float(self.trace.steps[-1].gap),
        }
        if self.x_star is not None:
            out["x_star"] = [float(v) for v in self.x_star]
        if self.pair is not None:
            out["pair"] = [[float(v) for v in p] for p in self.pair]
        if self.identity_deviation is not None:
            out["identity_deviation"] = float(self.identity_deviation)
        if self.odd_membership_deviation is not None:
            out["odd_membership_deviation"] = float(self.odd_membership_deviation)
        return out


def _require_contraction(m, expected_mode: str, certificate, seed: int
                         ) -> ContractionCertificate:
    if m.mode != expected_mode:
        raise PreconditionError(
            f"solver needs a {expected_mode} map, got mode {m.mode!r}")
    mode_check = certify_mode(m, seed=seed)
    if not mode_check:
        raise PreconditionError(
            f"map failed {expected_mode} mode certification "
            f"(worst deviation {mode_check.worst_deviation:.3e})")
    cert = certificate if certificate is not None else certify_contraction(m, seed=seed)
    if not cert.alpha_hat < 1.0:
        raise PreconditionError(
            f"map is not a contraction on cross pairs (alpha_hat={cert.alpha_hat})")
    return cert


def _require_start_in_A(m, x0) -> np.ndarray:
    inst = m.instance
    x0 = inst.space.check_vector(x0)
    if getattr(m, "domain", "full") == "proximal":
        return _require_proximal_start(inst, x0)
    if not contains(inst.A, x0, inst.tol):
        raise PreconditionError(f"start {x0.tolist()} is not a point of A")
    return x0


def _require_proximal_start(inst: ProximityInstance, x0) -> np.ndarray:
    x0 = inst.space.check_vector(x0)
    try:
        ok = inst.proximal_membership(x0, "A")
    except DomainError as exc:
        raise PreconditionError(str(exc)) from exc
    if not ok:
        raise PreconditionError(
            f"start {x0.tolist()} does not realize dist(A, B); "
            "the projection iteration needs a proximal start and never "
            "projects the start implicitly")
    return x0


def _predict_iterations(gap0: float, alpha: float, tol: float) -> int | None:
    if gap0 <= tol:
        return 0
    if alpha <= 0.0:
        return 1
    if alpha >= 1.0:
        return None
    return int(math.ceil(math.log(tol / gap0) / math.log(alpha)))


def picard_cyclic(m, x0, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                  certificate: ContractionCertificate | None = None,
                  seed: int = 0) -> SolveResult:
    """Iterate x_{n+1} = T(x_n) for a certified cyclic contraction.

    Stops when an even iterate repeats within tol and the running gap has
    closed; the limit of the even subsequence is the best proximity point.
    Hitting max_iter returns the best even iterate with converged=False.
    """
    inst = m.instance
    cert = _require_contraction(m, "cyclic", certificate, seed)
    x = _require_start_in_A(m, x0)
    space = inst.space

    steps: list[TraceStep] = []
    prev_even = None
    x_star = None
    converged = False
    n = 0
    while True:
        x_next = m.apply(x)
        gap = space.distance(x, x_next) - inst.dist
        steps.append(TraceStep(n, "A" if n % 2 == 0 else "B", x, x_next, gap))
        if n % 2 == 0:
            if (prev_even is not None and space.distance(x, prev_even) < tol
                    and abs(gap) < tol):
                x_star = x
                converged = True
                break
            prev_even = x
        if n >= max_iter:
            break
        x = x_next
        n += 1
    if x_star is None:
        x_star = prev_even
    residual = abs(space.distance(x_star, m.apply(x_star)) - inst.dist)
    trace = IterationTrace(steps=steps, converged=converged, iterations_used=n,
                           dist=inst.dist,
                           predicted_iterations=_predict_iterations(
                               steps[0].gap, cert.alpha_hat, tol))
    return SolveResult(kind="best_proximity_point", residual=residual,
                       converged=converged, trace=trace, alpha_hat=cert.alpha_hat,
                       map_name=getattr(m, "name", ""), x_star=x_star)


def noncyclic_projection_iteration(m, x0, tol: float = DEFAULT_TOL,
                                   max_iter: int = DEFAULT_MAX_ITER,
                                   certificate: ContractionCertificate | None = None,
                                   seed: int = 0,
                                   projector: ProximalProjector | None = None
                                   ) -> SolveResult:
    """Iterate x_n = T^n(x0) in A0 with companions y_n = P(x_n) in B0.

    The start must already realize dist(A, B); it is never projected
    implicitly.  (x_n, y_n) converges to a best proximity pair when T is a
    certified noncyclic contraction.
    """
    inst = m.instance
    cert = _require_contraction(m, "noncyclic", certificate, seed)
    x = _require_proximal_start(inst, x0)
    if projector is None:
        projector = ProximalProjector(inst)
    space = inst.space

    y = projector.project(x, "A")
    steps = [TraceStep(0, "A", x, y, space.distance(x, y) - inst.dist)]
    converged = False
    n = 0
    while n < max_iter:
        n += 1
        x_next = m.apply(x)
        y_next = projector.project(x_next, "A")
        steps.append(TraceStep(n, "A", x_next, y_next,
                               space.distance(x_next, y_next) - inst.dist))
        moved = space.distance(x_next, x)
        x, y = x_next, y_next
        if moved < tol:
            converged = True
            break
    residual = max(space.distance(x, m.apply(x)),
                   space.distance(y, m.apply(y)),
                   abs(space.distance(x, y) - inst.dist))
    trace = IterationTrace(steps=steps, converged=converged, iterations_used=n,
                           dist=inst.dist,
                           predicted_iterations=_predict_iterations(
                               space.distance(steps[0].point, m.apply(steps[0].point)),
                               cert.alpha_hat, tol))
    return SolveResult(kind="best_proximity_pair", residual=residual,
                       converged=converged, trace=trace, alpha_hat=cert.alpha_hat,
                       map_name=getattr(m, "name", ""), pair=(x, y))


def _orbit(m, x0: np.ndarray, count: int) -> list[np.ndarray]:
    pts = [np.asarray(x0, dtype=float)]
    for _ in range(count):
        pts.append(m.apply(pts[-1]))
    return pts


def _even_identity_deviation(composed, outer, x0: np.ndarray, terms: int,
                             space) -> float:
    k = 2 * terms
    orb_c = _orbit(composed, x0, k)
    orb_o = _orbit(outer, x0, k)
    devs = [space.distance(orb_c[2 * n], orb_o[2 * n]) for n in range(1, terms + 1)]
    return float(max(devs))


def solve_cyclic_via_reduction(m, x0, tol: float = DEFAULT_TOL,
                               max_iter: int = DEFAULT_MAX_ITER,
                               certificate: ContractionCertificate | None = None,
                               seed: int = 0,
                               identity_terms: int = IDENTITY_TERMS) -> SolveResult:
    """Solve a cyclic contraction by running the noncyclic solver on m after P.

    The composition is noncyclic; the A-side of its best proximity pair is
    the best proximity point of m.  Records the deviation of the even-orbit
    identity (composition iterated 2n times vs m iterated 2n times).
    """
    inst = m.instance
    _require_contraction(m, "cyclic", certificate, seed)
    x0 = _require_proximal_start(inst, x0)
    projector = ProximalProjector(inst)
    composed = compose_with_projector(m, projector, seed=seed)
    inner = noncyclic_projection_iteration(composed, x0, tol=tol, max_iter=max_iter,
                                           seed=seed, projector=projector)
    p = inner.pair[0]
    residual = abs(inst.space.distance(p, m.apply(p)) - inst.dist)
    identity = _even_identity_deviation(composed, m, x0, identity_terms, inst.space)
    return SolveResult(kind="best_proximity_point", residual=residual,
                       converged=inner.converged, trace=inner.trace,
                       alpha_hat=inner.alpha_hat, map_name=getattr(m, "name", ""),
                       x_star=p, identity_deviation=identity)


def solve_noncyclic_via_reduction(m, x0, tol: float = DEFAULT_TOL,
                                  max_iter: int = DEFAULT_MAX_ITER,
                                  certificate: ContractionCertificate | None = None,
                                  seed: int = 0,
                                  identity_terms: int = IDENTITY_TERMS) -> SolveResult:
    """Solve a noncyclic contraction by running Picard on m after P.

    The composition is cyclic, so its even Picard iterates converge to a
    point p of A0; (p, P(p)) is the best proximity pair of m.  Records the
    even-orbit identity deviation and how far the odd iterates of the
    composition stray from the proximal part of B.
    """
    inst = m.instance
    _require_contraction(m, "noncyclic", certificate, seed)
    x0 = _require_proximal_start(inst, x0)
    projector = ProximalProjector(inst)
    composed = compose_with_projector(m, projector, seed=seed)
    inner = picard_cyclic(composed, x0, tol=tol, max_iter=max_iter, seed=seed)
    p = inner.x_star
    q = projector.project(p, "A")
    space = inst.space
    residual = max(space.distance(p, m.apply(p)),
                   space.distance(q, m.apply(q)),
                   abs(space.distance(p, q) - inst.dist))
    identity = _even_identity_deviation(composed, m, x0, identity_terms, space)
    orb = _orbit(composed, x0, 2 * identity_terms + 1)
    odd = np.array([orb[2 * n + 1] for n in range(identity_terms + 1)])
    body_res = space.norms(odd - inst.B.project_many(odd, inst.tol, inst.max_iter),
                           axis=1)
    gaps = np.abs(inst.proximal_gaps(odd, "B"))
    odd_dev = float(np.max(np.maximum(body_res, gaps)))
    return SolveResult(kind="best_proximity_pair", residual=residual,
                       converged=inner.converged, trace=inner.trace,
                       alpha_hat=inner.alpha_hat, map_name=getattr(m, "name", ""),
                       pair=(p, q), identity_deviation=identity,
                       odd_membership_deviation=odd_dev)
