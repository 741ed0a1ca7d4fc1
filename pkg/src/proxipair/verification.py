"""Instance-level verification: every structural claim checked numerically.

Given a built instance this runs the projector property suite, commutation
and mode-flip checks for the declared maps, executes the declared solver
runs, and validates the orbit identities the reductions rely on.  Each
check reports its worst observed deviation against an explicit threshold;
the report is JSON-ready for the command line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ProxipairError
from .instances import BuiltInstance
from .mappings import certify_contraction, certify_mode, flip_mode
from .operators import (
    ProximalProjector,
    check_commutation,
    compose_with_projector,
    verify_projector_properties,
)

PROPERTY_THRESHOLD = 1e-8
COMMUTATION_THRESHOLD = 1e-8
IDENTITY_THRESHOLD = 1e-9
ODD_MEMBERSHIP_THRESHOLD = 1e-8
UNIQUENESS_THRESHOLD = 1e-6
UNIQUENESS_STARTS = 5
GAP_DECAY_SLACK = 1e-9

PROJECTOR_TAGS = {
    "cyclic_distance": "projection-realizes-distance",
    "isometry": "projection-preserves-distances",
    "affine": "projection-affine-on-chords",
    "involution": "projection-is-involutive",
    "continuity": "projection-continuous",
}


@dataclass
class CheckResult:
    name: str
    tag: str
    passed: bool
    worst_deviation: float
    threshold: float
    flags: list = field(default_factory=list)
    details: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "tag": self.tag,
            "passed": bool(self.passed),
            "worst_deviation": float(self.worst_deviation),
            "threshold": float(self.threshold),
            "flags": list(self.flags),
            "details": self.details,
        }


@dataclass
class VerificationReport:
    instance_name: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "instance": self.instance_name,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _projector_checks(built: BuiltInstance, samples: int, seed: int) -> list:
    report = verify_projector_properties(ProximalProjector(built.instance),
                                         samples=samples, seed=seed,
                                         tol=PROPERTY_THRESHOLD)
    flags = ["degenerate"] if report.degenerate else []
    out = []
    for key, check in report.checks().items():
        out.append(CheckResult(
            name=f"projector-{key.replace('_', '-')}",
            tag=PROJECTOR_TAGS[key],
            passed=check.holds,
            worst_deviation=check.worst_deviation,
            threshold=PROPERTY_THRESHOLD,
            flags=list(flags),
            details=f"worst over {report.samples} proximal samples per side"
                    + (f"; {check.note}" if check.note else "")))
    return out


def _map_checks(built: BuiltInstance, samples: int, seed: int) -> tuple[list, dict]:
    """Commutation for noncyclic maps, mode flip for certified contractions."""
    checks = []
    certificates = {}
    projector = ProximalProjector(built.instance)
    for name, m in built.maps.items():
        if m.mode == "noncyclic":
            commutation = check_commutation(m, projector, samples=samples, seed=seed)
            checks.append(CheckResult(
                name=f"map-{name}-commutation",
                tag="map-commutes-with-projection",
                passed=commutation.max_deviation <= COMMUTATION_THRESHOLD,
                worst_deviation=commutation.max_deviation,
                threshold=COMMUTATION_THRESHOLD,
                details=f"max over {commutation.samples} proximal points per side"))
        cert = certify_contraction(m, seed=seed)
        certificates[name] = cert
        if not cert:
            continue
        try:
            composed = compose_with_projector(m, projector, seed=seed)
            flipped = certify_mode(composed, seed=seed)
            passed = flipped.ok and composed.mode == flip_mode(m.mode)
            deviation = flipped.worst_deviation
            details = f"composed map certifies as {composed.mode}"
        except ProxipairError as exc:
            passed, deviation, details = False, float("inf"), str(exc)
        checks.append(CheckResult(
            name=f"map-{name}-mode-flip",
            tag="composition-flips-mode",
            passed=passed,
            worst_deviation=deviation,
            threshold=built.instance.tol * 10.0,
            details=details))
    return checks, certificates


def _run_checks(built: BuiltInstance, certificates: dict, seed: int) -> list:
    checks = []
    residual_threshold = built.doc.tol * 10.0
    for run_name in built.runs:
        spec = built.runs[run_name]
        cert = certificates[spec["map"]]
        alpha = cert.alpha_hat
        try:
            result = built.run(run_name, seed=seed, certificate=cert)
        except ProxipairError as exc:
            checks.append(CheckResult(
                name=f"run-{run_name}-converges", tag="solver-run-converges",
                passed=False, worst_deviation=float("inf"),
                threshold=residual_threshold, details=str(exc)))
            continue
        checks.append(CheckResult(
            name=f"run-{run_name}-converges",
            tag="solver-run-converges",
            passed=result.converged and result.residual <= residual_threshold,
            worst_deviation=result.residual,
            threshold=residual_threshold,
            details=f"{result.trace.iterations_used} iterations, "
                    f"alpha_hat={result.alpha_hat:.4f}"))

        gaps = result.trace.gaps()
        excess = gaps[1:] - (alpha * gaps[:-1] + GAP_DECAY_SLACK)
        worst = float(np.max(excess)) if len(excess) else 0.0
        checks.append(CheckResult(
            name=f"run-{run_name}-gap-decay",
            tag="gap-decays-geometrically",
            passed=worst <= 0.0,
            worst_deviation=max(worst, 0.0),
            threshold=GAP_DECAY_SLACK,
            details=f"per-step decay factor bound {alpha:.4f}"))

        if result.identity_deviation is not None:
            checks.append(CheckResult(
                name=f"run-{run_name}-orbit-identity",
                tag="even-subsequence-identity",
                passed=result.identity_deviation <= IDENTITY_THRESHOLD,
                worst_deviation=result.identity_deviation,
                threshold=IDENTITY_THRESHOLD,
                details="composition orbit matches direct orbit at even steps"))
        if result.odd_membership_deviation is not None:
            checks.append(CheckResult(
                name=f"run-{run_name}-odd-membership",
                tag="odd-iterates-remain-proximal",
                passed=result.odd_membership_deviation <= ODD_MEMBERSHIP_THRESHOLD,
                worst_deviation=result.odd_membership_deviation,
                threshold=ODD_MEMBERSHIP_THRESHOLD,
                details="odd composition iterates stay in the proximal part of B"))
    return checks


def _uniqueness_checks(built: BuiltInstance, certificates: dict, seed: int) -> list:
    checks = []
    inst = built.instance
    rng = np.random.default_rng(seed)
    direct = {name: spec for name, spec in built.runs.items()
              if spec["solver"] in ("picard", "project")}
    for run_name, spec in direct.items():
        starts = list(inst.sample_proximal("A", UNIQUENESS_STARTS - 1, rng))
        starts.append(np.asarray(spec["x0"], dtype=float))
        solutions = []
        details = ""
        passed = True
        worst = 0.0
        cert = certificates[spec["map"]]
        for x0 in starts:
            try:
                result = _run_from(built, spec, x0, seed, cert)
            except ProxipairError as exc:
                passed, worst, details = False, float("inf"), str(exc)
                break
            solutions.append(result.x_star if result.x_star is not None
                             else result.pair[0])
        if passed:
            pts = np.array(solutions)
            worst = float(np.max(inst.space.norms(pts - pts[0], axis=1)))
            passed = worst <= UNIQUENESS_THRESHOLD
            details = f"{len(starts)} starts sampled from the proximal part of A"
        checks.append(CheckResult(
            name=f"run-{run_name}-uniqueness",
            tag="limit-independent-of-start",
            passed=passed,
            worst_deviation=worst,
            threshold=UNIQUENESS_THRESHOLD,
            details=details))
    return checks


def _run_from(built: BuiltInstance, spec: dict, x0, seed: int, certificate=None):
    from .instances import SOLVERS
    solver = SOLVERS[spec["solver"]]
    return solver(built.maps[spec["map"]], x0, tol=built.doc.tol, seed=seed,
                  certificate=certificate)


def run_verification(built: BuiltInstance, samples: int = 1000,
                     seed: int = 0) -> VerificationReport:
    """Full check battery; failing maps produce failing checks, not errors."""
    checks = _projector_checks(built, samples, seed)
    map_checks, certificates = _map_checks(built, samples, seed)
    checks.extend(map_checks)
    checks.extend(_run_checks(built, certificates, seed))
    checks.extend(_uniqueness_checks(built, certificates, seed))
    return VerificationReport(instance_name=built.doc.name, checks=checks)
