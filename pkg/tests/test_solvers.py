import io
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from proxipair.errors import PreconditionError
from proxipair.geometry import Ball, LpSpace, Polytope, ProximityInstance, contains
from proxipair.mappings import MapSpec, certify_contraction
from proxipair.solvers import (
    noncyclic_projection_iteration,
    picard_cyclic,
    solve_cyclic_via_reduction,
    solve_noncyclic_via_reduction,
)


@pytest.fixture(scope="module")
def seg():
    sp = LpSpace(2, 2.0)
    return ProximityInstance(Polytope(sp, [[1.0, 0.0], [2.0, 0.0]]),
                             Polytope(sp, [[1.0, 1.0], [2.0, 1.0]]))


@pytest.fixture(scope="module")
def balls():
    sp = LpSpace(2, 2.0)
    return ProximityInstance(Ball(sp, [-2.0, 0.0], 1.0), Ball(sp, [2.0, 0.0], 1.0))


def map_T(seg):
    return MapSpec.affine(seg, "cyclic", [[0.5, 0.0], [0.0, -1.0]], [0.5, 1.0], name="T")


def map_S(seg):
    return MapSpec.affine(seg, "noncyclic", [[0.5, 0.0], [0.0, 1.0]], [0.5, 0.0], name="S")


def map_swap(seg):
    return MapSpec.affine(seg, "cyclic", [[1.0, 0.0], [0.0, -1.0]], [0.0, 1.0], name="swap")


def const_maps(balls):
    a_star, b_star = np.array([-1.0, 0.0]), np.array([1.0, 0.0])

    def cyc(x):
        return b_star if balls.A.member(x, 1e-7) else a_star

    def non(x):
        return a_star if balls.A.member(x, 1e-7) else b_star

    return (MapSpec.blackbox(balls, "cyclic", cyc, name="const-cyclic"),
            MapSpec.blackbox(balls, "noncyclic", non, name="const-noncyclic"))


# ------------------------------------------------------- cyclic Picard runs


def test_picard_orbit_matches_hand_recursion(seg):
    # iterating from (2, 0) gives x_k = (1 + 2**-k, k odd), found by
    # unrolling the affine recursion by hand
    res = picard_cyclic(map_T(seg), [2.0, 0.0])
    assert res.converged
    for step in res.trace.steps:
        expected = np.array([1.0 + 2.0 ** -step.index, step.index % 2])
        assert_allclose(step.point, expected, atol=1e-12)
    assert_allclose(res.x_star, [1.0, 0.0], atol=1e-9)
    assert res.residual <= 1e-9


def test_picard_companions_are_next_iterates(seg):
    res = picard_cyclic(map_T(seg), [2.0, 0.0])
    steps = res.trace.steps
    for prev, cur in zip(steps, steps[1:]):
        assert_allclose(prev.companion, cur.point, atol=0)


def test_picard_alternates_sides(seg):
    res = picard_cyclic(map_T(seg), [2.0, 0.0])
    for step in res.trace.steps:
        body = seg.A if step.index % 2 == 0 else seg.B
        assert step.side == ("A" if step.index % 2 == 0 else "B")
        assert contains(body, step.point, 1e-9)


def test_picard_gap_decays_at_certified_rate(seg):
    T = map_T(seg)
    res = picard_cyclic(T, [2.0, 0.0])
    gaps = res.trace.gaps()
    assert gaps[0] == pytest.approx(math.sqrt(1.25) - 1.0, abs=1e-12)
    for prev, cur in zip(gaps, gaps[1:]):
        assert cur <= res.alpha_hat * prev + 1e-9


def test_picard_prediction_bounds_gap_closure(seg):
    res = picard_cyclic(map_T(seg), [2.0, 0.0])
    pred = res.trace.predicted_iterations
    assert 0 < pred < len(res.trace.steps)
    assert res.trace.gaps()[pred] <= 1e-9


def test_picard_trivial_start_stops_immediately(seg):
    res = picard_cyclic(map_T(seg), [1.0, 0.0])
    assert res.converged
    assert res.trace.iterations_used <= 2
    assert_allclose(res.x_star, [1.0, 0.0], atol=0)


def test_picard_accepts_precomputed_certificate(seg):
    T = map_T(seg)
    cert = certify_contraction(T)
    res = picard_cyclic(T, [2.0, 0.0], certificate=cert)
    assert res.converged
    assert res.alpha_hat == cert.alpha_hat


def test_picard_rejects_isometry(seg):
    with pytest.raises(PreconditionError, match="contraction"):
        picard_cyclic(map_swap(seg), [2.0, 0.0])


def test_picard_rejects_wrong_mode(seg):
    with pytest.raises(PreconditionError, match="cyclic"):
        picard_cyclic(map_S(seg), [2.0, 0.0])


def test_picard_rejects_start_outside_A(seg):
    with pytest.raises(PreconditionError, match="start"):
        picard_cyclic(map_T(seg), [5.0, 5.0])


def test_picard_max_iter_cap_flags_nonconvergence(seg):
    res = picard_cyclic(map_T(seg), [2.0, 0.0], max_iter=3)
    assert not res.converged
    assert not res
    # last completed even iterate is x_2 = (1.25, 0)
    assert_allclose(res.x_star, [1.25, 0.0], atol=0)
    assert res.trace.iterations_used == 3


def test_picard_constant_map_on_balls(balls):
    cyc, _ = const_maps(balls)
    res = picard_cyclic(cyc, [-1.0, 0.0])
    assert res.converged
    assert_allclose(res.x_star, [-1.0, 0.0], atol=1e-9)
    assert res.residual <= 1e-9


# ------------------------------------------- noncyclic projection iteration


def test_noncyclic_orbit_matches_hand_recursion(seg):
    # x_n = (1 + 2**-n, 0) with companion directly above it
    res = noncyclic_projection_iteration(map_S(seg), [2.0, 0.0])
    assert res.converged
    for step in res.trace.steps:
        assert step.side == "A"
        assert_allclose(step.point, [1.0 + 2.0 ** -step.index, 0.0], atol=1e-12)
        assert_allclose(step.companion, [1.0 + 2.0 ** -step.index, 1.0], atol=1e-9)
    p, q = res.pair
    assert_allclose(p, [1.0, 0.0], atol=1e-9)
    assert_allclose(q, [1.0, 1.0], atol=1e-9)
    assert res.residual <= 1e-9


def test_noncyclic_pair_is_fixed_by_map(seg):
    S = map_S(seg)
    res = noncyclic_projection_iteration(S, [2.0, 0.0])
    p, q = res.pair
    assert_allclose(S.apply(p), p, atol=1e-9)
    assert_allclose(S.apply(q), q, atol=1e-9)
    assert abs(seg.space.distance(p, q) - seg.dist) <= 1e-9


def test_noncyclic_gaps_stay_closed(seg):
    res = noncyclic_projection_iteration(map_S(seg), [2.0, 0.0])
    assert np.max(np.abs(res.trace.gaps())) <= 1e-9


def test_noncyclic_trivial_start_stops_immediately(seg):
    res = noncyclic_projection_iteration(map_S(seg), [1.0, 0.0])
    assert res.converged
    assert res.trace.iterations_used <= 2


def test_noncyclic_rejects_wrong_mode(seg):
    with pytest.raises(PreconditionError, match="noncyclic"):
        noncyclic_projection_iteration(map_T(seg), [2.0, 0.0])


def test_noncyclic_rejects_nonproximal_start(balls):
    # the center of A is a body point but does not realize dist(A, B)
    _, non = const_maps(balls)
    with pytest.raises(PreconditionError, match="realize"):
        noncyclic_projection_iteration(non, [-2.0, 0.0])


def test_noncyclic_rejects_start_off_body(seg):
    with pytest.raises(PreconditionError):
        noncyclic_projection_iteration(map_S(seg), [2.0, 0.5])


def test_noncyclic_constant_map_on_balls(balls):
    _, non = const_maps(balls)
    res = noncyclic_projection_iteration(non, [-1.0, 0.0])
    assert res.converged
    assert_allclose(res.pair[0], [-1.0, 0.0], atol=1e-9)
    assert_allclose(res.pair[1], [1.0, 0.0], atol=1e-9)


# ----------------------------------------------------------- reductions


def test_cyclic_reduction_matches_direct_solver(seg):
    T = map_T(seg)
    direct = picard_cyclic(T, [2.0, 0.0])
    reduced = solve_cyclic_via_reduction(T, [2.0, 0.0])
    assert reduced.converged
    assert np.max(np.abs(direct.x_star - reduced.x_star)) <= 1e-6
    assert reduced.residual <= 1e-9
    assert reduced.identity_deviation <= 1e-9


def test_noncyclic_reduction_matches_direct_solver(seg):
    S = map_S(seg)
    direct = noncyclic_projection_iteration(S, [2.0, 0.0])
    reduced = solve_noncyclic_via_reduction(S, [2.0, 0.0])
    assert reduced.converged
    assert np.max(np.abs(np.array(direct.pair) - np.array(reduced.pair))) <= 1e-6
    assert reduced.residual <= 1e-9
    assert reduced.identity_deviation <= 1e-9
    assert reduced.odd_membership_deviation <= 1e-8


def test_reductions_on_constant_ball_maps(balls):
    cyc, non = const_maps(balls)
    r1 = solve_cyclic_via_reduction(cyc, [-1.0, 0.0])
    assert r1.converged
    assert_allclose(r1.x_star, [-1.0, 0.0], atol=1e-9)
    r2 = solve_noncyclic_via_reduction(non, [-1.0, 0.0])
    assert r2.converged
    assert_allclose(r2.pair[0], [-1.0, 0.0], atol=1e-9)
    assert_allclose(r2.pair[1], [1.0, 0.0], atol=1e-9)
    assert r2.odd_membership_deviation <= 1e-8


def test_reduction_requires_proximal_start(balls):
    cyc, _ = const_maps(balls)
    with pytest.raises(PreconditionError, match="realize"):
        solve_cyclic_via_reduction(cyc, [-2.0, 0.0])


def test_uniqueness_across_starts(seg):
    T = map_T(seg)
    S = map_S(seg)
    points = [picard_cyclic(T, [x, 0.0]).x_star for x in (1.0, 1.3, 1.5, 1.8, 2.0)]
    for p in points[1:]:
        assert np.max(np.abs(p - points[0])) <= 1e-6
    pairs = [noncyclic_projection_iteration(S, [x, 0.0]).pair
             for x in (1.0, 1.3, 1.5, 1.8, 2.0)]
    for p, q in pairs[1:]:
        assert np.max(np.abs(p - pairs[0][0])) <= 1e-6
        assert np.max(np.abs(q - pairs[0][1])) <= 1e-6


# ------------------------------------------------------- trace and summary


def test_trace_csv_header_and_determinism(seg):
    res = picard_cyclic(map_T(seg), [2.0, 0.0])
    first, second = io.StringIO(), io.StringIO()
    res.trace.write_csv(first)
    res.trace.write_csv(second)
    assert first.getvalue() == second.getvalue()
    lines = first.getvalue().splitlines()
    assert lines[0] == "index,side,x0,x1,y0,y1,gap"
    assert len(lines) == len(res.trace.steps) + 1
    cells = lines[1].split(",")
    assert cells[0] == "0" and cells[1] == "A"
    assert [float(c) for c in cells[2:6]] == [2.0, 0.0, 1.5, 1.0]


def test_trace_csv_roundtrips_exactly(seg):
    res = picard_cyclic(map_T(seg), [2.0, 0.0])
    buf = io.StringIO()
    res.trace.write_csv(buf)
    rows = [line.split(",") for line in buf.getvalue().splitlines()[1:]]
    for row, step in zip(rows, res.trace.steps):
        assert int(row[0]) == step.index
        assert row[1] == step.side
        assert [float(v) for v in row[2:4]] == list(step.point)
        assert [float(v) for v in row[4:6]] == list(step.companion)
        assert float(row[6]) == step.gap
    assert len(rows) == len(res.trace.steps)


def test_summary_is_json_ready(seg):
    point = picard_cyclic(map_T(seg), [2.0, 0.0]).summary()
    pair = solve_noncyclic_via_reduction(map_S(seg), [2.0, 0.0]).summary()
    for summary in (point, pair):
        parsed = json.loads(json.dumps(summary))
        assert parsed == summary
        assert parsed["converged"] is True
        assert 0.0 <= parsed["alpha_hat"] < 1.0
    assert point["kind"] == "best_proximity_point"
    assert_allclose(point["x_star"], [1.0, 0.0], atol=1e-9)
    assert pair["kind"] == "best_proximity_pair"
    assert "odd_membership_deviation" in pair
