import io

import numpy as np
import pytest

from benson_entropy import geometry as geo
from benson_entropy.benson import (Cut, MolpProblem, OnBoundary, RunConfig, bootstrap,
                                   facet_from_dual, probe, run)
from benson_entropy.errors import CapacityExceeded, EmptyRegion, ProbeInconsistent
from benson_entropy.oracle import pareto_vertices

from conftest import random_molp, same_point_sets


def corner(a, b):
    """``Q = {(a, b)}`` realised with slack variables, so ``Q+ = {y >= (a, b)}``."""
    A = [[1.0, 0.0], [0.0, 1.0]]
    return MolpProblem.from_dense(A, [a, b], [[1.0, 0.0], [0.0, 1.0]])


def test_bootstrap_on_unit_corner():
    prob = corner(1.0, 1.0)
    q, d, lam, first = bootstrap(prob, np.random.default_rng(0), direction=[1.0, 1.0])
    assert lam == pytest.approx(1.0)
    assert isinstance(first, Cut)
    assert np.allclose(first.y_hat, [1.0, 1.0])
    assert geo.side(geo.ordinary(first.y_hat), first.facet) is geo.Side.ON
    assert 2.0 <= q[0] <= 3.0 and q[0] == pytest.approx(q[1])


def test_bootstrap_on_empty_region():
    prob = MolpProblem.from_dense([[1.0, 1.0]], [-1.0], [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(EmptyRegion):
        bootstrap(prob, np.random.default_rng(0))


def test_probe_from_interior_point():
    prob = corner(1.0, 2.0)
    out = probe(prob, [3.0, 4.0], [0.0, 0.0])
    assert isinstance(out, Cut)
    assert out.lambda_hat == pytest.approx(0.5)
    assert np.allclose(out.y_hat, [1.5, 2.0])
    w, c = out.facet[:-1], out.facet[-1]
    assert np.allclose(w, [0.0, 1.0]) and c == pytest.approx(-2.0)
    # supporting: every point of Q+ is on the non-negative side
    rng = np.random.default_rng(1)
    for y in np.array([1.0, 2.0]) + rng.exponential(1.0, (100, 2)):
        assert w @ y + c >= -1e-9


def test_probe_reports_points_inside():
    out = probe(corner(1.0, 2.0), [3.0, 4.0], [1.0, 2.5])
    assert isinstance(out, OnBoundary)
    assert np.allclose(out.witness, [1.0, 2.0])


def test_probe_from_boundary_point_is_inconsistent():
    with pytest.raises(ProbeInconsistent):
        probe(corner(1.0, 2.0), [1.0, 2.0], [0.0, 0.0])


def test_facet_from_dual_normalises_and_rejects_negative_normals():
    h = facet_from_dual([0.0, 2.0, 1.0], 4.0)
    assert np.allclose(h, [0.0, 1.0, 0.5, -2.0])
    with pytest.raises(ProbeInconsistent):
        facet_from_dual([1.0, -0.5], 1.0)


def test_corner_problem_has_single_vertex():
    sol = run(corner(1.0, 2.0))
    assert len(sol.extremal_vertices) == 1
    assert np.allclose(sol.extremal_vertices[0], [1.0, 2.0])


@pytest.mark.parametrize("seed", range(12))
def test_matches_enumeration_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    prob = random_molp(rng)
    sol = run(prob, RunConfig(seed=seed))
    assert same_point_sets(sol.extremal_vertices, pareto_vertices(prob))


@pytest.mark.parametrize("seed", range(6))
def test_run_bookkeeping(seed):
    prob = random_molp(np.random.default_rng(2000 + seed))
    sol = run(prob, RunConfig(seed=seed, debug=True))
    st = sol.stats
    if st.restarts == 0:
        assert st.lp_solves == st.iterations + 1
        # each loop iteration either confirms a vertex or adds a facet
        assert st.iterations == len(sol.extremal_vertices) + sol.facet_count - prob.p
    assert sol.facet_count == prob.p + len(sol.added_facets) - 1
    for h in sol.facets:
        assert np.min(h[:-1]) >= -1e-9
    for y, x in zip(sol.extremal_vertices, sol.witnesses):
        assert x is not None
        assert np.allclose(prob.P.dense @ x, y, atol=1e-6)
        assert np.allclose(prob.A.dense @ x, prob.b, atol=1e-6)
    # every vertex satisfies every facet, and lies on at least p of them
    for y in sol.extremal_vertices:
        vals = [h[:-1] @ y + h[-1] for h in sol.facets]
        assert min(vals) >= -1e-7
        assert sum(abs(v) <= 1e-7 for v in vals) >= prob.p
    assert not sol.dominated


def test_result_does_not_depend_on_seed():
    prob = random_molp(np.random.default_rng(77))
    sols = [run(prob, RunConfig(seed=s)).extremal_vertices for s in (0, 1, 2)]
    assert same_point_sets(sols[0], sols[1]) and same_point_sets(sols[0], sols[2])


def test_same_seed_gives_identical_output():
    prob = random_molp(np.random.default_rng(78))
    a = run(prob, RunConfig(seed=4))
    b = run(prob, RunConfig(seed=4))
    assert [v.tolist() for v in a.extremal_vertices] == [v.tolist() for v in b.extremal_vertices]
    assert a.stats.lp_pivots == b.stats.lp_pivots


def test_capacity_failure_carries_partial_solution():
    prob = random_molp(np.random.default_rng(5), n=12, m=2)
    with pytest.raises(CapacityExceeded) as info:
        run(prob, RunConfig(max_vertices=6))
    assert info.value.partial is not None
    assert not info.value.partial.complete


def test_observer_sees_every_cut():
    prob = random_molp(np.random.default_rng(9))
    seen = []
    sol = run(prob, RunConfig(), observer=lambda poly: seen.append(poly.num_facets))
    assert len(seen) == len(sol.added_facets)
    assert seen == sorted(seen)


def test_problem_dump_round_trip():
    prob = random_molp(np.random.default_rng(3))
    buf = io.StringIO()
    prob.dump(buf)
    back = MolpProblem.load(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.A.dense, prob.A.dense)
    assert np.array_equal(back.b, prob.b)
    assert np.array_equal(back.P.dense, prob.P.dense)
