import io
import itertools

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from benson_entropy import geometry as geo
from benson_entropy.errors import CapacityExceeded, DegenerateCut
from benson_entropy.outer_poly import OuterPolytope, initial_simplex, load_dump


def upper_hull_facets(points, big=1e3):
    """Facets ``w.y + c >= 0`` (w >= 0, max w = 1) of ``conv(points) + R^3_+``.

    The orthant is truncated by adding far-away copies of every point along
    each axis; only facets with non-negative inward normals survive.
    """
    pts = [np.asarray(v, float) for v in points]
    cloud = pts + [v + big * e for v in pts for e in np.eye(len(pts[0]))]
    hull = ConvexHull(np.array(cloud))
    out = []
    for eq in hull.equations:
        w, c = -eq[:-1], -eq[-1]       # scipy keeps n.y + off <= 0 inside
        if np.min(w) < -1e-9:
            continue
        s = np.max(w)
        h = np.append(w / s, c / s)
        if not any(np.max(np.abs(h - g)) < 1e-7 for g in out):
            out.append(h)
    return out


def algebraic_edge(poly, a, b):
    """Two vertices span an edge iff their common facets have rank p - 1."""
    common = set(poly.incident_facets(a)) & set(poly.incident_facets(b))
    if not common:
        return False
    H = np.array([poly.facets[f] for f in common])
    return np.linalg.matrix_rank(H, tol=1e-9) == poly.p - 1


def test_initial_triangle():
    poly = initial_simplex(2)
    assert poly.num_vertices == 3 and poly.num_facets == 3
    for v in poly.vertex_ids():
        assert len(poly.incident_facets(v)) == 2


def test_initial_simplex_in_dimension_ten():
    poly = initial_simplex(10)
    assert poly.num_vertices == 11 and poly.num_facets == 11
    assert poly.incident_facets(0) == list(range(10))
    assert not poly.is_boundary(0)
    assert all(poly.is_boundary(v) and poly.is_ideal(v) for v in range(1, 11))
    assert poly.check_consistency() == []


def test_simplex_graph_is_complete():
    poly = initial_simplex(3)
    for a, b in itertools.combinations(poly.vertex_ids(), 2):
        assert poly.is_edge(a, b)


def test_corner_cut_of_triangle():
    poly = initial_simplex(2)
    report = poly.add_facet(geo.hyperplane([1, 1], -1))
    assert report.deleted == 1 and report.created == 2
    ordinary = sorted(tuple(poly.coords(v)) for v in poly.vertex_ids() if not poly.is_ideal(v))
    assert np.allclose(ordinary, [(0, 1, 1), (1, 0, 1)])


def test_square_face_has_no_diagonal_edges():
    # y1 + y2 >= 1 turns the face y3 = 0 into a quadrilateral
    poly = initial_simplex(3)
    poly.add_facet(geo.hyperplane([1, 1, 0], -1))
    by_coords = {tuple(np.round(poly.coords(v), 9)): v for v in poly.vertex_ids()}
    p1, p2 = by_coords[(1, 0, 0, 1)], by_coords[(0, 1, 0, 1)]
    e1, e2, e3 = by_coords[(1, 0, 0, 0)], by_coords[(0, 1, 0, 0)], by_coords[(0, 0, 1, 0)]
    assert poly.is_edge(p1, p2) and poly.is_edge(p1, e1) and poly.is_edge(p2, e2)
    assert not poly.is_edge(p1, e2)
    assert not poly.is_edge(p2, e1)
    assert poly.is_edge(p1, e3) and poly.is_edge(e1, e2)


def test_octant_cut_adjacency_matches_rank_test():
    poly = initial_simplex(3)
    poly.add_facet(geo.hyperplane([1, 2, 3], -6))
    assert not any(np.allclose(poly.coords(v), [0, 0, 0, 1]) for v in poly.vertex_ids())
    for a, b in itertools.combinations(poly.vertex_ids(), 2):
        assert poly.is_edge(a, b) == algebraic_edge(poly, a, b)


def test_cut_without_negative_vertex_is_rejected():
    poly = initial_simplex(2)
    with pytest.raises(DegenerateCut):
        poly.add_facet(geo.hyperplane([1, 1], 1))


def test_on_vertices_are_kept_and_gain_incidence():
    poly = initial_simplex(2)
    poly.add_facet(geo.hyperplane([1, 1], -2))
    v = next(v for v in poly.vertex_ids() if np.allclose(poly.coords(v), [2, 0, 1]))
    poly.add_facet(geo.hyperplane([2, 1], -4))  # passes through (2, 0)
    assert v in poly.vertex_ids()
    assert poly.num_facets - 1 in poly.incident_facets(v)
    assert poly.check_consistency() == []


@pytest.mark.parametrize("seed", range(8))
def test_cuts_reproduce_a_known_polytope(seed):
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, 6, (9, 3)).astype(float)
    facets = upper_hull_facets(pts)
    poly = initial_simplex(3, debug=True)
    order = rng.permutation(len(facets))
    for k in order:
        try:
            poly.add_facet(facets[k])
        except DegenerateCut:
            pass  # already implied by the earlier cuts
        V = poly.num_vertices
        F = sum(poly.is_proper_facet(f) for f in range(poly.num_facets))
        assert V <= 2 * F - 4
    ordinary = [geo.affine(poly.coords(v)) for v in poly.vertex_ids() if not poly.is_ideal(v)]
    # the ordinary vertices are the minimal extreme points of the point set
    for v in ordinary:
        assert any(np.allclose(v, p) for p in pts)
    proper = [f for f in range(poly.num_facets) if poly.is_proper_facet(f)]
    assert len(proper) == len(facets) + 1          # + the ideal plane
    assert poly.check_consistency() == []


def test_select_unmarked_is_fifo():
    poly = initial_simplex(2)
    assert poly.select_unmarked() == 0
    poly.add_facet(geo.hyperplane([1, 1], -1))
    first = poly.select_unmarked()
    assert np.allclose(poly.coords(first), [1, 0, 1]) or np.allclose(poly.coords(first), [0, 1, 1])
    poly.mark_boundary(first)
    second = poly.select_unmarked()
    assert second is not None and second != first
    poly.mark_boundary(second)
    assert poly.select_unmarked() is None


def test_fifo_order_follows_creation():
    poly = initial_simplex(2)
    report = poly.add_facet(geo.hyperplane([1, 1], -1))
    assert poly.select_unmarked() == report.new_vertices[0]


def test_capacity_exceeded_leaves_polytope_intact():
    poly = initial_simplex(3, max_vertices=4)
    with pytest.raises(CapacityExceeded):
        poly.add_facet(geo.hyperplane([1, 1, 1], -1))
    assert poly.num_vertices == 4 and poly.num_facets == 4
    assert poly.check_consistency() == []
    poly = initial_simplex(3, max_facets=4)
    with pytest.raises(CapacityExceeded):
        poly.add_facet(geo.hyperplane([1, 1, 1], -1))


def test_ideal_vertices_survive_cuts():
    rng = np.random.default_rng(5)
    poly = initial_simplex(4)
    for _ in range(6):
        w = rng.uniform(0.1, 1.0, 4)
        try:
            poly.add_facet(geo.hyperplane(w, -rng.uniform(1, 3)))
        except DegenerateCut:
            pass
    ideal = [v for v in poly.vertex_ids() if poly.is_ideal(v)]
    assert len(ideal) == 4


def test_dump_round_trip():
    poly = initial_simplex(2)
    poly.add_facet(geo.hyperplane([1, 1], -1))
    buf = io.StringIO()
    poly.dump(buf)
    data = load_dump(io.StringIO(buf.getvalue()))
    assert data["p"] == 2
    assert len(data["vertices"]) == poly.num_vertices
    assert len(data["facets"]) == poly.num_facets
