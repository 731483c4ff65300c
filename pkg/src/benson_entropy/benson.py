"""Outer approximation of ``Q+ = {y : y >= Px, Ax = b, x >= 0}``.

The driver keeps an outer polytope ``S`` (see :mod:`.outer_poly`), picks an
unmarked vertex ``y``, and solves a single LP along the segment from an
interior point ``q`` towards ``y``.  The LP either certifies that ``y`` lies
in ``Q+`` or, through its dual, returns a facet of ``Q+`` separating ``y``;
either way one LP per iteration is enough.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from . import geometry as geo
from .errors import (CapacityExceeded, DegenerateCut, EmptyRegion, NumericalFailure,
                     ParallelEdge, ProbeInconsistent, UnboundedLP)
from .outer_poly import DEFAULT_CAPACITY, OuterPolytope
from .sparse_lp import (DEFAULT_TOLERANCES, LpStatus, SimplexSolver, SparseMatrix,
                        Tolerances, build_instance, read_triplets, write_triplets)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MolpProblem:
    """Find the extremal points of ``Q = {Px : Ax = b, x >= 0}``; ``Q`` must lie in ``R^p_+``."""

    A: SparseMatrix
    b: np.ndarray
    P: SparseMatrix

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).reshape(-1)
        object.__setattr__(self, "b", b)
        if self.A.rows != b.shape[0]:
            raise ValueError(f"A has {self.A.rows} rows but b has {b.shape[0]} entries")
        if self.A.cols != self.P.cols:
            raise ValueError("A and P must have the same number of columns")

    @classmethod
    def from_dense(cls, A, b, P) -> "MolpProblem":
        return cls(SparseMatrix.from_dense(A), np.asarray(b, dtype=float),
                   SparseMatrix.from_dense(P))

    @property
    def p(self) -> int:
        return self.P.rows

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def n(self) -> int:
        return self.A.cols

    def dump(self, stream) -> None:
        """Write ``A``, ``b`` and ``P`` as three consecutive triplet blocks."""
        stream.write("# A\n")
        write_triplets(stream, self.A)
        stream.write("# b\n")
        write_triplets(stream, SparseMatrix.from_dense(self.b.reshape(-1, 1))
                       if np.any(self.b) else SparseMatrix(self.m, 1, []))
        stream.write("# P\n")
        write_triplets(stream, self.P)

    @classmethod
    def load(cls, stream) -> "MolpProblem":
        lines = [ln for ln in stream]
        blocks, cur = [], None
        for ln in lines:
            body = ln.split("#", 1)[0].strip()
            if not body:
                continue
            if cur is None or cur["left"] == 0:
                r, c, nnz = (int(t) for t in body.split())
                cur = {"header": body, "rows": [], "left": nnz}
                blocks.append(cur)
            else:
                cur["rows"].append(body)
                cur["left"] -= 1
        if len(blocks) != 3:
            raise ValueError(f"expected 3 triplet blocks (A, b, P), found {len(blocks)}")
        A, bmat, P = (read_triplets([blk["header"]] + blk["rows"]) for blk in blocks)
        return cls(A, bmat.dense[:, 0].copy(), P)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    max_vertices: int = DEFAULT_CAPACITY
    max_facets: int = DEFAULT_CAPACITY
    tol: Tolerances = DEFAULT_TOLERANCES
    checkpoint_interval: int = 60
    restarts: int = 5
    boundary_tol: float = 1e-7
    side_eps: float = 1e-9
    facet_dedup_tol: float = 1e-7
    snap_denominator: Optional[int] = 4096
    snap_tol: float = 1e-10
    debug: bool = False

    def __post_init__(self):
        for name in ("max_vertices", "max_facets", "checkpoint_interval"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")


@dataclass
class OnBoundary:
    witness: Optional[np.ndarray] = None


@dataclass
class Cut:
    y_hat: np.ndarray
    facet: np.ndarray
    lambda_hat: float
    witness: Optional[np.ndarray] = None
    dual_u: Optional[np.ndarray] = None
    dual_v: Optional[np.ndarray] = None


ProbeResult = Union[OnBoundary, Cut]


@dataclass
class RunStats:
    iterations: int = 0
    lp_solves: int = 0
    lp_pivots: int = 0
    lp_rollbacks: int = 0
    restarts: int = 0
    warm_starts: int = 0
    peak_vertices: int = 0
    vertices_created: int = 0
    wall_time: float = 0.0
    peak_trace: list = field(default_factory=list)


@dataclass
class Solution:
    extremal_vertices: list[np.ndarray]
    facets: list[np.ndarray]
    stats: RunStats
    witnesses: list[Optional[np.ndarray]] = field(default_factory=list)
    added_facets: list[np.ndarray] = field(default_factory=list)
    dominated: list[int] = field(default_factory=list)
    interior_point: Optional[np.ndarray] = None
    complete: bool = True
    loop_cuts: int = 0

    @property
    def facet_count(self) -> int:
        """Facet hyperplanes counted per iteration.

        The ``p`` coordinate hyperplanes of the initial simplex plus one
        hyperplane per cutting iteration of the main loop, so that the
        number of loop iterations is vertices + facets - p.  The
        geometric count of the facets of ``Q+`` is ``len(self.facets)``.
        """
        return len(self.interior_point) + self.loop_cuts


class _Restart(Exception):
    pass


def _snap(x: float, denominator: Optional[int], tol: float) -> float:
    if denominator is None or x == 0.0:
        return x
    f = Fraction(x).limit_denominator(denominator)
    return float(f) if abs(float(f) - x) <= tol * max(1.0, abs(x)) else x


def facet_from_dual(v, beta: float, config: RunConfig = RunConfig()) -> np.ndarray:
    """Homogeneous form of ``{y : v.y >= beta}``, normalised to ``max(w) = 1``."""
    v = np.asarray(v, dtype=float)
    if np.min(v) < -1e-9 * max(1.0, np.max(np.abs(v))):
        raise ProbeInconsistent(f"supporting normal has a negative entry {np.min(v):.3g}")
    w = np.maximum(v, 0.0)
    scale = float(w.max())
    if scale <= 0:
        raise ProbeInconsistent("supporting normal vanished")
    w = w / scale
    w[w < 1e-12] = 0.0
    offset = -beta / scale
    w = np.array([_snap(c, config.snap_denominator, config.snap_tol) for c in w])
    offset = _snap(offset, config.snap_denominator, config.snap_tol)
    return geo.hyperplane(w, offset)


class WarmStart:
    """Feasible starting basis shared by all probes with the same interior point."""

    def __init__(self):
        self.q = None
        self.basis = None
        self.hits = 0

    def lookup(self, q):
        if self.basis is not None and self.q is not None and np.array_equal(self.q, q):
            return self.basis
        return None

    def store(self, q, basis):
        self.q = np.array(q, dtype=float)
        self.basis = basis


def _solve(problem: MolpProblem, q, d, threshold, config: RunConfig, stats: RunStats,
           warm: Optional[WarmStart] = None):
    inst = build_instance(problem, q, d)
    start = warm.lookup(q) if warm is not None else None
    solver = SimplexSolver(inst, tol=config.tol, checkpoint_interval=config.checkpoint_interval,
                           start_basis=start, phase1_lambda=warm is None)
    try:
        out = solver.solve(threshold)
    finally:
        stats.lp_solves += 1
        stats.lp_pivots += solver.pivots
        stats.lp_rollbacks += solver.rollbacks_total
    if warm is not None:
        if solver.warm_started:
            warm.hits += 1
            stats.warm_starts += 1
        elif solver.feasible_basis is not None and out.status is not LpStatus.INFEASIBLE:
            warm.store(q, solver.feasible_basis)
    return out


def bootstrap(problem: MolpProblem, rng, config: RunConfig = RunConfig(),
              stats: Optional[RunStats] = None, direction=None):
    """Find an interior point ``q`` of ``Q+`` and the cut through the origin.

    A ray from the origin along a random ``d`` (entries uniform in [1, 2])
    enters ``Q+`` at ``lam_hat * d``; the LP that finds ``lam_hat`` also
    yields the supporting hyperplane there.  ``q`` is then placed a random
    distance ``r`` (uniform in [1, 2]) further along the ray.

    Returns ``(q, d, lam_hat, probe_result)``.
    """
    stats = stats if stats is not None else RunStats()
    p = problem.p
    d = rng.uniform(1.0, 2.0, size=p) if direction is None else np.asarray(direction, float)
    # the ray lam*d, lam >= 0, is the ray q - mu*d with q = 0 and mu = -lam
    out = _solve(problem, np.zeros(p), d, None, config, stats)
    if out.status is LpStatus.INFEASIBLE:
        raise EmptyRegion("Ax = b, x >= 0 has no solution")
    if out.status is LpStatus.UNBOUNDED:
        raise UnboundedLP("Q is not contained in the non-negative orthant")
    lam_hat = -out.lambda_hat
    if lam_hat < -config.tol.feasibility:
        raise ProbeInconsistent("Q is not contained in the non-negative orthant")
    lam_hat = max(lam_hat, 0.0)
    r = rng.uniform(1.0, 2.0)
    q = (r + lam_hat) * d
    y_hat = lam_hat * d
    if lam_hat <= config.boundary_tol:
        return q, d, lam_hat, OnBoundary(out.primal_x)
    beta = float(np.dot(out.dual_v, y_hat))
    facet = facet_from_dual(out.dual_v, beta, config)
    return q, d, lam_hat, Cut(y_hat, facet, lam_hat, out.primal_x, out.dual_u, out.dual_v)


def probe(problem: MolpProblem, q, y, config: RunConfig = RunConfig(),
          stats: Optional[RunStats] = None, warm: Optional[WarmStart] = None) -> ProbeResult:
    """Shoot from ``q`` towards the ordinary point ``y``.

    Solves ``max lam : Px + lam (q - y) <= q``.  ``lam_hat = 1`` means ``y``
    is in ``Q+``; otherwise ``y_hat = (1 - lam_hat) q + lam_hat y`` is on the
    boundary and the dual multipliers of the objective rows give a facet
    through it.
    """
    stats = stats if stats is not None else RunStats()
    q = np.asarray(q, dtype=float)
    y = geo.affine(y) if len(y) == problem.p + 1 else np.asarray(y, dtype=float)
    d = q - y
    out = _solve(problem, q, d, 1.0, config, stats, warm)
    if out.status is LpStatus.EARLY_FEASIBLE:
        return OnBoundary(out.primal_x)
    if out.status is not LpStatus.OPTIMAL:
        raise ProbeInconsistent(f"probe LP ended with status {out.status.value}")
    lam = out.lambda_hat
    if lam >= 1.0 - config.boundary_tol:
        return OnBoundary(out.primal_x)
    if lam <= config.boundary_tol:
        raise ProbeInconsistent(f"lam_hat = {lam:.3g}: q is not interior")
    y_hat = q - lam * d
    beta = float(np.dot(out.dual_v, q)) - lam
    facet = facet_from_dual(out.dual_v, beta, config)
    return Cut(y_hat, facet, lam, out.primal_x, out.dual_u, out.dual_v)


def _is_duplicate(h, facets, tol) -> bool:
    for g in facets:
        if np.max(np.abs(g - h)) <= tol:
            return True
    return False


def _collect(poly: OuterPolytope, witnesses, stats: RunStats, q, added, loop_cuts,
             complete=True) -> Solution:
    verts, wit = [], []
    for v in poly.vertex_ids():
        if poly.is_ideal(v) or not poly.is_boundary(v):
            continue
        verts.append(geo.affine(poly.coords(v)))
        wit.append(witnesses.get((v, poly._stamp[v])))
    order = sorted(range(len(verts)), key=lambda i: tuple(np.round(verts[i], 7)))
    verts = [verts[i] for i in order]
    wit = [wit[i] for i in order]
    ideal_fid = poly.p
    facets = [poly.facets[f] for f in range(poly.num_facets)
              if f != ideal_fid and poly.is_proper_facet(f)]
    dominated = []
    for i, a in enumerate(verts):
        for j, b in enumerate(verts):
            if i != j and np.all(b <= a + 1e-9) and np.any(b < a - 1e-9):
                dominated.append(i)
                break
    if dominated:
        log.warning("%d reported vertices are dominated by others", len(dominated))
    return Solution(verts, facets, stats, wit, list(added), dominated, q, complete, loop_cuts)


def run(problem: MolpProblem, config: RunConfig = RunConfig(), *, observer=None) -> Solution:
    """Enumerate the extremal points of ``Q`` and the facets of ``Q+``.

    ``observer``, if given, is called with the outer polytope after every cut.
    """
    rng = np.random.default_rng(config.seed)
    stats = RunStats()
    t0 = time.perf_counter()
    q, d, lam_hat, first = bootstrap(problem, rng, config, stats)
    try:
        for attempt in range(config.restarts + 1):
            try:
                return _run_once(problem, config, q, first, stats, observer)
            except (_Restart, ProbeInconsistent, DegenerateCut, ParallelEdge) as exc:
                stats.restarts += 1
                log.info("restarting outer approximation (attempt %d): %s", attempt + 1, exc)
                q = (rng.uniform(1.0, 2.0) + lam_hat) * d
        raise NumericalFailure(f"gave up after {config.restarts} restarts")
    finally:
        stats.wall_time = time.perf_counter() - t0


def _run_once(problem, config, q, first, stats, observer) -> Solution:
    p = problem.p
    poly = OuterPolytope.initial(p, max_vertices=config.max_vertices,
                                 max_facets=config.max_facets, eps=config.side_eps,
                                 debug=config.debug)
    witnesses = {}
    added = []
    warm = WarmStart()

    def apply(vid, result):
        if isinstance(result, OnBoundary):
            poly.mark_boundary(vid)
            witnesses[(vid, poly._stamp[vid])] = result.witness
            return
        h = result.facet
        if _is_duplicate(h, poly.facets, config.facet_dedup_tol):
            raise _Restart("probe returned an already known facet")
        if geo.side(geo.ordinary(q), h, config.side_eps) is not geo.Side.POSITIVE:
            raise ProbeInconsistent("interior point is not strictly inside the new facet")
        if geo.side(poly.coords(vid), h, config.side_eps) is not geo.Side.NEGATIVE:
            raise _Restart("new facet does not cut off the probed vertex")
        poly.add_facet(h)
        added.append(h)
        stats.peak_vertices = max(stats.peak_vertices, poly.num_vertices)
        stats.peak_trace.append((poly.num_vertices, poly.num_facets))
        if observer is not None:
            observer(poly)

    first_cut = int(isinstance(first, Cut))
    try:
        origin = poly.select_unmarked()
        apply(origin, first)
        while True:
            vid = poly.select_unmarked()
            if vid is None:
                break
            stats.iterations += 1
            apply(vid, probe(problem, q, poly.coords(vid), config, stats, warm))
    except CapacityExceeded as exc:
        exc.partial = _collect(poly, witnesses, stats, q, added, len(added) - first_cut,
                               complete=False)
        raise
    stats.vertices_created = poly.vertices_created
    return _collect(poly, witnesses, stats, q, added, len(added) - first_cut)


def membership_margin(problem: MolpProblem, y, config: RunConfig = RunConfig()):
    """Largest ``t`` with ``y - t*1`` in ``Q+``; ``y`` is in ``Q+`` iff it is >= 0.

    Returns ``(t, x)`` where ``x`` is a witness with ``Px <= y - t*1``.
    """
    y = np.maximum(np.asarray(y, dtype=float), 0.0)
    out = _solve(problem, y, np.ones(problem.p), None, config, RunStats())
    if out.status is LpStatus.INFEASIBLE:
        raise EmptyRegion("Ax = b, x >= 0 has no solution")
    if out.status is LpStatus.UNBOUNDED:
        raise UnboundedLP("Q is not contained in the non-negative orthant")
    return out.lambda_hat, out.primal_x


def coordinate_slack(problem: MolpProblem, y, i: int, config: RunConfig = RunConfig()) -> float:
    """How far coordinate ``i`` of a point ``y`` of ``Q+`` can be lowered inside ``Q+``."""
    y = np.maximum(np.asarray(y, dtype=float), 0.0)
    d = np.zeros(problem.p)
    d[i] = 1.0
    out = _solve(problem, y, d, None, config, RunStats())
    if out.status is not LpStatus.OPTIMAL:
        raise NumericalFailure(f"slack LP ended with status {out.status.value}")
    return out.lambda_hat
