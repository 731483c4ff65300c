"""Outer approximating polytopes kept in double description.

Vertices and facets are both listed, together with their incidences.
Incidences are stored twice as Python integers used as bitsets: for every
vertex the set of facets through it and for every facet the set of vertices
on it.  Two vertices span an edge exactly when the only vertices lying on all
facets through both are the two vertices themselves, which is an AND-chain
over those bitsets.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import geometry as geo
from .errors import CapacityExceeded, DegenerateCut, ParallelEdge, SingularIncidence

log = logging.getLogger(__name__)

DEFAULT_CAPACITY = 1 << 16


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class CutReport:
    facet: int
    deleted: int
    created: int
    touched: int
    new_vertices: tuple[int, ...] = ()


class OuterPolytope:
    """A polyhedron ``S`` in homogeneous coordinates, closed by the ideal plane.

    Use :meth:`initial` (or :func:`initial_simplex`) to construct the ideal
    simplex and :meth:`add_facet` to cut it down.
    """

    def __init__(self, p: int, *, max_vertices: int = DEFAULT_CAPACITY,
                 max_facets: int = DEFAULT_CAPACITY, eps: float = 1e-9,
                 debug: bool = False):
        if p < 1:
            raise ValueError("dimension must be at least 1")
        self.p = p
        self.max_vertices = max_vertices
        self.max_facets = max_facets
        self.eps = eps
        self.debug = debug
        self.facets: list[np.ndarray] = []
        self.facet_vertices: list[int] = []
        self._coords: list[Optional[np.ndarray]] = []
        self._vfacets: list[int] = []
        self._boundary: list[bool] = []
        self._stamp: list[int] = []
        self._free: list[int] = []
        self._alive = 0
        self._clock = 0
        self._queue: deque = deque()
        self.peak_vertices = 0
        self.vertices_created = 0

    # -- construction ---------------------------------------------------------

    @classmethod
    def initial(cls, p: int, **kwargs) -> "OuterPolytope":
        """The ideal simplex: the origin plus the ``p`` ideal unit points."""
        poly = cls(p, **kwargs)
        for i in range(p):
            e = np.zeros(p)
            e[i] = 1.0
            poly._add_facet_raw(geo.hyperplane(e, 0.0))
        poly._add_facet_raw(geo.ideal_plane(p))
        origin = poly._new_vertex(geo.ordinary(np.zeros(p)), (1 << p) - 1, boundary=False)
        for i in range(p):
            e = np.zeros(p)
            e[i] = 1.0
            incident = ((1 << p) - 1) & ~(1 << i) | (1 << p)
            poly._new_vertex(geo.ideal(e), incident, boundary=True)
        for f in range(p + 1):
            poly.facet_vertices[f] = poly._vertices_on(f)
        assert origin == 0
        return poly

    def _add_facet_raw(self, h) -> int:
        self.facets.append(np.asarray(h, dtype=float))
        self.facet_vertices.append(0)
        return len(self.facets) - 1

    def _new_vertex(self, coords, facet_mask: int, boundary: bool) -> int:
        if self._free:
            vid = self._free.pop()
            self._coords[vid] = coords
            self._vfacets[vid] = facet_mask
            self._boundary[vid] = boundary
            self._stamp[vid] = self._clock
        else:
            vid = len(self._coords)
            self._coords.append(coords)
            self._vfacets.append(facet_mask)
            self._boundary.append(boundary)
            self._stamp.append(self._clock)
        self._alive |= 1 << vid
        if not boundary and not geo.is_ideal(coords):
            self._queue.append((self._clock, vid))
        self._clock += 1
        self.vertices_created += 1
        self.peak_vertices = max(self.peak_vertices, self.num_vertices)
        return vid

    def _vertices_on(self, f: int) -> int:
        mask = 0
        for v in _bits(self._alive):
            if self._vfacets[v] >> f & 1:
                mask |= 1 << v
        return mask

    # -- queries --------------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return self._alive.bit_count()

    @property
    def num_facets(self) -> int:
        return len(self.facets)

    def vertex_ids(self) -> list[int]:
        return list(_bits(self._alive))

    def coords(self, vid: int) -> np.ndarray:
        return self._coords[vid]

    def is_boundary(self, vid: int) -> bool:
        return self._boundary[vid]

    def is_ideal(self, vid: int) -> bool:
        return geo.is_ideal(self._coords[vid])

    def incident_facets(self, vid: int) -> list[int]:
        return list(_bits(self._vfacets[vid]))

    def incident_vertices(self, fid: int) -> list[int]:
        return list(_bits(self.facet_vertices[fid]))

    def mark_boundary(self, vid: int) -> None:
        self._boundary[vid] = True

    def select_unmarked(self) -> Optional[int]:
        """Oldest ordinary vertex not yet known to lie on the boundary, or None."""
        q = self._queue
        while q:
            stamp, vid = q[0]
            if (self._alive >> vid & 1 and self._stamp[vid] == stamp
                    and not self._boundary[vid]):
                return vid
            q.popleft()
        return None

    def is_edge(self, v1: int, v2: int) -> bool:
        """Combinatorial adjacency test on the incidence bitsets."""
        if v1 == v2:
            raise ValueError("an edge needs two distinct vertices")
        common = self._vfacets[v1] & self._vfacets[v2]
        if common.bit_count() < self.p - 1:
            return False
        target = (1 << v1) | (1 << v2)
        acc = self._alive
        for f in _bits(common):
            acc &= self.facet_vertices[f]
            if acc == target:
                return True
        return acc == target

    def edges(self) -> list[tuple[int, int]]:
        ids = self.vertex_ids()
        return [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:] if self.is_edge(a, b)]

    def classify(self, h) -> dict[int, geo.Side]:
        return {v: geo.side(self._coords[v], h, self.eps) for v in _bits(self._alive)}

    # -- the cut --------------------------------------------------------------

    def add_facet(self, h) -> CutReport:
        """Intersect the polytope with the non-negative side of ``h``.

        Vertices strictly on the negative side are removed, vertices on ``h``
        become incident to it, and every edge crossing ``h`` contributes one
        new vertex whose coordinates are recomputed from its facets.  The
        polytope is left untouched when a capacity limit would be exceeded.
        """
        h = np.asarray(h, dtype=float)
        ids = self.vertex_ids()
        Z = np.array([self._coords[v] for v in ids])
        vals = Z @ h
        scale = np.max(np.abs(Z), axis=1) * np.max(np.abs(h))
        on = np.abs(vals) <= self.eps * scale
        neg = [v for v, val, o in zip(ids, vals, on) if val < 0 and not o]
        pos = [v for v, val, o in zip(ids, vals, on) if val > 0 and not o]
        touch = [v for v, o in zip(ids, on) if o]
        if not neg:
            raise DegenerateCut("no vertex is strictly cut off by the new hyperplane")
        if self.num_facets + 1 > self.max_facets:
            raise CapacityExceeded(f"facet limit {self.max_facets} reached")

        fid = self.num_facets
        created = []
        for a in neg:
            for b in pos:
                if not self.is_edge(a, b):
                    continue
                common = self._vfacets[a] & self._vfacets[b]
                created.append((self._cut_point(a, b, common, h), common | (1 << fid)))
        new_count = self.num_vertices - len(neg) + len(created)
        if new_count > self.max_vertices:
            raise CapacityExceeded(f"vertex limit {self.max_vertices} reached "
                                   f"({new_count} vertices needed)")

        self._add_facet_raw(h)
        negmask = 0
        for v in neg:
            negmask |= 1 << v
            self._coords[v] = None
            self._free.append(v)
        self._alive &= ~negmask
        for f in range(fid):
            self.facet_vertices[f] &= ~negmask
        fmask = 0
        for v in touch:
            self._vfacets[v] |= 1 << fid
            fmask |= 1 << v
        self._free.sort(reverse=True)
        new_ids = []
        for coords, incident in created:
            vid = self._new_vertex(coords, incident, boundary=False)
            new_ids.append(vid)
            fmask |= 1 << vid
            for f in _bits(incident & ~(1 << fid)):
                self.facet_vertices[f] |= 1 << vid
        self.facet_vertices[fid] = fmask
        if self.debug:
            self._assert_distinct(new_ids)
            bad = self.check_consistency()
            if bad:
                raise AssertionError(f"incidence inconsistent after cut: {bad[:5]}")
        return CutReport(fid, len(neg), len(created), len(touch), tuple(new_ids))

    def _cut_point(self, a: int, b: int, common: int, h) -> np.ndarray:
        try:
            approx = geo.intersect(self._coords[a], self._coords[b], h)
        except ParallelEdge:
            approx = None
        planes = [self.facets[f] for f in _bits(common)] + [h]
        try:
            exact = geo.vertex_from_facets(planes, self.p)
        except SingularIncidence:
            exact = None
        if exact is None or geo.is_ideal(exact):
            if approx is None:
                raise ParallelEdge("cannot locate the crossing of an edge with the cut")
            return approx
        if approx is not None:
            gap = np.max(np.abs(exact - approx)) / max(1.0, np.max(np.abs(approx)))
            if gap > 1e-6:
                log.debug("recomputed vertex differs from edge crossing by %.3g", gap)
        return exact

    def _assert_distinct(self, new_ids) -> None:
        pts = [self._coords[v] for v in new_ids]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if np.max(np.abs(pts[i] - pts[j])) <= 1e-9 * max(1.0, np.max(np.abs(pts[i]))):
                    raise AssertionError(f"cut produced duplicate vertices {new_ids[i]}, {new_ids[j]}")

    # -- diagnostics ----------------------------------------------------------

    def check_consistency(self, eps: Optional[float] = None) -> list[tuple[int, int, str]]:
        """List (vertex, facet, problem) triples violating the incidence invariants."""
        eps = self.eps * 10 if eps is None else eps
        bad = []
        for v in _bits(self._alive):
            for f, h in enumerate(self.facets):
                s = geo.side(self._coords[v], h, eps)
                listed = bool(self._vfacets[v] >> f & 1)
                if listed != bool(self.facet_vertices[f] >> v & 1):
                    bad.append((v, f, "asymmetric incidence"))
                if listed and s is not geo.Side.ON:
                    bad.append((v, f, "listed but not on facet"))
                elif not listed and s is not geo.Side.POSITIVE:
                    bad.append((v, f, "unlisted but not strictly inside"))
        return bad

    def is_proper_facet(self, fid: int, rank_tol: float = 1e-9) -> bool:
        """True when the vertices on hyperplane ``fid`` span a ``(p-1)``-face."""
        on = [self._coords[v] for v in _bits(self.facet_vertices[fid])]
        if len(on) < self.p:
            return False
        return int(np.linalg.matrix_rank(np.array(on), tol=rank_tol)) == self.p

    def dump(self, stream) -> None:
        """Plain-text dump: header, one ``v`` line per vertex, ``f`` per facet, ``i`` incidences."""
        stream.write(f"# outer polytope p={self.p}\n")
        stream.write(f"{self.p} {self.num_vertices} {self.num_facets}\n")
        for v in self.vertex_ids():
            flags = ("B" if self._boundary[v] else "-") + ("I" if self.is_ideal(v) else "O")
            coords = " ".join(repr(float(c)) for c in self._coords[v])
            stream.write(f"v {v} {flags} {coords}\n")
        for f, h in enumerate(self.facets):
            stream.write(f"f {f} " + " ".join(repr(float(c)) for c in h) + "\n")
        for v in self.vertex_ids():
            stream.write(f"i {v} " + " ".join(str(f) for f in self.incident_facets(v)) + "\n")


def initial_simplex(p: int, **kwargs) -> OuterPolytope:
    return OuterPolytope.initial(p, **kwargs)


def load_dump(stream) -> dict:
    """Parse :meth:`OuterPolytope.dump` output into plain dictionaries."""
    lines = [ln.strip() for ln in stream if ln.strip() and not ln.startswith("#")]
    p, nv, nf = (int(t) for t in lines[0].split())
    out = {"p": p, "vertices": {}, "flags": {}, "facets": {}, "incidence": {}}
    for ln in lines[1:]:
        tag, key, *rest = ln.split()
        key = int(key)
        if tag == "v":
            out["flags"][key] = rest[0]
            out["vertices"][key] = np.array([float(t) for t in rest[1:]])
        elif tag == "f":
            out["facets"][key] = np.array([float(t) for t in rest])
        elif tag == "i":
            out["incidence"][key] = [int(t) for t in rest]
    assert len(out["vertices"]) == nv and len(out["facets"]) == nf
    return out
