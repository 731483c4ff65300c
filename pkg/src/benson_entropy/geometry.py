"""Homogeneous coordinates in the objective space.

A point of the objective space ``R^p`` is stored as a length ``p+1`` array.
Ordinary points are ``(y, 1)``; ideal points (ends of non-negative rays) are
``(m, 0)`` with ``m >= 0`` normalised to ``max(m) = 1``.  A hyperplane is a
length ``p+1`` array ``(w, c)``; a point ``z`` is on its non-negative side
when ``z . (w, c) >= 0``.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import ParallelEdge, SingularIncidence


class Side(enum.IntEnum):
    NEGATIVE = -1
    ON = 0
    POSITIVE = 1


def ordinary(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    return np.append(y, 1.0)


def ideal(m) -> np.ndarray:
    m = np.asarray(m, dtype=float).reshape(-1)
    if np.any(m < 0) or not np.any(m > 0):
        raise ValueError("ideal points need a non-negative, nonzero direction")
    return np.append(m / m.max(), 0.0)


def is_ideal(pt) -> bool:
    return pt[-1] == 0.0


def affine(pt) -> np.ndarray:
    """The ``R^p`` coordinates of an ordinary point."""
    if is_ideal(pt):
        raise ValueError("ideal points have no affine coordinates")
    return pt[:-1] / pt[-1]


def hyperplane(w, offset) -> np.ndarray:
    """The hyperplane ``{y : w.y + offset = 0}`` with non-negative side ``w.y + offset >= 0``."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if not np.any(w):
        raise ValueError("hyperplane normal must be nonzero")
    return np.append(w, float(offset))


def ideal_plane(p: int) -> np.ndarray:
    h = np.zeros(p + 1)
    h[-1] = 1.0
    return h


def side(pt, h, eps: float = 1e-9) -> Side:
    """Classify ``pt`` against ``h`` using a tolerance relative to both norms."""
    val = float(np.dot(pt, h))
    scale = float(np.max(np.abs(pt))) * float(np.max(np.abs(h)))
    if abs(val) <= eps * scale:
        return Side.ON
    return Side.POSITIVE if val > 0 else Side.NEGATIVE


def intersect(a, b, h, eps: float = 1e-12) -> np.ndarray:
    """Point where the segment (or ray) from ``a`` to ``b`` meets ``h``.

    Only one of the endpoints may be ideal.  For an ordinary ``a`` and ideal
    ``b = (m, 0)`` the result is ``a + t m`` with ``t`` solving
    ``(a + t m).h = 0``.
    """
    if is_ideal(a) and is_ideal(b):
        raise ValueError("both endpoints are ideal")
    if is_ideal(a):
        a, b = b, a
    y = affine(a)
    w, c = h[:-1], h[-1]
    direction = b[:-1] if is_ideal(b) else affine(b) - y
    denom = float(direction @ w)
    scale = float(np.max(np.abs(direction))) * float(np.max(np.abs(w)))
    if abs(denom) <= eps * max(scale, 1e-300):
        raise ParallelEdge("edge is parallel to the hyperplane")
    t = -(y @ w + c) / denom
    return ordinary(y + t * direction)


def vertex_from_facets(facets, p: int, rank_tol: float = 1e-10) -> np.ndarray:
    """Recompute a vertex from the hyperplanes it lies on.

    ``facets`` holds at least ``p`` hyperplanes.  When they pin down a unique
    ordinary point it is returned; when they only fix a direction (all offsets
    vanish on a one-dimensional common null space of the normals), the
    corresponding ideal point is returned.
    """
    H = np.atleast_2d(np.asarray(facets, dtype=float))
    if H.shape[1] != p + 1:
        raise ValueError(f"hyperplanes must have {p + 1} coefficients")
    if H.shape[0] < p:
        raise SingularIncidence(f"need at least {p} facets, got {H.shape[0]}")
    H = H / np.max(np.abs(H), axis=1, keepdims=True)
    W, c = H[:, :-1], H[:, -1]
    s = np.linalg.svd(W, compute_uv=False)
    if s[-1] > rank_tol * s[0]:
        y, *_ = np.linalg.lstsq(W, -c, rcond=None)
        return ordinary(y)
    # singular normal system: look for a common ideal direction
    _, s_full, vt = np.linalg.svd(H)
    if int(np.sum(s_full > rank_tol * s_full[0])) != p:
        raise SingularIncidence("incident facets do not determine a unique point")
    null = vt[p]
    if abs(null[-1]) > rank_tol:
        raise SingularIncidence("incident facets do not determine a unique point")
    m = null[:-1]
    if m.sum() < 0:
        m = -m
    m[np.abs(m) < rank_tol] = 0.0
    try:
        return ideal(m)
    except ValueError:
        raise SingularIncidence("common direction is not a non-negative ray") from None
