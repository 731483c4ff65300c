"""Brute-force ground truth for small multiobjective LPs.

Every basic feasible solution of ``{Ax = b, x >= 0}`` is enumerated, pushed
through ``P``, and the images that are vertices of ``Q + R^p_+`` are kept.
This is exponential and only meant for desk-sized test instances.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from .errors import SizeGuardExceeded
from .sparse_lp import SparseMatrix

MAX_COLUMNS = 16
MAX_ROWS = 8


def _dense(M) -> np.ndarray:
    if isinstance(M, SparseMatrix):
        return M.dense
    return np.atleast_2d(np.asarray(M, dtype=float))


def _dedup(points, tol):
    out = []
    for pt in points:
        if not any(np.max(np.abs(pt - q)) <= tol for q in out):
            out.append(pt)
    return out


def enumerate_vertices(A, b, *, max_columns: int = MAX_COLUMNS, max_rows: int = MAX_ROWS,
                       tol: float = 1e-9) -> list[np.ndarray]:
    """All basic feasible solutions of ``Ax = b, x >= 0``."""
    A = _dense(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    m, n = A.shape
    if n > max_columns or m > max_rows:
        raise SizeGuardExceeded(f"{m}x{n} exceeds the {max_rows}x{max_columns} enumeration limit")
    if b.shape != (m,):
        raise ValueError("b does not match A")
    r = np.linalg.matrix_rank(A)
    if r == 0:
        return [np.zeros(n)] if np.allclose(b, 0) else []
    found = []
    for cols in itertools.combinations(range(n), r):
        sub = A[:, cols]
        if np.linalg.matrix_rank(sub) < r:
            continue
        xs, *_ = np.linalg.lstsq(sub, b, rcond=None)
        if np.max(np.abs(sub @ xs - b)) > 1e-9 * max(1.0, np.max(np.abs(b))):
            continue
        if np.min(xs) < -tol:
            continue
        x = np.zeros(n)
        x[list(cols)] = np.maximum(xs, 0.0)
        found.append(x)
    found = _dedup(found, tol)
    found.sort(key=lambda x: tuple(np.round(x, 7)))
    return found


def _dominated_by_hull(y, others, tol) -> bool:
    """Is some convex combination of ``others`` componentwise <= ``y``?"""
    if not others:
        return False
    Y = np.array(others).T          # p x k
    k = Y.shape[1]
    res = linprog(np.zeros(k), A_ub=Y, b_ub=y + tol, A_eq=np.ones((1, k)), b_eq=[1.0],
                  bounds=[(0, None)] * k, method="highs")
    return res.status == 0


def pareto_vertices(problem, *, tol: float = 1e-9, **guard) -> list[np.ndarray]:
    """Vertices of ``P{x >= 0 : Ax = b} + R^p_+``, sorted lexicographically."""
    P = _dense(problem.P)
    images = [P @ x for x in enumerate_vertices(problem.A, problem.b, **guard)]
    images = _dedup(images, tol)
    keep = []
    for i, y in enumerate(images):
        others = images[:i] + images[i + 1:]
        if not _dominated_by_hull(y, others, tol * max(1.0, float(np.max(np.abs(y))))):
            keep.append(y)
    keep.sort(key=lambda y: tuple(np.round(y, 7)))
    return keep


def is_antichain(points, tol: float = 1e-9) -> bool:
    for u, v in itertools.permutations(points, 2):
        if np.all(u <= v + tol) and np.any(u < v - tol):
            return False
    return True
