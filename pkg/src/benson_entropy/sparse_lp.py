"""Scalar LP solver for the ray-shooting problems of the Benson iteration.

Every LP solved by the outer approximation has the same block layout::

        x >= 0     lam (free)
    [   A      |     0     ]  =  b        (multipliers u)
    [   P      |     d     ]  <= q        (multipliers v)
    max: 0 ... 0      1

``solve`` returns the optimal ``lam``, a primal witness ``x`` and the dual
pair ``(u, v)`` of

    min  b.u + q.v   s.t.  A^T u + P^T v >= 0,  d.v = 1,  v >= 0,

which is exactly what is needed to write down a supporting hyperplane.

The solver is a dense two-phase revised simplex method working on an
explicit basis inverse.  The basis is saved every ``checkpoint_interval``
pivots and the inverse is recomputed from the original data; when the
recomputation reveals a problem (singular basis, lost primal feasibility or
too much drift) the state is rolled back to the last saved basis.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import NumericalFailure

log = logging.getLogger(__name__)


class SparseMatrix:
    """Immutable column-oriented sparse matrix.

    Entries are kept in compressed sparse column form; explicit zeros and
    duplicate ``(row, col)`` pairs are rejected at construction.
    """

    __slots__ = ("_csc", "__dict__")

    def __init__(self, rows: int, cols: int, entries: Iterable[tuple[int, int, float]]):
        entries = list(entries)
        seen = set()
        r_idx, c_idx, vals = [], [], []
        for r, c, v in entries:
            r, c = int(r), int(c)
            if not (0 <= r < rows and 0 <= c < cols):
                raise IndexError(f"entry ({r}, {c}) outside {rows}x{cols} matrix")
            if (r, c) in seen:
                raise ValueError(f"duplicate entry ({r}, {c})")
            if v == 0:
                raise ValueError(f"explicit zero stored at ({r}, {c})")
            seen.add((r, c))
            r_idx.append(r)
            c_idx.append(c)
            vals.append(float(v))
        self._csc = sp.csc_array(
            (np.asarray(vals, dtype=float), (np.asarray(r_idx, dtype=np.int64),
                                             np.asarray(c_idx, dtype=np.int64))),
            shape=(rows, cols),
        )
        self._csc.sort_indices()

    @classmethod
    def from_dense(cls, array) -> "SparseMatrix":
        array = np.atleast_2d(np.asarray(array, dtype=float))
        rows, cols = np.nonzero(array)
        return cls(array.shape[0], array.shape[1],
                   zip(rows.tolist(), cols.tolist(), array[rows, cols].tolist()))

    @property
    def rows(self) -> int:
        return self._csc.shape[0]

    @property
    def cols(self) -> int:
        return self._csc.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._csc.shape

    @property
    def nnz(self) -> int:
        return self._csc.nnz

    def column(self, j: int) -> list[tuple[int, float]]:
        """Return the stored ``(row, value)`` pairs of column ``j``."""
        start, stop = self._csc.indptr[j], self._csc.indptr[j + 1]
        return list(zip(self._csc.indices[start:stop].tolist(),
                        self._csc.data[start:stop].tolist()))

    def triplets(self) -> list[tuple[int, int, float]]:
        coo = self._csc.tocoo()
        order = np.lexsort((coo.row, coo.col))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order]

    @cached_property
    def dense(self) -> np.ndarray:
        out = self._csc.toarray()
        out.setflags(write=False)
        return out

    def to_scipy(self) -> sp.csc_array:
        return self._csc.copy()

    def __matmul__(self, other):
        return self._csc @ other

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


def write_triplets(stream, matrix: SparseMatrix) -> None:
    """Write ``matrix`` as a ``rows cols nnz`` header followed by triples."""
    stream.write(f"{matrix.rows} {matrix.cols} {matrix.nnz}\n")
    for r, c, v in matrix.triplets():
        stream.write(f"{r} {c} {v!r}\n")


def read_triplets(stream) -> SparseMatrix:
    """Inverse of :func:`write_triplets`; blank lines and ``#`` comments are skipped."""
    lines = (ln.split("#", 1)[0].strip() for ln in stream)
    lines = (ln for ln in lines if ln)
    try:
        header = next(lines)
    except StopIteration:
        raise ValueError("empty triplet stream") from None
    rows, cols, nnz = (int(t) for t in header.split())
    entries = []
    for _ in range(nnz):
        r, c, v = next(lines).split()
        entries.append((int(r), int(c), float(v)))
    return SparseMatrix(rows, cols, entries)


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used by the simplex solver."""

    pivot: float = 1e-9
    feasibility: float = 1e-7
    optimality: float = 1e-9
    duality_gap: float = 1e-6
    drift: float = 1e-6
    max_condition: float = 1e13


DEFAULT_TOLERANCES = Tolerances()

TOLERANCE_PROFILES = {
    "default": DEFAULT_TOLERANCES,
    "strict": Tolerances(pivot=1e-10, feasibility=1e-9, optimality=1e-10,
                         duality_gap=1e-8, drift=1e-8),
    "loose": Tolerances(pivot=1e-8, feasibility=1e-6, optimality=1e-8,
                        duality_gap=1e-5, drift=1e-5),
}


@dataclass(frozen=True)
class LpInstance:
    """The LP ``max lam : Ax = b, Px + lam*d <= q, x >= 0``."""

    A: SparseMatrix
    b: np.ndarray
    P: SparseMatrix
    q: np.ndarray
    d: np.ndarray

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def p(self) -> int:
        return self.P.rows

    @property
    def n(self) -> int:
        return self.A.cols


def build_instance(problem, q, d) -> LpInstance:
    """Assemble ``P(q, d)`` for ``problem`` (anything with ``A``, ``b`` and ``P``)."""
    q = np.asarray(q, dtype=float).reshape(-1)
    d = np.asarray(d, dtype=float).reshape(-1)
    p = problem.P.rows
    if q.shape != (p,) or d.shape != (p,):
        raise ValueError(f"q and d must have length {p}, got {q.shape} and {d.shape}")
    if not np.any(d):
        raise ValueError("direction d must be nonzero")
    b = np.asarray(problem.b, dtype=float).reshape(-1)
    if b.shape != (problem.A.rows,):
        raise ValueError("b does not match the row count of A")
    if problem.A.cols != problem.P.cols:
        raise ValueError("A and P must have the same number of columns")
    return LpInstance(problem.A, b, problem.P, q, d)


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    EARLY_FEASIBLE = "early-feasible-at-threshold"


@dataclass
class LpOutcome:
    status: LpStatus
    lambda_hat: float = float("nan")
    primal_x: Optional[np.ndarray] = None
    dual_u: Optional[np.ndarray] = None
    dual_v: Optional[np.ndarray] = None
    pivots: int = 0
    rollbacks: int = 0
    checkpoints: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass(frozen=True)
class Basis:
    """A saved simplex basis; enough to rebuild the solver state from the data."""

    indices: tuple[int, ...]
    iteration: int
    phase: int
    condition: float = float("nan")


@dataclass
class _Trace:
    pivots: list = field(default_factory=list)


class SimplexSolver:
    """Two-phase revised simplex for a single :class:`LpInstance`.

    ``fault_hook``, if given, is called as ``fault_hook(solver)`` after every
    pivot; it exists so that tests can corrupt the working inverse and watch
    the checkpoint logic recover.
    """

    def __init__(self, instance: LpInstance, *, tol: Tolerances = DEFAULT_TOLERANCES,
                 checkpoint_interval: int = 60, max_rollbacks: int = 3,
                 max_pivots: Optional[int] = None,
                 fault_hook: Optional[Callable[["SimplexSolver"], None]] = None,
                 record_pivots: bool = False, start_basis: Optional[Sequence[int]] = None,
                 phase1_lambda: bool = True):
        if checkpoint_interval < 1:
            raise ValueError("checkpoint_interval must be positive")
        self.inst = instance
        self.tol = tol
        self.K = checkpoint_interval
        self.max_rollbacks = max_rollbacks
        self.fault_hook = fault_hook
        m, p, n = instance.m, instance.p, instance.n
        self.m, self.p, self.n = m, p, n
        self.rows = m + p
        self.max_pivots = max_pivots if max_pivots is not None else 50 * (n + self.rows) + 1000

        A = instance.A.dense
        P = instance.P.dense
        b = instance.b.astype(float).copy()
        if np.any(instance.q < 0):
            raise ValueError("q must be componentwise non-negative")
        self.row_sign = np.where(b < 0, -1.0, 1.0)
        # columns: x (n) | lam+ | lam- | slacks (p) | artificials (m)
        self.col_lam = n
        self.col_slack = n + 2
        self.col_art = n + 2 + p
        ncols = self.col_art + m
        M = np.zeros((self.rows, ncols))
        M[:m, :n] = A * self.row_sign[:, None]
        M[m:, :n] = P
        M[m:, n] = instance.d
        M[m:, n + 1] = -instance.d
        M[m:, self.col_slack:self.col_art] = np.eye(p)
        M[:m, self.col_art:] = np.eye(m)
        self.M = M
        self.rhs = np.concatenate([b * self.row_sign, instance.q.astype(float)])
        self.scale = max(1.0, float(np.max(np.abs(self.rhs), initial=0.0)))
        self.ncols = ncols

        # artificials cover rows 0..m-1 and slacks rows m.., so B = I
        self.Binv = np.eye(self.rows)
        self.basis = np.concatenate([np.arange(self.col_art, ncols),
                                     np.arange(self.col_slack, self.col_art)])
        self.xB = self.rhs.copy()
        self.allowed = np.ones(ncols, dtype=bool)
        self.cost = np.zeros(ncols)
        self.phase = 1
        self.pivots = 0
        self.rollbacks_total = 0
        self._consecutive_rollbacks = 0
        self._careful_until = -1
        self.checkpoint_count = 0
        self.last_checkpoint: Optional[Basis] = None
        self.trace = _Trace() if record_pivots else None
        self.start_basis = start_basis
        self.phase1_lambda = phase1_lambda
        self.feasible_basis: Optional[tuple[int, ...]] = None
        self.warm_started = False

    # -- basic linear algebra -------------------------------------------------

    def _refactor(self, basis) -> tuple[np.ndarray, float]:
        B = self.M[:, basis]
        Binv = np.linalg.inv(B)
        cond = float(np.linalg.norm(B, 1) * np.linalg.norm(Binv, 1))
        return Binv, cond

    def checkpoint_and_refactor(self) -> Basis:
        """Save the current basis and rebuild the inverse from the original data.

        If the rebuilt state is inconsistent with the working state, the solver
        is rolled back to the previous checkpoint instead, and that basis is
        returned.
        """
        problem = None
        try:
            Binv, cond = self._refactor(self.basis)
        except np.linalg.LinAlgError:
            Binv, cond, problem = None, float("inf"), "singular basis"
        if problem is None and (not np.isfinite(cond) or cond > self.tol.max_condition):
            problem = f"ill-conditioned basis (cond={cond:.3g})"
        if problem is None:
            xB = Binv @ self.rhs
            feas = self.tol.feasibility * self.scale
            if np.min(xB, initial=0.0) < -feas:
                problem = f"lost primal feasibility (min x_B={np.min(xB):.3g})"
            elif np.max(np.abs(xB - self.xB), initial=0.0) > self.tol.drift * self.scale:
                problem = f"drift {np.max(np.abs(xB - self.xB)):.3g} in basic solution"
        if problem is not None:
            log.debug("checkpoint at pivot %d failed: %s", self.pivots, problem)
            self._rollback(problem)
            return self.last_checkpoint
        xB[np.abs(xB) < 1e-13 * self.scale] = 0.0
        self.Binv = Binv
        self.xB = np.maximum(xB, 0.0)
        self.last_checkpoint = Basis(tuple(int(i) for i in self.basis), self.pivots,
                                     self.phase, cond)
        self.checkpoint_count += 1
        self._consecutive_rollbacks = 0
        return self.last_checkpoint

    def _rollback(self, reason: str) -> None:
        self._consecutive_rollbacks += 1
        self.rollbacks_total += 1
        if self.last_checkpoint is None or self._consecutive_rollbacks > self.max_rollbacks:
            raise NumericalFailure(f"simplex could not recover: {reason}")
        basis = np.asarray(self.last_checkpoint.indices)
        Binv, cond = self._refactor(basis)
        self.basis = basis.copy()
        self.Binv = Binv
        self.xB = np.maximum(Binv @ self.rhs, 0.0)
        # refactor after every pivot for a while so errors cannot pile up again
        self._careful_until = self.pivots + self.K

    # -- pivoting -------------------------------------------------------------

    def _objective(self) -> float:
        return float(self.cost[self.basis] @ self.xB)

    def _reduced_costs(self) -> np.ndarray:
        y = self.cost[self.basis] @ self.Binv
        dj = self.cost - y @ self.M
        dj[self.basis] = 0.0
        dj[~self.allowed] = 0.0
        return dj

    def _choose_entering(self, dj: np.ndarray, bland: bool) -> int:
        tol = self.tol.optimality
        cand = np.flatnonzero(dj > tol)
        if cand.size == 0:
            return -1
        if bland:
            return int(cand[0])
        return int(cand[np.argmax(dj[cand])])

    def _ratio_test(self, alpha: np.ndarray, bland: bool) -> int:
        """Leaving row for entering column ``alpha``; -1 when unbounded.

        Ties at the minimum ratio are broken lexicographically on the rows of
        ``[x_B | B^-1]``, which rules out cycling on degenerate vertices.
        """
        big = float(np.max(np.abs(alpha), initial=0.0))
        pos = np.flatnonzero(alpha > max(self.tol.pivot, 1e-11 * big))
        if pos.size == 0:
            return -1
        a = alpha[pos]
        ratios = np.maximum(self.xB[pos], 0.0) / a
        theta = ratios.min()
        ties = np.flatnonzero(ratios <= theta + 1e-12 * max(1.0, theta) * self.scale)
        if ties.size > 1:
            lex = self.Binv[pos[ties]] / a[ties, None]
            grid = 1e-11 * np.maximum(1.0, np.abs(lex).max(axis=0))
            keys = np.round(lex / grid)
            cols = np.flatnonzero(keys.max(axis=0) != keys.min(axis=0))
            if cols.size:
                # np.lexsort treats its last key as the primary one
                first = np.lexsort(keys[:, cols[::-1]].T)[0]
                ties = ties[np.all(keys[:, cols] == keys[first, cols], axis=1)]
        if ties.size > 1:
            ties = ties[np.argmax(a[ties])]
        return int(pos[np.atleast_1d(ties)[0]])

    def _pivot(self, r: int, j: int, alpha: np.ndarray) -> None:
        theta = max(self.xB[r], 0.0) / alpha[r]
        self.xB -= theta * alpha
        self.xB[r] = theta
        self.xB[np.abs(self.xB) < 1e-14 * self.scale] = 0.0
        pivot_row = self.Binv[r] / alpha[r]
        self.Binv -= np.outer(alpha, pivot_row)
        self.Binv[r] = pivot_row
        if self.trace is not None:
            self.trace.pivots.append((self.phase, int(self.basis[r]), j))
        self.basis[r] = j
        self.pivots += 1
        if self.fault_hook is not None:
            self.fault_hook(self)
        if self.pivots <= self._careful_until or self.pivots % self.K == 0:
            self.checkpoint_and_refactor()

    def _run_phase(self, threshold: Optional[float] = None) -> LpStatus:
        """Pivot until optimal for the current cost; returns OPTIMAL/UNBOUNDED/EARLY."""
        confirmed = False
        while True:
            if threshold is not None and self.lam_value() >= threshold - self.tol.feasibility:
                return LpStatus.EARLY_FEASIBLE
            if self.pivots >= self.max_pivots:
                raise NumericalFailure(f"pivot limit {self.max_pivots} reached")
            bland = self.pivots < self._careful_until
            dj = self._reduced_costs()
            j = self._choose_entering(dj, bland)
            if j < 0:
                if confirmed:
                    return LpStatus.OPTIMAL
                # confirm optimality on a freshly factored basis
                before = self.rollbacks_total
                self.checkpoint_and_refactor()
                confirmed = self.rollbacks_total == before
                continue
            confirmed = False
            alpha = self.Binv @ self.M[:, j]
            r = self._ratio_test(alpha, bland)
            if r < 0:
                return LpStatus.UNBOUNDED
            self._pivot(r, j, alpha)

    def lam_value(self) -> float:
        val = 0.0
        for pos in np.flatnonzero(self.basis == self.col_lam):
            val += self.xB[pos]
        for pos in np.flatnonzero(self.basis == self.col_lam + 1):
            val -= self.xB[pos]
        return float(val)

    def _drive_out_artificials(self) -> None:
        nonart = self.allowed.copy()
        nonart[self.col_art:] = False
        for r in range(self.rows):
            if self.basis[r] < self.col_art:
                continue
            self.xB[r] = 0.0
            inbasis = np.zeros(self.ncols, dtype=bool)
            inbasis[self.basis] = True
            row = self.Binv[r] @ self.M
            row[~nonart | inbasis] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) <= 1e-7:
                continue  # redundant equality row; the artificial stays at zero
            alpha = self.Binv @ self.M[:, j]
            pivot_row = self.Binv[r] / alpha[r]
            self.Binv -= np.outer(alpha, pivot_row)
            self.Binv[r] = pivot_row
            self.basis[r] = j
            self.pivots += 1
        self.checkpoint_and_refactor()

    # -- driver ---------------------------------------------------------------

    def _warm_start(self, basis) -> bool:
        """Adopt a previously found feasible basis; False if it does not fit."""
        basis = np.asarray(basis, dtype=int)
        if basis.shape != (self.rows,) or len(set(basis.tolist())) != self.rows:
            return False
        try:
            Binv, cond = self._refactor(basis)
        except np.linalg.LinAlgError:
            return False
        if not np.isfinite(cond) or cond > self.tol.max_condition:
            return False
        xB = Binv @ self.rhs
        feas = self.tol.feasibility * self.scale
        if np.min(xB) < -feas or np.any(xB[basis >= self.col_art] > feas):
            return False
        self.basis, self.Binv = basis.copy(), Binv
        self.xB = np.maximum(xB, 0.0)
        self.last_checkpoint = Basis(tuple(int(i) for i in basis), 0, 1, cond)
        return True

    def solve(self, threshold: Optional[float] = None) -> LpOutcome:
        """Run both phases.

        A ``start_basis`` that is primal feasible replaces phase 1.  With
        ``phase1_lambda=False`` phase 1 keeps ``lam`` at zero, so the basis it
        finds (``feasible_basis``) does not depend on ``d`` and can be reused
        for every instance with the same ``q``.
        """
        self.warm_started = (self.start_basis is not None
                             and self._warm_start(self.start_basis))
        if not self.warm_started:
            self.checkpoint_and_refactor()
            # phase 1: maximise -sum(artificials)
            self.cost = np.zeros(self.ncols)
            self.cost[self.col_art:] = -1.0
            self.phase = 1
            if not self.phase1_lambda:
                self.allowed[self.col_lam:self.col_lam + 2] = False
            if self.m:
                status = self._run_phase()
                if status is LpStatus.UNBOUNDED:
                    raise NumericalFailure("phase 1 reported an unbounded ray")
                infeas = -self._objective()
                if infeas > self.tol.feasibility * self.scale:
                    return self._outcome(LpStatus.INFEASIBLE)
                self._drive_out_artificials()
            self.allowed[self.col_lam:self.col_lam + 2] = True
        self.feasible_basis = tuple(int(i) for i in self.basis)
        self.allowed[self.col_art:] = False
        # phase 2: maximise lam
        self.phase = 2
        self.cost = np.zeros(self.ncols)
        self.cost[self.col_lam] = 1.0
        self.cost[self.col_lam + 1] = -1.0
        self.last_checkpoint = None
        self._consecutive_rollbacks = 0
        self.checkpoint_and_refactor()
        status = self._run_phase(threshold)
        if status is LpStatus.UNBOUNDED and threshold is not None:
            status = LpStatus.EARLY_FEASIBLE
        return self._outcome(status)

    def primal(self) -> tuple[np.ndarray, float]:
        z = np.zeros(self.ncols)
        z[self.basis] = self.xB
        return z[:self.n].copy(), float(z[self.col_lam] - z[self.col_lam + 1])

    def _outcome(self, status: LpStatus) -> LpOutcome:
        out = LpOutcome(status, pivots=self.pivots, rollbacks=self.rollbacks_total,
                        checkpoints=self.checkpoint_count)
        if status is LpStatus.INFEASIBLE:
            return out
        x, lam = self.primal()
        out.primal_x = x
        out.lambda_hat = lam
        if status is LpStatus.OPTIMAL:
            y = self.cost[self.basis] @ self.Binv
            out.dual_u = y[:self.m] * self.row_sign
            out.dual_v = y[self.m:].copy()
        return out


def solve(instance: LpInstance, threshold: Optional[float] = None, *,
          tol: Tolerances = DEFAULT_TOLERANCES, checkpoint_interval: int = 60,
          max_rollbacks: int = 3, fault_hook=None) -> LpOutcome:
    """Solve ``P(q, d)``.

    With ``threshold`` set, the solver stops as soon as it holds a feasible
    point with ``lam >= threshold`` and reports ``EARLY_FEASIBLE``; no dual
    certificate is produced in that case.
    """
    solver = SimplexSolver(instance, tol=tol, checkpoint_interval=checkpoint_interval,
                           max_rollbacks=max_rollbacks, fault_hook=fault_hook)
    return solver.solve(threshold)


def certificate_residuals(instance: LpInstance, outcome: LpOutcome) -> dict[str, float]:
    """Primal/dual feasibility and duality-gap residuals of an optimal outcome."""
    A, P = instance.A.dense, instance.P.dense
    u, v, x, lam = outcome.dual_u, outcome.dual_v, outcome.primal_x, outcome.lambda_hat
    return {
        "gap": abs(instance.b @ u + instance.q @ v - lam),
        "dual_infeas": max(0.0, -float(np.min(A.T @ u + P.T @ v, initial=0.0))),
        "v_negative": max(0.0, -float(np.min(v, initial=0.0))),
        "dv_minus_1": abs(float(instance.d @ v) - 1.0),
        "primal_eq": float(np.max(np.abs(A @ x - instance.b), initial=0.0)),
        "primal_ineq": max(0.0, float(np.max(P @ x + lam * instance.d - instance.q, initial=0.0))),
        "x_negative": max(0.0, -float(np.min(x, initial=0.0))),
    }
