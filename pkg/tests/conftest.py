import numpy as np
import pytest

from benson_entropy import entropy_model as em
from benson_entropy.benson import MolpProblem, RunConfig, run

SMALLEST = "r=c:ab;s=r:ac;t=r:ad"


def random_molp(rng, n=None, m=None, p=3):
    """A random problem whose image lies in the non-negative orthant."""
    n = n or int(rng.integers(5, 13))
    m = m or int(rng.integers(1, 5))
    while True:
        A = rng.integers(0, 4, (m, n)).astype(float)
        if not (A == 0).all(axis=1).any():
            break
    b = A @ rng.uniform(0.0, 1.0, n)
    P = rng.integers(0, 4, (p, n)).astype(float)
    return MolpProblem.from_dense(A, b, P)


def signed_molp(rng, p=3, max_n=12, max_m=4):
    """Entries in {-3..3}, feasible by construction, resampled until Q lies in R^p_+."""
    from scipy.optimize import linprog
    while True:
        n = int(rng.integers(4, max_n + 1))
        m = int(rng.integers(1, max_m + 1))
        A = rng.integers(-3, 4, (m, n)).astype(float)
        if (A == 0).all(axis=1).any():
            continue
        b = A @ rng.integers(0, 3, n).astype(float)
        P = rng.integers(-3, 4, (p, n)).astype(float)
        ok = True
        for row in P:
            res = linprog(row, A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
            if res.status != 0 or res.fun < -1e-9:
                ok = False
                break
        if ok:
            return MolpProblem.from_dense(A, b, P)


def same_point_sets(a, b, tol=1e-6):
    if len(a) != len(b):
        return False
    pending = [np.asarray(v) for v in b]
    for u in a:
        hit = next((k for k, v in enumerate(pending) if np.max(np.abs(u - v)) <= tol), None)
        if hit is None:
            return False
        pending.pop(hit)
    return True


@pytest.fixture(scope="session")
def smallest_problem():
    return em.build_problem(SMALLEST)


@pytest.fixture(scope="session")
def smallest_solution(smallest_problem):
    return run(smallest_problem.problem, RunConfig(seed=0))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
