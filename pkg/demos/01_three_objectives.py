"""
A three-objective LP, step by step
==================================

The outer approximation starts from the ideal simplex (the origin plus the
three directions of the axes) and cuts it down, one supporting hyperplane at a
time, until every vertex it still has is a point of Q + R^3_+.
"""

import numpy as np

from benson_entropy import MolpProblem, RunConfig, run
from benson_entropy.oracle import pareto_vertices

# x >= 0 with x1 + ... + x6 = 2 and x1 + x2 - x6 = 1; images y = P x
A = [[1, 1, 1, 1, 1, 1],
     [1, 1, 0, 0, 0, -1]]
b = [2, 1]
P = [[1, 0, 2, 1, 0, 3],
     [0, 2, 1, 0, 1, 1],
     [2, 1, 0, 3, 1, 0]]
problem = MolpProblem.from_dense(A, b, P)

# the observer sees the outer polytope after every cut
history = []


def watch(poly):
    history.append((poly.num_vertices, poly.num_facets))


sol = run(problem, RunConfig(seed=1), observer=watch)

print("cut  vertices  hyperplanes")
for k, (v, f) in enumerate(history, start=1):
    print(f"{k:3d}  {v:8d}  {f:11d}")

print("\nextremal vertices of Q:")
for y, x in zip(sol.extremal_vertices, sol.witnesses):
    print("  y =", np.round(y, 6), "  from x =", np.round(x, 6))

print("\nfacets w.y >= c of Q+ (w scaled to max 1):")
for h in sol.facets:
    print("  w =", np.round(h[:-1], 4), " c =", round(-h[-1], 4) + 0.0)

# the brute-force oracle enumerates every basic solution instead
truth = pareto_vertices(problem)
same = len(truth) == len(sol.extremal_vertices) and all(
    np.allclose(u, v) for u, v in zip(truth, sol.extremal_vertices))
print("\nagrees with brute force:", same)
print(f"{sol.stats.iterations} iterations, {sol.stats.lp_solves} LPs, "
      f"{sol.stats.lp_pivots} simplex pivots")
