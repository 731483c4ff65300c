"""From copy strings to multiobjective LPs, and from vertices back to inequalities.

A copy string such as ``rs=cd:ab;t=(cr):ab;u=t:acs`` describes a sequence of
independent-copy steps.  Starting from the variables ``a, b, c, d``, step
``rs=cd:ab`` copies everything outside the over-set ``{a, b}`` independently
over ``{a, b}``, keeps the copies of ``c`` and ``d`` and names them ``r`` and
``s``.  A parenthesised item such as ``(cr)`` merges the copies of ``c`` and
``r`` into one new variable.

Entropies are indexed by bitmasks over the final variable pool.  Copy
symmetries identify coordinates; the conditional independence of each copy
becomes a linear equation that is used to eliminate one further coordinate.
The combining coefficients of the elemental Shannon inequalities are the
problem variables; all remaining coordinates that are not subsets of
``{a, b, c, d}`` must cancel.  The 15 surviving coefficients are rewritten
in the basis of Ingleton-type expressions given by :func:`unimodular_transform`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from .benson import MolpProblem
from .errors import (ArityMismatch, CopySyntaxError, DuplicateName, ReconstructionFailure,
                     UnknownVariable)
from .sparse_lp import SparseMatrix

ORIGINAL = "abcd"
MAX_POOL = 24

#: Column order of the unimodular matrix: all nonempty subsets of abcd.
SUBSET_ORDER = ("a", "b", "c", "d", "ab", "ac", "ad", "bc", "bd", "cd",
                "abc", "abd", "acd", "bcd", "abcd")

# Rows: Ingleton, I(a,b|c), I(a,b|d), I(a,c|b), I(b,c|a), I(a,d|b), I(b,d|a),
# I(c,d|a), I(c,d|b), I(c,d), I(a,b|cd), then four H(x|rest) rows.
_U = (
    (-1, -1, 0, 0, 1, 1, 1, 1, 1, -1, -1, -1, 0, 0, 0),
    (0, 0, -1, 0, 0, 1, 0, 1, 0, 0, -1, 0, 0, 0, 0),
    (0, 0, 0, -1, 0, 0, 1, 0, 1, 0, 0, -1, 0, 0, 0),
    (0, -1, 0, 0, 1, 0, 0, 1, 0, 0, -1, 0, 0, 0, 0),
    (-1, 0, 0, 0, 1, 1, 0, 0, 0, 0, -1, 0, 0, 0, 0),
    (0, -1, 0, 0, 1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0),
    (-1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1, 0, 0, 0),
    (-1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, -1, 0, 0),
    (0, -1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, -1, 0),
    (0, 0, 1, 1, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0, 0),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 1, -1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1),
    (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 0, 1),
)

OBJECTIVE_NAMES = ("I(a,b|c)", "I(a,b|d)", "I(a,c|b)", "I(b,c|a)", "I(a,d|b)",
                   "I(b,d|a)", "I(c,d|a)", "I(c,d|b)", "I(c,d)", "I(a,b|cd)")
INGLETON_ROW = 0
OBJECTIVE_ROWS = tuple(range(1, 11))
Z_ROWS = (11, 12, 13, 14)


def unimodular_transform() -> np.ndarray:
    """The 15x15 integer matrix whose rows are the new entropy coordinates."""
    return np.array(_U, dtype=np.int64)


def _subset_mask(name: str) -> int:
    return sum(1 << ORIGINAL.index(ch) for ch in name)


ORIGINAL_MASKS = tuple(_subset_mask(s) for s in SUBSET_ORDER)


def _exact_inverse(M) -> list[list[Fraction]]:
    n = len(M)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(M)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def coordinates_from_coefficients() -> np.ndarray:
    """Integer matrix ``U^{-T}``: entropy coefficients -> Ingleton-basis coordinates.

    An inequality ``sum_S c_S H(S) >= 0`` equals ``sum_k y_k (row k of U) >= 0``
    exactly when ``c = U^T y``.
    """
    inv = _exact_inverse(_U)
    out = np.array([[inv[j][i] for j in range(15)] for i in range(15)], dtype=object)
    assert all(v.denominator == 1 for v in out.flat)
    return out.astype(np.int64)


# -- copy strings -----------------------------------------------------------


@dataclass(frozen=True)
class CopyStep:
    targets: tuple[str, ...]
    items: tuple[tuple[str, ...], ...]
    over: tuple[str, ...]

    def __str__(self):
        items = "".join(it[0] if len(it) == 1 else "(" + "".join(it) + ")" for it in self.items)
        return f"{''.join(self.targets)}={items}:{''.join(self.over)}"


@dataclass(frozen=True)
class CopyProgram:
    steps: tuple[CopyStep, ...]

    @property
    def text(self) -> str:
        return ";".join(str(s) for s in self.steps)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(ORIGINAL) + tuple(t for s in self.steps for t in s.targets)

    def __str__(self):
        return self.text


def parse(text: str) -> CopyProgram:
    """Parse and validate a copy string.

    Grammar (no whitespace)::

        program := step (';' step)*
        step    := letters '=' item+ ':' letters
        item    := letter | '(' letter+ ')'
    """
    s = text.strip()
    pos = 0

    def error(cls, msg, at):
        raise cls(msg, at, s)

    def letters(what):
        nonlocal pos
        start = pos
        while pos < len(s) and s[pos].isascii() and s[pos].isalpha() and s[pos].islower():
            pos += 1
        if pos == start:
            error(CopySyntaxError, f"expected {what}", pos)
        return [(s[k], k) for k in range(start, pos)]

    def expect(ch):
        nonlocal pos
        if pos >= len(s) or s[pos] != ch:
            found = repr(s[pos]) if pos < len(s) else "end of input"
            error(CopySyntaxError, f"expected {ch!r}, found {found}", pos)
        pos += 1

    pool = list(ORIGINAL)
    steps = []
    if not s:
        error(CopySyntaxError, "empty copy string", 0)
    while True:
        targets = letters("new variable names")
        expect("=")
        items = []
        while pos < len(s) and s[pos] != ":":
            if s[pos] == "(":
                pos += 1
                group = letters("variables inside parentheses")
                expect(")")
                items.append(group)
            elif s[pos].isalpha():
                items.append([(s[pos], pos)])
                pos += 1
            else:
                error(CopySyntaxError, f"unexpected character {s[pos]!r}", pos)
        if not items:
            error(CopySyntaxError, "expected variables to copy", pos)
        expect(":")
        over = letters("over-set")
        if len(targets) != len(items):
            error(ArityMismatch,
                  f"{len(targets)} new names for {len(items)} copied items", targets[0][1])
        over_names = set()
        for ch, k in over:
            if ch not in pool:
                error(UnknownVariable, f"unknown variable {ch!r}", k)
            if ch in over_names:
                error(DuplicateName, f"variable {ch!r} repeated in over-set", k)
            over_names.add(ch)
        used = set()
        for group in items:
            for ch, k in group:
                if ch not in pool:
                    error(UnknownVariable, f"unknown variable {ch!r}", k)
                if ch in over_names:
                    error(DuplicateName, f"variable {ch!r} is both copied and in the over-set", k)
                if ch in used:
                    error(DuplicateName, f"variable {ch!r} copied twice", k)
                used.add(ch)
        fresh = set()
        for ch, k in targets:
            if ch in pool or ch in fresh:
                error(DuplicateName, f"name {ch!r} is already in use", k)
            fresh.add(ch)
        pool.extend(ch for ch, _ in targets)
        if len(pool) > MAX_POOL:
            error(CopySyntaxError, f"more than {MAX_POOL} variables", pos)
        steps.append(CopyStep(tuple(ch for ch, _ in targets),
                              tuple(tuple(ch for ch, _ in g) for g in items),
                              tuple(ch for ch, _ in over)))
        if pos == len(s):
            break
        expect(";")
    return CopyProgram(tuple(steps))


# -- entropy coordinates ----------------------------------------------------


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def elemental_inequalities(n_vars: int) -> list[dict[int, int]]:
    """Minimal monotone/submodular inequalities ``expr >= 0`` over ``n_vars`` variables.

    Each row maps subset bitmasks to coefficients; the empty set is omitted.
    """
    if n_vars < 2:
        raise ValueError("need at least two variables")
    full = (1 << n_vars) - 1
    rows = []
    for i in range(n_vars):
        rows.append({full: 1, full & ~(1 << i): -1})
    for i, j in itertools.combinations(range(n_vars), 2):
        rest = full & ~(1 << i) & ~(1 << j)
        for K in _submasks(rest):
            row = {K | 1 << i: 1, K | 1 << j: 1, K | 1 << i | 1 << j: -1}
            if K:
                row[K] = -1
            rows.append(row)
    return rows


@dataclass
class CopyEquations:
    identifications: list[tuple[int, int]]
    independence: list[dict[int, int]]


def copy_equations(program: CopyProgram) -> CopyEquations:
    """Symmetry identifications and independence equations of every copy step.

    In a step with over-set ``J`` the copied set is ``I = pool - J``.  For
    unions ``A``, ``B`` of retained groups and ``C`` within ``J``:
    ``H(A' B C) = H(B' A C)``.  For a union ``A`` of retained groups and any
    ``B`` within ``I``: ``H(A' B J) = H(A' J) + H(B J) - H(J)``.
    """
    pool = list(ORIGINAL)
    idents, indep = [], []
    for step in program.steps:
        index = {v: k for k, v in enumerate(pool)}
        everything = (1 << len(pool)) - 1
        J = sum(1 << index[v] for v in step.over)
        I = everything & ~J
        groups = []
        for name, item in zip(step.targets, step.items):
            src = sum(1 << index[v] for v in item)
            pool.append(name)
            groups.append((1 << (len(pool) - 1), src))
        unions = []
        for S in range(1 << len(groups)):
            tmask = smask = 0
            for g, (t, src) in enumerate(groups):
                if S >> g & 1:
                    tmask |= t
                    smask |= src
            unions.append((tmask, smask))
        for (t1, s1), (t2, s2) in itertools.product(unions, repeat=2):
            for C in _submasks(J):
                lhs, rhs = t1 | s2 | C, t2 | s1 | C
                if lhs != rhs and lhs and rhs:
                    idents.append((lhs, rhs))
        for t, _ in unions[1:]:
            for B in _submasks(I):
                if B:
                    eq = {}
                    for mask, c in ((t | B | J, 1), (t | J, -1), (B | J, -1), (J, 1)):
                        if mask:
                            eq[mask] = eq.get(mask, 0) + c
                    indep.append({k: v for k, v in eq.items() if v})
    return CopyEquations(idents, indep)


@dataclass
class CoordinateSpace:
    """Entropy coordinates of the final pool modulo the copy identifications."""

    names: tuple[str, ...]
    rep: list[int]                      # subset mask -> class representative
    classes: dict[int, list[int]]       # representative -> members
    original_index: dict[int, int]      # representative -> position in SUBSET_ORDER
    eliminated: dict[int, dict[int, Fraction]] = field(default_factory=dict)
    rows: list[int] = field(default_factory=list)   # representatives kept as A rows

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def label(self, mask: int) -> str:
        return "".join(self.names[k] for k in range(self.n_vars) if mask >> k & 1)

    def project(self, row: dict[int, int]) -> dict[int, Fraction]:
        """Map a subset-indexed linear form onto class representatives."""
        out: dict[int, Fraction] = {}
        for mask, c in row.items():
            if mask == 0:
                continue
            r = self.rep[mask]
            out[r] = out.get(r, 0) + Fraction(c)
        return {k: v for k, v in out.items() if v}

    def reduce(self, form: dict[int, Fraction]) -> dict[int, Fraction]:
        """Substitute eliminated coordinates by their expressions."""
        out = dict(form)
        for k in [k for k in out if k in self.eliminated]:
            c = out.pop(k)
            for kk, cc in self.eliminated[k].items():
                out[kk] = out.get(kk, 0) + c * cc
        return {k: v for k, v in out.items() if v}


def _coordinate_space(program: CopyProgram, eqs: CopyEquations) -> CoordinateSpace:
    names = program.variables
    full = (1 << len(names)) - 1
    parent = list(range(full + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in eqs.identifications:
        ra, rb = find(a), find(b)
        if ra != rb:
            # the smallest mask represents its class, so original subsets
            # (bits 0-3 only) always represent theirs
            if rb < ra:
                ra, rb = rb, ra
            if ra & ~0b1111 == 0 and rb & ~0b1111 == 0:
                raise AssertionError("copy symmetry merged two original subsets")
            parent[rb] = ra
    rep = [0] + [find(s) for s in range(1, full + 1)]
    classes: dict[int, list[int]] = {}
    for s in range(1, full + 1):
        classes.setdefault(rep[s], []).append(s)
    original_index = {rep[m]: k for k, m in enumerate(ORIGINAL_MASKS)}
    if len(original_index) != 15:
        raise AssertionError("original subsets are not in distinct classes")
    return CoordinateSpace(names, rep, classes, original_index)


def _eliminate(space: CoordinateSpace, equations) -> list[dict[int, Fraction]]:
    """Use equations to eliminate non-original coordinates; return leftovers."""
    leftover = []
    for eq in equations:
        form = space.reduce(space.project(eq))
        if not form:
            continue
        cands = [k for k in form if k not in space.original_index]
        if not cands:
            leftover.append(form)
            continue
        piv = max(cands, key=lambda k: (k.bit_count(), k))
        c = form.pop(piv)
        expr = {k: -v / c for k, v in form.items()}
        for other, e in space.eliminated.items():
            if piv in e:
                cp = e.pop(piv)
                for k, v in expr.items():
                    e[k] = e.get(k, 0) + cp * v
                space.eliminated[other] = {k: v for k, v in e.items() if v}
        space.eliminated[piv] = expr
    return leftover


@dataclass
class EntropyProblem:
    """A copy string turned into a :class:`MolpProblem` plus bookkeeping."""

    program: CopyProgram
    problem: MolpProblem
    space: CoordinateSpace
    columns: list[dict[int, Fraction]]      # reduced coordinate forms, one per column
    column_kind: list[str]                  # "shannon" or "equation"
    entropy_coefficients: np.ndarray        # 15 x n, original entropy coefficients

    @property
    def size(self) -> tuple[int, int]:
        """``(columns, rows)`` of ``A``."""
        return self.problem.n, self.problem.m


def build_problem(program, independence: str = "eliminate",
                  dedup: bool = True) -> EntropyProblem:
    """Generate the multiobjective LP of a copy program.

    ``independence="eliminate"`` uses each independence equation to remove a
    coordinate; ``"columns"`` keeps every non-original class as a row and
    adds each equation as a pair of opposite columns instead.  Both describe
    the same polytope.
    """
    if isinstance(program, str):
        program = parse(program)
    if independence not in ("eliminate", "columns"):
        raise ValueError("independence must be 'eliminate' or 'columns'")
    eqs = copy_equations(program)
    space = _coordinate_space(program, eqs)

    forms: list[dict[int, Fraction]] = []
    kinds: list[str] = []
    if independence == "eliminate":
        leftover = _eliminate(space, eqs.independence)
        equation_forms = leftover
    else:
        equation_forms = [space.project(e) for e in eqs.independence]
    for row in elemental_inequalities(space.n_vars):
        form = space.reduce(space.project(row))
        if form:
            forms.append(form)
            kinds.append("shannon")
    for form in equation_forms:
        if form:
            forms.append(form)
            kinds.append("equation")
            forms.append({k: -v for k, v in form.items()})
            kinds.append("equation")
    if dedup:
        seen = {}
        for form, kind in zip(forms, kinds):
            key = tuple(sorted(form.items()))
            seen.setdefault(key, (form, kind))
        forms = [f for f, _ in seen.values()]
        kinds = [k for _, k in seen.values()]

    space.rows = sorted((r for r in space.classes
                         if r not in space.original_index and r not in space.eliminated),
                        key=lambda r: (r.bit_count(), r))
    row_index = {r: k for k, r in enumerate(space.rows)}
    n = len(forms)
    n_aux = len(space.rows)
    coef = np.zeros((15, n), dtype=object)
    coef[:] = Fraction(0)
    aux_entries = []
    for j, form in enumerate(forms):
        for k, v in form.items():
            if k in row_index:
                aux_entries.append((row_index[k], j, v))
            else:
                coef[space.original_index[k], j] += v
    T = coordinates_from_coefficients()
    Y = np.array([[sum((int(T[i, k]) * coef[k, j] for k in range(15)), Fraction(0))
                   for j in range(n)] for i in range(15)], dtype=object)

    entries = [(r, c, float(v)) for r, c, v in aux_entries]
    for k, zr in enumerate(Z_ROWS):
        entries += [(n_aux + k, j, float(Y[zr, j])) for j in range(n) if Y[zr, j] != 0]
    ing = n_aux + len(Z_ROWS)
    entries += [(ing, j, float(Y[INGLETON_ROW, j])) for j in range(n) if Y[INGLETON_ROW, j] != 0]
    A = SparseMatrix(ing + 1, n, entries)
    b = np.zeros(ing + 1)
    b[ing] = 1.0
    P = SparseMatrix(10, n, [(i, j, float(Y[r, j])) for i, r in enumerate(OBJECTIVE_ROWS)
                             for j in range(n) if Y[r, j] != 0])
    return EntropyProblem(program, MolpProblem(A, b, P), space, forms, kinds,
                          coef.astype(float))


# -- inequalities -----------------------------------------------------------


def reconstruct(x: float, bound: int = 1 << 16, tol: float = 1e-6) -> Fraction:
    """Best rational approximation of ``x`` with denominator at most ``bound``."""
    f = Fraction(x).limit_denominator(bound)
    if abs(float(f) - x) > tol:
        raise ReconstructionFailure(f"{x!r} has no approximant with denominator <= {bound}")
    return f


@dataclass(frozen=True)
class EntropyInequality:
    """``c0 * Ingleton + c1 I(a,b|c) + ... + c8 I(c,d|b) [+ c9 I(c,d) + c10 I(a,b|cd)] >= 0``."""

    coefficients: tuple[int, ...]
    raw: tuple[Fraction, ...]
    copy_string: str = ""
    full: bool = False

    def basis_coordinates(self) -> np.ndarray:
        """All 15 Ingleton-basis coordinates (the four trailing ones are zero)."""
        y = np.zeros(15, dtype=np.int64)
        y[: len(self.coefficients)] = self.coefficients
        return y

    def entropy_coefficients(self) -> np.ndarray:
        """Integer coefficients of ``H(a), H(b), ..., H(abcd)`` (``SUBSET_ORDER``)."""
        return unimodular_transform().T @ self.basis_coordinates()

    def objective_point(self) -> np.ndarray:
        """The point of the objective space this inequality came from (Ingleton = 1)."""
        y = np.zeros(10)
        c = self.coefficients
        y[: len(c) - 1] = np.array(c[1:], dtype=float) / c[0]
        return y

    def evaluate(self, entropies) -> float:
        return float(self.entropy_coefficients() @ np.asarray(entropies, dtype=float))

    def to_line(self) -> str:
        body = " ".join(str(c) for c in self.coefficients)
        prefix = "FULL " if self.full else ""
        suffix = f"  # {self.copy_string}" if self.copy_string else ""
        return f"{prefix}{body}{suffix}"

    @classmethod
    def from_line(cls, line: str) -> "EntropyInequality":
        body, _, comment = line.partition("#")
        tokens = body.split()
        full = bool(tokens) and tokens[0] == "FULL"
        if full:
            tokens = tokens[1:]
        coeffs = tuple(int(t) for t in tokens)
        if len(coeffs) != (11 if full else 9):
            raise ValueError(f"expected {11 if full else 9} coefficients, got {len(coeffs)}")
        if coeffs[0] <= 0:
            raise ValueError("the Ingleton coefficient must be positive")
        raw = tuple(Fraction(c, coeffs[0]) for c in coeffs[1:])
        raw = raw + (Fraction(0),) * (10 - len(raw))
        return cls(coeffs, raw, comment.strip(), full)


def format_inequality(vertex, denominator_bound: int = 1 << 16, copy_string: str = "",
                      tol: float = 1e-6) -> EntropyInequality:
    """Turn an extremal vertex (10 coordinates, Ingleton fixed to 1) into integers."""
    vertex = np.asarray(vertex, dtype=float).reshape(-1)
    if vertex.shape != (10,):
        raise ValueError("a vertex has 10 coordinates")
    raw = tuple(reconstruct(float(v), denominator_bound, tol) for v in vertex)
    lcm = reduce(math.lcm, (f.denominator for f in raw), 1)
    ints = [lcm] + [int(f * lcm) for f in raw]
    g = reduce(math.gcd, ints)
    ints = [v // g for v in ints]
    full = ints[9] != 0 or ints[10] != 0
    coeffs = tuple(ints) if full else tuple(ints[:9])
    return EntropyInequality(coeffs, raw, copy_string, full)


def entropy_vector(pmf) -> np.ndarray:
    """Entropies (in bits) of the 15 nonempty marginals of a 4-variable pmf.

    ``pmf`` is an array with four axes; the result follows ``SUBSET_ORDER``.
    """
    pmf = np.asarray(pmf, dtype=float)
    if pmf.ndim != 4:
        raise ValueError("expected a joint distribution of four variables")
    pmf = pmf / pmf.sum()
    out = np.empty(15)
    for k, name in enumerate(SUBSET_ORDER):
        drop = tuple(i for i, ch in enumerate(ORIGINAL) if ch not in name)
        marg = pmf.sum(axis=drop) if drop else pmf
        pz = marg[marg > 0]
        out[k] = -float(np.sum(pz * np.log2(pz)))
    return out
