"""Exact solution of ``x = c + P x`` for absorbing Markov chains.

The system is split into strongly connected components and solved in
reverse topological order: singleton components by substitution, larger
ones by Gaussian elimination over Fractions. Components larger than
``exact_limit`` fall back to a float solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np


class SingularSystem(ArithmeticError):
    pass


@dataclass
class Solution:
    values: list[Fraction]
    approximate: bool = False


def strongly_connected_components(n: int, succ: Sequence[Sequence[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative. Components come out sinks first."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            edges = succ[v]
            if i < len(edges):
                work[-1] = (v, i + 1)
                w = edges[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def gauss_solve(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Solve ``a x = b`` exactly with partial (first non-zero) pivoting."""
    n = len(b)
    m = [row[:] + [b[k]] for k, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise SingularSystem("matrix is singular")
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
        prow = m[col]
        inv = 1 / prow[col]
        for r in range(col + 1, n):
            f = m[r][col]
            if f:
                f *= inv
                row = m[r]
                for c in range(col, n + 1):
                    if prow[c]:
                        row[c] -= f * prow[c]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        row = m[r]
        acc = row[n]
        for c in range(r + 1, n):
            if row[c]:
                acc -= row[c] * x[c]
        x[r] = acc / row[r]
    return x


def solve_fixed_point(
    consts: Sequence[Fraction],
    rows: Sequence[Mapping[int, Fraction]],
    exact_limit: int = 2000,
) -> Solution:
    """Solve ``x[k] = consts[k] + sum_j rows[k][j] * x[j]``.

    The chain must be absorbing (every component eventually leaks
    probability), otherwise the system is singular.
    """
    n = len(consts)
    succ = [list(r.keys()) for r in rows]
    x: list[Fraction | None] = [None] * n
    approximate = False
    for comp in strongly_connected_components(n, succ):
        if len(comp) == 1:
            k = comp[0]
            row = rows[k]
            acc = Fraction(consts[k])
            self_p = Fraction(0)
            for j, p in row.items():
                if j == k:
                    self_p += p
                else:
                    acc += p * x[j]
            if self_p:
                if self_p == 1:
                    raise SingularSystem(f"state {k} is absorbing")
                acc /= 1 - self_p
            x[k] = acc
            continue
        pos = {k: i for i, k in enumerate(comp)}
        size = len(comp)
        if size > exact_limit:
            approximate = True
            _float_block(comp, pos, consts, rows, x)
            continue
        a = [[Fraction(0)] * size for _ in range(size)]
        b = [Fraction(0)] * size
        for i, k in enumerate(comp):
            a[i][i] += 1
            b[i] = Fraction(consts[k])
            for j, p in rows[k].items():
                if j in pos:
                    a[i][pos[j]] -= p
                else:
                    b[i] += p * x[j]
        for k, v in zip(comp, gauss_solve(a, b)):
            x[k] = v
    return Solution(x, approximate)


def _float_block(comp, pos, consts, rows, x) -> None:
    size = len(comp)
    a = np.eye(size)
    b = np.zeros(size)
    for i, k in enumerate(comp):
        b[i] = float(consts[k])
        for j, p in rows[k].items():
            if j in pos:
                a[i, pos[j]] -= float(p)
            else:
                b[i] += float(p) * float(x[j])
    sol = np.linalg.solve(a, b)
    residual = np.max(np.abs(a @ sol - b)) if size else 0.0
    if residual >= 1e-12 * max(1.0, float(np.max(np.abs(b)))):
        sol = sol + np.linalg.solve(a, b - a @ sol)
    for k, v in zip(comp, sol):
        x[k] = Fraction(float(v))
