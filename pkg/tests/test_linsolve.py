from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwnet.linsolve import SingularSystem, gauss_solve, solve_fixed_point, strongly_connected_components


@given(st.integers(1, 25).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=60))))
@settings(max_examples=200, deadline=None)
def test_scc_matches_networkx(case):
    n, edges = case
    succ = [[] for _ in range(n)]
    for a, b in edges:
        succ[a].append(b)
    ours = strongly_connected_components(n, succ)
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    assert sorted(map(sorted, ours)) == sorted(map(sorted, nx.strongly_connected_components(g)))
    # sinks first: no edge from an earlier component into a later one
    order = {v: k for k, comp in enumerate(ours) for v in comp}
    assert all(order[a] >= order[b] for a, b in edges)


def test_gauss_matches_numpy():
    a = [[Fraction(2), Fraction(1), Fraction(-1)], [Fraction(-3), Fraction(-1), Fraction(2)],
         [Fraction(-2), Fraction(1), Fraction(2)]]
    b = [Fraction(8), Fraction(-11), Fraction(-3)]
    x = gauss_solve(a, b)
    assert x == [2, 3, -1]
    assert np.allclose(np.linalg.solve(np.array(a, float), np.array(b, float)), [float(v) for v in x])


def test_gauss_singular():
    with pytest.raises(SingularSystem):
        gauss_solve([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]], [Fraction(1), Fraction(2)])


def test_geometric_loop():
    # x0 = 1 + 1/2 x0  ->  x0 = 2
    sol = solve_fixed_point([Fraction(1)], [{0: Fraction(1, 2)}])
    assert sol.values == [2] and not sol.approximate


def test_two_state_cycle_exact_and_float_agree():
    consts = [Fraction(1), Fraction(1)]
    rows = [{1: Fraction(1)}, {0: Fraction(1, 3)}]
    exact = solve_fixed_point(consts, rows)
    assert exact.values == [3, 2]
    approx = solve_fixed_point(consts, rows, exact_limit=1)
    assert approx.approximate
    assert [float(v) for v in approx.values] == pytest.approx([3.0, 2.0])


def test_absorbing_self_loop_is_singular():
    with pytest.raises(SingularSystem):
        solve_fixed_point([Fraction(1)], [{0: Fraction(1)}])
