import csv
import io
from fractions import Fraction

import pytest

from pwnet.bench import (
    CSV_HEADER,
    BenchSpec,
    closed_form,
    generate_parallel_bench,
    ladder,
    rows_to_csv,
    run_bench,
)
from pwnet.mdp import build_mdp, check_soundness_explicit, expected_reward_minmax, expected_reward_under
from pwnet.net import is_free_choice, validate_structure
from pwnet.reduction import expected_reward, reduce


def test_two_process_example():
    spec = BenchSpec((Fraction(4, 5), Fraction(2, 3)), (Fraction(1), Fraction(2)))
    assert closed_form(spec) == Fraction(13, 15)
    assert expected_reward(generate_parallel_bench(spec)) == Fraction(13, 15)


def test_zero_rewards_give_zero():
    assert expected_reward(generate_parallel_bench(BenchSpec.uniform(1, Fraction(1, 2), 0))) == 0


def test_fork_and_join_rewards_add():
    spec = BenchSpec.uniform(3, Fraction(1, 4), 2, fork_reward=Fraction(1), join_reward=Fraction(1, 3))
    assert expected_reward(generate_parallel_bench(spec)) == closed_form(spec) == 1 + Fraction(1, 3) + 3 * Fraction(3, 4) * 2


def test_spec_invariants():
    with pytest.raises(ValueError):
        BenchSpec((Fraction(1),), (Fraction(0),))
    with pytest.raises(ValueError):
        BenchSpec((), ())
    with pytest.raises(ValueError):
        BenchSpec((Fraction(1, 2),), (Fraction(1), Fraction(2)))
    spec = BenchSpec.random(50, seed=3)
    assert all(p.denominator in (1, 2, 5, 10) and 0 < p < 1 for p in spec.probabilities)
    assert all(r.denominator == 1 and 0 <= r <= 10 for r in spec.rewards)
    assert BenchSpec.random(50, seed=3) == spec


def test_benchmark_nets_are_sound_and_match_oracle():
    for n in range(1, 11):
        spec = BenchSpec.random(n, seed=n)
        net = generate_parallel_bench(spec)
        assert validate_structure(net) == [] and is_free_choice(net)
        model = build_mdp(net)
        assert model.marking_count == 2 + 2 ** n and model.state_count >= 2 ** n
        if n <= 8:
            assert check_soundness_explicit(net)
            assert expected_reward_under(net) == closed_form(spec)
            assert expected_reward_minmax(net) == (closed_form(spec), closed_form(spec))


def test_rule_count_is_linear():
    for n in (10, 40, 160):
        out = reduce(generate_parallel_bench(BenchSpec.random(n)))
        assert out.steps <= 3 * n + 3


def test_ladder():
    assert ladder(1) == [1]
    assert ladder(500) == [1, 2, 4, 8, 16, 32, 64, 128, 256, 500]
    with pytest.raises(ValueError):
        ladder(0)


def test_run_bench_rows_and_csv():
    rows = run_bench(8, engines=("reduce", "oracle-chain", "oracle-minmax", "simulate"), sim_runs=50)
    assert {r.n for r in rows} == {1, 2, 4, 8}
    for n in (1, 2, 4, 8):
        exact = {r.expected_reward for r in rows if r.n == n and r.engine != "simulate"}
        assert exact == {str(closed_form(BenchSpec.random(n)))}
    text = rows_to_csv(rows)
    table = list(csv.reader(io.StringIO(text)))
    assert tuple(table[0]) == CSV_HEADER
    assert [row[:2] for row in table[1:5]] == [["1", "reduce"], ["1", "oracle-chain"],
                                               ["1", "oracle-minmax"], ["1", "simulate"]]
    again = list(csv.reader(io.StringIO(rows_to_csv(run_bench(8, sim_runs=50)))))
    strip = lambda t: [row[:3] + row[4:] for row in t]
    assert strip(again) == strip(table)


def test_engine_stops_after_cap():
    rows = run_bench(8, engines=("reduce", "oracle-chain"), cap=50)
    chain = {r.n: r.status for r in rows if r.engine == "oracle-chain"}
    assert chain[4] == "StateCapExceeded" and chain[8].startswith("skipped")
    assert all(r.status == "ok" for r in rows if r.engine == "reduce")
