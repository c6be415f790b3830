"""Hypothesis-driven properties over randomly generated sound nets."""

import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from pwnet.generate import random_sound_net
from pwnet.io import parse_native, render_native
from pwnet.mdp import MaxIdScheduler, expected_reward_under, mazurkiewicz_swap_check, run_sequence
from pwnet.net import enabled, fire, is_normalized
from pwnet.reduction import applicable_instances, apply_rule, parse_trace, reduce, replay
from pwnet.values import format_value, parse_value

seeds = st.integers(0, 10 ** 6)
rationals = st.fractions(min_value=0, max_value=50, max_denominator=60)


@given(seeds)
@settings(max_examples=150, deadline=None)
def test_reduction_equals_oracle(seed):
    net = random_sound_net(seed, max_places=8)
    out = reduce(net)
    assert out.expected_reward == expected_reward_under(net) == expected_reward_under(net, MaxIdScheduler())


@given(seeds, st.data())
@settings(max_examples=100, deadline=None)
def test_round_trip_with_arbitrary_labels(seed, data):
    net = random_sound_net(seed, max_places=8)
    labels = {t: (data.draw(rationals.filter(lambda q: q > 0)), data.draw(rationals)) for t in net.transitions}
    net = net.with_labels(weight={t: w for t, (w, _) in labels.items()},
                          reward={t: r for t, (_, r) in labels.items()})
    text = render_native(net)
    assert parse_native(text) == net
    assert render_native(parse_native(text)) == text


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_trace_replay_and_normalization(seed):
    net = random_sound_net(seed)
    out = reduce(net)
    current = out.trace.initial
    for step in out.trace.steps:
        current, done = apply_rule(current, step)
        assert done == step
        assert is_normalized(current)
    assert current == out.final
    assert replay(out.trace.initial, parse_trace(out.trace.to_text())) == out.final


@given(seeds, st.integers(0, 50))
@settings(max_examples=150, deadline=None)
def test_every_applicable_instance_preserves_reward(seed, pick):
    net = random_sound_net(seed, max_places=6)
    insts = applicable_instances(net)
    if not insts:
        return
    after, _ = apply_rule(net, insts[pick % len(insts)])
    assert is_normalized(after)
    assert expected_reward_under(after) == expected_reward_under(net)


@given(seeds)
@settings(max_examples=300, deadline=None)
def test_swapping_concurrent_neighbours(seed):
    rng = random.Random(seed)
    net = random_sound_net(seed, max_places=8)
    m, seq, markings = net.initial_marking, [], []
    for _ in range(rng.randint(2, 25)):
        options = enabled(net, m)
        if not options:
            break
        t = rng.choice(options)
        markings.append(m)
        seq.append(t)
        m = fire(net, m, t)
    for k in range(len(seq) - 1):
        a, b = seq[k], seq[k + 1]
        if net.pre[a] & net.pre[b] or not net.pre[b] <= markings[k]:
            continue
        verdict = mazurkiewicz_swap_check(net, seq, k)
        assert verdict.valid
        assert run_sequence(net, seq) == (verdict.marking, verdict.reward)


@given(st.fractions(min_value=0, max_value=10 ** 6, max_denominator=10 ** 6))
def test_value_text_round_trip(q):
    assert parse_value(format_value(q)) == q
    assert Fraction(format_value(q)) == q
