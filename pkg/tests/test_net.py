from fractions import Fraction

import pytest

import sample_nets
from pwnet.errors import NotEnabled, NotFreeChoice, UnsafeFiring
from pwnet.net import (
    WorkflowNet,
    as_fraction,
    clusters,
    conflict_set,
    enabled,
    fire,
    id_key,
    is_free_choice,
    is_normalized,
    normalize_weights,
    sort_ids,
    validate_structure,
)


def _single():
    return WorkflowNet.build([], {"t": (1, 1)}, [("i", "t"), ("t", "o")])


def test_natural_id_order():
    assert sort_ids(["t10", "t2", "t10#1", "t1"]) == ("t1", "t2", "t10", "t10#1")
    assert id_key("p2") < id_key("p10")


def test_labels_must_be_exact():
    assert as_fraction("2/5") == Fraction(2, 5)
    with pytest.raises(TypeError):
        as_fraction(0.4)
    with pytest.raises(TypeError):
        as_fraction(True)


def test_build_adds_initial_and_final():
    net = _single()
    assert net.places == {"i", "o"}
    assert validate_structure(net) == []


def test_build_rejects_place_to_place_arc():
    with pytest.raises(ValueError):
        WorkflowNet.build(["p"], {"t": (1, 1)}, [("i", "p")])


def test_violations_are_listed():
    net = WorkflowNet.build(["p"], {"t": (1, 1), "u": (1, 1)},
                            [("i", "t"), ("t", "o"), ("u", "i"), ("p", "u")])
    rules = {v.rule for v in validate_structure(net)}
    assert "initial place has incoming arc" in rules
    assert "not strongly connected after adding (o,i)" in rules


def test_bad_labels_are_violations():
    net = _single().with_labels(weight={"t": 0}, reward={"t": -1})
    rules = {v.rule for v in validate_structure(net)}
    assert rules == {"weight is not strictly positive", "reward is negative"}


def test_token_game_on_fig2():
    net = sample_nets.fig2()
    m = net.initial_marking
    assert enabled(net, m) == ("t1", "t2")
    m = fire(net, m, "t2")
    assert m == {"p2", "p3"}
    assert enabled(net, m) == ("t3", "t4")
    with pytest.raises(NotEnabled):
        fire(net, m, "t7")


def test_unsafe_firing_detected():
    net = sample_nets.fig2()
    with pytest.raises(UnsafeFiring):
        fire(net, {"p4", "p5", "p2"}, "t5")


def test_fig2_clusters():
    got = [c.transitions for c in clusters(sample_nets.fig2())]
    assert got == [("t1", "t2"), ("t3",), ("t4",), ("t5", "t7"), ("t6",)]
    assert clusters(sample_nets.fig2())[3].places == ("p4", "p5")


def test_free_choice():
    assert is_free_choice(sample_nets.fig2())
    assert not is_free_choice(sample_nets.fig4())
    assert not is_free_choice(sample_nets.fig1_middle())
    assert not is_free_choice(sample_nets.confused())


def test_normalize_weights():
    net = sample_nets.fig2().with_labels(weight={"t1": 2, "t2": 3, "t5": 7, "t7": 7})
    assert not is_normalized(net)
    norm = normalize_weights(net)
    assert is_normalized(norm)
    assert norm.weight["t1"] == Fraction(2, 5) and norm.weight["t5"] == Fraction(1, 2)
    with pytest.raises(NotFreeChoice):
        normalize_weights(sample_nets.fig4())


def test_conflict_set():
    net = sample_nets.fig2()
    assert conflict_set(net, {"i"}, "t2") == ("t1", "t2")
    assert conflict_set(net, {"p4", "p5"}, "t5") == ("t5", "t7")
    with pytest.raises(NotEnabled):
        conflict_set(net, {"i"}, "t3")


def test_net_is_immutable_value():
    net = sample_nets.fig2()
    other = net.with_labels(reward={"t1": 3})
    assert net.reward["t1"] == 1 and other.reward["t1"] == 3
    assert net == sample_nets.fig2()
