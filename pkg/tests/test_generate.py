import random

from pwnet.generate import perturb, random_sound_net
from pwnet.mdp import check_soundness_explicit
from pwnet.net import clusters, is_free_choice, is_normalized, validate_structure


def test_generated_nets_are_sound_free_choice_workflow_nets():
    for seed in range(150):
        net = random_sound_net(seed, max_places=8)
        assert len(net.places) <= 8
        assert validate_structure(net) == [], seed
        assert is_free_choice(net) and is_normalized(net)
        assert check_soundness_explicit(net), seed
        assert all(w > 0 for w in net.weight.values()) and all(r >= 0 for r in net.reward.values())


def test_generation_is_seeded():
    assert random_sound_net(42) == random_sound_net(42)
    assert random_sound_net(random.Random(5)) == random_sound_net(5)


def test_generator_covers_rule_shapes():
    shapes = set()
    for seed in range(100):
        net = random_sound_net(seed)
        if any(net.pre[t] == net.post[t] for t in net.transitions):
            shapes.add("self-loop")
        if any(len(c) >= 3 for c in clusters(net)):
            shapes.add("3-cluster")
        if any(len(net.post[t]) > 1 for t in net.transitions):
            shapes.add("fork")
    assert shapes == {"self-loop", "3-cluster", "fork"}


def test_perturbation_keeps_workflow_shape():
    kept = 0
    for seed in range(100):
        net = perturb(random_sound_net(seed), seed)
        if net is None:
            continue
        kept += 1
        assert validate_structure(net) == [] and is_free_choice(net) and is_normalized(net)
    assert kept > 20
