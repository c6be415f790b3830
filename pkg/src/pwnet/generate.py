"""Random sound free-choice PWNs for testing.

Nets grow from ``i -> t1 -> o`` by refinements that keep a net sound,
1-safe and free-choice:

- series transition: ``t`` becomes ``t -> p -> t'``
- series place: ``p`` becomes ``p -> t -> p'``
- alternative: a copy of ``t`` with the same preset and postset
- parallel place: a copy of ``p`` with the same input and output transitions
- loop: a transition with preset and postset equal to a cluster's preset

Labels are random small rationals, with weights normalized per cluster.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .net import WorkflowNet, is_free_choice, normalize_weights, validate_structure

OPERATIONS = ("series_transition", "series_place", "alternative", "parallel_place", "loop")


class _Builder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.places = ["i", "o"]
        self.pre = {"t1": {"i"}}
        self.post = {"t1": {"o"}}
        self._p = 0
        self._t = 1

    def new_place(self) -> str:
        self._p += 1
        name = f"p{self._p}"
        self.places.append(name)
        return name

    def new_transition(self) -> str:
        self._t += 1
        return f"t{self._t}"

    def consumers(self, p):
        return [t for t in self.pre if p in self.pre[t]]

    def producers(self, p):
        return [t for t in self.post if p in self.post[t]]

    def series_transition(self):
        t = self.rng.choice(sorted(self.pre))
        p, t2 = self.new_place(), self.new_transition()
        self.pre[t2], self.post[t2] = {p}, self.post[t]
        self.post[t] = {p}

    def series_place(self):
        p = self.rng.choice([q for q in self.places if q != "o"])
        p2, t = self.new_place(), self.new_transition()
        for u in self.consumers(p):
            self.pre[u] = (self.pre[u] - {p}) | {p2}
        self.pre[t], self.post[t] = {p}, {p2}

    def alternative(self):
        t = self.rng.choice(sorted(self.pre))
        t2 = self.new_transition()
        self.pre[t2], self.post[t2] = set(self.pre[t]), set(self.post[t])

    def parallel_place(self):
        inner = [q for q in self.places if q not in ("i", "o")]
        if not inner:
            return self.series_place()
        p = self.rng.choice(inner)
        p2 = self.new_place()
        for u in self.consumers(p):
            self.pre[u] = self.pre[u] | {p2}
        for u in self.producers(p):
            self.post[u] = self.post[u] | {p2}

    def loop(self):
        presets = {frozenset(s) for s in self.pre.values() if "i" not in s}
        if not presets:
            return self.series_place()
        s = self.rng.choice(sorted(presets, key=sorted))
        t = self.new_transition()
        self.pre[t], self.post[t] = set(s), set(s)


def _label(rng: random.Random, upper: int) -> Fraction:
    return Fraction(rng.randint(0, upper), rng.randint(1, 4))


def random_sound_net(
    rng: random.Random | int | None = None,
    max_places: int = 10,
    steps: int | None = None,
    max_reward: int = 6,
    name: str = "random",
) -> WorkflowNet:
    """A random sound free-choice net with at most ``max_places`` places."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    b = _Builder(rng)
    budget = steps if steps is not None else rng.randint(1, 3 * max_places)
    weights = (3, 2, 3, 2, 2)
    for _ in range(budget):
        op = rng.choices(OPERATIONS, weights)[0]
        if op in ("series_transition", "series_place", "parallel_place") and len(b.places) >= max_places:
            op = rng.choice(("alternative", "loop"))
        getattr(b, op)()
    transitions = {
        t: (Fraction(rng.randint(1, 9), rng.randint(1, 3)), _label(rng, max_reward))
        for t in b.pre
    }
    arcs = [(p, t) for t in b.pre for p in b.pre[t]] + [(t, p) for t in b.post for p in b.post[t]]
    net = WorkflowNet.build(b.places, transitions, arcs, name=name)
    return normalize_weights(net)


def perturb(net: WorkflowNet, rng: random.Random | int | None = None) -> WorkflowNet | None:
    """Redirect one output arc to another place, or ``None`` if that breaks the net shape.

    The result keeps the workflow-net structure but is usually unsound.
    """
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    candidates = [(t, p) for t in sorted(net.transitions) for p in sorted(net.post[t]) if p != net.final]
    targets = sorted(net.places - {net.initial})
    if not candidates or len(targets) < 2:
        return None
    t, p = rng.choice(candidates)
    q = rng.choice([x for x in targets if x != p])
    post = dict(net.post)
    post[t] = (net.post[t] - {p}) | {q}
    out = net.replace(post=post, name=f"{net.name}-perturbed")
    if validate_structure(out) or not is_free_choice(out):
        return None
    return normalize_weights(out)
