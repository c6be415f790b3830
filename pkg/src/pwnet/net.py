"""Probabilistic workflow nets: structure, token game, clusters."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping

from .errors import NotEnabled, NotFreeChoice, UnsafeFiring

Marking = frozenset  # frozenset[str] of marked places

_DIGITS = re.compile(r"(\d+)")


def id_key(name: str) -> tuple:
    """Sort key giving natural order on ids: ``t2 < t10 < t10#1``."""
    parts = _DIGITS.split(name)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts))


def sort_ids(ids: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(ids, key=id_key))


def as_fraction(value) -> Fraction:
    """Coerce an int, Fraction or ``p/q`` string to an exact Fraction."""
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"labels must be exact rationals, got {value!r}")
    return Fraction(value)


@dataclass(frozen=True)
class WorkflowNet:
    """A 1-safe probabilistic workflow net ``(P, T, F, i, o, w, r)``.

    ``pre[t]`` and ``post[t]`` hold the input and output places of ``t``.
    Values are never mutated after construction; every transformation
    returns a new net.
    """

    places: frozenset
    transitions: frozenset
    pre: Mapping[str, frozenset]
    post: Mapping[str, frozenset]
    initial: str
    final: str
    weight: Mapping[str, Fraction]
    reward: Mapping[str, Fraction]
    name: str = field(default="net", compare=False)

    def __post_init__(self):
        if self.initial not in self.places or self.final not in self.places:
            raise ValueError("initial and final must be places of the net")
        if self.places & self.transitions:
            raise ValueError(f"ids used as both place and transition: {sorted(self.places & self.transitions)}")
        for label in ("pre", "post", "weight", "reward"):
            keys = set(getattr(self, label))
            if keys != self.transitions:
                raise ValueError(f"{label} keys do not match the transition set")
        for t in self.transitions:
            unknown = (self.pre[t] | self.post[t]) - self.places
            if unknown:
                raise ValueError(f"transition {t} touches undeclared places {sorted(unknown)}")

    @classmethod
    def build(
        cls,
        places: Iterable[str],
        transitions: Mapping[str, tuple],
        arcs: Iterable[tuple[str, str]],
        initial: str = "i",
        final: str = "o",
        name: str = "net",
    ) -> "WorkflowNet":
        """Construct a net from ``transitions = {t: (weight, reward)}`` and arc pairs."""
        place_set = frozenset(places) | {initial, final}
        pre: dict[str, set] = {t: set() for t in transitions}
        post: dict[str, set] = {t: set() for t in transitions}
        for src, dst in arcs:
            if src in place_set and dst in pre:
                pre[dst].add(src)
            elif src in pre and dst in place_set:
                post[src].add(dst)
            else:
                raise ValueError(f"arc ({src}, {dst}) must join a declared place and transition")
        return cls(
            places=place_set,
            transitions=frozenset(transitions),
            pre={t: frozenset(s) for t, s in pre.items()},
            post={t: frozenset(s) for t, s in post.items()},
            initial=initial,
            final=final,
            weight={t: as_fraction(wr[0]) for t, wr in transitions.items()},
            reward={t: as_fraction(wr[1]) for t, wr in transitions.items()},
            name=name,
        )

    def replace(self, **changes) -> "WorkflowNet":
        fields = dict(
            places=self.places, transitions=self.transitions, pre=self.pre, post=self.post,
            initial=self.initial, final=self.final, weight=self.weight, reward=self.reward,
            name=self.name,
        )
        fields.update(changes)
        return WorkflowNet(**fields)

    def with_labels(self, weight: Mapping | None = None, reward: Mapping | None = None) -> "WorkflowNet":
        """Return a copy with some transition labels overridden."""
        new_w = dict(self.weight)
        new_r = dict(self.reward)
        for t, v in (weight or {}).items():
            new_w[t] = as_fraction(v)
        for t, v in (reward or {}).items():
            new_r[t] = as_fraction(v)
        return self.replace(weight=new_w, reward=new_r)

    @cached_property
    def place_pre(self) -> dict[str, frozenset]:
        """Input transitions of each place."""
        acc: dict[str, set] = {p: set() for p in self.places}
        for t, outs in self.post.items():
            for p in outs:
                acc[p].add(t)
        return {p: frozenset(s) for p, s in acc.items()}

    @cached_property
    def place_post(self) -> dict[str, frozenset]:
        """Output transitions of each place."""
        acc: dict[str, set] = {p: set() for p in self.places}
        for t, ins in self.pre.items():
            for p in ins:
                acc[p].add(t)
        return {p: frozenset(s) for p, s in acc.items()}

    @property
    def arcs(self) -> list[tuple[str, str]]:
        arcs = [(p, t) for t in self.transitions for p in self.pre[t]]
        arcs += [(t, p) for t in self.transitions for p in self.post[t]]
        return sorted(arcs, key=lambda a: (id_key(a[0]), id_key(a[1])))

    def sorted_places(self) -> tuple[str, ...]:
        return sort_ids(self.places)

    def sorted_transitions(self) -> tuple[str, ...]:
        return sort_ids(self.transitions)

    @property
    def initial_marking(self) -> frozenset:
        return frozenset([self.initial])

    @property
    def final_marking(self) -> frozenset:
        return frozenset([self.final])

    def __repr__(self) -> str:
        return f"WorkflowNet({self.name!r}, |P|={len(self.places)}, |T|={len(self.transitions)})"


@dataclass(frozen=True)
class Violation:
    rule: str
    element: str | None = None

    def __str__(self) -> str:
        return f"{self.rule}: {self.element}" if self.element is not None else self.rule


@dataclass(frozen=True)
class Cluster:
    """Transitions connected through shared input places, plus those places."""

    transitions: tuple[str, ...]
    places: tuple[str, ...]

    def __iter__(self) -> Iterator[str]:
        return iter(self.transitions)

    def __len__(self) -> int:
        return len(self.transitions)

    def __contains__(self, t) -> bool:
        return t in self.transitions

    @property
    def key(self) -> str:
        return self.transitions[0]


def validate_structure(net: WorkflowNet) -> list[Violation]:
    """List every workflow-net invariant broken by ``net`` (empty when valid)."""
    out: list[Violation] = []
    i, o = net.initial, net.final
    if i == o:
        out.append(Violation("initial and final place coincide", i))
    if net.place_pre[i]:
        out.append(Violation("initial place has incoming arc", i))
    if net.place_post[o]:
        out.append(Violation("final place has outgoing arc", o))
    for t in net.sorted_transitions():
        if not net.pre[t]:
            out.append(Violation("transition has no input place", t))
        if not net.post[t]:
            out.append(Violation("transition has no output place", t))
        if net.weight[t] <= 0:
            out.append(Violation("weight is not strictly positive", t))
        if net.reward[t] < 0:
            out.append(Violation("reward is negative", t))

    # (P u T, F u {(o, i)}) is strongly connected iff every node is
    # reachable from i and every node reaches o.
    succ: dict[str, set] = {n: set() for n in net.places | net.transitions}
    pred: dict[str, set] = {n: set() for n in succ}
    for a, b in net.arcs:
        succ[a].add(b)
        pred[b].add(a)
    forward = _reach(i, succ)
    backward = _reach(o, pred)
    for node in sort_ids(succ):
        if node not in forward or node not in backward:
            out.append(Violation("not strongly connected after adding (o,i)", node))
    return out


def _reach(start: str, edges: Mapping[str, set]) -> set:
    seen = {start}
    todo = deque([start])
    while todo:
        n = todo.popleft()
        for m in edges[n]:
            if m not in seen:
                seen.add(m)
                todo.append(m)
    return seen


def enabled(net: WorkflowNet, m: Iterable[str]) -> tuple[str, ...]:
    m = frozenset(m)
    return sort_ids(t for t in net.transitions if net.pre[t] <= m)


def fire(net: WorkflowNet, m: Iterable[str], t: str) -> frozenset:
    """Fire ``t`` at ``m`` under set semantics."""
    m = frozenset(m)
    if t not in net.transitions:
        raise NotEnabled(f"unknown transition {t}")
    pre = net.pre[t]
    if not pre <= m:
        raise NotEnabled(f"{t} is not enabled at {sorted(m, key=id_key)}")
    rest = m - pre
    clash = rest & net.post[t]
    if clash:
        raise UnsafeFiring(f"firing {t} puts a second token on {sorted(clash, key=id_key)}")
    return rest | net.post[t]


def clusters(net: WorkflowNet) -> list[Cluster]:
    """Partition the transitions into clusters, ordered by smallest member."""
    parent = {t: t for t in net.transitions}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in net.places:
        outs = list(net.place_post[p])
        for t in outs[1:]:
            ra, rb = find(outs[0]), find(t)
            if ra != rb:
                parent[rb] = ra
    groups: dict[str, list] = {}
    for t in net.transitions:
        groups.setdefault(find(t), []).append(t)
    result = []
    for members in groups.values():
        ts = sort_ids(members)
        ps = sort_ids(set().union(*(net.pre[t] for t in ts)))
        result.append(Cluster(ts, ps))
    result.sort(key=lambda c: id_key(c.key))
    return result


def cluster_of(net: WorkflowNet, t: str) -> Cluster:
    for c in clusters(net):
        if t in c:
            return c
    raise KeyError(t)


def is_free_choice(net: WorkflowNet) -> bool:
    # p1 and p2 share an output transition exactly when both lie in some
    # preset, so it suffices to compare postsets within each preset.
    for t in net.transitions:
        postsets = {net.place_post[p] for p in net.pre[t]}
        if len(postsets) > 1:
            return False
    return True


def is_normalized(net: WorkflowNet) -> bool:
    return all(sum(net.weight[t] for t in c) == 1 for c in clusters(net))


def normalize_weights(net: WorkflowNet) -> WorkflowNet:
    """Scale weights so that each cluster's weights sum to exactly 1."""
    if not is_free_choice(net):
        raise NotFreeChoice(f"{net.name} is not free-choice")
    weight = {}
    for c in clusters(net):
        total = sum(net.weight[t] for t in c)
        for t in c:
            weight[t] = net.weight[t] / total
    return net.replace(weight=weight)


def conflict_set(net: WorkflowNet, m: Iterable[str], t: str) -> tuple[str, ...]:
    """Enabled transitions sharing an input place with ``t`` (``t`` included)."""
    m = frozenset(m)
    if t not in net.transitions or not net.pre[t] <= m:
        raise NotEnabled(f"{t} is not enabled")
    pre = net.pre[t]
    return sort_ids(u for u in net.transitions if net.pre[u] <= m and net.pre[u] & pre)
