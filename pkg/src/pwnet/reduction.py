"""Reward-preserving reduction rules and the fixpoint reduction loop.

Three rules rewrite a free-choice PWN without changing its expected reward:

* merge      -- fuse two transitions with identical pre- and postsets;
* iteration  -- drop a self-loop transition, folding its geometric series of
                rewards into the other members of its cluster;
* shortcut   -- compose a transition with a cluster it unconditionally enables.

A sound net reduces to a single ``i -> o`` transition whose reward is the
expected reward of the original net.
"""

from __future__ import annotations

import re
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable

from .errors import (
    DivergentLoop,
    GuardViolated,
    InvalidStructure,
    NotFreeChoice,
    ReductionInconclusive,
    UnsafeFiring,
)
from .net import (
    Cluster,
    WorkflowNet,
    clusters,
    id_key,
    is_free_choice,
    normalize_weights,
    sort_ids,
    validate_structure,
)
from .values import INF, Value, format_value

_SUFFIX = re.compile(r"#(\d+)$")


class RuleKind(str, Enum):
    MERGE = "merge"
    ITERATION = "iteration"
    SHORTCUT = "shortcut"


class Verdict(str, Enum):
    SOUND = "sound"
    UNSOUND = "unsound"
    INCONCLUSIVE = "inconclusive"


Label = tuple  # (transition id, weight, reward)


@dataclass(frozen=True)
class RuleInstance:
    """One rule application.

    ``actors`` are the consumed transitions (merge: both, otherwise one);
    ``cluster`` is the target cluster of a shortcut, or the co-cluster whose
    labels an iteration rewrites. ``produced`` lists ``(id, weight, reward)``
    for every transition created or relabelled; it is empty for an instance
    that has been found but not applied yet.
    """

    kind: RuleKind
    actors: tuple[str, ...]
    cluster: tuple[str, ...] = ()
    produced: tuple[Label, ...] = ()

    def __str__(self) -> str:
        return render_step(self)


def render_step(step: RuleInstance) -> str:
    parts = [step.kind.value, *step.actors]
    if step.kind is not RuleKind.MERGE:
        parts.append("[" + ",".join(step.cluster) + "]")
    parts.append("->")
    parts += [f"{n}({format_value(w)},{format_value(r)})" for n, w, r in step.produced]
    return " ".join(parts)


_STEP = re.compile(r"^(merge|iteration|shortcut)\s+(.*?)\s*->\s*(.*)$")
_LABEL = re.compile(r"^(\S+)\((-?\d+(?:/\d+)?),(-?\d+(?:/\d+)?)\)$")


def parse_step(line: str) -> RuleInstance:
    m = _STEP.match(line.strip())
    if not m:
        raise ValueError(f"not a trace line: {line!r}")
    kind = RuleKind(m.group(1))
    lhs = m.group(2).split()
    cluster: tuple[str, ...] = ()
    if lhs and lhs[-1].startswith("["):
        inner = lhs.pop()[1:-1]
        cluster = tuple(x for x in inner.split(",") if x)
    produced = []
    for tok in m.group(3).split():
        lm = _LABEL.match(tok)
        if not lm:
            raise ValueError(f"bad label {tok!r} in trace line {line!r}")
        produced.append((lm.group(1), Fraction(lm.group(2)), Fraction(lm.group(3))))
    return RuleInstance(kind, tuple(lhs), cluster, tuple(produced))


def render_trace(steps: Iterable[RuleInstance]) -> str:
    return "".join(render_step(s) + "\n" for s in steps)


def parse_trace(text: str) -> list[RuleInstance]:
    return [parse_step(line) for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]


@dataclass
class ReductionTrace:
    initial: WorkflowNet
    final: WorkflowNet
    steps: list[RuleInstance] = field(default_factory=list)

    def to_text(self) -> str:
        return render_trace(self.steps)

    def replay(self) -> WorkflowNet:
        return replay(self.initial, self.steps)


@dataclass
class ReductionOutcome:
    verdict: Verdict
    expected_reward: Fraction | None
    trace: ReductionTrace
    rule_counts: dict[str, int]
    reason: str = ""

    @property
    def final(self) -> WorkflowNet:
        return self.trace.final

    @property
    def steps(self) -> int:
        return len(self.trace.steps)


# ---------------------------------------------------------------------------
# Mutable working copy
# ---------------------------------------------------------------------------

class _Work:
    """Owned, mutable copy of a net that the rules rewrite in place."""

    def __init__(self, net: WorkflowNet):
        self.name = net.name
        self.initial = net.initial
        self.final = net.final
        self.places = set(net.places)
        self.pre = dict(net.pre)
        self.post = dict(net.post)
        self.weight = dict(net.weight)
        self.reward = dict(net.reward)
        self.place_pre = {p: set(ts) for p, ts in net.place_pre.items()}
        self.place_post = {p: set(ts) for p, ts in net.place_post.items()}
        self._keys: dict[str, tuple] = {}
        top = 0
        for t in net.transitions:
            m = _SUFFIX.search(t)
            if m:
                top = max(top, int(m.group(1)))
        self.counter = top + 1

    def key(self, t: str) -> tuple:
        k = self._keys.get(t)
        if k is None:
            k = self._keys[t] = id_key(t)
        return k

    def freeze(self) -> WorkflowNet:
        return WorkflowNet(
            places=frozenset(self.places),
            transitions=frozenset(self.pre),
            pre=dict(self.pre),
            post=dict(self.post),
            initial=self.initial,
            final=self.final,
            weight=dict(self.weight),
            reward=dict(self.reward),
            name=self.name,
        )

    def fresh(self, base: str) -> str:
        base = base.split("#", 1)[0]
        while True:
            name = f"{base}#{self.counter}"
            self.counter += 1
            if name not in self.pre and name not in self.places:
                return name

    def _claim(self, name: str | None, base: str) -> str:
        if name is None:
            return self.fresh(base)
        if name in self.pre or name in self.places:
            raise GuardViolated(f"name {name} is already in use")
        m = _SUFFIX.search(name)
        if m:
            self.counter = max(self.counter, int(m.group(1)) + 1)
        return name

    def add(self, t: str, pre: frozenset, post: frozenset, w: Fraction, r: Fraction) -> None:
        self.pre[t] = pre
        self.post[t] = post
        self.weight[t] = w
        self.reward[t] = r
        for p in pre:
            self.place_post[p].add(t)
        for p in post:
            self.place_pre[p].add(t)

    def remove(self, t: str) -> None:
        for p in self.pre.pop(t):
            self.place_post[p].discard(t)
        for p in self.post.pop(t):
            self.place_pre[p].discard(t)
        del self.weight[t], self.reward[t]

    def remove_place(self, p: str) -> None:
        self.places.discard(p)
        del self.place_pre[p], self.place_post[p]

    def cluster(self, t: str) -> tuple[frozenset, frozenset]:
        """(transitions, places) of the cluster of ``t``."""
        ts = {t}
        ps = set(self.pre[t])
        todo = deque(ps)
        while todo:
            p = todo.popleft()
            for u in self.place_post[p]:
                if u not in ts:
                    ts.add(u)
                    for q in self.pre[u]:
                        if q not in ps:
                            ps.add(q)
                            todo.append(q)
        return frozenset(ts), frozenset(ps)

    def is_atomic(self) -> bool:
        if len(self.pre) != 1 or self.places != {self.initial, self.final}:
            return False
        (t,) = self.pre
        return self.pre[t] == {self.initial} and self.post[t] == {self.final}

    # -- rules --------------------------------------------------------------

    def merge(self, t1: str, t2: str, name: str | None = None) -> RuleInstance:
        if t1 == t2 or t1 not in self.pre or t2 not in self.pre:
            raise GuardViolated(f"merge needs two distinct transitions, got {t1}, {t2}")
        if self.pre[t1] != self.pre[t2] or self.post[t1] != self.post[t2]:
            raise GuardViolated(f"{t1} and {t2} differ in pre- or postset")
        w1, w2 = self.weight[t1], self.weight[t2]
        w = w1 + w2
        r = (w1 * self.reward[t1] + w2 * self.reward[t2]) / w
        pre, post = self.pre[t1], self.post[t1]
        self.remove(t1)
        self.remove(t2)
        tm = self._claim(name, t1)
        self.add(tm, pre, post, w, r)
        return RuleInstance(RuleKind.MERGE, (t1, t2), (), ((tm, w, r),))

    def iteration(self, t: str) -> RuleInstance:
        if t not in self.pre or self.pre[t] != self.post[t]:
            raise GuardViolated(f"{t} is not a self-loop transition")
        members, _ = self.cluster(t)
        others = sort_ids(members - {t})
        wt, rt = self.weight[t], self.reward[t]
        if not others or wt == 1:
            raise DivergentLoop(f"self-loop {t} has no exit in its cluster")
        if wt > 1:
            raise GuardViolated(f"weight of {t} exceeds 1; normalize the net first")
        self.remove(t)
        produced = []
        for u in others:
            self.reward[u] = wt / (1 - wt) * rt + self.reward[u]
            self.weight[u] = self.weight[u] / (1 - wt)
            produced.append((u, self.weight[u], self.reward[u]))
        return RuleInstance(RuleKind.ITERATION, (t,), others, tuple(produced))

    def shortcut(self, t: str, c: Iterable[str], names: Iterable[str] | None = None) -> RuleInstance:
        c = sort_ids(c)
        if t not in self.pre or not c or any(u not in self.pre for u in c):
            raise GuardViolated("shortcut needs existing transitions")
        members, c_places = self.cluster(c[0])
        if set(c) != members:
            raise GuardViolated(f"{list(c)} is not a cluster")
        if t in members:
            raise GuardViolated(f"{t} belongs to the target cluster")
        post_t = self.post[t]
        if not any(self.pre[u] <= post_t for u in c):
            raise GuardViolated(f"{t} does not unconditionally enable [{c[0]}]")
        outs = {}
        for u in c:
            carried = post_t - self.pre[u]
            if carried & self.post[u]:
                raise UnsafeFiring(f"shortcut of {t} through {u} doubles a token on "
                                   f"{sort_ids(carried & self.post[u])}")
            outs[u] = frozenset(carried | self.post[u])
        names = list(names) if names is not None else [None] * len(c)
        if len(names) != len(c):
            raise GuardViolated("one produced name per cluster member is required")
        pre_t, wt, rt = self.pre[t], self.weight[t], self.reward[t]
        self.remove(t)
        produced = []
        for u, name in zip(c, names):
            ts = self._claim(name, t)
            self.add(ts, pre_t, outs[u], wt * self.weight[u], rt + self.reward[u])
            produced.append((ts, self.weight[ts], self.reward[ts]))
        if all(not self.place_pre[p] for p in c_places):
            for u in c:
                self.remove(u)
            for p in c_places:
                self.remove_place(p)
        return RuleInstance(RuleKind.SHORTCUT, (t,), c, tuple(produced))

    def apply(self, inst: RuleInstance) -> RuleInstance:
        names = [n for n, _, _ in inst.produced] or None
        if inst.kind is RuleKind.MERGE:
            return self.merge(*inst.actors, name=names[0] if names else None)
        if inst.kind is RuleKind.ITERATION:
            return self.iteration(inst.actors[0])
        return self.shortcut(inst.actors[0], inst.cluster, names)

    # -- candidate search ---------------------------------------------------

    def merge_candidates(self) -> list[RuleInstance]:
        groups: dict[tuple, list] = {}
        for t in self.pre:
            groups.setdefault((self.pre[t], self.post[t]), []).append(t)
        out = []
        for ts in groups.values():
            if len(ts) > 1:
                ts.sort(key=self.key)
                out += [RuleInstance(RuleKind.MERGE, (a, b))
                        for k, a in enumerate(ts) for b in ts[k + 1:]]
        out.sort(key=lambda i: (self.key(i.actors[0]), self.key(i.actors[1])))
        return out

    def iteration_candidates(self) -> list[RuleInstance]:
        out = []
        for t in self.pre:
            if self.pre[t] == self.post[t]:
                members, _ = self.cluster(t)
                out.append(RuleInstance(RuleKind.ITERATION, (t,), sort_ids(members - {t})))
        out.sort(key=lambda i: self.key(i.actors[0]))
        return out

    def shortcut_candidates(self) -> list[tuple[str, frozenset, frozenset]]:
        """All ``(t, cluster transitions, cluster places)`` satisfying the guard."""
        out = []
        for t in self.pre:
            post_t = self.post[t]
            own = None
            seen: set = set()
            for p in post_t:
                for u in self.place_post[p]:
                    if u in seen or not self.pre[u] <= post_t:
                        continue
                    members, places = self.cluster(u)
                    seen |= members
                    if own is None:
                        own = self.cluster(t)[0]
                    if members != own:
                        out.append((t, members, places))
        return out

    def removes_cluster(self, t: str, members: frozenset, places: frozenset) -> bool:
        """Whether shortcutting ``t`` through the cluster deletes the cluster."""
        for p in places:
            if self.place_pre[p] - {t}:
                return False
            if any(p in self.post[u] for u in members):
                return False
        return True

    def cycle_length(self, t: str, members: frozenset) -> int | None:
        """Shortest place-distance from the cluster's outputs back to ``•t``."""
        target = self.pre[t]
        frontier = set()
        for u in members:
            frontier |= self.post[u]
        dist = 1
        seen = set(frontier)
        while frontier:
            if frontier & target:
                return dist
            nxt = set()
            for p in frontier:
                for u in self.place_post[p]:
                    if u == t:
                        continue
                    for q in self.post[u]:
                        if q not in seen:
                            seen.add(q)
                            nxt.add(q)
            frontier = nxt
            dist += 1
        return None

    def choose(self) -> RuleInstance | None:
        """Pick the next rule instance.

        Priority: merge, iteration, shortcuts that delete their target
        cluster, shortcuts that roll up a cycle (shortest cycle first), any
        other shortcut. Ties go to the smallest transition ids.
        """
        merges = self.merge_candidates()
        if merges:
            return merges[0]
        its = self.iteration_candidates()
        if its:
            return its[0]
        cands = self.shortcut_candidates()
        if not cands:
            return None

        def rank(cand):
            t, members, _ = cand
            return (self.key(t), self.key(min(members, key=self.key)))

        removing = [c for c in cands if self.removes_cluster(*c)]
        if removing:
            best = min(removing, key=rank)
        else:
            cyclic = []
            for cand in cands:
                d = self.cycle_length(cand[0], cand[1])
                if d is not None:
                    cyclic.append((d, rank(cand), cand))
            if cyclic:
                best = min(cyclic, key=lambda x: (x[0], x[1]))[2]
            else:
                best = min(cands, key=rank)
        t, members, _ = best
        return RuleInstance(RuleKind.SHORTCUT, (t,), sort_ids(members))


# ---------------------------------------------------------------------------
# Public rule API (pure: the input net is never modified)
# ---------------------------------------------------------------------------

def apply_merge(net: WorkflowNet, t1: str, t2: str, name: str | None = None) -> WorkflowNet:
    """Replace ``t1, t2`` by one transition with summed weight and weighted-average reward."""
    w = _Work(net)
    w.merge(t1, t2, name)
    return w.freeze()


def apply_iteration(net: WorkflowNet, t: str) -> WorkflowNet:
    w = _Work(net)
    w.iteration(t)
    return w.freeze()


def apply_shortcut(net: WorkflowNet, t: str, c: Cluster | Iterable[str],
                   names: Iterable[str] | None = None) -> WorkflowNet:
    w = _Work(net)
    w.shortcut(t, c.transitions if isinstance(c, Cluster) else c, names)
    return w.freeze()


def apply_rule(net: WorkflowNet, inst: RuleInstance) -> tuple[WorkflowNet, RuleInstance]:
    """Apply ``inst``; returns the new net and the instance with its produced labels."""
    w = _Work(net)
    done = w.apply(inst)
    return w.freeze(), done


def applicable_instances(net: WorkflowNet, kind: RuleKind | None = None) -> list[RuleInstance]:
    """Every rule instance whose guard holds in ``net``, in id order."""
    w = _Work(net)
    out: list[RuleInstance] = []
    if kind in (None, RuleKind.MERGE):
        out += w.merge_candidates()
    if kind in (None, RuleKind.ITERATION):
        out += w.iteration_candidates()
    if kind in (None, RuleKind.SHORTCUT):
        cands = sorted(w.shortcut_candidates(),
                       key=lambda c: (w.key(c[0]), w.key(min(c[1], key=w.key))))
        out += [RuleInstance(RuleKind.SHORTCUT, (t, ), sort_ids(m)) for t, m, _ in cands]
    return out


def find_applicable(net: WorkflowNet) -> RuleInstance | None:
    return _Work(net).choose()


def replay(initial: WorkflowNet, steps: Iterable[RuleInstance]) -> WorkflowNet:
    """Re-apply logged steps, reusing their produced names."""
    w = _Work(initial)
    for step in steps:
        w.apply(step)
    return w.freeze()


def default_budget(net: WorkflowNet) -> int:
    c = len(clusters(net))
    t = len(net.transitions)
    return 2 * (c ** 4 * t + c ** 4 + c ** 2 * t) + 64


def reduce(net: WorkflowNet, budget: int | None = None) -> ReductionOutcome:
    """Reduce a free-choice PWN to a fixpoint and decide soundness.

    Weights are normalized per cluster first. The verdict is ``SOUND`` with
    the expected reward when the net collapses to a single ``i -> o``
    transition, ``UNSOUND`` when no rule applies to a larger net (or a rule
    exposes a dead loop or an unsafe firing), and ``INCONCLUSIVE`` when the
    budget of rule applications runs out.
    """
    violations = validate_structure(net)
    if violations:
        raise InvalidStructure(violations)
    if not is_free_choice(net):
        raise NotFreeChoice(f"{net.name} is not free-choice")
    start = normalize_weights(net)
    if budget is None:
        budget = default_budget(start)

    work = _Work(start)
    steps: list[RuleInstance] = []
    counts = Counter({k.value: 0 for k in RuleKind})

    def outcome(verdict, reward=None, reason=""):
        trace = ReductionTrace(start, work.freeze(), steps)
        return ReductionOutcome(verdict, reward, trace, dict(counts), reason)

    while True:
        if work.is_atomic():
            (t,) = work.pre
            return outcome(Verdict.SOUND, work.reward[t])
        if len(steps) >= budget:
            return outcome(Verdict.INCONCLUSIVE, reason=f"rule budget of {budget} exhausted")
        inst = work.choose()
        if inst is None:
            return outcome(Verdict.UNSOUND, reason="no rule applies to a non-atomic net")
        try:
            done = work.apply(inst)
        except DivergentLoop as exc:
            return outcome(Verdict.UNSOUND, reason=str(exc))
        except UnsafeFiring as exc:
            return outcome(Verdict.UNSOUND, reason=str(exc))
        steps.append(done)
        counts[done.kind.value] += 1


def expected_reward(net: WorkflowNet, budget: int | None = None) -> Value:
    """Expected reward by reduction; ``INF`` for unsound nets."""
    result = reduce(net, budget)
    if result.verdict is Verdict.SOUND:
        return result.expected_reward
    if result.verdict is Verdict.UNSOUND:
        return INF
    raise ReductionInconclusive(result.reason)
