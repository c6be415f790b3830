"""Explicit-state semantics of a PWN as a Markov decision process.

States are ``I``, ``O`` and pairs ``(M, t)`` of a 1-safe marking and the
transition whose firing produced it. At a marking, the scheduler picks one
enabled conflict set and the transition inside it is drawn with probability
proportional to its weight. The reward of ``(M, t)`` is ``r(t)``.

Because the choices at ``(M, t)`` do not depend on ``t``, values are
computed on the quotient by marking: the value of ``(M, t)`` is
``r(t) + V(M)``. Markings are stored as integer bitmasks internally.
"""

from __future__ import annotations

import bisect
import random
import statistics
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    ConfusionDetected,
    NotEnabled,
    NotFirable,
    NotIndependent,
    StateCapExceeded,
    StepBoundExceeded,
    UnsafeFiring,
    UnsafeNet,
)
from .linsolve import solve_fixed_point
from .net import WorkflowNet, fire, sort_ids
from .values import INF, Value

DEFAULT_STATE_CAP = 10 ** 6
DEFAULT_STEP_BOUND = 10 ** 6


# ---------------------------------------------------------------------------
# States and schedulers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MdpState:
    tag: str  # "I", "O" or "pair"
    marking: frozenset | None = None
    last: str | None = None

    def __str__(self) -> str:
        if self.tag != "pair":
            return self.tag
        return f"({{{','.join(sort_ids(self.marking))}}},{self.last})"


INITIAL = MdpState("I")
FINAL = MdpState("O")


def pair(marking: Iterable[str], last: str) -> MdpState:
    return MdpState("pair", frozenset(marking), last)


# enabled conflict sets as tuples of ids, ordered by smallest member
Options = list


class Scheduler:
    """Resolves concurrency: picks one enabled conflict set given the history."""

    memoryless = False

    def choose(self, history: Sequence[str], marking: frozenset, options: Options) -> tuple:
        raise NotImplementedError


class MemorylessScheduler(Scheduler):
    memoryless = True

    def choose(self, history, marking, options):
        return self.pick(marking, options)

    def pick(self, marking: frozenset, options: Options) -> tuple:
        raise NotImplementedError


class MinIdScheduler(MemorylessScheduler):
    """Always fires the enabled conflict set with the smallest transition id."""

    name = "min-id"

    def pick(self, marking, options):
        return options[0]


class MaxIdScheduler(MemorylessScheduler):
    name = "max-id"

    def pick(self, marking, options):
        return options[-1]


class PolicyScheduler(MemorylessScheduler):
    """A table from markings to conflict sets; unlisted markings fall back to min-id."""

    name = "policy"

    def __init__(self, table: Mapping[frozenset, tuple]):
        self.table = dict(table)

    def pick(self, marking, options):
        choice = self.table.get(marking)
        return choice if choice in options else options[0]


class HistoryScheduler(Scheduler):
    """Wraps ``fn(history, marking, options) -> conflict set``."""

    name = "history"

    def __init__(self, fn: Callable[[Sequence[str], frozenset, Options], tuple]):
        self.fn = fn

    def choose(self, history, marking, options):
        return self.fn(history, marking, options)


SCHEDULERS = {"min-id": MinIdScheduler, "max-id": MaxIdScheduler}


# ---------------------------------------------------------------------------
# Bitmask encoding
# ---------------------------------------------------------------------------

class _Encoded:
    def __init__(self, net: WorkflowNet):
        self.net = net
        self.places = net.sorted_places()
        self.bit = {p: 1 << k for k, p in enumerate(self.places)}
        self.names = net.sorted_transitions()
        self.pre = [self.mask(net.pre[t]) for t in self.names]
        self.post = [self.mask(net.post[t]) for t in self.names]
        self.weight = [net.weight[t] for t in self.names]
        self.reward = [net.reward[t] for t in self.names]
        self.initial = self.bit[net.initial]
        self.final = self.bit[net.final]
        # transitions consuming each place
        self.consumers: dict[int, list[int]] = {b: [] for b in self.bit.values()}
        for k, t in enumerate(self.names):
            for p in net.pre[t]:
                self.consumers[self.bit[p]].append(k)

    def mask(self, places: Iterable[str]) -> int:
        m = 0
        for p in places:
            m |= self.bit[p]
        return m

    def unmask(self, m: int) -> frozenset:
        return frozenset(p for p in self.places if m & self.bit[p])

    def enabled(self, m: int) -> list[int]:
        seen = set()
        out = []
        rest = m
        while rest:
            low = rest & -rest
            rest ^= low
            for k in self.consumers[low]:
                if k not in seen:
                    seen.add(k)
                    if self.pre[k] & m == self.pre[k]:
                        out.append(k)
        out.sort()
        return out

    def fire(self, m: int, k: int) -> int:
        rest = m & ~self.pre[k]
        if rest & self.post[k]:
            raise UnsafeNet(
                f"firing {self.names[k]} at {sort_ids(self.unmask(m))} violates 1-safeness")
        return rest | self.post[k]

    def conflict_sets(self, m: int, check: bool = True) -> list[tuple[int, ...]]:
        """Enabled conflict sets at ``m``; raises if conflict is not an equivalence."""
        en = self.enabled(m)
        if not en:
            return []
        parent = {k: k for k in en}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        by_place: dict[int, int] = {}
        for k in en:
            pm = self.pre[k]
            while pm:
                low = pm & -pm
                pm ^= low
                if low in by_place:
                    a, b = find(by_place[low]), find(k)
                    if a != b:
                        parent[b] = a
                else:
                    by_place[low] = k
        groups: dict[int, list[int]] = {}
        for k in en:
            groups.setdefault(find(k), []).append(k)
        sets = [tuple(g) for g in groups.values()]
        if check:
            for g in sets:
                if len(g) > 2:
                    for a in range(len(g)):
                        for b in range(a + 1, len(g)):
                            if not self.pre[g[a]] & self.pre[g[b]]:
                                ta, tb = self.names[g[a]], self.names[g[b]]
                                raise ConfusionDetected(
                                    self.unmask(m),
                                    f"at marking {sort_ids(self.unmask(m))} the conflict relation is not "
                                    f"an equivalence: {ta} and {tb} are independent but share a conflict")
        sets.sort()
        return sets

    def distribution(self, group: tuple[int, ...]) -> list[tuple[int, Fraction]]:
        total = sum(self.weight[k] for k in group)
        return [(k, self.weight[k] / total) for k in group]


# ---------------------------------------------------------------------------
# The MDP
# ---------------------------------------------------------------------------

class MdpModel:
    """Reachable part of the MDP of a PWN, one record per marking.

    ``incoming[k]`` holds the transitions that produce marking ``k``; each
    such transition contributes one ``(M, t)`` state. Distributions are
    derived from the marking on demand and shared by all states of it.
    """

    def __init__(self, enc: _Encoded, masks: list[int], incoming: list[set],
                 has_final_state: bool):
        self._enc = enc
        self.net = enc.net
        self.masks = masks
        self.index = {m: k for k, m in enumerate(masks)}
        self.incoming = incoming
        self.has_final_state = has_final_state
        self._choices: dict[int, list] = {}

    @property
    def marking_count(self) -> int:
        return len(self.masks)

    @property
    def state_count(self) -> int:
        return 1 + sum(len(s) for s in self.incoming) + (1 if self.has_final_state else 0)

    def marking(self, k: int) -> frozenset:
        return self._enc.unmask(self.masks[k])

    def is_final(self, k: int) -> bool:
        return self.masks[k] == self._enc.final

    def conflict_sets(self, k: int) -> list[tuple[str, ...]]:
        return [tuple(self._enc.names[j] for j in g) for g in self._enc.conflict_sets(self.masks[k], False)]

    def choices(self, k: int) -> list[tuple[tuple[str, ...], list[tuple[str, int, Fraction]]]]:
        """``[(conflict set, [(t, successor marking index, probability)])]`` at marking ``k``."""
        hit = self._choices.get(k)
        if hit is not None:
            return hit
        enc = self._enc
        m = self.masks[k]
        out = []
        for g in enc.conflict_sets(m, False):
            dist = [(enc.names[j], self.index[enc.fire(m, j)], p) for j, p in enc.distribution(g)]
            out.append((tuple(enc.names[j] for j in g), dist))
        if len(self._choices) < 200_000:
            self._choices[k] = out
        return out

    def states(self) -> list[MdpState]:
        out = [INITIAL]
        for k in range(len(self.masks)):
            mk = self.marking(k)
            for j in sorted(self.incoming[k]):
                out.append(MdpState("pair", mk, self._enc.names[j]))
        if self.has_final_state:
            out.append(FINAL)
        return out

    def reward(self, state: MdpState) -> Fraction:
        if state.tag != "pair":
            return Fraction(0)
        return self.net.reward[state.last]

    def steps(self, state: MdpState) -> list[dict[MdpState, Fraction]]:
        if state.tag == "O":
            return [{FINAL: Fraction(1)}]
        k = 0 if state.tag == "I" else self.index[self._enc.mask(state.marking)]
        if self.is_final(k):
            return [{FINAL: Fraction(1)}]
        options = self.choices(k)
        if not options:
            return [{state: Fraction(1)}]
        out = []
        for _, dist in options:
            mu: dict[MdpState, Fraction] = {}
            for t, target, p in dist:
                mu[MdpState("pair", self.marking(target), t)] = p
            out.append(mu)
        return out

    def dump(self) -> str:
        """Line-oriented text dump of states, rewards and distributions."""
        states = self.states()
        ids = {s: n for n, s in enumerate(states)}
        lines = []
        for s in states:
            mk = "-" if s.marking is None else "{" + ",".join(sort_ids(s.marking)) + "}"
            last = s.last or "-"
            shown = mk if s.tag == "pair" else s.tag
            lines.append(f"{ids[s]} | {shown} | {last} | {_fmt(self.reward(s))}")
        for s in states:
            for n, mu in enumerate(self.steps(s)):
                body = ",".join(f"{ids[q]}:{_fmt(p)}" for q, p in sorted(mu.items(), key=lambda kv: ids[kv[0]]))
                lines.append(f"{ids[s]} -> choice_{n} : {body}")
        return "\n".join(lines) + "\n"


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def build_mdp(net: WorkflowNet, state_cap: int = DEFAULT_STATE_CAP) -> MdpModel:
    """Explore every MDP state reachable from ``I``.

    Raises ``StateCapExceeded`` once more than ``state_cap`` states exist,
    ``UnsafeNet`` on a firing that breaks 1-safeness and
    ``ConfusionDetected`` where the conflict relation is not an equivalence.
    """
    enc = _Encoded(net)
    masks = [enc.initial]
    index = {enc.initial: 0}
    incoming: list[set] = [set()]
    count = 1
    has_final = False
    todo = deque([0])
    while todo:
        k = todo.popleft()
        m = masks[k]
        if m == enc.final:
            if not has_final:
                has_final = True
                count += 1
            continue
        for g in enc.conflict_sets(m):
            for j in g:
                m2 = enc.fire(m, j)
                k2 = index.get(m2)
                if k2 is None:
                    k2 = index[m2] = len(masks)
                    masks.append(m2)
                    incoming.append(set())
                    todo.append(k2)
                if j not in incoming[k2]:
                    incoming[k2].add(j)
                    count += 1
            if count > state_cap:
                raise StateCapExceeded(state_cap)
        if count > state_cap:
            raise StateCapExceeded(state_cap)
    if count > state_cap:
        raise StateCapExceeded(state_cap)
    return MdpModel(enc, masks, incoming, has_final)


# ---------------------------------------------------------------------------
# Expected rewards
# ---------------------------------------------------------------------------

@dataclass
class ChainResult:
    value: Value
    approximate: bool = False
    chain_markings: int = 0


def _evaluate(model: MdpModel, policy: Mapping[int, int], domain: Sequence[int]) -> tuple[dict[int, Fraction], bool]:
    """Values of a proper memoryless policy on ``domain`` (closed under the policy)."""
    pos = {k: n for n, k in enumerate(domain)}
    consts = []
    rows = []
    for k in domain:
        if model.is_final(k):
            consts.append(Fraction(0))
            rows.append({})
            continue
        _, dist = model.choices(k)[policy[k]]
        c = Fraction(0)
        row: dict[int, Fraction] = {}
        for t, target, p in dist:
            c += p * model.net.reward[t]
            if not model.is_final(target):
                row[pos[target]] = row.get(pos[target], 0) + p
        consts.append(c)
        rows.append(row)
    sol = solve_fixed_point(consts, rows)
    return {k: sol.values[pos[k]] for k in domain}, sol.approximate


def chain_value(model: MdpModel, scheduler: MemorylessScheduler) -> ChainResult:
    """Expected reward of the Markov chain induced by a memoryless scheduler."""
    policy: dict[int, int] = {}
    seen = {0}
    order = [0]
    todo = deque([0])
    while todo:
        k = todo.popleft()
        if model.is_final(k):
            continue
        options = model.choices(k)
        if not options:
            return ChainResult(INF, chain_markings=len(order))
        sets = [cs for cs, _ in options]
        chosen = scheduler.pick(model.marking(k), sets)
        policy[k] = sets.index(tuple(chosen))
        for _, target, _p in options[policy[k]][1]:
            if target not in seen:
                seen.add(target)
                order.append(target)
                todo.append(target)
    # The final marking must be reachable from every marking of the chain.
    pred: dict[int, list[int]] = {k: [] for k in order}
    final = None
    for k in order:
        if model.is_final(k):
            final = k
            continue
        for _, target, _p in model.choices(k)[policy[k]][1]:
            pred[target].append(k)
    if final is None:
        return ChainResult(INF, chain_markings=len(order))
    good = {final}
    todo = deque([final])
    while todo:
        k = todo.popleft()
        for j in pred[k]:
            if j not in good:
                good.add(j)
                todo.append(j)
    if len(good) != len(order):
        return ChainResult(INF, chain_markings=len(order))
    values, approx = _evaluate(model, policy, order)
    return ChainResult(values[0], approx, len(order))


def expected_reward_under(net: WorkflowNet, scheduler: MemorylessScheduler | None = None,
                          state_cap: int = DEFAULT_STATE_CAP) -> Value:
    """Expected total reward until ``O`` under a memoryless scheduler (default min-id)."""
    scheduler = scheduler or MinIdScheduler()
    return chain_value(build_mdp(net, state_cap), scheduler).value


@dataclass
class MinMaxResult:
    minimum: Value
    maximum: Value
    min_policy: PolicyScheduler | None = None
    max_policy: PolicyScheduler | None = None
    approximate: bool = False


def _actions(model: MdpModel, k: int) -> list[set[int]]:
    return [{target for _, target, _p in dist} for _, dist in model.choices(k)]


def _almost_sure_some(model: MdpModel, n: int, final: int | None):
    """Markings where some policy reaches the final marking with probability 1.

    Returns the set and, for each member, an action leading one layer closer.
    """
    if final is None:
        return set(), {}
    supports = {k: _actions(model, k) for k in range(n) if k != final}
    u = set(range(n))
    while True:
        x = {final}
        via: dict[int, int] = {}
        changed = True
        while changed:
            changed = False
            for k in u - x:
                for a, sup in enumerate(supports[k]):
                    if sup <= u and sup & x:
                        x.add(k)
                        via[k] = a
                        changed = True
                        break
        if x == u:
            return u, via
        u = x


def _almost_sure_all(model: MdpModel, n: int, final: int | None) -> set[int]:
    """Markings from which every policy reaches the final marking with probability 1."""
    supports = {k: _actions(model, k) for k in range(n) if k != final}
    # z: markings where some policy avoids the final marking forever.
    z = {k for k in range(n) if k != final}
    changed = True
    while changed:
        changed = False
        for k in list(z):
            if supports[k] and not any(sup <= z for sup in supports[k]):
                z.discard(k)
                changed = True
    pred: dict[int, set] = {k: set() for k in range(n)}
    for k, acts in supports.items():
        for sup in acts:
            for j in sup:
                pred[j].add(k)
    bad = set(z)
    todo = deque(z)
    while todo:
        k = todo.popleft()
        for j in pred[k]:
            if j not in bad:
                bad.add(j)
                todo.append(j)
    return set(range(n)) - bad


def _policy_iteration(model: MdpModel, domain: list[int], policy: dict[int, int],
                      allowed: Mapping[int, list[int]], maximize: bool) -> tuple[dict[int, Fraction], dict[int, int], bool]:
    approx_any = False
    while True:
        values, approx = _evaluate(model, policy, domain)
        approx_any |= approx
        changed = False
        for k in domain:
            if model.is_final(k):
                continue
            options = model.choices(k)
            best_a, best_q = policy[k], values[k]
            for a in allowed[k]:
                q = sum((p * (model.net.reward[t] + values[target]) for t, target, p in options[a][1]), Fraction(0))
                if (q > best_q) if maximize else (q < best_q):
                    best_a, best_q = a, q
            if best_a != policy[k]:
                policy[k] = best_a
                changed = True
        if not changed:
            return values, policy, approx_any


def _as_scheduler(model: MdpModel, policy: Mapping[int, int]) -> PolicyScheduler:
    return PolicyScheduler({model.marking(k): model.choices(k)[a][0] for k, a in policy.items()})


def minmax_values(model: MdpModel) -> MinMaxResult:
    """Minimal and maximal expected reward to reach ``O`` over all schedulers.

    Exact policy iteration over memoryless policies (one conflict set per
    marking). A value is infinite when the final marking cannot be reached
    with probability 1 under the optimizing policies.
    """
    n = model.marking_count
    final = next((k for k in range(n) if model.is_final(k)), None)

    # maximum: finite iff every policy is proper from the initial marking
    all_good = _almost_sure_all(model, n, final)
    approx = False
    if 0 in all_good and final is not None:
        domain = sorted(all_good)
        allowed = {k: list(range(len(model.choices(k)))) for k in domain if not model.is_final(k)}
        policy = {k: 0 for k in allowed}
        values, policy, a = _policy_iteration(model, domain, policy, allowed, maximize=True)
        approx |= a
        maximum: Value = values[0]
        max_pol = _as_scheduler(model, policy)
    else:
        maximum, max_pol = INF, None

    some_good, via = _almost_sure_some(model, n, final)
    if 0 in some_good:
        domain = sorted(some_good)
        allowed = {}
        for k in domain:
            if model.is_final(k):
                continue
            allowed[k] = [a for a, sup in enumerate(_actions(model, k)) if sup <= some_good]
        policy = dict(via)
        values, policy, a = _policy_iteration(model, domain, policy, allowed, maximize=False)
        approx |= a
        minimum: Value = values[0]
        min_pol = _as_scheduler(model, policy)
    else:
        minimum, min_pol = INF, None
    return MinMaxResult(minimum, maximum, min_pol, max_pol, approx)


def expected_reward_minmax(net: WorkflowNet, state_cap: int = DEFAULT_STATE_CAP) -> tuple[Value, Value]:
    res = minmax_values(build_mdp(net, state_cap))
    return res.minimum, res.maximum


# ---------------------------------------------------------------------------
# Soundness, confusion, reports
# ---------------------------------------------------------------------------

def _marking_graph(enc: _Encoded, state_cap: int) -> tuple[list[int], list[list[int]], set[int]]:
    masks = [enc.initial]
    index = {enc.initial: 0}
    succ: list[list[int]] = []
    fired: set[int] = set()
    k = 0
    while k < len(masks):
        m = masks[k]
        out = []
        for j in enc.enabled(m):
            fired.add(j)
            m2 = enc.fire(m, j)
            k2 = index.get(m2)
            if k2 is None:
                if len(masks) >= state_cap:
                    raise StateCapExceeded(state_cap)
                k2 = index[m2] = len(masks)
                masks.append(m2)
            out.append(k2)
        succ.append(out)
        k += 1
    return masks, succ, fired


def check_soundness_explicit(net: WorkflowNet, state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Soundness by exhaustive exploration of the reachable markings.

    Sound means: the final marking is reachable from every reachable marking
    and every transition is enabled somewhere. ``UnsafeNet`` is raised when a
    reachable firing breaks 1-safeness.
    """
    enc = _Encoded(net)
    masks, succ, fired = _marking_graph(enc, state_cap)
    if len(fired) != len(enc.names):
        return False
    try:
        final = masks.index(enc.final)
    except ValueError:
        return False
    pred: list[list[int]] = [[] for _ in masks]
    for k, outs in enumerate(succ):
        for j in outs:
            pred[j].append(k)
    seen = {final}
    todo = deque([final])
    while todo:
        k = todo.popleft()
        for j in pred[k]:
            if j not in seen:
                seen.add(j)
                todo.append(j)
    return len(seen) == len(masks)


def confusion_free_on(model: MdpModel) -> bool:
    """Check the confused-marking condition on every explored marking."""
    enc = model._enc
    for m in model.masks:
        en = enc.enabled(m)
        for a in en:
            for b in en:
                if a == b or enc.pre[a] & enc.pre[b]:
                    continue
                m2 = enc.fire(m, a)
                before = {j for j in en if enc.pre[j] & enc.pre[b]}
                after = {j for j in enc.enabled(m2) if enc.pre[j] & enc.pre[b]}
                if before != after:
                    return False
    return True


@dataclass
class OracleReport:
    reachable_state_count: int
    sound: bool
    confusion_free_on_explored: bool
    expected_min: Value
    expected_max: Value
    per_scheduler: dict[str, Value] = field(default_factory=dict)
    approximate: bool = False


def oracle_report(net: WorkflowNet, state_cap: int = DEFAULT_STATE_CAP,
                  schedulers: Iterable[str] = ("min-id", "max-id")) -> OracleReport:
    model = build_mdp(net, state_cap)
    mm = minmax_values(model)
    per = {}
    approx = mm.approximate
    for name in schedulers:
        res = chain_value(model, SCHEDULERS[name]())
        per[name] = res.value
        approx |= res.approximate
    return OracleReport(
        reachable_state_count=model.state_count,
        sound=check_soundness_explicit(net, state_cap),
        confusion_free_on_explored=confusion_free_on(model),
        expected_min=mm.minimum,
        expected_max=mm.maximum,
        per_scheduler=per,
        approximate=approx,
    )


# ---------------------------------------------------------------------------
# Firing sequences, paths and the probabilistic language
# ---------------------------------------------------------------------------

def run_sequence(net: WorkflowNet, sequence: Sequence[str]) -> tuple[frozenset, Fraction]:
    """Fire ``sequence`` from the initial marking; returns (marking, total reward)."""
    m = net.initial_marking
    total = Fraction(0)
    for n, t in enumerate(sequence):
        try:
            m = fire(net, m, t)
        except (NotEnabled, UnsafeFiring) as exc:
            raise NotFirable(f"{t} cannot fire at position {n}: {exc}") from exc
        total += net.reward[t]
    return m, total


@dataclass(frozen=True)
class SwapVerdict:
    valid: bool
    marking: frozenset
    swapped_marking: frozenset | None
    reward: Fraction
    swapped_reward: Fraction | None


def mazurkiewicz_swap_check(net: WorkflowNet, sequence: Sequence[str], index: int) -> SwapVerdict:
    """Swap the independent transitions at ``index`` and ``index + 1`` and compare."""
    seq = list(sequence)
    if index < 0 or index + 1 >= len(seq):
        raise NotFirable(f"index {index} has no successor in a sequence of length {len(seq)}")
    marking, reward = run_sequence(net, seq)
    a, b = seq[index], seq[index + 1]
    if net.pre[a] & net.pre[b]:
        raise NotIndependent(f"{a} and {b} share input places")
    seq[index], seq[index + 1] = b, a
    try:
        m2, r2 = run_sequence(net, seq)
    except NotFirable:
        return SwapVerdict(False, marking, None, reward, None)
    return SwapVerdict(m2 == marking and r2 == reward, marking, m2, reward, r2)


def sequence_to_path(net: WorkflowNet, sequence: Sequence[str]) -> list[MdpState]:
    """The MDP path ``I (M1,t1) (M2,t2) ...`` of a firing sequence."""
    path = [INITIAL]
    m = net.initial_marking
    for t in sequence:
        m = fire(net, m, t)
        path.append(MdpState("pair", m, t))
    return path


def path_to_sequence(path: Sequence[MdpState]) -> list[str]:
    return [s.last for s in path if s.tag == "pair"]


def language_probability(net: WorkflowNet, scheduler: Scheduler, sequence: Sequence[str]) -> Fraction:
    """Exact probability that ``scheduler`` produces ``sequence`` as a prefix."""
    enc = _Encoded(net)
    m = enc.initial
    prob = Fraction(1)
    history: list[str] = []
    pos = {t: k for k, t in enumerate(enc.names)}
    for t in sequence:
        sets = enc.conflict_sets(m)
        options = [tuple(enc.names[j] for j in g) for g in sets]
        if not options or t not in pos:
            return Fraction(0)
        chosen = tuple(scheduler.choose(tuple(history), enc.unmask(m), options))
        if t not in chosen:
            return Fraction(0)
        g = sets[options.index(chosen)]
        prob *= dict(enc.distribution(g))[pos[t]]
        m = enc.fire(m, pos[t])
        history.append(t)
    return prob


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

@dataclass
class SimulationResult:
    runs: int
    mean: Fraction
    variance: Fraction
    prefix_counts: Counter

    @property
    def stderr(self) -> float:
        return (float(self.variance) / self.runs) ** 0.5 if self.runs else 0.0

    def frequency(self, prefix: Sequence[str]) -> float:
        """Empirical probability of observing ``prefix``."""
        return self.prefix_counts[tuple(prefix)] / self.runs


def simulate(net: WorkflowNet, scheduler: Scheduler | None = None, run_count: int = 10_000,
             seed: int | None = 0, step_bound: int = DEFAULT_STEP_BOUND,
             prefix_depth: int = 2) -> SimulationResult:
    """Sample ``run_count`` runs from ``I`` to ``O`` and summarize the total reward.

    Runs are drawn from one ``random.Random(seed)`` stream in run order, so a
    fixed seed reproduces the result exactly.
    """
    scheduler = scheduler or MinIdScheduler()
    enc = _Encoded(net)
    rng = random.Random(seed)
    memo: dict[int, tuple] = {}

    def options_at(m):
        hit = memo.get(m)
        if hit is None:
            sets = enc.conflict_sets(m)
            names = [tuple(enc.names[j] for j in g) for g in sets]
            tables = []
            for g in sets:
                acc, cum = 0.0, []
                for k in g:
                    acc += float(enc.weight[k])
                    cum.append(acc)
                tables.append((g, cum))
            hit = memo[m] = (names, tables)
        return hit

    totals: list[Fraction] = []
    prefixes: Counter = Counter()
    for _run in range(run_count):
        m = enc.initial
        total = Fraction(0)
        history: list[str] = []
        steps = 0
        while m != enc.final:
            names, tables = options_at(m)
            if not names:
                raise StepBoundExceeded(
                    f"run {_run} deadlocked at {sort_ids(enc.unmask(m))}; it would never reach O")
            if scheduler.memoryless:
                chosen = scheduler.pick(enc.unmask(m), names)
            else:
                chosen = scheduler.choose(tuple(history), enc.unmask(m), names)
            g, cum = tables[names.index(tuple(chosen))]
            k = g[min(bisect.bisect_right(cum, rng.random() * cum[-1]), len(g) - 1)]
            total += enc.reward[k]
            m = enc.fire(m, k)
            history.append(enc.names[k])
            steps += 1
            if steps > step_bound:
                raise StepBoundExceeded(f"run {_run} exceeded {step_bound} steps")
        totals.append(total)
        for d in range(1, min(prefix_depth, len(history)) + 1):
            prefixes[tuple(history[:d])] += 1
    mean = sum(totals, Fraction(0)) / run_count
    variance = statistics.variance(totals, mean) if run_count > 1 else Fraction(0)
    return SimulationResult(run_count, mean, Fraction(variance), prefixes)
