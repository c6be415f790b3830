"""Native text format, PNML import and JSON result lines.

Native grammar, one declaration per line::

    place <id>
    initial <id>
    final <id>
    transition <id> weight <p/q> reward <p/q>
    arc <id> <id>

``initial`` and ``final`` also declare their place. A ``#`` at the start of
a line or after whitespace begins a comment. Ids are
``[A-Za-z_][A-Za-z0-9_]*`` with an optional ``#<digits>`` suffix, which is
how the reduction engine names the transitions it creates.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import InvalidStructure, NetSyntaxError, SemanticError, UnsupportedFeature, XmlError
from .net import WorkflowNet, clusters, is_free_choice, sort_ids, validate_structure
from .values import INF, format_value

_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:#[0-9]+)?\Z")
_RATIONAL = re.compile(r"[0-9]+(?:/[0-9]+)?\Z")
_TOKEN = re.compile(r"\S+")
_ARITY = {"place": 1, "initial": 1, "final": 1, "arc": 2}


def _rational(text: str, line: int, col: int) -> Fraction:
    if not _RATIONAL.match(text):
        raise NetSyntaxError(f"expected a rational p/q or integer, got {text!r}", line, col)
    num, _, den = text.partition("/")
    if den and int(den) == 0:
        raise NetSyntaxError("zero denominator", line, col)
    return Fraction(int(num), int(den) if den else 1)


def _strip_comment(raw: str) -> str:
    for k, ch in enumerate(raw):
        if ch == "#" and (k == 0 or raw[k - 1].isspace()):
            return raw[:k]
    return raw


def parse_native(text: str, name: str = "net") -> WorkflowNet:
    """Parse a native document into a net with exact rational labels."""
    places: dict[str, int] = {}
    initial = final = None
    labels: dict[str, tuple[Fraction, Fraction]] = {}
    arcs: list[tuple[str, str, int]] = []
    seen_arcs: set = set()
    explicit: set = set()
    declarations = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(_strip_comment(raw))]
        if not tokens:
            continue
        declarations += 1
        kw, kw_col = tokens[0]
        args = tokens[1:]
        if kw == "transition":
            if len(args) != 5 or args[1][0] != "weight" or args[3][0] != "reward":
                col = args[0][1] if args else kw_col
                raise NetSyntaxError("expected: transition <id> weight <p/q> reward <p/q>", lineno, col)
        elif kw in _ARITY:
            if len(args) != _ARITY[kw]:
                col = args[_ARITY[kw]][1] if len(args) > _ARITY[kw] else kw_col + len(kw)
                raise NetSyntaxError(f"{kw} takes {_ARITY[kw]} id(s)", lineno, col)
        else:
            raise NetSyntaxError(f"unknown keyword {kw!r}", lineno, kw_col)
        for tok, col in args[:1] + (args[1:2] if kw == "arc" else []):
            if not _ID.match(tok):
                raise NetSyntaxError(f"invalid id {tok!r}", lineno, col)
        ident = args[0][0]

        if kw == "place":
            if ident in explicit:
                raise SemanticError(f"place {ident} declared twice", lineno)
            explicit.add(ident)
            places.setdefault(ident, lineno)
        elif kw in ("initial", "final"):
            if (initial if kw == "initial" else final) is not None:
                raise SemanticError(f"{kw} place declared twice", lineno)
            if kw == "initial":
                initial = ident
            else:
                final = ident
            places.setdefault(ident, lineno)
        elif kw == "transition":
            if ident in labels:
                raise SemanticError(f"transition {ident} declared twice", lineno)
            w = _rational(args[2][0], lineno, args[2][1])
            r = _rational(args[4][0], lineno, args[4][1])
            labels[ident] = (w, r)
        else:
            key = (ident, args[1][0])
            if key in seen_arcs:
                raise SemanticError(f"arc {key[0]} {key[1]} declared twice", lineno)
            seen_arcs.add(key)
            arcs.append((ident, args[1][0], lineno))

    if not declarations:
        raise NetSyntaxError("empty document", 1, 1)
    clash = set(places) & set(labels)
    if clash:
        raise SemanticError(f"ids used as both place and transition: {sort_ids(clash)}")
    if initial is None:
        raise SemanticError("missing initial declaration")
    if final is None:
        raise SemanticError("missing final declaration")
    for src, dst, lineno in arcs:
        for ident in (src, dst):
            if ident not in places and ident not in labels:
                raise SemanticError(f"arc references undeclared id {ident}", lineno)
        if (src in places) == (dst in places):
            raise SemanticError(f"arc {src} {dst} must join a place and a transition", lineno)
    return WorkflowNet.build(places, labels, [(s, d) for s, d, _ in arcs],
                             initial=initial, final=final, name=name)


def render_native(net: WorkflowNet) -> str:
    """Canonical document: initial, final, other places, transitions, arcs, each sorted by id."""
    lines = [f"initial {net.initial}", f"final {net.final}"]
    lines += [f"place {p}" for p in net.sorted_places() if p not in (net.initial, net.final)]
    lines += [f"transition {t} weight {format_value(net.weight[t])} reward {format_value(net.reward[t])}"
              for t in net.sorted_transitions()]
    lines += [f"arc {a} {b}" for a, b in net.arcs]
    return "\n".join(lines) + "\n"


def read_net(path) -> WorkflowNet:
    """Load a native (``.pwn``) or PNML (``.pnml``/``.xml``) file."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".pnml", ".xml"):
        return import_pnml(text, name=path.stem)
    return parse_native(text, name=path.stem)


# ---------------------------------------------------------------------------
# PNML
# ---------------------------------------------------------------------------

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _children(elem, name):
    return [c for c in elem if _local(c.tag) == name]


def _text_of(elem) -> str | None:
    for c in elem.iter():
        if _local(c.tag) == "text" and c.text is not None:
            return c.text.strip()
    return None


def _sanitize(raw: str, used: set) -> str:
    base = re.sub(r"[^A-Za-z0-9_]", "_", raw) or "_"
    if not (base[0].isalpha() or base[0] == "_"):
        base = "_" + base
    ident, k = base, 1
    while ident in used:
        ident = f"{base}_{k}"
        k += 1
    used.add(ident)
    return ident


def _annotation(elem, key: str) -> str | None:
    for ts in elem.iter():
        if _local(ts.tag) != "toolspecific":
            continue
        for c in ts.iter():
            if _local(c.tag) == key:
                text = (c.text or "").strip() or _text_of(c)
                if text:
                    return text
    return None


def import_pnml(xml_text: str, name: str | None = None) -> WorkflowNet:
    """Import a 1-safe place/transition net from PNML.

    Weights default to 1 and rewards to 1. In a free-choice net, clusters
    without any weight annotation get uniform weights. A ``<toolspecific>``
    child element named ``weight`` or ``reward`` carrying ``p/q`` text
    overrides the default and is kept as given.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise XmlError(f"malformed XML: {exc}") from exc
    nets = [e for e in root.iter() if _local(e.tag) == "net"]
    if len(nets) != 1:
        raise UnsupportedFeature(f"expected exactly one <net>, found {len(nets)}")
    net_el = nets[0]
    pages = _children(net_el, "page")
    if len(pages) > 1:
        raise UnsupportedFeature("multiple pages are not supported")
    body = pages[0] if pages else net_el
    if any(_local(e.tag) == "page" for e in body.iter() if e is not body):
        raise UnsupportedFeature("nested pages are not supported")

    used: set = set()
    ids: dict[str, str] = {}
    place_ids, trans = [], {}
    weight_given: set = set()
    for el in body:
        tag = _local(el.tag)
        if tag not in ("place", "transition"):
            continue
        raw = el.get("id")
        if raw is None:
            raise SemanticError(f"<{tag}> without id")
        if raw in ids:
            raise SemanticError(f"duplicate id {raw}")
        ident = ids[raw] = _sanitize(raw, used)
        if tag == "place":
            for im in _children(el, "initialMarking"):
                tok = _text_of(im)
                if tok not in (None, "0", "1"):
                    raise UnsupportedFeature(f"place {raw} has initial marking {tok}")
            place_ids.append(ident)
        else:
            w, r = Fraction(1), Fraction(1)
            for key in ("weight", "reward"):
                text = _annotation(el, key)
                if text is None:
                    continue
                try:
                    val = Fraction(text)
                except (ValueError, ZeroDivisionError) as exc:
                    raise SemanticError(f"bad {key} annotation {text!r} on {raw}") from exc
                if key == "weight":
                    w = val
                    weight_given.add(ident)
                else:
                    r = val
            trans[ident] = (w, r)

    arcs = []
    for el in body:
        if _local(el.tag) != "arc":
            continue
        for ins in _children(el, "inscription"):
            val = _text_of(ins)
            if val not in (None, "1"):
                raise UnsupportedFeature(f"arc {el.get('id')} has multiplicity {val}")
        src, dst = el.get("source"), el.get("target")
        if src not in ids or dst not in ids:
            raise SemanticError(f"arc {el.get('id')} references unknown node")
        arcs.append((ids[src], ids[dst]))

    place_set = set(place_ids)
    pre_count = {p: 0 for p in place_ids}
    post_count = {p: 0 for p in place_ids}
    for a, b in arcs:
        if (a in place_set) == (b in place_set):
            raise SemanticError(f"arc {a} -> {b} must join a place and a transition")
        if b in place_set:
            pre_count[b] += 1
        else:
            post_count[a] += 1
    sources = [p for p in place_ids if pre_count[p] == 0]
    sinks = [p for p in place_ids if post_count[p] == 0]
    if len(sources) != 1:
        raise SemanticError(f"no unique source place (candidates: {sort_ids(sources)})")
    if len(sinks) != 1:
        raise SemanticError(f"no unique sink place (candidates: {sort_ids(sinks)})")

    net_name = name or net_el.get("id") or "net"
    net = WorkflowNet.build(place_ids, trans, arcs, initial=sources[0], final=sinks[0], name=net_name)
    if is_free_choice(net):
        # clusters with an explicit weight keep their annotated values
        weight = dict(net.weight)
        for c in clusters(net):
            if not weight_given & set(c):
                for t in c:
                    weight[t] = Fraction(1, len(c))
        net = net.replace(weight=weight)
    violations = validate_structure(net)
    if violations:
        raise InvalidStructure(violations)
    return net


# ---------------------------------------------------------------------------
# Analysis results
# ---------------------------------------------------------------------------

@dataclass
class AnalysisResult:
    """One analysis outcome, rendered as a single JSON object per line."""

    net: str
    verdict: str  # sound | unsound | not_free_choice | inconclusive | error
    expected_reward: Fraction | None = None
    rule_counts: Mapping[str, int] = field(default_factory=dict)
    oracle: Mapping[str, object] | None = None
    timings_ms: Mapping[str, float] = field(default_factory=dict)
    message: str | None = None

    def to_dict(self) -> dict:
        out: dict = {"net": self.net, "verdict": self.verdict}
        if self.verdict == "sound" and self.expected_reward is not None:
            out["expected_reward"] = format_value(self.expected_reward)
        out["rule_counts"] = dict(self.rule_counts)
        if self.oracle is not None:
            out["oracle"] = {k: _jsonable(v) for k, v in self.oracle.items()}
        out["timings_ms"] = {k: round(v, 3) for k, v in self.timings_ms.items()}
        if self.message:
            out["message"] = self.message
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def _jsonable(v):
    if isinstance(v, Fraction) or v is INF:
        return format_value(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v
