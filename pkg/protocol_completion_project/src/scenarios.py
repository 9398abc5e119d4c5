# src/scenarios.py - Compile scenario charts into incomplete process automata

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .automata import Automaton, Transition
from .automaton_io import tokenize_lines
from .errors import FormatError, NondeterminismError, ScenarioError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LaneItem:
    kind: str  # 'send', 'receive' or 'label'
    value: str

    @property
    def is_event(self):
        return self.kind != 'label'

    def __str__(self):
        mark = {'send': '!', 'receive': '?', 'label': '@'}[self.kind]
        return f"{mark} {self.value}"


@dataclass(frozen=True)
class Scenario:
    name: str
    lanes: tuple  # ((process, (LaneItem, ...)), ...)
    symmetric_under: Optional[str] = None

    def lane(self, process):
        for proc, items in self.lanes:
            if proc == process:
                return items
        return None

    @property
    def processes(self):
        return tuple(proc for proc, _ in self.lanes)

    def projection(self, process):
        """Events of one lane, labels dropped"""
        return tuple(item.value for item in (self.lane(process) or ()) if item.is_event)


@dataclass(frozen=True)
class SymmetrySubstitution:
    name: str
    event_map: Mapping
    label_map: Mapping = field(default_factory=dict)

    def event(self, e):
        try:
            return self.event_map[e]
        except KeyError:
            raise ScenarioError(f"substitution '{self.name}' does not map event '{e}'") from None

    def label(self, token):
        return self.label_map.get(token, token)


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple
    substitutions: Mapping

    def expanded(self):
        """Scenarios in file order followed by their symmetric copies"""
        copies = []
        for s in self.scenarios:
            if s.symmetric_under is not None:
                copies.append(apply_symmetry(s, self.substitutions[s.symmetric_under]))
        return list(self.scenarios), copies


@dataclass(frozen=True)
class Skeleton:
    """
    Incomplete automaton for one process, with the labels attached to states.

    `anchored` skeletons start in the process's initial state; symmetric copies
    are not anchored and join the others only through their labels.
    """
    process: str
    automaton: Automaton
    labels: Mapping  # state -> frozenset of label tokens
    histories: tuple
    anchored: bool = True


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_scenarios(text, interfaces, source='<string>'):
    """
    Parse scenario charts and substitution blocks.

    Args:
        interfaces: process name -> Automaton declaring its inputs and outputs

    Returns:
        ScenarioSet
    """
    scenarios = []
    substitutions = {}
    current = None   # ('scenario', dict) or ('subst', dict)
    lane = None

    def close():
        if current is None:
            return
        kind, block = current
        if kind == 'scenario':
            if not block['lanes']:
                raise FormatError(f"scenario '{block['name']}' has no lanes", source, block['line'])
            scenarios.append(block)
        else:
            substitutions[block['name']] = SymmetrySubstitution(
                block['name'], dict(block['events']), dict(block['labels']))

    for number, tokens in tokenize_lines(text):
        keyword, args = tokens[0], tokens[1:]
        if keyword == 'scenario':
            close()
            if len(args) not in (1, 3) or (len(args) == 3 and args[1] != 'symmetric'):
                raise FormatError('expected: scenario <name> [symmetric <subst>]', source, number)
            current = ('scenario', {'name': args[0], 'line': number, 'lanes': [],
                                    'symmetric': args[2] if len(args) == 3 else None})
            lane = None
        elif keyword == 'subst':
            close()
            if len(args) != 1:
                raise FormatError('expected: subst <name>', source, number)
            if args[0] in substitutions:
                raise FormatError(f"substitution '{args[0]}' defined twice", source, number)
            current = ('subst', {'name': args[0], 'events': {}, 'labels': {}})
            lane = None
        elif keyword in ('map', 'maplabel'):
            if current is None or current[0] != 'subst':
                raise FormatError(f"'{keyword}' outside a subst block", source, number)
            if len(args) != 2:
                raise FormatError(f"expected: {keyword} <from> <to>", source, number)
            table = current[1]['events' if keyword == 'map' else 'labels']
            _add_pair(table, args[0], args[1], source, number)
        elif keyword == 'lane':
            if current is None or current[0] != 'scenario':
                raise FormatError("'lane' outside a scenario", source, number)
            if len(args) != 1:
                raise FormatError('expected: lane <process>', source, number)
            if args[0] not in interfaces:
                raise FormatError(f"unknown process '{args[0]}'", source, number)
            if any(proc == args[0] for proc, _ in current[1]['lanes']):
                raise FormatError(f"process '{args[0]}' has two lanes", source, number)
            lane = (args[0], [])
            current[1]['lanes'].append(lane)
        elif keyword in ('!', '?', '@'):
            if lane is None:
                raise FormatError(f"'{keyword}' line before any lane", source, number)
            if len(args) != 1:
                raise FormatError(f"expected: {keyword} <name>", source, number)
            item = _lane_item(keyword, args[0], interfaces[lane[0]], lane[0])
            if isinstance(item, str):
                raise FormatError(item, source, number)
            lane[1].append(item)
        else:
            raise FormatError(f"unknown keyword '{keyword}'", source, number)
    close()

    if not scenarios:
        raise FormatError('no scenario found', source)
    result = []
    for block in scenarios:
        if block['symmetric'] is not None and block['symmetric'] not in substitutions:
            raise FormatError(f"unknown substitution '{block['symmetric']}'", source, block['line'])
        lanes = tuple((proc, tuple(items)) for proc, items in block['lanes'])
        result.append(Scenario(block['name'], lanes, block['symmetric']))
    logger.debug("parsed %d scenarios and %d substitutions from %s",
                 len(result), len(substitutions), source)
    return ScenarioSet(tuple(result), substitutions)


def _add_pair(table, a, b, source, number):
    # `map a b` is read as a swap: a -> b and b -> a
    for x, y in ((a, b), (b, a)):
        if table.get(x, y) != y:
            raise FormatError(f"'{x}' is mapped to both '{table[x]}' and '{y}'", source, number)
        table[x] = y


def _lane_item(mark, value, interface, process):
    if mark == '@':
        return LaneItem('label', value)
    if mark == '!':
        if not interface.is_output(value):
            return f"'{value}' is not an output of {process}"
        return LaneItem('send', value)
    if not interface.is_input(value):
        return f"'{value}' is not an input of {process}"
    return LaneItem('receive', value)


def parse_scenario(text, interfaces, source='<string>'):
    scenario_set = parse_scenarios(text, interfaces, source)
    if len(scenario_set.scenarios) != 1:
        raise FormatError(f"expected exactly one scenario, found {len(scenario_set.scenarios)}",
                          source)
    return scenario_set.scenarios[0]


def load_scenarios(path, interfaces):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", str(path)) from exc
    return parse_scenarios(text, interfaces, str(path))


def emit_scenarios(scenario_set: ScenarioSet):
    lines = []
    for s in scenario_set.scenarios:
        header = f"scenario {s.name}"
        if s.symmetric_under:
            header += f" symmetric {s.symmetric_under}"
        lines.append(header)
        for proc, items in s.lanes:
            lines.append(f"lane {proc}")
            lines.extend(str(item) for item in items)
    for name, sub in scenario_set.substitutions.items():
        lines.append(f"subst {name}")
        for kind, table in (('map', sub.event_map), ('maplabel', sub.label_map)):
            done = set()
            for a, b in table.items():
                if a in done:
                    continue
                done.update((a, b))
                lines.append(f"{kind} {a} {b}")
    return '\n'.join(lines) + '\n'


# ---------------------------------------------------------------------------
# Symmetry
# ---------------------------------------------------------------------------

def apply_symmetry(s: Scenario, sub: SymmetrySubstitution) -> Scenario:
    """Replace every event (and label) of the scenario per the substitution"""
    lanes = []
    for proc, items in s.lanes:
        mapped = tuple(LaneItem(item.kind, sub.label(item.value) if item.kind == 'label'
                                else sub.event(item.value))
                       for item in items)
        lanes.append((proc, mapped))
    return Scenario(f"{s.name}~{sub.name}", tuple(lanes), None)


def check_lane_directions(s: Scenario, interfaces):
    for proc, items in s.lanes:
        for item in items:
            if item.is_event:
                problem = _lane_item('!' if item.kind == 'send' else '?', item.value,
                                     interfaces[proc], proc)
                if isinstance(problem, str):
                    raise ScenarioError(f"scenario {s.name}: {problem}")


# ---------------------------------------------------------------------------
# History trees and label merging
# ---------------------------------------------------------------------------

def lane_to_skeleton(s: Scenario, process, interface: Optional[Automaton] = None,
                     anchored=True) -> Skeleton:
    """
    One state per history prefix of the process's lane.

    Labels add no states; a label is attached to the state reached by the
    history it follows.
    """
    items = s.lane(process)
    if items is None:
        raise ScenarioError(f"scenario {s.name} has no lane for '{process}'")
    histories = [()]
    labels = {}
    transitions = []
    current = 0
    for item in items:
        if item.kind == 'label':
            labels.setdefault(current, set()).add(item.value)
            continue
        direction = '!' if item.kind == 'send' else '?'
        histories.append(histories[current] + ((direction, item.value),))
        nxt = len(histories) - 1
        transitions.append(Transition(current, item.value, nxt))
        current = nxt

    if interface is not None:
        inputs, outputs = interface.inputs, interface.outputs
    else:
        inputs = tuple(dict.fromkeys(i.value for i in items if i.kind == 'receive'))
        outputs = tuple(dict.fromkeys(i.value for i in items if i.kind == 'send'))
    automaton = Automaton(
        name=process,
        state_names=tuple(f"h{k}" for k in range(len(histories))),
        initial=0,
        inputs=inputs,
        outputs=outputs,
        transitions=tuple(transitions),
    )
    return Skeleton(process, automaton, {q: frozenset(v) for q, v in labels.items()},
                    tuple(histories), anchored)


class _Classes:
    """Union-find with congruence closure on same-event successors"""

    def __init__(self, successors):
        self.parent = list(range(len(successors)))
        # per class representative: event -> some member destination
        self.out = [dict(row) for row in successors]

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        pending = deque([(a, b)])
        while pending:
            x, y = pending.popleft()
            rx, ry = self.find(x), self.find(y)
            if rx == ry:
                continue
            if ry < rx:
                rx, ry = ry, rx
            self.parent[ry] = rx
            for event, dst in self.out[ry].items():
                if event in self.out[rx]:
                    pending.append((self.out[rx][event], dst))
                else:
                    self.out[rx][event] = dst
            self.out[ry] = {}


def merge_labels(skeletons, interface: Optional[Automaton] = None) -> Skeleton:
    """
    Identify states followed by the same label, within and across skeletons.

    All anchored skeletons share the initial state. Merging two states also
    merges their successors on a common event, so a label repeated along a
    lane folds the history tree into a cycle.

    Raises:
        NondeterminismError: a merged state ends up with an output next to
            any other transition
    """
    skeletons = list(skeletons)
    if not skeletons:
        raise ScenarioError('no skeletons to merge')
    process = skeletons[0].process
    if any(sk.process != process for sk in skeletons):
        raise ScenarioError('skeletons of different processes cannot be merged')
    interface = interface or skeletons[0].automaton

    offsets, successors, histories, label_of = [], [], [], {}
    outgoing = []  # (global src, event, global dst)
    for sk in skeletons:
        base = len(successors)
        offsets.append(base)
        for q in sk.automaton.states:
            successors.append([])
            histories.append(sk.histories[q] if q < len(sk.histories) else ())
        for t in sk.automaton.transitions:
            successors[base + t.src].append((t.event, base + t.dst))
            outgoing.append((base + t.src, t.event, base + t.dst))
        for q, tokens in sk.labels.items():
            for token in tokens:
                label_of.setdefault(token, []).append(base + q)

    # a skeleton may already be non-deterministic only through same-event inputs
    classes = _Classes([[] for _ in successors])
    for src, event, dst in outgoing:
        rep = classes.find(src)
        existing = classes.out[rep].get(event)
        if existing is None:
            classes.out[rep][event] = dst
        else:
            classes.union(existing, dst)

    roots = [offsets[i] + sk.automaton.initial for i, sk in enumerate(skeletons) if sk.anchored]
    if not roots:
        roots = [offsets[0] + skeletons[0].automaton.initial]
    for r in roots[1:]:
        classes.union(roots[0], r)
    for token in sorted(label_of):
        members = label_of[token]
        for m in members[1:]:
            classes.union(members[0], m)

    reps = sorted({classes.find(x) for x in range(len(successors))})
    position = {r: k for k, r in enumerate(reps)}
    class_labels = {}
    for token, members in label_of.items():
        class_labels.setdefault(position[classes.find(members[0])], set()).add(token)

    names = []
    for k in range(len(reps)):
        tokens = sorted(class_labels.get(k, ()))
        names.append('+'.join(tokens) if tokens else f"q{k}")
    transitions = sorted({Transition(position[classes.find(s)], e, position[classes.find(d)])
                          for s, e, d in outgoing})

    conflicts = _conflicts(transitions, interface, names)
    if conflicts:
        raise NondeterminismError(process, conflicts)

    automaton = Automaton(
        name=process,
        state_names=tuple(names),
        initial=position[classes.find(roots[0])],
        inputs=interface.inputs,
        outputs=interface.outputs,
        transitions=tuple(transitions),
    )
    logger.debug("merged %d skeletons of %s into %d states, %d transitions",
                 len(skeletons), process, automaton.num_states, len(transitions))
    return Skeleton(process, automaton,
                    {k: frozenset(v) for k, v in class_labels.items()},
                    tuple(histories[r] for r in reps), True)


def _conflicts(transitions, interface, names):
    by_state = {}
    for t in transitions:
        by_state.setdefault(t.src, []).append(t)
    groups = []
    for q, out in sorted(by_state.items()):
        if len(out) < 2:
            continue
        events = [t.event for t in out]
        if any(interface.is_output(e) for e in events) or len(set(events)) != len(events):
            groups.append(tuple((names[t.src], t.event, names[t.dst]) for t in out))
    return groups


def compile_scenarios(scenario_set: ScenarioSet, interfaces):
    """
    Build one incomplete automaton per process named in the scenarios.

    Returns:
        dict process -> Skeleton (merged)
    """
    originals, copies = scenario_set.expanded()
    for s in originals + copies:
        check_lane_directions(s, interfaces)
    per_process = {}
    for s, anchored in [(s, True) for s in originals] + [(s, False) for s in copies]:
        for proc in s.processes:
            per_process.setdefault(proc, []).append(
                lane_to_skeleton(s, proc, interfaces[proc], anchored))
    merged = {}
    for proc, skeletons in per_process.items():
        merged[proc] = merge_labels(skeletons, interfaces[proc])
        logger.info("skeleton for %s: %d states, %d transitions", proc,
                    merged[proc].automaton.num_states, len(merged[proc].automaton.transitions))
    return merged


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------

def replay_scenario(p, s: Scenario):
    """
    Search the product for a run whose projection on every lane's process
    equals that lane's events.

    Components without a lane move freely. Returns the run as a list of
    ProductTransition, or None when the scenario cannot be exhibited.
    """
    lanes = []
    for proc in s.processes:
        try:
            lanes.append((p.component_index(proc), s.projection(proc)))
        except KeyError:
            raise ScenarioError(f"scenario {s.name}: process '{proc}' is not in the system") from None
    goal = tuple(len(events) for _, events in lanes)
    start = (0, tuple(0 for _ in lanes))
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        g, positions = node
        if positions == goal:
            steps = []
            while parent[node] is not None:
                node, t = parent[node]
                steps.append(t)
            return list(reversed(steps))
        for t in p.succ[g]:
            moved = {c for c, _ in t.moves}
            nxt = list(positions)
            ok = True
            for k, (c, events) in enumerate(lanes):
                if c not in moved:
                    continue
                if positions[k] >= len(events) or events[positions[k]] != t.event:
                    ok = False
                    break
                nxt[k] += 1
            if not ok:
                continue
            child = (t.dst, tuple(nxt))
            if child not in parent:
                parent[child] = (node, t)
                queue.append(child)
    return None
