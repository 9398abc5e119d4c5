# src/verify.py - Requirement checks over reachable products

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import networkx as nx

from .automata import StateClass, classify_state
from .compose import Product, can_emit, sync_enabled
from .errors import ProfileError

logger = logging.getLogger(__name__)


class NonBlocking(Enum):
    NONE = 'none'
    WEAK = 'weak'
    STRONG = 'strong'


@dataclass(frozen=True)
class RequirementProfile:
    check_deadlock: bool = True
    check_safety: bool = True
    check_liveness: bool = True
    nonblocking: NonBlocking = NonBlocking.NONE

    def __post_init__(self):
        if isinstance(self.nonblocking, str):
            object.__setattr__(self, 'nonblocking', NonBlocking(self.nonblocking))
        if not self.enabled():
            raise ProfileError('requirement profile enables no check')

    def enabled(self):
        names = []
        if self.check_deadlock:
            names.append('deadlock')
        if self.check_safety:
            names.append('safety')
        if self.check_liveness:
            names.append('liveness')
        if self.nonblocking is not NonBlocking.NONE:
            names.append('nonblocking')
        return names

    @classmethod
    def from_names(cls, names):
        """Build from tokens like `deadlock safety nonblocking=weak`"""
        flags = {'check_deadlock': False, 'check_safety': False, 'check_liveness': False,
                 'nonblocking': NonBlocking.NONE}
        for name in names:
            key, _, value = name.partition('=')
            if key == 'deadlock':
                flags['check_deadlock'] = True
            elif key == 'safety':
                flags['check_safety'] = True
            elif key == 'liveness':
                flags['check_liveness'] = True
            elif key == 'nonblocking':
                try:
                    flags['nonblocking'] = NonBlocking(value or 'strong')
                except ValueError:
                    raise ProfileError(f"unknown non-blocking mode '{value}'") from None
            else:
                raise ProfileError(f"unknown requirement '{name}'")
        return cls(**flags)

    def describe(self):
        parts = [n for n in self.enabled() if n != 'nonblocking']
        if self.nonblocking is not NonBlocking.NONE:
            parts.append(f"nonblocking={self.nonblocking.value}")
        return ' '.join(parts)


FULL_PROFILE = RequirementProfile(True, True, True, NonBlocking.STRONG)


# ---------------------------------------------------------------------------
# Witnesses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Run:
    """Finite run from the initial global state"""
    steps: tuple
    end: int

    def events(self):
        return [t.event for t in self.steps]

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class Lasso:
    """Stem from the initial state to `start`, then a cycle back to `start`"""
    stem: tuple
    cycle: tuple
    start: int

    def events(self):
        return {'stem': [t.event for t in self.stem], 'cycle': [t.event for t in self.cycle]}


@dataclass(frozen=True)
class BlockingWitness:
    """Reachable state where an output is blocked, and the blocked event"""
    run: Run
    event: str

    @property
    def state(self):
        return self.run.end

    def events(self):
        return self.run.events() + [self.event]


@dataclass(frozen=True)
class RequirementResult:
    requirement: str
    passed: bool
    witness: object = None
    detail: str = ''

    def to_dict(self, product: Optional[Product] = None):
        data = {'requirement': self.requirement,
                'verdict': 'pass' if self.passed else 'fail'}
        if self.detail:
            data['detail'] = self.detail
        if self.witness is not None:
            data['witness'] = self.witness.events()
            if product is not None:
                end = _witness_end(self.witness)
                data['state'] = product.state_label(end)
        return data


def _witness_end(witness):
    if isinstance(witness, Lasso):
        return witness.start
    if isinstance(witness, BlockingWitness):
        return witness.state
    return witness.end


@dataclass
class VerificationReport:
    profile: RequirementProfile
    results: list = field(default_factory=list)
    product_states: int = 0
    product_transitions: int = 0

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    @property
    def failures(self):
        return [r for r in self.results if not r.passed]

    def result(self, requirement):
        for r in self.results:
            if r.requirement == requirement:
                return r
        return None

    def to_dict(self, product=None):
        return {
            'passed': self.passed,
            'profile': self.profile.describe(),
            'product_states': self.product_states,
            'product_transitions': self.product_transitions,
            'requirements': [r.to_dict(product) for r in self.results],
        }

    def render_text(self, product=None):
        lines = [f"Product: {self.product_states} states, {self.product_transitions} transitions"]
        for r in self.results:
            mark = '✓' if r.passed else '✗'
            lines.append(f"   {mark} {r.requirement}: {'pass' if r.passed else 'FAIL'}")
            if r.detail:
                lines.append(f"      {r.detail}")
            if r.witness is not None:
                events = r.witness.events()
                if isinstance(events, dict):
                    lines.append(f"      stem:  {' '.join(events['stem']) or '(empty)'}")
                    lines.append(f"      cycle: {' '.join(events['cycle'])}")
                else:
                    lines.append(f"      run: {' '.join(events) or '(empty)'}")
                if product is not None:
                    lines.append(f"      at {product.state_label(_witness_end(r.witness))}")
        return '\n'.join(lines)


# ---------------------------------------------------------------------------
# Reachability and finite witnesses
# ---------------------------------------------------------------------------

def reachable(p: Product):
    """Global state vectors reachable from the initial state"""
    seen = {0}
    queue = deque([0])
    while queue:
        g = queue.popleft()
        for t in p.succ[g]:
            if t.dst not in seen:
                seen.add(t.dst)
                queue.append(t.dst)
    return {p.states[g] for g in seen}


def _shortest_run(p: Product, is_target):
    """BFS with parent pointers; returns the shortest run to a target state"""
    if is_target(0):
        return Run((), 0)
    parent = {0: None}
    queue = deque([0])
    while queue:
        g = queue.popleft()
        for t in p.succ[g]:
            if t.dst in parent:
                continue
            parent[t.dst] = t
            if is_target(t.dst):
                return Run(_path_to(parent, t.dst), t.dst)
            queue.append(t.dst)
    return None


def _path_to(parent, g):
    steps = []
    while parent[g] is not None:
        t = parent[g]
        steps.append(t)
        g = t.src
    return tuple(reversed(steps))


def run_to(p: Product, g):
    return _shortest_run(p, lambda h: h == g)


def find_deadlock(p: Product):
    return _shortest_run(p, lambda g: not p.succ[g])


def deadlock_states(p: Product):
    return [g for g in range(p.num_states) if not p.succ[g]]


def check_safety(p: Product):
    errors = p.error_states
    if not errors:
        return None
    return _shortest_run(p, lambda g: g in errors)


# ---------------------------------------------------------------------------
# Liveness: accepting cycles
# ---------------------------------------------------------------------------

def check_liveness_empty(p: Product, method='ndfs'):
    """
    Look for a reachable cycle through an accepting state.

    Returns:
        Lasso witness, or None when no accepting infinite run exists
    """
    if not p.accepting_states:
        return None
    if method == 'scc':
        return find_accepting_cycle_scc(p)
    return find_accepting_cycle_ndfs(p)


def find_accepting_cycle_ndfs(p: Product):
    """Nested depth-first search, iterative so deep products do not hit the recursion limit"""
    accepting = p.accepting_states
    blue = {0}
    red = set()
    # blue stack entries: (state, iterator over successors, transition that entered it)
    stack = [(0, iter(p.succ[0]), None)]
    while stack:
        g, it, _ = stack[-1]
        advanced = False
        for t in it:
            if t.dst not in blue:
                blue.add(t.dst)
                stack.append((t.dst, iter(p.succ[t.dst]), t))
                advanced = True
                break
        if advanced:
            continue
        if g in accepting:
            cycle = _red_search(p, g, red)
            if cycle is not None:
                stem = tuple(entry[2] for entry in stack[1:])
                return Lasso(stem, cycle, g)
        stack.pop()
    return None


def _red_search(p: Product, seed, red):
    red.add(seed)
    stack = [(seed, iter(p.succ[seed]), None)]
    while stack:
        g, it, _ = stack[-1]
        advanced = False
        for t in it:
            if t.dst == seed:
                path = tuple(entry[2] for entry in stack[1:]) + (t,)
                return path
            if t.dst not in red:
                red.add(t.dst)
                stack.append((t.dst, iter(p.succ[t.dst]), t))
                advanced = True
                break
        if not advanced:
            stack.pop()
    return None


def find_accepting_cycle_scc(p: Product):
    """Same question answered through strongly connected components"""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(p.num_states))
    for t in p.transitions():
        graph.add_edge(t.src, t.dst)
    for component in sorted(nx.strongly_connected_components(graph), key=min):
        candidates = sorted(g for g in component if g in p.accepting_states)
        if not candidates:
            continue
        if len(component) == 1 and not graph.has_edge(candidates[0], candidates[0]):
            continue
        start = candidates[0]
        stem = run_to(p, start)
        cycle = _cycle_within(p, start, component)
        return Lasso(stem.steps, cycle, start)
    return None


def _cycle_within(p: Product, start, component):
    for t in p.succ[start]:
        if t.dst == start:
            return (t,)
    parent = {}
    queue = deque()
    for t in p.succ[start]:
        if t.dst in component and t.dst not in parent:
            parent[t.dst] = t
            queue.append(t.dst)
    while queue:
        g = queue.popleft()
        for t in p.succ[g]:
            if t.dst == start:
                steps = [t]
                h = g
                while h != start:
                    steps.append(parent[h])
                    h = parent[h].src
                return tuple(reversed(steps))
            if t.dst in component and t.dst not in parent:
                parent[t.dst] = t
                queue.append(t.dst)
    raise AssertionError('strongly connected component without a cycle')


# ---------------------------------------------------------------------------
# Non-blockingness
# ---------------------------------------------------------------------------

def check_nonblocking(p: Product, mode=NonBlocking.STRONG):
    mode = NonBlocking(mode) if isinstance(mode, str) else mode
    if mode is NonBlocking.STRONG:
        return _check_strong(p)
    if mode is NonBlocking.WEAK:
        return _check_weak(p)
    return None


def _non_output(p: Product, component, q):
    # Mixed receivers count as non-output: the obligation applies to them
    return classify_state(p.components[component], q) is not StateClass.OUTPUT


def strong_violations(p: Product, g):
    """Events some component wants to emit at g that the receivers block"""
    vector = p.states[g]
    blocked = []
    for x in p.outputs:
        if not can_emit(p, g, x):
            continue
        receivers = p.receivers.get(x, ())
        if not all(_non_output(p, r, vector[r]) for r in receivers):
            continue
        if not sync_enabled(p, g, x):
            blocked.append(x)
    return blocked


def _check_strong(p: Product):
    order = _bfs_order(p)
    for g in order:
        blocked = strong_violations(p, g)
        if blocked:
            return BlockingWitness(run_to(p, g), blocked[0])
    return None


def _bfs_order(p: Product):
    # states are numbered in BFS order already
    return range(p.num_states)


def _can_reach_event(p: Product, x):
    """States from which some x-labelled product transition is reachable"""
    predecessors = [[] for _ in range(p.num_states)]
    sources = set()
    for t in p.transitions():
        predecessors[t.dst].append(t.src)
        if t.event == x:
            sources.add(t.src)
    seen = set(sources)
    queue = deque(sources)
    while queue:
        g = queue.popleft()
        for h in predecessors[g]:
            if h not in seen:
                seen.add(h)
                queue.append(h)
    return seen


def _check_weak(p: Product):
    witnesses = []
    for x in p.outputs:
        emitters = [g for g in range(p.num_states) if can_emit(p, g, x)]
        if not emitters:
            continue
        good = _can_reach_event(p, x)
        bad = [g for g in emitters if g not in good]
        if bad:
            witnesses.append((bad[0], x))
    if not witnesses:
        return None
    g, x = min(witnesses)
    return BlockingWitness(run_to(p, g), x)


# ---------------------------------------------------------------------------
# Aggregate
# ---------------------------------------------------------------------------

def verify_all(p: Product, profile: RequirementProfile, liveness_method='ndfs'):
    """Run every enabled check and collect verdicts with witnesses"""
    report = VerificationReport(profile, product_states=p.num_states,
                                product_transitions=p.num_transitions)
    if profile.check_deadlock:
        w = find_deadlock(p)
        report.results.append(RequirementResult('deadlock', w is None, w))
    if profile.check_safety:
        w = check_safety(p)
        detail = '' if p.error_states or w else 'no error states (vacuous)'
        report.results.append(RequirementResult('safety', w is None, w, detail))
    if profile.check_liveness:
        w = check_liveness_empty(p, liveness_method)
        detail = '' if p.accepting_states else 'no accepting states (vacuous)'
        report.results.append(RequirementResult('liveness', w is None, w, detail))
    if profile.nonblocking is not NonBlocking.NONE:
        w = check_nonblocking(p, profile.nonblocking)
        report.results.append(RequirementResult(
            'nonblocking', w is None, w, profile.nonblocking.value))
    logger.debug("verified product (%d states): %s", p.num_states,
                 ', '.join(f"{r.requirement}={'pass' if r.passed else 'fail'}"
                           for r in report.results))
    return report


def replay_witness(p: Product, witness):
    """
    Re-execute a witness against the product.

    Returns:
        True when every step is a product transition from the current state and
        the witness ends where it claims (deadlock, error state, closed cycle
        through an accepting state, or blocked event).
    """
    def walk(start, steps):
        g = start
        for t in steps:
            if t.src != g or t not in p.succ[g]:
                return None
            g = t.dst
        return g

    if isinstance(witness, Lasso):
        start = walk(0, witness.stem)
        if start != witness.start or not witness.cycle:
            return False
        end = walk(start, witness.cycle)
        visited = {t.src for t in witness.cycle}
        return end == start and bool(visited & p.accepting_states)
    if isinstance(witness, BlockingWitness):
        return walk(0, witness.run.steps) == witness.run.end
    return walk(0, witness.steps) == witness.end
