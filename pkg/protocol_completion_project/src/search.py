# src/search.py - Completion instances and the explicit completion search

from __future__ import annotations

import logging
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .automata import Automaton, Transition, interface_conflicts, is_deterministic
from .compose import compose_all
from .config import DEFAULT_NODE_BUDGET, DEFAULT_THREADS
from .errors import BudgetExhausted, CompositionError, FormatError
from .verify import FULL_PROFILE, NonBlocking, RequirementProfile, verify_all

logger = logging.getLogger(__name__)

SOLUTION = 'solution'
PRUNED = 'pruned'
CONTINUE = 'continue'


@dataclass(frozen=True)
class Completion:
    """Per-process sets of added transitions, aligned with the instance's processes"""
    added: tuple

    @classmethod
    def empty(cls, n):
        return cls(tuple(frozenset() for _ in range(n)))

    def __post_init__(self):
        object.__setattr__(self, 'added', tuple(frozenset(s) for s in self.added))

    @property
    def size(self):
        return sum(len(s) for s in self.added)

    def with_added(self, i, t):
        added = list(self.added)
        added[i] = added[i] | {t}
        return Completion(tuple(added))

    def union(self, other):
        return Completion(tuple(a | b for a, b in zip(self.added, other.added)))

    def issubset(self, other):
        return all(a <= b for a, b in zip(self.added, other.added))

    @property
    def key(self):
        """Canonical, order-insensitive identity of the node"""
        return tuple(sorted((i, t.src, t.event, t.dst)
                            for i, s in enumerate(self.added) for t in s))

    def pairs(self):
        return [(i, t) for i, s in enumerate(self.added) for t in sorted(s)]

    def apply(self, processes):
        return tuple(p.with_transitions(s) for p, s in zip(processes, self.added))

    def describe(self, processes):
        return [f"{p.name}: {p.describe(t)}" for p, s in zip(processes, self.added)
                for t in sorted(s)]


@dataclass(frozen=True)
class CompletionInstance:
    """Environment automata (monitors included), incomplete processes, forbidden transitions"""
    environment: tuple
    processes: tuple
    forbidden: tuple = ()
    profile: RequirementProfile = FULL_PROFILE
    name: str = 'instance'

    def __post_init__(self):
        object.__setattr__(self, 'environment', tuple(self.environment))
        object.__setattr__(self, 'processes', tuple(self.processes))
        forbidden = tuple(frozenset(f) for f in self.forbidden) or \
            tuple(frozenset() for _ in self.processes)
        if len(forbidden) != len(self.processes):
            raise ValueError('one forbidden set per process is required')
        object.__setattr__(self, 'forbidden', forbidden)
        conflicts = interface_conflicts(self.components)
        if conflicts:
            raise CompositionError(
                'composition undefined: shared outputs ' + ', '.join(conflicts), conflicts.keys())

    @property
    def components(self):
        return self.environment + self.processes

    def process_offset(self):
        """Index of the first process in the product's component vector"""
        return len(self.environment)

    def compose(self, completion: Optional[Completion] = None):
        processes = self.processes if completion is None else completion.apply(self.processes)
        return compose_all(self.environment + processes)

    def verify(self, completion: Optional[Completion] = None, profile=None):
        p = self.compose(completion)
        return p, verify_all(p, profile or self.profile)


def candidate_transitions(inst: CompletionInstance):
    """
    Per process, every (q, e, q') not already present and not forbidden,
    ordered by (src, event declaration index, dst).

    Candidates that clash with existing transitions are kept; determinism is
    enforced per node, because two candidates can clash with each other.
    """
    result = []
    for proc, forbidden in zip(inst.processes, inst.forbidden):
        existing = set(proc.transitions)
        row = []
        for q in proc.states:
            for e in proc.events:
                for d in proc.states:
                    t = Transition(q, e, d)
                    if t not in existing and t not in forbidden:
                        row.append(t)
        result.append(row)
    return tuple(result)


def is_trivially_decidable(inst: CompletionInstance):
    """No candidate at all: the question is plain reachability on the given system"""
    return not any(candidate_transitions(inst))


def compatible(proc: Automaton, added, t: Transition):
    """Whether adding t to proc (already extended by `added`) keeps it deterministic"""
    out = [u for u in proc.outgoing_table[t.src]] + [u for u in added if u.src == t.src]
    if not out:
        return True
    if t in out:
        return False
    if not proc.is_input(t.event):
        return False
    return all(proc.is_input(u.event) for u in out) and all(u.event != t.event for u in out)


# ---------------------------------------------------------------------------
# Similarity ranking
# ---------------------------------------------------------------------------

def similarity_score(proc: Automaton, added, t: Transition):
    """
    Number of events e'' != e such that some other state p shares an
    (e'', r) transition with t.src and already has (e, t.dst).
    """
    transitions = set(proc.transitions) | set(added)
    by_label = {}
    outgoing = {}
    for u in transitions:
        by_label.setdefault((u.event, u.dst), set()).add(u.src)
        outgoing.setdefault(u.src, set()).add((u.event, u.dst))
    peers = by_label.get((t.event, t.dst), set()) - {t.src}
    if not peers:
        return 0
    shared = set()
    for event, dst in outgoing.get(t.src, ()):
        if event != t.event and by_label.get((event, dst), set()) & peers:
            shared.add(event)
    return len(shared)


def parse_seed_order(text):
    """'stable' -> None, 'random:<seed>' -> int seed"""
    if text in (None, '', 'stable'):
        return None
    kind, _, seed = text.partition(':')
    if kind != 'random' or not seed.lstrip('-').isdigit():
        raise FormatError(f"expected 'stable' or 'random:<seed>', got '{text}'", '--seed-order')
    return int(seed)


def rank_candidates(inst: CompletionInstance, completion: Completion, candidates, seed=None):
    """
    Order (process index, Transition) pairs, most similar first.

    Ties keep the (process, src, event, dst) order, or are shuffled by a
    generator seeded from `seed` and the node when a seed is given.
    """
    scored = []
    for i, t in candidates:
        proc = inst.processes[i]
        score = similarity_score(proc, completion.added[i], t)
        scored.append((-score, i, t.src, proc.event_index[t.event], t.dst, t))
    if seed is None:
        scored.sort(key=lambda s: s[:5])
        return [(s[1], s[5]) for s in scored]
    rng = random.Random(f"{seed}:{completion.key}")
    keyed = [(s[0], rng.random(), s[1], s[5]) for s in sorted(scored, key=lambda s: s[:5])]
    keyed.sort(key=lambda s: (s[0], s[1]))
    return [(s[2], s[3]) for s in keyed]


# ---------------------------------------------------------------------------
# Explicit search
# ---------------------------------------------------------------------------

@dataclass
class SearchResult:
    status: str  # 'solved', 'exhausted', 'budget' (explicit) or 'timeout' (bdd)
    completion: Optional[Completion] = None
    nodes: int = 0
    pruned: int = 0
    rejected: int = 0
    elapsed: float = 0.0
    reason: str = ''
    engine: str = 'explicit'
    statistics: dict = field(default_factory=dict)

    @property
    def solved(self):
        return self.status == 'solved'

    def to_dict(self, processes=None):
        data = {
            'engine': self.engine,
            'status': self.status,
            'nodes': self.nodes,
            'pruned': self.pruned,
            'rejected': self.rejected,
            'elapsed': round(self.elapsed, 3),
        }
        if self.reason:
            data['reason'] = self.reason
        if self.completion is not None:
            data['transitions_added'] = self.completion.size
            if processes is not None:
                data['added'] = self.completion.describe(processes)
        data.update(self.statistics)
        return data


class _Found(Exception):
    pass


class ExplicitSearch:
    """
    Depth-first search over sets of added transitions.

    Each child adds one candidate to its parent. Children that break
    determinism are rejected without verification. A node whose product
    violates safety or liveness is pruned together with its subtree, since
    adding transitions never removes reachable behaviour. Nodes failing only
    deadlock freedom or non-blocking are expanded. When a deadlock (or a
    strongly blocked output) is reachable, only candidates that could
    unblock that state are branched on; every solution above the node must
    contain one of them.
    """

    def __init__(self, inst: CompletionInstance, budget=DEFAULT_NODE_BUDGET, seed_order=None,
                 memoize=True, prune=True, focus=True, time_limit=None,
                 threads=DEFAULT_THREADS):
        self.inst = inst
        self.budget = budget
        self.seed = parse_seed_order(seed_order) if isinstance(seed_order, str) else seed_order
        self.memoize = memoize
        self.prune = prune
        self.focus = focus
        self.time_limit = time_limit
        self.threads = max(1, int(threads or 1))
        self.candidates = candidate_transitions(inst)
        self.offset = inst.process_offset()

        self.nodes = 0
        self.pruned = 0
        self.rejected = 0
        self._visited = set()
        self._lock = threading.Lock()
        self._latch = threading.Event()
        self._solution = None
        self._started = None

    # ---------------------------------------------------------------- driver

    def run(self) -> SearchResult:
        self._started = time.monotonic()
        root = Completion.empty(len(self.inst.processes))
        logger.info("explicit search on %s: %d candidates, budget %d",
                    self.inst.name, sum(len(c) for c in self.candidates), self.budget)
        try:
            verdict, children = self._visit(root)
            if verdict == SOLUTION:
                return self._result('solved', root)
            if verdict == CONTINUE:
                if self.memoize:
                    self._visited.add(root.key)
                if self.threads == 1 or len(children) < 2:
                    self._dfs(children)
                else:
                    self._parallel(children)
        except _Found:
            pass
        except BudgetExhausted as exc:
            if self._solution is not None:
                return self._result('solved', self._solution)
            logger.info("explicit search stopped: %s", exc)
            return self._result('budget', None, exc.reason)
        if self._solution is not None:
            return self._result('solved', self._solution)
        return self._result('exhausted', None)

    def _result(self, status, completion, reason=''):
        elapsed = time.monotonic() - self._started
        logger.info("explicit search %s after %d nodes (%d pruned, %d rejected) in %.2fs",
                    status, self.nodes, self.pruned, self.rejected, elapsed)
        return SearchResult(status, completion, self.nodes, self.pruned, self.rejected,
                            elapsed, reason)

    def _parallel(self, children):
        # workers split the root's children and share the visited set
        buckets = [children[k::self.threads] for k in range(self.threads)]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = [pool.submit(self._worker, bucket) for bucket in buckets if bucket]
            errors = []
            for future in futures:
                try:
                    future.result()
                except _Found:
                    pass
                except BudgetExhausted as exc:
                    errors.append(exc)
        if self._solution is None and errors:
            raise errors[0]

    def _worker(self, children):
        try:
            self._dfs(children)
        except BudgetExhausted:
            self._latch.set()
            raise

    def _dfs(self, children):
        stack = [iter(children)]
        while stack:
            if self._latch.is_set():
                raise _Found()
            child = next(stack[-1], None)
            if child is None:
                stack.pop()
                continue
            if self.memoize:
                with self._lock:
                    if child.key in self._visited:
                        continue
                    self._visited.add(child.key)
            verdict, grandchildren = self._visit(child)
            if verdict == SOLUTION:
                with self._lock:
                    if self._solution is None:
                        self._solution = child
                self._latch.set()
                raise _Found()
            if verdict == CONTINUE and grandchildren:
                stack.append(iter(grandchildren))

    # ------------------------------------------------------------------ nodes

    def _visit(self, completion):
        with self._lock:
            if self.nodes >= self.budget:
                raise BudgetExhausted(self.nodes)
            self.nodes += 1
        if self.time_limit is not None and time.monotonic() - self._started > self.time_limit:
            raise BudgetExhausted(self.nodes, 'time limit')

        p, report = self.inst.verify(completion)
        if report.passed:
            logger.debug("node %s: solution", completion.key)
            return SOLUTION, []
        failed = {r.requirement for r in report.failures}
        if self.prune and failed & {'safety', 'liveness'}:
            self._count_pruned()
            logger.debug("node %s: pruned (%s)", completion.key, ', '.join(sorted(failed)))
            return PRUNED, []

        focus = None
        if self.focus:
            focus = self._focus(p, report, completion)
            if focus is not None and not focus:
                self._count_pruned()
                logger.debug("node %s: pruned (unfixable %s)", completion.key,
                             ', '.join(sorted(failed)))
                return PRUNED, []
        return CONTINUE, self._children(completion, focus)

    def _count_pruned(self):
        with self._lock:
            self.pruned += 1

    def _children(self, completion, focus):
        pool = []
        for i, row in enumerate(self.candidates):
            added = completion.added[i]
            for t in row:
                if t in added:
                    continue
                if focus is not None and (i, t) not in focus:
                    continue
                pool.append((i, t))
        children = []
        for i, t in rank_candidates(self.inst, completion, pool, self.seed):
            if not compatible(self.inst.processes[i], completion.added[i], t):
                with self._lock:
                    self.rejected += 1
                continue
            children.append(completion.with_added(i, t))
        return children

    def _focus(self, p, report, completion):
        """
        Candidates able to unblock the witness state of a deadlock or strong
        non-blocking failure; None when no such witness exists. An empty set
        means the failure can never be repaired.
        """
        deadlock = report.result('deadlock')
        if deadlock is not None and not deadlock.passed:
            for g in range(p.num_states):
                if not p.succ[g] and not self._event_enablers(p, g, completion, None):
                    return set()
            return self._event_enablers(p, deadlock.witness.end, completion, None)
        nb = report.result('nonblocking')
        if (nb is not None and not nb.passed
                and self.inst.profile.nonblocking is NonBlocking.STRONG):
            return self._unblockers(p, nb.witness.state, nb.witness.event, completion)
        return None

    def _local(self, p, g, c):
        return p.states[g][c]

    def _process_fixes(self, c, q, event, completion):
        i = c - self.offset
        if i < 0:
            return []
        proc = self.inst.processes[i]
        return [(i, t) for t in self.candidates[i]
                if t.src == q and t.event == event and t not in completion.added[i]
                and compatible(proc, completion.added[i], t)]

    def _event_enablers(self, p, g, completion, only_event):
        """Candidates that take part in enabling some event at g"""
        enablers = set()
        events = p.events if only_event is None else (only_event,)
        for x in events:
            s = p.sender.get(x)
            participants = ((s,) if s is not None else ()) + p.receivers.get(x, ())
            missing = []
            ok = True
            for c in participants:
                q = self._local(p, g, c)
                if x in p.components[c].successor_table[q]:
                    continue
                fixes = self._process_fixes(c, q, x, completion)
                if not fixes:
                    ok = False
                    break
                missing.extend(fixes)
            if ok:
                enablers.update(missing)
        return enablers

    def _unblockers(self, p, g, x, completion):
        enablers = self._event_enablers(p, g, completion, x)
        # a deadlocked process receiver that starts emitting waives the obligation
        for r in p.receivers.get(x, ()):
            i = r - self.offset
            if i < 0:
                continue
            proc = self.inst.processes[i]
            q = self._local(p, g, r)
            if proc.outgoing_table[q] or any(t.src == q for t in completion.added[i]):
                continue
            for e in proc.outputs:
                enablers.update(self._process_fixes(r, q, e, completion))
        return enablers


def explicit_search(inst: CompletionInstance, budget=DEFAULT_NODE_BUDGET, **options):
    """
    Run the explicit engine.

    Returns:
        SearchResult; its `completion` is set iff status == 'solved'
    """
    result = ExplicitSearch(inst, budget=budget, **options).run()
    if result.completion is not None:
        completed = result.completion.apply(inst.processes)
        assert all(is_deterministic(p) for p in completed)
    return result
