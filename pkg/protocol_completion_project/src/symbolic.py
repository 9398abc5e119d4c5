# src/symbolic.py - Parametrized transition relations and fixpoint-based completion

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .automata import StateClass, Transition, classify_state
from .bdd import BDD, FALSE, TRUE
from .config import DEFAULT_NODE_CAP, DEFAULT_SYMBOLIC_ATTEMPTS
from .errors import BudgetExhausted, FormatError
from .search import Completion, CompletionInstance, SearchResult
from .verify import NonBlocking

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamVar:
    """
    Unknown target of the transition on `event` at `state` of one process.

    Ranges over the process's states plus a "no transition" value, encoded
    in `bits` (least significant first); the all-ones code means no transition.
    """
    process: int
    state: int
    event: str
    bits: tuple
    domain: int  # number of states of the process

    @property
    def width(self):
        return len(self.bits)

    @property
    def bottom(self):
        return (1 << len(self.bits)) - 1


@dataclass
class SymbolicResult(SearchResult):
    engine: str = 'bdd'


def _width(n):
    """Bits for codes 0..n-1"""
    return max(0, (n - 1).bit_length())


def load_var_order(path):
    """Component names, one per line, '#' comments allowed"""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", str(path)) from exc
    names = []
    for raw in text.splitlines():
        line = raw.split('#', 1)[0].strip()
        if line:
            names.append(line)
    return names


class SymbolicSystem:
    """
    Boolean encoding of an instance.

    Each component's state is binary-encoded over current and next-state
    variables, interleaved per component; parameter variables come last,
    grouped by process and state. The transition relation is kept
    partitioned by event.
    """

    def __init__(self, inst: CompletionInstance, node_cap=DEFAULT_NODE_CAP, order=None):
        self.inst = inst
        self.components = inst.components
        self.offset = inst.process_offset()
        self.bdd = BDD(node_cap)
        self.deadline = None  # monotonic time after which fixpoints stop

        names = [a.name for a in self.components]
        sequence = list(range(len(self.components)))
        if order:
            unknown = [n for n in order if n not in names]
            if unknown:
                raise FormatError(f"variable order names unknown components {unknown}", 'var-order')
            ranked = [names.index(n) for n in order]
            sequence = ranked + [c for c in sequence if c not in ranked]

        self.cur = [()] * len(self.components)
        self.nxt = [()] * len(self.components)
        for c in sequence:
            bits = _width(self.components[c].num_states)
            cur, nxt = [], []
            for k in range(bits):
                cur.append(f"c{c}.{k}")
                nxt.append(f"c{c}.{k}'")
                self.bdd.add_var(cur[-1])
                self.bdd.add_var(nxt[-1])
            self.cur[c] = tuple(cur)
            self.nxt[c] = tuple(nxt)
        self.cur_vars = [v for c in range(len(self.components)) for v in self.cur[c]]
        self.nxt_vars = [v for c in range(len(self.components)) for v in self.nxt[c]]
        self.to_next = dict(zip(self.cur_vars, self.nxt_vars))
        self.to_cur = dict(zip(self.nxt_vars, self.cur_vars))

        self.params = self._declare_params()
        self.param_vars = [b for pv in self.params for b in pv.bits]
        self._param_index = {(pv.process, pv.state, pv.event): pv for pv in self.params}

        self.events = self._events()
        self.relation = {x: self._relation(x) for x in self.events}
        self.init = self.bdd.and_(*(self.state_pred(c, a.initial)
                                    for c, a in enumerate(self.components)))
        self.constraint = self._constraint()
        logger.info("encoded %s: %d state bits, %d parameters (%d bits), %d BDD nodes",
                    inst.name, len(self.cur_vars), len(self.params), len(self.param_vars),
                    len(self.bdd))

    # --------------------------------------------------------------- encoding

    def _declare_params(self):
        params = []
        for i, proc in enumerate(self.inst.processes):
            width = proc.num_states.bit_length()
            for q in proc.states:
                cls = classify_state(proc, q)
                if cls is StateClass.DEADLOCK:
                    slots = list(proc.events)
                elif cls is StateClass.INPUT:
                    present = proc.successor_table[q]
                    slots = [e for e in proc.inputs if e not in present]
                else:
                    # an existing output leaves no room for anything else
                    slots = []
                for e in slots:
                    bits = tuple(f"t{i}.{q}.{e}.{k}" for k in range(width))
                    for b in bits:
                        self.bdd.add_var(b)
                    params.append(ParamVar(i, q, e, bits, proc.num_states))
        return params

    def _events(self):
        events = set()
        for a in self.components:
            events.update(a.inputs)
            events.update(a.outputs)
        return sorted(events)

    def _code(self, names, value):
        return self.bdd.cube({n: bool((value >> k) & 1) for k, n in enumerate(names)})

    def state_pred(self, c, q, nxt=False):
        return self._code(self.nxt[c] if nxt else self.cur[c], q)

    def param_is(self, pv: ParamVar, value):
        return self._code(pv.bits, value)

    def param_set(self, pv: ParamVar):
        return self.bdd.not_(self.param_is(pv, pv.bottom))

    def _valid_code(self, names, n):
        """Codes 0..n-1 over the given bits"""
        return self.bdd.or_(*(self._code(names, v) for v in range(n))) if names else TRUE

    def _frame(self, c):
        bdd = self.bdd
        return bdd.and_(*(bdd.apply('equiv', bdd.var(a), bdd.var(b))
                          for a, b in zip(self.cur[c], self.nxt[c])))

    def _param_move(self, c, pv):
        bdd = self.bdd
        parts = [self.state_pred(c, pv.state), self.param_set(pv)]
        nxt = self.nxt[c]
        for k, bit in enumerate(pv.bits):
            if k < len(nxt):
                parts.append(bdd.apply('equiv', bdd.var(nxt[k]), bdd.var(bit)))
            else:
                parts.append(bdd.not_(bdd.var(bit)))
        return bdd.and_(*parts)

    def move(self, c, x):
        """Local x-moves of component c: fixed transitions and parametrized slots"""
        a = self.components[c]
        options = [self.bdd.and_(self.state_pred(c, t.src), self.state_pred(c, t.dst, nxt=True))
                   for t in a.transitions if t.event == x]
        i = c - self.offset
        if i >= 0:
            for q in a.states:
                pv = self._param_index.get((i, q, x))
                if pv is not None:
                    options.append(self._param_move(c, pv))
        return self.bdd.or_(*options)

    def participants(self, x):
        return [c for c, a in enumerate(self.components) if a.is_input(x) or a.is_output(x)]

    def sender(self, x):
        for c, a in enumerate(self.components):
            if a.is_output(x):
                return c
        return None

    def _relation(self, x):
        involved = set(self.participants(x))
        parts = [self.move(c, x) for c in sorted(involved)]
        parts += [self._frame(c) for c in range(len(self.components)) if c not in involved]
        return self.bdd.and_(*parts)

    def _constraint(self):
        """Admissible parameter valuations: valid codes, determinism, forbidden targets"""
        bdd = self.bdd
        parts = []
        for pv in self.params:
            valid = self._valid_code(pv.bits, pv.domain)
            parts.append(bdd.or_(valid, self.param_is(pv, pv.bottom)))
        for i, proc in enumerate(self.inst.processes):
            for q in proc.states:
                slots = [pv for e in proc.events
                         if (pv := self._param_index.get((i, q, e))) is not None]
                outputs = [pv for pv in slots if proc.is_output(pv.event)]
                if outputs:
                    none_out = bdd.and_(*(bdd.not_(self.param_set(pv)) for pv in outputs))
                    single = []
                    for pv in outputs:
                        others = [bdd.not_(self.param_set(o)) for o in slots if o is not pv]
                        single.append(bdd.and_(self.param_set(pv), *others))
                    parts.append(bdd.or_(none_out, *single))
            for t in self.inst.forbidden[i]:
                pv = self._param_index.get((i, t.src, t.event))
                if pv is not None:
                    parts.append(bdd.not_(self.param_is(pv, t.dst)))
        return bdd.and_(*parts)

    # ------------------------------------------------------------- operators

    def check_deadline(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise BudgetExhausted(self.bdd.peak_nodes, 'time limit')

    def image(self, states):
        self.check_deadline()
        bdd = self.bdd
        result = FALSE
        for x in self.events:
            step = bdd.and_exists(states, self.relation[x], self.cur_vars)
            result = bdd.or_(result, bdd.rename(step, self.to_cur))
        return result

    def preimage(self, states):
        self.check_deadline()
        bdd = self.bdd
        primed = bdd.rename(states, self.to_next)
        result = FALSE
        for x in self.events:
            result = bdd.or_(result, bdd.and_exists(self.relation[x], primed, self.nxt_vars))
        return result

    def enabled(self, x):
        return self.bdd.exist(self.nxt_vars, self.relation[x])

    def can_emit(self, x):
        s = self.sender(x)
        if s is None:
            return FALSE
        return self.bdd.exist(self.nxt[s], self.move(s, x))

    def marked(self, which):
        bdd = self.bdd
        options = []
        for c, a in enumerate(self.components):
            marks = a.error_states if which == 'error' else a.accepting_states
            options.extend(self.state_pred(c, q) for q in sorted(marks))
        return bdd.or_(*options)

    def non_output(self, c):
        """Component c is at a state that is not an output state"""
        bdd = self.bdd
        a = self.components[c]
        i = c - self.offset
        options = []
        for q in a.states:
            cls = classify_state(a, q)
            if cls is StateClass.OUTPUT:
                continue
            here = self.state_pred(c, q)
            if i >= 0 and cls is StateClass.DEADLOCK:
                outs = [pv for e in a.outputs
                        if (pv := self._param_index.get((i, q, e))) is not None]
                if outs:
                    here = bdd.and_(here, *(bdd.not_(self.param_set(pv)) for pv in outs))
            options.append(here)
        return bdd.or_(*options)

    # --------------------------------------------------------------- decoding

    def decode(self, valuation) -> Completion:
        added = [set() for _ in self.inst.processes]
        for pv in self.params:
            value = sum(1 << k for k, b in enumerate(pv.bits) if valuation.get(b, False))
            if value == pv.bottom or value >= pv.domain:
                continue
            added[pv.process].add(Transition(pv.state, pv.event, value))
        return Completion(tuple(frozenset(s) for s in added))

    def encode(self, completion: Completion):
        """Parameter cube selecting exactly the given completion"""
        values = {}
        for pv in self.params:
            target = pv.bottom
            for t in completion.added[pv.process]:
                if t.src == pv.state and t.event == pv.event:
                    target = t.dst
            for k, b in enumerate(pv.bits):
                values[b] = bool((target >> k) & 1)
        return self.bdd.cube(values)

    def states_of(self, u):
        """Global state vectors in u (u over current-state variables only)"""
        vectors = set()
        for m in self.bdd.pick_iter(u, self.cur_vars):
            vectors.add(tuple(sum(1 << k for k, b in enumerate(self.cur[c]) if m[b])
                              for c in range(len(self.components))))
        return vectors


def encode_instance(inst: CompletionInstance, node_cap=DEFAULT_NODE_CAP, order=None):
    return SymbolicSystem(inst, node_cap, order)


# ---------------------------------------------------------------------------
# Fixpoints
# ---------------------------------------------------------------------------

def reachable_states(sys: SymbolicSystem, stats=None):
    """Least fixpoint of the forward image from the initial state under D"""
    bdd = sys.bdd
    reach = bdd.and_(sys.init, sys.constraint)
    frontier = reach
    iterations = 0
    while frontier != FALSE:
        iterations += 1
        new = bdd.and_(sys.image(frontier), bdd.not_(reach))
        reach = bdd.or_(reach, new)
        frontier = new
        logger.debug("reach iteration %d: %d nodes", iterations, bdd.node_count(reach))
    if stats is not None:
        stats['reach_iterations'] = iterations
    return reach


def _reach_fixpoint(sys, target, within):
    """mu Y. target | (pre(Y) & within)"""
    bdd = sys.bdd
    y = bdd.and_(target, within)
    while True:
        nxt = bdd.or_(y, bdd.and_(sys.preimage(y), within))
        if nxt == y:
            return y
        y = nxt


def live_bad(sys: SymbolicSystem, reach, stats=None):
    """States with a run through accepting states infinitely often: nu Z. pre(mu Y. (Z & Qa) | pre(Y))"""
    bdd = sys.bdd
    accepting = bdd.and_(sys.marked('accepting'), reach)
    if accepting == FALSE:
        return FALSE
    z = reach
    iterations = 0
    while True:
        iterations += 1
        y = _reach_fixpoint(sys, bdd.and_(z, accepting), reach)
        nxt = bdd.and_(sys.preimage(y), reach)
        if nxt == z:
            break
        z = nxt
    if stats is not None:
        stats['liveness_iterations'] = iterations
    return z


def live_bad_compat(sys: SymbolicSystem, reach):
    """AG EF Qa restricted to reachable states"""
    bdd = sys.bdd
    accepting = bdd.and_(sys.marked('accepting'), reach)
    if accepting == FALSE:
        return FALSE
    ef_accepting = _reach_fixpoint(sys, accepting, reach)
    escape = bdd.and_(reach, bdd.not_(ef_accepting))
    return bdd.and_(reach, bdd.not_(_reach_fixpoint(sys, escape, reach)))


def symbolic_bad_states(sys: SymbolicSystem, reach=None, compat_liveness=False, stats=None):
    """
    Disjunction of the enabled failure predicates, over state and parameter
    variables: error states, deadlocks, strongly blocked outputs, and states
    starting an accepting run.
    """
    bdd = sys.bdd
    profile = sys.inst.profile
    if reach is None:
        reach = reachable_states(sys, stats)
    bad = []
    if profile.check_safety:
        bad.append(sys.marked('error'))
    if profile.check_deadlock:
        bad.append(bdd.and_(*(bdd.not_(sys.enabled(x)) for x in sys.events)))
    if profile.nonblocking is NonBlocking.STRONG:
        for x in sys.events:
            s = sys.sender(x)
            if s is None:
                continue
            receivers = [c for c in sys.participants(x) if c != s]
            blocked = bdd.and_(sys.can_emit(x), *(sys.non_output(r) for r in receivers),
                               bdd.not_(sys.enabled(x)))
            bad.append(blocked)
    if profile.check_liveness:
        bad.append(live_bad_compat(sys, reach) if compat_liveness else live_bad(sys, reach, stats))
    return bdd.or_(*bad)


def answer_set(sys: SymbolicSystem, compat_liveness=False, stats=None):
    """Parameter valuations under which no bad state is reachable"""
    bdd = sys.bdd
    reach = reachable_states(sys, stats)
    bad = symbolic_bad_states(sys, reach, compat_liveness, stats)
    failing = bdd.and_exists(reach, bad, sys.cur_vars)
    return bdd.and_(sys.constraint, bdd.not_(failing))


def solve_symbolic(inst: CompletionInstance, node_cap=DEFAULT_NODE_CAP, compat_liveness=False,
                   var_order=None, time_limit=None,
                   max_attempts=DEFAULT_SYMBOLIC_ATTEMPTS) -> SymbolicResult:
    """
    Compute the answer set, extract a valuation and re-verify it explicitly.

    Valuations rejected by the explicit verifier (weak non-blocking is only
    checked there) are excluded and extraction retries, at most
    `max_attempts` times. `time_limit` is checked before every image and
    preimage and between attempts; hitting either limit gives status
    'timeout'.

    Raises:
        NodeCapExceeded: the BDD store hit `node_cap`
    """
    started = time.monotonic()
    order = load_var_order(var_order) if isinstance(var_order, (str, Path)) else var_order
    sys = encode_instance(inst, node_cap, order)
    if time_limit is not None:
        sys.deadline = started + time_limit
    stats = {'parameters': len(sys.params)}
    bdd = sys.bdd

    attempts = 0
    completion: Optional[Completion] = None
    status, reason = 'exhausted', ''
    try:
        answers = answer_set(sys, compat_liveness, stats)
        stats['answer_nodes'] = bdd.node_count(answers)
        stats['solutions'] = bdd.count(answers, sys.param_vars) if answers != FALSE else 0
        remaining = answers
        while remaining != FALSE:
            if attempts >= max_attempts:
                status, reason = 'timeout', 'retry cap'
                break
            sys.check_deadline()
            attempts += 1
            # all-ones codes mean "no transition", so preferring True keeps completions small
            valuation = bdd.pick(remaining, sys.param_vars, prefer=True)
            candidate = sys.decode(valuation)
            _, report = inst.verify(candidate)
            if report.passed:
                completion, status = candidate, 'solved'
                break
            logger.warning("valuation %d rejected by explicit re-verification: %s", attempts,
                           ', '.join(r.requirement for r in report.failures))
            remaining = bdd.and_(remaining, bdd.not_(sys.encode(candidate)))
    except BudgetExhausted as exc:
        status, reason = 'timeout', exc.reason

    stats['attempts'] = attempts
    stats['peak_nodes'] = bdd.peak_nodes
    stats['bdd_vars'] = len(bdd.vars)
    elapsed = time.monotonic() - started
    logger.info("symbolic solve %s in %.2fs (%s answer nodes, %s valuations)",
                status, elapsed, stats.get('answer_nodes', '?'), stats.get('solutions', '?'))
    return SymbolicResult(status, completion, elapsed=elapsed, reason=reason, statistics=stats)
