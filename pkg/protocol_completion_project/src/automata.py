# src/automata.py - Input/output automata and their structural predicates

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import UnknownStateError

logger = logging.getLogger(__name__)


class StateClass(Enum):
    DEADLOCK = 'Deadlock'
    INPUT = 'Input'
    OUTPUT = 'Output'
    MIXED = 'Mixed'


@dataclass(frozen=True, order=True)
class Transition:
    """(src, event, dst); whether it is an input or an output depends on the owner"""
    src: int
    event: str
    dst: int


@dataclass(frozen=True)
class StructuralViolation:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class Automaton:
    """
    Finite-state input/output automaton.

    States are dense integers 0..n-1 with a parallel name table. Transitions
    are kept sorted so iteration order is stable across runs. Any automaton
    may carry error or accepting marks, which makes it a monitor.
    """
    name: str
    state_names: tuple
    initial: int
    inputs: tuple
    outputs: tuple
    transitions: tuple = ()
    error_states: frozenset = field(default_factory=frozenset)
    accepting_states: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, 'state_names', tuple(self.state_names))
        object.__setattr__(self, 'inputs', tuple(self.inputs))
        object.__setattr__(self, 'outputs', tuple(self.outputs))
        object.__setattr__(self, 'transitions', tuple(sorted(set(self.transitions))))
        object.__setattr__(self, 'error_states', frozenset(self.error_states))
        object.__setattr__(self, 'accepting_states', frozenset(self.accepting_states))

    @classmethod
    def build(cls, name, states, initial, inputs=(), outputs=(), transitions=(),
              error=(), accepting=()):
        """
        Build an automaton from state names.

        Args:
            states: ordered state names; names used only in `transitions`
                are appended in order of appearance
            transitions: iterable of (src_name, event, dst_name)

        Returns:
            Automaton
        """
        names = list(states)
        if initial not in names:
            names.insert(0, initial)
        for src, _, dst in transitions:
            for state in (src, dst):
                if state not in names:
                    names.append(state)
        index = {state: i for i, state in enumerate(names)}
        return cls(
            name=name,
            state_names=tuple(names),
            initial=index[initial],
            inputs=tuple(inputs),
            outputs=tuple(outputs),
            transitions=tuple(Transition(index[s], e, index[d]) for s, e, d in transitions),
            error_states=frozenset(index[s] for s in error),
            accepting_states=frozenset(index[s] for s in accepting),
        )

    # ------------------------------------------------------------------ views

    @property
    def num_states(self):
        return len(self.state_names)

    @property
    def states(self):
        return range(len(self.state_names))

    @cached_property
    def events(self):
        """Inputs then outputs, in declaration order"""
        return self.inputs + tuple(e for e in self.outputs if e not in self.inputs)

    @cached_property
    def event_index(self):
        return {event: i for i, event in enumerate(self.events)}

    @cached_property
    def input_set(self):
        return frozenset(self.inputs)

    @cached_property
    def output_set(self):
        return frozenset(self.outputs)

    @cached_property
    def _state_index(self):
        return {name: i for i, name in enumerate(self.state_names)}

    @cached_property
    def outgoing_table(self):
        """Per state, the tuple of outgoing transitions"""
        table = [[] for _ in self.state_names]
        for t in self.transitions:
            if 0 <= t.src < len(table):
                table[t.src].append(t)
        return tuple(tuple(row) for row in table)

    @cached_property
    def successor_table(self):
        """Per state, a dict event -> tuple of destination states"""
        table = []
        for row in self.outgoing_table:
            by_event = {}
            for t in row:
                by_event.setdefault(t.event, []).append(t.dst)
            table.append({event: tuple(dsts) for event, dsts in by_event.items()})
        return tuple(table)

    def outgoing(self, q):
        self._check_state(q)
        return self.outgoing_table[q]

    def state_id(self, name):
        try:
            return self._state_index[name]
        except KeyError:
            raise UnknownStateError(self.name, name) from None

    def state_name(self, q):
        self._check_state(q)
        return self.state_names[q]

    def direction(self, event):
        """'?' for inputs, '!' for outputs, None when the event is foreign"""
        if event in self.input_set:
            return '?'
        if event in self.output_set:
            return '!'
        return None

    def is_input(self, event):
        return event in self.input_set

    def is_output(self, event):
        return event in self.output_set

    def describe(self, t):
        return (f"{self.state_names[t.src]} --{t.event}{self.direction(t.event) or ''}--> "
                f"{self.state_names[t.dst]}")

    def _check_state(self, q):
        if not isinstance(q, int) or not 0 <= q < len(self.state_names):
            raise UnknownStateError(self.name, q)

    # ------------------------------------------------------------ derivation

    def with_transitions(self, extra: Iterable[Transition]):
        """Completion: same states, interface and marks, more transitions"""
        return Automaton(
            name=self.name,
            state_names=self.state_names,
            initial=self.initial,
            inputs=self.inputs,
            outputs=self.outputs,
            transitions=self.transitions + tuple(extra),
            error_states=self.error_states,
            accepting_states=self.accepting_states,
        )

    def without_transitions(self):
        return Automaton(self.name, self.state_names, self.initial, self.inputs,
                         self.outputs, (), self.error_states, self.accepting_states)

    def renamed(self, name):
        return Automaton(name, self.state_names, self.initial, self.inputs, self.outputs,
                         self.transitions, self.error_states, self.accepting_states)

    def named_transitions(self):
        return [(self.state_names[t.src], t.event, self.state_names[t.dst])
                for t in self.transitions]


# ---------------------------------------------------------------------------
# Structural predicates
# ---------------------------------------------------------------------------

def validate(a: Automaton):
    """
    Check the structural invariants of an automaton.

    Returns:
        list of StructuralViolation (empty when the automaton is well formed)
    """
    violations = []
    n = a.num_states

    for event in sorted(set(a.inputs) & set(a.outputs)):
        violations.append(StructuralViolation(
            'interface', event, 'event is declared both as input and as output'))

    seen = set()
    for event in a.inputs + a.outputs:
        if not event:
            violations.append(StructuralViolation('interface', repr(event), 'empty event name'))
        elif event in seen and not (event in a.input_set and event in a.output_set):
            violations.append(StructuralViolation('interface', event, 'event declared twice'))
        seen.add(event)

    if len(set(a.state_names)) != n:
        duplicates = sorted({s for s in a.state_names if a.state_names.count(s) > 1})
        for name in duplicates:
            violations.append(StructuralViolation('state', name, 'duplicate state name'))

    if not 0 <= a.initial < n:
        violations.append(StructuralViolation('state', str(a.initial), 'initial state does not exist'))

    alphabet = a.input_set | a.output_set
    for t in a.transitions:
        label = f"({_name(a, t.src)}, {t.event}, {_name(a, t.dst)})"
        if not 0 <= t.src < n:
            violations.append(StructuralViolation('transition', label, 'source state does not exist'))
        if not 0 <= t.dst < n:
            violations.append(StructuralViolation('transition', label, 'target state does not exist'))
        if t.event not in alphabet:
            violations.append(StructuralViolation(
                'transition', label, f"event '{t.event}' is neither an input nor an output"))

    for kind, marks in (('error', a.error_states), ('accepting', a.accepting_states)):
        for q in sorted(marks):
            if not 0 <= q < n:
                violations.append(StructuralViolation('state', str(q), f"{kind} state does not exist"))

    return violations


def _name(a, q):
    return a.state_names[q] if 0 <= q < a.num_states else f"#{q}"


def classify_state(a: Automaton, q) -> StateClass:
    """Deadlock, Input, Output (exactly one outgoing, an output) or Mixed"""
    out = a.outgoing(q)
    if not out:
        return StateClass.DEADLOCK
    if all(a.is_input(t.event) for t in out):
        return StateClass.INPUT
    if len(out) == 1 and a.is_output(out[0].event):
        return StateClass.OUTPUT
    return StateClass.MIXED


def is_deterministic(a: Automaton):
    for q in a.states:
        out = a.outgoing_table[q]
        if len(out) < 2:
            continue
        events = [t.event for t in out]
        if len(set(events)) != len(events):
            return False
        if not all(a.is_input(e) for e in events):
            return False
    return True


def nondeterministic_states(a: Automaton):
    """States breaking determinism, with their outgoing transitions"""
    offenders = []
    for q in a.states:
        out = a.outgoing_table[q]
        if len(out) < 2:
            continue
        events = [t.event for t in out]
        if len(set(events)) != len(events) or not all(a.is_input(e) for e in events):
            offenders.append((q, out))
    return offenders


def is_closed(a: Automaton):
    return not a.inputs


def is_receptive(a: Automaton):
    return not missing_inputs(a)


def missing_inputs(a: Automaton):
    """(state, input) pairs without an outgoing transition on that input"""
    missing = []
    for q in a.states:
        present = a.successor_table[q]
        for event in a.inputs:
            if event not in present:
                missing.append((q, event))
    return missing


def interface_conflicts(automata: Sequence[Automaton]):
    """Events emitted by more than one automaton, mapped to the emitters' names"""
    owners = {}
    for a in automata:
        for event in a.outputs:
            owners.setdefault(event, []).append(a.name)
    return {event: names for event, names in sorted(owners.items()) if len(names) > 1}


def structure_summary(a: Automaton) -> Mapping:
    """Counts used by reports"""
    classes = {cls.value: 0 for cls in StateClass}
    for q in a.states:
        classes[classify_state(a, q).value] += 1
    return {
        'automaton': a.name,
        'states': a.num_states,
        'transitions': len(a.transitions),
        'inputs': len(a.inputs),
        'outputs': len(a.outputs),
        'deterministic': is_deterministic(a),
        'receptive': is_receptive(a),
        'closed': is_closed(a),
        **{f"{name.lower()}_states": count for name, count in classes.items()},
    }
