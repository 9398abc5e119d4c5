# src/compose.py - Rendezvous composition of input/output automata

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import networkx as nx

from .automata import Automaton, Transition, interface_conflicts
from .errors import CompositionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProductTransition:
    """A global step and the component transitions taking part in it"""
    src: int
    event: str
    dst: int
    moves: tuple  # ((component index, Transition), ...)


class Product:
    """
    Reachable part of the n-ary composition of a list of automata.

    Global states are tuples with one local state per component; they are
    numbered in BFS order from the initial tuple (index 0).
    """

    def __init__(self, components: Sequence[Automaton]):
        self.components = tuple(components)
        if not self.components:
            raise CompositionError('cannot compose an empty list of automata')
        conflicts = interface_conflicts(self.components)
        if conflicts:
            listing = ', '.join(f"{e} ({' & '.join(names)})" for e, names in conflicts.items())
            raise CompositionError(f"composition undefined: shared outputs {listing}",
                                   conflicts.keys())

        self.sender = {}
        receivers = {}
        for i, a in enumerate(self.components):
            for event in a.outputs:
                self.sender[event] = i
            for event in a.inputs:
                receivers.setdefault(event, []).append(i)
        self.receivers = {e: tuple(r) for e, r in receivers.items()}

        all_outputs = set(self.sender)
        self.outputs = tuple(sorted(all_outputs))
        self.inputs = tuple(sorted(set(self.receivers) - all_outputs))
        self.events = tuple(sorted(all_outputs | set(self.receivers)))

        self.states = []
        self.index = {}
        self.succ = []
        self._explore()
        logger.debug("product of %d components: %d states, %d transitions",
                     len(self.components), len(self.states), self.num_transitions)

    # -------------------------------------------------------------- building

    def _explore(self):
        initial = tuple(a.initial for a in self.components)
        self._add_state(initial)
        queue = deque([0])
        while queue:
            g = queue.popleft()
            row = []
            for event, vector, moves in self.successors(self.states[g]):
                h = self.index.get(vector)
                if h is None:
                    h = self._add_state(vector)
                    queue.append(h)
                row.append(ProductTransition(g, event, h, moves))
            self.succ[g] = tuple(row)

    def _add_state(self, vector):
        idx = len(self.states)
        self.states.append(vector)
        self.index[vector] = idx
        self.succ.append(())
        return idx

    def successors(self, vector):
        """
        Successors of a global state vector, as (event, vector, moves).

        An output fires together with every component listing the event as an
        input; if one of them cannot take it, the output is blocked. Events
        nobody emits are environment inputs of the product: all components
        listing them move together.
        """
        tables = [a.successor_table for a in self.components]
        for event in self.events:
            s = self.sender.get(event)
            participants = self.receivers.get(event, ())
            if s is not None:
                participants = (s,) + participants
            options = []
            for c in participants:
                dsts = tables[c][vector[c]].get(event)
                if not dsts:
                    break
                options.append([(c, Transition(vector[c], event, d)) for d in dsts])
            else:
                for combo in itertools.product(*options):
                    nxt = list(vector)
                    for c, t in combo:
                        nxt[c] = t.dst
                    yield event, tuple(nxt), tuple(sorted(combo, key=lambda m: m[0]))

    # ----------------------------------------------------------------- views

    @property
    def initial(self):
        return 0

    @property
    def num_states(self):
        return len(self.states)

    @property
    def num_transitions(self):
        return sum(len(row) for row in self.succ)

    def transitions(self):
        for row in self.succ:
            yield from row

    @cached_property
    def error_states(self):
        return frozenset(g for g, vec in enumerate(self.states)
                         if any(q in a.error_states for a, q in zip(self.components, vec)))

    @cached_property
    def accepting_states(self):
        return frozenset(g for g, vec in enumerate(self.states)
                         if any(q in a.accepting_states for a, q in zip(self.components, vec)))

    def state_label(self, g):
        vec = self.states[g]
        return '(' + ', '.join(a.state_names[q] for a, q in zip(self.components, vec)) + ')'

    def global_state(self, names):
        """Index of the global state given by local state names, or None"""
        vector = tuple(a.state_id(n) for a, n in zip(self.components, names))
        return self.index.get(vector)

    def component_index(self, name):
        for i, a in enumerate(self.components):
            if a.name == name:
                return i
        raise KeyError(name)

    @cached_property
    def automaton(self) -> Automaton:
        """The product as a plain automaton over global-state labels"""
        return Automaton(
            name='||'.join(a.name for a in self.components),
            state_names=tuple(self.state_label(g) for g in range(len(self.states))),
            initial=0,
            inputs=self.inputs,
            outputs=self.outputs,
            transitions=tuple(Transition(t.src, t.event, t.dst) for t in self.transitions()),
            error_states=self.error_states,
            accepting_states=self.accepting_states,
        )

    def to_networkx(self):
        graph = nx.MultiDiGraph()
        for g in range(len(self.states)):
            graph.add_node(g, initial=(g == 0), error=g in self.error_states,
                           accepting=g in self.accepting_states)
        for t in self.transitions():
            graph.add_edge(t.src, t.dst, event=t.event)
        return graph


def compose_all(components: Sequence[Automaton]) -> Product:
    """n-ary rendezvous product built directly over global-state vectors"""
    return Product(components)


def compose2(a1: Automaton, a2: Automaton) -> Product:
    return Product((a1, a2))


def sync_enabled(p: Product, g, x):
    """
    True iff the sole sender of x can emit it at g and every component
    listing x as an input can receive it at its current local state.

    Args:
        g: global state index or local-state vector
    """
    senders = [i for i, a in enumerate(p.components) if a.is_output(x)]
    if len(senders) != 1:
        raise CompositionError(
            f"event '{x}' is an output of {len(senders)} components, expected exactly one", [x])
    vector = p.states[g] if isinstance(g, int) else tuple(g)
    s = senders[0]
    if x not in p.components[s].successor_table[vector[s]]:
        return False
    return all(x in p.components[r].successor_table[vector[r]]
               for r in p.receivers.get(x, ()))


def can_emit(p: Product, g, x):
    s = p.sender.get(x)
    if s is None:
        return False
    vector = p.states[g]
    return x in p.components[s].successor_table[vector[s]]


def to_graph(a: Automaton):
    graph = nx.MultiDiGraph()
    for q in a.states:
        graph.add_node(q, initial=(q == a.initial), error=q in a.error_states,
                       accepting=q in a.accepting_states)
    for t in a.transitions:
        graph.add_edge(t.src, t.dst, event=t.event)
    return graph


def is_isomorphic(a: Automaton, b: Automaton):
    """Isomorphism of labelled graphs preserving the initial state and the marks"""
    if (a.num_states, len(a.transitions)) != (b.num_states, len(b.transitions)):
        return False
    if set(a.inputs) != set(b.inputs) or set(a.outputs) != set(b.outputs):
        return False
    return nx.is_isomorphic(
        to_graph(a), to_graph(b),
        node_match=lambda x, y: x == y,
        edge_match=lambda x, y: sorted(d['event'] for d in x.values())
        == sorted(d['event'] for d in y.values()),
    )
