# src/reduction.py - 3SAT instances as automaton-completion problems

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .automata import Automaton, Transition
from .config import BRUTE_FORCE_CHUNK_BITS, MAX_BRUTE_FORCE_VARS
from .dimacs import Cnf3, evaluate
from .errors import ProblemTooLarge, ReductionError
from .search import Completion, CompletionInstance
from .verify import NonBlocking, RequirementProfile

logger = logging.getLogger(__name__)

DEADLOCK_ONLY = RequirementProfile(True, False, False, NonBlocking.NONE)

START = 'xs'


def challenge(k):
    return f"xD{k}"


def answer(k, value):
    return f"xt{k}" if value else f"xf{k}"


@dataclass(frozen=True)
class ReductionArtifacts:
    cnf: Cnf3
    process: Automaton
    environment: Automaton
    instance: CompletionInstance
    slots: Mapping  # variable k -> (state, challenge event) of the process

    def size_formulas_hold(self):
        n, m = self.cnf.num_vars, self.cnf.num_clauses
        return (self.process.num_states == 2 * n + 1
                and len(self.process.transitions) == 2 * n + 1
                and self.environment.num_states == 6 * m + 2
                and len(self.environment.transitions) == 9 * m + 1)


def build_process(n):
    """
    The process answers a challenge on variable k from its central state by
    moving to the true or false branch of k, which reports back and returns.
    """
    states = ['q0']
    transitions = [('q0', START, 'q0')]
    for k in range(1, n + 1):
        states += [f"qt{k}", f"qf{k}"]
        transitions += [(f"qt{k}", answer(k, True), 'q0'), (f"qf{k}", answer(k, False), 'q0')]
    return Automaton.build(
        'P', states, 'q0',
        inputs=[START] + [challenge(k) for k in range(1, n + 1)],
        outputs=[answer(k, v) for k in range(1, n + 1) for v in (True, False)],
        transitions=transitions,
    )


def build_environment(cnf: Cnf3):
    """
    Clause by clause, the environment challenges the variable of each
    literal in turn. A satisfying answer moves on to the next clause (or to
    `success` after the last one); a falsifying answer moves to the next
    literal, and from the third literal to `deadlock`.
    """
    n, m = cnf.num_vars, cnf.num_clauses
    states = ['deadlock', 'success']
    for j in range(1, m + 1):
        for i in range(1, 4):
            states += [f"qD{i}_{j}", f"qV{i}_{j}"]
    transitions = [('success', START, 'success')]
    for j, clause in enumerate(cnf.clauses, start=1):
        satisfied = f"qD1_{j + 1}" if j < m else 'success'
        for i, lit in enumerate(clause, start=1):
            k = abs(lit)
            failed = f"qD{i + 1}_{j}" if i < 3 else 'deadlock'
            transitions.append((f"qD{i}_{j}", challenge(k), f"qV{i}_{j}"))
            transitions.append((f"qV{i}_{j}", answer(k, lit > 0), satisfied))
            transitions.append((f"qV{i}_{j}", answer(k, lit < 0), failed))
    initial = 'qD1_1' if m else 'success'
    return Automaton.build(
        'E', states, initial,
        inputs=[answer(k, v) for k in range(1, n + 1) for v in (True, False)],
        outputs=[START] + [challenge(k) for k in range(1, n + 1)],
        transitions=transitions,
    )


def sat_to_completion(cnf: Cnf3) -> ReductionArtifacts:
    process = build_process(cnf.num_vars)
    environment = build_environment(cnf)
    inst = CompletionInstance((environment,), (process,), profile=DEADLOCK_ONLY,
                              name=f"3sat-n{cnf.num_vars}-m{cnf.num_clauses}")
    q0 = process.state_id('q0')
    slots = {k: (q0, challenge(k)) for k in range(1, cnf.num_vars + 1)}
    art = ReductionArtifacts(cnf, process, environment, inst, slots)
    logger.debug("reduced %d variables, %d clauses: |Q_P|=%d |Q_E|=%d |T_E|=%d",
                 cnf.num_vars, cnf.num_clauses, process.num_states,
                 environment.num_states, len(environment.transitions))
    return art


def completion_to_assignment(art: ReductionArtifacts, completion: Completion):
    """
    Variable k is true iff the completion sends challenge k to the true branch.

    Unused variables default to false.
    """
    added = completion.added[0]
    values = []
    for k in range(1, art.cnf.num_vars + 1):
        q0, event = art.slots[k]
        to_true = Transition(q0, event, art.process.state_id(f"qt{k}")) in added
        to_false = Transition(q0, event, art.process.state_id(f"qf{k}")) in added
        if to_true and to_false:
            raise ReductionError(f"completion answers challenge {k} both ways")
        values.append(to_true)
    return tuple(values)


def assignment_to_completion(art: ReductionArtifacts, assignment) -> Completion:
    p = art.process
    added = set()
    for k, value in enumerate(assignment, start=1):
        q0, event = art.slots[k]
        added.add(Transition(q0, event, p.state_id(f"qt{k}" if value else f"qf{k}")))
    return Completion((frozenset(added),))


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def brute_force_sat(cnf: Cnf3, chunk_bits=BRUTE_FORCE_CHUNK_BITS) -> Optional[tuple]:
    """
    Enumerate assignments in chunks of boolean matrices.

    Returns:
        the first satisfying assignment in binary counting order (variable 1
        is the least significant bit), or None

    Raises:
        ProblemTooLarge: more than MAX_BRUTE_FORCE_VARS variables
    """
    n = cnf.num_vars
    if n > MAX_BRUTE_FORCE_VARS:
        raise ProblemTooLarge(f"{n} variables exceed the brute-force limit of {MAX_BRUTE_FORCE_VARS}")
    if not cnf.clauses:
        return tuple(False for _ in range(n))
    lits = np.array(cnf.clauses, dtype=np.int64)
    var_index = np.abs(lits) - 1
    positive = lits > 0
    shifts = np.arange(n, dtype=np.int64)
    total = 1 << n
    step = 1 << chunk_bits
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(bool)
        # values[a, j, i]: literal i of clause j under assignment a
        values = bits[:, var_index] == positive
        ok = values.any(axis=2).all(axis=1)
        hits = np.flatnonzero(ok)
        if hits.size:
            row = bits[hits[0]]
            assignment = tuple(bool(v) for v in row)
            assert evaluate(cnf, assignment)
            return assignment
    return None
