# test_search.py

import random

import pytest

from .automata import Automaton, Transition, is_deterministic
from .dimacs import evaluate, load_dimacs
from .errors import CompositionError, FormatError
from .reduction import completion_to_assignment, sat_to_completion
from .search import (Completion, CompletionInstance, candidate_transitions,
                     compatible, explicit_search, is_trivially_decidable, parse_seed_order,
                     rank_candidates, similarity_score)
from .verify import FULL_PROFILE, NonBlocking, RequirementProfile


def example_instance(reduction_dir, name='example.cnf'):
    cnf = load_dimacs(reduction_dir / name)
    return cnf, sat_to_completion(cnf)


def test_completion_operations():
    a, b = Transition(0, 'x', 1), Transition(1, 'y', 0)
    c = Completion.empty(2).with_added(0, a)
    d = c.with_added(1, b)
    assert c.size == 1 and d.size == 2
    assert c.issubset(d) and not d.issubset(c)
    assert c.union(Completion(({b}, set()))).added[0] == {a, b}
    assert d.pairs() == [(0, a), (1, b)]
    assert Completion(({a}, {b})).key == Completion(([a], [b])).key
    assert Completion.empty(2).key == ()


def test_completion_applies_to_processes():
    p = Automaton.build('p', ['s0', 's1'], 's0', inputs=['y'], outputs=['x'])
    c = Completion(({Transition(0, 'x', 1)},))
    (done,) = c.apply((p,))
    assert done.named_transitions() == [('s0', 'x', 's1')]
    assert c.describe((p,)) == ['p: s0 --x!--> s1']


def test_candidate_transitions_skip_existing_and_forbidden():
    p = Automaton.build('p', ['s0', 's1'], 's0', inputs=['y'], outputs=['x'],
                        transitions=[('s0', 'x', 's1')])
    inst = CompletionInstance((), (p,), forbidden=({Transition(1, 'y', 1)},))
    (row,) = candidate_transitions(inst)
    assert len(row) == 2 * 2 * 2 - 2
    assert Transition(0, 'x', 1) not in row and Transition(1, 'y', 1) not in row
    assert row[0] == Transition(0, 'y', 0)
    assert not is_trivially_decidable(inst)
    silent = Automaton.build('q', ['only'], 'only')
    assert is_trivially_decidable(CompletionInstance((), (silent,)))


def test_instance_validation():
    p = Automaton.build('p', ['s'], 's', outputs=['x'])
    q = Automaton.build('q', ['s'], 's', outputs=['x'])
    with pytest.raises(CompositionError):
        CompletionInstance((p,), (q,))
    with pytest.raises(ValueError):
        CompletionInstance((), (p,), forbidden=(set(), set()))


def test_compatible_keeps_processes_deterministic():
    p = Automaton.build('p', ['s0', 's1', 's2'], 's0', inputs=['a', 'b'], outputs=['x', 'y'],
                        transitions=[('s1', 'a', 's0'), ('s2', 'x', 's0')])
    assert compatible(p, set(), Transition(0, 'x', 1))          # deadlock state, anything goes
    assert compatible(p, set(), Transition(1, 'b', 2))          # another input
    assert not compatible(p, set(), Transition(1, 'a', 2))      # same input twice
    assert not compatible(p, set(), Transition(1, 'x', 2))      # output beside an input
    assert not compatible(p, set(), Transition(2, 'a', 1))      # input beside an output
    assert not compatible(p, {Transition(0, 'x', 1)}, Transition(0, 'y', 1))
    assert compatible(p, {Transition(0, 'a', 1)}, Transition(0, 'b', 1))


def test_similarity_score():
    p = Automaton.build('p', ['a', 'b', 'c', 'd'], 'a', outputs=['x', 'y'],
                        transitions=[('a', 'x', 'c'), ('b', 'x', 'c'), ('b', 'y', 'd')])
    assert similarity_score(p, set(), Transition(0, 'y', 3)) == 1
    assert similarity_score(p, set(), Transition(0, 'y', 2)) == 0
    assert similarity_score(p, set(), Transition(2, 'y', 3)) == 0


def test_rank_candidates_prefers_similar_transitions():
    p = Automaton.build('p', ['a', 'b', 'c', 'd'], 'a', outputs=['x', 'y'],
                        transitions=[('a', 'x', 'c'), ('b', 'x', 'c'), ('b', 'y', 'd')])
    inst = CompletionInstance((), (p,))
    pool = [(0, Transition(0, 'y', 2)), (0, Transition(2, 'y', 3)), (0, Transition(0, 'y', 3))]
    root = Completion.empty(1)
    ranked = rank_candidates(inst, root, pool)
    assert ranked[0] == (0, Transition(0, 'y', 3))
    assert ranked[1:] == [(0, Transition(0, 'y', 2)), (0, Transition(2, 'y', 3))]
    shuffled = rank_candidates(inst, root, pool, seed=3)
    assert shuffled[0] == (0, Transition(0, 'y', 3))
    assert sorted(shuffled) == sorted(ranked)
    assert rank_candidates(inst, root, pool, seed=3) == shuffled


def test_parse_seed_order():
    assert parse_seed_order('stable') is None
    assert parse_seed_order(None) is None
    assert parse_seed_order('random:42') == 42
    for bad in ('random:x', 'shuffle', 'random'):
        with pytest.raises(FormatError):
            parse_seed_order(bad)


def test_explicit_search_solves_example(reduction_dir):
    cnf, art = example_instance(reduction_dir)
    result = explicit_search(art.instance)
    assert result.solved
    assert result.engine == 'explicit'
    assert evaluate(cnf, completion_to_assignment(art, result.completion))
    _, report = art.instance.verify(result.completion)
    assert report.passed
    data = result.to_dict(art.instance.processes)
    assert data['status'] == 'solved'
    assert data['transitions_added'] == result.completion.size
    assert len(data['added']) == result.completion.size


def test_explicit_search_exhausts_unsat(reduction_dir):
    _, art = example_instance(reduction_dir, 'unsat.cnf')
    result = explicit_search(art.instance)
    assert result.status == 'exhausted'
    assert result.completion is None
    assert result.nodes > 1


def test_budget_and_time_limit(reduction_dir):
    _, art = example_instance(reduction_dir)
    result = explicit_search(art.instance, budget=1)
    assert result.status == 'budget'
    assert result.nodes == 1
    assert result.reason == 'node budget'
    timed = explicit_search(art.instance, time_limit=-1)
    assert timed.status == 'budget' and timed.reason == 'time limit'


@pytest.mark.parametrize('options', [
    {'threads': 3},
    {'seed_order': 'random:5'},
    {'memoize': False},
])
def test_search_variants_agree(reduction_dir, options):
    cnf, art = example_instance(reduction_dir)
    result = explicit_search(art.instance, **options)
    assert result.solved
    assert evaluate(cnf, completion_to_assignment(art, result.completion))


def test_root_solution_needs_no_additions():
    done = Automaton.build('p', ['s'], 's', outputs=['x'], transitions=[('s', 'x', 's')])
    result = explicit_search(CompletionInstance((), (done,)))
    assert result.solved and result.completion.size == 0 and result.nodes == 1


# ---------------------------------------------------------------------------
# adding transitions never repairs a safety or liveness failure
# ---------------------------------------------------------------------------

def random_instance(rng, profile=FULL_PROFILE):
    env_states = ['e0', 'e1', 'e2']
    env_t = {(rng.choice(env_states), rng.choice(['a', 'b', 'x']), rng.choice(env_states))
             for _ in range(rng.randint(2, 6))}
    env = Automaton.build('env', env_states, 'e0', inputs=['a', 'b'], outputs=['x'],
                          transitions=sorted(env_t),
                          error=['e2'] if rng.random() < 0.5 else [],
                          accepting=['e1'] if rng.random() < 0.5 else [])
    proc_states = ['p0', 'p1']
    proc_t = {(rng.choice(proc_states), rng.choice(['a', 'b', 'x']), rng.choice(proc_states))
              for _ in range(rng.randint(0, 3))}
    proc = Automaton.build('proc', proc_states, 'p0', inputs=['x'], outputs=['a', 'b'],
                           transitions=sorted(proc_t))
    return CompletionInstance((env,), (proc,), profile=profile)


def test_safety_and_liveness_failures_are_monotone():
    rng = random.Random(99)
    violating = 0
    for _ in range(20000):
        inst = random_instance(rng)
        (row,) = candidate_transitions(inst)
        small = set(rng.sample(row, rng.randint(0, min(2, len(row)))))
        _, before = inst.verify(Completion((small,)))
        failed = [r.requirement for r in before.failures if r.requirement in ('safety', 'liveness')]
        if not failed:
            continue
        large = small | set(rng.sample(row, rng.randint(1, min(4, len(row)))))
        _, after = inst.verify(Completion((large,)))
        for requirement in failed:
            assert not after.result(requirement).passed
        violating += 1
        if violating == 500:
            break
    assert violating == 500


PROFILES = {
    'strong': FULL_PROFILE,
    'weak': RequirementProfile(True, True, True, NonBlocking.WEAK),
    'no-blocking-check': RequirementProfile(True, True, True, NonBlocking.NONE),
    'no-safety': RequirementProfile(True, False, True, NonBlocking.STRONG),
}


@pytest.mark.parametrize('profile', list(PROFILES.values()), ids=list(PROFILES))
def test_pruning_and_focus_keep_the_verdict(profile):
    rng = random.Random(2024)
    for _ in range(100):
        inst = random_instance(rng, profile)
        reference = explicit_search(inst, prune=False, focus=False)
        assert reference.status in ('solved', 'exhausted')
        for options in ({}, {'focus': False}, {'prune': False}):
            result = explicit_search(inst, **options)
            assert result.status == reference.status, options
            if result.solved:
                _, report = inst.verify(result.completion)
                assert report.passed


def test_solutions_are_deterministic(reduction_dir):
    _, art = example_instance(reduction_dir)
    result = explicit_search(art.instance, seed_order='random:11')
    assert all(is_deterministic(p) for p in result.completion.apply(art.instance.processes))
