# test_symbolic.py

import random

import pytest

from .automata import Automaton, Transition
from .dimacs import evaluate, load_dimacs
from .errors import FormatError, NodeCapExceeded
from .experiments import run_engine
from .manifest import EngineOptions
from .reduction import completion_to_assignment, sat_to_completion
from .search import Completion, CompletionInstance, explicit_search
from .symbolic import (SymbolicSystem, answer_set, encode_instance, load_var_order,
                       reachable_states, solve_symbolic, symbolic_bad_states)
from .verify import FULL_PROFILE, NonBlocking, RequirementProfile

DEADLOCK_AND_LIVENESS = RequirementProfile(True, False, True, NonBlocking.NONE)


def ticker_instance(profile=DEADLOCK_AND_LIVENESS):
    """A process that must keep moving without emitting `go` forever"""
    monitor = Automaton.build(
        'm', ['idle', 'acc', 'dead'], 'idle', inputs=['go', 'stop'], accepting=['acc'],
        transitions=[('idle', 'go', 'acc'), ('acc', 'go', 'acc'), ('idle', 'stop', 'dead'),
                     ('acc', 'stop', 'dead'), ('dead', 'go', 'dead'), ('dead', 'stop', 'dead')])
    process = Automaton.build('p', ['s0', 's1'], 's0', outputs=['go', 'stop'])
    return CompletionInstance((monitor,), (process,), profile=profile, name='ticker')


def test_encoding_layout():
    inst = ticker_instance()
    sys = encode_instance(inst)
    assert isinstance(sys, SymbolicSystem)
    assert sys.cur == [('c0.0', 'c0.1'), ('c1.0',)]
    assert [(pv.state, pv.event) for pv in sys.params] == [(0, 'go'), (0, 'stop'),
                                                           (1, 'go'), (1, 'stop')]
    assert all(pv.width == 2 and pv.bottom == 3 for pv in sys.params)
    assert sys.states_of(sys.init) == {(0, 0)}
    assert sys.events == ['go', 'stop']


def test_decode_inverts_encode():
    sys = encode_instance(ticker_instance())
    completion = Completion((frozenset({Transition(0, 'go', 1), Transition(1, 'stop', 0)}),))
    cube = sys.encode(completion)
    assert sys.decode(sys.bdd.pick(cube, sys.param_vars)) == completion
    assert sys.decode(sys.bdd.pick(sys.encode(Completion.empty(1)), sys.param_vars)) == \
        Completion.empty(1)


def test_reachable_states_follow_parameters():
    sys = encode_instance(ticker_instance())
    completion = Completion((frozenset({Transition(0, 'go', 1), Transition(1, 'stop', 0)}),))
    reach = reachable_states(sys)
    fixed = sys.bdd.exist(sys.param_vars, sys.bdd.and_(reach, sys.encode(completion)))
    # (monitor, process): idle/s0 -go-> acc/s1 -stop-> dead/s0 -go-> dead/s1
    assert sys.states_of(fixed) == {(0, 0), (1, 1), (2, 0), (2, 1)}


def test_bad_states_under_fixed_parameters():
    sys = encode_instance(ticker_instance(RequirementProfile(True, False, False, NonBlocking.NONE)))
    reach = reachable_states(sys)
    bad = symbolic_bad_states(sys, reach)
    bdd = sys.bdd

    def reachable_bad(completion):
        live = bdd.and_(reach, bad, sys.encode(completion))
        return sys.states_of(bdd.exist(sys.param_vars, live))

    assert reachable_bad(Completion.empty(1)) == {(0, 0)}
    looping = Completion((frozenset({Transition(0, 'go', 1), Transition(1, 'stop', 0)}),))
    assert reachable_bad(looping) == set()


@pytest.mark.parametrize('compat', [False, True])
def test_ticker_is_solved_by_both_liveness_semantics(compat):
    inst = ticker_instance()
    result = solve_symbolic(inst, compat_liveness=compat)
    assert result.solved
    assert result.engine == 'bdd'
    _, report = inst.verify(result.completion)
    assert report.passed
    looping = Completion((frozenset({Transition(0, 'go', 0)}),))
    sys = encode_instance(inst)
    answers = answer_set(sys, compat)
    assert sys.bdd.and_(answers, sys.encode(looping)) == sys.bdd.false


def test_symbolic_and_explicit_agree_on_ticker():
    inst = ticker_instance()
    assert solve_symbolic(inst).solved == explicit_search(inst).solved


def random_pair_instance(rng, profile=FULL_PROFILE):
    """Two processes talking through an environment with error and accepting states"""
    env_states = ['e0', 'e1', 'e2']
    env_t = {(rng.choice(env_states), rng.choice(['a', 'b', 'x']), rng.choice(env_states))
             for _ in range(rng.randint(3, 7))}
    env = Automaton.build('env', env_states, 'e0', inputs=['a', 'b'], outputs=['x'],
                          transitions=sorted(env_t), error=['e2'], accepting=['e1'])
    p_t = {(rng.choice(['p0', 'p1']), rng.choice(['a', 'b', 'x']), rng.choice(['p0', 'p1']))
           for _ in range(rng.randint(0, 2))}
    p = Automaton.build('p', ['p0', 'p1'], 'p0', inputs=['x', 'b'], outputs=['a'],
                        transitions=sorted(p_t))
    q_t = {(rng.choice(['q0', 'q1']), rng.choice(['a', 'b']), rng.choice(['q0', 'q1']))
           for _ in range(rng.randint(0, 2))}
    q = Automaton.build('q', ['q0', 'q1'], 'q0', inputs=['a'], outputs=['b'],
                        transitions=sorted(q_t))
    return CompletionInstance((env,), (p, q), profile=profile, name='pair')


@pytest.mark.parametrize('seed', range(6))
def test_reachable_states_match_the_explicit_product(seed):
    rng = random.Random(seed)
    inst = random_pair_instance(rng)
    sys = encode_instance(inst)
    bdd = sys.bdd
    reach = reachable_states(sys)
    valuations = list(bdd.pick_iter(sys.constraint, sys.param_vars))
    for valuation in rng.sample(valuations, min(30, len(valuations))):
        fixed = bdd.exist(sys.param_vars, bdd.and_(reach, bdd.cube(valuation)))
        expected = set(inst.compose(sys.decode(valuation)).states)
        assert sys.states_of(fixed) == expected


@pytest.mark.parametrize('profile', [FULL_PROFILE,
                                     RequirementProfile(True, True, True, NonBlocking.NONE)],
                         ids=['strong', 'no-blocking-check'])
def test_engines_agree_on_random_pairs(profile):
    rng = random.Random(11)
    for _ in range(30):
        inst = random_pair_instance(rng, profile)
        explicit = explicit_search(inst)
        symbolic = solve_symbolic(inst)
        assert symbolic.status == explicit.status
        for result in (explicit, symbolic):
            if result.solved:
                _, report = inst.verify(result.completion)
                assert report.passed


def test_time_limit_and_retry_cap():
    inst = ticker_instance()
    timed = solve_symbolic(inst, time_limit=-1)
    assert timed.status == 'timeout'
    assert timed.reason == 'time limit'
    assert timed.completion is None
    capped = solve_symbolic(inst, max_attempts=0)
    assert capped.status == 'timeout'
    assert capped.reason == 'retry cap'
    assert capped.statistics['solutions'] > 0
    assert solve_symbolic(inst, time_limit=60, max_attempts=1).solved


def test_run_engine_passes_the_time_limit():
    result = run_engine(ticker_instance(), EngineOptions(engine='bdd', time_limit=-1.0))
    assert result.engine == 'bdd'
    assert result.status == 'timeout'


def test_unsatisfiable_answer_set():
    inst = ticker_instance()
    only_go = CompletionInstance(inst.environment, inst.processes,
                                 forbidden=({Transition(q, 'stop', d) for q in (0, 1)
                                             for d in (0, 1)},),
                                 profile=inst.profile)
    result = solve_symbolic(only_go)
    assert result.status == 'exhausted'
    assert result.completion is None
    assert result.statistics['solutions'] == 0


def test_reduction_example(reduction_dir):
    cnf = load_dimacs(reduction_dir / 'example.cnf')
    art = sat_to_completion(cnf)
    result = solve_symbolic(art.instance)
    assert result.solved
    assert evaluate(cnf, completion_to_assignment(art, result.completion))
    stats = result.statistics
    assert stats['solutions'] > 0
    assert stats['peak_nodes'] >= stats['answer_nodes']
    assert stats['attempts'] == 1


def test_unsat_reduction(reduction_dir):
    art = sat_to_completion(load_dimacs(reduction_dir / 'unsat.cnf'))
    assert solve_symbolic(art.instance).status == 'exhausted'


def test_variable_order(reduction_dir, tmp_path):
    art = sat_to_completion(load_dimacs(reduction_dir / 'example.cnf'))
    order_file = tmp_path / 'order.txt'
    order_file.write_text("# process first\nP\nE\n")
    assert load_var_order(order_file) == ['P', 'E']
    sys = encode_instance(art.instance, order=['P', 'E'])
    assert sys.bdd.level_of_var(sys.cur[1][0]) == 0
    assert solve_symbolic(art.instance, var_order=str(order_file)).solved
    with pytest.raises(FormatError):
        encode_instance(art.instance, order=['Q'])
    with pytest.raises(FormatError):
        load_var_order(tmp_path / 'missing.txt')


def test_node_cap_is_reported(reduction_dir):
    art = sat_to_completion(load_dimacs(reduction_dir / 'example.cnf'))
    with pytest.raises(NodeCapExceeded):
        solve_symbolic(art.instance, node_cap=64)
