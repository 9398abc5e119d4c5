# test_verify.py

import random

import pytest

from .automata import Automaton
from .automaton_io import load_automata
from .compose import compose_all
from .errors import ProfileError
from .verify import (FULL_PROFILE, BlockingWitness, Lasso, NonBlocking, RequirementProfile,
                     Run, check_liveness_empty, check_nonblocking, check_safety,
                     deadlock_states, find_accepting_cycle_ndfs, find_accepting_cycle_scc,
                     find_deadlock, reachable, replay_witness, verify_all)


def abp_components(abp_dir, sender='sender_manual', receiver='receiver_manual'):
    components = []
    for name in ('timer', 'forward_channel', 'backward_channel', 'safety_monitor',
                 'liveness_monitors', sender, receiver):
        components.extend(load_automata(abp_dir / f"{name}.aut"))
    return components


def test_profile_parsing():
    profile = RequirementProfile.from_names(['deadlock', 'nonblocking=weak'])
    assert profile.enabled() == ['deadlock', 'nonblocking']
    assert profile.nonblocking is NonBlocking.WEAK
    assert profile.describe() == 'deadlock nonblocking=weak'
    assert RequirementProfile.from_names(['nonblocking']).nonblocking is NonBlocking.STRONG
    assert FULL_PROFILE.describe() == 'deadlock safety liveness nonblocking=strong'
    with pytest.raises(ProfileError):
        RequirementProfile.from_names([])
    with pytest.raises(ProfileError):
        RequirementProfile.from_names(['fairness'])
    with pytest.raises(ProfileError):
        RequirementProfile.from_names(['nonblocking=sometimes'])


def test_deadlock_witness_is_shortest():
    chain = Automaton.build('c', ['a', 'b', 'c', 'd'], 'a', outputs=['x', 'y'],
                            transitions=[('a', 'x', 'b'), ('b', 'x', 'c'), ('a', 'y', 'd'),
                                         ('c', 'x', 'a')])
    p = compose_all([chain])
    w = find_deadlock(p)
    assert isinstance(w, Run)
    assert w.events() == ['y']
    assert p.state_label(w.end) == '(d)'
    assert deadlock_states(p) == [w.end]
    assert replay_witness(p, w)
    assert len(reachable(p)) == 4


def test_safety_witness():
    proc = Automaton.build('p', ['p0', 'p1'], 'p0', outputs=['go', 'stop'],
                           transitions=[('p0', 'go', 'p1'), ('p1', 'go', 'p0'), ('p1', 'stop', 'p1')])
    mon = Automaton.build('m', ['ok', 'bad'], 'ok', inputs=['go', 'stop'], error=['bad'],
                          transitions=[('ok', 'go', 'ok'), ('ok', 'stop', 'bad'),
                                       ('bad', 'go', 'bad'), ('bad', 'stop', 'bad')])
    p = compose_all([proc, mon])
    w = check_safety(p)
    assert w.events() == ['go', 'stop']
    assert replay_witness(p, w)
    assert check_safety(compose_all([proc])) is None


def lasso_system(accept_in_loop=True):
    states = ['s0', 's1', 's2']
    transitions = [('s0', 'a', 's1'), ('s1', 'b', 's2'), ('s2', 'c', 's1')]
    accepting = ['s2'] if accept_in_loop else ['s0']
    return compose_all([Automaton.build('g', states, 's0', outputs=['a', 'b', 'c'],
                                        transitions=transitions, accepting=accepting)])


@pytest.mark.parametrize('method', ['ndfs', 'scc'])
def test_liveness_lasso(method):
    p = lasso_system()
    w = check_liveness_empty(p, method)
    assert isinstance(w, Lasso)
    assert replay_witness(p, w)
    assert check_liveness_empty(lasso_system(False), method) is None


def test_self_loop_accepting_cycle():
    g = Automaton.build('g', ['s0'], 's0', outputs=['a'], transitions=[('s0', 'a', 's0')],
                        accepting=['s0'])
    p = compose_all([g])
    for finder in (find_accepting_cycle_ndfs, find_accepting_cycle_scc):
        w = finder(p)
        assert w is not None and len(w.cycle) == 1
        assert replay_witness(p, w)


def random_marked_graph(rng, n):
    states = [f"v{k}" for k in range(n)]
    transitions = set()
    for _ in range(rng.randint(n // 2, 2 * n)):
        transitions.add((rng.choice(states), rng.choice(['a', 'b', 'c']), rng.choice(states)))
    accepting = rng.sample(states, rng.randint(0, max(1, n // 20)))
    return compose_all([Automaton.build('g', states, 'v0', outputs=['a', 'b', 'c'],
                                        transitions=sorted(transitions), accepting=accepting)])


def test_nested_dfs_agrees_with_scc_oracle():
    rng = random.Random(2024)
    found = 0
    for trial in range(300):
        n = rng.randint(1, 500) if trial % 10 == 0 else rng.randint(1, 60)
        p = random_marked_graph(rng, n)
        ndfs = find_accepting_cycle_ndfs(p)
        scc = find_accepting_cycle_scc(p)
        assert (ndfs is None) == (scc is None), f"trial {trial}"
        for w in (ndfs, scc):
            if w is not None:
                assert replay_witness(p, w)
        found += ndfs is not None
    assert 0 < found < 300


def test_strong_nonblocking():
    sender = Automaton.build('s', ['s0'], 's0', outputs=['x'], transitions=[('s0', 'x', 's0')])
    picky = Automaton.build('r', ['r0', 'r1'], 'r0', inputs=['x', 'z'],
                            transitions=[('r0', 'z', 'r1'), ('r1', 'x', 'r0')])
    p = compose_all([sender, picky])
    w = check_nonblocking(p, NonBlocking.STRONG)
    assert isinstance(w, BlockingWitness)
    assert w.event == 'x'
    assert w.state == 0
    assert replay_witness(p, w)
    assert check_nonblocking(p, 'none') is None


def test_receiver_in_output_state_waives_strong_obligation():
    sender = Automaton.build('s', ['s0'], 's0', outputs=['x'], transitions=[('s0', 'x', 's0')])
    busy = Automaton.build('r', ['r0', 'r1'], 'r0', inputs=['x'], outputs=['y'],
                           transitions=[('r0', 'y', 'r1'), ('r1', 'x', 'r0')])
    p = compose_all([sender, busy])
    assert check_nonblocking(p, NonBlocking.STRONG) is None


def test_weak_nonblocking():
    sender = Automaton.build('s', ['s0'], 's0', outputs=['x'], transitions=[('s0', 'x', 's0')])
    eventually = Automaton.build('r', ['r0', 'r1'], 'r0', inputs=['x'], outputs=['y'],
                                 transitions=[('r0', 'y', 'r1'), ('r1', 'x', 'r0'), ('r0', 'x', 'r1')])
    p = compose_all([sender, eventually])
    assert check_nonblocking(p, NonBlocking.WEAK) is None
    never = Automaton.build('r', ['r0'], 'r0', inputs=['x'], outputs=['y'],
                            transitions=[('r0', 'y', 'r0')])
    w = check_nonblocking(compose_all([sender, never]), NonBlocking.WEAK)
    assert w is not None and w.event == 'x'


def test_manual_abp_passes_full_profile(abp_dir):
    p = compose_all(abp_components(abp_dir))
    report = verify_all(p, FULL_PROFILE)
    assert report.passed, report.render_text(p)
    assert [r.requirement for r in report.results] == ['deadlock', 'safety', 'liveness',
                                                       'nonblocking']
    assert check_nonblocking(p, NonBlocking.WEAK) is None
    assert check_liveness_empty(p, 'scc') is None


def test_computed_abp_passes_full_profile(abp_dir):
    p = compose_all(abp_components(abp_dir, sender='sender_computed'))
    assert verify_all(p, FULL_PROFILE).passed


def test_mutated_receiver_fails(abp_dir, tmp_path):
    text = (abp_dir / 'receiver_manual.aut').read_text().replace('trans r5 a1 r0\n', '')
    (tmp_path / 'receiver_broken.aut').write_text(text)
    components = abp_components(abp_dir)[:-1] + load_automata(tmp_path / 'receiver_broken.aut')
    p = compose_all(components)
    report = verify_all(p, FULL_PROFILE)
    assert not report.passed
    failed = {r.requirement for r in report.failures}
    assert failed & {'deadlock', 'nonblocking'}
    for r in report.failures:
        if r.witness is not None:
            assert replay_witness(p, r.witness)
    data = report.to_dict(p)
    assert data['passed'] is False
    assert any(req['verdict'] == 'fail' and 'witness' in req for req in data['requirements'])


def test_vacuous_checks_are_reported():
    g = Automaton.build('g', ['s'], 's', outputs=['a'], transitions=[('s', 'a', 's')])
    report = verify_all(compose_all([g]), FULL_PROFILE)
    assert report.passed
    assert 'vacuous' in report.result('safety').detail
    assert 'vacuous' in report.result('liveness').detail
