# test_cli.py

import json

import pandas as pd
import pytest

from main_system import build_parser, engine_overrides, main

from .automaton_io import load_automata, load_automaton


def run_json(capsys, argv):
    code = main(['--format', 'json'] + argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_validate_manual(abp_dir, capsys):
    code = main(['validate', str(abp_dir / 'manual.manifest')])
    out = capsys.readouterr().out
    assert code == 0
    assert 'VALIDATING: abp-manual' in out
    assert 'all components are well formed' in out


def test_validate_json_lists_components(abp_dir, capsys):
    code, doc = run_json(capsys, ['validate', str(abp_dir / 'scenario2.manifest')])
    assert code == 0
    assert doc['valid'] is True
    assert len(doc['components']) == 9


def test_verify_manual_passes(abp_dir, capsys, tmp_path):
    csv = tmp_path / 'verify.csv'
    code = main(['--csv', str(csv), 'verify', str(abp_dir / 'manual.manifest')])
    assert code == 0
    df = pd.read_csv(csv)
    assert list(df['requirement']) == ['deadlock', 'safety', 'liveness', 'nonblocking']
    assert (df['verdict'] == 'pass').all()


def test_verify_with_profile_override(abp_dir, capsys):
    code, doc = run_json(capsys, ['verify', str(abp_dir / 'manual.manifest'),
                                  '--require', 'deadlock', '--liveness-method', 'scc'])
    assert code == 0
    assert [r['requirement'] for r in doc['requirements']] == ['deadlock']


def test_verify_reduction_deltas(reduction_dir, capsys):
    manifest = str(reduction_dir / 'example.manifest')
    assert main(['verify', manifest, '--delta', str(reduction_dir / 'example_true.delta')]) == 0
    assert main(['verify', manifest, '--delta', str(reduction_dir / 'example_false.delta')]) == 1
    assert main(['verify', manifest]) == 1


def test_compose_reports_product(reduction_dir, capsys, tmp_path):
    dot = tmp_path / 'product.dot'
    code, doc = run_json(capsys, ['compose', str(reduction_dir / 'example.manifest'),
                                  '--delta', str(reduction_dir / 'example_true.delta'),
                                  '--dot', str(dot)])
    assert code == 0
    assert doc['states'] == 7
    assert doc['deadlock_states'] == 0
    assert doc['closed'] is True
    assert dot.read_text().count(' -> g') == 8


@pytest.mark.parametrize('cnf, engine, expected', [
    ('example.cnf', 'explicit', 0),
    ('example.cnf', 'bdd', 0),
    ('example.cnf', 'brute', 0),
    ('unsat.cnf', 'explicit', 1),
    ('unsat.cnf', 'bdd', 1),
    ('unsat.cnf', 'brute', 1),
])
def test_sat_solve_exit_codes(reduction_dir, capsys, cnf, engine, expected):
    code, doc = run_json(capsys, ['sat-solve', str(reduction_dir / cnf), '--engine', engine])
    assert code == expected
    assert doc['satisfiable'] is (expected == 0)


def test_sat_solve_budget_exhausted(reduction_dir, capsys):
    assert main(['sat-solve', str(reduction_dir / 'example.cnf'), '--budget', '1']) == 3
    assert 'error:' in capsys.readouterr().err


def test_sat_solve_symbolic_time_limit(reduction_dir, capsys):
    code = main(['sat-solve', str(reduction_dir / 'example.cnf'), '--engine', 'bdd',
                 '--time-limit', '-1'])
    assert code == 3
    assert 'time limit' in capsys.readouterr().err


def test_sat_reduce_writes_instance(reduction_dir, tmp_path, capsys):
    out = tmp_path / 'reduced'
    assert main(['sat-reduce', str(reduction_dir / 'example.cnf'), '--output', str(out)]) == 0
    assert load_automaton(out / 'E.aut').num_states == 14
    assert load_automaton(out / 'P.aut').num_states == 7
    assert main(['verify', str(out / 'reduction.manifest'),
                 '--delta', str(reduction_dir / 'example_true.delta')]) == 0


def test_export_dot_with_delta(reduction_dir, capsys):
    code = main(['export-dot', str(reduction_dir / 'P.aut'),
                 '--delta', str(reduction_dir / 'example_true.delta')])
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith('digraph "P"')
    assert out.count('style=dashed') == 3
    assert out.count('[label=') == 10


def test_export_dot_sender(abp_dir, capsys, tmp_path):
    target = tmp_path / 'sender.dot'
    assert main(['export-dot', str(abp_dir / 'sender_manual.aut'), '--output', str(target)]) == 0
    text = target.read_text()
    node_lines = [line for line in text.splitlines()
                  if line.strip().startswith('"s') and '->' not in line]
    assert len(node_lines) == 6
    assert text.count('[label=') == 10


def test_scenario_compile(abp_dir, tmp_path, capsys):
    code, doc = run_json(capsys, ['scenario-compile', str(abp_dir / 'scenario1.manifest'),
                                  '--output', str(tmp_path)])
    assert code == 0
    assert {r['process']: r['states'] for r in doc['skeletons']} == {'sender': 6, 'receiver': 6}
    assert load_automaton(tmp_path / 'sender.aut').num_states == 6
    assert main(['scenario-compile', str(abp_dir / 'manual.manifest')]) == 2


def test_synthesize_reduction_writes_delta(reduction_dir, tmp_path, capsys):
    code = main(['synthesize', str(reduction_dir / 'example.manifest'),
                 '--output', str(tmp_path), '--seed-order', 'random'])
    out = capsys.readouterr().out
    assert code == 0
    assert 'SYNTHESIS: 3sat-example' in out
    delta = tmp_path / '3sat-example.delta'
    assert delta.exists()
    assert main(['verify', str(reduction_dir / 'example.manifest'), '--delta', str(delta)]) == 0
    (completed,) = load_automata(tmp_path / 'P.aut')
    assert len(completed.transitions) == 7 + len(
        [line for line in delta.read_text().splitlines() if line.startswith('add ')])


def test_missing_file_is_a_usage_error(tmp_path, capsys):
    assert main(['validate', str(tmp_path / 'nowhere.manifest')]) == 2
    assert 'nowhere.manifest' in capsys.readouterr().err


def test_overlapping_outputs(tmp_path, capsys):
    (tmp_path / 'a.aut').write_text("automaton a\nstates q\ninitial q\noutputs x\n")
    (tmp_path / 'b.aut').write_text("automaton b\nstates q\ninitial q\noutputs x\n")
    (tmp_path / 'm.manifest').write_text(
        "manifest clash\nenvironment a.aut\nprocess b.aut\nrequire deadlock\n")
    code, doc = run_json(capsys, ['validate', str(tmp_path / 'm.manifest')])
    assert code == 1
    assert any('output of a, b' in p for p in doc['problems'])
    assert main(['compose', str(tmp_path / 'm.manifest')]) == 2


def test_engine_overrides_expand_random_seed():
    args = build_parser().parse_args(['--seed', '9', 'synthesize', 'x.manifest',
                                      '--seed-order', 'random', '--budget', '5'])
    overrides = engine_overrides(args)
    assert overrides['seed_order'] == 'random:9'
    assert overrides['budget'] == 5
    assert overrides['engine'] is None and overrides['compat_liveness'] is None


def test_experiment_needs_manifest():
    with pytest.raises(SystemExit):
        main(['experiment', 'table'])


def test_requirements_experiment_needs_two_manifests(abp_dir):
    with pytest.raises(SystemExit):
        main(['experiment', 'requirements', str(abp_dir / 'scenario1_no_deliver.manifest')])


def test_reduction_experiment(capsys, tmp_path):
    csv = tmp_path / 'agreement.csv'
    code = main(['--csv', str(csv), 'experiment', 'reduction', '--count', '5'])
    assert code == 0
    assert len(pd.read_csv(csv)) == 5
