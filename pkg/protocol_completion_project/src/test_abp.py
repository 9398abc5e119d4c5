# test_abp.py - alternating-bit protocol runs at desk scale

import pytest

from .experiments import (abp_table_row, no_scenario_smoke, requirement_variant_row, run_engine,
                          seed_spread)
from .manifest import load_manifest
from .scenarios import replay_scenario
from .verify import NonBlocking, check_nonblocking

pytestmark = pytest.mark.slow


def synthesize(manifest_path, overrides=None):
    manifest = load_manifest(manifest_path)
    inst, scenario_set, skeletons = manifest.build_instance()
    result = run_engine(inst, manifest.engine_options(overrides))
    return inst, scenario_set, skeletons, result


def check_solution(inst, scenario_set, result):
    assert result.solved, result.reason
    p, report = inst.verify(result.completion)
    assert report.passed, report.render_text(p)
    assert check_nonblocking(p, NonBlocking.WEAK) is None
    for s in scenario_set.scenarios:
        assert replay_scenario(p, s) is not None, s.name


def test_one_scenario_with_bdd(abp_dir):
    inst, scenario_set, skeletons, result = synthesize(abp_dir / 'scenario1.manifest')
    assert result.engine == 'bdd'
    assert skeletons['sender'].automaton.num_states == 6
    check_solution(inst, scenario_set, result)
    assert result.completion.size == 6


def test_all_scenarios_with_explicit_search(abp_dir):
    inst, scenario_set, skeletons, result = synthesize(abp_dir / 'all.manifest')
    assert result.engine == 'explicit'
    check_solution(inst, scenario_set, result)
    assert result.completion.size == 8


def test_two_scenarios_on_both_engines(abp_dir):
    explicit = synthesize(abp_dir / 'scenario2.manifest', {'engine': 'explicit'})
    symbolic = synthesize(abp_dir / 'scenario2.manifest', {'engine': 'bdd'})
    for inst, scenario_set, skeletons, result in (explicit, symbolic):
        assert skeletons['sender'].automaton.num_states == 10
        check_solution(inst, scenario_set, result)
        # every missing input at the waiting states, nothing more
        assert result.completion.size == 8


def test_table_row(abp_dir):
    row = abp_table_row(abp_dir / 'scenario1.manifest')
    assert row['experiment'] == 'abp-scenario-1'
    assert row['status'] == 'solved'
    assert row['sender_states'] == 6 and row['receiver_states'] == 6
    assert row['transitions_added'] == 6
    assert row['solutions'] >= 1


def test_seed_spread(abp_dir):
    inst, _, _ = load_manifest(abp_dir / 'scenario1.manifest').build_instance()
    df, summary = seed_spread(inst, range(3))
    assert len(df) == 3
    assert (df['status'] == 'solved').all()
    assert summary['count'] == 3
    assert '75%' in summary.index


def test_no_scenario_smoke_is_reported_only(abp_dir):
    result = no_scenario_smoke(abp_dir / 'no_scenario.manifest', time_limit=5)
    assert result.status in ('solved', 'budget', 'exhausted')


def test_dropping_the_deliver_monitor(abp_dir):
    row = requirement_variant_row(abp_dir / 'scenario1_no_deliver.manifest',
                                  abp_dir / 'scenario1.manifest')
    assert row['experiment'] == 'abp-scenario-1-no-deliver'
    assert row['reference'] == 'abp-scenario-1'
    assert row['environment'] == row['reference_environment'] - 1
    assert row['status'] in ('solved', 'exhausted', 'timeout')
    if row['status'] == 'solved':
        assert isinstance(row['meets_reference'], bool)
        assert row['meets_reference'] == (row['reference_failures'] == '')
