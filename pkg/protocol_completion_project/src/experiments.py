# src/experiments.py - Batch experiments: ABP table rows, engine agreement, seed spread

from __future__ import annotations

import logging
import time

import numpy as np
import pandas as pd

from .config import DEFAULT_NODE_BUDGET, DEFAULT_SEED, SMOKE_TEST_TIME_LIMIT
from .dimacs import evaluate, random_3cnf
from .errors import FormatError
from .manifest import load_manifest
from .reduction import brute_force_sat, completion_to_assignment, sat_to_completion
from .search import explicit_search
from .symbolic import solve_symbolic

logger = logging.getLogger(__name__)


def run_engine(inst, options):
    """Dispatch on `options.engine`; returns a SearchResult"""
    if options.engine == 'bdd':
        return solve_symbolic(inst, node_cap=options.node_cap,
                              compat_liveness=options.compat_liveness,
                              var_order=options.var_order, time_limit=options.time_limit)
    return explicit_search(inst, budget=options.budget, seed_order=options.seed_order,
                           time_limit=options.time_limit, threads=options.threads)


def abp_table_row(manifest_path, overrides=None):
    """
    One row of the ABP experiment table: skeleton sizes, missing slots,
    transitions added and the engine's effort.
    """
    manifest = load_manifest(manifest_path)
    options = manifest.engine_options(overrides)
    inst, _, skeletons = manifest.build_instance()
    result = run_engine(inst, options)
    row = {'experiment': manifest.name, 'engine': result.engine, 'status': result.status}
    for proc in inst.processes:
        row[f"{proc.name}_states"] = proc.num_states
    if skeletons:
        row['skeleton_transitions'] = sum(len(s.automaton.transitions) for s in skeletons.values())
    row['transitions_added'] = result.completion.size if result.completion is not None else None
    row['nodes'] = result.nodes if result.engine == 'explicit' else None
    row['seconds'] = round(result.elapsed, 3)
    for key in ('answer_nodes', 'solutions', 'peak_nodes'):
        if key in result.statistics:
            row[key] = result.statistics[key]
    logger.info("table row %s: %s", manifest.name, row)
    return row


def abp_table(manifest_paths, overrides=None):
    return pd.DataFrame([abp_table_row(p, overrides) for p in manifest_paths])


def requirement_variant_row(variant_path, reference_path, overrides=None):
    """
    Synthesize under a weakened manifest and check the result against the
    reference manifest's full set of monitors.

    Both manifests must compile to the same processes (same scenarios and
    interfaces); only their monitors or profile may differ.
    """
    variant = load_manifest(variant_path)
    reference = load_manifest(reference_path)
    inst, _, _ = variant.build_instance()
    ref_inst, _, _ = reference.build_instance()
    if [(p.name, p.num_states) for p in inst.processes] != \
            [(p.name, p.num_states) for p in ref_inst.processes]:
        raise FormatError(f"{variant.name} and {reference.name} complete different processes",
                          str(variant_path))
    result = run_engine(inst, variant.engine_options(overrides))
    row = {'experiment': variant.name, 'reference': reference.name,
           'engine': result.engine, 'status': result.status,
           'environment': len(inst.environment), 'reference_environment': len(ref_inst.environment),
           'transitions_added': None, 'meets_reference': None, 'reference_failures': ''}
    if result.completion is not None:
        _, report = ref_inst.verify(result.completion)
        row['transitions_added'] = result.completion.size
        row['meets_reference'] = report.passed
        row['reference_failures'] = ' '.join(r.requirement for r in report.failures)
    row['seconds'] = round(result.elapsed, 3)
    logger.info("requirement variant %s against %s: %s", variant.name, reference.name, row)
    return row


def reduction_agreement(count=200, max_vars=6, max_clauses=10, seed=DEFAULT_SEED,
                        budget=DEFAULT_NODE_BUDGET):
    """
    Random 3CNF batch solved by the brute-force oracle and both engines.

    Returns:
        DataFrame with one row per instance; `agree` is True when all three
        verdicts match and every decoded assignment satisfies the formula
    """
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(count):
        n = int(rng.integers(1, max_vars + 1))
        m = int(rng.integers(1, max_clauses + 1))
        cnf = random_3cnf(n, m, rng)
        art = sat_to_completion(cnf)
        oracle = brute_force_sat(cnf) is not None

        started = time.monotonic()
        explicit = explicit_search(art.instance, budget=budget)
        explicit_time = time.monotonic() - started
        symbolic = solve_symbolic(art.instance)

        decoded_ok = True
        for result in (explicit, symbolic):
            if result.completion is not None:
                decoded_ok &= evaluate(cnf, completion_to_assignment(art, result.completion))
        rows.append({
            'instance': k, 'n': n, 'm': m,
            'brute': oracle,
            'explicit': explicit.solved,
            'bdd': symbolic.solved,
            'explicit_nodes': explicit.nodes,
            'explicit_seconds': round(explicit_time, 4),
            'bdd_seconds': round(symbolic.elapsed, 4),
            'decoded_ok': decoded_ok,
            'sizes_ok': art.size_formulas_hold(),
        })
    df = pd.DataFrame(rows)
    df['agree'] = (df['brute'] == df['explicit']) & (df['brute'] == df['bdd']) & df['decoded_ok']
    logger.info("reduction batch: %d/%d agree", int(df['agree'].sum()), len(df))
    return df


def seed_spread(inst, seeds, budget=DEFAULT_NODE_BUDGET, percentiles=(0.1, 0.5, 0.75, 0.9)):
    """
    Explored-node counts of the explicit search under randomised candidate
    orders, summarised by percentiles.
    """
    nodes = []
    for seed in seeds:
        result = explicit_search(inst, budget=budget, seed_order=f"random:{seed}")
        nodes.append({'seed': seed, 'nodes': result.nodes, 'status': result.status,
                      'seconds': result.elapsed})
    df = pd.DataFrame(nodes)
    summary = df['nodes'].describe(percentiles=list(percentiles))
    return df, summary


def no_scenario_smoke(manifest_path, time_limit=SMOKE_TEST_TIME_LIMIT):
    """
    Explicit search on the instance with empty transition relations.

    The outcome is reported only; not finishing within the limit is the
    expected result.
    """
    manifest = load_manifest(manifest_path)
    inst, _, _ = manifest.build_instance()
    result = explicit_search(inst, time_limit=time_limit)
    logger.info("no-scenario smoke test: %s after %d nodes in %.1fs",
                result.status, result.nodes, result.elapsed)
    return result
