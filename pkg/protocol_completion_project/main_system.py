# main_system.py - Complete Integrated System

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

from src.automata import (interface_conflicts, is_deterministic, missing_inputs,
                          nondeterministic_states, structure_summary, validate)
from src.automaton_io import (emit_completion_delta, load_automata, parse_completion_delta,
                              write_automaton)
from src.config import (DEFAULT_SEED, ENGINES, EXIT_FAIL, EXIT_OK,
                        EXIT_RESOURCE, EXIT_USAGE, SAT_ENGINES, SMOKE_TEST_TIME_LIMIT)
from src.dimacs import load_dimacs
from src.dot_export import automaton_to_dot, completion_to_dot, product_to_dot
from src.errors import FormatError, ProtocolSynthesisError, ReductionError, ResourceExhausted
from src.experiments import (abp_table, no_scenario_smoke, reduction_agreement,
                             requirement_variant_row, run_engine, seed_spread)
from src.export_utils import ExportUtilities
from src.manifest import EngineOptions, load_manifest
from src.reduction import (brute_force_sat, completion_to_assignment, sat_to_completion)
from src.scenarios import compile_scenarios, replay_scenario
from src.search import Completion
from src.verify import NonBlocking, RequirementProfile, check_nonblocking, verify_all

logger = logging.getLogger('protocol_completion')


class ProtocolCompletionSystem:
    """Protocol completion from scenarios and requirements"""

    def __init__(self, fmt='text', csv=None, seed=DEFAULT_SEED, out=None):
        self.fmt = fmt
        self.csv = csv
        self.seed = seed
        self.out = out or sys.stdout
        self.exporter = ExportUtilities()

    def say(self, text=''):
        """Progress output; suppressed for --format json"""
        if self.fmt == 'text':
            print(text, file=self.out)

    def emit(self, document):
        if self.fmt == 'json':
            print(json.dumps(document, indent=2), file=self.out)

    def banner(self, title):
        self.say(f"\n{'=' * 80}")
        self.say(title)
        self.say(f"{'=' * 80}\n")

    # ------------------------------------------------------------------ validate

    def cmd_validate(self, manifest_path):
        manifest = load_manifest(manifest_path)
        self.banner(f"VALIDATING: {manifest.name}")

        self.say("📂 Step 1: Loading components...")
        loaded = manifest.load_components()
        self.say(f"   ✓ {len(loaded)} automata from {len(manifest.components)} files")

        self.say("\n🔍 Step 2: Checking structure...")
        problems = []
        summaries = []
        for role, a in loaded:
            for v in validate(a):
                problems.append(f"{a.name}: {v}")
            if role == 'process' and not manifest.scenario_files and not is_deterministic(a):
                for q, out in nondeterministic_states(a):
                    problems.append(f"{a.name}: state {a.state_names[q]} is not deterministic "
                                    f"({', '.join(a.describe(t) for t in out)})")
            summaries.append(dict(structure_summary(a), role=role))
        for event, owners in interface_conflicts([a for _, a in loaded]).items():
            problems.append(f"event {event} is an output of {', '.join(owners)}")
        if not any(role == 'process' for role, _ in loaded):
            problems.append('manifest lists no process')

        if manifest.scenario_files and not problems:
            self.say("\n🎬 Step 3: Compiling scenarios...")
            _, _, skeletons = manifest.build_instance()
            for name, s in skeletons.items():
                self.say(f"   ✓ {name}: {s.automaton.num_states} states")

        for line in problems:
            self.say(f"   ✗ {line}")
        if not problems:
            self.say("   ✓ all components are well formed")
        self.emit({'manifest': manifest.name, 'valid': not problems, 'problems': problems,
                   'components': summaries})
        if self.csv:
            self.exporter.export_to_csv(summaries, self.csv)
        return EXIT_OK if not problems else EXIT_FAIL

    # ------------------------------------------------------------------ compose

    def _instance_with_delta(self, manifest_path, delta_path=None):
        manifest = load_manifest(manifest_path)
        inst, _, _ = manifest.build_instance()
        completion = None
        if delta_path is not None:
            completion = self._load_delta(delta_path, inst.processes)
        return manifest, inst, completion

    def _load_delta(self, delta_path, processes):
        path = Path(delta_path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise FormatError(f"cannot read file: {exc.strerror}", str(path)) from exc
        return Completion(parse_completion_delta(text, processes, str(path)))

    def cmd_compose(self, manifest_path, delta=None, dot=None):
        manifest, inst, completion = self._instance_with_delta(manifest_path, delta)
        self.banner(f"COMPOSING: {manifest.name}")
        self.say(f"🔗 Step 1: Composing {len(inst.components)} components...")
        p = inst.compose(completion)
        deadlocks = sum(1 for g in range(p.num_states) if not p.succ[g])
        self.say(f"   ✓ {p.num_states:,} reachable states, {p.num_transitions:,} transitions")
        self.say(f"   ✓ {deadlocks} deadlock states, {len(p.error_states)} error states, "
                 f"{len(p.accepting_states)} accepting states")
        if dot:
            Path(dot).write_text(product_to_dot(p))
            self.say(f"\n📄 Exported to: {dot}")
        self.emit({'manifest': manifest.name, 'states': p.num_states,
                   'transitions': p.num_transitions, 'deadlock_states': deadlocks,
                   'error_states': len(p.error_states),
                   'accepting_states': len(p.accepting_states),
                   'closed': not p.inputs})
        return EXIT_OK

    # ------------------------------------------------------------------ verify

    def cmd_verify(self, manifest_path, delta=None, require=None, liveness_method='ndfs'):
        manifest, inst, completion = self._instance_with_delta(manifest_path, delta)
        profile = RequirementProfile.from_names(require) if require else inst.profile
        self.banner(f"VERIFYING: {manifest.name}")
        self.say(f"🔗 Step 1: Composing {len(inst.components)} components...")
        p = inst.compose(completion)
        self.say(f"   ✓ {p.num_states:,} reachable states")
        self.say(f"\n✅ Step 2: Checking {profile.describe()}...")
        report = verify_all(p, profile, liveness_method)
        for line in report.render_text(p).splitlines():
            self.say(f"   {line}")
        self.emit(dict(report.to_dict(p), manifest=manifest.name))
        if self.csv:
            self.exporter.export_to_csv(self.exporter.verification_rows(report, p), self.csv)
        return EXIT_OK if report.passed else EXIT_FAIL

    # ------------------------------------------------------------------ synthesize

    def cmd_synthesize(self, manifest_path, overrides=None, output=None):
        started = datetime.now()
        manifest = load_manifest(manifest_path)
        self.banner(f"SYNTHESIZING: {manifest.name}")

        self.say("📂 Step 1: Building the completion instance...")
        inst, scenario_set, skeletons = manifest.build_instance()
        options = manifest.engine_options(overrides)
        for proc in inst.processes:
            self.say(f"   ✓ {proc.name}: {proc.num_states} states, {len(proc.transitions)} "
                     f"transitions, {len(missing_inputs(proc))} missing inputs")

        self.say(f"\n🧭 Step 2: Running the {options.engine} engine...")
        result = run_engine(inst, options)
        self.say(f"   ✓ {result.status} in {result.elapsed:.2f}s")

        document = {
            'manifest': manifest.name,
            'generated_date': started.strftime("%Y-%m-%d %H:%M:%S"),
            'result': result.to_dict(inst.processes),
        }
        if skeletons:
            document['skeletons'] = {name: s.automaton.num_states for name, s in skeletons.items()}

        report = None
        if result.solved:
            self.say("\n✅ Step 3: Re-verifying the completed system...")
            p, report = inst.verify(result.completion)
            weak = check_nonblocking(p, NonBlocking.WEAK)
            self.say(f"   ✓ {result.completion.size} transitions added")
            self.say(f"   {'✓' if report.passed else '✗'} {inst.profile.describe()}")
            self.say(f"   {'✓' if weak is None else '✗'} weak non-blocking")
            document['verification'] = report.to_dict(p)
            document['weak_nonblocking'] = weak is None

            if scenario_set is not None:
                self.say("\n🎬 Step 4: Replaying scenarios...")
                replays = {}
                for s in scenario_set.scenarios:
                    replays[s.name] = replay_scenario(p, s) is not None
                    self.say(f"   {'✓' if replays[s.name] else '✗'} {s.name}")
                document['replayed'] = replays

            out_dir = Path(output) if output else Path('output') / manifest.name
            out_dir.mkdir(parents=True, exist_ok=True)
            delta_path = out_dir / f"{manifest.name}.delta"
            delta_path.write_text(emit_completion_delta(inst.processes, result.completion,
                                                        manifest.name))
            for a in result.completion.apply(inst.processes):
                write_automaton(a, out_dir / f"{a.name}.aut")
            self.say(f"\n📄 Exported to: {out_dir}")
            document['output'] = str(out_dir)
        elif result.status == 'exhausted':
            self.say("   ✗ no completion exists")
        else:
            self.say(f"   ✗ search stopped: {result.reason}")

        if self.fmt == 'text':
            self.say('\n' + self.exporter.generate_synthesis_report(inst, result, report, skeletons))
        self.emit(document)
        if self.csv:
            self.exporter.export_to_csv(self.exporter.synthesis_rows(result, inst.processes),
                                        self.csv)
        if result.solved:
            return EXIT_OK if report.passed else EXIT_FAIL
        return EXIT_FAIL if result.status == 'exhausted' else EXIT_RESOURCE

    # ------------------------------------------------------------------ scenarios

    def cmd_scenario_compile(self, manifest_path, output=None):
        manifest = load_manifest(manifest_path)
        if not manifest.scenario_files:
            raise FormatError('manifest lists no scenario files', str(manifest_path))
        self.banner(f"COMPILING SCENARIOS: {manifest.name}")
        loaded = manifest.load_components()
        interfaces = {a.name: a for role, a in loaded if role == 'process'}
        scenario_set = manifest.load_scenarios(interfaces)
        originals, copies = scenario_set.expanded()
        self.say(f"🎬 Step 1: {len(originals)} scenarios, {len(copies)} symmetric copies")
        skeletons = compile_scenarios(scenario_set, interfaces)
        rows = []
        for name, s in skeletons.items():
            a = s.automaton
            rows.append({'process': name, 'states': a.num_states,
                         'transitions': len(a.transitions),
                         'missing_inputs': len(missing_inputs(a))})
            self.say(f"   ✓ {name}: {a.num_states} states, {len(a.transitions)} transitions")
        if output:
            out_dir = Path(output)
            out_dir.mkdir(parents=True, exist_ok=True)
            for s in skeletons.values():
                write_automaton(s.automaton, out_dir / f"{s.process}.aut")
            self.say(f"\n📄 Exported to: {out_dir}")
        self.emit({'manifest': manifest.name, 'skeletons': rows})
        if self.csv:
            self.exporter.export_to_csv(rows, self.csv)
        return EXIT_OK

    # ------------------------------------------------------------------ reduction

    def cmd_sat_reduce(self, cnf_path, output):
        cnf = load_dimacs(cnf_path)
        art = sat_to_completion(cnf)
        out_dir = Path(output)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_automaton(art.environment, out_dir / 'E.aut')
        write_automaton(art.process, out_dir / 'P.aut')
        (out_dir / 'reduction.manifest').write_text(
            f"manifest {art.instance.name}\nenvironment E.aut\nprocess P.aut\nrequire deadlock\n")
        self.banner(f"REDUCING: {cnf_path}")
        self.say(f"   ✓ {cnf.num_vars} variables, {cnf.num_clauses} clauses")
        self.say(f"   ✓ process: {art.process.num_states} states; environment: "
                 f"{art.environment.num_states} states, {len(art.environment.transitions)} transitions")
        self.say(f"\n📄 Exported to: {out_dir}")
        self.emit({'variables': cnf.num_vars, 'clauses': cnf.num_clauses,
                   'process_states': art.process.num_states,
                   'environment_states': art.environment.num_states,
                   'environment_transitions': len(art.environment.transitions),
                   'output': str(out_dir)})
        return EXIT_OK

    def cmd_sat_solve(self, cnf_path, engine='explicit', overrides=None):
        cnf = load_dimacs(cnf_path)
        self.banner(f"SOLVING: {cnf_path} ({engine})")
        if engine == 'brute':
            assignment = brute_force_sat(cnf)
            document = {'engine': 'brute'}
        else:
            art = sat_to_completion(cnf)
            options = EngineOptions(engine=engine).merged(overrides=overrides)
            result = run_engine(art.instance, options)
            if result.status not in ('solved', 'exhausted'):
                raise ResourceExhausted(f"search stopped: {result.reason}")
            assignment = (completion_to_assignment(art, result.completion)
                          if result.solved else None)
            document = result.to_dict()
        document['satisfiable'] = assignment is not None
        if assignment is not None:
            literals = [k if v else -k for k, v in enumerate(assignment, start=1)]
            document['assignment'] = literals
            self.say(f"   ✓ SAT: {' '.join(map(str, literals))}")
        else:
            self.say("   ✗ UNSAT: no completion exists")
        self.emit(document)
        return EXIT_OK if assignment is not None else EXIT_FAIL

    # ------------------------------------------------------------------ diagrams

    def cmd_export_dot(self, path, delta=None, output=None):
        path = Path(path)
        if path.suffix == '.manifest':
            _, inst, completion = self._instance_with_delta(path, delta)
            text = product_to_dot(inst.compose(completion))
        else:
            automata = load_automata(path)
            completion = self._load_delta(delta, automata) if delta else None
            if completion is not None:
                text = completion_to_dot(automata, completion)
            else:
                text = ''.join(automaton_to_dot(a) for a in automata)
        if output:
            Path(output).write_text(text)
            logger.info("wrote DOT to %s", output)
        else:
            self.out.write(text)
        return EXIT_OK

    # ------------------------------------------------------------------ experiments

    def cmd_experiment(self, kind, manifests=(), count=200, runs=10, time_limit=None,
                       overrides=None):
        self.banner(f"EXPERIMENT: {kind}")
        if kind == 'table':
            df = abp_table(manifests, overrides)
            self.say(df.to_string(index=False))
            code = EXIT_OK if (df['status'] == 'solved').all() else EXIT_FAIL
        elif kind == 'reduction':
            df = reduction_agreement(count, seed=self.seed)
            agree = int(df['agree'].sum())
            self.say(f"   ✓ engines agree on {agree}/{len(df)} instances")
            code = EXIT_OK if agree == len(df) and df['sizes_ok'].all() else EXIT_FAIL
        elif kind == 'seeds':
            inst, _, _ = load_manifest(manifests[0]).build_instance()
            df, summary = seed_spread(inst, range(self.seed, self.seed + runs))
            self.say(summary.to_string())
            code = EXIT_OK
        elif kind == 'smoke':
            result = no_scenario_smoke(manifests[0], time_limit or SMOKE_TEST_TIME_LIMIT)
            df = self.exporter.export_experiment_table([dict(result.to_dict(), experiment='smoke')])
            self.say(f"   {result.status} after {result.nodes:,} nodes ({result.elapsed:.1f}s)")
            code = EXIT_OK
        elif kind == 'requirements':
            row = requirement_variant_row(manifests[0], manifests[1], overrides)
            df = self.exporter.export_experiment_table([row])
            verdict = {True: 'meets', False: 'misses', None: 'cannot be checked against'}
            self.say(f"   {row['status']}: the completion {verdict[row['meets_reference']]} "
                     f"the requirements of {row['reference']}")
            code = EXIT_OK
        else:
            raise FormatError(f"unknown experiment '{kind}'", 'experiment')
        if df.index.name is not None:
            df = df.reset_index()
        if self.csv:
            self.exporter.export_experiment_table(df.to_dict('records'), self.csv)
            self.say(f"\n📊 Exported to: {self.csv}")
        self.emit(json.loads(df.to_json(orient='records')))
        return code

    # ------------------------------------------------------------------ driver

    def run(self, args):
        """Dispatch a parsed command line; every error maps to an exit code here"""
        try:
            return self._dispatch(args)
        except ResourceExhausted as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RESOURCE
        except ReductionError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        except ProtocolSynthesisError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE

    def _dispatch(self, args):
        if args.command == 'validate':
            return self.cmd_validate(args.manifest)
        if args.command == 'compose':
            return self.cmd_compose(args.manifest, args.delta, args.dot)
        if args.command == 'verify':
            return self.cmd_verify(args.manifest, args.delta, args.require, args.liveness_method)
        if args.command == 'synthesize':
            return self.cmd_synthesize(args.manifest, engine_overrides(args), args.output)
        if args.command == 'scenario-compile':
            return self.cmd_scenario_compile(args.manifest, args.output)
        if args.command == 'sat-reduce':
            return self.cmd_sat_reduce(args.cnf, args.output)
        if args.command == 'sat-solve':
            return self.cmd_sat_solve(args.cnf, args.engine, engine_overrides(args))
        if args.command == 'export-dot':
            return self.cmd_export_dot(args.path, args.delta, args.output)
        if args.command == 'experiment':
            return self.cmd_experiment(args.kind, args.manifests, args.count, args.runs,
                                       args.time_limit, engine_overrides(args))
        raise FormatError(f"unknown command '{args.command}'", 'command line')


def engine_overrides(args):
    """Engine flags given on the command line; unset flags stay None"""
    seed_order = getattr(args, 'seed_order', None)
    if seed_order == 'random':
        seed_order = f"random:{args.seed}"
    engine = getattr(args, 'engine', None)
    return {
        'engine': engine if engine in ENGINES else None,
        'budget': getattr(args, 'budget', None),
        'node_cap': getattr(args, 'node_cap', None),
        'seed_order': seed_order,
        'threads': args.threads,
        'time_limit': getattr(args, 'time_limit', None),
        'compat_liveness': True if getattr(args, 'compat_liveness', False) else None,
        'var_order': getattr(args, 'var_order', None),
    }


def build_parser():
    parser = argparse.ArgumentParser(
        prog='main_system.py',
        description='Complete protocol automata from scenarios and requirements')
    parser.add_argument('--format', choices=('text', 'json'), default='text')
    parser.add_argument('--seed', type=int, default=DEFAULT_SEED)
    parser.add_argument('--threads', type=int, default=None)
    parser.add_argument('--log-level', default='WARNING',
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    parser.add_argument('--csv', help='also write a CSV table of the results')
    sub = parser.add_subparsers(dest='command', required=True)

    engine_flags = argparse.ArgumentParser(add_help=False)
    engine_flags.add_argument('--budget', type=int)
    engine_flags.add_argument('--node-cap', type=int)
    engine_flags.add_argument('--seed-order', help="'stable', 'random' or 'random:<seed>'")
    engine_flags.add_argument('--var-order', help='file listing component names, outermost first')
    engine_flags.add_argument('--time-limit', type=float)
    engine_flags.add_argument('--compat-liveness', action='store_true')

    p = sub.add_parser('validate', help='check automata, interfaces and scenarios')
    p.add_argument('manifest')

    p = sub.add_parser('compose', help='build the product and report its size')
    p.add_argument('manifest')
    p.add_argument('--delta', help='completion delta to apply first')
    p.add_argument('--dot', help='write the product as DOT')

    p = sub.add_parser('verify', help='check the requirement profile')
    p.add_argument('manifest')
    p.add_argument('--delta')
    p.add_argument('--require', nargs='+', help='override the manifest profile')
    p.add_argument('--liveness-method', choices=('ndfs', 'scc'), default='ndfs')

    p = sub.add_parser('synthesize', parents=[engine_flags], help='complete the processes')
    p.add_argument('manifest')
    p.add_argument('--engine', choices=ENGINES)
    p.add_argument('--output', help='directory for the delta and completed automata')

    p = sub.add_parser('scenario-compile', help='compile scenarios into skeletons')
    p.add_argument('manifest')
    p.add_argument('--output')

    p = sub.add_parser('sat-reduce', help='write the completion instance of a 3CNF')
    p.add_argument('cnf')
    p.add_argument('--output', required=True)

    p = sub.add_parser('sat-solve', parents=[engine_flags], help='decide a 3CNF via completion')
    p.add_argument('cnf')
    p.add_argument('--engine', choices=SAT_ENGINES, default='explicit')

    p = sub.add_parser('export-dot', help='render automata or a product as DOT')
    p.add_argument('path', help='automaton file or .manifest')
    p.add_argument('--delta', help='overlay a completion delta as dashed edges')
    p.add_argument('--output')

    p = sub.add_parser('experiment', parents=[engine_flags], help='batch experiments')
    p.add_argument('kind', choices=('table', 'reduction', 'seeds', 'smoke', 'requirements'))
    p.add_argument('manifests', nargs='*')
    p.add_argument('--engine', choices=ENGINES)
    p.add_argument('--count', type=int, default=200)
    p.add_argument('--runs', type=int, default=10)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == 'experiment' and args.kind in ('table', 'seeds', 'smoke') and not args.manifests:
        parser.error(f"experiment {args.kind} needs at least one manifest")
    if args.command == 'experiment' and args.kind == 'requirements' and len(args.manifests) != 2:
        parser.error("experiment requirements needs a variant and a reference manifest")
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    system = ProtocolCompletionSystem(args.format, args.csv, args.seed)
    return system.run(args)


if __name__ == "__main__":
    sys.exit(main())
