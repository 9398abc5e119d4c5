# src/manifest.py - Project manifests and per-run engine options

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .automata import Transition
from .automaton_io import load_automata, tokenize_lines
from .config import (DEFAULT_NODE_BUDGET, DEFAULT_NODE_CAP, DEFAULT_THREADS,
                     DEFAULT_TIME_LIMIT, ENGINES, MANIFEST_OPTIONS)
from .errors import FormatError, ProfileError, UnknownStateError
from .scenarios import ScenarioSet, compile_scenarios, load_scenarios
from .search import CompletionInstance
from .verify import FULL_PROFILE, RequirementProfile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EngineOptions:
    engine: str = 'explicit'
    budget: int = DEFAULT_NODE_BUDGET
    node_cap: int = DEFAULT_NODE_CAP
    seed_order: str = 'stable'
    threads: int = DEFAULT_THREADS
    time_limit: Optional[float] = DEFAULT_TIME_LIMIT
    compat_liveness: bool = False
    var_order: Optional[str] = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise FormatError(f"unknown engine '{self.engine}', expected one of {', '.join(ENGINES)}",
                              'options')

    def merged(self, manifest_options=None, overrides=None):
        """Defaults < manifest `option` lines < command-line flags (non-None)"""
        values = {}
        for source in (manifest_options or {}, overrides or {}):
            for key, value in source.items():
                if value is not None and key in {f.name for f in fields(self)}:
                    values[key] = value
        return replace(self, **values)


@dataclass(frozen=True)
class ComponentEntry:
    role: str
    path: Path


@dataclass
class ProjectManifest:
    name: str
    base_dir: Path
    components: list = field(default_factory=list)      # ComponentEntry
    scenario_files: list = field(default_factory=list)  # Path
    profile: RequirementProfile = FULL_PROFILE
    forbidden: list = field(default_factory=list)       # (process, src, event, dst) names
    omitted: list = field(default_factory=list)         # automaton names
    options: dict = field(default_factory=dict)

    def files(self, role):
        return [c.path for c in self.components if c.role == role]

    # --------------------------------------------------------------- loading

    def load_components(self):
        """
        Parse every component file, leaving out automata named by `omit`.

        Returns:
            list of (role, Automaton) in manifest order
        """
        loaded, dropped = [], set()
        for entry in self.components:
            for automaton in load_automata(entry.path):
                if automaton.name in self.omitted:
                    dropped.add(automaton.name)
                    continue
                loaded.append((entry.role, automaton))
        unknown = [name for name in self.omitted if name not in dropped]
        if unknown:
            raise FormatError(f"omit names unknown automaton '{unknown[0]}'", self.name)
        if dropped:
            logger.info("manifest %s: omitted %s", self.name, ", ".join(sorted(dropped)))
        return loaded

    def load_scenarios(self, interfaces):
        scenarios, substitutions = [], {}
        for path in self.scenario_files:
            part = load_scenarios(path, interfaces)
            scenarios.extend(part.scenarios)
            for name, sub in part.substitutions.items():
                if name in substitutions and substitutions[name] != sub:
                    raise FormatError(f"substitution '{name}' defined differently twice", str(path))
                substitutions[name] = sub
        return ScenarioSet(tuple(scenarios), substitutions)

    def build_instance(self):
        """
        Assemble the completion instance.

        When scenarios are listed, process files only declare interfaces and
        the processes are compiled from the scenarios.

        Returns:
            (CompletionInstance, ScenarioSet or None, dict of merged skeletons or None)
        """
        loaded = self.load_components()
        environment = [a for role, a in loaded if role != 'process']
        processes = [a for role, a in loaded if role == 'process']
        scenario_set = skeletons = None
        if self.scenario_files:
            interfaces = {p.name: p for p in processes}
            scenario_set = self.load_scenarios(interfaces)
            skeletons = compile_scenarios(scenario_set, interfaces)
            processes = [skeletons[p.name].automaton if p.name in skeletons
                         else p.without_transitions() for p in processes]
        forbidden = self._forbidden_sets(processes)
        inst = CompletionInstance(tuple(environment), tuple(processes), forbidden,
                                  self.profile, self.name)
        return inst, scenario_set, skeletons

    def _forbidden_sets(self, processes):
        by_name = {p.name: i for i, p in enumerate(processes)}
        sets = [set() for _ in processes]
        for proc, src, event, dst in self.forbidden:
            if proc not in by_name:
                raise FormatError(f"forbid names unknown process '{proc}'", self.name)
            p = processes[by_name[proc]]
            try:
                sets[by_name[proc]].add(Transition(p.state_id(src), event, p.state_id(dst)))
            except UnknownStateError as exc:
                raise FormatError(str(exc), self.name) from exc
        return tuple(frozenset(s) for s in sets)

    def engine_options(self, overrides=None):
        opts = EngineOptions().merged(self.options, overrides)
        if opts.var_order is not None and not Path(opts.var_order).is_absolute():
            opts = replace(opts, var_order=str(self.base_dir / opts.var_order))
        return opts


def parse_manifest(text, source='<string>', base_dir='.'):
    base_dir = Path(base_dir)
    manifest = None
    for number, tokens in tokenize_lines(text):
        keyword, args = tokens[0], tokens[1:]
        if keyword == 'manifest':
            if manifest is not None or len(args) != 1:
                raise FormatError('expected a single: manifest <name>', source, number)
            manifest = ProjectManifest(args[0], base_dir)
            continue
        if manifest is None:
            raise FormatError(f"'{keyword}' before the 'manifest' line", source, number)
        if keyword in ('environment', 'monitor', 'process'):
            if len(args) != 1:
                raise FormatError(f"expected: {keyword} <file>", source, number)
            manifest.components.append(ComponentEntry(keyword, base_dir / args[0]))
        elif keyword == 'scenarios':
            if len(args) != 1:
                raise FormatError('expected: scenarios <file>', source, number)
            manifest.scenario_files.append(base_dir / args[0])
        elif keyword == 'require':
            try:
                manifest.profile = RequirementProfile.from_names(args)
            except ProfileError as exc:
                raise FormatError(str(exc), source, number) from exc
        elif keyword == 'omit':
            if len(args) != 1:
                raise FormatError('expected: omit <automaton>', source, number)
            manifest.omitted.append(args[0])
        elif keyword == 'forbid':
            if len(args) != 4:
                raise FormatError('expected: forbid <process> <src> <event> <dst>', source, number)
            manifest.forbidden.append(tuple(args))
        elif keyword == 'option':
            if len(args) != 2:
                raise FormatError('expected: option <key> <value>', source, number)
            key, value = args
            if key not in MANIFEST_OPTIONS:
                raise FormatError(f"unknown option '{key}'", source, number)
            try:
                manifest.options[key] = MANIFEST_OPTIONS[key](value)
            except ValueError:
                raise FormatError(f"bad value '{value}' for option '{key}'", source, number) from None
        else:
            raise FormatError(f"unknown keyword '{keyword}'", source, number)
    if manifest is None:
        raise FormatError("missing 'manifest' line", source)
    return manifest


def load_manifest(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", str(path)) from exc
    manifest = parse_manifest(text, str(path), path.parent)
    logger.debug("manifest %s: %d component files, %d scenario files",
                 manifest.name, len(manifest.components), len(manifest.scenario_files))
    return manifest


def emit_manifest(manifest: ProjectManifest):
    lines = [f"manifest {manifest.name}"]
    for entry in manifest.components:
        lines.append(f"{entry.role} {_relative(entry.path, manifest.base_dir)}")
    for path in manifest.scenario_files:
        lines.append(f"scenarios {_relative(path, manifest.base_dir)}")
    for name in manifest.omitted:
        lines.append(f"omit {name}")
    lines.append(f"require {manifest.profile.describe()}")
    for proc, src, event, dst in manifest.forbidden:
        lines.append(f"forbid {proc} {src} {event} {dst}")
    for key, value in manifest.options.items():
        if isinstance(value, bool):
            value = 'true' if value else 'false'
        lines.append(f"option {key} {value}")
    return '\n'.join(lines) + '\n'


def _relative(path, base):
    try:
        return str(Path(path).relative_to(base))
    except ValueError:
        return str(path)
