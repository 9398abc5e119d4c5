# src/automaton_io.py - Line-oriented text format for automata and completions

from __future__ import annotations

import logging
from pathlib import Path

from .automata import Automaton, Transition
from .errors import FormatError

logger = logging.getLogger(__name__)

AUTOMATON_KEYWORDS = ('automaton', 'states', 'inputs', 'outputs', 'initial',
                      'error', 'accepting', 'trans')


def tokenize_lines(text):
    """Yield (line_number, tokens) for non-empty lines, '#' starts a comment"""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if line:
            yield number, line.split()


def parse_automata(text, source='<string>'):
    """
    Parse one or more automata from text.

    Each automaton starts with `automaton <name>`. Directions of transitions
    are inferred from the inputs/outputs lines, so `trans` lines carry no
    `?` or `!` marks.

    Returns:
        list of Automaton
    """
    blocks = []
    current = None
    for number, tokens in tokenize_lines(text):
        keyword, args = tokens[0], tokens[1:]
        if keyword not in AUTOMATON_KEYWORDS:
            raise FormatError(f"unknown keyword '{keyword}'", source, number)
        if keyword == 'automaton':
            if len(args) != 1:
                raise FormatError('expected: automaton <name>', source, number)
            current = {'name': args[0], 'line': number, 'states': [], 'inputs': [],
                       'outputs': [], 'initial': None, 'error': [], 'accepting': [],
                       'trans': []}
            blocks.append(current)
            continue
        if current is None:
            raise FormatError(f"'{keyword}' before any 'automaton' line", source, number)
        if keyword == 'initial':
            if len(args) != 1:
                raise FormatError('expected: initial <state>', source, number)
            if current['initial'] is not None:
                raise FormatError('initial state given twice', source, number)
            current['initial'] = args[0]
        elif keyword == 'trans':
            if len(args) != 3:
                raise FormatError('expected: trans <src> <event> <dst>', source, number)
            current['trans'].append((number, tuple(args)))
        else:
            current[keyword].extend(args)

    if not blocks:
        raise FormatError('no automaton found', source)
    return [_build(block, source) for block in blocks]


def _build(block, source):
    if block['initial'] is None:
        raise FormatError(f"automaton '{block['name']}' has no initial state",
                          source, block['line'])
    names = list(dict.fromkeys(block['states']))
    if block['initial'] not in names:
        names.insert(0, block['initial'])
    for _, (src, _, dst) in block['trans']:
        for state in (src, dst):
            if state not in names:
                names.append(state)
    for state in block['error'] + block['accepting']:
        if state not in names:
            names.append(state)
    index = {name: i for i, name in enumerate(names)}
    return Automaton(
        name=block['name'],
        state_names=tuple(names),
        initial=index[block['initial']],
        inputs=tuple(dict.fromkeys(block['inputs'])),
        outputs=tuple(dict.fromkeys(block['outputs'])),
        transitions=tuple(Transition(index[s], e, index[d]) for _, (s, e, d) in block['trans']),
        error_states=frozenset(index[s] for s in block['error']),
        accepting_states=frozenset(index[s] for s in block['accepting']),
    )


def parse_automaton(text, source='<string>'):
    automata = parse_automata(text, source)
    if len(automata) != 1:
        raise FormatError(f"expected exactly one automaton, found {len(automata)}", source)
    return automata[0]


def load_automata(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", str(path)) from exc
    return parse_automata(text, str(path))


def load_automaton(path):
    automata = load_automata(path)
    if len(automata) != 1:
        raise FormatError(f"expected exactly one automaton, found {len(automata)}", str(path))
    return automata[0]


def emit_automaton(a: Automaton):
    """Inverse of parse_automaton: parse(emit(a)) == a"""
    lines = [f"automaton {a.name}",
             f"states {' '.join(a.state_names)}",
             f"initial {a.state_names[a.initial]}"]
    if a.inputs:
        lines.append(f"inputs {' '.join(a.inputs)}")
    if a.outputs:
        lines.append(f"outputs {' '.join(a.outputs)}")
    if a.error_states:
        lines.append(f"error {' '.join(a.state_names[q] for q in sorted(a.error_states))}")
    if a.accepting_states:
        lines.append(f"accepting {' '.join(a.state_names[q] for q in sorted(a.accepting_states))}")
    for t in a.transitions:
        lines.append(f"trans {a.state_names[t.src]} {t.event} {a.state_names[t.dst]}")
    return '\n'.join(lines) + '\n'


def write_automaton(a: Automaton, path):
    Path(path).write_text(emit_automaton(a))
    logger.info("wrote automaton %s to %s", a.name, path)


# ---------------------------------------------------------------------------
# Completion deltas
# ---------------------------------------------------------------------------

def emit_completion_delta(processes, completion, name='completion'):
    """`add <process> <src> <event> <dst>` lines, one per added transition"""
    lines = [f"completion {name}"]
    for proc, added in zip(processes, completion.added):
        for t in sorted(added):
            lines.append(f"add {proc.name} {proc.state_names[t.src]} {t.event} "
                         f"{proc.state_names[t.dst]}")
    return '\n'.join(lines) + '\n'


def parse_completion_delta(text, processes, source='<string>'):
    """
    Read a delta file against the given process automata.

    Returns:
        tuple of frozensets of Transition, aligned with `processes`
    """
    by_name = {p.name: i for i, p in enumerate(processes)}
    added = [set() for _ in processes]
    for number, tokens in tokenize_lines(text):
        if tokens[0] == 'completion':
            continue
        if tokens[0] != 'add' or len(tokens) != 5:
            raise FormatError('expected: add <process> <src> <event> <dst>', source, number)
        _, proc, src, event, dst = tokens
        if proc not in by_name:
            raise FormatError(f"unknown process '{proc}'", source, number)
        p = processes[by_name[proc]]
        try:
            added[by_name[proc]].add(Transition(p.state_id(src), event, p.state_id(dst)))
        except KeyError as exc:
            raise FormatError(str(exc), source, number) from exc
    return tuple(frozenset(s) for s in added)
