# src/dot_export.py - Graphviz DOT rendering of automata, products and completions

from .automata import Automaton
from .config import DOT_STYLE


def _quote(text):
    return '"' + str(text).replace('\\', '\\\\').replace('"', '\\"') + '"'


def _node_attrs(is_error, is_accepting):
    if is_error:
        return f" [shape=doublecircle, color={DOT_STYLE['error_color']}]"
    if is_accepting:
        return f" [shape=doublecircle, color={DOT_STYLE['accepting_color']}]"
    return ''


def automaton_to_dot(a: Automaton, added=()):
    """
    Nodes in state order, edges in transition order; inputs are labelled
    `e?` and outputs `e!`. Transitions in `added` are drawn dashed.
    """
    added = set(added)
    lines = [f"digraph {_quote(a.name)} {{",
             f"  rankdir={DOT_STYLE['rankdir']};",
             '  node [shape=circle];',
             '  __start [shape=point];']
    for q in a.states:
        lines.append(f"  {_quote(a.state_names[q])}"
                     f"{_node_attrs(q in a.error_states, q in a.accepting_states)};")
    lines.append(f"  __start -> {_quote(a.state_names[a.initial])};")
    edges = sorted(set(a.transitions) | added)
    for t in edges:
        label = f"{t.event}{a.direction(t.event) or ''}"
        style = f", style={DOT_STYLE['added_style']}" if t in added and t not in a.transitions else ''
        lines.append(f"  {_quote(a.state_names[t.src])} -> {_quote(a.state_names[t.dst])}"
                     f" [label={_quote(label)}{style}];")
    lines.append('}')
    return '\n'.join(lines) + '\n'


def product_to_dot(p):
    """Reachable product with local-state tuples as node labels"""
    lines = [f"digraph {_quote('||'.join(a.name for a in p.components))} {{",
             f"  rankdir={DOT_STYLE['rankdir']};",
             '  node [shape=box];',
             '  __start [shape=point];']
    for g in range(p.num_states):
        attrs = _node_attrs(g in p.error_states, g in p.accepting_states)
        label = f"label={_quote(p.state_label(g))}"
        attrs = f" [{label}{', ' + attrs[2:-1] if attrs else ''}]"
        lines.append(f"  g{g}{attrs};")
    lines.append('  __start -> g0;')
    for t in p.transitions():
        mark = '!' if t.event in p.sender else '?'
        lines.append(f"  g{t.src} -> g{t.dst} [label={_quote(t.event + mark)}];")
    lines.append('}')
    return '\n'.join(lines) + '\n'


def completion_to_dot(processes, completion):
    """One digraph per process, with the completion's transitions dashed"""
    return ''.join(automaton_to_dot(p, added) for p, added in zip(processes, completion.added))
