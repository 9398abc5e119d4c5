# src/dimacs.py - DIMACS CNF reading and writing, random 3CNF generation

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cnf3:
    """Variables 1..num_vars; each clause is a triple of non-zero DIMACS literals"""
    num_vars: int
    clauses: tuple

    def __post_init__(self):
        object.__setattr__(self, 'clauses', tuple(tuple(c) for c in self.clauses))
        for clause in self.clauses:
            if len(clause) != 3:
                raise ValueError(f"clause {clause} does not have exactly three literals")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range for {self.num_vars} variables")

    @property
    def num_clauses(self):
        return len(self.clauses)


def evaluate(cnf: Cnf3, assignment):
    """assignment[k] is the value of variable k+1"""
    for clause in cnf.clauses:
        if not any(assignment[abs(l) - 1] == (l > 0) for l in clause):
            return False
    return True


def parse_dimacs(text, source='<string>'):
    """
    Read a CNF with at most three literals per clause.

    Shorter clauses are padded to three literals by repeating their last
    literal; longer or empty clauses are rejected.
    """
    num_vars = None
    declared = None
    clauses = []
    pending = []
    pending_line = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('c') or line.startswith('%'):
            continue
        if line.startswith('p'):
            parts = line.split()
            if len(parts) != 4 or parts[1] != 'cnf':
                raise FormatError('expected: p cnf <variables> <clauses>', source, number)
            try:
                num_vars, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise FormatError('header counts must be integers', source, number) from None
            continue
        if num_vars is None:
            raise FormatError("clause before the 'p cnf' header", source, number)
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise FormatError(f"bad literal '{token}'", source, number) from None
            if pending_line is None:
                pending_line = number
            if lit != 0:
                if abs(lit) > num_vars:
                    raise FormatError(f"literal {lit} exceeds {num_vars} variables", source, number)
                pending.append(lit)
                continue
            clauses.append(_pad(pending, source, pending_line))
            pending, pending_line = [], None
    if pending:
        clauses.append(_pad(pending, source, pending_line))
    if num_vars is None:
        raise FormatError("missing 'p cnf' header", source)
    if declared is not None and declared != len(clauses):
        logger.warning("%s declares %d clauses but contains %d", source, declared, len(clauses))
    return Cnf3(num_vars, tuple(clauses))


def _pad(literals, source, line):
    if not literals:
        raise FormatError('empty clause', source, line)
    if len(literals) > 3:
        raise FormatError(f"clause has {len(literals)} literals, at most 3 are supported",
                          source, line)
    padded = list(literals)
    while len(padded) < 3:
        padded.append(padded[-1])
    return tuple(padded)


def load_dimacs(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", str(path)) from exc
    return parse_dimacs(text, str(path))


def emit_dimacs(cnf: Cnf3, comment=None):
    lines = []
    if comment:
        lines.append(f"c {comment}")
    lines.append(f"p cnf {cnf.num_vars} {cnf.num_clauses}")
    for clause in cnf.clauses:
        lines.append(' '.join(str(l) for l in clause) + ' 0')
    return '\n'.join(lines) + '\n'


def write_dimacs(cnf: Cnf3, path, comment=None):
    Path(path).write_text(emit_dimacs(cnf, comment))
    logger.info("wrote %d clauses over %d variables to %s", cnf.num_clauses, cnf.num_vars, path)


def random_3cnf(n, m, rng=None):
    """
    m clauses over n variables; each clause picks distinct variables when
    n >= 3 and random signs.
    """
    rng = np.random.default_rng(rng)
    clauses = []
    for _ in range(m):
        vs = rng.choice(n, size=3, replace=n < 3)
        signs = rng.random(3) < 0.5
        clauses.append(tuple(int(v) + 1 if s else -(int(v) + 1) for v, s in zip(vs, signs)))
    return Cnf3(n, tuple(clauses))
