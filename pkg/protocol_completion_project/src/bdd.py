# src/bdd.py - Reduced ordered binary decision diagrams

"""Shared-store ROBDD manager.

Nodes are integers indexing one table of (level, low, high) triples; 0 and 1
are the terminals. A unique table keeps the store hash-consed, so two nodes
are equal as functions iff their indices are equal. There are no complement
edges and no reordering: the variable order is the order of `add_var` calls.
"""

from __future__ import annotations

import logging
from typing import Iterable, Mapping

from .config import DEFAULT_NODE_CAP
from .errors import NodeCapExceeded

logger = logging.getLogger(__name__)

FALSE = 0
TRUE = 1


class BDD:
    """Manager owning the node store, the variable order and the caches"""

    def __init__(self, node_cap=DEFAULT_NODE_CAP):
        self.node_cap = node_cap
        self.vars = []            # level -> name
        self._level = {}          # name -> level
        # terminals sit below every variable
        self._succ = [(None, FALSE, FALSE), (None, TRUE, TRUE)]
        self._pred = {}
        self._ite_table = {}
        self._quant_table = {}
        self._relprod_table = {}
        self.peak_nodes = 2

    def __len__(self):
        return len(self._succ)

    @property
    def false(self):
        return FALSE

    @property
    def true(self):
        return TRUE

    # ------------------------------------------------------------- variables

    def add_var(self, name):
        """Declare a variable at the next level; returns its level"""
        if name in self._level:
            return self._level[name]
        level = len(self.vars)
        self.vars.append(name)
        self._level[name] = level
        return level

    def var(self, name):
        return self.find_or_add(self.level_of_var(name), FALSE, TRUE)

    def level_of_var(self, name):
        try:
            return self._level[name]
        except KeyError:
            raise ValueError(f"undeclared variable {name!r}") from None

    def var_at_level(self, level):
        return self.vars[level]

    def _top_level(self, u):
        level = self._succ[u][0]
        return len(self.vars) if level is None else level

    def level(self, u):
        return self._top_level(u)

    def low(self, u):
        return self._succ[u][1]

    def high(self, u):
        return self._succ[u][2]

    # ------------------------------------------------------------ node store

    def find_or_add(self, i, v, w):
        """Node at level `i` with low edge `v` and high edge `w`"""
        if v == w:
            return v
        t = (i, v, w)
        u = self._pred.get(t)
        if u is not None:
            return u
        if len(self._succ) >= self.node_cap:
            raise NodeCapExceeded(self.node_cap)
        u = len(self._succ)
        self._succ.append(t)
        self._pred[t] = u
        if u >= self.peak_nodes:
            self.peak_nodes = u + 1
        return u

    def _top_cofactor(self, u, i):
        level, v, w = self._succ[u]
        if level is None or level != i:
            return u, u
        return v, w

    def clear_caches(self):
        self._ite_table.clear()
        self._quant_table.clear()
        self._relprod_table.clear()

    # ------------------------------------------------------------- operators

    def ite(self, g, u, v):
        """Recurse to compute the ternary conditional"""
        if g == TRUE:
            return u
        if g == FALSE:
            return v
        if u == v:
            return u
        if u == TRUE and v == FALSE:
            return g
        r = (g, u, v)
        w = self._ite_table.get(r)
        if w is not None:
            return w
        z = min(self._top_level(g), self._top_level(u), self._top_level(v))
        g0, g1 = self._top_cofactor(g, z)
        u0, u1 = self._top_cofactor(u, z)
        v0, v1 = self._top_cofactor(v, z)
        p = self.ite(g0, u0, v0)
        q = self.ite(g1, u1, v1)
        w = self.find_or_add(z, p, q)
        self._ite_table[r] = w
        return w

    def apply(self, op, u, v=None):
        if op in ('not', '!', '~'):
            return self.ite(u, FALSE, TRUE)
        if op in ('and', '&', '/\\'):
            return self.ite(u, v, FALSE)
        if op in ('or', '|', '\\/'):
            return self.ite(u, TRUE, v)
        if op in ('xor', '^'):
            return self.ite(u, self.ite(v, FALSE, TRUE), v)
        if op in ('implies', '=>', '->'):
            return self.ite(u, v, TRUE)
        if op in ('equiv', '<=>', '<->'):
            return self.ite(u, v, self.ite(v, FALSE, TRUE))
        if op in ('diff', '-'):
            return self.ite(v, FALSE, u)
        raise ValueError(f"unknown operator {op!r}")

    def not_(self, u):
        return self.ite(u, FALSE, TRUE)

    def and_(self, *nodes):
        r = TRUE
        for u in nodes:
            r = self.ite(r, u, FALSE)
            if r == FALSE:
                break
        return r

    def or_(self, *nodes):
        r = FALSE
        for u in nodes:
            r = self.ite(r, TRUE, u)
            if r == TRUE:
                break
        return r

    def conjoin(self, nodes: Iterable[int]):
        return self.and_(*nodes)

    def disjoin(self, nodes: Iterable[int]):
        return self.or_(*nodes)

    # ------------------------------------------------------------ quantifiers

    def _levels(self, qvars):
        return frozenset(self.level_of_var(x) for x in qvars)

    def exist(self, qvars, u):
        return self.quantify(u, qvars, forall=False)

    def forall(self, qvars, u):
        return self.quantify(u, qvars, forall=True)

    def quantify(self, u, qvars, forall=False):
        levels = self._levels(qvars)
        if not levels:
            return u
        return self._quantify(u, levels, forall)

    def _quantify(self, u, levels, forall):
        if u in (FALSE, TRUE):
            return u
        key = (u, levels, forall)
        r = self._quant_table.get(key)
        if r is not None:
            return r
        i, v, w = self._succ[u]
        if i > max(levels):
            return u
        p = self._quantify(v, levels, forall)
        q = self._quantify(w, levels, forall)
        if i in levels:
            r = self.and_(p, q) if forall else self.or_(p, q)
        else:
            r = self.find_or_add(i, p, q)
        self._quant_table[key] = r
        return r

    def and_exists(self, u, v, qvars):
        """Relational product: exists qvars. u & v, without building u & v"""
        levels = self._levels(qvars)
        return self._and_exists(u, v, levels)

    def _and_exists(self, u, v, levels):
        if u == FALSE or v == FALSE:
            return FALSE
        if u == TRUE and v == TRUE:
            return TRUE
        if u == TRUE:
            return self._quantify(v, levels, False) if levels else v
        if v == TRUE:
            return self._quantify(u, levels, False) if levels else u
        if v < u:
            u, v = v, u
        key = (u, v, levels)
        r = self._relprod_table.get(key)
        if r is not None:
            return r
        z = min(self._top_level(u), self._top_level(v))
        u0, u1 = self._top_cofactor(u, z)
        v0, v1 = self._top_cofactor(v, z)
        p = self._and_exists(u0, v0, levels)
        if z in levels:
            if p == TRUE:
                r = TRUE
            else:
                r = self.or_(p, self._and_exists(u1, v1, levels))
        else:
            r = self.find_or_add(z, p, self._and_exists(u1, v1, levels))
        self._relprod_table[key] = r
        return r

    def rename(self, u, dvars: Mapping):
        """Substitute variables for variables, e.g. next-state copies for current ones"""
        sub = {self.level_of_var(a): self.level_of_var(b) for a, b in dvars.items()}
        return self._rename(u, sub, {})

    def _rename(self, u, sub, cache):
        if u in (FALSE, TRUE):
            return u
        r = cache.get(u)
        if r is not None:
            return r
        i, v, w = self._succ[u]
        p = self._rename(v, sub, cache)
        q = self._rename(w, sub, cache)
        j = sub.get(i, i)
        r = self.ite(self.find_or_add(j, FALSE, TRUE), q, p)
        cache[u] = r
        return r

    # ------------------------------------------------------------ inspection

    def cube(self, dvars: Mapping):
        """Conjunction of literals, {name: bool}"""
        r = TRUE
        for name in sorted(dvars, key=self.level_of_var, reverse=True):
            i = self.level_of_var(name)
            r = self.find_or_add(i, FALSE, r) if dvars[name] else self.find_or_add(i, r, FALSE)
        return r

    def support(self, u):
        levels = set()
        seen = set()
        stack = [u]
        while stack:
            x = stack.pop()
            if x in (FALSE, TRUE) or x in seen:
                continue
            seen.add(x)
            i, v, w = self._succ[x]
            levels.add(i)
            stack.extend((v, w))
        return {self.vars[i] for i in levels}

    def descendants(self, roots):
        seen = set()
        stack = list(roots)
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            if x not in (FALSE, TRUE):
                _, v, w = self._succ[x]
                stack.extend((v, w))
        return seen

    def node_count(self, u):
        """Nodes reachable from u, terminals included"""
        return len(self.descendants([u]))

    def evaluate(self, u, values: Mapping):
        while u not in (FALSE, TRUE):
            i, v, w = self._succ[u]
            u = w if values[self.vars[i]] else v
        return u == TRUE

    def count(self, u, care_vars=None):
        """Number of satisfying assignments over `care_vars` (default: support)"""
        support = self.support(u)
        care = set(support if care_vars is None else care_vars)
        missing = support - care
        if missing:
            raise ValueError(f"care variables miss support variables {sorted(missing)}")
        ranks = {lvl: k for k, lvl in enumerate(sorted(self.level_of_var(x) for x in care))}
        n = len(ranks)

        def rank(x):
            if x in (FALSE, TRUE):
                return n
            return ranks[self._succ[x][0]]

        memo = {}

        def sat_len(x):
            if x == FALSE:
                return 0
            if x == TRUE:
                return 1
            if x in memo:
                return memo[x]
            _, v, w = self._succ[x]
            i = rank(x)
            r = sat_len(v) * 2 ** (rank(v) - i - 1) + sat_len(w) * 2 ** (rank(w) - i - 1)
            memo[x] = r
            return r

        return sat_len(u) * 2 ** rank(u)

    def pick(self, u, care_vars=None, prefer=False):
        """
        One satisfying assignment, or None.

        Follows the `prefer` edge whenever it does not lead to FALSE, and sets
        care variables off the path to `prefer`.
        """
        if u == FALSE:
            return None
        values = {}
        while u != TRUE:
            i, v, w = self._succ[u]
            first, second = (w, v) if prefer else (v, w)
            if first != FALSE:
                values[self.vars[i]] = prefer
                u = first
            else:
                values[self.vars[i]] = not prefer
                u = second
        for name in care_vars or ():
            values.setdefault(name, prefer)
        return values

    def pick_iter(self, u, care_vars=None):
        """All satisfying assignments over care_vars (default: support)"""
        care = sorted(set(care_vars) if care_vars is not None else self.support(u),
                      key=self.level_of_var)
        for cube in self._sat_iter(u, {}):
            free = [x for x in care if x not in cube]
            for k in range(2 ** len(free)):
                m = dict(cube)
                for j, x in enumerate(free):
                    m[x] = bool((k >> j) & 1)
                yield m

    def _sat_iter(self, u, cube):
        if u == FALSE:
            return
        if u == TRUE:
            yield dict(cube)
            return
        i, v, w = self._succ[u]
        name = self.vars[i]
        yield from self._sat_iter(v, {**cube, name: False})
        yield from self._sat_iter(w, {**cube, name: True})

    def statistics(self):
        return {
            'nodes': len(self._succ),
            'peak_nodes': self.peak_nodes,
            'vars': len(self.vars),
            'ite_cache': len(self._ite_table),
        }
