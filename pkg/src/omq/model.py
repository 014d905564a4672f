"""Core value types: constants, facts, databases, queries, rules, answer tuples.

Constants are interned to integer ids; nulls carry the reserved label prefix
"_:".  Answer tuples are plain tuples of ints where negative entries are
wildcards: -1 is the single wildcard, -j is the multi-wildcard *j.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional

NULL_PREFIX = "_:"
WILDCARD = -1  # the single wildcard *; multi-wildcard *j is -j


class _Interner:
    def __init__(self):
        self._lock = threading.Lock()
        self._by_label: dict[str, int] = {}
        self._labels: list[str] = []
        self._null_counter = itertools.count(1)

    def intern(self, label: str) -> int:
        with self._lock:
            cid = self._by_label.get(label)
            if cid is None:
                cid = len(self._labels)
                self._by_label[label] = cid
                self._labels.append(label)
            return cid

    def label(self, cid: int) -> str:
        return self._labels[cid]

    def is_null(self, cid: int) -> bool:
        return self._labels[cid].startswith(NULL_PREFIX)

    def fresh_null(self) -> int:
        return self.intern(f"{NULL_PREFIX}g{next(self._null_counter)}")


_INTERNER = _Interner()

intern_const = _INTERNER.intern
const_label = _INTERNER.label
is_null = _INTERNER.is_null
fresh_null = _INTERNER.fresh_null


def is_wild(v: int) -> bool:
    return v < 0


class Fact(NamedTuple):
    rel: str
    args: tuple[int, ...]


@dataclass(frozen=True)
class Database:
    facts: frozenset[Fact]
    adom: frozenset[int] = field(init=False)
    nulls: frozenset[int] = field(init=False)

    def __post_init__(self):
        dom = set()
        for f in self.facts:
            dom.update(f.args)
        object.__setattr__(self, "adom", frozenset(dom))
        object.__setattr__(self, "nulls", frozenset(c for c in dom if is_null(c)))

    @staticmethod
    def of(facts: Iterable[Fact]) -> "Database":
        return Database(frozenset(facts))

    def by_rel(self) -> dict[str, set[tuple[int, ...]]]:
        out: dict[str, set[tuple[int, ...]]] = {}
        for f in self.facts:
            out.setdefault(f.rel, set()).add(f.args)
        return out

    def named_adom(self) -> frozenset[int]:
        return self.adom - self.nulls

    def __len__(self) -> int:
        return len(self.facts)


class Atom(NamedTuple):
    rel: str
    args: tuple[object, ...]  # str = variable, int = named constant

    def variables(self) -> list[str]:
        return [a for a in self.args if isinstance(a, str)]

    def constants(self) -> list[int]:
        return [a for a in self.args if isinstance(a, int)]


@dataclass(frozen=True)
class ConjunctiveQuery:
    answer_vars: tuple[str, ...]
    atoms: tuple[Atom, ...]

    @property
    def variables(self) -> frozenset[str]:
        vs = set()
        for a in self.atoms:
            vs.update(a.variables())
        return frozenset(vs)

    @property
    def quantified_vars(self) -> frozenset[str]:
        return self.variables - set(self.answer_vars)

    @property
    def constants(self) -> frozenset[int]:
        cs = set()
        for a in self.atoms:
            cs.update(a.constants())
        return frozenset(cs)

    def has_repeated_answer_vars(self) -> bool:
        return len(set(self.answer_vars)) != len(self.answer_vars)

    def arity(self) -> int:
        return len(self.answer_vars)


@dataclass(frozen=True)
class TGD:
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]

    @property
    def body_vars(self) -> frozenset[str]:
        vs = set()
        for a in self.body:
            vs.update(a.variables())
        return frozenset(vs)

    @property
    def head_vars(self) -> frozenset[str]:
        vs = set()
        for a in self.head:
            vs.update(a.variables())
        return frozenset(vs)

    @property
    def frontier(self) -> frozenset[str]:
        return self.body_vars & self.head_vars

    @property
    def existential_vars(self) -> frozenset[str]:
        return self.head_vars - self.body_vars

    def is_guarded(self) -> bool:
        if not self.body:
            return True
        bv = self.body_vars
        return any(set(a.variables()) == bv for a in self.body)

    def guard_index(self) -> Optional[int]:
        bv = self.body_vars
        for i, a in enumerate(self.body):
            if set(a.variables()) == bv:
                return i
        return None

    def is_eli(self) -> bool:
        # arity <= 2 everywhere, single frontier variable, head connected and
        # acyclic as a graph, no loops or parallel edges in the head
        for a in self.body + self.head:
            if len(a.args) > 2:
                return False
        if len(self.frontier) > 1:
            return False
        edges = set()
        adj: dict[str, set[str]] = {}
        seen_pairs = set()
        for a in self.head:
            vs = a.variables()
            if len(a.args) == 2:
                x, y = a.args
                if x == y:
                    return False  # reflexive loop
                key = frozenset((x, y))
                if (a.rel, x, y) in seen_pairs or key in edges:
                    return False  # multi-edge
                seen_pairs.add((a.rel, x, y))
                edges.add(key)
                adj.setdefault(x, set()).add(y)
                adj.setdefault(y, set()).add(x)
            else:
                for v in vs:
                    adj.setdefault(v, set())
        hv = self.head_vars
        if not hv:
            return True
        # connected
        start = next(iter(hv))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if seen != set(adj):
            return False
        # acyclic: |edges| == |vertices| - 1 for a connected graph
        return len(edges) == len(adj) - 1


@dataclass(frozen=True)
class Ontology:
    tgds: tuple[TGD, ...]

    def is_guarded(self) -> bool:
        return all(t.is_guarded() for t in self.tgds)

    def is_eli(self) -> bool:
        return all(t.is_eli() for t in self.tgds)

    def symbols(self) -> frozenset[str]:
        out = set()
        for t in self.tgds:
            for a in t.body + t.head:
                out.add(a.rel)
        return frozenset(out)

    def arities(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for t in self.tgds:
            for a in t.body + t.head:
                out[a.rel] = len(a.args)
        return out


@dataclass(frozen=True)
class OMQ:
    ontology: Ontology
    schema: frozenset[str]
    query: ConjunctiveQuery


class UsageError(ValueError):
    """Bad input structure or violated operation precondition."""


class ResourceLimitError(RuntimeError):
    """A configured bound was exceeded; the result would be incomplete."""


def wildcard_le(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    """a <= b in the single-wildcard order: b_i is a_i or *."""
    if len(a) != len(b):
        raise UsageError("tuple length mismatch")
    return all(y == x or y == WILDCARD for x, y in zip(a, b))


def validate_multi_tuple(t: tuple[int, ...]) -> bool:
    """Wildcard indices must first appear in increasing consecutive order."""
    top = 0
    for v in t:
        if v < 0:
            idx = -v
            if idx > top + 1:
                return False
            if idx == top + 1:
                top = idx
    return True


def multi_le(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    """a <= b in the multi-wildcard order.

    Entrywise b_i must be a_i or a wildcard, and equal wildcards in b must
    cover equal entries of a (identifications are refined, never coarsened).
    """
    if len(a) != len(b):
        raise UsageError("tuple length mismatch")
    if not (validate_multi_tuple(a) and validate_multi_tuple(b)):
        raise UsageError("malformed multi-wildcard tuple")
    covered: dict[int, int] = {}
    for x, y in zip(a, b):
        if y < 0:
            if y in covered:
                if covered[y] != x:
                    return False
            else:
                covered[y] = x
        elif x != y:
            return False
    return True


def flatten(t: tuple[int, ...]) -> tuple[int, ...]:
    """Replace every multi-wildcard with the single wildcard."""
    return tuple(WILDCARD if v < 0 else v for v in t)


def star_image(t: tuple[int, ...]) -> tuple[int, ...]:
    """Replace nulls by the single wildcard."""
    return tuple(WILDCARD if is_null(v) else v for v in t)


def multi_image(t: tuple[int, ...]) -> tuple[int, ...]:
    """Replace nulls by multi-wildcards numbered by first occurrence."""
    seen: dict[int, int] = {}
    out = []
    for v in t:
        if is_null(v):
            if v not in seen:
                seen[v] = -(len(seen) + 1)
            out.append(seen[v])
        else:
            out.append(v)
    return tuple(out)


def guarded_sets(D: Database) -> Iterator[tuple[int, ...]]:
    """All subsets of some fact's argument set, canonically sorted, each once."""
    seen: set[tuple[int, ...]] = set()
    for f in D.facts:
        args = sorted(set(f.args))
        n = len(args)
        for mask in range(1 << n):
            s = tuple(args[i] for i in range(n) if mask >> i & 1)
            if s not in seen:
                seen.add(s)
                yield s
