"""Pull-based answer enumerators.

Three modes share one machinery: a depth-first walk over the progress-tree
lists of a reduced instance yields answers with bounded work between
consecutive yields.  Complete mode pins every answer variable to the named
domain; partial mode emits minimal single-wildcard answers (with optional
pruning disabled for order inspection); multi mode refines the partial
stream into minimal multi-wildcard answers through a chase-level image
tester.  Disconnected queries run one walk per connected component glued by
a replayable product combinator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .chase import ChaseResult, facts_by_rel, query_directed_chase
from .model import (
    WILDCARD,
    ConjunctiveQuery,
    Database,
    OMQ,
    UsageError,
    const_label,
    multi_le,
)
from .preprocess import (
    Prepared,
    TreesIndex,
    build_complete_index,
    build_q1_d1,
    build_trees_index,
    transform_chase,
)
from .structure import Normalization, classify, connected_components, normalize_query
from .testing import _satisfiable, alltest_multi_prepare

EOA = -1  # end-of-atoms marker returned by nextat
START = -2  # start sentinel: scan from the first atom in pre-order


def nextat(prep: Prepared, h: dict, v: int = START) -> int:
    """The first atom after v in pre-order with a variable unassigned in h,
    or the end marker when every later atom is fully assigned."""
    order = prep.preorder
    start = 0 if v == START else order.index(v) + 1
    for p in range(start, len(order)):
        u = order[p]
        if any(x not in h for x in prep.node_vars[u]):
            return u
    return EOA


def walk(prep: Prepared, trees: TreesIndex, prune: bool = True) -> Iterator[tuple]:
    """Depth-first traversal of the progress-tree lists.

    Yields one tuple per answer, in the answer-variable order of the
    prepared query.  Atoms whose variables are already assigned are skipped;
    the semijoin reduction guarantees their facts exist.  With pruning on,
    resuming after a yield first retires every tree that worsens the emitted
    assignment, so dominated answers are never produced.
    """
    if prep.empty:
        return
    order = prep.preorder
    n = len(order)
    answer = prep.query.answer_vars
    h: dict[str, int] = {}

    def advance(p: int) -> int:
        while p < n and all(x in h for x in prep.node_vars[order[p]]):
            p += 1
        return p

    def backtrack(frame):
        pos, entry, added = frame
        for x in added:
            del h[x]
        return pos, entry.next

    stack: list[tuple] = []
    pos = advance(0)
    cur = trees.head(order[pos], prep.hkey(order[pos], h)) if pos < n else None
    while True:
        if cur is None:
            if not stack:
                return
            pos, cur = backtrack(stack.pop())
            continue
        trees.visits += 1
        if cur.removed:
            cur = cur.next
            continue
        tree = cur.tree
        added = [x for x, _ in tree.assign if x not in h]
        for x, val in tree.assign:
            h[x] = val
        stack.append((pos, cur, added))
        nxt = advance(pos + 1)
        if nxt >= n:
            yield tuple(h[x] for x in answer)
            if prune:
                trees.prune(h)
            pos, cur = backtrack(stack.pop())
            continue
        pos = nxt
        cur = trees.head(order[pos], prep.hkey(order[pos], h))


class _CachedStream:
    """Replayable view of a one-shot stream; answers are cached as the first
    sweep discovers them, later sweeps read the cache."""

    def __init__(self, it: Iterator[tuple]):
        self._it = iter(it)
        self._cache: list[tuple] = []
        self._done = False

    def replay(self) -> Iterator[tuple]:
        i = 0
        while True:
            if i < len(self._cache):
                yield self._cache[i]
            elif self._done:
                return
            else:
                try:
                    item = next(self._it)
                except StopIteration:
                    self._done = True
                    return
                self._cache.append(item)
                yield item
            i += 1


def enum_product(components: Sequence[Iterator[tuple]]) -> Iterator[tuple]:
    """Cartesian product of component streams, concatenating their tuples.
    The leftmost stream is consumed once; the others are cached and
    replayed, so the product is restartable without re-enumeration."""
    components = list(components)
    if not components:
        yield ()
        return
    first = components[0]
    rest = [_CachedStream(c) for c in components[1:]]

    def suffixes(i: int) -> Iterator[tuple]:
        if i == len(rest):
            yield ()
            return
        for left in rest[i].replay():
            for right in suffixes(i + 1):
                yield left + right

    for a in first:
        for b in suffixes(0):
            yield a + b


@dataclass
class EnumPlan:
    """Everything the enumeration phase needs, built in one pass over the
    database: the chase, the normalized query, one reduced instance and
    trees index per answer-bearing connected component, and the gate for
    components without answer variables."""

    omq: OMQ
    norm: Normalization
    chase: ChaseResult
    satisfiable: bool
    components: list[ConjunctiveQuery]
    preps: list[Prepared]
    trees: list[TreesIndex]
    perm: tuple[int, ...]

    def visits(self) -> int:
        return sum(t.visits for t in self.trees)


def prepare(Q: OMQ, D: Database, mode: str = "partial") -> EnumPlan:
    """Chase the instance and reduce each connected component of the
    normalized query; mode "complete" restricts answers to named constants,
    "partial" admits wildcard assignments."""
    if mode not in ("complete", "partial"):
        raise UsageError(f"unknown enumeration mode: {mode}")
    if not Q.ontology.is_guarded():
        raise UsageError("enumeration requires a guarded ontology")
    chase = query_directed_chase(D, Q)
    norm = normalize_query(Q.query)
    qn = norm.query
    report = classify(qn)
    if not report.acyclic or not report.free_connex:
        raise UsageError("enumeration requires an acyclic free-connex query")
    chase_t = transform_chase(chase, norm.db_transform) if norm.changed else chase
    by_t = facts_by_rel(chase_t.db.facts)

    satisfiable = True
    comps: list[ConjunctiveQuery] = []
    for comp in connected_components(qn):
        if comp.answer_vars:
            comps.append(comp)
        elif satisfiable:
            satisfiable = _satisfiable(comp.atoms, by_t)

    flat = [x for c in comps for x in c.answer_vars]
    perm = tuple(flat.index(x) for x in qn.answer_vars)

    preps: list[Prepared] = []
    trees: list[TreesIndex] = []
    if satisfiable:
        build = build_complete_index if mode == "complete" else build_q1_d1
        for comp in comps:
            prep = build(comp, chase_t)
            preps.append(prep)
            trees.append(build_trees_index(prep))
    return EnumPlan(Q, norm, chase_t, satisfiable, comps, preps, trees, perm)


def answers(plan: EnumPlan, prune: bool = True) -> Iterator[tuple]:
    """The plan's answer stream, re-expanded to the original signature."""
    if not plan.satisfiable:
        return
    expand = plan.norm.expander
    if not plan.components:
        yield expand(())
        return
    walks = [walk(p, t, prune=prune) for p, t in zip(plan.preps, plan.trees)]
    for row in enum_product(walks):
        yield expand(tuple(row[i] for i in plan.perm))


def enum_complete(Q: OMQ, D: Database) -> Iterator[tuple]:
    """All certain answers over named constants, without repetition."""
    # nothing is ever dominated in the named-only reduction, so skip pruning
    yield from answers(prepare(Q, D, "complete"), prune=False)


def enum_partial(Q: OMQ, D: Database, prune: bool = True) -> Iterator[tuple]:
    """Minimal single-wildcard answers; with prune off, all single-wildcard
    chase answers in an order that never places a refinement after a
    coarsening."""
    yield from answers(prepare(Q, D, "partial"), prune=prune)


def enum_partial_complete_first(Q: OMQ, D: Database) -> Iterator[tuple]:
    """The partial-answer set reordered: every all-constant answer first.
    Both enumerators advance in lockstep; wildcard answers are held back
    while complete answers remain, then flushed."""
    complete = answers(prepare(Q, D, "complete"), prune=False)
    partial = answers(prepare(Q, D, "partial"))
    held: list[tuple] = []
    exhausted = False
    for c in complete:
        yield c
        if not exhausted:
            try:
                p = next(partial)
                if WILDCARD in p:
                    held.append(p)
            except StopIteration:
                exhausted = True
    yield from held
    for p in partial:
        if WILDCARD in p:
            yield p


# ---------------------------------------------------------------------------
# multi-wildcard enumeration


def _set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All partitions of items into nonempty blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _number_blocks(base: Sequence[int], blocks: list[list[int]]) -> tuple:
    out = list(base)
    for j, blk in enumerate(sorted(blocks, key=min)):
        for i in blk:
            out[i] = -(j + 1)
    return tuple(out)


def ball(a: tuple) -> set[tuple]:
    """All well-formed multi-wildcard tuples that flatten back to a."""
    wild = [i for i, v in enumerate(a) if v == WILDCARD]
    return {_number_blocks(a, part) for part in _set_partitions(wild)}


def cone(a: tuple) -> set[tuple]:
    """The balls of every single-wildcard coarsening of a, united."""
    named = [i for i, v in enumerate(a) if v != WILDCARD]
    out: set[tuple] = set()
    for r in range(len(named) + 1):
        for extra in itertools.combinations(named, r):
            b = list(a)
            for i in extra:
                b[i] = WILDCARD
            out |= ball(tuple(b))
    return out


def _worsenings(a: tuple) -> Iterator[tuple]:
    """All well-formed multi-wildcard tuples strictly coarser than a."""
    wild = [i for i, v in enumerate(a) if v < 0]
    named = [i for i, v in enumerate(a) if v >= 0]
    for r in range(len(named) + 1):
        for extra in itertools.combinations(named, r):
            base = list(a)
            for i in extra:
                base[i] = WILDCARD
            for part in _set_partitions(wild + list(extra)):
                cand = _number_blocks(base, part)
                if cand != a and multi_le(a, cand):
                    yield cand


def _lex_key(t: tuple) -> tuple:
    """Deterministic tie-breaking: constants sort before wildcards by label,
    wildcards by index."""
    return tuple((0, const_label(v)) if v >= 0 else (1, -v) for v in t)


def enum_multi(Q: OMQ, D: Database) -> Iterator[tuple]:
    """Minimal multi-wildcard answers, without repetition.

    Each minimal single-wildcard answer opens its cone: cone members that
    are images of chase answers enter a pending list unless already seen,
    and each entry retires its coarsenings.  One ball-minimal member is
    emitted immediately per single-wildcard answer; whatever remains pending
    at the end is flushed in insertion order.
    """
    plan = prepare(Q, D, "partial")
    if not plan.satisfiable:
        return
    expand = plan.norm.expander
    if not plan.components:
        yield expand(())
        return
    tester = alltest_multi_prepare(plan.norm.query, plan.chase)
    seen: set[tuple] = set()
    pending: dict[tuple, None] = {}

    walks = [walk(p, t, prune=True) for p, t in zip(plan.preps, plan.trees)]
    for row in enum_product(walks):
        astar = tuple(row[i] for i in plan.perm)
        for aw in sorted(cone(astar), key=_lex_key):
            if aw in seen or not tester.test(aw):
                continue
            seen.add(aw)
            pending[aw] = None
            for b in _worsenings(aw):
                seen.add(b)
                pending.pop(b, None)
        members = [aw for aw in ball(astar) if tester.test(aw)]
        assert members, "every minimal single-wildcard answer has an image in its ball"
        minimal = [
            m for m in members
            if not any(o != m and multi_le(o, m) for o in members)
        ]
        best = min(minimal, key=_lex_key)
        pending.pop(best, None)
        yield expand(best)
    for aw in pending:
        yield expand(aw)
