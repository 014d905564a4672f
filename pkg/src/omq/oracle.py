"""Brute-force reference computation of the three answer sets.

Deliberately independent of the engine: its own homomorphism search runs
over a depth-bounded chase whose depth escalates until all three answer
sets stop changing (or the chase saturates outright), and minimality is a
quadratic pairwise filter.  Slow, small, and obviously correct — used to
verify the enumerators and testers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .chase import HornFormula, chase_bounded
from .model import (
    ConjunctiveQuery,
    Database,
    Fact,
    OMQ,
    ResourceLimitError,
    UsageError,
    is_null,
    multi_image,
    multi_le,
    star_image,
    wildcard_le,
)


@dataclass(frozen=True)
class OracleConfig:
    max_adom: int = 64
    depth_start: int = 2
    depth_step: int = 2
    depth_cap: int = 12
    stable_rounds: int = 2
    fact_cap: int = 50000

    def __post_init__(self):
        if min(self.max_adom, self.depth_start, self.depth_step,
               self.depth_cap, self.stable_rounds, self.fact_cap) <= 0:
            raise UsageError("oracle bounds must be positive")


def _all_homs(atoms: tuple, facts: Iterable[Fact]) -> Iterator[dict]:
    by: dict[str, list[Fact]] = {}
    for f in facts:
        by.setdefault(f.rel, []).append(f)

    def rec(i: int, sub: dict) -> Iterator[dict]:
        if i == len(atoms):
            yield sub
            return
        a = atoms[i]
        for f in by.get(a.rel, ()):
            if len(f.args) != len(a.args):
                continue
            s2 = dict(sub)
            ok = True
            for t, v in zip(a.args, f.args):
                if isinstance(t, int):
                    if t != v:
                        ok = False
                        break
                elif t in s2:
                    if s2[t] != v:
                        ok = False
                        break
                else:
                    s2[t] = v
            if ok:
                yield from rec(i + 1, s2)

    yield from rec(0, {})


def _raw_answers(q: ConjunctiveQuery, db: Database) -> set[tuple]:
    if not set(q.answer_vars) <= set(q.variables):
        raise UsageError("every answer variable must occur in the query body")
    return {
        tuple(h[x] for x in q.answer_vars) for h in _all_homs(q.atoms, db.facts)
    }


def _minimal(tuples: set[tuple], le: Callable[[tuple, tuple], bool]) -> set[tuple]:
    return {
        t for t in tuples if not any(o != t and le(o, t) for o in tuples)
    }


def oracle_eval(
    Q: OMQ, D: Database, config: OracleConfig = OracleConfig()
) -> tuple[frozenset, frozenset, frozenset]:
    """(complete, minimal partial, minimal multi-wildcard) answer sets."""
    if len(D.adom) > config.max_adom:
        raise ResourceLimitError("database exceeds the oracle domain bound")
    prev = None
    prev_facts = None
    stable = 0
    depth = config.depth_start
    while depth <= config.depth_cap:
        db = chase_bounded(D, Q.ontology, depth)
        if len(db.facts) > config.fact_cap:
            raise ResourceLimitError("oracle chase exceeded the fact bound")
        raw = _raw_answers(Q.query, db)
        cur = (
            frozenset(t for t in raw if not any(is_null(c) for c in t)),
            frozenset(_minimal({star_image(t) for t in raw}, wildcard_le)),
            frozenset(_minimal({multi_image(t) for t in raw}, multi_le)),
        )
        if prev_facts is not None and db.facts == prev_facts:
            return cur  # the chase saturated: the sets are exact
        if cur == prev:
            stable += 1
            if stable >= config.stable_rounds:
                return cur
        else:
            stable = 0
        prev, prev_facts = cur, db.facts
        depth += config.depth_step
    raise ResourceLimitError("oracle answer sets did not stabilise within the depth cap")


def oracle_complete(Q: OMQ, D: Database, config: OracleConfig = OracleConfig()) -> set[tuple]:
    return set(oracle_eval(Q, D, config)[0])


def oracle_partial(Q: OMQ, D: Database, config: OracleConfig = OracleConfig()) -> set[tuple]:
    return set(oracle_eval(Q, D, config)[1])


def oracle_multi(Q: OMQ, D: Database, config: OracleConfig = OracleConfig()) -> set[tuple]:
    return set(oracle_eval(Q, D, config)[2])


def oracle_partial_all(q: ConjunctiveQuery, db: Database) -> set[tuple]:
    """All single-wildcard images of the answers over the given database."""
    return {star_image(t) for t in _raw_answers(q, db)}


def oracle_multi_all(q: ConjunctiveQuery, db: Database) -> set[tuple]:
    """All multi-wildcard images of the answers over the given database."""
    return {multi_image(t) for t in _raw_answers(q, db)}


def naive_min_model(phi: HornFormula) -> frozenset:
    """Least-fixpoint reference for the linear-time minimal-model routine."""
    facts: set[Fact] = set(phi.units)
    changed = True
    while changed:
        changed = False
        for body, head in phi.clauses:
            if head not in facts and all(b in facts for b in body):
                facts.add(head)
                changed = True
    return frozenset(facts)
