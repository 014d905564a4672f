"""Ontology reasoning over guarded existential rules.

Provides the Horn-clause view of fact entailment (with a linear-time minimal
model computation), a bounded oblivious chase, small-instance entailment
checks, and the witness-structured chase that the enumeration pipeline runs
on: every existential rule application is grouped into a witness consisting
of one null-free anchor fact plus all facts mentioning that application's
fresh nulls.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .model import (
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    OMQ,
    Ontology,
    ResourceLimitError,
    TGD,
    UsageError,
    fresh_null,
    is_null,
)

DEFAULT_ENTAIL_DEPTH = 24
FACT_LIMIT = 200_000
BLOCK_REPEATS = 3


def _depth_cap() -> int:
    raw = os.environ.get("OMQ_ENTAIL_DEPTH", "")
    try:
        return max(2, int(raw)) if raw else DEFAULT_ENTAIL_DEPTH
    except ValueError:
        return DEFAULT_ENTAIL_DEPTH


# ---------------------------------------------------------------------------
# homomorphism search


def facts_by_rel(facts: Iterable[Fact]) -> dict[str, list[Fact]]:
    by: dict[str, list[Fact]] = {}
    for f in facts:
        by.setdefault(f.rel, []).append(f)
    return by


def extend_match(atom: Atom, fact: Fact, sub: dict) -> Optional[dict]:
    """Extend a variable assignment so that atom maps onto fact, or None."""
    if atom.rel != fact.rel or len(atom.args) != len(fact.args):
        return None
    new = dict(sub)
    for t, v in zip(atom.args, fact.args):
        if isinstance(t, int):
            if t != v:
                return None
        else:
            cur = new.get(t)
            if cur is None:
                new[t] = v
            elif cur != v:
                return None
    return new


def homomorphisms(atoms: Sequence[Atom], by_rel: dict, sub: Optional[dict] = None):
    """All extensions of sub mapping every atom onto a fact (backtracking)."""
    base = {} if sub is None else sub

    def rec(i: int, cur: dict):
        if i == len(atoms):
            yield cur
            return
        for f in by_rel.get(atoms[i].rel, ()):
            nxt = extend_match(atoms[i], f, cur)
            if nxt is not None:
                yield from rec(i + 1, nxt)

    yield from rec(0, base)


def _instantiate(atom: Atom, sub: dict) -> Fact:
    return Fact(
        atom.rel, tuple(sub[t] if isinstance(t, str) else t for t in atom.args)
    )


class _Overlay:
    """Read-only rel index view over a base index plus a small extension."""

    __slots__ = ("base", "extra")

    def __init__(self, base: dict, extra: dict):
        self.base = base
        self.extra = extra

    def get(self, rel: str, default=()):
        a = self.base.get(rel, ())
        b = self.extra.get(rel, ())
        if not b:
            return a
        if not a:
            return b
        return itertools.chain(a, b)


# ---------------------------------------------------------------------------
# Horn formulas over fact variables


@dataclass(frozen=True)
class HornFormula:
    """Definite clauses whose propositional variables are facts."""

    units: tuple[Fact, ...]
    clauses: tuple[tuple[tuple[Fact, ...], Fact], ...]

    @property
    def variables(self) -> frozenset:
        vs = set(self.units)
        for body, head in self.clauses:
            vs.update(body)
            vs.add(head)
        return frozenset(vs)


def min_model(phi: HornFormula) -> frozenset:
    """Least model via counter-based unit propagation (linear time)."""
    true: set[Fact] = set()
    counter = []
    watch: dict[Fact, list[int]] = {}
    for ci, (body, head) in enumerate(phi.clauses):
        distinct = frozenset(body)
        counter.append(len(distinct))
        for v in distinct:
            watch.setdefault(v, []).append(ci)
    queue = list(dict.fromkeys(phi.units))
    heads = [head for _, head in phi.clauses]
    for ci, (body, _) in enumerate(phi.clauses):
        if not body:
            queue.append(heads[ci])
    while queue:
        v = queue.pop()
        if v in true:
            continue
        true.add(v)
        for ci in watch.get(v, ()):
            counter[ci] -= 1
            if counter[ci] == 0 and heads[ci] not in true:
                queue.append(heads[ci])
    return frozenset(true)


# ---------------------------------------------------------------------------
# canonical forms (isomorphism types of small fact sets)


def _shape_key(img: Sequence[Fact]) -> tuple:
    """Canonical form with nulls abstracted away and constants concrete."""
    nulls: list[int] = []
    seen = set()
    for f in img:
        for t in f.args:
            if is_null(t) and t not in seen:
                seen.add(t)
                nulls.append(t)
    best = None
    for perm in itertools.permutations(range(len(nulls))):
        ren = {n: ("n", perm[i]) for i, n in enumerate(nulls)}
        ser = tuple(
            sorted((f.rel, tuple(ren.get(t, ("c", t)) for t in f.args)) for f in img)
        )
        if best is None or ser < best:
            best = ser
    return best if best is not None else ()


def _iso_type(facts: Sequence[Fact], terms: Sequence[int]) -> tuple[tuple, tuple]:
    """Canonical form abstracting *all* terms; returns (key, term order)."""
    best = None
    border: tuple = tuple(terms)
    for perm in itertools.permutations(terms):
        ren = {t: i for i, t in enumerate(perm)}
        ser = tuple(sorted((f.rel, tuple(ren[t] for t in f.args)) for f in facts))
        if best is None or ser < best:
            best = ser
            border = perm
    return (best if best is not None else (), border)


# ---------------------------------------------------------------------------
# bounded chases


def _saturate_full(facts: set[Fact], full: Sequence[TGD]) -> None:
    changed = True
    while changed:
        changed = False
        by = facts_by_rel(facts)
        for t in full:
            for sub in list(homomorphisms(t.body, by)):
                for ha in t.head:
                    nf = _instantiate(ha, sub)
                    if nf not in facts:
                        facts.add(nf)
                        changed = True
        if len(facts) > FACT_LIMIT:
            raise ResourceLimitError("fact limit exceeded during saturation")


def _blocked_chase(
    init: Iterable[Fact], onto: Ontology, k_block: int, cap: int
) -> tuple[set[Fact], bool]:
    """Oblivious chase with ancestor-type blocking; returns (facts, complete).

    complete is False when the depth cap suppressed an application whose
    consequences are therefore unknown.
    """
    full = [t for t in onto.tgds if not t.existential_vars]
    exist = [t for t in onto.tgds if t.existential_vars]
    facts = set(init)
    chain: dict[int, tuple] = {}
    fired: set = set()
    complete = True
    while True:
        _saturate_full(facts, full)
        by = facts_by_rel(facts)
        new_any = False
        for ti, t in enumerate(exist):
            for sub in list(homomorphisms(t.body, by)):
                img = tuple(sorted({_instantiate(a, sub) for a in t.body}))
                trig = (ti, img)
                if trig in fired:
                    continue
                chains = [
                    chain.get(a, ())
                    for f in img
                    for a in f.args
                    if is_null(a)
                ]
                parent = max(chains, key=len, default=())
                key = (ti, _shape_key(img))
                if parent.count(key) >= k_block:
                    fired.add(trig)
                    continue
                if len(parent) + 1 > cap:
                    fired.add(trig)
                    complete = False
                    continue
                fired.add(trig)
                grown = parent + (key,)
                ren = {z: fresh_null() for z in t.existential_vars}
                for n in ren.values():
                    chain[n] = grown
                for ha in t.head:
                    args = tuple(
                        ren.get(x, sub.get(x)) if isinstance(x, str) else x
                        for x in ha.args
                    )
                    facts.add(Fact(ha.rel, args))
                new_any = True
        if len(facts) > FACT_LIMIT:
            raise ResourceLimitError("fact limit exceeded during chase")
        if not new_any:
            break
    return facts, complete


def chase_bounded(D: Database, onto: Ontology, depth: int) -> Database:
    """Oblivious chase cut off at null depth; rules fire even when satisfied."""
    full = [t for t in onto.tgds if not t.existential_vars]
    exist = [t for t in onto.tgds if t.existential_vars]
    facts = set(D.facts)
    ndepth: dict[int, int] = {}
    fired: set = set()
    while True:
        _saturate_full(facts, full)
        by = facts_by_rel(facts)
        new_any = False
        for ti, t in enumerate(exist):
            for sub in list(homomorphisms(t.body, by)):
                img = tuple(sorted({_instantiate(a, sub) for a in t.body}))
                trig = (ti, img)
                if trig in fired:
                    continue
                level = 1 + max(
                    (ndepth.get(a, 0) for f in img for a in f.args), default=0
                )
                if level > depth:
                    continue
                fired.add(trig)
                ren = {z: fresh_null() for z in t.existential_vars}
                for n in ren.values():
                    ndepth[n] = level
                for ha in t.head:
                    args = tuple(
                        ren.get(x, sub.get(x)) if isinstance(x, str) else x
                        for x in ha.args
                    )
                    facts.add(Fact(ha.rel, args))
                new_any = True
        if len(facts) > FACT_LIMIT:
            raise ResourceLimitError("fact limit exceeded during chase")
        if not new_any:
            break
    return Database.of(facts)


# ---------------------------------------------------------------------------
# small-instance entailment with memoization by isomorphism type

_ENTAIL_MEMO: dict = {}


def _entail_key(facts: frozenset, atoms: Sequence[Atom], binding: dict) -> tuple:
    var_order: list[str] = []
    for a in atoms:
        for t in a.args:
            if isinstance(t, str) and t not in var_order:
                var_order.append(t)
    vren = {v: i for i, v in enumerate(var_order)}
    terms: list[int] = []
    seen: set[int] = set()
    for v in var_order:
        if v in binding and binding[v] not in seen:
            seen.add(binding[v])
            terms.append(binding[v])
    for f in sorted(facts):
        for t in f.args:
            if t not in seen:
                seen.add(t)
                terms.append(t)
    if len(terms) > 8:
        return ("large", frozenset(facts), tuple(atoms), tuple(sorted(binding.items())))
    best = None
    for perm in itertools.permutations(terms):
        ren = {t: i for i, t in enumerate(perm)}
        fser = tuple(sorted((f.rel, tuple(ren[t] for t in f.args)) for f in facts))
        aser = tuple(
            (a.rel, tuple(vren[t] if isinstance(t, str) else ("c", ren[t]) for t in a.args))
            for a in atoms
        )
        bser = tuple(sorted((vren[v], ren[c]) for v, c in binding.items() if v in vren))
        ser = (fser, aser, bser)
        if best is None or ser < best:
            best = ser
    return ("iso", best)


def entails_small(
    facts: Iterable[Fact],
    onto: Ontology,
    atoms: Sequence[Atom],
    binding: Optional[dict] = None,
) -> bool:
    """Does the chase of this (small) instance satisfy the atoms under binding?

    Raises ResourceLimitError when the depth cap leaves the answer undecided;
    OMQ_ENTAIL_DEPTH raises the cap.
    """
    if not onto.is_guarded():
        raise UsageError("entailment requires a guarded ontology")
    facts = frozenset(facts)
    binding = dict(binding or {})
    atoms = tuple(atoms)
    key = (onto, _entail_key(facts, atoms, binding))
    hit = _ENTAIL_MEMO.get(key)
    if hit is not None:
        return hit
    chased, complete = _blocked_chase(facts, onto, BLOCK_REPEATS, _depth_cap())
    by = facts_by_rel(chased)
    found = next(homomorphisms(atoms, by, binding), None) is not None
    if not found and not complete:
        raise ResourceLimitError(
            "entailment undecided at depth cap; set OMQ_ENTAIL_DEPTH higher"
        )
    _ENTAIL_MEMO[key] = found
    return found


# ---------------------------------------------------------------------------
# closure of null-free facts


def _signature(D: Database, onto: Ontology) -> list[tuple[str, int]]:
    sig = {(f.rel, len(f.args)) for f in D.facts}
    for t in onto.tgds:
        for a in t.body + t.head:
            sig.add((a.rel, len(a.args)))
    return sorted(sig)


def _named_closure(
    D: Database, onto: Ontology, clause_log: Optional[list] = None
) -> frozenset:
    """All null-free facts over guarded constant sets entailed by D and onto."""
    sig = _signature(D, onto)
    facts: set[Fact] = set(D.facts)
    by_term: dict[int, set[Fact]] = {}
    universe: set[frozenset] = {frozenset()}
    term_sets: dict[int, set[frozenset]] = {}
    queue: list[frozenset] = [frozenset()]
    queued: set[frozenset] = {frozenset()}

    def register(f: Fact) -> None:
        args = sorted(set(f.args))
        for t in args:
            by_term.setdefault(t, set()).add(f)
        for r in range(1, len(args) + 1):
            for comb in itertools.combinations(args, r):
                g = frozenset(comb)
                if g not in universe:
                    universe.add(g)
                    for t in comb:
                        term_sets.setdefault(t, set()).add(g)
                    if g not in queued:
                        queued.add(g)
                        queue.append(g)

    for f in sorted(D.facts):
        register(f)

    type_memo: dict = {}

    while queue:
        g = queue.pop()
        queued.discard(g)
        terms = sorted(g)
        if terms:
            fg = sorted(f for f in by_term.get(terms[0], ()) if set(f.args) <= g)
        else:
            fg = sorted(f for f in facts if not f.args)
        tkey, order = _iso_type(fg, terms)
        additions = type_memo.get(tkey)
        if additions is None:
            additions = []
            pos = {t: i for i, t in enumerate(order)}
            for rel, k in sig:
                gvars = tuple(f"v{i}" for i in range(k))
                goal = (Atom(rel, gvars),)
                for tup in itertools.product(terms, repeat=k):
                    if entails_small(fg, onto, goal, dict(zip(gvars, tup))):
                        additions.append((rel, tuple(pos[t] for t in tup)))
            type_memo[tkey] = additions
        body_snapshot = tuple(fg)
        for rel, idxs in additions:
            nf = Fact(rel, tuple(order[i] for i in idxs))
            if nf in facts:
                continue
            facts.add(nf)
            if clause_log is not None:
                clause_log.append((body_snapshot, nf))
            register(nf)
            argset = set(nf.args)
            probe = min(argset, default=None)
            if probe is None:
                affected = [frozenset()]
            else:
                affected = [s for s in term_sets.get(probe, ()) if argset <= s]
            for s in affected:
                if s not in queued:
                    queued.add(s)
                    queue.append(s)
    return frozenset(facts)


def horn_formula(D: Database, onto: Ontology) -> HornFormula:
    """Horn encoding of the null-free fact closure: units are the database
    facts, one clause per derived fact, so the minimal model is the closure."""
    log: list = []
    _named_closure(D, onto, clause_log=log)
    return HornFormula(tuple(sorted(D.facts)), tuple(log))


# ---------------------------------------------------------------------------
# enumeration of small connected queries over the rule schema


def cl(
    Q: OMQ, max_atoms: Optional[int] = None, limit: int = 200_000
) -> list[ConjunctiveQuery]:
    """Connected constant-free queries over the rule schema, up to renaming."""
    sig = sorted(
        {(a.rel, len(a.args)) for t in Q.ontology.tgds for a in t.body + t.head}
    )
    if not sig:
        return []
    max_ar = max(k for _, k in sig)
    nvars = max(len(Q.query.variables), max_ar)
    pool = [f"v{i}" for i in range(nvars)]
    alphabet = [
        Atom(rel, combo)
        for rel, k in sig
        for combo in itertools.product(pool, repeat=k)
    ]
    top = max_atoms if max_atoms is not None else len(Q.query.atoms)
    out: list[ConjunctiveQuery] = []
    seen: set = set()
    count = 0
    for size in range(1, top + 1):
        for subset in itertools.combinations(alphabet, size):
            count += 1
            if count > limit:
                raise ResourceLimitError(
                    "query-closure enumeration exceeded its budget"
                )
            used: list[str] = []
            for a in subset:
                for v in a.variables():
                    if v not in used:
                        used.append(v)
            # connectivity over shared variables
            if size > 1:
                adj = {i: set() for i in range(size)}
                for i in range(size):
                    for j in range(i + 1, size):
                        if set(subset[i].variables()) & set(subset[j].variables()):
                            adj[i].add(j)
                            adj[j].add(i)
                comp = {0}
                stack = [0]
                while stack:
                    u = stack.pop()
                    for w in adj[u]:
                        if w not in comp:
                            comp.add(w)
                            stack.append(w)
                if len(comp) != size:
                    continue
            best = None
            for perm in itertools.permutations(used):
                ren = dict(zip(used, perm))
                ser = tuple(
                    sorted((a.rel, tuple(ren[v] for v in a.args)) for a in subset)
                )
                if best is None or ser < best:
                    best = ser
            if best in seen:
                continue
            seen.add(best)
            atoms = tuple(Atom(rel, args) for rel, args in best)
            vs: list[str] = []
            for a in atoms:
                for v in a.variables():
                    if v not in vs:
                        vs.append(v)
            out.append(ConjunctiveQuery(tuple(vs), atoms))
    return out


# ---------------------------------------------------------------------------
# the witness-structured chase


@dataclass(frozen=True)
class Witness:
    """One existential rule application: a null-free anchor fact plus every
    fact mentioning the application's fresh nulls."""

    anchor: Fact
    facts: frozenset
    nulls: frozenset


@dataclass
class ChaseResult:
    base: Database
    named: frozenset
    witnesses: tuple
    _db: Optional[Database] = field(default=None, repr=False)

    @property
    def db(self) -> Database:
        if self._db is None:
            all_facts = set(self.named)
            for w in self.witnesses:
                all_facts.update(w.facts)
            self._db = Database.of(all_facts)
        return self._db

    def decomposition(self) -> list[tuple[Fact, frozenset]]:
        """Chase-like decomposition: (anchor, facts) per unit, covering db."""
        units = [(f, frozenset([f])) for f in sorted(self.named)]
        units.extend((w.anchor, w.facts | {w.anchor}) for w in self.witnesses)
        return units


def query_directed_chase(D: Database, Q: OMQ) -> ChaseResult:
    """Chase whose null part is organised into witnesses; the null-free part
    is the full entailment closure, and every existential rule application
    over null-free facts is expanded once, recursively, within its witness."""
    onto = Q.ontology
    if not onto.is_guarded():
        raise UsageError("the chase requires a guarded ontology")
    if D.nulls:
        raise UsageError("input databases must be null-free")
    named = _named_closure(D, onto)
    exist = [t for t in onto.tgds if t.existential_vars]
    full = [t for t in onto.tgds if not t.existential_vars]
    k_block = max(BLOCK_REPEATS, len(Q.query.variables))
    cap = _depth_cap()
    by_named = facts_by_rel(sorted(named))
    witnesses: list[Witness] = []
    for ti, t in enumerate(exist):
        guard = t.body[t.guard_index()]
        subs = sorted(
            homomorphisms(t.body, by_named),
            key=lambda s: tuple(sorted(s.items())),
        )
        for sub in subs:
            anchor = _instantiate(guard, sub)
            witnesses.append(
                _graft(t, ti, sub, anchor, named, by_named, exist, full, k_block, cap)
            )
    return ChaseResult(D, named, tuple(witnesses))


def _graft(
    tgd: TGD,
    ti: int,
    sub: dict,
    anchor: Fact,
    named: frozenset,
    by_named: dict,
    exist: Sequence[TGD],
    full: Sequence[TGD],
    k_block: int,
    cap: int,
) -> Witness:
    wfacts: set[Fact] = set()
    extra: dict[str, list[Fact]] = {}
    by = _Overlay(by_named, extra)
    chain: dict[int, tuple] = {}
    fired: set = set()
    pending: list[Fact] = []

    def absorb(nf: Fact) -> None:
        if any(is_null(a) for a in nf.args):
            if nf not in wfacts:
                wfacts.add(nf)
                extra.setdefault(nf.rel, []).append(nf)
                pending.append(nf)
        elif nf not in named:
            raise AssertionError(
                f"null-free consequence {nf} missing from the closure"
            )

    def fire(t: TGD, s: dict, parent: tuple) -> None:
        ren = {z: fresh_null() for z in t.existential_vars}
        for n in ren.values():
            chain[n] = parent
        for ha in t.head:
            args = tuple(
                ren.get(x, s.get(x)) if isinstance(x, str) else x for x in ha.args
            )
            absorb(Fact(ha.rel, args))

    img0 = tuple(sorted({_instantiate(a, sub) for a in tgd.body}))
    fired.add((ti, img0))
    fire(tgd, sub, ((ti, _shape_key(img0)),))

    while pending:
        f = pending.pop()
        for t in full:
            for pos, batom in enumerate(t.body):
                s0 = extend_match(batom, f, {})
                if s0 is None:
                    continue
                rest = t.body[:pos] + t.body[pos + 1 :]
                for s in list(homomorphisms(rest, by, s0)):
                    for ha in t.head:
                        absorb(_instantiate(ha, s))
        for tindex, t in enumerate(exist):
            for pos, batom in enumerate(t.body):
                s0 = extend_match(batom, f, {})
                if s0 is None:
                    continue
                rest = t.body[:pos] + t.body[pos + 1 :]
                for s in list(homomorphisms(rest, by, s0)):
                    img = tuple(sorted({_instantiate(a, s) for a in t.body}))
                    trig = (tindex, img)
                    if trig in fired:
                        continue
                    chains = [
                        chain.get(a, ())
                        for fa in img
                        for a in fa.args
                        if is_null(a)
                    ]
                    parent = max(chains, key=len, default=())
                    key = (tindex, _shape_key(img))
                    if parent.count(key) >= k_block:
                        fired.add(trig)
                        continue
                    if len(parent) + 1 > cap:
                        raise ResourceLimitError(
                            "chase expansion incomplete at depth cap; "
                            "set OMQ_ENTAIL_DEPTH higher"
                        )
                    fired.add(trig)
                    fire(t, s, parent + (key,))
        if len(wfacts) > FACT_LIMIT:
            raise ResourceLimitError("fact limit exceeded during chase expansion")
    nulls = frozenset(a for f in wfacts for a in f.args if is_null(a))
    return Witness(anchor, frozenset(wfacts), nulls)
