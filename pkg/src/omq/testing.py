"""Answer testers.

Single-testing checks one candidate tuple per call against the chase of the
instance; all-testing builds a prepared structure once and then answers
membership queries in time independent of the database.  Complete and
single-wildcard modes test certain-answer semantics; the multi-wildcard
single tester checks minimal multi-wildcard answers, while the prepared
multi-wildcard all-tester works at the chase level (exact wildcard images of
the chase answers, minimal or not).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from .chase import ChaseResult, extend_match, facts_by_rel, query_directed_chase
from .model import (
    WILDCARD,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    OMQ,
    UsageError,
    is_null,
    is_wild,
    validate_multi_tuple,
)
from .preprocess import Prepared, build_complete_index, build_q1_d1, transform_chase
from .structure import GUARD_REL, classify, join_tree, normalize_query


def _check_arity(q: ConjunctiveQuery, tup: tuple) -> None:
    if len(tup) != q.arity():
        raise UsageError(f"expected a {q.arity()}-tuple, got {len(tup)} entries")


def _binding(answer_vars: Sequence[str], tup: tuple) -> Optional[dict]:
    """Candidate entries keyed by answer variable; None when repeated
    variables carry different entries."""
    out: dict[str, int] = {}
    for x, c in zip(answer_vars, tup):
        if out.setdefault(x, c) != c:
            return None
    return out


def _subst(atoms: Sequence[Atom], binding: dict) -> list[Atom]:
    return [
        Atom(a.rel, tuple(binding.get(t, t) if isinstance(t, str) else t for t in a.args))
        for a in atoms
    ]


def _satisfiable(atoms: Sequence[Atom], by_rel: dict, named_vars: frozenset = frozenset()) -> bool:
    """Backtracking Boolean evaluation; variables in `named_vars` may not be
    mapped to nulls."""

    def rec(pending: list[Atom], sub: dict) -> bool:
        if not pending:
            return True
        # most-bound atom first keeps the branching narrow
        def rank(k: int) -> tuple:
            a = pending[k]
            bound = sum(1 for t in a.args if isinstance(t, int) or t in sub)
            return (bound - len(a.args), len(by_rel.get(a.rel, ())))

        k = min(range(len(pending)), key=rank)
        a = pending[k]
        rest = pending[:k] + pending[k + 1:]
        for f in by_rel.get(a.rel, ()):
            s2 = extend_match(a, f, sub)
            if s2 is None:
                continue
            if any(
                isinstance(t, str) and t in named_vars and is_null(s2[t])
                for t in a.args
            ):
                continue
            if rec(rest, s2):
                return True
        return False

    return rec(list(atoms), {})


def _chase_for(Q: OMQ, D: Database, chase: Optional[ChaseResult]) -> ChaseResult:
    return chase if chase is not None else query_directed_chase(D, Q)


def single_test_complete(
    Q: OMQ, D: Database, tup: tuple, chase: Optional[ChaseResult] = None
) -> bool:
    """Is the constant tuple a certain answer?"""
    if not Q.ontology.is_guarded():
        raise UsageError("complete testing requires a guarded ontology")
    if not classify(Q.query).weakly_acyclic:
        raise UsageError("complete testing requires a weakly acyclic query")
    _check_arity(Q.query, tup)
    if any(is_wild(c) for c in tup):
        raise UsageError("complete answers contain named constants only")
    if any(is_null(c) for c in tup):
        return False
    binding = _binding(Q.query.answer_vars, tup)
    if binding is None:
        return False
    ch = _chase_for(Q, D, chase)
    return _satisfiable(_subst(Q.query.atoms, binding), facts_by_rel(ch.db.facts))


def single_test_partial(
    Q: OMQ, D: Database, tup: tuple, chase: Optional[ChaseResult] = None
) -> bool:
    """Is the single-wildcard tuple a minimal partial answer?"""
    if not Q.ontology.is_guarded():
        raise UsageError("partial testing requires a guarded ontology")
    if not classify(Q.query).acyclic:
        raise UsageError("partial testing requires an acyclic query")
    _check_arity(Q.query, tup)
    if any(is_wild(c) and c != WILDCARD for c in tup):
        raise UsageError("partial answers use the single wildcard only")
    if any(c >= 0 and is_null(c) for c in tup):
        return False
    binding = _binding(Q.query.answer_vars, tup)
    if binding is None:
        return False
    ch = _chase_for(Q, D, chase)
    by = facts_by_rel(ch.db.facts)
    named = {x: c for x, c in binding.items() if c != WILDCARD}
    wild_vars = [x for x, c in binding.items() if c == WILDCARD]
    atoms = _subst(Q.query.atoms, named)
    if not _satisfiable(atoms, by):
        return False
    # a wildcard position is improvable when the same query maps with that
    # variable on a named constant
    return not any(
        _satisfiable(atoms, by, named_vars=frozenset((z,))) for z in wild_vars
    )


def single_test_multi(
    Q: OMQ, D: Database, tup: tuple, chase: Optional[ChaseResult] = None
) -> bool:
    """Is the multi-wildcard tuple a minimal multi-wildcard partial answer?"""
    if not Q.ontology.is_eli():
        raise UsageError("multi-wildcard testing requires an ELI ontology")
    if not classify(Q.query).acyclic:
        raise UsageError("multi-wildcard testing requires an acyclic query")
    _check_arity(Q.query, tup)
    if any(c >= 0 and is_null(c) for c in tup):
        return False
    if not validate_multi_tuple(tup):
        return False
    binding = _binding(Q.query.answer_vars, tup)
    if binding is None:
        return False
    ch = _chase_for(Q, D, chase)
    by = facts_by_rel(ch.db.facts)

    named = {x: c for x, c in binding.items() if c >= 0}
    classes: dict[int, list[str]] = {}
    for x in Q.query.answer_vars:
        c = binding[x]
        if c < 0 and x not in [y for xs in classes.values() for y in xs]:
            classes.setdefault(c, []).append(x)
    rep_of = {x: xs[0] for xs in classes.values() for x in xs}
    atoms = [
        Atom(
            a.rel,
            tuple(
                named.get(t, rep_of.get(t, t)) if isinstance(t, str) else t
                for t in a.args
            ),
        )
        for a in Q.query.atoms
    ]
    if not _satisfiable(atoms, by):
        return False
    reps = [xs[0] for xs in classes.values()]
    # improvement (a): one wildcard class collapses onto a named constant
    for r in reps:
        if _satisfiable(atoms, by, named_vars=frozenset((r,))):
            return False
    # improvement (b): two distinct wildcard classes share their value
    for r1, r2 in itertools.combinations(reps, 2):
        merged = [
            Atom(a.rel, tuple(r1 if t == r2 else t for t in a.args)) for a in atoms
        ]
        if _satisfiable(merged, by):
            return False
    return True


# ---------------------------------------------------------------------------
# prepared all-testing: complete answers


def _forest_components(adj: dict[int, set[int]], nodes: Sequence[int], drop: int) -> list[list[int]]:
    seen = {drop}
    out = []
    for v in nodes:
        if v in seen:
            continue
        comp = []
        stack = [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        out.append(sorted(comp))
    return out


@dataclass
class CompleteTester:
    """Constant-time membership tests for complete answers after a single
    preprocessing pass: the query splits at its answer-variable guard into
    independent pieces, each reduced to per-fact lookups."""

    query: ConjunctiveQuery
    satisfiable: bool
    components: list[tuple[tuple[Atom, ...], frozenset]]
    component_queries: list[ConjunctiveQuery]

    def test(self, tup: tuple) -> bool:
        _check_arity(self.query, tup)
        if any(is_wild(c) or is_null(c) for c in tup):
            return False
        binding = _binding(self.query.answer_vars, tup)
        if binding is None or not self.satisfiable:
            return False
        for atoms, fact_set in self.components:
            for a in atoms:
                args = tuple(binding[t] if isinstance(t, str) else t for t in a.args)
                if Fact(a.rel, args) not in fact_set:
                    return False
        return True


def alltest_complete_prepare(
    Q: OMQ, D: Database, chase: Optional[ChaseResult] = None
) -> CompleteTester:
    if not Q.ontology.is_guarded():
        raise UsageError("complete testing requires a guarded ontology")
    q = Q.query
    if not classify(q).free_connex:
        raise UsageError("complete all-testing requires a free-connex query")
    ch = _chase_for(Q, D, chase)
    norm = normalize_query(q)
    qn = norm.query
    ch_t = transform_chase(ch, norm.db_transform) if norm.changed else ch
    by_t = facts_by_rel(ch_t.db.facts)

    satisfiable = True
    components: list[tuple[tuple[Atom, ...], frozenset]] = []
    component_queries: list[ConjunctiveQuery] = []
    if qn.answer_vars:
        guard = Atom(GUARD_REL, tuple(qn.answer_vars))
        plus = ConjunctiveQuery(qn.answer_vars, qn.atoms + (guard,))
        tree = join_tree(plus)
        assert tree is not None  # free-connex survives normalization
        for idxs in _forest_components(tree.adj, tree.nodes(), len(qn.atoms)):
            atoms_i = tuple(qn.atoms[i] for i in idxs)
            vs = set()
            for a in atoms_i:
                vs.update(a.variables())
            ans_i = tuple(x for x in qn.answer_vars if x in vs)
            if not ans_i:
                satisfiable = satisfiable and _satisfiable(atoms_i, by_t)
                continue
            qi = ConjunctiveQuery(ans_i, atoms_i)
            component_queries.append(qi)
            prep = build_complete_index(qi, ch_t)
            components.append((tuple(prep.q1.atoms), frozenset(prep.d1.facts)))
    else:
        satisfiable = _satisfiable(qn.atoms, by_t)
    return CompleteTester(q, satisfiable, components, component_queries)


# ---------------------------------------------------------------------------
# prepared all-testing: multi-wildcard images of the chase answers


def _class_groups(atoms: list[tuple[str, tuple]]) -> list[list[tuple[str, tuple]]]:
    """Atoms grouped transitively by shared wildcard classes."""
    parent: dict[int, int] = {}

    def find(c: int) -> int:
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    for _, args in atoms:
        cs = [v for v in args if v < 0]
        for c in cs:
            parent.setdefault(c, c)
        for c in cs[1:]:
            ra, rb = find(cs[0]), find(c)
            if ra != rb:
                parent[ra] = rb
    buckets: dict[int, list[tuple[str, tuple]]] = {}
    for rel, args in atoms:
        root = find(next(v for v in args if v < 0))
        buckets.setdefault(root, []).append((rel, args))
    return [buckets[r] for r in sorted(buckets, reverse=True)]


def _witness_options(atoms: Sequence[tuple[str, tuple]], grp) -> set[frozenset]:
    """Sets of nulls of one witness that realise the atom group: wildcard
    classes map to pairwise distinct nulls, named entries match exactly."""
    out: set[frozenset] = set()

    def rec(i: int, cmap: dict) -> None:
        if i == len(atoms):
            out.add(frozenset(cmap.values()))
            return
        rel, args = atoms[i]
        for f in grp.by_rel.get(rel, ()):
            if len(f.args) != len(args):
                continue
            m = dict(cmap)
            ok = True
            for v, fv in zip(args, f.args):
                if v >= 0:
                    if fv != v:
                        ok = False
                        break
                elif not is_null(fv):
                    ok = False
                    break
                elif v in m:
                    if m[v] != fv:
                        ok = False
                        break
                elif fv in m.values():
                    ok = False
                    break
                else:
                    m[v] = fv
            if ok:
                rec(i + 1, m)

    rec(0, {})
    return out


def _disjoint_choice(options: list[list[frozenset]], used: frozenset) -> bool:
    if not options:
        return True
    first, rest = options[0], options[1:]
    for opt in first:
        if opt & used:
            continue
        if _disjoint_choice(rest, used | opt):
            return True
    return False


class MultiTester:
    """Membership in the exact multi-wildcard images of the chase answers:
    named entries resolve through the null-free reduced facts, wildcard
    classes must land on pairwise distinct nulls, and classes connected
    through shared atoms must be realised inside one witness."""

    def __init__(self, prep: Prepared):
        self.prep = prep
        self.query = prep.query
        self.named_set = frozenset(
            f for fs in prep.named1.values() for f in fs
        )
        self._group_memo: dict[tuple, list[frozenset]] = {}
        self._results: dict[tuple, bool] = {}

    def test(self, tup: tuple) -> bool:
        _check_arity(self.query, tup)
        if tup not in self._results:
            self._results[tup] = self._test(tup)
        return self._results[tup]

    def _test(self, tup: tuple) -> bool:
        if any(c >= 0 and is_null(c) for c in tup):
            return False
        if not validate_multi_tuple(tup):
            return False
        if self.prep.empty:
            return False
        binding = dict(zip(self.prep.q1.answer_vars, tup))
        wild_atoms: list[tuple[str, tuple]] = []
        for a in self.prep.q1.atoms:
            args = tuple(binding[x] for x in a.args)
            if all(v >= 0 for v in args):
                if Fact(a.rel, args) not in self.named_set:
                    return False
            else:
                wild_atoms.append((a.rel, args))
        if not wild_atoms:
            return True
        options: list[list[frozenset]] = []
        for group in _class_groups(wild_atoms):
            opts = self._group_options(tuple(sorted(group)))
            if not opts:
                return False
            options.append(opts)
        options.sort(key=len)
        return _disjoint_choice(options, frozenset())

    def _group_options(self, atoms: tuple) -> list[frozenset]:
        ren: dict[int, int] = {}
        canon = []
        for rel, args in atoms:
            cargs = []
            for v in args:
                if v < 0:
                    ren.setdefault(v, -(len(ren) + 1))
                    cargs.append(ren[v])
                else:
                    cargs.append(v)
            canon.append((rel, tuple(cargs)))
        key = tuple(canon)
        if key not in self._group_memo:
            opts: set[frozenset] = set()
            for grp in self.prep.groups1:
                opts |= _witness_options(key, grp)
            self._group_memo[key] = sorted(opts, key=sorted)
        return self._group_memo[key]


def alltest_multi_prepare(q: ConjunctiveQuery, chase: ChaseResult) -> MultiTester:
    """Prepared tester over a chase: accepts exactly the tuples obtained from
    some chase answer by renaming its nulls to wildcard indices in order of
    first occurrence.  The query must have distinct answer variables and no
    constants (normalize first)."""
    report = classify(q)
    if not report.acyclic or not report.free_connex:
        raise UsageError("multi-wildcard all-testing requires an acyclic free-connex query")
    return MultiTester(build_q1_d1(q, chase))


class MultiAllTester:
    """Chase-level multi-wildcard all-testing lifted to an arbitrary query:
    normalizes the query, then maps candidates onto the normalized signature."""

    def __init__(self, Q: OMQ, D: Database, chase: Optional[ChaseResult] = None):
        if not Q.ontology.is_guarded():
            raise UsageError("multi-wildcard testing requires a guarded ontology")
        self.query = Q.query
        ch = _chase_for(Q, D, chase)
        norm = normalize_query(Q.query)
        ch_t = transform_chase(ch, norm.db_transform) if norm.changed else ch
        seen: dict[str, int] = {}
        for i, x in enumerate(Q.query.answer_vars):
            seen.setdefault(x, i)
        self._kept = tuple(seen[x] for x in norm.query.answer_vars)
        if norm.query.answer_vars:
            self._inner: Optional[MultiTester] = alltest_multi_prepare(norm.query, ch_t)
            self._holds = True
        else:
            # Boolean query: membership of () is plain satisfiability.
            self._inner = None
            self._holds = _satisfiable(norm.query.atoms, facts_by_rel(ch_t.db.facts))

    def test(self, tup: tuple) -> bool:
        _check_arity(self.query, tup)
        if _binding(self.query.answer_vars, tup) is None:
            return False
        if not validate_multi_tuple(tup):
            return False
        if self._inner is None:
            return self._holds
        return self._inner.test(tuple(tup[i] for i in self._kept))
