"""Reduction to a self-join-free full query and the progress-tree index.

build_q1_d1 turns an acyclic free-connex query plus its witness-structured
chase into a pair (q1, D1): every atom of q1 is a renamed copy of a source
atom over exactly the answer variables, each relation of D1 holds the
globally consistent facts (full semijoin reduction over the source join
tree), atoms mixing answer and quantified variables are projected onto
maximal answer-variable subsets, and the null-containing result facts are
grouped by the chase witness that owns their nulls.  The pair has the same
answers as the input, its domain is contained in the chase domain, and every
fact extends along every join-tree edge (the progress property that the
enumeration walk relies on).

build_trees_index materialises, for every atom v of q1 and every assignment
h of v's predecessor variables that extends into D1, the list of progress
trees below v: connected subtrees rooted at v whose variables are assigned
named constants or the wildcard, growing downward exactly through wildcard
shared variables, realisable by a homomorphism that sends wildcard variables
to nulls, with named values forming a guarded set.  Lists are sorted with
fully named trees first (database-preferring) and stored as doubly-linked
lists with a location table so dominated trees can be unlinked in constant
time; unlinking preserves each node's forward pointer, so paused cursors
resume safely.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .chase import ChaseResult, extend_match, facts_by_rel, homomorphisms
from .model import (
    WILDCARD,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    UsageError,
    const_label,
    guarded_sets,
    is_null,
)
from .structure import JoinTree, classify, join_tree

PDB_REL = "@adom"  # reserved: parsed identifiers cannot start with '@'


def _distinct_vars(atom: Atom) -> tuple[str, ...]:
    return tuple(dict.fromkeys(atom.variables()))


@dataclass
class WitnessGroup:
    """The null-containing D1 facts owned by one chase witness."""

    facts: tuple[Fact, ...]
    by_rel: dict[str, list[Fact]]
    nulls: frozenset
    consts: tuple[int, ...]


@dataclass
class Prepared:
    """The reduced instance plus its rooted join forest."""

    query: ConjunctiveQuery
    q1: ConjunctiveQuery
    atom_of: dict[str, int]  # q1 relation -> source atom index
    proj_nodes: frozenset  # q1 node ids built by projection
    d1: Database
    named1: dict[str, list[Fact]]
    groups1: tuple[WitnessGroup, ...]
    tree: JoinTree
    roots: tuple[int, ...]
    parent: dict[int, Optional[int]]
    children: dict[int, tuple[int, ...]]
    preorder: tuple[int, ...]
    pred_vars: dict[int, tuple[str, ...]]  # ordered by answer position
    node_vars: tuple[tuple[str, ...], ...]
    var_order: dict[str, int]
    empty: bool

    def hkey(self, node: int, assignment: dict) -> tuple:
        return tuple(assignment[x] for x in self.pred_vars[node])


def _center(tree: JoinTree, comp: set[int]) -> int:
    """Tree center by leaf peeling; ties broken by lowest node id."""
    if len(comp) <= 2:
        return min(comp)
    deg = {u: len(tree.adj[u]) for u in comp}
    alive = set(comp)
    while len(alive) > 2:
        leaves = [u for u in alive if deg[u] <= 1]
        for u in leaves:
            alive.remove(u)
            for w in tree.adj[u]:
                if w in alive:
                    deg[w] -= 1
    return min(alive)


def build_q1_d1(q: ConjunctiveQuery, chase: ChaseResult) -> Prepared:
    if q.constants:
        raise UsageError("the reduction expects a constant-free query")
    if q.has_repeated_answer_vars():
        raise UsageError("the reduction expects distinct answer variables")
    if not q.answer_vars:
        raise UsageError("the reduction expects at least one answer variable")
    report = classify(q)
    if not report.acyclic or not report.free_connex:
        raise UsageError("the reduction requires an acyclic free-connex query")

    d0 = chase.db
    by0 = d0.by_rel()
    atoms = q.atoms
    n = len(atoms)

    # candidate rows per atom, filtered by repeated-variable patterns
    cand: list[set[tuple]] = []
    pos_in: list[dict[str, int]] = []
    for a in atoms:
        pos: dict[str, int] = {}
        for k, x in enumerate(a.args):
            pos.setdefault(x, k)
        pos_in.append(pos)
        rows = set()
        for t in by0.get(a.rel, ()):
            if len(t) != len(a.args):
                continue
            if all(t[k] == t[pos[x]] for k, x in enumerate(a.args)):
                rows.add(t)
        cand.append(rows)

    def semi(i: int, j: int) -> None:
        """Keep the rows of atom i that have a partner row in atom j."""
        shared = sorted(set(atoms[i].variables()) & set(atoms[j].variables()))
        if not shared:
            if not cand[j]:
                cand[i] = set()
            return
        pj = [pos_in[j][x] for x in shared]
        pi = [pos_in[i][x] for x in shared]
        keys = {tuple(t[p] for p in pj) for t in cand[j]}
        cand[i] = {t for t in cand[i] if tuple(t[p] for p in pi) in keys}

    # full reduction: bottom-up then top-down over the source join forest
    t0 = join_tree(q)
    assert t0 is not None
    for comp in sorted(t0.components(), key=min):
        rt = t0.orient(min(comp))
        for u in reversed(rt.preorder):
            p = rt.parent[u]
            if p is not None:
                semi(p, u)
        for u in rt.preorder:
            p = rt.parent[u]
            if p is not None:
                semi(u, p)
    empty = any(not rows for rows in cand)
    if empty:
        cand = [set() for _ in atoms]

    # kept atoms (answer variables only) and surviving projections
    answer = set(q.answer_vars)
    var_sets = [set(a.variables()) for a in atoms]
    kept = [i for i in range(n) if var_sets[i] and var_sets[i] <= answer]
    mixed = [i for i in range(n) if var_sets[i] - answer and var_sets[i] & answer]
    proj_of = {
        i: tuple(x for x in _distinct_vars(atoms[i]) if x in answer) for i in mixed
    }
    surviving = []
    for i in mixed:
        s = set(proj_of[i])
        if any(s <= var_sets[j] for j in kept):
            continue
        if any(s < set(proj_of[j]) for j in mixed):
            continue
        if any(s == set(proj_of[j]) for j in mixed if j < i):
            continue
        surviving.append(i)

    q1_atoms: list[Atom] = []
    atom_of: dict[str, int] = {}
    proj_nodes: set[int] = set()
    for i in sorted(kept + surviving):
        rel = f"{atoms[i].rel}.{i}"
        args = atoms[i].args if i in kept else proj_of[i]
        if i in surviving:
            proj_nodes.add(len(q1_atoms))
        q1_atoms.append(Atom(rel, tuple(args)))
        atom_of[rel] = i
    q1 = ConjunctiveQuery(q.answer_vars, tuple(q1_atoms))

    facts: list[Fact] = []
    for node, a1 in enumerate(q1_atoms):
        i = atom_of[a1.rel]
        if node in proj_nodes:
            ps = [pos_in[i][x] for x in a1.args]
            rows = {tuple(t[p] for p in ps) for t in cand[i]}
        else:
            rows = cand[i]
        facts.extend(Fact(a1.rel, t) for t in rows)
    d1 = Database.of(facts)

    named1 = facts_by_rel(sorted(f for f in d1.facts if not any(is_null(c) for c in f.args)))

    owner: dict[int, int] = {}
    for wi, w in enumerate(chase.witnesses):
        for nl in w.nulls:
            owner[nl] = wi
    buckets: dict[int, list[Fact]] = {}
    for f in sorted(d1.facts):
        ns = [c for c in f.args if is_null(c)]
        if ns:
            buckets.setdefault(owner[ns[0]], []).append(f)
    groups: list[WitnessGroup] = []
    for wi in sorted(buckets):
        fs = tuple(buckets[wi])
        nulls = frozenset(c for f in fs for c in f.args if is_null(c))
        consts = tuple(sorted({c for f in fs for c in f.args if not is_null(c)}))
        groups.append(WitnessGroup(fs, facts_by_rel(fs), nulls, consts))

    t1 = join_tree(q1)
    assert t1 is not None  # projections keep the hypergraph conformal and chordal
    roots: list[int] = []
    parent: dict[int, Optional[int]] = {}
    children: dict[int, tuple[int, ...]] = {}
    preorder: list[int] = []
    pred_vars: dict[int, tuple[str, ...]] = {}
    var_order = {x: k for k, x in enumerate(q.answer_vars)}
    for comp in sorted(t1.components(), key=min):
        rt = t1.orient(_center(t1, comp))
        roots.append(rt.root)
        parent.update(rt.parent)
        preorder.extend(rt.preorder)
        for u in rt.preorder:
            children[u] = tuple(rt.children(u))
            pred_vars[u] = tuple(sorted(rt.pred_vars[u], key=var_order.get))

    return Prepared(
        query=q,
        q1=q1,
        atom_of=atom_of,
        proj_nodes=frozenset(proj_nodes),
        d1=d1,
        named1=named1,
        groups1=tuple(groups),
        tree=t1,
        roots=tuple(roots),
        parent=parent,
        children=children,
        preorder=tuple(preorder),
        pred_vars=pred_vars,
        node_vars=tuple(_distinct_vars(a) for a in q1_atoms),
        var_order=var_order,
        empty=empty,
    )


def build_complete_index(q: ConjunctiveQuery, chase: ChaseResult) -> Prepared:
    """Reduction restricted to null-free answers: one domain-restriction atom
    per answer variable pins it to the named domain, so the reduced database
    carries no nulls and the walk emits complete answers only."""
    extra = tuple(Atom(PDB_REL, (x,)) for x in q.answer_vars)
    q2 = ConjunctiveQuery(q.answer_vars, q.atoms + extra)
    pdb = frozenset(Fact(PDB_REL, (c,)) for c in chase.db.named_adom())
    chase2 = ChaseResult(chase.base, frozenset(chase.named) | pdb, chase.witnesses)
    return build_q1_d1(q2, chase2)


def transform_chase(chase: ChaseResult, db_transform) -> ChaseResult:
    """Apply a database transformation to the named part and to every witness
    separately (added facts never cross the witness boundary)."""
    named = frozenset(db_transform(Database.of(chase.named)).facts)
    witnesses = []
    for w in chase.witnesses:
        wfacts = frozenset(db_transform(Database.of(w.facts)).facts)
        witnesses.append(type(w)(w.anchor, wfacts, w.nulls))
    return ChaseResult(chase.base, named, tuple(witnesses))


def reduction_report(prep: Prepared, d0: Database) -> dict[str, bool]:
    """Per-instance verification of the reduction contract."""
    q1 = prep.q1
    rels = [a.rel for a in q1.atoms]
    node_of = {r: i for i, r in enumerate(rels)}
    sjf = len(set(rels)) == len(rels)
    full = all(set(a.variables()) <= set(q1.answer_vars) for a in q1.atoms)
    acyclic = join_tree(q1) is not None

    adom_ok = prep.d1.adom <= d0.adom
    sets0 = {frozenset(f.args) for f in d0.facts}
    facts_ok = True
    for f in prep.d1.facts:
        s = frozenset(f.args)
        if node_of[f.rel] in prep.proj_nodes:
            facts_ok &= any(s <= s0 for s0 in sets0)
        else:
            facts_ok &= s in sets0

    by0 = facts_by_rel(d0.facts)
    by1 = facts_by_rel(prep.d1.facts)
    ans = tuple(prep.query.answer_vars)
    a0 = {tuple(h[x] for x in ans) for h in homomorphisms(prep.query.atoms, by0)}
    a1 = {tuple(h[x] for x in ans) for h in homomorphisms(q1.atoms, by1)}

    progress = True
    for u in prep.preorder:
        au = q1.atoms[u]
        pu = {x: k for k, x in enumerate(au.args)}
        for c in prep.children[u]:
            ac = q1.atoms[c]
            pc = {x: k for k, x in enumerate(ac.args)}
            shared = prep.pred_vars[c]
            keys = {
                tuple(f.args[pc[x]] for x in shared) for f in by1.get(ac.rel, ())
            }
            for f in by1.get(au.rel, ()):
                if tuple(f.args[pu[x]] for x in shared) not in keys:
                    progress = False
    return {
        "self_join_free": sjf,
        "full": full,
        "acyclic": acyclic,
        "adom_contained": adom_ok,
        "fact_constants": facts_ok,
        "same_answers": a0 == a1,
        "progress": progress,
    }


# ---------------------------------------------------------------------------
# progress trees


@dataclass(frozen=True)
class ProgressTree:
    """A connected subtree rooted at `node` with a named-or-wildcard
    assignment of its variables (ordered by answer position)."""

    node: int
    atoms: frozenset
    assign: tuple  # ((var, value), ...); value is a constant id or WILDCARD

    def values(self) -> tuple:
        return tuple(v for _, v in self.assign)

    def wildcards(self) -> int:
        return sum(1 for _, v in self.assign if v == WILDCARD)


class _Entry:
    __slots__ = ("tree", "prev", "next", "removed", "owner")

    def __init__(self, tree: ProgressTree):
        self.tree = tree
        self.prev: Optional[_Entry] = None
        self.next: Optional[_Entry] = None
        self.removed = False
        self.owner: Optional[_TreeList] = None


class _TreeList:
    __slots__ = ("head",)

    def __init__(self):
        self.head: Optional[_Entry] = None


class TreesIndex:
    """All progress-tree lists of a prepared instance, pruned in place."""

    def __init__(self, prep: Prepared):
        self.prep = prep
        self.lists: dict[tuple, _TreeList] = {}
        self.table: dict[tuple, _Entry] = {}
        self.subtree_shapes: list[tuple] = _subtree_shapes(prep)
        self.visits = 0  # cursor landings, counted by the walk
        self.removed_log: list[ProgressTree] = []

    def head(self, node: int, hvals: tuple) -> Optional[_Entry]:
        lst = self.lists.get((node, hvals))
        return lst.head if lst else None

    def live(self, node: int, hvals: tuple) -> list[ProgressTree]:
        out = []
        e = self.head(node, hvals)
        while e:
            if not e.removed:
                out.append(e.tree)
            e = e.next
        return out

    def items(self) -> Iterator[tuple[tuple, list[ProgressTree]]]:
        for key in sorted(self.lists, key=lambda k: (k[0], k[1])):
            yield key, self.live(*key)

    def unlink(self, e: _Entry) -> None:
        # e.next is kept intact so paused cursors continue past e
        e.removed = True
        if e.prev is None:
            e.owner.head = e.next
        else:
            e.prev.next = e.next
        if e.next is not None:
            e.next.prev = e.prev
        self.removed_log.append(e.tree)

    def prune(self, assignment: dict) -> list[ProgressTree]:
        """Unlink every tree that worsens the given full assignment: same
        subtree, wildcards preserved, at least one named value flipped."""
        removed = []
        for node, shape, svars in self.subtree_shapes:
            base = [assignment[x] for x in svars]
            named_pos = [k for k, v in enumerate(base) if v != WILDCARD]
            for r in range(1, len(named_pos) + 1):
                for combo in itertools.combinations(named_pos, r):
                    worse = list(base)
                    for k in combo:
                        worse[k] = WILDCARD
                    e = self.table.get((node, shape, tuple(worse)))
                    if e is not None and not e.removed:
                        self.unlink(e)
                        removed.append(e.tree)
        return removed


def _subtree_shapes(prep: Prepared) -> list[tuple]:
    """All connected subtrees (root, node set, ordered variables)."""
    memo: dict[int, list[frozenset]] = {}

    def shapes(v: int) -> list[frozenset]:
        if v not in memo:
            per_child = [[frozenset()] + shapes(c) for c in prep.children[v]]
            memo[v] = [
                frozenset({v}).union(*combo)
                for combo in itertools.product(*per_child)
            ]
        return memo[v]

    out = []
    for v in prep.preorder:
        for s in shapes(v):
            svars = sorted(
                {x for u in s for x in prep.node_vars[u]}, key=prep.var_order.get
            )
            out.append((v, s, tuple(svars)))
    return out


def _tree_sort_key(pre_pos: dict[int, int], t: ProgressTree) -> tuple:
    """Database-preferring order: smaller subtrees in preorder-colex position
    first, then fewer wildcards, then named values by label with the wildcard
    greatest."""
    weight = sum(1 << pre_pos[u] for u in t.atoms)
    gk = tuple(
        (1, "") if v == WILDCARD else (0, const_label(v)) for _, v in t.assign
    )
    return (weight, t.wildcards(), gk)


def _witness_candidates(prep: Prepared, grp: WitnessGroup, emit) -> None:
    """Enumerate progress trees realisable inside one witness: assignments
    draw from the witness's named constants plus the wildcard, and subtree
    membership is forced by which shared variables are wildcards."""
    named_opts = grp.consts
    any_opts = tuple(grp.consts) + (WILDCARD,)

    def expand(vq: tuple, g: dict, frontier: tuple):
        if not frontier:
            yield vq, g
            return
        c, rest = frontier[0], frontier[1:]
        if any(g[x] == WILDCARD for x in prep.pred_vars[c]):
            new = [x for x in prep.node_vars[c] if x not in g]
            for vals in itertools.product(any_opts, repeat=len(new)):
                g2 = dict(g)
                g2.update(zip(new, vals))
                yield from expand(vq + (c,), g2, rest + prep.children[c])
        else:
            yield from expand(vq, g, rest)

    for v in range(len(prep.q1.atoms)):
        pred = set(prep.pred_vars[v])
        pools = [named_opts if x in pred else any_opts for x in prep.node_vars[v]]
        for combo in itertools.product(*pools):
            g0 = dict(zip(prep.node_vars[v], combo))
            for vq, g in expand((v,), g0, prep.children[v]):
                if WILDCARD not in g.values():
                    continue  # fully named trees come from the null-free part
                emit(v, frozenset(vq), g)


def build_trees_index(prep: Prepared) -> TreesIndex:
    idx = TreesIndex(prep)
    if prep.empty:
        return idx
    gsets = {frozenset(s) for s in guarded_sets(prep.d1)}
    pre_pos = {u: k for k, u in enumerate(prep.preorder)}
    seen: set[tuple] = set()
    buckets: dict[tuple, list[ProgressTree]] = {}

    def add(tree: ProgressTree) -> None:
        key = (tree.node, tree.atoms, tree.values())
        if key in seen:
            return
        seen.add(key)
        g = dict(tree.assign)
        hvals = prep.hkey(tree.node, g)
        buckets.setdefault((tree.node, hvals), []).append(tree)

    # fully named single-atom trees from the null-free facts
    for node, atom in enumerate(prep.q1.atoms):
        for f in prep.named1.get(atom.rel, ()):
            sub = extend_match(atom, f, {})
            if sub is None:
                continue
            assign = tuple(
                sorted(sub.items(), key=lambda kv: prep.var_order[kv[0]])
            )
            add(ProgressTree(node, frozenset([node]), assign))

    # wildcard trees, one witness at a time
    for grp in prep.groups1:
        def emit(v: int, vq: frozenset, g: dict, grp=grp) -> None:
            atoms1 = [prep.q1.atoms[u] for u in sorted(vq)]
            seed = {x: val for x, val in g.items() if val != WILDCARD}
            wild_vars = [x for x, val in g.items() if val == WILDCARD]
            for h in homomorphisms(atoms1, grp.by_rel, seed):
                if all(is_null(h[x]) for x in wild_vars):
                    break
            else:
                return
            named_range = frozenset(val for val in g.values() if val != WILDCARD)
            if named_range and named_range not in gsets:
                return
            assign = tuple(sorted(g.items(), key=lambda kv: prep.var_order[kv[0]]))
            add(ProgressTree(v, vq, assign))

        _witness_candidates(prep, grp, emit)

    for key, items in buckets.items():
        items.sort(key=lambda t: _tree_sort_key(pre_pos, t))
        lst = _TreeList()
        prev: Optional[_Entry] = None
        for t in items:
            e = _Entry(t)
            e.owner = lst
            e.prev = prev
            if prev is None:
                lst.head = e
            else:
                prev.next = e
            prev = e
            idx.table[(t.node, t.atoms, t.values())] = e
        idx.lists[key] = lst
    return idx


def relevant_maps(prep: Prepared) -> dict[int, set[tuple]]:
    """For each q1 node, the named predecessor assignments that extend into
    D1 (the walk only ever queries these keys)."""
    out: dict[int, set[tuple]] = {v: set() for v in range(len(prep.q1.atoms))}
    by1 = prep.d1.by_rel()
    for v, atom in enumerate(prep.q1.atoms):
        pv = prep.pred_vars[v]
        pos = {x: k for k, x in enumerate(atom.args)}
        for t in by1.get(atom.rel, ()):
            hvals = tuple(t[pos[x]] for x in pv)
            if all(not is_null(c) for c in hvals):
                out[v].add(hvals)
    return out
