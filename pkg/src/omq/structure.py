"""Structural analysis of conjunctive queries.

Join trees via GYO ear removal, the three acyclicity classes, bad paths,
connected components, query normalization (answer-variable dedup and constant
elimination), and the self-join-free rewrite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .model import Atom, ConjunctiveQuery, Database, Fact, OMQ, Ontology, TGD, const_label

GUARD_REL = " guard"  # reserved symbol for the free-connex test


@dataclass
class JoinTree:
    """A join forest over the atom indices of a query."""

    var_sets: list[frozenset]
    adj: dict[int, set[int]]

    def nodes(self) -> list[int]:
        return list(range(len(self.var_sets)))

    def component_of(self, node: int) -> set[int]:
        seen = {node}
        stack = [node]
        while stack:
            u = stack.pop()
            for w in self.adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def components(self) -> list[set[int]]:
        out = []
        left = set(range(len(self.var_sets)))
        while left:
            comp = self.component_of(min(left))
            out.append(comp)
            left -= comp
        return out

    def orient(self, root: int) -> "RootedTree":
        parent: dict[int, Optional[int]] = {root: None}
        preorder: list[int] = []
        stack = [root]
        while stack:
            u = stack.pop()
            preorder.append(u)
            for w in sorted(self.adj[u], reverse=True):
                if w not in parent:
                    parent[w] = u
                    stack.append(w)
        pred_vars: dict[int, frozenset] = {}
        for u in preorder:
            p = parent[u]
            pred_vars[u] = (
                frozenset() if p is None else self.var_sets[u] & self.var_sets[p]
            )
        return RootedTree(self, root, parent, preorder, pred_vars)


@dataclass
class RootedTree:
    tree: JoinTree
    root: int
    parent: dict[int, Optional[int]]
    preorder: list[int]
    pred_vars: dict[int, frozenset]

    def children(self, u: int) -> list[int]:
        return sorted(w for w in self.tree.adj[u] if self.parent.get(w) == u)


def _gyo(var_sets: list[frozenset]) -> Optional[dict[int, set[int]]]:
    """GYO ear removal; adjacency of a join forest, or None if cyclic."""
    n = len(var_sets)
    alive = set(range(n))
    adj: dict[int, set[int]] = {i: set() for i in range(n)}
    attached: dict[int, int] = {}
    while len(alive) > 1:
        found = False
        for e in sorted(alive):
            others = [o for o in alive if o != e]
            # variables of e shared with any other alive node
            shared = frozenset(
                v for v in var_sets[e] if any(v in var_sets[o] for o in others)
            )
            witness = None
            for o in others:
                if shared <= var_sets[o]:
                    witness = o
                    break
            if witness is not None:
                attached[e] = witness
                alive.remove(e)
                found = True
                break
        if not found:
            return None
    for e, w in attached.items():
        adj[e].add(w)
        adj[w].add(e)
    return adj


def join_tree(q: ConjunctiveQuery) -> Optional[JoinTree]:
    """A join forest when q is acyclic (GYO), else None."""
    if not q.atoms:
        return JoinTree([], {})
    var_sets = [frozenset(a.variables()) for a in q.atoms]
    adj = _gyo(var_sets)
    if adj is None:
        return None
    return JoinTree(var_sets, adj)


def _acyclic(var_sets: list[frozenset]) -> bool:
    return not var_sets or _gyo(var_sets) is not None


@dataclass(frozen=True)
class StructureReport:
    acyclic: bool
    weakly_acyclic: bool
    free_connex: bool
    connected: bool
    self_join_free: bool
    bad_path: Optional[tuple[str, ...]] = None


def _gaifman(q: ConjunctiveQuery) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {v: set() for v in q.variables}
    for a in q.atoms:
        vs = a.variables()
        for i, x in enumerate(vs):
            for y in vs[i + 1 :]:
                if x != y:
                    adj[x].add(y)
                    adj[y].add(x)
    return adj


def find_bad_path(q: ConjunctiveQuery) -> Optional[tuple[str, ...]]:
    """A path x z1..zk y between non-co-occurring answer variables through
    quantified variables, if one exists."""
    answer = set(q.answer_vars)
    adj = _gaifman(q)

    def co_occur(x: str, y: str) -> bool:
        return any({x, y} <= set(a.variables()) for a in q.atoms)

    for x in q.answer_vars:
        if x not in adj:
            continue
        # BFS from x through quantified variables only
        prev: dict[str, Optional[str]] = {x: None}
        queue = [x]
        while queue:
            u = queue.pop(0)
            for w in sorted(adj[u]):
                if w in prev:
                    continue
                if w in answer:
                    if u != x and not co_occur(x, w):
                        path = [w, u]
                        p = prev[u]
                        while p is not None:
                            path.append(p)
                            p = prev[p]
                        path.reverse()
                        return tuple(path)
                    continue
                prev[w] = u
                queue.append(w)
    return None


def classify(q: ConjunctiveQuery) -> StructureReport:
    var_sets = [frozenset(a.variables()) for a in q.atoms]
    acyclic = _acyclic(var_sets)
    answer = frozenset(q.answer_vars)
    weakly = _acyclic([vs - answer for vs in var_sets])
    free_connex = _acyclic(var_sets + [answer])
    comps = connected_components(q)
    connected = len(comps) <= 1
    rels = [a.rel for a in q.atoms]
    sjf = len(set(rels)) == len(rels)
    bad = find_bad_path(q) if acyclic and not free_connex else None
    return StructureReport(acyclic, weakly, free_connex, connected, sjf, bad)


def connected_components(q: ConjunctiveQuery) -> list[ConjunctiveQuery]:
    """Atoms partitioned by shared terms (variables and constants)."""
    n = len(q.atoms)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_term: dict[object, int] = {}
    for i, a in enumerate(q.atoms):
        for t in a.args:
            if t in by_term:
                ri, rj = find(i), find(by_term[t])
                if ri != rj:
                    parent[ri] = rj
            else:
                by_term[t] = i
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for idxs in sorted(groups.values(), key=lambda g: g[0]):
        atoms = tuple(q.atoms[i] for i in idxs)
        vs = set()
        for a in atoms:
            vs.update(a.variables())
        ans = tuple(x for x in q.answer_vars if x in vs)
        seen = set()
        ans = tuple(x for x in ans if not (x in seen or seen.add(x)))
        out.append(ConjunctiveQuery(ans, atoms))
    return out


@dataclass
class Normalization:
    query: ConjunctiveQuery
    expander: Callable[[tuple], tuple]
    db_transform: Callable[[Database], Database]
    changed: bool = False


def normalize_query(q: ConjunctiveQuery) -> Normalization:
    """Distinct answer variables and no constants; answers re-expandable."""
    # dedupe repeated answer variables, keeping first occurrences
    kept: list[str] = []
    pos_of: dict[str, int] = {}
    for x in q.answer_vars:
        if x not in pos_of:
            pos_of[x] = len(kept)
            kept.append(x)
    positions = tuple(pos_of[x] for x in q.answer_vars)
    dedup_changed = len(kept) != len(q.answer_vars)

    # eliminate constants: one fresh symbol per (atom with constants)
    new_atoms: list[Atom] = []
    rules: list[tuple[str, tuple, str]] = []  # (orig rel, pattern, new rel)
    seen_patterns: dict[tuple, str] = {}
    for a in q.atoms:
        if not a.constants():
            new_atoms.append(a)
            continue
        pattern = tuple(t if isinstance(t, int) else None for t in a.args)
        key = (a.rel, pattern)
        if key not in seen_patterns:
            tag = "_".join(
                const_label(t) if isinstance(t, int) else "?" for t in a.args
            )
            new_rel = f"{a.rel}@{tag}"
            seen_patterns[key] = new_rel
            rules.append((a.rel, pattern, new_rel))
        varargs = tuple(t for t in a.args if isinstance(t, str))
        new_atoms.append(Atom(seen_patterns[key], varargs))
    const_changed = bool(rules)

    q_norm = ConjunctiveQuery(tuple(kept), tuple(new_atoms))

    def expander(ans: tuple) -> tuple:
        return tuple(ans[i] for i in positions)

    def db_transform(D: Database) -> Database:
        if not rules:
            return D
        facts = set(D.facts)
        for f in D.facts:
            for rel, pattern, new_rel in rules:
                if f.rel != rel or len(f.args) != len(pattern):
                    continue
                if all(p is None or p == v for p, v in zip(pattern, f.args)):
                    facts.add(
                        Fact(new_rel, tuple(v for p, v in zip(pattern, f.args) if p is None))
                    )
        return Database.of(facts)

    return Normalization(q_norm, expander, db_transform, dedup_changed or const_changed)


def selfjoin_free_rewrite(Q: OMQ) -> OMQ:
    """Equivalent OMQ whose query is self-join free (fresh copies + bridges)."""
    q = Q.query
    counts: dict[str, int] = {}
    for a in q.atoms:
        counts[a.rel] = counts.get(a.rel, 0) + 1
    if all(c == 1 for c in counts.values()):
        return Q
    new_atoms: list[Atom] = []
    bridges: list[TGD] = []
    for j, a in enumerate(q.atoms):
        if counts[a.rel] == 1:
            new_atoms.append(a)
            continue
        new_rel = f"{a.rel}.sj{j}"
        new_atoms.append(Atom(new_rel, a.args))
        fresh = tuple(f"u{i}'" for i in range(len(a.args)))
        orig = Atom(a.rel, fresh)
        copy = Atom(new_rel, fresh)
        bridges.append(TGD((orig,), (copy,)))
        bridges.append(TGD((copy,), (orig,)))
    onto = Ontology(Q.ontology.tgds + tuple(bridges))
    return OMQ(onto, Q.schema, ConjunctiveQuery(q.answer_vars, tuple(new_atoms)))
