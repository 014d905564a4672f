"""Built-in instances: worked examples, scaled families, and seeded random inputs."""

from __future__ import annotations

import random
from typing import Optional

from .chase import HornFormula
from .model import (
    OMQ,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    Ontology,
    TGD,
    intern_const,
)
from .structure import classify, normalize_query


def _db(rows) -> Database:
    return Database.of(
        Fact(rel, tuple(intern_const(a) for a in args)) for rel, *args in rows
    )


def c(label: str) -> int:
    return intern_const(label)


# ---------------------------------------------------------------------------
# office domain: researchers, offices, buildings


_OFFICE_RULES = (
    TGD((Atom("Researcher", ("x",)),), (Atom("HasOffice", ("x", "y")),)),
    TGD((Atom("HasOffice", ("x", "y")),), (Atom("Office", ("y",)),)),
    TGD((Atom("Office", ("x",)),), (Atom("InBuilding", ("x", "y")),)),
)

_OFFICE_SCHEMA = frozenset({"Researcher", "HasOffice", "Office", "InBuilding"})


def office_instance() -> tuple[OMQ, Database]:
    """Three researchers, two offices, one building; q(x1,x2,x3) joins office to building."""
    q = ConjunctiveQuery(
        ("x1", "x2", "x3"),
        (Atom("HasOffice", ("x1", "x2")), Atom("InBuilding", ("x2", "x3"))),
    )
    D = _db(
        [
            ("Researcher", "mary"),
            ("Researcher", "john"),
            ("Researcher", "mike"),
            ("HasOffice", "mary", "room1"),
            ("HasOffice", "john", "room4"),
            ("InBuilding", "room1", "main1"),
        ]
    )
    return OMQ(Ontology(_OFFICE_RULES), _OFFICE_SCHEMA, q), D


def office_family(n: int) -> tuple[OMQ, Database]:
    """office_instance scaled to n researchers with a uniform mix of row shapes.

    Row i is one of three shapes: researcher only, researcher with an office,
    researcher with an office located in a building.  Every shape contributes
    exactly one answer, so answer count scales linearly while the per-answer
    work stays constant.
    """
    Q, _ = office_instance()
    rows: list[tuple] = []
    for i in range(n):
        p = f"p{i}"
        rows.append(("Researcher", p))
        if i % 3 == 0:
            continue
        o = f"o{i}"
        rows.append(("HasOffice", p, o))
        if i % 3 == 2:
            rows.append(("InBuilding", o, f"b{i}"))
    return Q, _db(rows)


def office_prof_instance() -> tuple[OMQ, Database]:
    """Office domain plus professors whose offices are large; 4-ary full query."""
    rules = _OFFICE_RULES + (
        TGD(
            (Atom("Prof", ("x",)), Atom("HasOffice", ("x", "y"))),
            (Atom("LargeOffice", ("y",)),),
        ),
    )
    schema = _OFFICE_SCHEMA | {"Prof", "LargeOffice"}
    q = ConjunctiveQuery(
        ("x1", "x2", "x3", "x4"),
        (
            Atom("HasOffice", ("x1", "x2")),
            Atom("LargeOffice", ("x2",)),
            Atom("HasOffice", ("x1", "x3")),
            Atom("InBuilding", ("x3", "x4")),
        ),
    )
    _, D0 = office_instance()
    D = Database(D0.facts | {Fact("Prof", (c("mike"),))})
    return OMQ(Ontology(rules), schema, q), D


def office_mates_instance() -> tuple[OMQ, Database]:
    """Office domain plus a shared-office rule; the query is acyclic but not
    free-connex (two answer offices linked through a quantified building)."""
    rules = _OFFICE_RULES + (
        TGD(
            (Atom("OfficeMate", ("x", "y")),),
            (Atom("HasOffice", ("x", "z")), Atom("HasOffice", ("y", "z"))),
        ),
    )
    schema = _OFFICE_SCHEMA | {"OfficeMate"}
    q = ConjunctiveQuery(
        ("x1", "x2", "x3", "x4"),
        (
            Atom("HasOffice", ("x1", "x3")),
            Atom("HasOffice", ("x2", "x4")),
            Atom("InBuilding", ("x3", "y")),
            Atom("InBuilding", ("x4", "y")),
        ),
    )
    _, D0 = office_instance()
    D = Database(D0.facts | {Fact("OfficeMate", (c("mary"), c("mike")))})
    return OMQ(Ontology(rules), schema, q), D


# ---------------------------------------------------------------------------
# a guarded (non-ELI) rule whose two existentials land in one witness


def rst_instance() -> tuple[OMQ, Database]:
    """One rule emitting R, T on a shared existential and S on another; the
    full 4-ary query distinguishes which wildcards share a null."""
    onto = Ontology(
        (
            TGD(
                (Atom("A", ("x",)),),
                (Atom("R", ("x", "y1")), Atom("T", ("x", "y1")), Atom("S", ("x", "y2"))),
            ),
        )
    )
    q = ConjunctiveQuery(
        ("x0", "x1", "x2", "x3"),
        (Atom("R", ("x0", "x1")), Atom("S", ("x0", "x2")), Atom("T", ("x0", "x3"))),
    )
    D = _db([("A", "c"), ("R", "c", "c'")])
    return OMQ(onto, frozenset({"A", "R", "S", "T"}), q), D


# ---------------------------------------------------------------------------
# five-constant chain instance: the worked end-to-end walkthrough


_CHAIN_RULES = (
    TGD(
        (Atom("A", ("x",)),),
        (Atom("R", ("y1", "y2")), Atom("R", ("y2", "x")), Atom("C", ("y1",))),
    ),
    TGD(
        (Atom("B", ("x",)),),
        (Atom("R", ("y1", "x")), Atom("R", ("y2", "x")), Atom("C", ("y1",))),
    ),
    TGD((Atom("E", ("x",)),), (Atom("R", ("x", "y1")),)),
    TGD((Atom("R", ("x", "y")),), (Atom("L", ("x", "x")), Atom("L", ("y", "y")))),
)

_CHAIN_SCHEMA = frozenset({"A", "B", "C", "E", "R"})


def chain_query() -> ConjunctiveQuery:
    return ConjunctiveQuery(
        ("x1", "x2", "x3", "x4", "x5"),
        (
            Atom("L", ("y1", "x1")),
            Atom("R", ("x1", "x2")),
            Atom("R", ("x2", "x3")),
            Atom("R", ("x4", "x3")),
            Atom("R", ("x5", "x4")),
            Atom("L", ("y5", "x5")),
            Atom("C", ("x1",)),
        ),
    )


def chain_instance() -> tuple[OMQ, Database]:
    """Five constants a..e with R-edges into a hub plus unary A/B/C/E labels;
    the 5-ary query walks a length-4 R-chain with C and L side conditions."""
    D = _db(
        [
            ("A", "a"),
            ("E", "a"),
            ("E", "e"),
            ("B", "b"),
            ("C", "b"),
            ("B", "d"),
            ("C", "d"),
            ("R", "b", "a"),
            ("R", "c", "b"),
            ("R", "d", "a"),
            ("R", "e", "a"),
        ]
    )
    return OMQ(Ontology(_CHAIN_RULES), _CHAIN_SCHEMA, chain_query()), D


def chain_family(copies: int) -> tuple[OMQ, Database]:
    """chain_instance replicated over disjoint constant sets."""
    Q, _ = chain_instance()
    rows: list[tuple] = []
    for i in range(copies):
        a, b, d, e = f"a{i}", f"b{i}", f"d{i}", f"e{i}"
        rows += [
            ("A", a),
            ("E", a),
            ("E", e),
            ("B", b),
            ("C", b),
            ("B", d),
            ("C", d),
            ("R", b, a),
            ("R", f"c{i}", b),
            ("R", d, a),
            ("R", e, a),
        ]
    return Q, _db(rows)


# ---------------------------------------------------------------------------
# structural classifier gallery


def acyclicity_gallery() -> list[tuple[str, ConjunctiveQuery, tuple[bool, bool, bool]]]:
    """Five small queries with expected (acyclic, free_connex, weakly_acyclic)."""
    return [
        (
            "path-two-quantified-one-answer",
            ConjunctiveQuery(("x1",), (Atom("R", ("y1", "y2")), Atom("S", ("y2", "x1")))),
            (True, True, True),
        ),
        (
            "path-answer-ends-quantified-middle",
            ConjunctiveQuery(
                ("x1", "x2"), (Atom("R", ("x1", "y1")), Atom("S", ("y1", "x2")))
            ),
            (True, False, True),
        ),
        (
            "triangle-two-answers",
            ConjunctiveQuery(
                ("x1", "x2"),
                (Atom("R", ("x1", "y1")), Atom("S", ("y1", "x2")), Atom("T", ("x2", "x1"))),
            ),
            (False, False, True),
        ),
        (
            "triangle-all-answers",
            ConjunctiveQuery(
                ("x1", "x2", "x3"),
                (Atom("R", ("x1", "x2")), Atom("S", ("x2", "x3")), Atom("T", ("x3", "x1"))),
            ),
            (False, True, True),
        ),
        (
            "triangle-all-quantified",
            ConjunctiveQuery(
                (),
                (Atom("R", ("y1", "y2")), Atom("S", ("y2", "y3")), Atom("T", ("y3", "y1"))),
            ),
            (False, False, False),
        ),
    ]


# ---------------------------------------------------------------------------
# seeded random Horn formulas


def random_horn(seed: int, max_clauses: int = 10_000) -> HornFormula:
    rng = random.Random(seed)
    n_vars = rng.randint(1, 60)
    pool = [Fact("p", (intern_const(f"h{i}"),)) for i in range(n_vars)]
    n_clauses = rng.randint(0, max_clauses)
    units = tuple(rng.sample(pool, rng.randint(0, min(4, n_vars))))
    clauses = []
    for _ in range(n_clauses):
        body = tuple(rng.choice(pool) for _ in range(rng.randint(0, 3)))
        clauses.append((body, rng.choice(pool)))
    return HornFormula(units, tuple(clauses))


# ---------------------------------------------------------------------------
# seeded random OMQ instances


def _random_eli_tgd(rng: random.Random, unary: list[str], binary: list[str],
                    level: dict[str, int]) -> Optional[TGD]:
    """Single-frontier rule over arity <= 2 symbols with a tree-shaped head."""
    lo = [r for r in unary + binary if level[r] < 2]
    if not lo:
        return None
    broot = rng.choice(lo)
    if broot in unary:
        body = [Atom(broot, ("x",))]
    else:
        pair = ("x", "w") if rng.random() < 0.5 else ("w", "x")
        body = [Atom(broot, pair)]
        side = [r for r in unary if level[r] <= level[broot]]
        if side and rng.random() < 0.4:
            body.append(Atom(rng.choice(side), ("w",)))
    hi = lambda arity_pool: [r for r in arity_pool if level[r] > level[broot]]
    hu, hb = hi(unary), hi(binary)
    if not hb:
        return None
    head: list[Atom] = []
    n_exist = rng.randint(1, 2)
    prev = "x"
    used_pairs = set()
    for j in range(n_exist):
        z = f"z{j}"
        root = prev if (j == 0 or rng.random() < 0.5) else "x"
        pair = (root, z) if rng.random() < 0.5 else (z, root)
        if frozenset(pair) in used_pairs:
            return None
        used_pairs.add(frozenset(pair))
        head.append(Atom(rng.choice(hb), pair))
        prev = z
    if hu and rng.random() < 0.6:
        head.append(Atom(rng.choice(hu), (rng.choice(["x", prev]),)))
    t = TGD(tuple(body), tuple(head))
    return t if t.is_guarded() and t.is_eli() else None


def _random_guarded_tgd(rng: random.Random, rels: dict[str, int],
                        level: dict[str, int]) -> Optional[TGD]:
    lo = [r for r in rels if level[r] < 2 and rels[r] >= 1]
    if not lo:
        return None
    guard = rng.choice(lo)
    gvars = [f"w{i}" for i in range(rels[guard])]
    body = [Atom(guard, tuple(rng.choice(gvars) for _ in range(rels[guard])))]
    bvars = sorted({v for a in body for v in a.variables()})
    extra = [r for r in rels if level[r] <= level[guard] and rels[r] <= len(bvars)]
    if extra and rng.random() < 0.5:
        r = rng.choice(extra)
        body.append(Atom(r, tuple(rng.choice(bvars) for _ in range(rels[r]))))
    hi = [r for r in rels if level[r] > level[guard]]
    if not hi:
        return None
    n_exist = rng.randint(0, 2)
    hvars = bvars + [f"z{i}" for i in range(n_exist)]
    head = []
    for _ in range(rng.randint(1, 2)):
        r = rng.choice(hi)
        head.append(Atom(r, tuple(rng.choice(hvars) for _ in range(rels[r]))))
    t = TGD(tuple(body), tuple(head))
    return t if t.is_guarded() else None


def random_instance(seed: int, eli_only: bool = False) -> tuple[OMQ, Database]:
    """Seeded OMQ + database with a guarded, chase-terminating ontology and an
    acyclic, free-connex query of arity <= 3 over <= 8 named constants."""
    rng = random.Random(seed)
    n_unary = rng.randint(1, 3)
    n_binary = rng.randint(1, 3)
    unary = [f"U{i}" for i in range(n_unary)]
    binary = [f"B{i}" for i in range(n_binary)]
    rels: dict[str, int] = {r: 1 for r in unary}
    rels.update({r: 2 for r in binary})
    if not eli_only and rng.random() < 0.3:
        rels["T0"] = 3
    level = {r: rng.randint(0, 2) for r in rels}

    tgds: list[TGD] = []
    for _ in range(rng.randint(0, 3)):
        t = (
            _random_eli_tgd(rng, unary, binary, level)
            if eli_only
            else _random_guarded_tgd(rng, rels, level)
        )
        if t is not None:
            tgds.append(t)
    onto = Ontology(tuple(tgds))

    n_const = rng.randint(2, 8)
    consts = [intern_const(f"c{i}") for i in range(n_const)]
    rel_names = sorted(rels)
    facts = {
        Fact(r, tuple(rng.choice(consts) for _ in range(rels[r])))
        for r in (rng.choice(rel_names) for _ in range(rng.randint(1, 10)))
    }
    D = Database.of(facts)

    q = _random_query(rng, rels, consts)
    return OMQ(onto, frozenset(rels), q), D


def _random_query(rng: random.Random, rels: dict[str, int], consts: list[int]) -> ConjunctiveQuery:
    rel_names = sorted(rels)
    for _ in range(60):
        n_atoms = rng.randint(1, 4)
        atoms: list[Atom] = []
        var_count = 0
        atoms_vars: list[list[str]] = []
        for i in range(n_atoms):
            r = rng.choice(rel_names)
            k = rels[r]
            if i == 0:
                base: list[str] = []
            else:
                parent = atoms_vars[rng.randrange(i)]
                base = rng.sample(parent, rng.randint(1, len(parent)))
            args: list[str] = []
            for _ in range(k):
                if base and rng.random() < 0.6:
                    args.append(rng.choice(base))
                else:
                    args.append(f"x{var_count}")
                    var_count += 1
            atoms.append(Atom(r, tuple(args)))
            atoms_vars.append(sorted(set(args)))
        # occasionally pin one position to a constant
        if rng.random() < 0.15:
            i = rng.randrange(len(atoms))
            a = atoms[i]
            vs = a.variables()
            if len(vs) > 1:
                pos = rng.randrange(len(a.args))
                new_args = list(a.args)
                new_args[pos] = rng.choice(consts)
                atoms[i] = Atom(a.rel, tuple(new_args))
        all_vars = sorted({v for a in atoms for v in a.variables()})
        if not all_vars:
            continue
        arity = rng.choice([0, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3])
        arity = min(arity, len(all_vars))
        answer = tuple(rng.sample(all_vars, arity))
        q = ConjunctiveQuery(answer, tuple(atoms))
        norm = normalize_query(q)
        rep = classify(norm.query)
        if rep.acyclic and rep.free_connex:
            return q
    # guaranteed fallback: answer variables inside a single atom
    r = rng.choice(rel_names)
    args = tuple(f"x{i}" for i in range(rels[r]))
    q = ConjunctiveQuery((args[0],), (Atom(r, args),))
    return q
