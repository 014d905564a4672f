"""Single-testing and prepared all-testing of candidate answers."""

import itertools
import random

import pytest

from omq.chase import query_directed_chase
from omq.generators import (
    office_instance,
    office_mates_instance,
    office_prof_instance,
    random_instance,
)
from omq.model import (
    WILDCARD,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    OMQ,
    Ontology,
    TGD,
    UsageError,
    intern_const,
    validate_multi_tuple,
)
from omq.oracle import (
    oracle_complete,
    oracle_multi,
    oracle_multi_all,
    oracle_partial,
)
from omq.testing import (
    MultiAllTester,
    alltest_complete_prepare,
    single_test_complete,
    single_test_multi,
    single_test_partial,
)


@pytest.fixture(scope="module")
def office():
    Q, D = office_instance()
    return Q, D, query_directed_chase(D, Q)


def _c(*names):
    return tuple(intern_const(n) for n in names)


def test_single_complete_on_office(office):
    Q, D, ch = office
    assert single_test_complete(Q, D, _c("mary", "room1", "main1"), ch)
    assert not single_test_complete(Q, D, _c("john", "room4", "main1"), ch)
    assert not single_test_complete(Q, D, _c("mike", "room1", "main1"), ch)


def test_single_complete_rejects_wildcards(office):
    Q, D, ch = office
    with pytest.raises(UsageError):
        single_test_complete(Q, D, (intern_const("mary"), WILDCARD, WILDCARD), ch)


def test_single_partial_on_office(office):
    Q, D, ch = office
    john, room4 = _c("john", "room4")
    mike, mary, room1, main1 = _c("mike", "mary", "room1", "main1")
    assert single_test_partial(Q, D, (john, room4, WILDCARD), ch)
    assert single_test_partial(Q, D, (mike, WILDCARD, WILDCARD), ch)
    assert single_test_partial(Q, D, (mary, room1, main1), ch)
    # not minimal: the building position can be improved to main1
    assert not single_test_partial(Q, D, (mary, room1, WILDCARD), ch)
    # not an answer at all
    assert not single_test_partial(Q, D, (room4, WILDCARD, WILDCARD), ch)


def test_single_partial_rejects_multi_wildcards(office):
    Q, D, ch = office
    with pytest.raises(UsageError):
        single_test_partial(Q, D, (intern_const("mike"), -1, -2), ch)


def test_single_multi_on_office(office):
    Q, D, ch = office
    mike, john, room4 = _c("mike", "john", "room4")
    assert single_test_multi(Q, D, (mike, -1, -2), ch)
    assert single_test_multi(Q, D, (john, room4, -1), ch)
    # identifying the two wildcards is wrong: no chase answer repeats the null
    assert not single_test_multi(Q, D, (mike, -1, -1), ch)


def test_single_multi_rejects_malformed_numbering(office):
    Q, D, ch = office
    mike = intern_const("mike")
    assert not validate_multi_tuple((mike, -2, -1))
    assert not single_test_multi(Q, D, (mike, -2, -1), ch)


def test_arity_mismatch_raises(office):
    Q, D, ch = office
    with pytest.raises(UsageError):
        single_test_complete(Q, D, _c("mary", "room1"), ch)


def test_full_self_join_query_multi_pins():
    Q, D = office_prof_instance()
    ch = query_directed_chase(D, Q)
    mike = intern_const("mike")
    assert single_test_multi(Q, D, (mike, -1, -1, -2), ch)
    assert not single_test_multi(Q, D, (mike, -1, -2, -3), ch)


def test_multi_single_tester_requires_single_frontier_rules():
    Q, D = office_mates_instance()
    with pytest.raises(UsageError):
        single_test_multi(Q, D, (intern_const("mary"),) * 4)


def test_repeated_answer_variable_coherence():
    a, b = _c("a", "b")
    q = ConjunctiveQuery(("x", "x"), (Atom("R", ("x", "y")),))
    Q = OMQ(Ontology(()), frozenset({"R"}), q)
    D = Database.of([Fact("R", (a, b))])
    assert single_test_complete(Q, D, (a, a))
    assert not single_test_complete(Q, D, (a, b))


def test_boolean_query_single_testers():
    a = _c("a")[0]
    q = ConjunctiveQuery((), (Atom("R", ("y1", "y2")),))
    Q = OMQ(Ontology(()), frozenset({"R"}), q)
    D = Database.of([Fact("R", (a, a))])
    assert single_test_complete(Q, D, ())
    assert single_test_partial(Q, D, ())
    assert single_test_multi(Q, D, ())
    empty = Database.of([])
    assert not single_test_complete(Q, empty, ())


def test_complete_alltester_matches_single_on_office(office):
    Q, D, ch = office
    tester = alltest_complete_prepare(Q, D, ch)
    consts = sorted(D.adom)
    for t in itertools.product(consts, repeat=3):
        assert tester.test(t) == single_test_complete(Q, D, t, ch)


def test_complete_alltester_supports_cyclic_full_queries():
    # a triangle of atoms is not acyclic, but with all variables answering,
    # prepared complete testing still works fact-by-fact
    rng = random.Random(4)
    consts = _c("a", "b", "c", "d", "e")
    facts = set()
    for rel in ("R", "S", "T"):
        for _ in range(8):
            facts.add(Fact(rel, (rng.choice(consts), rng.choice(consts))))
    D = Database.of(facts)
    q = ConjunctiveQuery(
        ("x", "y", "z"),
        (Atom("R", ("x", "y")), Atom("S", ("y", "z")), Atom("T", ("z", "x"))),
    )
    Q = OMQ(Ontology(()), frozenset({"R", "S", "T"}), q)
    oracle = oracle_complete(Q, D)
    tester = alltest_complete_prepare(Q, D)
    for t in itertools.product(consts, repeat=3):
        assert tester.test(t) == (t in oracle)


def test_multi_alltester_uses_chase_level_semantics(office):
    Q, D, ch = office
    mat = MultiAllTester(Q, D, ch)
    mary, room1, main1 = _c("mary", "room1", "main1")
    # (mary, room1, *1) is not minimal (main1 names the building), yet the
    # chase contains a fresh building for room1, so its image is accepted
    assert mat.test((mary, room1, -1))
    assert not single_test_multi(Q, D, (mary, room1, -1), ch)
    assert mat.test((mary, room1, main1))
    assert not mat.test((main1, -1, -2))


@pytest.mark.parametrize("seed", range(8))
def test_testers_agree_with_oracle_membership(seed):
    Q, D = random_instance(seed, eli_only=seed % 2 == 1)
    ch = query_directed_chase(D, Q)
    k = Q.query.arity()
    consts = sorted(D.adom)
    oc = oracle_complete(Q, D)
    op = oracle_partial(Q, D)
    tester = alltest_complete_prepare(Q, D, ch)
    for t in itertools.product(consts, repeat=k):
        assert single_test_complete(Q, D, t, ch) == (t in oc)
        assert tester.test(t) == (t in oc)
    for t in itertools.product(consts + [WILDCARD], repeat=k):
        assert single_test_partial(Q, D, t, ch) == (t in op)
    wilds = [-(i + 1) for i in range(k)]
    cands = [
        t
        for t in itertools.product(consts + wilds, repeat=k)
        if validate_multi_tuple(t)
    ] or [()]
    mat = MultiAllTester(Q, D, ch)
    image = oracle_multi_all(Q.query, ch.db)
    for t in cands:
        assert mat.test(t) == (t in image)
    if seed % 2 == 1:
        om = oracle_multi(Q, D)
        for t in cands:
            assert single_test_multi(Q, D, t, ch) == (t in om)


def test_complete_tester_requires_guarded_ontology():
    unguarded = Ontology(
        (TGD((Atom("R", ("x", "y")), Atom("S", ("y", "z"))), (Atom("P", ("x",)),)),)
    )
    q = ConjunctiveQuery(("x",), (Atom("P", ("x",)),))
    Q = OMQ(unguarded, frozenset({"R", "S", "P"}), q)
    with pytest.raises(UsageError):
        single_test_complete(Q, Database.of([]), (intern_const("a"),))
