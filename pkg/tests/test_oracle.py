"""Brute-force reference evaluation used to cross-check the engine."""

import pytest

from omq.generators import office_instance, random_instance, rst_instance
from omq.model import (
    WILDCARD,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    OMQ,
    Ontology,
    ResourceLimitError,
    UsageError,
    flatten,
    intern_const,
    multi_le,
    wildcard_le,
)
from omq.oracle import (
    OracleConfig,
    oracle_complete,
    oracle_eval,
    oracle_multi,
    oracle_multi_all,
    oracle_partial,
    oracle_partial_all,
)


def test_office_oracle_golden_sets():
    Q, D = office_instance()
    mary, john, mike = (intern_const(x) for x in ("mary", "john", "mike"))
    room1, room4, main1 = (intern_const(x) for x in ("room1", "room4", "main1"))
    complete, partial, multi = oracle_eval(Q, D)
    assert complete == {(mary, room1, main1)}
    assert partial == {
        (mary, room1, main1),
        (john, room4, WILDCARD),
        (mike, WILDCARD, WILDCARD),
    }
    assert multi == {(mary, room1, main1), (john, room4, -1), (mike, -1, -2)}


def test_shared_existential_oracle_set():
    Q, D = rst_instance()
    c, c2 = intern_const("c"), intern_const("c'")
    assert oracle_multi(Q, D) == {(c, c2, -1, -2), (c, -1, -2, -1)}


@pytest.mark.parametrize("seed", range(15))
def test_partial_and_multi_sets_are_antichains(seed):
    Q, D = random_instance(seed)
    _, partial, multi = oracle_eval(Q, D)
    for a in partial:
        for b in partial:
            if a != b:
                assert not wildcard_le(a, b)
    for a in multi:
        for b in multi:
            if a != b:
                assert not multi_le(a, b)


@pytest.mark.parametrize("seed", range(15))
def test_answer_set_size_chain(seed):
    Q, D = random_instance(seed)
    complete, partial, multi = oracle_eval(Q, D)
    assert len(complete) <= len(partial) <= len(multi)


@pytest.mark.parametrize("seed", range(15))
def test_partial_set_is_minimal_flattening_of_multi(seed):
    Q, D = random_instance(seed)
    _, partial, multi = oracle_eval(Q, D)
    flat = {flatten(t) for t in multi}
    minimal = {
        t for t in flat if not any(o != t and wildcard_le(o, t) for o in flat)
    }
    assert minimal == partial


def test_complete_answers_appear_in_all_three_sets():
    Q, D = office_instance()
    complete, partial, multi = oracle_eval(Q, D)
    assert complete <= partial
    assert complete <= multi


def test_plain_cq_without_ontology():
    a, b = intern_const("a"), intern_const("b")
    q = ConjunctiveQuery(("x",), (Atom("R", ("x", "y")), Atom("S", ("y",))))
    Q = OMQ(Ontology(()), frozenset({"R", "S"}), q)
    D = Database.of([Fact("R", (a, b)), Fact("S", (b,)), Fact("R", (b, a))])
    complete, partial, multi = oracle_eval(Q, D)
    assert complete == partial == multi == {(a,)}


def test_chase_level_image_helpers():
    Q, D = office_instance()
    from omq.chase import query_directed_chase

    db = query_directed_chase(D, Q).db
    mary, room1, main1 = (intern_const(x) for x in ("mary", "room1", "main1"))
    star = oracle_partial_all(Q.query, db)
    multi = oracle_multi_all(Q.query, db)
    assert (mary, room1, main1) in star and (mary, room1, main1) in multi
    # images keep non-minimal rows: room1 also sits in a fresh building
    assert (mary, room1, WILDCARD) in star
    assert (mary, room1, -1) in multi


def test_oracle_config_rejects_nonpositive_bounds():
    with pytest.raises(UsageError):
        OracleConfig(max_adom=0)


def test_oracle_domain_bound_enforced():
    facts = [Fact("R", (intern_const(f"v{i}"),)) for i in range(70)]
    q = ConjunctiveQuery(("x",), (Atom("R", ("x",)),))
    Q = OMQ(Ontology(()), frozenset({"R"}), q)
    with pytest.raises(ResourceLimitError):
        oracle_eval(Q, Database.of(facts))
    small = OracleConfig(max_adom=128)
    assert len(oracle_complete(Q, Database.of(facts), small)) == 70


def test_oracle_is_deterministic():
    Q, D = office_instance()
    assert oracle_eval(Q, D) == oracle_eval(Q, D)
    assert oracle_partial(Q, D) == oracle_partial(Q, D)
