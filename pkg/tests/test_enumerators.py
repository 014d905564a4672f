"""Answer enumeration: walk order, pruning, product, multi-wildcard stream."""

import itertools

import pytest

from _golden import (
    GOLDEN_MULTI_WALK,
    GOLDEN_PRUNE_AFTER_FIFTH,
    GOLDEN_PRUNE_AFTER_FIRST,
    GOLDEN_PRUNED_WALK,
    render_tree,
)
from omq.enumerators import (
    EOA,
    START,
    ball,
    cone,
    enum_complete,
    enum_multi,
    enum_partial,
    enum_partial_complete_first,
    enum_product,
    nextat,
    prepare,
    walk,
)
from omq.generators import (
    chain_instance,
    office_instance,
    office_prof_instance,
    random_instance,
    rst_instance,
)
from omq.model import (
    WILDCARD,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    OMQ,
    Ontology,
    UsageError,
    intern_const,
    multi_le,
    wildcard_le,
)
from omq.syntax import print_answer


def _texts(stream, multi=False):
    return [print_answer(t, multi=multi) for t in stream]


def test_walkthrough_pruned_walk_order():
    Q, D = chain_instance()
    assert _texts(enum_partial(Q, D)) == GOLDEN_PRUNED_WALK


def test_walkthrough_first_answer():
    Q, D = chain_instance()
    assert next(iter(enum_partial(Q, D))) is not None
    assert _texts(enum_partial(Q, D))[0] == "(*, b, a, b, c)"


def test_walkthrough_prune_log_timing():
    Q, D = chain_instance()
    plan = prepare(Q, D, "partial")
    prep, trees = plan.preps[0], plan.trees[0]
    it = walk(prep, trees)
    next(it)
    # pruning triggered by an answer runs when the walk resumes
    assert trees.removed_log == []
    next(it)
    assert [render_tree(prep, t) for t in trees.removed_log] == GOLDEN_PRUNE_AFTER_FIRST
    for _ in range(4):
        next(it)
    assert [render_tree(prep, t) for t in trees.removed_log] == (
        GOLDEN_PRUNE_AFTER_FIRST + GOLDEN_PRUNE_AFTER_FIFTH
    )


def test_walkthrough_unpruned_walk():
    Q, D = chain_instance()
    unpruned = _texts(enum_partial(Q, D, prune=False))
    assert len(unpruned) == 20
    assert "(*, *, a, b, c)" in unpruned
    assert "(*, *, a, b, c)" not in _texts(enum_partial(Q, D))
    assert set(GOLDEN_PRUNED_WALK) <= set(unpruned)


def test_unpruned_order_never_coarsens_before_refining():
    Q, D = chain_instance()
    out = list(enum_partial(Q, D, prune=False))
    for i, a in enumerate(out):
        for b in out[i + 1 :]:
            assert not (wildcard_le(b, a) and a != b)


def test_pruned_output_is_an_antichain():
    Q, D = chain_instance()
    out = list(enum_partial(Q, D))
    for a in out:
        for b in out:
            if a != b:
                assert not wildcard_le(a, b) and not wildcard_le(b, a)


def test_walkthrough_multi_walk_order_and_flush():
    Q, D = chain_instance()
    got = _texts(enum_multi(Q, D), multi=True)
    assert got == GOLDEN_MULTI_WALK
    # the repeated-wildcard answer is held back until the walk finishes
    assert got[-1] == "(*1, b, a, b, *1)"


def test_walkthrough_has_no_complete_answers():
    Q, D = chain_instance()
    assert list(enum_complete(Q, D)) == []


def test_office_enumeration_golden_sets():
    Q, D = office_instance()
    mary, john, mike = (intern_const(x) for x in ("mary", "john", "mike"))
    room1, room4, main1 = (intern_const(x) for x in ("room1", "room4", "main1"))
    assert set(enum_partial(Q, D)) == {
        (mary, room1, main1),
        (john, room4, WILDCARD),
        (mike, WILDCARD, WILDCARD),
    }
    assert set(enum_multi(Q, D)) == {
        (mary, room1, main1),
        (john, room4, -1),
        (mike, -1, -2),
    }
    assert set(enum_complete(Q, D)) == {(mary, room1, main1)}


def test_partial_emits_each_answer_once():
    Q, D = office_instance()
    out = list(enum_partial(Q, D))
    assert len(out) == len(set(out))


def test_complete_first_reorders_partial_answers():
    Q, D = office_instance()
    out = list(enum_partial_complete_first(Q, D))
    assert set(out) == set(enum_partial(Q, D))
    wild_seen = False
    for t in out:
        if WILDCARD in t:
            wild_seen = True
        else:
            assert not wild_seen


def test_shared_existential_rule_multi_answers():
    Q, D = rst_instance()
    c, c2 = intern_const("c"), intern_const("c'")
    assert set(enum_multi(Q, D)) == {(c, c2, -1, -2), (c, -1, -2, -1)}


def test_full_query_with_self_joins_multi_answers():
    Q, D = office_prof_instance()
    mike = intern_const("mike")
    out = set(enum_multi(Q, D))
    assert out == {(mike, -1, -1, -2)}
    assert (mike, -1, -2, -3) not in out


def test_enum_rejects_non_free_connex_query():
    from omq.generators import office_mates_instance

    Q, D = office_mates_instance()
    with pytest.raises(UsageError):
        list(enum_multi(Q, D))
    with pytest.raises(UsageError):
        list(enum_partial(Q, D))


def test_boolean_queries_enumerate_satisfiability():
    a = intern_const("a")
    Q = OMQ(
        Ontology(()),
        frozenset({"R"}),
        ConjunctiveQuery((), (Atom("R", ("y1", "y2")),)),
    )
    assert list(enum_partial(Q, Database.of([Fact("R", (a, a))]))) == [()]
    assert list(enum_partial(Q, Database.of([]))) == []


def test_disconnected_query_streams_cross_product():
    a, b = intern_const("a"), intern_const("b")
    q = ConjunctiveQuery(
        ("x1", "x2"), (Atom("R", ("x1", "y")), Atom("S", ("x2",)))
    )
    Q = OMQ(Ontology(()), frozenset({"R", "S"}), q)
    D = Database.of([Fact("R", (a, b)), Fact("R", (b, b)), Fact("S", (a,)), Fact("S", (b,))])
    assert set(enum_partial(Q, D)) == {(x, y) for x in (a, b) for y in (a, b)}


def test_nextat_skips_fully_assigned_atoms():
    Q, D = chain_instance()
    plan = prepare(Q, D, "partial")
    prep = plan.preps[0]
    # pre-order is R2, R1, C1, R4, R5 over nodes (1, 0, 4, 2, 3)
    assert nextat(prep, {}) == 1
    h = {"x1": 0, "x2": 0, "x3": 0}
    assert nextat(prep, h) == 2  # R4 introduces x4; R1, C1 are fully assigned
    assert nextat(prep, h, v=2) == 3  # then R5 introduces x5
    h_all = {x: 0 for x in ("x1", "x2", "x3", "x4", "x5")}
    assert nextat(prep, h_all) == EOA
    assert START != EOA


def test_enum_product_orders_blocks_deterministically():
    left = iter([(1,), (2,)])
    right = iter([(10,), (20,)])
    rows = list(enum_product([left, right]))
    assert rows == [(1, 10), (1, 20), (2, 10), (2, 20)]
    assert list(enum_product([])) == [()]


def test_ball_enumerates_wildcard_partitions():
    a = intern_const("a")
    assert ball((a,)) == {(a,)}
    got = ball((a, WILDCARD, WILDCARD))
    assert got == {(a, -1, -2), (a, -1, -1)}


def test_cone_includes_coarsenings():
    a, b = intern_const("a"), intern_const("b")
    got = cone((a, WILDCARD))
    assert (a, -1) in got
    assert (-1, -2) in got and (-1, -1) in got
    # every member flattens to a coarsening of the base tuple
    for t in got:
        flat = tuple(WILDCARD if v < 0 else v for v in t)
        assert wildcard_le((a, WILDCARD), flat)


def test_multi_output_is_antichain_in_multi_order():
    Q, D = chain_instance()
    out = list(enum_multi(Q, D))
    for a in out:
        for b in out:
            if a != b:
                assert not multi_le(a, b) and not multi_le(b, a)


@pytest.mark.parametrize("seed", [0, 5, 9, 14, 23])
def test_multi_never_repeats_on_random_instances(seed):
    Q, D = random_instance(seed, eli_only=True)
    out = list(enum_multi(Q, D))
    assert len(out) == len(set(out))
