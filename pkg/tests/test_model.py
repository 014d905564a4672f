"""Core value types: tuple orders, wildcard images, guarded sets."""

import pytest

from omq.model import (
    WILDCARD,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    TGD,
    UsageError,
    flatten,
    guarded_sets,
    intern_const,
    multi_image,
    multi_le,
    star_image,
    validate_multi_tuple,
    wildcard_le,
)

a, b, c = intern_const("a"), intern_const("b"), intern_const("c")
W = WILDCARD


def test_wildcard_order_reflexive_and_covering():
    assert wildcard_le((a, b), (a, b))
    assert wildcard_le((a, b), (a, W))
    assert wildcard_le((a, b), (W, W))
    assert not wildcard_le((a, W), (a, b))
    assert not wildcard_le((a, b), (c, W))


def test_wildcard_order_rejects_length_mismatch():
    with pytest.raises(UsageError):
        wildcard_le((a,), (a, b))


@pytest.mark.parametrize(
    "t,ok",
    [
        ((), True),
        ((a, b), True),
        ((-1, -2, -1), True),
        ((a, -1, -1, -2), True),
        ((-2,), False),  # first wildcard must be *1
        ((a, -1, -3), False),  # skips *2
    ],
)
def test_multi_tuple_wellformedness(t, ok):
    assert validate_multi_tuple(t) is ok


def test_multi_order_requires_consistent_identification():
    # (a, b) is below (a, *1) and (*1, *2) but not below (*1, *1)
    assert multi_le((a, b), (a, -1))
    assert multi_le((a, b), (-1, -2))
    assert not multi_le((a, b), (-1, -1))
    assert multi_le((a, a), (-1, -1))
    # refining an identification is allowed, coarsening is not
    assert multi_le((-1, -1), (-1, -2))
    assert not multi_le((-1, -2), (-1, -1))


def test_multi_order_rejects_malformed_tuples():
    with pytest.raises(UsageError):
        multi_le((a, -2), (a, -1))


def test_single_wildcard_tuple_below_its_coarsening():
    # (a, b) strictly below (a, *)
    assert wildcard_le((a, b), (a, W)) and not wildcard_le((a, W), (a, b))


def test_flatten_collapses_all_wildcards():
    assert flatten((a, -1, -2, b)) == (a, W, W, b)
    assert flatten((a, b)) == (a, b)


def test_images_replace_nulls():
    from omq.model import fresh_null

    n1 = fresh_null()
    n2 = fresh_null()
    assert star_image((a, n1, n2, n1)) == (a, W, W, W)
    assert multi_image((a, n1, n2, n1)) == (a, -1, -2, -1)
    assert multi_image((n2, n1, n2)) == (-1, -2, -1)


def test_database_splits_named_and_null_domain():
    from omq.model import fresh_null

    n = fresh_null()
    db = Database.of([Fact("R", (a, n)), Fact("S", (b,))])
    assert db.named_adom() == frozenset({a, b})
    assert n in db.adom and n not in db.named_adom()


def test_guarded_sets_are_subsets_of_fact_args_without_duplicates():
    db = Database.of([Fact("R", (a, b)), Fact("S", (b, c))])
    sets = list(guarded_sets(db))
    assert len(sets) == len(set(sets))
    assert () in sets
    assert tuple(sorted((a, b))) in sets
    assert tuple(sorted((b, c))) in sets
    assert all(set(s) <= {a, b, c} for s in sets)
    # {a, c} spans two facts, so it is not guarded
    assert tuple(sorted((a, c))) not in sets


def test_tgd_guard_and_eli_flags():
    guarded = TGD(body=(Atom("R", ("x", "y")),), head=(Atom("S", ("x", "z")),))
    assert guarded.is_guarded() and guarded.is_eli()
    assert guarded.existential_vars == {"z"} and guarded.frontier == {"x"}
    # no body atom covers {x, y, z}
    unguarded = TGD(
        body=(Atom("R", ("x", "y")), Atom("S", ("y", "z"))),
        head=(Atom("P", ("x",)),),
    )
    assert not unguarded.is_guarded()
    # two frontier variables: guarded but not a tree-shaped single-frontier rule
    two_frontier = TGD(
        body=(Atom("M", ("x", "y")),),
        head=(Atom("H", ("x", "z")), Atom("H", ("y", "z"))),
    )
    assert two_frontier.is_guarded() and not two_frontier.is_eli()
    # duplicated head edge over the same variable pair
    multi_edge = TGD(
        body=(Atom("A", ("x",)),),
        head=(Atom("R", ("x", "z")), Atom("T", ("x", "z")), Atom("S", ("x", "w"))),
    )
    assert multi_edge.is_guarded() and not multi_edge.is_eli()


def test_query_arity_and_variables():
    q = ConjunctiveQuery(
        answer_vars=("x1", "x2"),
        atoms=(Atom("R", ("x1", "y")), Atom("S", ("y", "x2"))),
    )
    assert q.arity() == 2
    assert set(q.variables) == {"x1", "x2", "y"}
