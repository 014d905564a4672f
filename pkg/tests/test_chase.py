"""Chase construction: Horn closure, bounded chase, witness structure."""

import os
import subprocess
import sys

import pytest

from omq.chase import (
    chase_bounded,
    horn_formula,
    min_model,
    query_directed_chase,
)
from omq.generators import (
    chain_instance,
    office_instance,
    random_horn,
    random_instance,
)
from omq.model import Fact, intern_const, is_null
from omq.oracle import naive_min_model, oracle_partial_all
from omq.model import WILDCARD


@pytest.mark.parametrize("seed", range(25))
def test_min_model_matches_naive_fixpoint(seed):
    phi = random_horn(seed, max_clauses=400)
    assert min_model(phi) == naive_min_model(phi)


def test_min_model_handles_duplicate_body_literals():
    p, q = Fact("p", (intern_const("h0"),)), Fact("p", (intern_const("h1"),))
    from omq.chase import HornFormula

    phi = HornFormula(units=(p,), clauses=(((p, p), q),))
    assert q in min_model(phi)


def test_horn_closure_of_office_rules():
    Q, D = office_instance()
    phi = horn_formula(D, Q.ontology)
    model = min_model(phi)
    room1 = intern_const("room1")
    assert Fact("Office", (room1,)) in model
    assert all(not any(is_null(c) for c in f.args) for f in model)
    assert min_model(phi) == naive_min_model(phi)


def test_bounded_chase_is_oblivious_and_monotone():
    Q, D = office_instance()
    mary, room1 = intern_const("mary"), intern_const("room1")
    db2 = chase_bounded(D, Q.ontology, 2)
    # the existential rule fires for mary even though she already has an office
    fresh = [
        f for f in db2.facts
        if f.rel == "HasOffice" and f.args[0] == mary and is_null(f.args[1])
    ]
    assert fresh
    assert Fact("HasOffice", (mary, room1)) in db2.facts
    # deeper runs renumber their fresh nulls, so compare shapes: the null-free
    # fragment is identical and no relation loses rows
    db3 = chase_bounded(D, Q.ontology, 3)
    named2 = {f for f in db2.facts if not any(is_null(c) for c in f.args)}
    named3 = {f for f in db3.facts if not any(is_null(c) for c in f.args)}
    assert named2 == named3
    count = lambda db: {
        rel: len(rows) for rel, rows in sorted(db.by_rel().items())
    }
    assert all(count(db2)[rel] <= n for rel, n in count(db3).items() if rel in count(db2))


def test_query_directed_chase_contains_example_answers():
    Q, D = office_instance()
    ch = query_directed_chase(D, Q)
    star = oracle_partial_all(Q.query, ch.db)
    mary, room1, main1 = (intern_const(x) for x in ("mary", "room1", "main1"))
    john, room4, mike = (intern_const(x) for x in ("john", "room4", "mike"))
    assert (mary, room1, main1) in star
    assert (john, room4, WILDCARD) in star
    assert (mike, WILDCARD, WILDCARD) in star


def _check_decomposition(ch):
    units = ch.decomposition()
    all_nulls = []
    covered = set()
    for anchor, facts in units:
        null_free = [f for f in facts if not any(is_null(c) for c in f.args)]
        assert null_free == [anchor]
        unit_nulls = frozenset(c for f in facts for c in f.args if is_null(c))
        all_nulls.append(unit_nulls)
        covered |= set(facts)
    for i in range(len(all_nulls)):
        for j in range(i + 1, len(all_nulls)):
            assert not (all_nulls[i] & all_nulls[j])
    assert covered == set(ch.db.facts)


def test_witness_decomposition_invariants_on_worked_instances():
    for Q, D in (office_instance(), chain_instance()):
        _check_decomposition(query_directed_chase(D, Q))


@pytest.mark.parametrize("seed", range(12))
def test_witness_decomposition_invariants_on_random_instances(seed):
    Q, D = random_instance(seed, eli_only=seed % 2 == 1)
    _check_decomposition(query_directed_chase(D, Q))


def test_chain_chase_null_part_feeds_reduction():
    Q, D = chain_instance()
    ch = query_directed_chase(D, Q)
    assert any(w.nulls for w in ch.witnesses)
    for w in ch.witnesses:
        assert not any(is_null(c) for c in w.anchor.args)
        assert all(any(c in w.nulls for c in f.args) for f in w.facts if f != w.anchor)


def test_entail_depth_env_var_is_honoured():
    code = (
        "from omq.chase import _depth_cap\n"
        "print(_depth_cap())\n"
    )
    env = dict(os.environ, OMQ_ENTAIL_DEPTH="7")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.stdout.strip() == "7"
    env_bad = dict(os.environ, OMQ_ENTAIL_DEPTH="nonsense")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env_bad, capture_output=True, text=True
    )
    assert out.stdout.strip() == "24"
