"""Command-line interface.

Commands: classify, chase, enum, test, oracle, bench.  Exit codes: 0 on
success, 1 when a tested tuple is rejected, 2 on usage or structural errors
(including parse errors), 3 when a resource bound is exceeded.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from dataclasses import asdict, dataclass
from typing import Iterator, Optional, Sequence

from .chase import chase_bounded, query_directed_chase
from .enumerators import (
    answers,
    enum_complete,
    enum_multi,
    enum_partial,
    enum_partial_complete_first,
    prepare,
)
from .generators import chain_family, office_family
from .model import (
    Database,
    Fact,
    OMQ,
    ResourceLimitError,
    UsageError,
    const_label,
)
from .oracle import oracle_complete, oracle_multi, oracle_partial
from .structure import classify
from .syntax import (
    ParseError,
    parse_database,
    parse_ontology,
    parse_query,
    parse_tuple,
    print_answer,
    print_fact,
)
from .testing import (
    MultiAllTester,
    alltest_complete_prepare,
    single_test_complete,
    single_test_multi,
    single_test_partial,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_instance(args: argparse.Namespace) -> tuple[OMQ, Database]:
    """Parse the three input files; the data schema defaults to the symbols
    occurring in the database, warning when one occurs in neither the
    ontology nor the query."""
    D = parse_database(_read(args.db), args.db)
    onto = parse_ontology(_read(args.onto), args.onto)
    q = parse_query(_read(args.query), args.query)
    schema = frozenset(f.rel for f in D.facts)
    known = onto.symbols() | {a.rel for a in q.atoms}
    stray = sorted(schema - known)
    if stray:
        print(
            f"warning: database symbols absent from ontology and query: "
            f"{', '.join(stray)}",
            file=sys.stderr,
        )
    return OMQ(onto, schema, q), D


# ---------------------------------------------------------------------------
# classify


def cmd_classify(args: argparse.Namespace) -> int:
    report = classify(parse_query(_read(args.query), args.query))
    if args.json:
        out = asdict(report)
        out["bad_path"] = list(report.bad_path) if report.bad_path else None
        print(json.dumps(out))
        return EXIT_OK
    flag = lambda b: "yes" if b else "no"
    print(f"acyclic:        {flag(report.acyclic)}")
    print(f"weakly acyclic: {flag(report.weakly_acyclic)}")
    print(f"free-connex:    {flag(report.free_connex)}")
    print(f"connected:      {flag(report.connected)}")
    print(f"self-join free: {flag(report.self_join_free)}")
    if report.bad_path:
        print(f"bad path:       {' - '.join(report.bad_path)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# chase


def _print_facts(facts: Sequence[Fact], as_json: bool) -> None:
    rows = sorted((f.rel, tuple(const_label(c) for c in f.args)) for f in facts)
    for rel, labels in rows:
        if as_json:
            print(json.dumps({"rel": rel, "args": list(labels)}))
        else:
            print(f"{rel}({', '.join(labels)}).")


def cmd_chase(args: argparse.Namespace) -> int:
    Q, D = _load_instance(args)
    if args.full_depth is not None:
        db = chase_bounded(D, Q.ontology, args.full_depth)
    else:
        db = query_directed_chase(D, Q).db
    _print_facts(sorted(db.facts), args.json)
    return EXIT_OK


# ---------------------------------------------------------------------------
# enum / oracle


def _enum_stream(Q: OMQ, D: Database, args: argparse.Namespace) -> Iterator[tuple]:
    if args.mode != "partial":
        if args.complete_first:
            raise UsageError("--complete-first applies to --mode partial only")
        if args.no_prune:
            raise UsageError("--no-prune applies to --mode partial only")
    if args.mode == "complete":
        return enum_complete(Q, D)
    if args.mode == "multi":
        return enum_multi(Q, D)
    if args.complete_first:
        if args.no_prune:
            raise UsageError("--complete-first requires pruning")
        return enum_partial_complete_first(Q, D)
    return enum_partial(Q, D, prune=not args.no_prune)


def cmd_enum(args: argparse.Namespace) -> int:
    Q, D = _load_instance(args)
    stream = _enum_stream(Q, D, args)
    if args.limit is not None:
        stream = itertools.islice(stream, args.limit)
    mode = "json" if args.json else "text"
    for t in stream:
        print(print_answer(t, mode, multi=args.mode == "multi"))
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    Q, D = _load_instance(args)
    evaluate = {
        "complete": oracle_complete,
        "partial": oracle_partial,
        "multi": oracle_multi,
    }[args.mode]
    mode = "json" if args.json else "text"
    rendered = sorted(print_answer(t, mode, multi=args.mode == "multi") for t in evaluate(Q, D))
    for line in rendered[: args.limit]:
        print(line)
    return EXIT_OK


# ---------------------------------------------------------------------------
# test


def cmd_test(args: argparse.Namespace) -> int:
    if (args.tuple is None) == (not args.stdin):
        raise UsageError("provide exactly one of --tuple or --stdin")
    Q, D = _load_instance(args)
    chase = query_directed_chase(D, Q)

    if args.tuple is not None:
        single = {
            "complete": single_test_complete,
            "partial": single_test_partial,
            "multi": single_test_multi,
        }[args.mode]
        verdict = single(Q, D, parse_tuple(args.tuple), chase)
        print("true" if verdict else "false")
        return EXIT_OK if verdict else EXIT_NEGATIVE

    if args.mode == "complete":
        tester = alltest_complete_prepare(Q, D, chase).test
    elif args.mode == "multi":
        tester = MultiAllTester(Q, D, chase).test
    else:
        tester = lambda t: single_test_partial(Q, D, t, chase)
    all_true = True
    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        verdict = tester(parse_tuple(line))
        all_true &= verdict
        print("true" if verdict else "false")
    return EXIT_OK if all_true else EXIT_NEGATIVE


# ---------------------------------------------------------------------------
# bench


@dataclass
class BenchRow:
    """One benchmark measurement: preprocessing duration, answer count,
    inter-answer delay statistics, and trees-node-visit counters."""

    queryset: str
    size: int
    mode: str
    preprocess_s: float
    answers: int
    delay_max_s: float
    delay_mean_s: float
    delay_p95_s: float
    visits_total: int
    visit_max_per_answer: int


_FAMILIES = {"example1": office_family, "appendix": chain_family}


def bench_family(queryset: str, sizes: Sequence[int], mode: str = "partial") -> list[BenchRow]:
    """Run the instrumented enumerator over a scaled database family.

    Delays are measured with a monotonic clock between successive answer
    returns, excluding output formatting; the visit counter tracks trees-index
    node visits, whose per-answer maximum is the constant-delay witness."""
    if mode not in ("complete", "partial"):
        raise UsageError("bench supports --mode complete|partial")
    build = _FAMILIES[queryset]
    rows = []
    for size in sizes:
        Q, D = build(size)
        t0 = time.perf_counter()
        plan = prepare(Q, D, mode)
        preprocess_s = time.perf_counter() - t0
        delays: list[float] = []
        deltas: list[int] = []
        visited = plan.visits()
        prev = time.perf_counter()
        for _ in answers(plan):
            now = time.perf_counter()
            delays.append(now - prev)
            deltas.append(plan.visits() - visited)
            visited = plan.visits()
            prev = now
        rows.append(
            BenchRow(
                queryset=queryset,
                size=size,
                mode=mode,
                preprocess_s=preprocess_s,
                answers=len(delays),
                delay_max_s=max(delays, default=0.0),
                delay_mean_s=sum(delays) / len(delays) if delays else 0.0,
                delay_p95_s=sorted(delays)[round(0.95 * (len(delays) - 1))] if delays else 0.0,
                visits_total=visited,
                visit_max_per_answer=max(deltas, default=0),
            )
        )
    return rows


def cmd_bench(args: argparse.Namespace) -> int:
    if args.queryset == "example1":
        if not args.n:
            raise UsageError("bench example1 requires --n")
        sizes = args.n
    else:
        if not args.copies:
            raise UsageError("bench appendix requires --copies")
        sizes = args.copies
    rows = bench_family(args.queryset, sizes, args.mode)
    for row in rows:
        print(json.dumps(asdict(row)))
    ratios = [
        round(b.preprocess_s / a.preprocess_s, 3) if a.preprocess_s > 0 else None
        for a, b in zip(rows, rows[1:])
    ]
    maxima = [r.visit_max_per_answer for r in rows]
    print(
        json.dumps(
            {
                "queryset": args.queryset,
                "summary": True,
                "preprocess_ratios": ratios,
                "visit_max_per_answer": maxima,
                "visit_max_equal": len(set(maxima)) <= 1,
            }
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# dispatch


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("db", help="database file (.facts)")
    p.add_argument("onto", help="ontology file (.tgd)")
    p.add_argument("query", help="query file (.cq)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omq",
        description="Enumerate, test, and cross-check answers to ontology-mediated queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="print the structural report of a query")
    p.add_argument("query", help="query file (.cq)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("chase", help="print the chase of a database")
    _add_instance_args(p)
    p.add_argument(
        "--full-depth",
        type=int,
        metavar="N",
        help="print the depth-bounded oblivious chase instead of the query-directed one",
    )
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_chase)

    p = sub.add_parser("enum", help="enumerate answers")
    _add_instance_args(p)
    p.add_argument("--mode", choices=("complete", "partial", "multi"), default="partial")
    p.add_argument(
        "--complete-first",
        action="store_true",
        help="emit every all-constant answer before any wildcard answer (partial mode)",
    )
    p.add_argument(
        "--no-prune",
        action="store_true",
        help="emit non-minimal answers too, in refinement-first order (partial mode)",
    )
    p.add_argument("--limit", type=int, metavar="N")
    p.add_argument("--json", action="store_true", help="one JSON array per answer line")
    p.set_defaults(func=cmd_enum)

    p = sub.add_parser(
        "test",
        help="test candidate answer tuples",
        description="With --tuple, run a single test: complete and partial "
        "modes decide membership in the certain / minimal-partial answer "
        "set, and multi mode decides minimal multi-wildcard answers of the "
        "ontology-mediated query.  With --stdin, prepare once and test one "
        "tuple per input line; multi mode then works at the chase level, "
        "accepting exactly the wildcard images of chase answers, minimal or "
        "not.",
    )
    _add_instance_args(p)
    p.add_argument("--mode", choices=("complete", "partial", "multi"), default="complete")
    p.add_argument("--tuple", metavar="TUPLE", help='candidate, e.g. "(a, *, b)"')
    p.add_argument("--stdin", action="store_true", help="read one tuple per line")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("oracle", help="print the answer set by brute force (sorted)")
    _add_instance_args(p)
    p.add_argument("--mode", choices=("complete", "partial", "multi"), default="partial")
    p.add_argument("--limit", type=int, metavar="N")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="time preprocessing and per-answer delay on built-in families")
    p.add_argument("queryset", choices=sorted(_FAMILIES))
    p.add_argument("--n", type=int, nargs="+", metavar="N", help="example1 sizes (researchers)")
    p.add_argument("--copies", type=int, nargs="+", metavar="N", help="appendix replication counts")
    p.add_argument("--mode", choices=("complete", "partial"), default="partial")
    p.add_argument("--seed", type=int, default=0, help="accepted for interface stability; the built-in families are deterministic")
    p.set_defaults(func=cmd_bench)

    return parser


def cmd_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints usage itself
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cmd_dispatch())


if __name__ == "__main__":
    main()
