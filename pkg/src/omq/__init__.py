"""Enumeration, testing, and oracle evaluation of ontology-mediated queries."""

from .chase import (
    ChaseResult,
    HornFormula,
    chase_bounded,
    horn_formula,
    min_model,
    query_directed_chase,
)
from .enumerators import (
    EnumPlan,
    answers,
    enum_complete,
    enum_multi,
    enum_partial,
    enum_partial_complete_first,
    prepare,
)
from .model import (
    WILDCARD,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    OMQ,
    Ontology,
    ResourceLimitError,
    TGD,
    UsageError,
    const_label,
    flatten,
    intern_const,
    multi_image,
    multi_le,
    star_image,
    validate_multi_tuple,
    wildcard_le,
)
from .oracle import (
    oracle_complete,
    oracle_eval,
    oracle_multi,
    oracle_partial,
)
from .preprocess import build_q1_d1, build_trees_index
from .structure import (
    StructureReport,
    classify,
    join_tree,
    normalize_query,
    selfjoin_free_rewrite,
)
from .syntax import (
    ParseError,
    parse_database,
    parse_ontology,
    parse_query,
    parse_tuple,
    print_answer,
    print_database,
    print_ontology,
    print_query,
)
from .testing import (
    MultiAllTester,
    alltest_complete_prepare,
    alltest_multi_prepare,
    single_test_complete,
    single_test_multi,
    single_test_partial,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "ChaseResult",
    "ConjunctiveQuery",
    "Database",
    "EnumPlan",
    "Fact",
    "HornFormula",
    "MultiAllTester",
    "OMQ",
    "Ontology",
    "ParseError",
    "ResourceLimitError",
    "StructureReport",
    "TGD",
    "UsageError",
    "WILDCARD",
    "alltest_complete_prepare",
    "alltest_multi_prepare",
    "answers",
    "build_q1_d1",
    "build_trees_index",
    "chase_bounded",
    "classify",
    "const_label",
    "enum_complete",
    "enum_multi",
    "enum_partial",
    "enum_partial_complete_first",
    "flatten",
    "horn_formula",
    "intern_const",
    "join_tree",
    "min_model",
    "multi_image",
    "multi_le",
    "normalize_query",
    "oracle_complete",
    "oracle_eval",
    "oracle_multi",
    "oracle_partial",
    "parse_database",
    "parse_ontology",
    "parse_query",
    "parse_tuple",
    "prepare",
    "print_answer",
    "print_database",
    "print_ontology",
    "print_query",
    "query_directed_chase",
    "selfjoin_free_rewrite",
    "single_test_complete",
    "single_test_multi",
    "single_test_partial",
    "star_image",
    "validate_multi_tuple",
    "wildcard_le",
]
