"""Shared fixtures for the worked five-variable walkthrough instance.

The reduced query's five atom copies are referred to by the short names
R1, R2, R4, R5, C1 (matching their argument tuples (x1,x2), (x2,x3),
(x4,x3), (x5,x4), (x1)), and progress trees are rendered as the atom
conjunction with each variable replaced by its assigned constant or `*`.
"""

from omq.model import WILDCARD, const_label

NODE_NAMES = {0: "R1", 1: "R2", 2: "R4", 3: "R5", 4: "C1"}


def _val(v) -> str:
    return "*" if v == WILDCARD else const_label(v)


def render_tree(prep, tree) -> str:
    assign = dict(tree.assign)
    pre_pos = {u: k for k, u in enumerate(prep.preorder)}
    parts = []
    for u in sorted(tree.atoms, key=pre_pos.get):
        args = ", ".join(_val(assign[x]) for x in prep.q1.atoms[u].args)
        parts.append(f"{NODE_NAMES[u]}({args})")
    return " & ".join(parts)


def render_trees_index(prep, trees) -> dict[tuple, list[str]]:
    """Live list contents keyed by (atom name, predecessor assignment)."""
    out = {}
    for (node, hvals), live in trees.items():
        hkey = tuple(
            (x, const_label(v)) for x, v in zip(prep.pred_vars[node], hvals)
        )
        out[(NODE_NAMES[node], hkey)] = [render_tree(prep, t) for t in live]
    return out


# every non-empty list of the walkthrough instance; all other lists are empty
GOLDEN_TREES = {
    ("R1", (("x2", "a"),)): ["R1(b, a)", "R1(d, a)"],
    ("R1", (("x2", "b"),)): ["R1(*, b) & C1(*)"],
    ("R1", (("x2", "d"),)): ["R1(*, d) & C1(*)"],
    ("R2", ()): [
        "R2(b, a)",
        "R2(d, a)",
        "R2(*, a) & R1(*, *) & C1(*)",
        "R2(a, *) & R4(a, *)",
    ],
    ("R4", (("x3", "a"),)): ["R4(b, a)", "R4(d, a)", "R4(*, a) & R5(*, *)"],
    ("R5", (("x4", "a"),)): ["R5(b, a)", "R5(d, a)", "R5(e, a)", "R5(*, a)"],
    ("R5", (("x4", "b"),)): ["R5(c, b)", "R5(*, b)"],
    ("R5", (("x4", "d"),)): ["R5(*, d)"],
    ("C1", (("x1", "b"),)): ["C1(b)"],
    ("C1", (("x1", "d"),)): ["C1(d)"],
}

# the ten minimal single-wildcard answers, in emission order under pruning
GOLDEN_PRUNED_WALK = [
    "(*, b, a, b, c)",
    "(*, b, a, d, *)",
    "(*, d, a, b, c)",
    "(*, d, a, d, *)",
    "(b, a, *, a, b)",
    "(b, a, *, a, d)",
    "(b, a, *, a, e)",
    "(d, a, *, a, b)",
    "(d, a, *, a, d)",
    "(d, a, *, a, e)",
]

# the eleven minimal multi-wildcard answers in emission order; the repeated-
# wildcard answer surfaces from the pending pool only after the walk ends
GOLDEN_MULTI_WALK = [
    "(*1, b, a, b, c)",
    "(*1, b, a, d, *2)",
    "(*1, d, a, b, c)",
    "(*1, d, a, d, *1)",
    "(b, a, *1, a, b)",
    "(b, a, *1, a, d)",
    "(b, a, *1, a, e)",
    "(d, a, *1, a, b)",
    "(d, a, *1, a, d)",
    "(d, a, *1, a, e)",
    "(*1, b, a, b, *1)",
]

GOLDEN_PRUNE_AFTER_FIRST = [
    "R2(*, a) & R1(*, *) & C1(*)",
    "R4(*, a) & R5(*, *)",
    "R5(*, b)",
]
GOLDEN_PRUNE_AFTER_FIFTH = ["R5(*, a)"]
