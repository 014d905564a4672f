"""Text formats for databases, ontologies, queries, tuples, and answers.

Conventions:
  - one fact / rule / query per line, `%` starts a comment, trailing `.` optional
  - identifiers starting with u, v, w, x, y or z are variables; all other
    identifiers (and double-quoted strings) are constants
  - the reserved null prefix "_:" is forbidden in input constants
  - wildcards in tuples are written `*` (single) or `*1`, `*2`, ... (multi)
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .model import (
    NULL_PREFIX,
    WILDCARD,
    Atom,
    ConjunctiveQuery,
    Database,
    Fact,
    Ontology,
    TGD,
    const_label,
    intern_const,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.:']*")
_VAR = re.compile(r"[u-z][A-Za-z0-9_']*$")


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.span = span


def is_variable_name(name: str) -> bool:
    return bool(_VAR.match(name))


class _Scanner:
    def __init__(self, text: str, file: str, line: int):
        self.text = text
        self.file = file
        self.line = line
        self.pos = 0

    def span(self) -> SourceSpan:
        return SourceSpan(self.file, self.line, self.pos + 1)

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.span())

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def eof(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, token: str) -> bool:
        self.skip_ws()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def expect(self, token: str):
        if not self.take(token):
            raise self.error(f"expected {token!r}")

    def ident(self) -> str:
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == '"':
            end = self.text.find('"', self.pos + 1)
            if end < 0:
                raise self.error("unterminated string")
            name = self.text[self.pos + 1 : end]
            self.pos = end + 1
            return name
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise self.error("expected identifier")
        self.pos = m.end()
        return m.group()


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "%" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def _parse_term(sc: _Scanner, allow_const: bool = True):
    """Variable (str) or interned constant id (int)."""
    self_span = sc.span()
    name = sc.ident()
    if is_variable_name(name):
        return name
    if not allow_const:
        raise ParseError(f"constant {name!r} not allowed here", self_span)
    if name.startswith(NULL_PREFIX):
        raise ParseError(f"reserved null prefix in constant {name!r}", self_span)
    return intern_const(name)


def _parse_atom(sc: _Scanner, allow_const: bool = True) -> Atom:
    rel = sc.ident()
    sc.expect("(")
    args = []
    if not sc.take(")"):
        while True:
            args.append(_parse_term(sc, allow_const))
            if sc.take(")"):
                break
            sc.expect(",")
    return Atom(rel, tuple(args))


def _parse_atom_list(sc: _Scanner, allow_const: bool = True) -> list[Atom]:
    atoms = [_parse_atom(sc, allow_const)]
    while sc.take(","):
        atoms.append(_parse_atom(sc, allow_const))
    return atoms


def parse_database(text: str, file: str = "<db>") -> Database:
    facts: set[Fact] = set()
    arities: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("@schema"):
            _parse_schema_line(line, file, lineno)
            continue
        sc = _Scanner(line, file, lineno)
        while not sc.eof():
            span = sc.span()
            rel = sc.ident()
            sc.expect("(")
            args = []
            if not sc.take(")"):
                while True:
                    cspan = sc.span()
                    name = sc.ident()
                    if name.startswith(NULL_PREFIX):
                        raise ParseError(f"reserved null prefix in constant {name!r}", cspan)
                    args.append(intern_const(name))
                    if sc.take(")"):
                        break
                    sc.expect(",")
            sc.take(".")
            if rel in arities and arities[rel] != len(args):
                raise ParseError(
                    f"arity conflict for {rel}: {len(args)} vs {arities[rel]}", span
                )
            arities[rel] = len(args)
            facts.add(Fact(rel, tuple(args)))
    return Database.of(facts)


def _parse_schema_line(line: str, file: str, lineno: int) -> dict[str, int]:
    sc = _Scanner(line[len("@schema") :], file, lineno)
    out: dict[str, int] = {}
    while not sc.eof():
        rel = sc.ident()
        sc.expect("/")
        sc.skip_ws()
        span = sc.span()
        digits = ""
        while sc.pos < len(sc.text) and sc.text[sc.pos].isdigit():
            digits += sc.text[sc.pos]
            sc.pos += 1
        if not digits:
            raise ParseError("expected arity number", span)
        out[rel] = int(digits)
        sc.take(",")
        sc.take(".")
    return out


def parse_schema(text: str, file: str = "<db>") -> dict[str, int]:
    """Arities declared via @schema lines, plus those of the facts."""
    out: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if line.startswith("@schema"):
            out.update(_parse_schema_line(line, file, lineno))
    for f in parse_database(text, file).facts:
        out[f.rel] = len(f.args)
    return out


def parse_ontology(text: str, file: str = "<onto>") -> Ontology:
    tgds = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        sc = _Scanner(line, file, lineno)
        if sc.take("true"):
            body: list[Atom] = []
        else:
            body = _parse_atom_list(sc, allow_const=False)
        sc.expect("->")
        declared: list[str] = []
        if sc.take("exists"):
            while True:
                span = sc.span()
                name = sc.ident()
                if not is_variable_name(name):
                    raise ParseError(f"existential {name!r} is not a variable", span)
                declared.append(name)
                if not sc.take(","):
                    break
            sc.expect(".")
        head = _parse_atom_list(sc, allow_const=False)
        sc.take(".")
        if not sc.eof():
            raise sc.error("trailing input after rule")
        tgd = TGD(tuple(body), tuple(head))
        undeclared = tgd.existential_vars - set(declared)
        if undeclared:
            raise ParseError(
                f"head variables {sorted(undeclared)} neither frontier nor declared existential",
                SourceSpan(file, lineno, 1),
            )
        tgds.append(tgd)
    return Ontology(tuple(tgds))


def parse_query(text: str, file: str = "<query>") -> ConjunctiveQuery:
    line = " ".join(
        s for s in (_strip_comment(l).strip() for l in text.splitlines()) if s
    )
    sc = _Scanner(line, file, 1)
    sc.ident()  # query name
    sc.expect("(")
    answer_vars: list[str] = []
    if not sc.take(")"):
        while True:
            span = sc.span()
            name = sc.ident()
            if not is_variable_name(name):
                raise ParseError(f"answer position {name!r} is not a variable", span)
            answer_vars.append(name)
            if sc.take(")"):
                break
            sc.expect(",")
    sc.expect("<-")
    atoms = _parse_atom_list(sc, allow_const=True)
    sc.take(".")
    if not sc.eof():
        raise sc.error("trailing input after query body")
    q = ConjunctiveQuery(tuple(answer_vars), tuple(atoms))
    missing = set(answer_vars) - q.variables
    if missing:
        raise ParseError(
            f"answer variables {sorted(missing)} absent from body",
            SourceSpan(file, 1, 1),
        )
    return q


_WILD_TOKEN = re.compile(r"\*(\d*)$")


def parse_tuple(text: str, file: str = "<tuple>") -> tuple[int, ...]:
    """Parse `(a, *, b)` / `(mike, *1, *2)`; bare `()` is the empty tuple."""
    sc = _Scanner(text.strip(), file, 1)
    sc.expect("(")
    entries: list[int] = []
    if not sc.take(")"):
        while True:
            sc.skip_ws()
            span = sc.span()
            if sc.take("*"):
                digits = ""
                while sc.pos < len(sc.text) and sc.text[sc.pos].isdigit():
                    digits += sc.text[sc.pos]
                    sc.pos += 1
                entries.append(-int(digits) if digits else WILDCARD)
            else:
                name = sc.ident()
                if name.startswith(NULL_PREFIX):
                    raise ParseError("nulls cannot appear in answer tuples", span)
                entries.append(intern_const(name))
            if sc.take(")"):
                break
            sc.expect(",")
    if not sc.eof():
        raise sc.error("trailing input after tuple")
    return tuple(entries)


def _entry_text(v: int, multi: bool) -> str:
    if v >= 0:
        return const_label(v)
    if multi:
        return f"*{-v}"
    return "*"


def print_answer(t: tuple[int, ...], mode: str = "text", multi: bool = None) -> str:
    if multi is None:
        multi = any(v < -1 for v in t)
    if mode == "json":
        arr = []
        for v in t:
            if v >= 0:
                arr.append({"const": const_label(v)})
            else:
                arr.append({"wild": -v if multi else 0})
        return json.dumps(arr)
    return "(" + ", ".join(_entry_text(v, multi) for v in t) + ")"


def print_fact(f: Fact) -> str:
    return f"{f.rel}({', '.join(const_label(c) for c in f.args)})."


def print_database(D: Database) -> str:
    return "\n".join(sorted(print_fact(f) for f in D.facts))


def _atom_text(a: Atom) -> str:
    parts = [t if isinstance(t, str) else const_label(t) for t in a.args]
    return f"{a.rel}({', '.join(parts)})"


def print_query(q: ConjunctiveQuery) -> str:
    head = f"q({', '.join(q.answer_vars)})"
    return f"{head} <- {', '.join(_atom_text(a) for a in q.atoms)}."


def print_tgd(t: TGD) -> str:
    body = ", ".join(_atom_text(a) for a in t.body) if t.body else "true"
    ex = sorted(t.existential_vars)
    head = ", ".join(_atom_text(a) for a in t.head)
    if ex:
        return f"{body} -> exists {', '.join(ex)} . {head}."
    return f"{body} -> {head}."


def print_ontology(o: Ontology) -> str:
    return "\n".join(print_tgd(t) for t in o.tgds)
