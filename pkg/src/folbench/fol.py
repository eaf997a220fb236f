"""Abstract syntax, concrete syntax and structural utilities for the FOL fragment.

The fragment has unary predicates over named constants, the connectives
``- & | ^ ->`` and at most one prenex quantifier (``all x (...)`` or
``exists x (...)``).  In term position an
identifier starting with an uppercase letter is a constant and anything else
is a variable.  Predicate identifiers are unrestricted here so that skeleton
placeholders such as ``F7`` parse; realized predicates must match
``PREDICATE_RE``.

Grammar::

    formula  := quant | impl
    quant    := ("all" | "exists") IDENT "(" impl ")"
    impl     := xor ("->" impl)?
    xor      := or ("^" or)*
    or       := and ("|" and)*
    and      := unary ("&" unary)*
    unary    := "-" unary | atom | "(" impl ")"
    atom     := IDENT "(" IDENT ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Union

PREDICATE_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
KEYWORDS = frozenset({"all", "exists"})


class FolError(Exception):
    pass


class ParseError(FolError):
    """Malformed formula text.  ``offset`` is a byte offset into the input."""

    def __init__(self, message: str, offset: int, expected: Iterable[str] = ()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class EmptyDomain(FolError):
    pass


# --------------------------------------------------------------------- terms


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Const, Var]


def make_term(name: str) -> Term:
    return Const(name) if name[:1].isupper() else Var(name)


# ------------------------------------------------------------------ formulas


class Formula:
    """Base class of all formula nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)

    def __invert__(self) -> "Formula":
        return Not(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __xor__(self, other: "Formula") -> "Formula":
        return Xor(self, other)

    def __rshift__(self, other: "Formula") -> "Formula":
        return Implies(self, other)


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    predicate: str
    term: Term


@dataclass(frozen=True, slots=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Xor(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class ForAll(Formula):
    var: str
    body: Formula


@dataclass(frozen=True, slots=True)
class Exists(Formula):
    var: str
    body: Formula


BINARY = (And, Or, Implies, Xor)
QUANTIFIERS = (ForAll, Exists)


def atom(predicate: str, term: str | Term) -> Atom:
    """Build an atom, reading ``term`` as a constant if capitalised."""
    if isinstance(term, str):
        term = make_term(term)
    return Atom(predicate, term)


def conjoin(parts: Iterable[Formula]) -> Formula:
    items = list(parts)
    if not items:
        raise ValueError("cannot conjoin zero formulas")
    out = items[0]
    for f in items[1:]:
        out = And(out, f)
    return out


def disjoin(parts: Iterable[Formula]) -> Formula:
    items = list(parts)
    if not items:
        raise ValueError("cannot disjoin zero formulas")
    out = items[0]
    for f in items[1:]:
        out = Or(out, f)
    return out


# ------------------------------------------------------------------ tokenizer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<op>[-&|^()])|(?P<ident>[A-Za-z_][A-Za-z0-9_]*))"
)


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # "ident", one of the operator strings, or "eof"
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    raw = text.encode("utf-8")
    tokens: list[_Token] = []
    pos = 0
    # offsets are reported in bytes; the grammar is ASCII so char == byte
    # up to the first non-ASCII character, which is always an error.
    while True:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:]
            if not rest.strip():
                break
            skipped = len(rest) - len(rest.lstrip())
            offset = len(text[: pos + skipped].encode("utf-8"))
            raise ParseError(f"unexpected character {rest.lstrip()[0]!r}", offset)
        if m.group("arrow"):
            kind, val = "->", "->"
        elif m.group("op"):
            kind = val = m.group("op")
        else:
            kind, val = "ident", m.group("ident")
        start = m.start(m.lastgroup)
        tokens.append(_Token(kind, val, len(text[:start].encode("utf-8"))))
        pos = m.end()
    tokens.append(_Token("eof", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> _Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def expect(self, kind: str) -> _Token:
        tok = self.tok
        if tok.kind != kind:
            raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.offset, {kind})
        self.i += 1
        return tok

    def formula(self) -> Formula:
        tok = self.tok
        if tok.kind == "ident" and tok.text in KEYWORDS and self.peek().kind == "ident":
            self.i += 1
            var_tok = self.expect("ident")
            var = var_tok.text
            if not var[:1].islower() or var in KEYWORDS:
                raise ParseError(f"bad quantified variable {var!r}", var_tok.offset, {"variable"})
            self.expect("(")
            body = self.impl()
            self.expect(")")
            free = _variables(body) - {var}
            if free:
                raise ParseError(
                    f"free variable {sorted(free)[0]!r} inside quantifier", var_tok.offset
                )
            node: Formula = ForAll(var, body) if tok.text == "all" else Exists(var, body)
        else:
            node = self.impl()
            if len(_variables(node)) > 1:
                raise ParseError("more than one distinct variable", tok.offset)
        if self.tok.kind != "eof":
            raise ParseError(f"trailing input {self.tok.text!r}", self.tok.offset, {"eof"})
        return node

    def impl(self) -> Formula:
        left = self.xor()
        if self.tok.kind == "->":
            self.i += 1
            return Implies(left, self.impl())
        return left

    def _left_assoc(self, op: str, cls, sub) -> Formula:
        node = sub()
        while self.tok.kind == op:
            self.i += 1
            node = cls(node, sub())
        return node

    def xor(self) -> Formula:
        return self._left_assoc("^", Xor, self.or_)

    def or_(self) -> Formula:
        return self._left_assoc("|", Or, self.and_)

    def and_(self) -> Formula:
        return self._left_assoc("&", And, self.unary)

    def unary(self) -> Formula:
        tok = self.tok
        if tok.kind == "-":
            self.i += 1
            return Not(self.unary())
        if tok.kind == "(":
            self.i += 1
            inner = self.impl()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            if tok.text in KEYWORDS:
                raise ParseError("quantifiers are only allowed at top level", tok.offset)
            self.i += 1
            self.expect("(")
            arg = self.expect("ident")
            if arg.text in KEYWORDS:
                raise ParseError(f"reserved word {arg.text!r} used as a term", arg.offset)
            self.expect(")")
            return Atom(tok.text, make_term(arg.text))
        raise ParseError(
            f"unexpected {tok.text or 'end of input'!r}", tok.offset, {"-", "(", "predicate"}
        )


@lru_cache(maxsize=65536)
def parse_formula(text: str) -> Formula:
    """Parse ``text`` into a :class:`Formula`, raising :class:`ParseError`."""
    return _Parser(text).formula()


# ------------------------------------------------------------------- printer

_PREC = {Implies: 1, Xor: 2, Or: 3, And: 4}
_SYMBOL = {Implies: "->", Xor: "^", Or: "|", And: "&", Not: "-", ForAll: "all ", Exists: "exists "}
_UNICODE = {Implies: "→", Xor: "⊕", Or: "∨", And: "∧", Not: "¬", ForAll: "∀", Exists: "∃"}


def _fmt(f: Formula, sym: Mapping = _SYMBOL) -> str:
    if isinstance(f, Atom):
        return f"{f.predicate}({f.term.name})"
    if isinstance(f, Not):
        inner = _fmt(f.arg, sym)
        return sym[Not] + (inner if isinstance(f.arg, (Atom, Not)) else f"({inner})")
    if isinstance(f, BINARY):
        cls = type(f)
        left, right = _fmt(f.left, sym), _fmt(f.right, sym)
        # same-operator left chains print flat; any other compound operand
        # is parenthesised
        if isinstance(f.left, BINARY) and not (type(f.left) is cls and cls is not Implies):
            left = f"({left})"
        if isinstance(f.right, BINARY):
            right = f"({right})"
        return f"{left} {sym[cls]} {right}"
    if isinstance(f, QUANTIFIERS):
        return f"{sym[type(f)]}{f.var} ({_fmt(f.body, sym)})"
    raise TypeError(f"not a formula: {f!r}")


def format_formula(f: Formula) -> str:
    """Canonical concrete syntax; ``parse_formula`` inverts it exactly."""
    return _fmt(f)


def format_unicode(f: Formula) -> str:
    """Display form with logical symbols, as shown to language models."""
    return _fmt(f, _UNICODE)


# --------------------------------------------------------------- traversal


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.arg)
    elif isinstance(f, BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, QUANTIFIERS):
        yield from subformulas(f.body)


def atoms(f: Formula) -> set[Atom]:
    return {g for g in subformulas(f) if isinstance(g, Atom)}


def predicates(f: Formula) -> set[str]:
    return {a.predicate for a in atoms(f)}


def constants(f: Formula) -> set[str]:
    return {a.term.name for a in atoms(f) if isinstance(a.term, Const)}


def _variables(f: Formula) -> set[str]:
    return {a.term.name for a in atoms(f) if isinstance(a.term, Var)}


def free_variables(f: Formula) -> set[str]:
    if isinstance(f, QUANTIFIERS):
        return free_variables(f.body) - {f.var}
    return _variables(f)


def is_closed(f: Formula) -> bool:
    return not free_variables(f)


def is_quantified(f: Formula) -> bool:
    return isinstance(f, QUANTIFIERS)


def is_literal(f: Formula) -> bool:
    return isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.arg, Atom))


def is_ground_literal(f: Formula) -> bool:
    return is_literal(f) and not _variables(f)


def literal_atom(f: Formula) -> Atom:
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not) and isinstance(f.arg, Atom):
        return f.arg
    raise ValueError(f"not a literal: {format_formula(f)}")


def literal(a: Atom, positive: bool) -> Formula:
    return a if positive else Not(a)


def negate(f: Formula) -> Formula:
    """Negation that cancels an outer ``Not`` instead of stacking one."""
    return f.arg if isinstance(f, Not) else Not(f)


def map_atoms(f: Formula, fn) -> Formula:
    """Rebuild ``f`` with every atom replaced by ``fn(atom)``."""
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, Not):
        return Not(map_atoms(f.arg, fn))
    if isinstance(f, BINARY):
        return type(f)(map_atoms(f.left, fn), map_atoms(f.right, fn))
    if isinstance(f, QUANTIFIERS):
        return type(f)(f.var, map_atoms(f.body, fn))
    raise TypeError(f"not a formula: {f!r}")


def rename_predicates(f: Formula, mapping: Mapping[str, str]) -> Formula:
    return map_atoms(f, lambda a: Atom(mapping.get(a.predicate, a.predicate), a.term))


# ------------------------------------------------------- substitution etc.


def substitute(f: Formula, var: str, c: str | Const) -> Formula:
    """Replace free occurrences of ``var`` in ``f`` by the constant ``c``.

    A quantifier binding ``var`` shadows it, so its body is left alone.
    """
    const = Const(c) if isinstance(c, str) else c
    if isinstance(f, QUANTIFIERS) and f.var == var:
        return f
    return map_atoms(
        f, lambda a: Atom(a.predicate, const) if a.term == Var(var) else a
    )


def instantiate(f: Formula, c: str | Const) -> Formula:
    """Strip the top-level quantifier of ``f`` and bind its variable to ``c``."""
    if not isinstance(f, QUANTIFIERS):
        return f
    return substitute(f.body, f.var, c)


def generalize(f: Formula, c: str | Const, var: str = "x") -> Formula:
    """Universally close ``f`` over the constant ``c`` (inverse of instantiate)."""
    const = Const(c) if isinstance(c, str) else c
    body = map_atoms(f, lambda a: Atom(a.predicate, Var(var)) if a.term == const else a)
    return ForAll(var, body)


def _domain_names(domain: Iterable[str | Const]) -> list[str]:
    names = sorted({d.name if isinstance(d, Const) else d for d in domain})
    if not names:
        raise EmptyDomain("grounding needs at least one constant")
    return names


def ground(f: Formula, domain: Iterable[str | Const]) -> Formula:
    """Expand a quantifier into a conjunction/disjunction over ``domain``.

    Instances are ordered by constant name, so the result is deterministic.
    """
    names = _domain_names(domain)
    if isinstance(f, ForAll):
        return conjoin(substitute(f.body, f.var, n) for n in names)
    if isinstance(f, Exists):
        return disjoin(substitute(f.body, f.var, n) for n in names)
    return f


def to_nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form over ``& | -``; ``->`` and ``^`` are expanded."""
    if isinstance(f, Atom):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return to_nnf(f.arg, not positive)
    if isinstance(f, And):
        l, r = to_nnf(f.left, positive), to_nnf(f.right, positive)
        return And(l, r) if positive else Or(l, r)
    if isinstance(f, Or):
        l, r = to_nnf(f.left, positive), to_nnf(f.right, positive)
        return Or(l, r) if positive else And(l, r)
    if isinstance(f, Implies):
        return to_nnf(Or(Not(f.left), f.right), positive)
    if isinstance(f, Xor):
        a, b = f.left, f.right
        if positive:
            return And(Or(to_nnf(a), to_nnf(b)), Or(to_nnf(a, False), to_nnf(b, False)))
        return Or(And(to_nnf(a), to_nnf(b)), And(to_nnf(a, False), to_nnf(b, False)))
    if isinstance(f, ForAll):
        body = to_nnf(f.body, positive)
        return ForAll(f.var, body) if positive else Exists(f.var, body)
    if isinstance(f, Exists):
        body = to_nnf(f.body, positive)
        return Exists(f.var, body) if positive else ForAll(f.var, body)
    raise TypeError(f"not a formula: {f!r}")


def evaluate(
    f: Formula, valuation: Mapping[Atom, bool], domain: Iterable[str] | None = None
) -> bool:
    """Classical truth value of a closed formula; missing atoms read as False.

    Quantifiers range over ``domain`` by instantiation.
    """
    if isinstance(f, Atom):
        return bool(valuation.get(f, False))
    if isinstance(f, Not):
        return not evaluate(f.arg, valuation, domain)
    if isinstance(f, And):
        return evaluate(f.left, valuation, domain) and evaluate(f.right, valuation, domain)
    if isinstance(f, Or):
        return evaluate(f.left, valuation, domain) or evaluate(f.right, valuation, domain)
    if isinstance(f, Implies):
        return (not evaluate(f.left, valuation, domain)) or evaluate(f.right, valuation, domain)
    if isinstance(f, Xor):
        return evaluate(f.left, valuation, domain) != evaluate(f.right, valuation, domain)
    if isinstance(f, QUANTIFIERS):
        if domain is None:
            raise EmptyDomain("quantified formula evaluated without a domain")
        names = _domain_names(domain)
        results = (evaluate(substitute(f.body, f.var, n), valuation, domain) for n in names)
        return all(results) if isinstance(f, ForAll) else any(results)
    raise TypeError(f"not a formula: {f!r}")
