"""Meaning postulates: authoring format, loader, and Horn compilation.

A knowledge base holds guarded nested-quantifier rules.  Each rule is a
chain of universally quantified guard blocks ending in a consequent that
may introduce existential witnesses:

    rule on_rule (en):
      all B C: [on(B, C)]
      all D E: [view(B, E), type(E, D)]
      ...
      => touching(H, I), located(B, C).

``word`` declarations are sugar for a one-guard rule over the word's
unary predicate; they accept either plain literals or the compact
attribute phrases ``type <name>``, ``embedding2``/``embedding3`` and a
trailing ``orientable``:

    word floor (en): type physical, embedding2 orientable.

expands to: for all B with floor(B), type(B, physical) and there is a C
with embedding(C, B, r2) and orientable(C).

For backward chaining every rule is also compiled ("flattened") into one
Horn clause per consequent literal, whose body is the concatenation of
the guards from the outside in.  Existential variables stay in the head
and are Skolemized only on forward use.

File format (UTF-8, ``#`` starts a comment):

    decl      := partition | subtype | equiv | rule | word ;
    partition := "partition" NAME "." ;
    subtype   := "type" NAME "<" NAME "." ;
    equiv     := "equiv" NAME "~" NAME "." ;
    rule      := "rule" NAME "(" ("en"|"ar"|"both") "):" block ;
    block     := "all" vars ":" "[" litlist "]" block
               | "=>" ["some" vars ":"] litlist "." ;
    word      := "word" NAME "(" ("en"|"ar") "):" litlist "." ;

Literals are prefix terms in the canonical form of :mod:`prepdiag.terms`
(``lam`` for lambda, ``and`` for conjunction, ``#<n>`` entity ids).
Arabic predicate names are ``<root>_<gloss>`` (``ktb_office``), using the
gloss to keep words with a shared root apart.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Union

from .errors import ArityError, KbError, ScopingError
from .lattice import TypeLattice
from .terms import Compound, Const, Entity, Literal, Term, Var, canon_literal

COMPAT = "compat"  # evaluated against the lattice, never stored


@dataclass(frozen=True)
class Consequent:
    existential_vars: tuple[str, ...]
    literals: tuple[Literal, ...]


@dataclass(frozen=True)
class ForallBlock:
    variables: tuple[str, ...]
    guard: tuple[Literal, ...]
    child: "RuleNode"


RuleNode = Union[ForallBlock, Consequent]


@dataclass(frozen=True)
class GuardedRule:
    name: str
    language: str  # en | ar | both
    body: RuleNode
    is_word_rule: bool = False

    def guard_levels(self) -> list[ForallBlock]:
        out = []
        node = self.body
        while isinstance(node, ForallBlock):
            out.append(node)
            node = node.child
        return out

    def consequent(self) -> Consequent:
        node = self.body
        while isinstance(node, ForallBlock):
            node = node.child
        return node

    def universal_vars(self) -> list[str]:
        out: list[str] = []
        for level in self.guard_levels():
            out.extend(level.variables)
        return out

    def guard_literals(self) -> list[Literal]:
        out: list[Literal] = []
        for level in self.guard_levels():
            out.extend(level.guard)
        return out


@dataclass(frozen=True)
class HornClause:
    head: Literal
    body: tuple[Literal, ...]
    source_rule: str
    existential_vars: tuple[str, ...]
    language: str

    @property
    def name(self) -> str:
        return f"{self.source_rule}:{self.head.predicate}"


def flatten(rule: GuardedRule) -> list[HornClause]:
    """One Horn clause per consequent literal; body keeps guard order."""
    body = tuple(rule.guard_literals())
    cons = rule.consequent()
    return [
        HornClause(lit, body, rule.name, cons.existential_vars, rule.language)
        for lit in cons.literals
    ]


LOCATED = "located"


class KnowledgeBase:
    def __init__(
        self,
        rules: list[GuardedRule],
        lattice: TypeLattice,
        equivalences: list[tuple[str, str]],
    ):
        self.rules = rules
        self.lattice = lattice
        self.equivalences = equivalences
        self.horn: list[HornClause] = [c for r in rules for c in flatten(r)]
        self.arities: dict[str, int] = {}
        self._validate()
        self._equiv_map: dict[str, str] = {}
        for a, b in equivalences:
            self._equiv_map[a] = b
            self._equiv_map[b] = a
        self._clause_index: dict[str, list[HornClause]] = {}
        for c in self.horn:
            self._clause_index.setdefault(c.head.predicate, []).append(c)

    # -- derived views ------------------------------------------------

    @property
    def lexical_world(self) -> list[GuardedRule]:
        return [r for r in self.rules if r.is_word_rule]

    def word_predicates(self) -> dict[str, str]:
        """Unary word predicate -> language."""
        out = {}
        for r in self.lexical_world:
            level = r.guard_levels()[0]
            out[level.guard[0].predicate] = r.language
        return out

    def preposition_predicates(self) -> dict[str, str]:
        """Preposition predicate -> language, from the located rules."""
        out = {}
        for r in self.rules:
            if any(lit.predicate == LOCATED for lit in r.consequent().literals):
                first = r.guard_levels()[0].guard[0]
                out[first.predicate] = r.language

        return out

    def equivalent(self, predicate: str) -> str | None:
        return self._equiv_map.get(predicate)

    def clauses_for(self, predicate: str, language: str | None = None) -> list[HornClause]:
        clauses = self._clause_index.get(predicate, [])
        if language is None:
            return list(clauses)
        return [c for c in clauses if c.language in (language, "both")]

    def knows_predicate(self, predicate: str) -> bool:
        return predicate in self.arities

    # -- validation ---------------------------------------------------

    def _note_arity(self, lit: Literal, where: str) -> None:
        seen = self.arities.get(lit.predicate)
        if seen is None:
            self.arities[lit.predicate] = len(lit.args)
        elif seen != len(lit.args):
            raise ArityError(
                f"{lit.predicate!r} used with arity {len(lit.args)} in {where}, previously {seen}"
            )

    def _validate(self) -> None:
        names = set()
        for rule in self.rules:
            if rule.name in names:
                raise KbError(f"duplicate rule name {rule.name!r}")
            names.add(rule.name)
            scope: set[str] = set()
            node = rule.body
            while isinstance(node, ForallBlock):
                for v in node.variables:
                    if v in scope:
                        raise KbError(f"rule {rule.name!r}: variable {v} declared twice")
                    scope.add(v)
                for lit in node.guard:
                    self._check_literal(rule, lit, scope)
                node = node.child
            for v in node.existential_vars:
                if v in scope:
                    raise KbError(f"rule {rule.name!r}: variable {v} declared twice")
                scope.add(v)
            for lit in node.literals:
                self._check_literal(rule, lit, scope)
            # located rules must open with exactly the preposition literal,
            # which is what lets abduction key on the preposition actually used
            if any(lit.predicate == LOCATED for lit in node.literals):
                first = rule.guard_levels()[0]
                if len(first.guard) != 1:
                    raise KbError(
                        f"rule {rule.name!r} concludes {LOCATED} but its outermost "
                        f"guard has {len(first.guard)} literals (want exactly 1)"
                    )

    def _check_literal(self, rule: GuardedRule, lit: Literal, scope: set[str]) -> None:
        self._note_arity(lit, f"rule {rule.name!r}")
        todo: list[Term] = list(lit.args)
        while todo:
            t = todo.pop()
            if isinstance(t, Var) and t.name not in scope:
                raise ScopingError(f"rule {rule.name!r}: unbound variable {t.name}")
            if isinstance(t, Compound):
                todo.extend(t.args)

    # -- serialization ------------------------------------------------

    def serialize(self) -> str:
        lines: list[str] = []
        for p in self.lattice.partitions:
            lines.append(f"partition {p}.")
        for t in self.lattice.types:
            if t not in self.lattice.partitions:
                parent = self.lattice._parent[t]
                lines.append(f"type {t} < {parent}.")
        for a, b in self.equivalences:
            lines.append(f"equiv {a} ~ {b}.")
        for rule in self.rules:
            lines.append(serialize_rule(rule))
        return "\n".join(lines) + "\n"


def serialize_rule(rule: GuardedRule) -> str:
    parts = [f"rule {rule.name} ({rule.language}):"]
    for level in rule.guard_levels():
        lits = ", ".join(canon_literal(l) for l in level.guard)
        parts.append(f"  all {' '.join(level.variables)}: [{lits}]")
    cons = rule.consequent()
    lits = ", ".join(canon_literal(l) for l in cons.literals)
    if cons.existential_vars:
        parts.append(f"  => some {' '.join(cons.existential_vars)}: {lits}.")
    else:
        parts.append(f"  => {lits}.")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_KB_TOKEN = re.compile(r"(=>|[()\[\]:,.<~]|[A-Za-z_][A-Za-z0-9_]*|[0-9]+|#[A-Za-z0-9_]+)")
_WS = re.compile(r"\s+")


class _KbParser:
    def __init__(self, source: str):
        self.tokens: list[tuple[str, int, int]] = []  # (token, line, col)
        for ln, line in enumerate(source.splitlines(), start=1):
            body = line.split("#", 1)[0]
            pos = 0
            while pos < len(body):
                ws = _WS.match(body, pos)
                if ws:
                    pos = ws.end()
                    continue
                m = _KB_TOKEN.match(body, pos)
                if not m:
                    raise KbError(f"unexpected character {body[pos]!r}", ln, pos + 1)
                self.tokens.append((m.group(1), ln, pos + 1))
                pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def loc(self) -> tuple[int | None, int | None]:
        if self.i < len(self.tokens):
            _, ln, col = self.tokens[self.i]
            return ln, col
        if self.tokens:
            _, ln, col = self.tokens[-1]
            return ln, col
        return None, None

    def take(self, expect: str | None = None) -> str:
        if self.i >= len(self.tokens):
            ln, col = self.loc()
            raise KbError("unexpected end of file", ln, col)
        tok, ln, col = self.tokens[self.i]
        if expect is not None and tok != expect:
            raise KbError(f"expected {expect!r}, found {tok!r}", ln, col)
        self.i += 1
        return tok

    def fail(self, message: str) -> KbError:
        ln, col = self.loc()
        return KbError(message, ln, col)

    # -- terms and literals --------------------------------------------

    def parse_term(self, scope: set[str]) -> Term:
        tok = self.take()
        if tok.startswith("#"):
            return Entity(tok[1:])
        if not re.match(r"^[A-Za-z_0-9]", tok):
            raise self.fail(f"expected a term, found {tok!r}")
        if self.peek() == "(":
            self.take("(")
            if tok == "lam":
                param = self.take()
                self.take(",")
                body = self.parse_term(scope | {param})
                self.take(")")
                from .terms import Lambda

                return Lambda(param, body)
            args = []
            if self.peek() != ")":
                args.append(self.parse_term(scope))
                while self.peek() == ",":
                    self.take(",")
                    args.append(self.parse_term(scope))
            self.take(")")
            if tok == "ref":
                from .terms import Lambda, Ref

                if len(args) != 1 or not isinstance(args[0], Lambda):
                    raise self.fail("ref takes exactly one lam(...)")
                return Ref(args[0])
            return Compound(tok, tuple(args))
        # a single capital letter is a variable even when undeclared, so a
        # forgotten quantifier surfaces as a scoping error, not a constant
        if tok in scope or re.match(r"^[A-Z][0-9]*$", tok):
            return Var(tok)
        return Const(tok)

    def parse_literal(self, scope: set[str]) -> Literal:
        t = self.parse_term(scope)
        positive = True
        if isinstance(t, Compound) and t.functor == "not" and len(t.args) == 1:
            positive = False
            t = t.args[0]
        if isinstance(t, Const):
            return Literal(t.name, (), positive)
        if not isinstance(t, Compound):
            raise self.fail("expected a literal")
        return Literal(t.functor, t.args, positive)

    def parse_litlist(self, scope: set[str], stop: tuple[str, ...]) -> list[Literal]:
        lits = [self.parse_literal(scope)]
        while self.peek() == ",":
            self.take(",")
            lits.append(self.parse_literal(scope))
        if self.peek() not in stop:
            raise self.fail(f"expected one of {stop}")
        return lits

    def parse_vars(self) -> list[str]:
        out = []
        while self.peek() not in (":", None):
            out.append(self.take())
        if not out:
            raise self.fail("expected at least one variable")
        return out

    # -- declarations ---------------------------------------------------

    def parse_rule_body(self, scope: set[str]) -> RuleNode:
        if self.peek() == "all":
            self.take("all")
            variables = tuple(self.parse_vars())
            self.take(":")
            self.take("[")
            guard = tuple(self.parse_litlist(set(scope) | set(variables), stop=("]",)))
            self.take("]")
            child = self.parse_rule_body(scope | set(variables))
            return ForallBlock(variables, guard, child)
        self.take("=>")
        existential: tuple[str, ...] = ()
        if self.peek() == "some":
            self.take("some")
            existential = tuple(self.parse_vars())
            self.take(":")
        lits = tuple(self.parse_litlist(scope | set(existential), stop=(".",)))
        self.take(".")
        return Consequent(existential, lits)

    def parse_word(self) -> GuardedRule:
        surface = self.take()
        self.take("(")
        language = self.take()
        if language not in ("en", "ar"):
            raise self.fail("word language must be en or ar")
        self.take(")")
        self.take(":")
        subject = "B"
        guard = Literal(surface, (Var(subject),))
        existentials: list[str] = []
        literals: list[Literal] = []
        next_witness = iter("CDEFGHIJK")

        while True:
            tok = self.peek()
            if tok is None:
                raise self.fail("unterminated word declaration")
            if tok == "type" and self.i + 1 < len(self.tokens) and self.tokens[self.i + 1][0] != "(":
                self.take()
                tname = self.take()
                literals.append(Literal("type", (Var(subject), Const(tname))))
            elif tok in ("embedding2", "embedding3"):
                self.take()
                space = "r2" if tok == "embedding2" else "r3"
                w = next(next_witness)
                existentials.append(w)
                literals.append(Literal("embedding", (Var(w), Var(subject), Const(space))))
                if self.peek() == "orientable":
                    self.take()
                    literals.append(Literal("orientable", (Var(w),)))
            else:
                literals.append(self.parse_literal({subject, *existentials}))
            if self.peek() == ",":
                self.take(",")
                continue
            self.take(".")
            break

        body = ForallBlock((subject,), (guard,), Consequent(tuple(existentials), tuple(literals)))
        return GuardedRule(f"word_{surface}", language, body, is_word_rule=True)

    def parse_kb(self) -> KnowledgeBase:
        lattice = TypeLattice()
        rules: list[GuardedRule] = []
        equivalences: list[tuple[str, str]] = []
        while self.peek() is not None:
            tok = self.take()
            if tok == "partition":
                lattice.add_partition(self.take())
                self.take(".")
            elif tok == "type":
                child = self.take()
                self.take("<")
                parent = self.take()
                self.take(".")
                lattice.add_subtype(child, parent)
            elif tok == "equiv":
                a = self.take()
                self.take("~")
                b = self.take()
                self.take(".")
                equivalences.append((a, b))
            elif tok == "rule":
                name = self.take()
                self.take("(")
                language = self.take()
                if language not in ("en", "ar", "both"):
                    raise self.fail("rule language must be en, ar or both")
                self.take(")")
                self.take(":")
                rules.append(GuardedRule(name, language, self.parse_rule_body(set())))
            elif tok == "word":
                rules.append(self.parse_word())
            else:
                raise self.fail(f"unknown declaration {tok!r}")
        return KnowledgeBase(rules, lattice, equivalences)


def load_kb(source: str) -> KnowledgeBase:
    """Parse and validate a knowledge base from its textual form."""
    return _KbParser(source).parse_kb()


@lru_cache(maxsize=1)
def builtin_kb_text() -> str:
    return resources.files("prepdiag.data").joinpath("builtin.kb").read_text("utf-8")


def builtin_kb() -> KnowledgeBase:
    return load_kb(builtin_kb_text())
