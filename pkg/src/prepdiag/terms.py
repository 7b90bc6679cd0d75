"""Logical terms and the operations the rest of the engine leans on.

A term is one of:

* ``Var``      -- a unification variable (``B``, ``C1``),
* ``Const``    -- a plain symbol (``physical``, ``r3``, ``2``),
* ``Entity``   -- a discourse/Skolem constant rendered ``#3228`` or ``#user``,
* ``Compound`` -- a functor applied to arguments (``office(#1)``),
* ``App``      -- application of an arbitrary term (usually a ``Lambda``)
  to an argument; only ever a transient shape during semantic composition,
* ``Lambda``   -- a one-parameter abstraction (``lam(X, office(X))``),
* ``Ref``      -- a referring term wrapping a one-parameter ``Lambda``.

The canonical textual form is prefix notation with ``lam`` for lambda,
``and`` for conjunction, ``app`` for application and ``#<n>`` for entity
ids.  Everything here is immutable; the only mutable state in the module
is the per-session entity counter.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Iterator

from .errors import BetaOverflowError, PrepdiagFault


@dataclass(frozen=True)
class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    name: str


@dataclass(frozen=True)
class Entity(Term):
    ident: str  # "3228" or "user"

    def render(self) -> str:
        return f"#{self.ident}"


@dataclass(frozen=True)
class Compound(Term):
    functor: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class App(Term):
    func: Term
    arg: Term


@dataclass(frozen=True)
class Lambda(Term):
    param: str
    body: Term


@dataclass(frozen=True)
class Ref(Term):
    restriction: Lambda


USER_ENTITY = Entity("user")


def conj(*parts: Term) -> Term:
    """Right-nested binary conjunction."""
    if not parts:
        raise PrepdiagFault("empty conjunction")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Compound("and", (p, out))
    return out


def conjuncts(t: Term) -> list[Term]:
    if isinstance(t, Compound) and t.functor == "and" and len(t.args) == 2:
        return conjuncts(t.args[0]) + conjuncts(t.args[1])
    return [t]


# ---------------------------------------------------------------------------
# Literals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    """A predicate applied to terms.  Saturation only ever stores positive
    ground literals; the polarity flag exists for closure checks."""

    predicate: str
    args: tuple[Term, ...]
    positive: bool = True

    def negate(self) -> "Literal":
        return Literal(self.predicate, self.args, not self.positive)

    def is_ground(self) -> bool:
        return all(not free_vars(a) for a in self.args)

    def entities(self) -> list[Entity]:
        out: list[Entity] = []
        for a in self.args:
            out.extend(entities_of(a))
        return out


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------

def free_vars(t: Term, bound: frozenset[str] = frozenset()) -> set[str]:
    if isinstance(t, Var):
        return set() if t.name in bound else {t.name}
    if isinstance(t, Compound):
        out: set[str] = set()
        for a in t.args:
            out |= free_vars(a, bound)
        return out
    if isinstance(t, App):
        return free_vars(t.func, bound) | free_vars(t.arg, bound)
    if isinstance(t, Lambda):
        return free_vars(t.body, bound | {t.param})
    if isinstance(t, Ref):
        return free_vars(t.restriction, bound)
    return set()


def bound_vars(t: Term) -> set[str]:
    if isinstance(t, Compound):
        out: set[str] = set()
        for a in t.args:
            out |= bound_vars(a)
        return out
    if isinstance(t, App):
        return bound_vars(t.func) | bound_vars(t.arg)
    if isinstance(t, Lambda):
        return {t.param} | bound_vars(t.body)
    if isinstance(t, Ref):
        return bound_vars(t.restriction)
    return set()


def entities_of(t: Term) -> list[Entity]:
    if isinstance(t, Entity):
        return [t]
    if isinstance(t, Compound):
        out: list[Entity] = []
        for a in t.args:
            out.extend(entities_of(a))
        return out
    if isinstance(t, App):
        return entities_of(t.func) + entities_of(t.arg)
    if isinstance(t, Lambda):
        return entities_of(t.body)
    if isinstance(t, Ref):
        return entities_of(t.restriction)
    return []


_FRESH_LOCK = threading.Lock()
_FRESH_N = 0


def _fresh_name(stem: str) -> str:
    global _FRESH_N
    with _FRESH_LOCK:
        _FRESH_N += 1
        n = _FRESH_N
    stem = stem.rstrip("0123456789") or "X"
    return f"{stem}{n}"


def substitute(t: Term, mapping: dict[str, Term]) -> Term:
    """Capture-avoiding substitution of free variables."""
    if not mapping:
        return t
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(substitute(a, mapping) for a in t.args))
    if isinstance(t, App):
        return App(substitute(t.func, mapping), substitute(t.arg, mapping))
    if isinstance(t, Lambda):
        inner = {k: v for k, v in mapping.items() if k != t.param}
        if not inner:
            return t
        # rename the binder if it would capture a free variable of an image
        if any(t.param in free_vars(v) for v in inner.values()):
            fresh = _fresh_name(t.param)
            body = substitute(t.body, {t.param: Var(fresh)})
            return Lambda(fresh, substitute(body, inner))
        return Lambda(t.param, substitute(t.body, inner))
    if isinstance(t, Ref):
        r = substitute(t.restriction, mapping)
        assert isinstance(r, Lambda)
        return Ref(r)
    return t


def rename_bound(t: Term, namer=None) -> Term:
    """Freshen every binder so distinct occurrences never share names.

    ``namer(stem) -> str`` may be supplied for reproducible names (the
    chart parser uses a per-parse counter); the default draws from the
    process-wide counter.
    """
    fresh = namer or _fresh_name
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(rename_bound(a, namer) for a in t.args))
    if isinstance(t, App):
        return App(rename_bound(t.func, namer), rename_bound(t.arg, namer))
    if isinstance(t, Lambda):
        new = fresh(t.param)
        return Lambda(new, rename_bound(substitute(t.body, {t.param: Var(new)}), namer))
    if isinstance(t, Ref):
        r = rename_bound(t.restriction, namer)
        assert isinstance(r, Lambda)
        return Ref(r)
    return t


# ---------------------------------------------------------------------------
# Beta reduction
# ---------------------------------------------------------------------------

DEFAULT_REDUCTION_CAP = 10_000


def redex_paths(t: Term, path: tuple[int, ...] = ()) -> Iterator[tuple[int, ...]]:
    """Paths (child-index sequences) of every redex, outermost first."""
    if isinstance(t, App):
        if isinstance(t.func, Lambda):
            yield path
        yield from redex_paths(t.func, path + (0,))
        yield from redex_paths(t.arg, path + (1,))
    elif isinstance(t, Compound):
        for i, a in enumerate(t.args):
            yield from redex_paths(a, path + (i,))
    elif isinstance(t, Lambda):
        yield from redex_paths(t.body, path + (0,))
    elif isinstance(t, Ref):
        yield from redex_paths(t.restriction, path + (0,))


def contract(t: Term, path: tuple[int, ...]) -> Term:
    """Contract the redex at ``path`` (as produced by :func:`redex_paths`)."""
    if not path:
        if isinstance(t, App) and isinstance(t.func, Lambda):
            return substitute(t.func.body, {t.func.param: t.arg})
        raise PrepdiagFault(f"no redex at path in {canon(t)}")
    i, rest = path[0], path[1:]
    if isinstance(t, App):
        if i == 0:
            return App(contract(t.func, rest), t.arg)
        return App(t.func, contract(t.arg, rest))
    if isinstance(t, Compound):
        args = list(t.args)
        args[i] = contract(args[i], rest)
        return Compound(t.functor, tuple(args))
    if isinstance(t, Lambda):
        return Lambda(t.param, contract(t.body, rest))
    if isinstance(t, Ref):
        r = contract(t.restriction, rest)
        assert isinstance(r, Lambda)
        return Ref(r)
    raise PrepdiagFault("bad redex path")


def beta_reduce(t: Term, cap: int = DEFAULT_REDUCTION_CAP) -> Term:
    """Normal-order reduction to a redex-free term.

    The step cap guards against annotations that loop; hitting it is a
    fault, not a learner-level outcome.
    """
    steps = 0
    while True:
        try:
            path = next(redex_paths(t))
        except StopIteration:
            return t
        t = contract(t, path)
        steps += 1
        if steps > cap:
            raise BetaOverflowError(f"no normal form within {cap} steps")


def apply_term(f: Term, x: Term) -> Term:
    return App(f, x)


# ---------------------------------------------------------------------------
# Alpha equivalence
# ---------------------------------------------------------------------------

def alpha_equal(a: Term, b: Term, match_entities: bool = False) -> bool:
    """Equality up to renaming of bound variables.

    With ``match_entities`` a bijection between entity ids is accepted
    as well, which is what model isomorphism tests need.
    """
    fwd: dict[str, str] = {}
    bwd: dict[str, str] = {}

    def walk(x: Term, y: Term, env: tuple[tuple[str, str], ...]) -> bool:
        if isinstance(x, Var) and isinstance(y, Var):
            for (px, py) in reversed(env):
                if px == x.name or py == y.name:
                    return px == x.name and py == y.name
            return x.name == y.name
        if isinstance(x, Const) and isinstance(y, Const):
            return x.name == y.name
        if isinstance(x, Entity) and isinstance(y, Entity):
            if not match_entities:
                return x.ident == y.ident
            if x.ident in fwd:
                return fwd[x.ident] == y.ident
            if y.ident in bwd:
                return False
            fwd[x.ident] = y.ident
            bwd[y.ident] = x.ident
            return True
        if isinstance(x, Compound) and isinstance(y, Compound):
            return (
                x.functor == y.functor
                and len(x.args) == len(y.args)
                and all(walk(p, q, env) for p, q in zip(x.args, y.args))
            )
        if isinstance(x, App) and isinstance(y, App):
            return walk(x.func, y.func, env) and walk(x.arg, y.arg, env)
        if isinstance(x, Lambda) and isinstance(y, Lambda):
            return walk(x.body, y.body, env + ((x.param, y.param),))
        if isinstance(x, Ref) and isinstance(y, Ref):
            return walk(x.restriction, y.restriction, env)
        return False

    return walk(a, b, ())


def literal_alpha_equal(a: Literal, b: Literal, match_entities: bool = False) -> bool:
    if a.predicate != b.predicate or a.positive != b.positive or len(a.args) != len(b.args):
        return False
    return alpha_equal(Compound(a.predicate, a.args), Compound(b.predicate, b.args), match_entities)


# ---------------------------------------------------------------------------
# Substitutions and unification
# ---------------------------------------------------------------------------

class Substitution:
    """A variable binding map.

    Stored triangular (images may mention other bound variables) so that
    extension is cheap; :meth:`apply` resolves chains fully, which keeps
    the observable behaviour idempotent: applying twice equals applying
    once.  Cycles cannot arise because unification occurs-checks through
    the chains before binding.
    """

    __slots__ = ("mapping",)

    def __init__(self, mapping: dict[str, Term] | None = None):
        self.mapping: dict[str, Term] = dict(mapping or {})

    def walk(self, t: Term) -> Term:
        while isinstance(t, Var):
            nxt = self.mapping.get(t.name)
            if nxt is None:
                return t
            t = nxt
        return t

    def apply(self, t: Term) -> Term:
        if not self.mapping:
            return t
        t = self.walk(t)
        if isinstance(t, (Const, Entity)) or isinstance(t, Var):
            return t
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(self.apply(a) for a in t.args))
        if isinstance(t, App):
            return App(self.apply(t.func), self.apply(t.arg))
        # lambdas are rare in bindings; go through capture-avoiding
        # substitution with a fully resolved map
        return substitute(t, self._resolved())

    def _resolved(self) -> dict[str, Term]:
        return {k: self.apply(Var(k)) for k in self.mapping}

    def apply_literal(self, lit: Literal) -> Literal:
        if not self.mapping:
            return lit
        return Literal(lit.predicate, tuple(self.apply(a) for a in lit.args), lit.positive)

    def bind(self, name: str, value: Term) -> "Substitution":
        new = dict(self.mapping)
        new[name] = value
        return Substitution(new)

    def __contains__(self, name: str) -> bool:
        return name in self.mapping

    def __len__(self) -> int:
        return len(self.mapping)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k} -> {canon(self.apply(Var(k)))}" for k in sorted(self.mapping))
        return "{" + inner + "}"


def _occurs(mapping: dict[str, Term], name: str, t: Term) -> bool:
    while isinstance(t, Var):
        if t.name == name:
            return True
        nxt = mapping.get(t.name)
        if nxt is None:
            return False
        t = nxt
    if isinstance(t, Compound):
        return any(_occurs(mapping, name, a) for a in t.args)
    if isinstance(t, App):
        return _occurs(mapping, name, t.func) or _occurs(mapping, name, t.arg)
    if isinstance(t, (Lambda, Ref)):
        return any(_occurs(mapping, name, Var(v)) for v in free_vars(t))
    return False


def unify(a: Term, b: Term, s: Substitution | None = None) -> Substitution | None:
    """Most general unifier extending ``s``; ``None`` means no match.

    First-order: lambdas (and refs) unify only when alpha-equal, which is
    all the grammar and rule matching ever need.
    """
    mapping = dict(s.mapping) if s is not None else {}

    def walk(t: Term) -> Term:
        while isinstance(t, Var):
            nxt = mapping.get(t.name)
            if nxt is None:
                return t
            t = nxt
        return t

    queue = [(a, b)]
    while queue:
        x, y = queue.pop()
        x = walk(x)
        y = walk(y)
        if x == y:
            continue
        if isinstance(x, Var):
            if _occurs(mapping, x.name, y):
                return None  # occurs check
            mapping[x.name] = y
            continue
        if isinstance(y, Var):
            if _occurs(mapping, y.name, x):
                return None
            mapping[y.name] = x
            continue
        if isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            queue.extend(zip(x.args, y.args))
            continue
        if isinstance(x, App) and isinstance(y, App):
            queue.append((x.func, y.func))
            queue.append((x.arg, y.arg))
            continue
        if isinstance(x, (Lambda, Ref)) and isinstance(y, (Lambda, Ref)):
            resolver = Substitution(mapping)
            if alpha_equal(resolver.apply(x), resolver.apply(y)):
                continue
            return None
        return None
    return Substitution(mapping)


def unify_literals(a: Literal, b: Literal, s: Substitution | None = None) -> Substitution | None:
    if a.predicate != b.predicate or a.positive != b.positive or len(a.args) != len(b.args):
        return None
    return unify(Compound(a.predicate, a.args), Compound(b.predicate, b.args), s)


# ---------------------------------------------------------------------------
# Entity allocation
# ---------------------------------------------------------------------------

class EntityAllocator:
    """Monotone per-session counter; ids are never reused."""

    def __init__(self, start: int = 1):
        self._lock = threading.Lock()
        self._next = start

    def fresh(self) -> Entity:
        with self._lock:
            n = self._next
            self._next += 1
        return Entity(str(n))

    def note_existing(self, e: Entity) -> None:
        """Advance past an id we have seen, so later mints stay unique."""
        if e.ident.isdigit():
            with self._lock:
                self._next = max(self._next, int(e.ident) + 1)


# ---------------------------------------------------------------------------
# Canonical text form
# ---------------------------------------------------------------------------

def canon(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Entity):
        return t.render()
    if isinstance(t, Compound):
        return f"{t.functor}({', '.join(canon(a) for a in t.args)})"
    if isinstance(t, App):
        return f"app({canon(t.func)}, {canon(t.arg)})"
    if isinstance(t, Lambda):
        return f"lam({t.param}, {canon(t.body)})"
    if isinstance(t, Ref):
        return f"ref({canon(t.restriction)})"
    raise PrepdiagFault(f"unprintable term {t!r}")


def canon_literal(lit: Literal) -> str:
    body = f"{lit.predicate}({', '.join(canon(a) for a in lit.args)})" if lit.args else lit.predicate
    return body if lit.positive else f"not({body})"


def term_key(t: Term) -> str:
    """Canonical text with binders renamed positionally; equal strings
    mean alpha-equal terms (entity ids compared literally)."""
    n = [0]

    def norm(x: Term) -> Term:
        if isinstance(x, Lambda):
            new = f"_L{n[0]}"
            n[0] += 1
            return Lambda(new, norm(substitute(x.body, {x.param: Var(new)})))
        if isinstance(x, Compound):
            return Compound(x.functor, tuple(norm(a) for a in x.args))
        if isinstance(x, App):
            return App(norm(x.func), norm(x.arg))
        if isinstance(x, Ref):
            r = norm(x.restriction)
            assert isinstance(r, Lambda)
            return Ref(r)
        return x

    return canon(norm(t))


_VAR_SHAPE = re.compile(r"^[A-Z][0-9]*$")
_TOKEN = re.compile(r"\s*(#[A-Za-z0-9_]+|[A-Za-z_][A-Za-z0-9_]*|[0-9]+|[(),])")


class _TermParser:
    """Recursive-descent parser for the canonical form.

    A bare name is a variable when an enclosing ``lam`` binds it or when
    it looks like a rule variable (single capital letter plus optional
    digits); otherwise it is a constant.  Extra names can be forced to
    variables with ``extra_vars`` -- rule loading uses that for the names
    its quantifier prefixes declare.
    """

    def __init__(self, text: str, extra_vars: frozenset[str] = frozenset()):
        self.text = text
        self.pos = 0
        self.extra_vars = extra_vars

    def error(self, message: str) -> PrepdiagFault:
        return PrepdiagFault(f"term syntax: {message} at offset {self.pos} in {self.text!r}")

    def peek(self) -> str | None:
        m = _TOKEN.match(self.text, self.pos)
        return m.group(1) if m else None

    def take(self, expect: str | None = None) -> str:
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            raise self.error("unexpected end" if self.pos >= len(self.text) else "bad character")
        tok = m.group(1)
        if expect is not None and tok != expect:
            raise self.error(f"expected {expect!r}, found {tok!r}")
        self.pos = m.end()
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.text) or not self.text[self.pos:].strip()

    def parse(self, bound: frozenset[str]) -> Term:
        tok = self.take()
        if tok.startswith("#"):
            return Entity(tok[1:])
        if tok in "(),":
            raise self.error(f"unexpected {tok!r}")
        if self.peek() == "(":
            return self.parse_compound(tok, bound)
        if tok in bound or tok in self.extra_vars or _VAR_SHAPE.match(tok):
            return Var(tok)
        return Const(tok)

    def parse_compound(self, head: str, bound: frozenset[str]) -> Term:
        self.take("(")
        if head == "lam":
            param = self.take()
            self.take(",")
            body = self.parse(bound | {param})
            self.take(")")
            return Lambda(param, body)
        args = []
        if self.peek() != ")":
            args.append(self.parse(bound))
            while self.peek() == ",":
                self.take(",")
                args.append(self.parse(bound))
        self.take(")")
        if head == "ref":
            if len(args) != 1 or not isinstance(args[0], Lambda):
                raise self.error("ref takes exactly one lam(...)")
            return Ref(args[0])
        if head == "app":
            if len(args) != 2:
                raise self.error("app takes exactly two arguments")
            return App(args[0], args[1])
        return Compound(head, tuple(args))


def parse_term(text: str, extra_vars: frozenset[str] = frozenset()) -> Term:
    p = _TermParser(text, extra_vars)
    t = p.parse(frozenset())
    if not p.at_end():
        raise p.error("trailing input")
    return t


def parse_literal(text: str, extra_vars: frozenset[str] = frozenset()) -> Literal:
    t = parse_term(text, extra_vars)
    positive = True
    if isinstance(t, Compound) and t.functor == "not" and len(t.args) == 1:
        positive = False
        t = t.args[0]
    if isinstance(t, Const):
        return Literal(t.name, (), positive)
    if not isinstance(t, Compound):
        raise PrepdiagFault(f"not a literal: {text!r}")
    return Literal(t.functor, t.args, positive)
