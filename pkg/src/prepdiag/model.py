"""Forward saturation: build the Herbrand model of an open branch.

Saturation repeatedly applies the knowledge base's guarded rules to a set
of ground positive literals until nothing new can be added.  The moving
parts that keep this finite and reproducible:

* a (rule, guard-binding) pair fires at most once, so a rule never
  re-mints witnesses for bindings it has already served;
* if a firing's existential consequents are already satisfied by
  existing entities, those witnesses are reused instead of minting;
* every minted witness carries a nesting depth, one more than the
  shallowest entity in the guard binding that produced it; once that
  would exceed the cap, the existential consequents are suppressed
  (witness-free consequents still fire);
* ``compat`` guards are decided by the type lattice, never stored.

Rules apply in file order and facts in insertion order; the fixpoint does
not depend on this (tested), but provenance does, so it is pinned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .errors import InconsistentModelError, PrepdiagFault, SaturationOverflowError
from .kb import COMPAT, GuardedRule, KnowledgeBase
from .lattice import TypeLattice
from .terms import (
    Const,
    Entity,
    EntityAllocator,
    Lambda,
    Literal,
    Substitution,
    Term,
    Var,
    canon_literal,
    unify_literals,
)

DEFAULT_SKOLEM_CAP = 2
DEFAULT_FACT_BUDGET = 10_000

Provenance = Union[str, tuple[str, dict[str, str]]]  # "anchored" | (rule, binding)


def alpha_key(lit: Literal) -> str:
    """Canonical text with lambda binders normalized, for set membership."""
    from .terms import Compound, term_key

    sign = "" if lit.positive else "not "
    return sign + term_key(Compound(lit.predicate, lit.args))


class Model:
    """A finite set of ground positive literals plus bookkeeping."""

    def __init__(self, language: str, lattice: TypeLattice):
        self.language = language
        self._lattice = lattice
        self._facts: dict[str, Literal] = {}
        self.provenance: dict[str, Provenance] = {}
        self.skolem_depth: dict[Entity, int] = {}
        self._by_pred: dict[str, list[Literal]] = {}
        self._types: dict[Entity, str] = {}

    @property
    def facts(self) -> list[Literal]:
        return list(self._facts.values())

    def __contains__(self, lit: Literal) -> bool:
        return alpha_key(lit) in self._facts

    def __len__(self) -> int:
        return len(self._facts)

    def with_predicate(self, predicate: str) -> list[Literal]:
        return self._by_pred.get(predicate, [])

    def entities(self) -> list[Entity]:
        seen: dict[Entity, None] = {}
        for f in self._facts.values():
            for e in f.entities():
                seen.setdefault(e)
        return list(seen)

    def depth(self, e: Entity) -> int:
        return self.skolem_depth.get(e, 0)

    def add(self, lit: Literal, provenance: Provenance, budget: int) -> bool:
        if not lit.positive:
            raise PrepdiagFault("models store positive literals only")
        key = alpha_key(lit)
        if key in self._facts:
            return False
        if len(self._facts) >= budget:
            raise SaturationOverflowError(
                f"fact budget {budget} exhausted; last literal {canon_literal(lit)}"
            )
        self._facts[key] = lit
        self.provenance[key] = provenance
        self._by_pred.setdefault(lit.predicate, []).append(lit)
        for e in lit.entities():
            self.skolem_depth.setdefault(e, 0)
        if lit.predicate == "type" and len(lit.args) == 2:
            self._check_type_consistency(lit)
        return True

    def _check_type_consistency(self, lit: Literal) -> None:
        ent, ty = lit.args
        if not isinstance(ent, Entity) or not isinstance(ty, Const):
            return
        if not self._lattice.knows(ty.name):
            return
        prior = self._types.get(ent)
        if prior is None:
            self._types[ent] = ty.name
        elif self._lattice.root(prior) != self._lattice.root(ty.name):
            raise InconsistentModelError(
                f"{ent.render()} typed both {prior} and {ty.name} (different partitions)"
            )

    # -- derived queries -------------------------------------------------

    def preposition_uses(self, kb: KnowledgeBase) -> list[tuple[Literal, bool]]:
        """Each preposition literal in the model, with whether its pair
        of entities got located."""
        preps = kb.preposition_predicates()
        out = []
        for lit in self._facts.values():
            if lit.predicate in preps and len(lit.args) == 2:
                located = Literal("located", lit.args) in self
                out.append((lit, located))
        return out

    def to_strings(self) -> list[str]:
        return sorted(canon_literal(f) for f in self._facts.values())

    def serialize(self) -> str:
        return "\n".join(self.to_strings()) + "\n"


# ---------------------------------------------------------------------------
# Guard matching
# ---------------------------------------------------------------------------

def match_guard(
    literals: Iterable[Literal],
    model: Model,
    lattice: TypeLattice,
    s: Substitution | None = None,
) -> Iterator[Substitution]:
    """All substitutions closing the guard literals against stored facts.

    ``compat`` is evaluated against the lattice; its arguments must be
    ground by then (the builtin rules bind types before comparing them).
    """
    literals = list(literals)

    def walk(i: int, s: Substitution) -> Iterator[Substitution]:
        if i == len(literals):
            yield s
            return
        lit = literals[i]
        if lit.predicate == COMPAT:
            a, b = (s.apply(t) for t in lit.args)
            if not (isinstance(a, Const) and isinstance(b, Const)):
                raise PrepdiagFault(
                    f"compat arguments not ground at evaluation: {canon_literal(lit)}"
                )
            if lattice.compatible(a.name, b.name):
                yield from walk(i + 1, s)
            return
        for fact in model.with_predicate(lit.predicate):
            if fact.positive != lit.positive:
                continue
            s2 = unify_literals(lit, fact, s)
            if s2 is not None:
                yield from walk(i + 1, s2)

    yield from walk(0, s if s is not None else Substitution())


def _binding_key(rule: GuardedRule, s: Substitution) -> tuple[str, ...]:
    from .terms import canon

    return tuple(canon(s.apply(Var(v))) for v in rule.universal_vars())


def _binding_entities(rule: GuardedRule, s: Substitution) -> list[Entity]:
    out = []
    for v in rule.universal_vars():
        t = s.apply(Var(v))
        if isinstance(t, Entity):
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------

def saturate(
    facts: Union[Iterable[Literal], Model],
    kb: KnowledgeBase,
    language: str,
    cap: int = DEFAULT_SKOLEM_CAP,
    budget: int = DEFAULT_FACT_BUDGET,
    allocator: EntityAllocator | None = None,
) -> Model:
    """Close ``facts`` under the KB's rules for ``language``.

    Passing a previous :class:`Model` keeps its witness depths, which is
    what makes re-saturation a no-op; passing bare literals treats every
    entity as anchored at depth 0.
    """
    if cap < 1:
        raise PrepdiagFault(f"skolem depth cap must be >= 1, got {cap}")
    model = Model(language, kb.lattice)
    initial_depths: dict[Entity, int] = {}
    if isinstance(facts, Model):
        initial_depths = dict(facts.skolem_depth)
        fact_list = facts.facts
    else:
        fact_list = list(facts)

    allocator = allocator or EntityAllocator()
    for lit in fact_list:
        if not lit.is_ground():
            raise PrepdiagFault(f"saturate needs ground facts, got {canon_literal(lit)}")
        model.add(lit, "anchored", budget)
        for e in lit.entities():
            allocator.note_existing(e)
    model.skolem_depth.update(initial_depths)

    rules = [r for r in kb.rules if r.language in (language, "both")]
    fired: set[tuple[str, tuple[str, ...]]] = set()

    changed = True
    while changed:
        changed = False
        for rule in rules:
            guard = rule.guard_literals()
            cons = rule.consequent()
            for s in list(match_guard(guard, model, kb.lattice)):
                key = (rule.name, _binding_key(rule, s))
                if key in fired:
                    continue
                fired.add(key)
                changed = True
                prov = (rule.name, {v: b for v, b in zip(rule.universal_vars(), key[1])})

                free_lits = [l for l in cons.literals if not _mentions(l, cons.existential_vars)]
                witness_lits = [l for l in cons.literals if _mentions(l, cons.existential_vars)]
                for lit in free_lits:
                    model.add(s.apply_literal(lit), prov, budget)

                if not witness_lits:
                    continue
                # reuse existing witnesses when the existential part is
                # already satisfied for this binding
                reuse = next(match_guard(witness_lits, model, kb.lattice, s), None)
                if reuse is not None:
                    continue
                depths = [model.depth(e) for e in _binding_entities(rule, s)]
                witness_depth = 1 + (min(depths) if depths else 0)
                if witness_depth > cap:
                    continue
                s2 = s
                for v in cons.existential_vars:
                    w = allocator.fresh()
                    model.skolem_depth[w] = witness_depth
                    s2 = s2.bind(v, w)
                for lit in witness_lits:
                    model.add(s2.apply_literal(lit), prov, budget)
    return model


def _mentions(lit: Literal, names: tuple[str, ...]) -> bool:
    if not names:
        return False
    todo: list[Term] = list(lit.args)
    wanted = set(names)
    while todo:
        t = todo.pop()
        if isinstance(t, Var) and t.name in wanted:
            return True
        from .terms import App, Compound, Lambda, Ref

        if isinstance(t, Compound):
            todo.extend(t.args)
        elif isinstance(t, App):
            todo.extend((t.func, t.arg))
        elif isinstance(t, Lambda):
            todo.append(t.body)
        elif isinstance(t, Ref):
            todo.append(t.restriction)
    return False


# ---------------------------------------------------------------------------
# Isomorphism and embedding up to an entity bijection
# ---------------------------------------------------------------------------

def _describe_arg(t: Term) -> tuple:
    if isinstance(t, Entity):
        return ("e",)
    if isinstance(t, Const):
        return ("c", t.name)
    if isinstance(t, Lambda):
        return ("l", alpha_key(Literal("_", (t,))))
    from .terms import Compound

    if isinstance(t, Compound):
        return ("f", t.functor, len(t.args))
    return ("?", repr(t))


def _signature(e: Entity, facts: list[Literal]) -> tuple:
    sig = []
    for f in facts:
        for i, a in enumerate(f.args):
            if a == e:
                others = tuple(_describe_arg(x) for j, x in enumerate(f.args) if j != i)
                sig.append((f.predicate, i, len(f.args), f.positive, others))
    return tuple(sorted(sig))


def _translate(lit: Literal, mapping: dict[Entity, Entity]) -> Literal:
    def tr(t: Term) -> Term:
        if isinstance(t, Entity):
            return mapping.get(t, t)
        from .terms import App, Compound, Ref

        if isinstance(t, Compound):
            return Compound(t.functor, tuple(tr(a) for a in t.args))
        if isinstance(t, App):
            return App(tr(t.func), tr(t.arg))
        if isinstance(t, Lambda):
            return Lambda(t.param, tr(t.body))
        if isinstance(t, Ref):
            r = tr(t.restriction)
            assert isinstance(r, Lambda)
            return Ref(r)
        return t

    return Literal(lit.predicate, tuple(tr(a) for a in lit.args), lit.positive)


def _entity_match(
    small: list[Literal], big: list[Literal], bijective: bool
) -> dict[Entity, Entity] | None:
    small_entities: list[Entity] = []
    for f in small:
        for e in f.entities():
            if e not in small_entities:
                small_entities.append(e)
    big_entities: list[Entity] = []
    for f in big:
        for e in f.entities():
            if e not in big_entities:
                big_entities.append(e)

    if bijective and (len(small_entities) != len(big_entities) or len(small) != len(big)):
        return None

    big_keys = {alpha_key(f) for f in big}
    # facts without entities never enter the backtracking, so check them here
    for f in small:
        if not f.entities() and alpha_key(f) not in big_keys:
            return None
    small_sigs = {e: _signature(e, small) for e in small_entities}
    big_sigs = {e: _signature(e, big) for e in big_entities}

    def candidates(e: Entity) -> list[Entity]:
        if bijective:
            return [b for b in big_entities if big_sigs[b] == small_sigs[e]]
        # for embeddings the small side's signature facts are a subset,
        # so signatures only prune, they don't have to agree exactly
        mine = set(small_sigs[e])
        return [b for b in big_entities if mine <= set(big_sigs[b])]

    order = sorted(small_entities, key=lambda e: len(candidates(e)))
    mapping: dict[Entity, Entity] = {}
    used: set[Entity] = set()

    def ok_so_far() -> bool:
        for f in small:
            if all(e in mapping for e in f.entities()):
                if alpha_key(_translate(f, mapping)) not in big_keys:
                    return False
        return True

    def place(i: int) -> bool:
        if i == len(order):
            return True
        e = order[i]
        for b in candidates(e):
            if b in used:
                continue
            mapping[e] = b
            used.add(b)
            if ok_so_far() and place(i + 1):
                return True
            del mapping[e]
            used.discard(b)
        return False

    if not place(0):
        return None
    if bijective:
        translated = {alpha_key(_translate(f, mapping)) for f in small}
        if translated != big_keys:
            return None
    return dict(mapping)


def model_isomorphic(a: list[Literal], b: list[Literal]) -> dict[Entity, Entity] | None:
    """Entity bijection making the two fact sets equal, or None."""
    return _entity_match(a, b, bijective=True)


def model_embeds(sub: list[Literal], sup: list[Literal]) -> dict[Entity, Entity] | None:
    """Injective entity mapping making every ``sub`` fact a ``sup`` fact."""
    return _entity_match(sub, sup, bijective=False)
