"""Logical forms and their anchoring to discourse entities.

A complete parse carries ``utt(claim, ...)`` semantics; :func:`build_lf`
peels the utterance type off and checks it is a claim.  :func:`anchor`
then replaces every referring term, innermost first, with a fresh
discourse entity, turning the term into ground facts.  The speaker ref
is special: it always anchors to ``#user`` with the fact
``type(#user, human)``, and contributes nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnsupportedRestrictionError, UnsupportedUtteranceError
from .grammar import Sign
from .terms import (
    App,
    Compound,
    Const,
    Entity,
    EntityAllocator,
    Lambda,
    Literal,
    Ref,
    Term,
    USER_ENTITY,
    alpha_equal,
    beta_reduce,
    canon,
    conjuncts,
)

@dataclass(frozen=True)
class LogicalForm:
    utterance_type: str  # always "claim" in scope
    body: Term

    def render(self) -> str:
        return canon(Compound("utt", (Const(self.utterance_type), self.body)))


@dataclass(frozen=True)
class AnchoredForm:
    facts: tuple[Literal, ...]
    anchors: tuple[tuple[str, Entity], ...]  # (ref canonical text, entity)
    entity_words: dict[Entity, str]  # entity -> lexical predicate


def build_lf(sign: Sign) -> LogicalForm:
    sem = sign.semantics
    if not (isinstance(sem, Compound) and sem.functor == "utt" and len(sem.args) == 2):
        raise UnsupportedUtteranceError(f"not an utterance: {canon(sem)}")
    utype, body = sem.args
    if not (isinstance(utype, Const) and utype.name == "claim"):
        raise UnsupportedUtteranceError(f"unsupported utterance type: {canon(utype)}")
    return LogicalForm("claim", body)


def anchor(lf: LogicalForm, allocator: EntityAllocator) -> AnchoredForm:
    """Ground the claim: every ref becomes a fresh entity, its restriction
    becomes facts, and the outer relation becomes the final fact."""
    if lf.utterance_type != "claim":
        raise UnsupportedUtteranceError(lf.utterance_type)

    facts: list[Literal] = []
    anchors: list[tuple[str, Entity]] = []
    entity_words: dict[Entity, str] = {}
    user_seen = [False]

    from .terms import Var

    speaker_shape = Lambda("X", Compound("speaker", (Var("X"),)))

    def anchor_ref(ref: Ref) -> Entity:
        restriction = ref.restriction
        if alpha_equal(restriction, speaker_shape):
            if not user_seen[0]:
                user_seen[0] = True
                facts.append(Literal("type", (USER_ENTITY, Const("human"))))
            anchors.append((canon(ref), USER_ENTITY))
            entity_words.setdefault(USER_ENTITY, "speaker")
            return USER_ENTITY
        inner = walk(restriction.body)
        entity = allocator.fresh()
        anchors.append((canon(ref), entity))
        reduced = beta_reduce(App(Lambda(restriction.param, inner), entity))
        for part in conjuncts(reduced):
            lit = _as_literal(part)
            facts.append(lit)
            if len(lit.args) == 1 and lit.args[0] == entity:
                entity_words.setdefault(entity, lit.predicate)
        return entity

    def walk(t: Term) -> Term:
        if isinstance(t, Ref):
            return anchor_ref(t)
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(walk(a) for a in t.args))
        if isinstance(t, App):
            return App(walk(t.func), walk(t.arg))
        # lambdas are left intact: property arguments stay properties
        return t

    top = walk(lf.body)
    top_lit = _as_literal(top)
    if not top_lit.is_ground():
        raise UnsupportedRestrictionError(f"anchoring left variables in {canon(top)}")
    facts.append(top_lit)
    bad = [f for f in facts if not f.is_ground()]
    if bad:
        raise UnsupportedRestrictionError(f"non-ground facts after anchoring: {bad}")
    return AnchoredForm(tuple(facts), tuple(anchors), entity_words)


def _as_literal(t: Term) -> Literal:
    if isinstance(t, Compound) and t.functor not in ("and", "app", "utt"):
        return Literal(t.functor, t.args)
    raise UnsupportedRestrictionError(f"not a literal: {canon(t)}")
