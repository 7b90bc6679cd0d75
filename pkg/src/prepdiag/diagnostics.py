"""Turn abduction results and model comparisons into learner feedback.

Two diagnosis routes exist side by side: abduction over the learner's
saturated model is authoritative for the rendered message, while direct
model comparison feeds the side-by-side inspector.  Messages come from
canned templates with slots; entity ids never reach the learner, so the
slot fillers go through a describer that maps entities back to words
(the lexical predicate recorded when the referring term was anchored)
or, for minted witnesses, to phrases like "the bottom of ...".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .abduction import AbductionOutcome, abduce_outcome
from .errors import (
    ParseFailure,
    StaleDiagnosisError,
    TemplateError,
    UnknownWordError,
)
from .grammar import Grammar
from .kb import KnowledgeBase
from .lf import anchor, build_lf
from .model import Model, saturate
from .terms import Const, Entity, Literal, Term, Var, canon_literal

WHY_DEPTH_CAP = 3

_WITNESS_POSITIONS = {
    # predicate: (parent argument index, witness argument index)
    "surface": (0, 1),
    "interior": (0, 1),
    "bottom": (0, 1),
    "top": (0, 1),
    "embedding": (1, 0),
}

_SPACE_LABELS = {"r2": "two dimensions", "r3": "three dimensions"}


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------

_TEMPLATE_LINE = re.compile(r'^template\s+([A-Za-z0-9_]+)\s*:\s*"(.*)"\s*$')


class MessageCatalog:
    def __init__(self, patterns: dict[str, str]):
        self.patterns = patterns

    def render(self, key: str, **slots: str) -> str:
        pattern = self.patterns.get(key)
        if pattern is None:
            raise TemplateError(f"no template {key!r}")
        try:
            return pattern.format(**slots)
        except (KeyError, IndexError) as exc:
            raise TemplateError(f"template {key!r}: missing slot {exc}") from None

    def has(self, key: str) -> bool:
        return key in self.patterns


def load_templates(text: str) -> MessageCatalog:
    patterns: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _TEMPLATE_LINE.match(line)
        if not m:
            raise TemplateError(f"templates line {n}: cannot parse {raw!r}")
        patterns[m.group(1)] = m.group(2)
    return MessageCatalog(patterns)


@lru_cache(maxsize=1)
def builtin_templates() -> MessageCatalog:
    text = resources.files("prepdiag.data").joinpath("templates.tpl").read_text("utf-8")
    return load_templates(text)


# ---------------------------------------------------------------------------
# Describing entities without leaking ids
# ---------------------------------------------------------------------------

class Describer:
    def __init__(self, model: Model, kb: KnowledgeBase, grammar: Grammar):
        self.model = model
        self.kb = kb
        self.grammar = grammar
        self._by_pred = grammar.lexicon.by_predicate()
        word_preds = kb.word_predicates()
        self.entity_word: dict[Entity, str] = {}
        for lit in model.facts:
            if len(lit.args) == 1 and lit.predicate in word_preds:
                e = lit.args[0]
                if isinstance(e, Entity):
                    self.entity_word.setdefault(e, lit.predicate)

    def word_label(self, predicate: str) -> str | None:
        entry = self._by_pred.get(predicate)
        if entry is None:
            return None
        return self.grammar.word_label(entry.surface, entry.language)

    def describe(self, t: Term, depth: int = 0) -> str:
        if isinstance(t, Var):
            return "something"
        if isinstance(t, Const):
            return _SPACE_LABELS.get(t.name, t.name)
        if isinstance(t, Entity):
            if t.ident == "user":
                return "the speaker"
            pred = self.entity_word.get(t)
            if pred:
                label = self.word_label(pred)
                if label:
                    return label
                return pred
            if depth < 3:
                for kind, (parent_i, witness_i) in _WITNESS_POSITIONS.items():
                    for fact in self.model.with_predicate(kind):
                        if len(fact.args) > max(parent_i, witness_i) and fact.args[witness_i] == t:
                            parent = self.describe(fact.args[parent_i], depth + 1)
                            return f"the {kind} of {parent}"
            return "something"
        return "something"


def phrase_for(lit: Literal, describer: Describer, catalog: MessageCatalog) -> str:
    """Human phrase for a missing literal; never contains an entity id."""
    key = f"phrase_{lit.predicate}"
    slots = {"subject": "something", "value": "", "space": ""}
    args = lit.args
    if lit.predicate in ("surface", "interior", "bottom", "top", "view"):
        slots["subject"] = describer.describe(args[0])
    elif lit.predicate == "dim" and len(args) == 2:
        slots["subject"] = describer.describe(args[0])
        slots["value"] = describer.describe(args[1])
    elif lit.predicate == "embedding" and len(args) == 3:
        slots["subject"] = describer.describe(args[1])
        slots["space"] = describer.describe(args[2])
    elif lit.predicate == "orientable" and len(args) == 1:
        slots["subject"] = describer.describe(args[0])
    elif len(args) >= 2:
        slots["subject"] = describer.describe(args[0])
        slots["value"] = describer.describe(args[1])
    elif args:
        slots["subject"] = describer.describe(args[0])
    return catalog.render(key, **slots)


def missing_property_text(
    missing: tuple[Literal, ...], describer: Describer, catalog: MessageCatalog
) -> str:
    return " and ".join(phrase_for(m, describer, catalog) for m in missing)


# ---------------------------------------------------------------------------
# Model comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrepRecord:
    language: str
    literal: Literal
    located: bool


@dataclass(frozen=True)
class Mismatch:
    kind: str  # located_mismatch | no_equivalent
    source: PrepRecord | None
    attempt: PrepRecord | None


def _entity_words(model: Model, kb: KnowledgeBase) -> dict[Entity, str]:
    word_preds = kb.word_predicates()
    out: dict[Entity, str] = {}
    for lit in model.facts:
        if len(lit.args) == 1 and lit.predicate in word_preds and isinstance(lit.args[0], Entity):
            out.setdefault(lit.args[0], lit.predicate)
    return out


def _words_match(kb: KnowledgeBase, a: str | None, b: str | None) -> bool:
    if a is None or b is None:
        return False
    return a == b or kb.equivalent(a) == b


def compare_models(source: Model, attempt: Model, kb: KnowledgeBase) -> list[Mismatch]:
    """Pair preposition uses across the two models through the bilingual
    equivalence table and flag pairs located on one side only."""
    s_words = _entity_words(source, kb)
    a_words = _entity_words(attempt, kb)
    s_uses = [PrepRecord(source.language, lit, loc) for lit, loc in source.preposition_uses(kb)]
    a_uses = [PrepRecord(attempt.language, lit, loc) for lit, loc in attempt.preposition_uses(kb)]

    mismatches: list[Mismatch] = []
    unpaired_attempts = list(a_uses)
    for s in s_uses:
        sf, sg = s.literal.args
        partner = None
        for a in unpaired_attempts:
            af, ag = a.literal.args
            if _words_match(kb, s_words.get(sf), a_words.get(af)) and _words_match(
                kb, s_words.get(sg), a_words.get(ag)
            ):
                partner = a
                break
        if partner is None:
            mismatches.append(Mismatch("no_equivalent", s, None))
            continue
        unpaired_attempts.remove(partner)
        if s.located != partner.located:
            mismatches.append(Mismatch("located_mismatch", s, partner))
    for a in unpaired_attempts:
        mismatches.append(Mismatch("no_equivalent", None, a))
    return mismatches


# ---------------------------------------------------------------------------
# Diagnosis
# ---------------------------------------------------------------------------

@dataclass
class Diagnosis:
    id: str
    verdict: str  # accepted | rejected | no_parse | unknown_word
    message: str
    preposition_pairs: list[PrepRecord] = field(default_factory=list)
    missing: tuple[Literal, ...] = ()
    chips: list[dict] = field(default_factory=list)
    children: dict[str, "Diagnosis"] = field(default_factory=dict)
    exercise_id: str | None = None
    attempt_text: str | None = None
    parse_count: int = 0
    depth: int = 0
    offending_token: str | None = None
    # engine-side state, not serialized
    attempt_model: Model | None = None
    source_model: Model | None = None
    outcome: AbductionOutcome | None = None
    word_echo: list[dict] = field(default_factory=list)

    def to_dict(self, trace: bool = False) -> dict:
        out = {
            "id": self.id,
            "verdict": self.verdict,
            "message": self.message,
            "exercise_id": self.exercise_id,
            "attempt_text": self.attempt_text,
            "parse_count": self.parse_count,
            "preposition_pairs": [
                {
                    "language": r.language,
                    "literal": canon_literal(r.literal),
                    "located": r.located,
                }
                for r in self.preposition_pairs
            ],
            "missing": [canon_literal(m) for m in self.missing],
            "chips": self.chips,
            "children": {k: d.id for k, d in self.children.items()},
            "offending_token": self.offending_token,
            "words": self.word_echo,
        }
        if trace and self.outcome is not None:
            out["trace"] = [
                {
                    "missing": [canon_literal(m) for m in r.missing],
                    "cost": r.cost,
                    "steps": [list(s) for s in r.proof_trace],
                }
                for r in self.outcome.results
            ]
            out["blockers"] = [
                {"clause": b.clause, "literal": canon_literal(b.literal), "kind": b.kind}
                for b in self.outcome.blockers
            ]
        return out


class Diagnoser:
    """Bundles the grammar, KB and templates behind diagnose/why."""

    def __init__(self, kb: KnowledgeBase, grammar: Grammar, catalog: MessageCatalog):
        self.kb = kb
        self.grammar = grammar
        self.catalog = catalog

    # -- pipeline pieces -------------------------------------------------

    def model_for(self, text: str, language: str, session, cap: int = 2) -> Model:
        signs = self.grammar.parse_text(text, language)
        if not signs:
            raise ParseFailure(text)
        lf = build_lf(signs[0])
        anchored = anchor(lf, session.allocator)
        return saturate(anchored.facts, self.kb, language, cap=cap, allocator=session.allocator)

    def _prep_label(self, predicate: str, language: str) -> str:
        return self.grammar.word_label(predicate, language)

    # -- diagnose ----------------------------------------------------------

    def diagnose(self, exercise, attempt_text: str, session) -> Diagnosis:
        diag_id = session.next_diagnosis_id()
        try:
            tokens = self.grammar.tokenize(attempt_text, "ar")
            signs = self.grammar.parse(tokens, "ar")
        except UnknownWordError as exc:
            d = Diagnosis(
                id=diag_id,
                verdict="unknown_word",
                message=self.catalog.render("unknown_word", token=exc.token),
                exercise_id=exercise.id,
                attempt_text=attempt_text,
                offending_token=exc.token,
            )
            session.remember(d, exercise, attempt_text)
            return d
        if not signs:
            d = Diagnosis(
                id=diag_id,
                verdict="no_parse",
                message=self.catalog.render("no_parse"),
                exercise_id=exercise.id,
                attempt_text=attempt_text,
            )
            session.remember(d, exercise, attempt_text)
            return d

        lf = build_lf(signs[0])
        anchored = anchor(lf, session.allocator)
        attempt_model = saturate(anchored.facts, self.kb, "ar", allocator=session.allocator)
        source_model = self.model_for(exercise.source_text, exercise.source_language, session)

        word_echo = [
            {"buckwalter": t, "script": self.grammar.script_form(t) or t}
            for t in tokens
            if t not in ("Al+", "+y")
        ]

        pairs = [
            PrepRecord("ar", lit, loc) for lit, loc in attempt_model.preposition_uses(self.kb)
        ] + [
            PrepRecord(exercise.source_language, lit, loc)
            for lit, loc in source_model.preposition_uses(self.kb)
        ]

        source_prep = next(
            (l.predicate for l, _ in source_model.preposition_uses(self.kb)), "?"
        )
        unlocated = [lit for lit, loc in attempt_model.preposition_uses(self.kb) if not loc]

        if not unlocated:
            learner_prep = next(
                (l.predicate for l, _ in attempt_model.preposition_uses(self.kb)), "?"
            )
            d = Diagnosis(
                id=diag_id,
                verdict="accepted",
                message=self.catalog.render(
                    "accepted",
                    learner_prep=self._prep_label(learner_prep, "ar"),
                    source_prep=source_prep,
                ),
                preposition_pairs=pairs,
                exercise_id=exercise.id,
                attempt_text=attempt_text,
                parse_count=len(signs),
                attempt_model=attempt_model,
                source_model=source_model,
                word_echo=word_echo,
            )
            session.remember(d, exercise, attempt_text)
            return d

        prep_lit = unlocated[0]
        outcome = abduce_outcome(
            Literal("located", prep_lit.args), attempt_model, self.kb
        )
        result = self._pick_result(outcome, prep_lit)
        describer = Describer(attempt_model, self.kb, self.grammar)
        slots = {
            "learner_prep": self._prep_label(prep_lit.predicate, "ar"),
            "source_prep": source_prep,
        }
        missing: tuple[Literal, ...] = ()
        if result is not None:
            missing = result.missing
            ground = prep_lit.args[1]
            ground_pred = describer.entity_word.get(ground) if isinstance(ground, Entity) else None
            ground_en = self.kb.equivalent(ground_pred) if ground_pred else None
            slots["missing_property"] = missing_property_text(missing, describer, self.catalog)
            if ground_pred and ground_en:
                slots["ground_word_ar"] = describer.word_label(ground_pred) or ground_pred
                slots["ground_word_en"] = ground_en
                message = self.catalog.render("rejected_main", **slots)
            else:
                message = self.catalog.render("rejected_blocked", **slots)
        elif outcome.blockers:
            parts = [phrase_for(b.literal, describer, self.catalog) for b in outcome.blockers]
            slots["missing_property"] = " and ".join(dict.fromkeys(parts))
            message = self.catalog.render("rejected_blocked", **slots)
        else:
            message = self.catalog.render("rejected_no_explanation", **slots)

        d = Diagnosis(
            id=diag_id,
            verdict="rejected",
            message=message,
            preposition_pairs=pairs,
            missing=missing,
            chips=[
                {
                    "literal": canon_literal(m),
                    "label": phrase_for(m, describer, self.catalog),
                }
                for m in missing
            ],
            exercise_id=exercise.id,
            attempt_text=attempt_text,
            parse_count=len(signs),
            attempt_model=attempt_model,
            source_model=source_model,
            outcome=outcome,
            word_echo=word_echo,
        )
        session.remember(d, exercise, attempt_text)
        return d

    def _pick_result(self, outcome: AbductionOutcome, prep_lit: Literal):
        """Prefer the result proved through the clause of the preposition
        the learner actually used; ties fall back to clause order."""
        for r in outcome.results:
            for clause_name, _ in r.proof_trace:
                rule_name = clause_name.split(":", 1)[0]
                rule = next((x for x in self.kb.rules if x.name == rule_name), None)
                if rule is None:
                    continue
                first = rule.guard_levels()[0].guard[0]
                if first.predicate == prep_lit.predicate:
                    return r
        return outcome.results[0] if outcome.results else None

    # -- why ---------------------------------------------------------------

    def why(self, diagnosis: Diagnosis, missing_literal: Literal, session) -> Diagnosis:
        key = canon_literal(missing_literal)
        wanted = {canon_literal(m) for m in diagnosis.missing}
        if key not in wanted:
            raise StaleDiagnosisError(
                f"literal {key} is not among the diagnosis's missing steps"
            )
        if key in diagnosis.children:
            return diagnosis.children[key]
        if diagnosis.attempt_model is None:
            raise StaleDiagnosisError(f"diagnosis {diagnosis.id} has no model attached")

        child_id = session.next_diagnosis_id()
        describer = Describer(diagnosis.attempt_model, self.kb, self.grammar)

        if diagnosis.depth + 1 >= WHY_DEPTH_CAP:
            child = Diagnosis(
                id=child_id,
                verdict="rejected",
                message=self.catalog.render("why_depth_cap"),
                exercise_id=diagnosis.exercise_id,
                attempt_text=diagnosis.attempt_text,
                depth=diagnosis.depth + 1,
                attempt_model=diagnosis.attempt_model,
                source_model=diagnosis.source_model,
            )
        else:
            outcome = abduce_outcome(missing_literal, diagnosis.attempt_model, self.kb)
            missing = outcome.results[0].missing if outcome.results else ()
            message = self._why_message(missing_literal, missing, describer)
            child = Diagnosis(
                id=child_id,
                verdict="rejected",
                message=message,
                missing=missing,
                chips=[
                    {
                        "literal": canon_literal(m),
                        "label": phrase_for(m, describer, self.catalog),
                    }
                    for m in missing
                ],
                exercise_id=diagnosis.exercise_id,
                attempt_text=diagnosis.attempt_text,
                depth=diagnosis.depth + 1,
                attempt_model=diagnosis.attempt_model,
                source_model=diagnosis.source_model,
                outcome=outcome,
            )
        diagnosis.children[key] = child
        session.adopt(child)
        return child

    def _why_message(
        self, asked: Literal, missing: tuple[Literal, ...], describer: Describer
    ) -> str:
        if not missing:
            return self.catalog.render("why_depth_cap")
        preds = sorted(m.predicate for m in missing)
        if preds == ["embedding", "orientable"] and asked.predicate == "surface":
            subject = describer.describe(asked.args[0])
            return self.catalog.render("why_embedding_orientable", ground_word_ar=subject)
        return self.catalog.render(
            "why_main",
            missing_property=missing_property_text(missing, describer, self.catalog),
        )
