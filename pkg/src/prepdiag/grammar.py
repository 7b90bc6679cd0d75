"""Bilingual lexicon and chart parser for the controlled fragment.

One set of rule schemas serves both languages; everything language
specific (daughter order, whether the copula appears, how definiteness
is realized) lives in ``LANGUAGE_CONSTRAINTS``.  Instantiating the
schemas against a language's constraint row yields that language's
grammar, so the two grammars can only differ where the table says so.

The fragment: a possessive or definite (or proper-name) subject, an
optional copula (English only; Arabic locatives are nominal sentences),
and a preposition phrase whose object may carry an ordinal

    my office is on the second floor
    mktby Ely AlTAbq AlvAny

Arabic is processed in Buckwalter transliteration; script input is
mapped through the word table first.  The tokenizer also splits the
clitics the fragment needs: ``Al+`` (definite article) and ``+y``
(1sg possessive), restoring a ta marbuta hidden by the suffix
(``grfty`` -> ``grfp +y``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import LexiconError, PrepdiagFault, TokenError, UnknownWordError
from .terms import (
    App,
    Compound,
    Const,
    Term,
    beta_reduce,
    free_vars,
    parse_term,
    rename_bound,
    term_key,
)

# clitic token spellings
AL = "Al+"
POSS_CLITIC = "+y"

_CATEGORY_NAMES = {
    "noun": "N",
    "verb-cop": "COP",
    "prep": "P",
    "det": "DET",
    "ord": "ORD",
    "pron-poss": "POSS",
    "clitic-poss": "POSS",
    "propn": "PROPN",
}


@dataclass(frozen=True)
class LexEntry:
    surface: str
    language: str
    category: str  # internal symbol (N, COP, ...)
    pos: str  # as written in the lexicon file
    features: frozenset[tuple[str, str]]
    semantics: Term
    root: str


@dataclass(frozen=True)
class Category:
    name: str
    features: frozenset[tuple[str, str]] = frozenset()

    def satisfies(self, name: str, required: frozenset[tuple[str, str]]) -> bool:
        return self.name == name and required <= self.features


@dataclass(frozen=True)
class Sign:
    start: int
    end: int
    category: Category
    semantics: Term
    children: tuple["Sign", ...] = ()
    rule: str = "lex"
    token: str | None = None

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


# ---------------------------------------------------------------------------
# Grammar schemas and the language constraint table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RuleSchema:
    name: str
    mother: str
    parts: tuple[str, ...]  # category roles; surface order comes from the table
    composer: tuple


SCHEMAS: tuple[RuleSchema, ...] = (
    RuleSchema("nbar_noun", "NBAR", ("N",), ("take", "N")),
    RuleSchema("nbar_ord", "NBAR", ("ORD", "NBAR"), ("apply", "ORD", "NBAR")),
    RuleSchema("ord_def", "ORD", ("DET", "ORD"), ("take", "ORD")),
    RuleSchema("np_det", "NP", ("DET", "NBAR"), ("apply", "DET", "NBAR")),
    RuleSchema("np_poss", "NP", ("POSS", "NBAR"), ("apply", "POSS", "NBAR")),
    RuleSchema("np_propn", "NP", ("PROPN",), ("take", "PROPN")),
    RuleSchema("pp", "PP", ("P", "NP"), ("apply", "P", "NP")),
    RuleSchema("pred_phrase", "PRED", ("COP", "PP"), ("apply", "COP", "PP")),
    RuleSchema("utterance", "S", ("NP", "PRED"), ("utterance",)),
)

# Everything the two languages disagree about, in one place: head/clitic
# order, copula presence, and definiteness agreement on the ordinal.
LANGUAGE_CONSTRAINTS: dict[str, dict[str, dict]] = {
    "en": {
        "nbar_ord": {"order": ("ORD", "NBAR")},
        "ord_def": {"active": False},
        "np_poss": {"order": ("POSS", "NBAR")},
        "pred_phrase": {"copula": "required"},
    },
    "ar": {
        "nbar_ord": {"order": ("NBAR", "ORD"), "require": {"ORD": {"def": "+"}}},
        "ord_def": {
            "active": True,
            "require": {"DET": {"def": "+"}, "ORD": {"def": "-"}},
            "mother_features": {"def": "+"},
        },
        "np_poss": {"order": ("NBAR", "POSS")},
        "pred_phrase": {"copula": "absent"},
    },
}


@dataclass(frozen=True)
class GrammarRule:
    index: int
    schema: str
    mother: Category
    daughters: tuple[tuple[str, frozenset[tuple[str, str]]], ...]
    composer: tuple


def instantiate_rules(language: str) -> tuple[GrammarRule, ...]:
    """Build one language's rules purely from SCHEMAS and its table row."""
    table = LANGUAGE_CONSTRAINTS[language]
    rules: list[GrammarRule] = []
    for schema in SCHEMAS:
        row = table.get(schema.name, {})
        if not row.get("active", True):
            continue
        parts = row.get("order", schema.parts)
        composer = schema.composer
        if schema.name == "pred_phrase" and row.get("copula") == "absent":
            parts = ("PP",)
            composer = ("take", "PP")
        require = row.get("require", {})
        daughters = tuple(
            (cat, frozenset(require.get(cat, {}).items())) for cat in parts
        )
        mother = Category(schema.mother, frozenset(row.get("mother_features", {}).items()))
        rules.append(GrammarRule(len(rules), schema.name, mother, daughters, composer))
    return tuple(rules)


# ---------------------------------------------------------------------------
# Lexicon
# ---------------------------------------------------------------------------

_LEX_LINE = re.compile(
    r"^lex\s+(?P<surface>\S+)\s+\((?P<lang>en|ar)\)\s+"
    r"(?P<pos>[a-z-]+)(?:\[(?P<feats>[^\]]*)\])?\s+"
    r"root=(?P<root>\S+)\s+sem=(?P<sem>.*)\.$"
)


class Lexicon:
    def __init__(self) -> None:
        self.entries: dict[tuple[str, str], LexEntry] = {}

    def add(self, entry: LexEntry) -> None:
        key = (entry.surface, entry.language)
        if key in self.entries:
            raise LexiconError(f"duplicate lexicon entry {key}")
        self.entries[key] = entry

    def get(self, surface: str, language: str) -> LexEntry | None:
        return self.entries.get((surface, language))

    def surfaces(self, language: str) -> set[str]:
        return {s for (s, l) in self.entries if l == language}

    def by_predicate(self) -> dict[str, LexEntry]:
        """Word predicate (head of a noun/propn annotation) -> entry."""
        out: dict[str, LexEntry] = {}
        for entry in self.entries.values():
            pred = _head_predicate(entry.semantics)
            if pred is not None and entry.category in ("N", "PROPN"):
                out.setdefault(pred, entry)
        return out


def _head_predicate(sem: Term) -> str | None:
    from .terms import Lambda, Ref

    t = sem
    if isinstance(t, Ref):
        t = t.restriction
    if isinstance(t, Lambda):
        t = t.body
    if isinstance(t, Compound) and t.functor not in ("and", "app"):
        return t.functor
    return None


def load_lexicon(text: str) -> Lexicon:
    lex = Lexicon()
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LEX_LINE.match(line)
        if not m:
            raise LexiconError(f"lexicon line {n}: cannot parse {raw!r}")
        pos = m.group("pos")
        cat = _CATEGORY_NAMES.get(pos)
        if cat is None:
            raise LexiconError(f"lexicon line {n}: unknown category {pos!r}")
        feats = frozenset(
            tuple(kv.split("=", 1)) for kv in (m.group("feats") or "").split(",") if kv
        )
        sem = parse_term(m.group("sem").strip())
        if free_vars(sem):
            raise LexiconError(f"lexicon line {n}: semantics not closed: {m.group('sem')}")
        lex.add(
            LexEntry(
                surface=m.group("surface"),
                language=m.group("lang"),
                category=cat,
                pos=pos,
                features=feats,
                semantics=sem,
                root=m.group("root"),
            )
        )
    return lex


# ---------------------------------------------------------------------------
# Buckwalter word table
# ---------------------------------------------------------------------------

class BuckwalterTable:
    """Word-level script <-> Buckwalter mapping for the builtin vocabulary."""

    def __init__(self, pairs: list[tuple[str, str]]):
        self.to_buckwalter = {a: b for a, b in pairs}
        self.to_script = {b: a for a, b in pairs}
        self.pairs = pairs


def load_buckwalter(text: str) -> BuckwalterTable:
    pairs = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise LexiconError(f"buckwalter table line {n}: want two tab-separated columns")
        pairs.append((cols[0], cols[1]))
    return BuckwalterTable(pairs)


_ARABIC_CHAR = re.compile(r"[؀-ۿ]")
_EN_OK = re.compile(r"[a-zA-Z\s.,;:!?()'\-]")
_BW_OK = re.compile(r"[a-zA-Z'|>&<}{*$~_؀-ۿ]")
_PUNCT = ".,;:!?()"


# ---------------------------------------------------------------------------
# Grammar: tokenizer + chart parser
# ---------------------------------------------------------------------------

class Grammar:
    def __init__(self, lexicon: Lexicon, buckwalter: BuckwalterTable):
        self.lexicon = lexicon
        self.buckwalter = buckwalter
        self.rules = {lang: instantiate_rules(lang) for lang in LANGUAGE_CONSTRAINTS}
        self._ar_surfaces = lexicon.surfaces("ar")

    # -- tokenizing -----------------------------------------------------

    def tokenize(self, text: str, language: str) -> list[str]:
        if language == "en":
            return self._tokenize_en(text)
        if language == "ar":
            return self._tokenize_ar(text)
        raise PrepdiagFault(f"unknown language {language!r}")

    def _tokenize_en(self, text: str) -> list[str]:
        for i, ch in enumerate(text):
            if not _EN_OK.match(ch):
                raise TokenError(f"unexpected character {ch!r}", i)
        return [w for w in re.split(r"[^a-z']+", text.lower()) if w]

    def _tokenize_ar(self, text: str) -> list[str]:
        tokens: list[str] = []
        offset = 0
        for word in text.split():
            start = text.index(word, offset)
            offset = start + len(word)
            word = word.strip(_PUNCT + "،؟۔")  # incl. Arabic comma etc.
            if not word:
                continue
            for i, ch in enumerate(word):
                if not _BW_OK.match(ch) and ch not in "+":
                    raise TokenError(f"unexpected character {ch!r}", start + i)
            if _ARABIC_CHAR.search(word):
                word = self.buckwalter.to_buckwalter.get(word, word)
            tokens.extend(self._segment(word))
        return tokens

    def _segment(self, word: str) -> list[str]:
        """Split Al+ and +y clitics when the remainder is a known stem."""
        surfaces = self._ar_surfaces
        if word in surfaces:
            return [word]
        if word.startswith("Al") and word[2:] in surfaces:
            return [AL, word[2:]]
        if word.endswith("y"):
            stem = word[:-1]
            if stem in surfaces:
                return [stem, POSS_CLITIC]
            if stem.endswith("t") and stem[:-1] + "p" in surfaces:
                return [stem[:-1] + "p", POSS_CLITIC]
        return [word]

    # -- parsing ----------------------------------------------------------

    def parse(self, tokens: list[str], language: str) -> list[Sign]:
        """All complete analyses, deterministic order; [] means no parse."""
        chart = self.parse_chart(tokens, language)
        n = len(tokens)
        return [s for s in chart if s.category.name == "S" and s.span == (0, n)]

    def parse_chart(self, tokens: list[str], language: str) -> list[Sign]:
        """The full packed chart (every proposed edge, deduplicated)."""
        rules = self.rules[language]
        fresh_n = [0]

        def namer(stem: str) -> str:
            fresh_n[0] += 1
            base = stem.rstrip("0123456789") or "X"
            return f"{base}{fresh_n[0]}"

        chart: list[Sign] = []
        seen: set[tuple] = set()
        agenda: list[Sign] = []

        for i, tok in enumerate(tokens):
            entry = self.lexicon.get(tok, language)
            if entry is None:
                raise UnknownWordError(tok)
            sem = rename_bound(entry.semantics, namer)
            agenda.append(
                Sign(i, i + 1, Category(entry.category, entry.features), sem, (), "lex", tok)
            )

        def propose(sign: Sign) -> None:
            key = (sign.start, sign.end, sign.category, term_key(sign.semantics))
            if key in seen:
                return
            seen.add(key)
            agenda.append(sign)

        def combine(rule: GrammarRule, children: tuple[Sign, ...]) -> None:
            for child, (cat, req) in zip(children, rule.daughters):
                if not child.category.satisfies(cat, req):
                    return
            sems = {}
            for child, (cat, _) in zip(children, rule.daughters):
                sems.setdefault(cat, child.semantics)
            sem = self._compose(rule.composer, sems)
            propose(
                Sign(
                    children[0].start,
                    children[-1].end,
                    rule.mother,
                    sem,
                    children,
                    rule.schema,
                )
            )

        while agenda:
            sign = agenda.pop(0)
            chart.append(sign)
            for rule in rules:
                if len(rule.daughters) == 1:
                    combine(rule, (sign,))
                else:
                    for other in list(chart):
                        if other.end == sign.start:
                            combine(rule, (other, sign))
                        if other.start == sign.end:
                            combine(rule, (sign, other))
        return chart

    def _compose(self, composer: tuple, sems: dict[str, Term]) -> Term:
        if composer[0] == "take":
            return sems[composer[1]]
        if composer[0] == "apply":
            return beta_reduce(App(sems[composer[1]], sems[composer[2]]))
        if composer[0] == "utterance":
            core = beta_reduce(App(sems["PRED"], sems["NP"]))
            return Compound("utt", (Const("claim"), core))
        raise PrepdiagFault(f"unknown composer {composer!r}")

    def parse_text(self, text: str, language: str) -> list[Sign]:
        return self.parse(self.tokenize(text, language), language)

    # -- display helpers ---------------------------------------------------

    def script_form(self, surface: str) -> str | None:
        return self.buckwalter.to_script.get(surface)

    def word_label(self, surface: str, language: str) -> str:
        """Learner-facing label: Arabic as 'script (BW)', English as-is."""
        if language == "ar":
            script = self.script_form(surface)
            return f"{script} ({surface})" if script else surface
        return surface


@lru_cache(maxsize=1)
def builtin_grammar() -> Grammar:
    data = resources.files("prepdiag.data")
    lexicon = load_lexicon(data.joinpath("lexicon.lex").read_text("utf-8"))
    table = load_buckwalter(data.joinpath("buckwalter.tsv").read_text("utf-8"))
    return Grammar(lexicon, table)


def tokenize(text: str, language: str) -> list[str]:
    return builtin_grammar().tokenize(text, language)


def parse(tokens: list[str], language: str) -> list[Sign]:
    return builtin_grammar().parse(tokens, language)
