import pytest

from prepdiag.errors import UnsupportedRestrictionError, UnsupportedUtteranceError
from prepdiag.grammar import Category, Sign
from prepdiag.lf import anchor, build_lf
from prepdiag.model import model_isomorphic
from prepdiag.terms import (
    Compound,
    Const,
    EntityAllocator,
    alpha_equal,
    parse_literal,
    parse_term,
)


def _lf(grammar, text, lang):
    signs = grammar.parse_text(text, lang)
    assert signs
    return build_lf(signs[0])


def test_build_lf_wraps_claim(grammar):
    lf = _lf(grammar, "My office is on the second floor.", "en")
    assert lf.utterance_type == "claim"
    assert alpha_equal(
        lf.body,
        parse_term(
            "on(ref(lam(E, and(own(ref(lam(F, speaker(F))), E), office(E)))), "
            "ref(lam(G, and(floor(G), second(G, lam(H, floor(H)))))))"
        ),
    )


def test_build_lf_rejects_non_utterance():
    bogus = Sign(0, 1, Category("S"), Const("x"))
    with pytest.raises(UnsupportedUtteranceError):
        build_lf(bogus)


def test_build_lf_rejects_non_claim():
    bogus = Sign(0, 1, Category("S"), Compound("utt", (Const("query"), Const("x"))))
    with pytest.raises(UnsupportedUtteranceError):
        build_lf(bogus)


def test_anchor_en_facts(grammar):
    lf = _lf(grammar, "My office is on the second floor.", "en")
    got = anchor(lf, EntityAllocator())
    want = [
        parse_literal(s)
        for s in [
            "type(#user, human)",
            "own(#user, #1)",
            "office(#1)",
            "floor(#2)",
            "second(#2, lam(H, floor(H)))",
            "on(#1, #2)",
        ]
    ]
    assert model_isomorphic(list(got.facts), want) is not None


def test_anchor_ar_facts(grammar):
    lf = _lf(grammar, "mktby Ely AlTAbq AlvAny.", "ar")
    got = anchor(lf, EntityAllocator())
    want = [
        parse_literal(s)
        for s in [
            "type(#user, human)",
            "owner(#user, #1)",
            "ktb_office(#1)",
            "Tbq_floor(#2)",
            "vny_second(#2)",
            "Ely(#1, #2)",
        ]
    ]
    assert model_isomorphic(list(got.facts), want) is not None


def test_anchor_two_plain_refs(grammar):
    lf = _lf(grammar, "The office is in the building.", "en")
    got = anchor(lf, EntityAllocator())
    want = [parse_literal(s) for s in ["office(#1)", "building(#2)", "in(#1, #2)"]]
    assert model_isomorphic(list(got.facts), want) is not None


def test_anchor_injective_and_ground(grammar):
    lf = _lf(grammar, "My room is on the second floor.", "ar" if False else "en")
    got = anchor(lf, EntityAllocator())
    non_user = [e for _, e in got.anchors if e.ident != "user"]
    assert len(non_user) == len(set(non_user))
    assert all(f.is_ground() for f in got.facts)


def test_anchor_records_lexical_predicates(grammar):
    lf = _lf(grammar, "mktby Ely AlTAbq AlvAny.", "ar")
    got = anchor(lf, EntityAllocator())
    words = set(got.entity_words.values())
    assert {"speaker", "ktb_office", "Tbq_floor"} <= words


def test_reanchoring_isomorphic(grammar):
    lf = _lf(grammar, "My office is on the second floor.", "en")
    a = anchor(lf, EntityAllocator())
    b = anchor(lf, EntityAllocator(100))
    assert model_isomorphic(list(a.facts), list(b.facts)) is not None


def test_anchor_rejects_non_conjunctive_restriction():
    from prepdiag.lf import LogicalForm
    from prepdiag.terms import Lambda, Ref, Var

    weird = LogicalForm(
        "claim",
        Compound("in", (Ref(Lambda("X", Lambda("Y", Var("Y")))), Const("a"))),
    )
    with pytest.raises(UnsupportedRestrictionError):
        anchor(weird, EntityAllocator())
