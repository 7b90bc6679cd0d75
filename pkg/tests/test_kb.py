import random

import pytest

from prepdiag.errors import ArityError, KbError, ScopingError
from prepdiag.kb import flatten, load_kb
from prepdiag.model import model_isomorphic, saturate
from prepdiag.terms import Const, Entity, Literal, Var, canon_literal

from .oracles import naive_forward


def _clause_text(clause) -> str:
    body = ", ".join(canon_literal(b) for b in clause.body)
    return f"{canon_literal(clause.head)} <- {body}"


def test_builtin_kb_loads_expected_rules(kb):
    names = {r.name for r in kb.rules}
    assert {
        "in_rule",
        "on_rule",
        "fy_rule",
        "Ely_rule",
        "embed_interior",
        "embed_topbottom",
        "embed_surface",
    } <= names
    assert kb.preposition_predicates() == {
        "in": "en",
        "on": "en",
        "fy": "ar",
        "Ely": "ar",
    }


def test_flatten_in_rule_matches_expected_body(kb):
    in_rule = next(r for r in kb.rules if r.name == "in_rule")
    located = next(c for c in flatten(in_rule) if c.head.predicate == "located")
    assert _clause_text(located) == (
        "located(B, C) <- in(B, C), view(B, F), type(F, D), dim(F, E), "
        "view(C, H), type(H, G), compat(D, G), dim(H, E), interior(H, I)"
    )


def test_flatten_on_rule_matches_expected_body(kb):
    on_rule = next(r for r in kb.rules if r.name == "on_rule")
    located = next(c for c in flatten(on_rule) if c.head.predicate == "located")
    assert _clause_text(located) == (
        "located(B, C) <- on(B, C), view(B, E), type(E, D), "
        "view(C, G), type(G, F), compat(D, F), bottom(E, H), surface(G, I)"
    )


def test_flatten_degenerate_single_clause():
    kb = load_kb("rule only (both): all B: [p(B)] => q(B).")
    clauses = kb.horn
    assert len(clauses) == 1
    assert _clause_text(clauses[0]) == "q(B) <- p(B)"


def test_word_sugar_expansion():
    kb = load_kb("word floor (en): type physical, embedding2 orientable.")
    rule = kb.rules[0]
    assert rule.is_word_rule and rule.language == "en"
    level = rule.guard_levels()[0]
    assert [canon_literal(l) for l in level.guard] == ["floor(B)"]
    cons = rule.consequent()
    assert list(cons.existential_vars) == ["C"]
    assert [canon_literal(l) for l in cons.literals] == [
        "type(B, physical)",
        "embedding(C, B, r2)",
        "orientable(C)",
    ]


def test_unbound_variable_rejected():
    with pytest.raises(ScopingError):
        load_kb("rule bad (both): all B: [p(B)] => q(B, Z).")


def test_arity_clash_rejected():
    with pytest.raises(ArityError):
        load_kb("rule a (both): all B: [p(B)] => q(B).\nrule b (both): all B C: [p(B, C)] => q(B).")


def test_parse_error_carries_line():
    with pytest.raises(KbError) as exc:
        load_kb("partition physical.\nrule broken (both) all B.")
    assert exc.value.line == 2


def test_located_rule_needs_single_preposition_guard():
    bad = (
        "rule odd (en):\n"
        "  all B C: [in(B, C), on(B, C)]\n"
        "  => located(B, C).\n"
    )
    with pytest.raises(KbError):
        load_kb(bad)


def test_round_trip_serialization(kb):
    text = kb.serialize()
    again = load_kb(text)
    assert len(again.rules) == len(kb.rules)
    for a, b in zip(kb.horn, again.horn):
        assert _canonical_clause(a) == _canonical_clause(b)
    assert again.equivalences == kb.equivalences
    assert set(again.lattice.types) == set(kb.lattice.types)


def _canonical_clause(clause) -> str:
    names: dict[str, str] = {}

    def rn(lit: Literal) -> str:
        from prepdiag.terms import Substitution, free_vars

        for a in lit.args:
            for v in sorted(free_vars(a)):
                names.setdefault(v, f"v{len(names)}")
        return canon_literal(Substitution({k: Var(n) for k, n in names.items()}).apply_literal(lit))

    return rn(clause.head) + " <- " + ", ".join(rn(b) for b in clause.body)


def test_arabic_rules_twin_english_spatial_rules(kb):
    # same body structure, different preposition predicate
    pairs = [("in_rule", "fy_rule", "in", "fy"), ("on_rule", "Ely_rule", "on", "Ely")]
    for en_name, ar_name, en_prep, ar_prep in pairs:
        en_rule = next(r for r in kb.rules if r.name == en_name)
        ar_rule = next(r for r in kb.rules if r.name == ar_name)
        en_clauses = [_canonical_clause(c).replace(en_prep + "(", "P(") for c in flatten(en_rule)]
        ar_clauses = [_canonical_clause(c).replace(ar_prep + "(", "P(") for c in flatten(ar_rule)]
        assert en_clauses == ar_clauses


def _random_facts(rng: random.Random) -> list[Literal]:
    entities = [Entity(str(i)) for i in range(1, 5)]
    words = ["office", "floor", "building", "room", "shelf"]
    preps = ["in", "on"]
    facts: list[Literal] = []
    typed: set[str] = set()
    for _ in range(rng.randint(1, 12)):
        kind = rng.random()
        e = rng.choice(entities)
        if kind < 0.35:
            facts.append(Literal(rng.choice(words), (e,)))
        elif kind < 0.5:
            facts.append(Literal(rng.choice(preps), (e, rng.choice(entities))))
        elif kind < 0.65:
            if e.ident not in typed:
                typed.add(e.ident)
                facts.append(Literal("type", (e, Const("physical"))))
        elif kind < 0.8:
            facts.append(
                Literal("embedding", (rng.choice(entities), e, Const(rng.choice(["r2", "r3"]))))
            )
        elif kind < 0.9:
            facts.append(Literal("orientable", (e,)))
        else:
            facts.append(Literal("interior", (e, rng.choice(entities))))
    # dedupe, keep order
    seen = set()
    out = []
    for f in facts:
        k = canon_literal(f)
        if k not in seen:
            seen.add(k)
            out.append(f)
    return out


def test_flatten_closure_equals_guarded_closure(kb):
    # guarded saturation vs naive flat-Horn evaluation on random fact sets
    rng = random.Random(20240)
    for _ in range(20):
        facts = _random_facts(rng)
        model = saturate(facts, kb, "en")
        oracle_facts, _ = naive_forward(kb, facts, "en")
        assert model_isomorphic(model.facts, oracle_facts) is not None
