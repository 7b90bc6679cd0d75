"""Independent oracles the test suite checks the engine against.

``naive_forward`` evaluates the *flattened* Horn clauses bottom-up with
brute-force body matching: no guard nesting, no fact indexing, no clever
join order.  It shares only the semantics with the saturation engine --
fire once per (rule, binding), reuse witnesses that already satisfy the
existential part, suppress existentials past the depth cap -- so agreeing
fixpoints are evidence, not tautology.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from prepdiag.kb import COMPAT, KnowledgeBase
from prepdiag.model import alpha_key
from prepdiag.terms import (
    Entity,
    Literal,
    Substitution,
    Var,
    canon,
    free_vars,
    unify_literals,
)


def _brute_matches(
    body: tuple[Literal, ...], facts: list[Literal], lattice, s: Substitution | None = None
) -> Iterator[Substitution]:
    s = s if s is not None else Substitution()
    if not body:
        yield s
        return
    lit, rest = body[0], body[1:]
    if lit.predicate == COMPAT:
        a, b = (s.apply(t) for t in lit.args)
        from prepdiag.terms import Const

        if isinstance(a, Const) and isinstance(b, Const) and lattice.compatible(a.name, b.name):
            yield from _brute_matches(rest, facts, lattice, s)
        return
    for fact in facts:  # deliberately no index: scan everything
        s2 = unify_literals(lit, fact, s)
        if s2 is not None:
            yield from _brute_matches(rest, facts, lattice, s2)


def naive_forward(
    kb: KnowledgeBase,
    start: Iterable[Literal],
    language: str,
    cap: int = 2,
    limit: int = 10_000,
    stop_at: Literal | None = None,
) -> tuple[list[Literal], bool]:
    """Fixpoint of the flat Horn clauses; returns (facts, stop_at_found)."""
    groups: dict[str, dict] = {}
    for c in kb.horn:
        if c.language not in (language, "both"):
            continue
        g = groups.setdefault(
            c.source_rule, {"body": c.body, "heads": [], "ex": c.existential_vars}
        )
        g["heads"].append(c.head)

    facts: list[Literal] = []
    keys: set[str] = set()
    depths: dict[Entity, int] = {}
    found = [False]

    def add(lit: Literal) -> None:
        k = alpha_key(lit)
        if k in keys:
            return
        if len(facts) >= limit:
            raise RuntimeError("oracle fact limit exceeded")
        keys.add(k)
        facts.append(lit)
        for e in lit.entities():
            depths.setdefault(e, 0)
        # a target with variables counts as derived once any instance is
        if stop_at is not None and unify_literals(stop_at, lit) is not None:
            found[0] = True

    for lit in start:
        add(lit)

    next_id = [1 + max((int(e.ident) for e in depths if e.ident.isdigit()), default=0)]
    fired: set[tuple[str, tuple[str, ...]]] = set()

    changed = True
    while changed and not found[0]:
        changed = False
        for rule_name, g in groups.items():
            body_vars = sorted({v for lit in g["body"] for a in lit.args for v in free_vars(a)})
            for theta in list(_brute_matches(g["body"], facts, kb.lattice)):
                key = (rule_name, tuple(canon(theta.apply(Var(v))) for v in body_vars))
                if key in fired:
                    continue
                fired.add(key)
                changed = True
                ex = set(g["ex"])
                plain = [h for h in g["heads"] if not (ex & _head_vars(h))]
                witness = [h for h in g["heads"] if ex & _head_vars(h)]
                for h in plain:
                    add(theta.apply_literal(h))
                if not witness:
                    continue
                inst = [theta.apply_literal(h) for h in witness]
                if next(_brute_matches(tuple(inst), facts, kb.lattice), None) is not None:
                    continue  # witnesses already present for this binding
                entities = [
                    t for v in body_vars
                    if isinstance((t := theta.apply(Var(v))), Entity)
                ]
                wd = 1 + (min(depths[e] for e in entities) if entities else 0)
                if wd > cap:
                    continue
                s2 = theta
                for v in g["ex"]:
                    w = Entity(str(next_id[0]))
                    next_id[0] += 1
                    depths[w] = wd
                    s2 = s2.bind(v, w)
                for h in witness:
                    add(s2.apply_literal(h))
                if found[0]:
                    break
            if found[0]:
                break
    return facts, found[0]


def _head_vars(lit: Literal) -> set[str]:
    return {v for a in lit.args for v in free_vars(a)}


def derives(kb: KnowledgeBase, start: Iterable[Literal], language: str, target: Literal, cap: int = 2) -> bool:
    _, found = naive_forward(kb, start, language, cap=cap, stop_at=target)
    return found
