"""Backward chaining that may assume a bounded number of missing literals.

The prover works over the flattened Horn clauses, closing leaves against
model facts and the type lattice.  A leaf whose predicate is abducible
may instead be *assumed*; the number of assumptions allowed is raised
one step at a time (0, 1, 2, ...) so the first budget that yields any
proof yields exactly the minimal-cost missing sets.

Ground rules of the search:

* the root goal is never closed by assumption (otherwise every query
  would trivially answer "assume the target");
* ``located`` clauses are only explored when their first body literal --
  the preposition use -- already holds in the model;
* a ground ``compat`` leaf is decided by the lattice and never assumed;
  when it is false the branch dies and the failure is reported as a
  blocker, since no amount of assuming makes two partitions compatible;
* an entity that already has a type is never assumed to have another
  one, for the same reason;
* free variables in assumed literals stay variables ("some surface"),
  renamed B, C, ... for presentation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .errors import UnknownPredicateError
from .kb import COMPAT, LOCATED, HornClause, KnowledgeBase
from .model import Model
from .terms import (
    Const,
    Entity,
    Literal,
    Substitution,
    Var,
    canon_literal,
    free_vars,
    unify_literals,
)

ABDUCIBLE = frozenset(
    {
        "view",
        "type",
        "dim",
        "interior",
        "surface",
        "bottom",
        "top",
        "embedding",
        "orientable",
        "compat",
        "touching",
        "subset",
    }
)

DEFAULT_MAX_MISSING = 3
DEFAULT_DEPTH_LIMIT = 12


@dataclass(frozen=True)
class AbductionResult:
    target: Literal
    missing: tuple[Literal, ...]
    bindings: Substitution
    cost: int
    proof_trace: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Blocker:
    """A branch killed by something no assumption can repair."""

    clause: str
    literal: Literal
    kind: str  # incompatible_types | second_type


@dataclass
class AbductionOutcome:
    target: Literal
    results: list[AbductionResult]
    blockers: list[Blocker]


@dataclass
class _Search:
    kb: KnowledgeBase
    model: Model
    budget: int
    depth_limit: int
    blockers: list[Blocker] = field(default_factory=list)
    _fresh: int = 0

    def rename_clause(self, clause: HornClause) -> tuple[Literal, list[Literal], list[str]]:
        self._fresh += 1
        tag = self._fresh
        names = set()
        for lit in (clause.head, *clause.body):
            names |= {v for a in lit.args for v in free_vars(a)}
        mapping = {n: Var(f"{n}_{tag}") for n in names}
        s = Substitution(mapping)
        existentials = [f"{n}_{tag}" for n in clause.existential_vars if n in names]
        return (
            s.apply_literal(clause.head),
            [s.apply_literal(b) for b in clause.body],
            existentials,
        )

    def note_blocker(self, clause: str, literal: Literal, kind: str) -> None:
        b = Blocker(clause, literal, kind)
        if b not in self.blockers:
            self.blockers.append(b)

    # ------------------------------------------------------------------

    def prove_all(
        self,
        goals: list[tuple[Literal, str]],
        s: Substitution,
        missing: tuple[Literal, ...],
        depth: int,
        trace: tuple[tuple[str, str], ...],
        root: bool,
    ) -> Iterator[tuple[Substitution, tuple[Literal, ...], tuple[tuple[str, str], ...]]]:
        if not goals:
            yield s, missing, trace
            return
        (goal, via), rest = goals[0], goals[1:]
        inst = s.apply_literal(goal)

        if inst.predicate == COMPAT:
            a, b = inst.args
            if isinstance(a, Const) and isinstance(b, Const):
                if self.kb.lattice.compatible(a.name, b.name):
                    yield from self.prove_all(rest, s, missing, depth, trace, root)
                else:
                    self.note_blocker(via, inst, "incompatible_types")
                return
            # not yet ground: fall through to assumption

        # a ground goal the model already contains needs nothing further
        if inst.is_ground() and inst in self.model:
            yield from self.prove_all(rest, s, missing, depth, trace, root)
            return

        # reuse an assumption already made in this proof
        for had in missing:
            s2 = unify_literals(inst, had, s)
            if s2 is not None:
                yield from self.prove_all(rest, s2, missing, depth, trace, root)

        # close against the model
        for fact in self.model.with_predicate(inst.predicate):
            s2 = unify_literals(inst, fact, s)
            if s2 is not None:
                yield from self.prove_all(rest, s2, missing, depth, trace, root)

        # assume (never the root goal, never a second type for an entity)
        if not root and inst.predicate in ABDUCIBLE and len(missing) < self.budget:
            if not self._unifies_with_fact(inst) and self._assumable(inst, via):
                yield from self.prove_all(
                    rest, s, missing + (inst,), depth, trace, root
                )

        # expand clauses
        if depth > 0:
            for clause in self.kb.clauses_for(inst.predicate, self.model.language):
                head, body, existentials = self.rename_clause(clause)
                s2 = unify_literals(inst, head, s)
                if s2 is None:
                    continue
                # a pre-existing ground term cannot be claimed as the
                # clause's own minted witness
                if any(not isinstance(s2.apply(Var(e)), Var) for e in existentials):
                    continue
                if inst.predicate == LOCATED and not self._first_satisfied(body[0], s2):
                    continue
                step = (clause.name, canon_literal(s2.apply_literal(inst)))
                sub = [(b, clause.name) for b in body]
                yield from self.prove_all(
                    sub + rest, s2, missing, depth - 1, trace + (step,), False
                )

    def _unifies_with_fact(self, inst: Literal) -> bool:
        return any(
            unify_literals(inst, fact) is not None
            for fact in self.model.with_predicate(inst.predicate)
        )

    def _assumable(self, inst: Literal, via: str) -> bool:
        if inst.predicate == "type" and inst.args and isinstance(inst.args[0], Entity):
            for fact in self.model.with_predicate("type"):
                if fact.args and fact.args[0] == inst.args[0]:
                    self.note_blocker(via, inst, "second_type")
                    return False
        return True

    def _first_satisfied(self, first: Literal, s: Substitution) -> bool:
        inst = s.apply_literal(first)
        return any(
            unify_literals(inst, fact) is not None
            for fact in self.model.with_predicate(inst.predicate)
        )


def _missing_signature(missing: tuple[Literal, ...]) -> str:
    """Order-and-renaming-independent key for a missing set."""

    def blank(m: Literal) -> str:
        vs = {v for a in m.args for v in free_vars(a)}
        return canon_literal(Substitution({v: Var("_") for v in vs}).apply_literal(m))

    order = [m for _, m in sorted((blank(m), m) for m in missing)]
    names: dict[str, str] = {}
    out = []
    for m in order:
        for a in m.args:
            for v in _var_order(a):
                names.setdefault(v, f"_v{len(names)}")
        out.append(canon_literal(Substitution({k: Var(n) for k, n in names.items()}).apply_literal(m)))
    return " & ".join(out)


def _var_order(t) -> list[str]:
    from .terms import App, Compound, Lambda, Ref

    if isinstance(t, Var):
        return [t.name]
    if isinstance(t, Compound):
        out = []
        for a in t.args:
            out.extend(_var_order(a))
        return out
    if isinstance(t, App):
        return _var_order(t.func) + _var_order(t.arg)
    if isinstance(t, (Lambda, Ref)):
        return []
    return []


def _presentation_rename(result_missing: tuple[Literal, ...]) -> tuple[Literal, ...]:
    """Rename free variables to B, C, D ... in order of appearance."""
    names: dict[str, str] = {}
    alphabet = "BCDEFGHIJKLMNOPQ"
    for m in result_missing:
        for a in m.args:
            for v in _var_order(a):
                if v not in names:
                    names[v] = alphabet[len(names) % len(alphabet)]
    s = Substitution({k: Var(n) for k, n in names.items()})
    return tuple(s.apply_literal(m) for m in result_missing)


def abduce_outcome(
    target: Literal,
    model: Model,
    kb: KnowledgeBase,
    max_missing: int = DEFAULT_MAX_MISSING,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> AbductionOutcome:
    """Iterative-deepening abduction; results are all minimal missing sets."""
    if not kb.knows_predicate(target.predicate):
        raise UnknownPredicateError(f"unknown predicate {target.predicate!r}")

    blockers: list[Blocker] = []
    for k in range(0, max_missing + 1):
        search = _Search(kb, model, budget=k, depth_limit=depth_limit)
        found: list[AbductionResult] = []
        seen: set[str] = set()
        for s, missing, trace in search.prove_all(
            [(target, "goal")], Substitution(), (), depth_limit, (), True
        ):
            sig = _missing_signature(missing)
            if sig in seen:
                continue
            seen.add(sig)
            bindings = Substitution(
                {v: s.apply(Var(v)) for a in target.args for v in free_vars(a) if v in s}
            )
            found.append(
                AbductionResult(
                    target=target,
                    missing=_presentation_rename(missing),
                    bindings=bindings,
                    cost=len(missing),
                    proof_trace=trace,
                )
            )
        blockers = search.blockers
        if found:
            low = min(r.cost for r in found)
            return AbductionOutcome(target, [r for r in found if r.cost == low], blockers)
    return AbductionOutcome(target, [], blockers)


def abduce(
    target: Literal,
    model: Model,
    kb: KnowledgeBase,
    max_missing: int = DEFAULT_MAX_MISSING,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> list[AbductionResult]:
    return abduce_outcome(target, model, kb, max_missing, depth_limit).results
