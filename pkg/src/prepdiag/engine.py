"""Ties the pipeline together behind one object the CLI and service share."""

from __future__ import annotations

from .diagnostics import Diagnoser, Diagnosis, MessageCatalog, builtin_templates, compare_models
from .errors import ParseFailure, PrepdiagFault
from .exercises import Exercise, builtin_bank_text, load_bank
from .grammar import Grammar, builtin_grammar
from .kb import KnowledgeBase, builtin_kb, load_kb
from .lf import LogicalForm, build_lf
from .model import Model
from .session import Session
from .terms import parse_literal


class Engine:
    def __init__(
        self,
        kb: KnowledgeBase | None = None,
        grammar: Grammar | None = None,
        catalog: MessageCatalog | None = None,
        bank_text: str | None = None,
        validate_bank: bool = True,
    ):
        self.kb = kb or builtin_kb()
        self.grammar = grammar or builtin_grammar()
        self.catalog = catalog or builtin_templates()
        self.diagnoser = Diagnoser(self.kb, self.grammar, self.catalog)
        self.exercises: dict[str, Exercise] = {}
        for ex in load_bank(bank_text if bank_text is not None else builtin_bank_text()):
            self.exercises[ex.id] = ex
        if validate_bank:
            self.validate_bank()

    # -- bank ---------------------------------------------------------------

    def validate_bank(self) -> None:
        """Self-consistency gate: sources parse, references are accepted."""
        scratch = Session("bank-validation")
        for ex in self.exercises.values():
            if not self.grammar.parse_text(ex.source_text, ex.source_language):
                raise PrepdiagFault(
                    f"exercise {ex.id}: source does not parse: {ex.source_text!r}"
                )
            for ref in ex.reference_translations:
                d = self.diagnoser.diagnose(ex, ref, scratch)
                if d.verdict != "accepted":
                    raise PrepdiagFault(
                        f"exercise {ex.id}: reference {ref!r} got verdict {d.verdict}"
                    )

    def exercise(self, exercise_id: str) -> Exercise | None:
        return self.exercises.get(exercise_id)

    # -- pipeline ------------------------------------------------------------

    def lf_for(self, text: str, language: str) -> LogicalForm:
        signs = self.grammar.parse_text(text, language)
        if not signs:
            raise ParseFailure(text)
        return build_lf(signs[0])

    def model_for(self, text: str, language: str, session: Session | None = None, cap: int = 2) -> Model:
        session = session or Session("adhoc")
        return self.diagnoser.model_for(text, language, session, cap=cap)

    def diagnose(self, exercise_id: str, attempt_text: str, session: Session) -> Diagnosis:
        ex = self.exercises.get(exercise_id)
        if ex is None:
            raise KeyError(exercise_id)
        return self.diagnoser.diagnose(ex, attempt_text, session)

    def why(self, session: Session, diagnosis_id: str, literal_text: str) -> Diagnosis:
        diagnosis = session.get_diagnosis(diagnosis_id)
        if diagnosis is None:
            from .errors import StaleDiagnosisError

            raise StaleDiagnosisError(f"no diagnosis {diagnosis_id!r} in session {session.id}")
        literal = parse_literal(literal_text)
        return self.diagnoser.why(diagnosis, literal, session)

    def comparison_view(self, session: Session, diagnosis_id: str) -> dict:
        diagnosis = session.get_diagnosis(diagnosis_id)
        if diagnosis is None or diagnosis.attempt_model is None or diagnosis.source_model is None:
            from .errors import StaleDiagnosisError

            raise StaleDiagnosisError(f"no comparable diagnosis {diagnosis_id!r}")
        mismatches = compare_models(diagnosis.source_model, diagnosis.attempt_model, self.kb)
        from .terms import canon_literal

        def rec(r):
            return (
                None
                if r is None
                else {
                    "language": r.language,
                    "literal": canon_literal(r.literal),
                    "located": r.located,
                }
            )

        return {
            "diagnosis_id": diagnosis_id,
            "mismatches": [
                {"kind": m.kind, "source": rec(m.source), "attempt": rec(m.attempt)}
                for m in mismatches
            ],
            "source_facts": diagnosis.source_model.to_strings(),
            "attempt_facts": diagnosis.attempt_model.to_strings(),
        }


def load_engine(kb_path: str | None = None, bank_path: str | None = None, validate_bank: bool = True) -> Engine:
    kb = None
    if kb_path:
        with open(kb_path, encoding="utf-8") as fh:
            kb = load_kb(fh.read())
    bank_text = None
    if bank_path:
        with open(bank_path, encoding="utf-8") as fh:
            bank_text = fh.read()
    return Engine(kb=kb, bank_text=bank_text, validate_bank=validate_bank)
