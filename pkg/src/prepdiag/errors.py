"""Exception hierarchy.

Faults are engine-level problems (malformed rule files, runaway reduction,
contract violations).  Learner-level outcomes (a sentence that does not
parse, a word outside the lexicon) are *not* faults: they are signalled
with their own exception types so callers can turn them into verdicts.
"""


class PrepdiagFault(Exception):
    """An engine fault: bad authoring data or a broken contract."""


class BetaOverflowError(PrepdiagFault):
    """Reduction step cap exceeded; the grammar annotation is malformed."""


class KbError(PrepdiagFault):
    """Problem in a knowledge-base file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}" + (f", col {column}" if column is not None else "") + f": {message}"
        super().__init__(message)


class ScopingError(KbError):
    """A rule uses a variable bound by no quantifier."""


class ArityError(KbError):
    """A predicate is used with two different arities."""


class UnknownTypeError(PrepdiagFault):
    """A type name not registered in the lattice."""


class UnknownPredicateError(PrepdiagFault):
    """A predicate the knowledge base knows nothing about."""


class SaturationOverflowError(PrepdiagFault):
    """Fact budget exhausted before reaching a fixpoint."""


class InconsistentModelError(PrepdiagFault):
    """An entity acquired types from two different partitions."""


class UnsupportedUtteranceError(PrepdiagFault):
    """Only claims are handled."""


class UnsupportedRestrictionError(PrepdiagFault):
    """A referring term whose restriction is not a conjunction of literals."""


class StaleDiagnosisError(PrepdiagFault):
    """A drill-down request referenced a diagnosis or literal we no longer hold."""


class TemplateError(PrepdiagFault):
    """Missing or malformed message template."""


class LexiconError(PrepdiagFault):
    """Problem in a lexicon file."""


class TokenError(PrepdiagFault):
    """Unknown character during tokenization."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (offset {offset})")


class UnknownWordError(Exception):
    """Learner-level: a token with no lexicon entry."""

    def __init__(self, token: str):
        self.token = token
        super().__init__(f"unknown word: {token!r}")


class ParseFailure(Exception):
    """Learner-level: the token sequence is not in the grammar's language."""
