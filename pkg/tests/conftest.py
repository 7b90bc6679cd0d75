import itertools
from pathlib import Path

import pytest

from prepdiag.engine import Engine
from prepdiag.session import Session
from prepdiag.terms import Literal, parse_literal

GOLDENS = Path(__file__).parent / "goldens"

# documented wrong-preposition attempts, one per bank exercise
WRONG_ATTEMPTS = {
    "ex-office-floor": "mktby Ely AlTAbq AlvAny.",
    "ex-office-building": "Almktb Ely AlmbnY.",
    "ex-book-shelf": "AlktAb fy Alrf.",
    "ex-office-floor-the": "Almktb Ely AlTAbq AlvAny.",
    "ex-office-building-my": "mktby Ely AlmbnY.",
    "ex-room-building": "Algrfp Ely AlmbnY.",
    "ex-book-shelf-my": "ktAby fy Alrf.",
    "ex-book-room": "AlktAb Ely Algrfp.",
    "ex-cup-table": "Alkwb fy AlTAwlp.",
    "ex-room-floor": "grfty Ely AlTAbq AlvAny.",
    "ex-box-kitchen": "AlSndwq Ely AlmTbx.",
    "ex-book-bag": "AlktAb Ely AlHqybp.",
}

_counter = itertools.count()

# filled by the acceptance module; echoed after the run so the pass/fail
# lines survive output capturing
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def engine() -> Engine:
    return Engine()  # bank validation on: exercises the self-consistency gate


@pytest.fixture(scope="session")
def kb(engine):
    return engine.kb


@pytest.fixture(scope="session")
def grammar(engine):
    return engine.grammar


@pytest.fixture()
def make_session():
    def make() -> Session:
        return Session(f"test-{next(_counter)}")

    return make


def load_golden_literals(name: str) -> list[Literal]:
    # comment lines start with '#'; entity ids inside literals also use '#',
    # so only whole-line comments are recognized
    out = []
    for raw in (GOLDENS / name).read_text("utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            out.append(parse_literal(line))
    return out


def load_golden_text(name: str) -> str:
    return (GOLDENS / name).read_text("utf-8")
