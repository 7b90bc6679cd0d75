"""Exercise bank: short English prompts with accepted Arabic translations.

Bank file lines:

    exercise <id>: en="..." ar="..." [ar="..."] scope=w1,w2,...

Multiple ar="..." fields list alternative reference translations; scope
names the lexicon surfaces the exercise expects the learner to draw on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import PrepdiagFault


@dataclass(frozen=True)
class Exercise:
    id: str
    source_language: str
    source_text: str
    reference_translations: tuple[str, ...]
    lexical_scope: tuple[str, ...] = ()


_EX_LINE = re.compile(r"^exercise\s+([A-Za-z0-9_-]+)\s*:\s*(.*)$")
_FIELD = re.compile(r'(en|ar)="([^"]*)"|scope=([^\s]+)')


def load_bank(text: str) -> list[Exercise]:
    out: list[Exercise] = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _EX_LINE.match(line)
        if not m:
            raise PrepdiagFault(f"bank line {n}: cannot parse {raw!r}")
        ex_id, rest = m.groups()
        en = None
        ars: list[str] = []
        scope: tuple[str, ...] = ()
        for fm in _FIELD.finditer(rest):
            lang, value, scope_str = fm.groups()
            if lang == "en":
                en = value
            elif lang == "ar":
                ars.append(value)
            elif scope_str:
                scope = tuple(w for w in scope_str.split(",") if w)
        if en is None or not ars:
            raise PrepdiagFault(f"bank line {n}: exercise {ex_id!r} needs en= and ar=")
        out.append(Exercise(ex_id, "en", en, tuple(ars), scope))
    ids = [e.id for e in out]
    if len(ids) != len(set(ids)):
        raise PrepdiagFault("duplicate exercise ids in bank")
    return out


@lru_cache(maxsize=1)
def builtin_bank_text() -> str:
    return resources.files("prepdiag.data").joinpath("bank.exr").read_text("utf-8")
