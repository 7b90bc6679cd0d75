"""Command-line front end.

Exit status: 0 on success (including a rejected diagnosis, which is a
successful diagnosis), 1 on learner-level outcomes (no parse, unknown
word), 2 on faults and usage errors.  PREPDIAG_KB overrides the builtin
knowledge base unless --kb is given explicitly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .engine import Engine, load_engine
from .errors import ParseFailure, PrepdiagFault, UnknownWordError
from .kb import load_kb
from .session import Session


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prepdiag")
    p.add_argument("--kb", help="knowledge base file (default: builtin or $PREPDIAG_KB)")
    p.add_argument("--bank", help="exercise bank file (default: builtin)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="print the logical form of a sentence")
    sp.add_argument("--lang", choices=("en", "ar"), required=True)
    sp.add_argument("text")

    sm = sub.add_parser("model", help="print the saturated model of a sentence")
    sm.add_argument("--lang", choices=("en", "ar"), required=True)
    sm.add_argument("--cap", type=int, default=2, help="skolem depth cap (default 2)")
    sm.add_argument("text")

    sd = sub.add_parser("diagnose", help="diagnose a translation attempt")
    sd.add_argument("--exercise", required=True)
    sd.add_argument("--answer", required=True)
    sd.add_argument("--trace", action="store_true", help="include proof traces")
    sd.add_argument("--json", action="store_true", help="emit the diagnosis as JSON")

    sc = sub.add_parser("check-kb", help="validate a knowledge base file")
    sc.add_argument("file")

    ss = sub.add_parser("serve", help="start the HTTP service")
    ss.add_argument("--port", type=int, default=8000)
    ss.add_argument("--host", default="127.0.0.1")
    ss.add_argument("--kb", default=argparse.SUPPRESS, help="knowledge base file")
    ss.add_argument("--bank", default=argparse.SUPPRESS, help="exercise bank file")
    ss.add_argument("--sessions", default=None, help="directory for session logs")
    return p


def _engine(args) -> Engine:
    kb_path = args.kb or os.environ.get("PREPDIAG_KB")
    return load_engine(kb_path=kb_path, bank_path=args.bank)


def _print_diagnosis(d, engine: Engine, out, indent: str = "") -> None:
    out.write(f"{indent}[{d.verdict}] {d.message}\n")
    for chip in d.chips:
        out.write(f"{indent}  missing: {chip['literal']}  ({chip['label']})\n")


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    out = sys.stdout
    try:
        if args.command == "check-kb":
            with open(args.file, encoding="utf-8") as fh:
                kb = load_kb(fh.read())
            out.write(f"OK: {len(kb.rules)} rules\n")
            return 0

        engine = _engine(args)

        if args.command == "parse":
            lf = engine.lf_for(args.text, args.lang)
            out.write(lf.render() + "\n")
            return 0

        if args.command == "model":
            model = engine.model_for(args.text, args.lang, cap=args.cap)
            out.write(model.serialize())
            return 0

        if args.command == "diagnose":
            session = Session("cli")
            d = engine.diagnose(args.exercise, args.answer, session)
            if args.json:
                out.write(json.dumps(d.to_dict(trace=args.trace), ensure_ascii=False, indent=2) + "\n")
            else:
                _print_diagnosis(d, engine, out)
                if args.trace and d.outcome is not None:
                    for r in d.outcome.results:
                        out.write(f"  trace: {list(r.proof_trace)}\n")
            return 1 if d.verdict in ("no_parse", "unknown_word") else 0

        if args.command == "serve":
            import uvicorn

            from .service import build_app

            app = build_app(engine, sessions_dir=args.sessions)
            uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
            return 0

        raise PrepdiagFault(f"unknown command {args.command!r}")
    except UnknownWordError as exc:
        sys.stderr.write(f"unknown word: {exc.token}\n")
        return 1
    except ParseFailure as exc:
        sys.stderr.write(f"no parse: {exc}\n")
        return 1
    except KeyError as exc:
        sys.stderr.write(f"unknown exercise: {exc}\n")
        return 2
    except PrepdiagFault as exc:
        sys.stderr.write(f"fault: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"io error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
