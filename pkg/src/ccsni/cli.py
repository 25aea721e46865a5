"""``ccsni`` command-line front end.

Exit codes: 0 positive verdict, 1 negative verdict, 2 usage or input
error, 3 state-space cap reached.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, kernels
from .core import Channel, Diagnostic, Program, SecurityLattice, check_wellformed, free_names, par, prefixes
from .equiv import EquivKind, PairSpaceExceeded, check
from .lts import DEFAULT_CAP, StateSpaceExceeded, build_lts, dump_json, to_dot
from .parser import ParseError, SourceFile, format_process, parse, parse_process, pretty_print
from .security import (
    AttackerNotHigh,
    LatticeNotTwoPoint,
    Status,
    check_bndc,
    check_bndc_with,
    check_pbndc,
    check_wbndc,
    enumerate_processes,
)
from .typesys import ASYM, SIMPLE, infer, typer

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3
MANIFEST = "expectations.json"


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# loading


def load_lattice(path: Path) -> SecurityLattice:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return SecurityLattice.from_covers(data["elements"], data.get("covers", []))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: bad lattice file: {exc}") from exc


def load_program(path: str | Path, levels: str | None = None) -> Program:
    path = Path(path)
    try:
        prog = parse(SourceFile.read(path))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    sidecar = Path(levels) if levels else path.with_name(path.stem + ".levels.json")
    if levels or sidecar.exists():
        prog = dataclasses.replace(prog, lattice=load_lattice(sidecar))
    diags = check_wellformed(prog)
    if diags:
        raise InputError("\n".join(f"{path}:{_diag_line(d)}" for d in diags))
    return prog


def _diag_line(d: Diagnostic) -> str:
    return f"{d.loc}: {d.kind}: {d.message}" if d.loc else f" {d.kind}: {d.message}"


def _emit(data, args) -> None:
    if getattr(args, "output", "json") == "text":
        print(_render(data))
    else:
        print(json.dumps(data, indent=2, sort_keys=False))


def _render(data, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(data, dict):
        lines = []
        for k, v in data.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_render(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
        return "\n".join(lines)
    if isinstance(data, list):
        return "\n".join(_render(v, indent) if isinstance(v, (dict, list)) else f"{pad}- {_scalar(v)}"
                         for v in data)
    return pad + _scalar(data)


def _scalar(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args) -> int:
    prog = load_program(args.file, args.levels)
    sys.stdout.write(pretty_print(prog))
    return EXIT_OK


def cmd_lts(args) -> int:
    prog = load_program(args.file, args.levels)
    lts = build_lts(prog, args.max_states)
    sys.stdout.write(to_dot(lts) if args.format == "dot" else dump_json(lts) + "\n")
    return EXIT_OK


def cmd_bisim(args) -> int:
    p = load_program(args.file_p, args.levels)
    q = load_program(args.file_q, args.levels)
    if p.lattice != q.lattice:
        raise InputError("the two programs use different lattices")
    verdict = check(EquivKind(args.kind), build_lts(p, args.max_states), build_lts(q, args.max_states))
    _emit(verdict.to_json(), args)
    return EXIT_OK if verdict.equivalent else EXIT_NEGATIVE


def cmd_typecheck(args) -> int:
    prog = load_program(args.file, args.levels)
    out = infer(args.system, prog)
    _emit(out.to_json(), args)
    return EXIT_OK if out.typeable else EXIT_NEGATIVE


def run_security(prog: Program, prop: str, depth: int, width: int, cap: int, attacker=None):
    if prop == "pbndc":
        return check_pbndc(prog, cap)
    if prop == "wbndc":
        return check_wbndc(prog, cap)
    if attacker is not None:
        return check_bndc_with(prog, attacker, cap)
    return check_bndc(prog, depth, width, cap)


def cmd_secure(args) -> int:
    prog = load_program(args.file, args.levels)
    attacker = None
    if args.attacker:
        if args.property != "bndc":
            raise InputError("--attacker only applies to --property bndc")
        try:
            attacker = parse_process(Path(args.attacker).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"{args.attacker}: {exc.strerror or exc}") from exc
    verdict = run_security(prog, args.property, args.depth, args.width, args.max_states, attacker)
    _emit(verdict.to_json(), args)
    # a bounded search that finds nothing is reported as a pass
    return EXIT_NEGATIVE if verdict.status is Status.INSECURE else EXIT_OK


# ---------------------------------------------------------------------------
# corpus


def _parse_bndc_expectation(text: str) -> tuple[str, int, int]:
    kind, _, bounds = text.partition("@")
    if kind not in ("insecure", "no-cex"):
        raise InputError(f"bad bndc expectation {text!r}")
    k, w = 2, 2
    if bounds:
        try:
            k, w = (int(x) for x in bounds.split(","))
        except ValueError as exc:
            raise InputError(f"bad bndc bounds in {text!r}") from exc
    return kind, k, w


def run_entry(path: str, expected: dict, cap: int, timing: bool) -> dict:
    start = time.perf_counter()
    entry: dict = {"file": Path(path).name, "results": {}}
    try:
        prog = load_program(path)
    except (ParseError, InputError) as exc:
        entry["error"] = str(exc)
        entry["match"] = False
        return entry
    results = entry["results"]
    for check_name, want in expected.items():
        if check_name.startswith("_"):
            continue  # descriptive notes
        try:
            if check_name in (SIMPLE, ASYM):
                got = infer(check_name, prog).typeable
            elif check_name in ("pbndc", "wbndc"):
                got = run_security(prog, check_name, 0, 0, cap).status.value
            elif check_name == "bndc":
                kind, k, w = _parse_bndc_expectation(want)
                v = check_bndc(prog, k, w, cap)
                got = "insecure" if v.insecure else f"no-cex@{k},{w}"
                if kind == "no-cex" and "@" not in want:
                    want = f"no-cex@{k},{w}"
            else:
                results[check_name] = {"expected": want, "actual": None, "match": False,
                                       "error": "unknown check"}
                continue
        except (StateSpaceExceeded, LatticeNotTwoPoint, InputError) as exc:
            results[check_name] = {"expected": want, "actual": None, "match": False, "error": str(exc)}
            continue
        results[check_name] = {"expected": want, "actual": got, "match": got == want}
    entry["match"] = all(r["match"] for r in results.values())
    if timing:
        entry["seconds"] = round(time.perf_counter() - start, 4)
    return entry


def _run_entry_star(job):
    return run_entry(*job)


def run_corpus(directory: str | Path, cap: int = DEFAULT_CAP, timing: bool = True, jobs: int = 1) -> dict:
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"{directory}: not a directory")
    files = sorted(directory.glob("*.ccsni"))
    manifest_path = directory / MANIFEST
    manifest: dict = {}
    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise InputError(f"{manifest_path}: {exc}") from exc
        if not isinstance(manifest, dict):
            raise InputError(f"{manifest_path}: expected a JSON object")
    elif files:
        raise InputError(f"{directory}: missing {MANIFEST}")
    unknown = sorted(set(manifest) - {f.name for f in files})
    if unknown:
        raise InputError(f"{manifest_path}: no such file(s): {', '.join(unknown)}")
    todo = [(str(f), manifest.get(f.name, {}), cap, timing) for f in files]
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_run_entry_star, todo))
    else:
        entries = [run_entry(*job) for job in todo]
    mismatches = [e["file"] for e in entries if not e["match"]]
    return {"version": __version__, "directory": directory.name, "entries": entries,
            "mismatches": mismatches}


def cmd_corpus(args) -> int:
    report = run_corpus(args.dir, args.max_states, not args.no_timing, args.jobs)
    if args.report == "json":
        print(json.dumps(report, indent=2))
    else:
        print(_corpus_table(report))
    return EXIT_NEGATIVE if report["mismatches"] else EXIT_OK


def _corpus_table(report: dict) -> str:
    rows = [("file", "check", "expected", "actual", "")]
    for e in report["entries"]:
        if "error" in e:
            rows.append((e["file"], "-", "-", "-", "ERROR " + e["error"].splitlines()[0]))
        for name, r in e["results"].items():
            rows.append((e["file"], name, _scalar(r["expected"]), _scalar(r["actual"]),
                         "ok" if r["match"] else "MISMATCH"))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


# ---------------------------------------------------------------------------
# experiments


def typed_context_closure(prog: Program, system: str = ASYM, depth: int = 2, width: int = 2,
                          cap: int = DEFAULT_CAP) -> dict:
    """Put main next to small typeable processes and look for broken persistence.

    Fillers range over processes built from main's channels plus one fresh
    low and one fresh high channel.  A filler counts when it is typeable in
    ``system`` and, if main itself is typeable, the composition is too.  A
    finding is a composition that fails the persistent check although main
    and the filler both pass it on their own.
    """
    lat = prog.lattice
    base = check_pbndc(prog, cap)
    chans = set(free_names(prog.main, prog.agents))
    taken = {c.base for c in chans}
    for level in (lat.bottom, lat.top):
        name = next(n for n in ("k", "m", "n", "o", "p", "q") if n not in taken)
        taken.add(name)
        chans.add(Channel(name, level))
    main_typer = typer(system, prog)
    main_typed = main_typer.infer(prog.main).typeable
    checked = 0
    trivial = 0
    findings = []
    for filler in enumerate_processes(sorted(chans, key=str), prog.values, depth, width):
        if not any(True for _ in prefixes(filler)):
            continue
        t = typer(system, prog)
        if not t.infer(filler).typeable:
            continue
        composed = par(prog.main, filler)
        if main_typed and not t.infer(composed).typeable:
            continue
        checked += 1
        whole = check_pbndc(prog.with_main(composed), cap)
        if whole.secure:
            continue
        alone = check_pbndc(prog.with_main(filler), cap)
        if not alone.secure or not base.secure:
            trivial += 1
            continue
        findings.append({"filler": format_process(filler), "witness": whole.witness.to_json()})
    return {
        "experiment": "typed-context-closure",
        "system": system,
        "program": format_process(prog.main),
        "program_pbndc": base.status.value,
        "program_typeable": main_typed,
        "bounds": {"k": depth, "w": width},
        "contexts_checked": checked,
        "violations_with_insecure_part": trivial,
        "findings": findings,
    }


def cmd_experiment(args) -> int:
    prog = load_program(args.file, args.levels)
    if not prog.lattice.is_two_point():
        raise LatticeNotTwoPoint()
    report = typed_context_closure(prog, args.system, args.depth, args.width, args.max_states)
    _emit(report, args)
    return EXIT_NEGATIVE if report["findings"] else EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccsni", description=__doc__.splitlines()[0].rstrip("."))
    ap.add_argument("--version", action="version",
                    version=f"%(prog)s {__version__} (kernels: {kernels.BACKEND})")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-states", type=int, default=DEFAULT_CAP, metavar="N",
                        help="state-space cap per transition system (default %(default)s)")
    common.add_argument("--levels", metavar="FILE", help="lattice JSON (elements, covers); "
                        "default: FILE.levels.json next to the input when present")
    common.add_argument("--output", choices=("json", "text"), default="json")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse and pretty-print")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("lts", parents=[common], help="export the transition system")
    p.add_argument("file")
    p.add_argument("--format", choices=("dot", "json"), default="json")
    p.set_defaults(func=cmd_lts)

    p = sub.add_parser("bisim", parents=[common], help="compare two programs")
    p.add_argument("--kind", choices=[k.value for k in EquivKind], default="weak")
    p.add_argument("file_p")
    p.add_argument("file_q")
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser("typecheck", parents=[common], help="infer the principal type")
    p.add_argument("--system", choices=(SIMPLE, ASYM), default=SIMPLE)
    p.add_argument("file")
    p.set_defaults(func=cmd_typecheck)

    p = sub.add_parser("secure", parents=[common], help="check a non-interference property")
    p.add_argument("--property", choices=("pbndc", "wbndc", "bndc"), required=True)
    p.add_argument("--depth", type=int, default=2, help="bndc attacker depth (default %(default)s)")
    p.add_argument("--width", type=int, default=2, help="bndc attacker width (default %(default)s)")
    p.add_argument("--attacker", metavar="FILE", help="check one given attacker process instead")
    p.add_argument("file")
    p.set_defaults(func=cmd_secure)

    p = sub.add_parser("corpus", parents=[common], help="run a directory against its expectations")
    p.add_argument("dir")
    p.add_argument("--report", choices=("json", "table"), default="table")
    p.add_argument("--no-timing", action="store_true", help="omit timings (byte-stable output)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("experiment", parents=[common], help="exploratory searches")
    p.add_argument("name", choices=("typed-context-closure",))
    p.add_argument("file")
    p.add_argument("--system", choices=(SIMPLE, ASYM), default=ASYM)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--width", type=int, default=2)
    p.set_defaults(func=cmd_experiment)
    return ap


def _validate(args, ap: argparse.ArgumentParser) -> None:
    if args.max_states < 1:
        ap.error("--max-states must be positive")
    for flag in ("depth", "width", "jobs"):
        if getattr(args, flag, 1) < 1:
            ap.error(f"--{flag} must be at least 1")


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        _validate(args, ap)
    except SystemExit:
        return EXIT_INPUT
    try:
        return args.func(args)
    except (ParseError, InputError, LatticeNotTwoPoint, AttackerNotHigh) as exc:
        print(f"ccsni: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StateSpaceExceeded, PairSpaceExceeded) as exc:
        print(f"ccsni: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
