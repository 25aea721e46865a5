"""BNDC (bounded refutation), P-BNDC and W-BNDC."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    NIL,
    Canonicalizer,
    Channel,
    Input,
    Output,
    Par,
    Process,
    Program,
    Sum,
    par,
    prefixes,
)
from .equiv import EquivKind, Verdict, check
from .lts import DEFAULT_CAP, Semantics, build_lts, high_names, restrict_all, restrict_high, with_phi
from .parser import format_process

ATTACKER_VAR = "x"


class AttackerNotHigh(ValueError):
    pass


class LatticeNotTwoPoint(ValueError):
    def __init__(self) -> None:
        super().__init__("semantic security checks need a two-level lattice (low < high)")


class Status(enum.Enum):
    SECURE = "secure"
    INSECURE = "insecure"
    NO_CEX = "no-counterexample-up-to-bound"


@dataclass(frozen=True)
class SecurityVerdict:
    property: str
    status: Status
    witness: Process | Verdict | None = None
    bounds: tuple[int, int] | None = None
    regime: str = "exact"
    attackers_checked: int = field(default=0, compare=False)

    @property
    def secure(self) -> bool:
        return self.status is Status.SECURE

    @property
    def insecure(self) -> bool:
        return self.status is Status.INSECURE

    def to_json(self) -> dict:
        if isinstance(self.witness, Verdict):
            witness = self.witness.to_json()
        elif self.witness is not None:
            witness = format_process(self.witness)
        else:
            witness = None
        out = {"property": self.property, "status": self.status.value, "witness": witness, "regime": self.regime}
        if self.bounds is not None:
            out["bounds"] = {"k": self.bounds[0], "w": self.bounds[1]}
            out["attackers_checked"] = self.attackers_checked
        return out


def _require_two_point(prog: Program) -> None:
    if not prog.lattice.is_two_point():
        raise LatticeNotTwoPoint()


def check_pbndc(prog: Program, cap: int = DEFAULT_CAP) -> SecurityVerdict:
    """(new H)P against P, up to high."""
    _require_two_point(prog)
    sem = Semantics(prog)
    hidden = build_lts(restrict_high(prog), cap, semantics=sem)
    plain = build_lts(prog, cap, semantics=sem)
    v = check(EquivKind.UPTOHIGH, hidden, plain)
    if v.equivalent:
        return SecurityVerdict("pbndc", Status.SECURE)
    return SecurityVerdict("pbndc", Status.INSECURE, v)


def check_wbndc(prog: Program, cap: int = DEFAULT_CAP) -> SecurityVerdict:
    """(new H)(P | Phi) against P, refined up to high."""
    _require_two_point(prog)
    sem = Semantics(prog)
    left = build_lts(prog, cap, main=with_phi(prog), semantics=sem)
    right = build_lts(prog, cap, semantics=sem)
    v = check(EquivKind.REFINED, left, right)
    if v.equivalent:
        return SecurityVerdict("wbndc", Status.SECURE)
    return SecurityVerdict("wbndc", Status.INSECURE, v)


def is_high_only(p: Process, prog: Program) -> bool:
    top = prog.lattice.top
    return all(pre.chan.level == top for pre in prefixes(p))


class _BndcContext:
    def __init__(self, prog: Program, cap: int):
        _require_two_point(prog)
        self.prog = prog
        self.cap = cap
        self.sem = Semantics(prog)
        self.hidden = high_names(prog)
        self.reference = build_lts(restrict_high(prog), cap, semantics=self.sem)

    def refutes(self, attacker: Process) -> Verdict | None:
        chans = set(self.hidden)
        for pre in prefixes(attacker):
            chans.add(pre.chan)
        composed = restrict_all(par(self.prog.main, attacker), chans)
        lts = build_lts(self.prog, self.cap, main=composed, semantics=self.sem)
        v = check(EquivKind.WEAK, lts, self.reference)
        return None if v.equivalent else v


def check_bndc_with(prog: Program, attacker: Process, cap: int = DEFAULT_CAP) -> SecurityVerdict:
    """Is (new H)(P | attacker) weakly bisimilar to (new H)P?"""
    if not is_high_only(attacker, prog):
        low = next(pre for pre in prefixes(attacker) if pre.chan.level != prog.lattice.top)
        raise AttackerNotHigh(f"attacker prefix {low} is not high")
    ctx = _BndcContext(prog, cap)
    if ctx.refutes(attacker) is not None:
        return SecurityVerdict("bndc", Status.INSECURE, attacker, regime="single-attacker", attackers_checked=1)
    return SecurityVerdict("bndc", Status.NO_CEX, None, regime="single-attacker", attackers_checked=1)


def enumerate_processes(chans: list[Channel], values: tuple[str, ...], depth: int, width: int) -> Iterator[Process]:
    """Processes over ``chans`` up to the given syntactic depth, smallest first.

    Depth counts every constructor: a prefix, a sum of two or more branches
    and a parallel composition each add one level over their children.
    Sums and compositions take between two and ``width`` children.  Outputs
    send constants only.  Duplicates up to canonical form are skipped.
    """
    canon = Canonicalizer()
    atoms = [Input(c, ATTACKER_VAR) for c in chans] + [Output(c, v) for c in chans for v in values]
    seen = {NIL}
    yield NIL
    everything: list[Process] = [NIL]
    for _ in range(depth):
        prev = list(everything)
        guarded_prev = [p for p in prev if isinstance(p, Sum)]
        nonzero_prev = [p for p in prev if p != NIL]
        fresh: list[Process] = []

        def emit(p: Process) -> None:
            c = canon(p)
            if c not in seen:
                seen.add(c)
                fresh.append(c)

        for cont in prev:
            for atom in atoms:
                emit(Sum(((atom, cont),)))
        for n in range(2, width + 1):
            for combo in itertools.combinations_with_replacement(guarded_prev, n):
                emit(Sum(tuple(b for s in combo for b in s.branches)))
        for n in range(2, width + 1):
            for combo in itertools.combinations_with_replacement(nonzero_prev, n):
                emit(Par(tuple(combo)))
        fresh.sort(key=lambda p: (len(format_process(p)), format_process(p)))
        yield from fresh
        everything.extend(fresh)


def enumerate_attackers(chans: list[Channel], values: tuple[str, ...], depth: int, width: int) -> Iterator[Process]:
    """High attackers: ``chans`` should be the high names of the program under test."""
    return enumerate_processes(chans, values, depth, width)


def check_bndc(prog: Program, depth: int = 2, width: int = 2, cap: int = DEFAULT_CAP) -> SecurityVerdict:
    """Search bounded high attackers for a distinguishing context.

    Never answers SECURE: the property quantifies over every high process.
    """
    if depth < 1 or width < 1:
        raise ValueError("depth and width must be at least 1")
    ctx = _BndcContext(prog, cap)
    checked = 0
    for attacker in enumerate_attackers(ctx.hidden, prog.values, depth, width):
        checked += 1
        if ctx.refutes(attacker) is not None:
            return SecurityVerdict("bndc", Status.INSECURE, attacker, (depth, width), "bounded-refutation", checked)
    return SecurityVerdict("bndc", Status.NO_CEX, None, (depth, width), "bounded-refutation", checked)
