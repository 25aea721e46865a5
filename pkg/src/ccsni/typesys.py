"""The level type system and the asymmetric (flag, read, write) type system.

Both are syntax directed apart from subsumption, so inference computes the
principal judgment bottom-up and subsumption is only used when checking a
claimed judgment.  Recursive agents are typed by iterating from the most
permissive assumption down to a fixed point.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Union

from .core import (
    Call,
    Input,
    Loc,
    Nil,
    Par,
    Phi,
    Process,
    Program,
    Restrict,
    SecurityLattice,
    Sum,
)
from .lts import DEFAULT_CAP, Semantics, StateSpaceExceeded
from .parser import format_process

SIMPLE = "simple"
ASYM = "asym"


@dataclass(frozen=True)
class AsymJudgment:
    flag: bool
    read: str
    write: str

    def __str__(self) -> str:
        return f"({'T' if self.flag else 'F'}, {self.read}, {self.write})"

    def to_json(self) -> dict:
        return {"flag": "T" if self.flag else "F", "read": self.read, "write": self.write}


Judgment = Union[str, AsymJudgment]


@dataclass(frozen=True)
class Failure:
    rule: str
    condition: str
    location: Loc | None = None
    node: str | None = None

    def to_json(self) -> dict:
        return {"rule": self.rule, "condition": self.condition,
                "location": str(self.location) if self.location else None, "node": self.node}


@dataclass(frozen=True)
class TypeOutcome:
    system: str
    typeable: bool
    principal: Judgment | None = None
    failure: Failure | None = None

    def to_json(self) -> dict:
        principal = self.principal.to_json() if isinstance(self.principal, AsymJudgment) else self.principal
        return {"system": self.system, "typeable": self.typeable, "principal": principal,
                "failure": self.failure.to_json() if self.failure else None}


class _Untypeable(Exception):
    def __init__(self, failure: Failure):
        self.failure = failure


def _fail(rule: str, condition: str, loc: Loc | None = None, node: str | None = None):
    raise _Untypeable(Failure(rule, condition, loc, node))


# ---------------------------------------------------------------------------
# simple system


class SimpleTyper:
    """Principal levels: 0 is top, a sum takes its prefixes' common level and
    needs every continuation at or above it, a composition takes the meet."""

    system = SIMPLE

    def __init__(self, prog: Program):
        self.lat: SecurityLattice = prog.lattice
        self.agents = prog.agent_map()
        self.assume: dict[str, str] = {}
        self.failed: dict[str, Failure] = {}
        self._solve()

    def _solve(self) -> None:
        # every agent, not only those reachable from main: reducts may call others
        pending = list(self.agents)
        for n in pending:
            self.assume[n] = self.lat.top
        changed = True
        while changed:
            changed = False
            for n in pending:
                if n in self.failed:
                    continue
                try:
                    lv = self.lat.meet(self.assume[n], self.level(self.agents[n].body))
                except _Untypeable as exc:
                    self.failed[n] = exc.failure
                    changed = True
                    continue
                if lv != self.assume[n]:
                    self.assume[n] = lv
                    changed = True

    def level(self, p: Process) -> str:
        lat = self.lat
        if isinstance(p, Nil):
            return lat.top
        if isinstance(p, Sum):
            first = p.branches[0][0]
            lv = first.chan.level
            for pre, _ in p.branches[1:]:
                if pre.chan.level != lv:
                    _fail("Sum", f"prefixes at different levels: {first.chan} and {pre.chan}", pre.loc, str(pre))
            for pre, cont in p.branches:
                c = self.level(cont)
                if not lat.leq(lv, c):
                    _fail("Sum", f"continuation of {pre} has level {c} and {lv} ≰ {c}", pre.loc, str(pre))
            return lv
        if isinstance(p, Par):
            return lat.meet(*(self.level(q) for q in p.parts))
        if isinstance(p, Restrict):
            return self.level(p.body)
        if isinstance(p, Call):
            if p.name in self.failed:
                f = self.failed[p.name]
                raise _Untypeable(Failure(f.rule, f"in agent {p.name}: {f.condition}", f.location, f.node))
            return self.assume[p.name]
        if isinstance(p, Phi):
            return lat.meet(*(c.level for c in p.chans))
        raise TypeError(f"not a process: {p!r}")

    def infer(self, p: Process) -> TypeOutcome:
        try:
            return TypeOutcome(SIMPLE, True, self.level(p))
        except _Untypeable as exc:
            return TypeOutcome(SIMPLE, False, None, exc.failure)

    def holds(self, p: Process, claimed: str) -> bool:
        out = self.infer(p)
        return out.typeable and self.lat.leq(claimed, out.principal)


# ---------------------------------------------------------------------------
# asymmetric system


class AsymTyper:
    """Principal (flag, read, write) triples.

    Input at level r on (B, s, t) needs r <= t and gives (B, r|s, t); output
    at r needs s <= r and gives (T, s, r&t); a composition needs each read
    level below every other write level; a sum joins reads, meets writes and
    needs the result to satisfy read <= write.
    """

    system = ASYM

    def __init__(self, prog: Program):
        self.lat = prog.lattice
        self.agents = prog.agent_map()
        self.assume: dict[str, AsymJudgment] = {}
        self.failed: dict[str, Failure] = {}
        self._solve()

    def _solve(self) -> None:
        lat = self.lat
        for n in self.agents:
            self.assume[n] = AsymJudgment(False, lat.bottom, lat.top)
        limit = 4 * (len(self.agents) + 1) * (len(lat.elements) + 1) ** 2
        for _ in range(limit):
            changed = False
            for n, agent in self.agents.items():
                if n in self.failed:
                    continue
                old = self.assume[n]
                try:
                    j = self.judge(agent.body)
                except _Untypeable as exc:
                    self.failed[n] = exc.failure
                    changed = True
                    continue
                read = lat.join(old.read, j.read)
                write = lat.meet(old.write, j.write)
                if not lat.leq(read, write):
                    self.failed[n] = Failure("Rec", f"agent {n}: read level {read} ≰ write level {write}",
                                             agent.loc, n)
                    changed = True
                    continue
                new = AsymJudgment(j.flag, read, write)
                if new != old:
                    self.assume[n] = new
                    changed = True
            if not changed:
                return
        raise RuntimeError("recursive typing did not reach a fixed point")

    def judge(self, p: Process) -> AsymJudgment:
        lat = self.lat
        if isinstance(p, Nil):
            return AsymJudgment(False, lat.bottom, lat.top)
        if isinstance(p, Sum):
            js = [self._prefixed(pre, cont) for pre, cont in p.branches]
            read = lat.join(*(j.read for j in js))
            write = lat.meet(*(j.write for j in js))
            if not lat.leq(read, write):
                _fail("Sum", f"{read} ≰ {write}", p.loc or p.branches[0][0].loc, str(p.branches[0][0]))
            return AsymJudgment(all(j.flag for j in js), read, write)
        if isinstance(p, Par):
            js = [self.judge(q) for q in p.parts]
            for i, a in enumerate(js):
                for k, b in enumerate(js):
                    if i != k and not lat.leq(a.read, b.write):
                        _fail("Par", f"{a.read} ≰ {b.write}", p.loc)
            return AsymJudgment(all(j.flag for j in js), lat.join(*(j.read for j in js)),
                                lat.meet(*(j.write for j in js)))
        if isinstance(p, Restrict):
            return self.judge(p.body)
        if isinstance(p, Call):
            if p.name in self.failed:
                f = self.failed[p.name]
                raise _Untypeable(Failure(f.rule, f"in agent {p.name}: {f.condition}", f.location, f.node))
            return self.assume[p.name]
        if isinstance(p, Phi):
            if not p.chans:
                return AsymJudgment(False, lat.bottom, lat.top)
            return AsymJudgment(False, lat.join(*(c.level for c in p.chans)), lat.top)
        raise TypeError(f"not a process: {p!r}")

    def _prefixed(self, pre, cont: Process) -> AsymJudgment:
        lat = self.lat
        j = self.judge(cont)
        rho = pre.chan.level
        if isinstance(pre, Input):
            if not lat.leq(rho, j.write):
                _fail("Input", f"{rho} ≰ {j.write}", pre.loc, str(pre.chan))
            return AsymJudgment(j.flag, lat.join(rho, j.read), j.write)
        if not lat.leq(j.read, rho):
            _fail("Output", f"{j.read} ≰ {rho}", pre.loc, str(pre.chan))
        return AsymJudgment(True, j.read, lat.meet(rho, j.write))

    def infer(self, p: Process) -> TypeOutcome:
        try:
            return TypeOutcome(ASYM, True, self.judge(p))
        except _Untypeable as exc:
            return TypeOutcome(ASYM, False, None, exc.failure)

    def holds(self, p: Process, claimed: AsymJudgment) -> bool:
        out = self.infer(p)
        if not out.typeable:
            return False
        return asym_subsumes(self.lat, out.principal, claimed)

    def holds_interval(self, p: Process, claimed: AsymJudgment) -> bool:
        out = self.infer(p)
        if not out.typeable:
            return False
        pr = out.principal
        return asym_subsumes(self.lat, pr, AsymJudgment(pr.flag, claimed.read, claimed.write))


def asym_subsumes(lat: SecurityLattice, principal: AsymJudgment, claimed: AsymJudgment) -> bool:
    return (claimed.flag == principal.flag
            and lat.leq(principal.read, claimed.read)
            and lat.leq(claimed.read, claimed.write)
            and lat.leq(claimed.write, principal.write))


def typer(system: str, prog: Program):
    if system == SIMPLE:
        return SimpleTyper(prog)
    if system == ASYM:
        return AsymTyper(prog)
    raise ValueError(f"unknown type system {system!r}")


def infer_simple(prog: Program) -> TypeOutcome:
    return SimpleTyper(prog).infer(prog.main)


def infer_asym(prog: Program) -> TypeOutcome:
    return AsymTyper(prog).infer(prog.main)


def infer(system: str, prog: Program) -> TypeOutcome:
    return typer(system, prog).infer(prog.main)


def check_judgment(system: str, prog: Program, claimed: Judgment) -> bool:
    """Is ``claimed`` derivable for main, i.e. reachable from the principal by subsumption?"""
    return typer(system, prog).holds(prog.main, claimed)


# ---------------------------------------------------------------------------
# subject reduction


@dataclass
class SubjectReductionReport:
    """Each violation records its path and a ``cause``: "untypeable",
    "interval" (the level part no longer holds) or "flag" (only the
    asymmetric output flag differs)."""

    system: str
    judgment: Judgment | None
    states_checked: int = 0
    violations: list[dict] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations

    @property
    def interval_clean(self) -> bool:
        """No violation apart from flag changes."""
        return all(v["cause"] == "flag" for v in self.violations)

    def to_json(self) -> dict:
        j = self.judgment.to_json() if isinstance(self.judgment, AsymJudgment) else self.judgment
        return {"system": self.system, "judgment": j, "states_checked": self.states_checked,
                "violations": self.violations}


def subject_reduction_harness(system: str, prog: Program, steps: int, cap: int = DEFAULT_CAP) -> SubjectReductionReport:
    """Check main's principal judgment against every state within ``steps`` transitions.

    The check is ``check_judgment``'s: the asymmetric flag must match
    exactly.  It does not survive reduction in general ('b_l<r>.0 has flag T,
    its reduct 0 only F), so flag-only failures are tagged as such.
    """
    t = typer(system, prog)
    root = t.infer(prog.main)
    if not root.typeable:
        raise ValueError(f"main is not typeable in the {system} system: {root.failure.condition}")
    claim = root.principal
    report = SubjectReductionReport(system, claim)
    sem = Semantics(prog)
    start = sem.canon(prog.main)
    seen = {start: ()}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        path = seen[p]
        report.states_checked += 1
        if not t.holds(p, claim):
            out = t.infer(p)
            if not out.typeable:
                cause = "untypeable"
            elif system == ASYM and t.holds_interval(p, claim):
                cause = "flag"
            else:
                cause = "interval"
            report.violations.append({
                "path": list(path), "state": format_process(p), "cause": cause,
                "principal": str(out.principal) if out.typeable else None,
                "failure": out.failure.to_json() if out.failure else None,
            })
        if len(path) >= steps:
            continue
        for a, q, _ in sem.transitions(p):
            if q not in seen:
                if len(seen) >= cap:
                    raise StateSpaceExceeded(cap)
                seen[q] = path + (a.label,)
                queue.append(q)
    return report
