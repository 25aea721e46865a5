"""Finite labelled transition systems derived from the operational rules."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from . import kernels
from .core import (
    DEFAULT_LATTICE,
    NIL,
    TAU,
    Action,
    Call,
    Canonicalizer,
    Channel,
    Input,
    Nil,
    Output,
    Par,
    Phi,
    Process,
    Program,
    Restrict,
    SecurityLattice,
    Sum,
    free_names,
    par,
    prefix,
    substitute,
    unfold,
)
from .parser import format_process

DEFAULT_CAP = 10_000


class StateSpaceExceeded(RuntimeError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"reachable state space exceeds the cap of {cap} states")


@dataclass(frozen=True)
class Lts:
    states: tuple[Process, ...]
    transitions: tuple[tuple[int, Action, int], ...]
    initial: int = 0
    lattice: SecurityLattice = DEFAULT_LATTICE
    _succ: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        succ: list[list[tuple[Action, int]]] = [[] for _ in self.states]
        for s, a, t in self.transitions:
            succ[s].append((a, t))
        object.__setattr__(self, "_succ", tuple(tuple(x) for x in succ))

    def __len__(self) -> int:
        return len(self.states)

    def successors(self, s: int) -> tuple[tuple[Action, int], ...]:
        return self._succ[s]

    def is_high(self, action: Action) -> bool:
        return action.chan is not None and action.chan.level == self.lattice.top

    def actions(self) -> set[Action]:
        return {a for _, a, _ in self.transitions}

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, Action, int]], initial: int = 0,
                   lattice: SecurityLattice = DEFAULT_LATTICE, labels: Iterable[Process] | None = None) -> "Lts":
        """Hand-built LTS; states default to placeholder terms."""
        states = tuple(labels) if labels is not None else tuple(Phi(frozenset({Channel(f"s{i}", "l")})) for i in range(n))
        return cls(states, tuple(sorted(set(edges), key=lambda e: (e[0], e[1].label, e[2]))), initial, lattice)


class Semantics:
    """Transition derivation for the processes of one program."""

    def __init__(self, prog: Program):
        self.prog = prog
        self.agents = prog.agent_map()
        self.values = prog.values
        self.canon = Canonicalizer(self.agents)
        self._memo: dict[Process, tuple[tuple[Action, Process, str], ...]] = {}

    def step(self, p: Process) -> list[tuple[Action, Process, str]]:
        """Raw one-step successors, each tagged with the rule that created its action.

        Tags are "input", "output" or "comm"; composition and restriction
        pass the tag of the inner move through unchanged.
        """
        if isinstance(p, Nil):
            return []
        if isinstance(p, Sum):
            out = []
            for pre, cont in p.branches:
                if isinstance(pre, Input):
                    for v in self.values:
                        out.append((Action("in", pre.chan, v), substitute(cont, pre.var, v), "input"))
                else:
                    out.append((Action("out", pre.chan, pre.arg), cont, "output"))
            return out
        if isinstance(p, Par):
            moves = [self.step(q) for q in p.parts]
            out = []
            for i, mv in enumerate(moves):
                for a, t, rule in mv:
                    parts = list(p.parts)
                    parts[i] = t
                    out.append((a, Par(tuple(parts)), rule))
            for i in range(len(moves)):
                for j in range(i + 1, len(moves)):
                    for a, t, _ in moves[i]:
                        if a.kind == "tau":
                            continue
                        for b, u, _ in moves[j]:
                            if b.kind != "tau" and a.complements(b):
                                parts = list(p.parts)
                                parts[i] = t
                                parts[j] = u
                                out.append((TAU, Par(tuple(parts)), "comm"))
            return out
        if isinstance(p, Restrict):
            return [(a, Restrict(p.chan, t), rule) for a, t, rule in self.step(p.body)
                    if a.kind == "tau" or a.chan.base != p.chan.base]
        if isinstance(p, Call):
            return self.step(unfold(p, self.agents))
        if isinstance(p, Phi):
            return [(Action("in", c, v), p, "input") for c in sorted(p.chans, key=str) for v in self.values]
        raise TypeError(f"not a process: {p!r}")

    def transitions(self, p: Process) -> tuple[tuple[Action, Process, str], ...]:
        """Canonical successors of a canonical state, de-duplicated."""
        hit = self._memo.get(p)
        if hit is None:
            seen: dict[tuple[Action, Process], str] = {}
            for a, t, rule in self.step(p):
                seen.setdefault((a, self.canon(t)), rule)
            hit = tuple((a, t, rule) for (a, t), rule in seen.items())
            self._memo[p] = hit
        return hit


def build_lts(prog: Program, cap: int = DEFAULT_CAP, main: Process | None = None,
              semantics: Semantics | None = None) -> Lts:
    """Explore every canonical state reachable from ``main`` (default: the program's)."""
    sem = semantics or Semantics(prog)
    start = sem.canon(prog.main if main is None else main)
    index = {start: 0}
    states = [start]
    edges: list[tuple[int, Action, int]] = []
    queue = deque([start])
    while queue:
        p = queue.popleft()
        src = index[p]
        for a, t, _ in sem.transitions(p):
            dst = index.get(t)
            if dst is None:
                if len(states) >= cap:
                    raise StateSpaceExceeded(cap)
                dst = index[t] = len(states)
                states.append(t)
                queue.append(t)
            edges.append((src, a, dst))
    return Lts(tuple(states), tuple(edges), 0, prog.lattice)


# ---------------------------------------------------------------------------
# weak transitions


@dataclass
class WeakRelation:
    """``weak[s][a]`` holds the targets of s ==a==> (at least one tau when a is tau)."""

    lts: Lts
    tau_star: list[frozenset[int]]
    weak: list[dict[Action, frozenset[int]]]

    def weak_moves(self, s: int, a: Action) -> frozenset[int]:
        return self.weak[s].get(a, frozenset())

    def hat_moves(self, s: int, a: Action) -> frozenset[int]:
        if a.kind == "tau":
            return self.tau_star[s]
        return self.weak_moves(s, a)


def tau_csr(lts: Lts) -> tuple[list[int], list[int]]:
    indptr = [0]
    indices: list[int] = []
    for s in range(len(lts)):
        indices.extend(t for a, t in lts.successors(s) if a.kind == "tau")
        indptr.append(len(indices))
    return indptr, indices


def saturate(lts: Lts) -> WeakRelation:
    n = len(lts)
    indptr, indices = tau_csr(lts)
    closure = [frozenset(c) for c in kernels.tau_closure(n, indptr, indices)]
    weak: list[dict[Action, frozenset[int]]] = []
    for s in range(n):
        acc: dict[Action, set[int]] = {}
        for s1 in closure[s]:
            for a, s2 in lts.successors(s1):
                acc.setdefault(a, set()).update(closure[s2])
        weak.append({a: frozenset(v) for a, v in acc.items()})
    return WeakRelation(lts, closure, weak)


# ---------------------------------------------------------------------------
# high restriction and the high-input sink


def high_names(prog: Program, main: Process | None = None) -> list[Channel]:
    """High channels free in ``main``, counting names used by called agents."""
    top = prog.lattice.top
    chans = free_names(prog.main if main is None else main, prog.agents)
    return sorted((c for c in chans if c.level == top), key=str)


def restrict_all(p: Process, chans: Iterable[Channel]) -> Process:
    for c in sorted(chans, key=str, reverse=True):
        p = Restrict(c, p)
    return p


def restrict_high(prog: Program) -> Program:
    """The program with every high channel of main restricted at top level."""
    return prog.with_main(restrict_all(prog.main, high_names(prog)))


def phi_process(names: Iterable[Channel]) -> Process:
    chans = frozenset(names)
    return Phi(chans) if chans else NIL


def make_phi(names: Iterable[Channel], values: Iterable[str],
             lattice: SecurityLattice = DEFAULT_LATTICE) -> Lts:
    """One-state LTS offering every high input forever."""
    names = frozenset(names)
    for c in names:
        if c.level != lattice.top:
            raise ValueError(f"{c} is not a high channel")
    state = phi_process(names)
    edges = [(0, Action("in", c, v), 0) for c in sorted(names, key=str) for v in values]
    return Lts((state,), tuple(edges), 0, lattice)


def phi_unfolding(names: Iterable[Channel], depth: int, var: str = "z") -> Process:
    """``depth`` explicit rounds of one input per name, then the sink."""
    names = sorted(set(names), key=str)
    p: Process = phi_process(names)
    for _ in range(depth):
        p = par(*[prefix(Input(c, var)) for c in names], p)
    return p


def with_phi(prog: Program) -> Process:
    """(new H)(main | Phi_A) where A is the set of high free names of main."""
    sink = phi_process(high_names(prog))
    return restrict_all(par(prog.main, sink), high_names(prog))


# ---------------------------------------------------------------------------
# export


def to_json(lts: Lts) -> dict:
    return {
        "states": [format_process(p) for p in lts.states],
        "transitions": [[s, a.label, t] for s, a, t in lts.transitions],
        "initial": lts.initial,
    }


def dump_json(lts: Lts) -> str:
    return json.dumps(to_json(lts), indent=2)


def to_dot(lts: Lts) -> str:
    lines = ["digraph lts {", "  node [shape=box, fontname=monospace];"]
    for i, p in enumerate(lts.states):
        label = format_process(p).replace("\\", "\\\\").replace('"', '\\"')
        extra = ", peripheries=2" if i == lts.initial else ""
        lines.append(f'  s{i} [label="{label}"{extra}];')
    for s, a, t in lts.transitions:
        attrs = [f'label="{a.label}"']
        if a.kind == "tau":
            attrs.append("style=dashed")
        elif lts.is_high(a):
            attrs.append("color=red, fontcolor=red")
        lines.append(f"  s{s} -> s{t} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
