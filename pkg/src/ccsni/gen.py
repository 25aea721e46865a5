"""Seeded random programs and transition systems for property tests."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .core import (
    DEFAULT_LATTICE,
    NIL,
    TAU,
    Action,
    AgentDef,
    Call,
    Channel,
    Input,
    Output,
    Par,
    Process,
    Program,
    Restrict,
    SecurityLattice,
    Sum,
    prefixes,
)
from .lts import Lts

VALUE_POOL = ("u", "v", "e", "r")
VAR_POOL = ("x", "y")
BASES = ("a", "b", "c", "d")


@dataclass
class GenConfig:
    max_prefixes: int = 8
    max_values: int = 2
    max_width: int = 2
    agents: bool = True
    restrict: bool = True
    lattice: SecurityLattice = DEFAULT_LATTICE


class _Builder:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg
        self.budget = rng.randint(1, cfg.max_prefixes)
        levels = sorted(cfg.lattice.elements)
        bases = list(BASES)
        rng.shuffle(bases)
        # one level per base keeps channels unambiguous
        self.chans = [Channel(b, rng.choice(levels)) for b in bases[: rng.randint(2, len(bases))]]
        self.values = tuple(rng.sample(VALUE_POOL, rng.randint(1, cfg.max_values)))

    def arg(self, scope: tuple[str, ...]) -> str:
        if scope and self.rng.random() < 0.5:
            return self.rng.choice(scope)
        return self.rng.choice(self.values)

    def atom(self, chan: Channel, scope: tuple[str, ...]) -> tuple[object, tuple[str, ...]]:
        if self.rng.random() < 0.5:
            var = self.rng.choice(VAR_POOL)
            return Input(chan, var), scope + (var,)
        return Output(chan, self.arg(scope)), scope

    def take(self) -> bool:
        if self.budget <= 0:
            return False
        self.budget -= 1
        return True


def _general(b: _Builder, scope: tuple[str, ...], calls: list[tuple[str, int]], depth: int = 0) -> Process:
    rng = b.rng
    if depth > 12 or b.budget <= 0:
        if calls and rng.random() < 0.3:
            return _call(b, rng.choice(calls), scope)
        return NIL
    r = rng.random()
    if r < 0.12 and b.cfg.restrict:
        return Restrict(rng.choice(b.chans), _general(b, scope, calls, depth + 1))
    if r < 0.30:
        n = rng.randint(2, b.cfg.max_width)
        return Par(tuple(_general(b, scope, calls, depth + 1) for _ in range(n)))
    if r < 0.36:
        return NIL
    n = rng.randint(1, b.cfg.max_width) if r < 0.6 else 1
    branches = []
    for _ in range(n):
        if not b.take():
            break
        pre, inner = b.atom(rng.choice(b.chans), scope)
        branches.append((pre, _guarded(b, inner, calls, depth)))
    return Sum(tuple(branches)) if branches else NIL


def _guarded(b: _Builder, scope, calls, depth) -> Process:
    if calls and b.rng.random() < 0.2:
        return _call(b, b.rng.choice(calls), scope)
    return _general(b, scope, calls, depth + 1)


def _call(b: _Builder, agent: tuple[str, int], scope) -> Call:
    name, arity = agent
    return Call(name, tuple(b.arg(scope) for _ in range(arity)))


def _sequential(b: _Builder, scope, calls, depth: int = 0) -> Process:
    """A sum tree without composition; recursion through it stays finite-state."""
    rng = b.rng
    if b.budget <= 0 or depth > 8:
        return _call(b, rng.choice(calls), scope) if calls and rng.random() < 0.5 else NIL
    branches = []
    for _ in range(rng.randint(1, b.cfg.max_width)):
        if not b.take():
            break
        pre, inner = b.atom(rng.choice(b.chans), scope)
        if calls and rng.random() < 0.35:
            cont = _call(b, rng.choice(calls), inner)
        else:
            cont = _sequential(b, inner, calls, depth + 1)
        branches.append((pre, cont))
    return Sum(tuple(branches)) if branches else NIL


def _agents(b: _Builder) -> tuple[list[AgentDef], list[tuple[str, int]]]:
    rng = b.rng
    if not b.cfg.agents or rng.random() < 0.6:
        return [], []
    count = rng.randint(1, 2)
    sigs = [(name, rng.randint(0, 1)) for name in ("A", "B")[:count]]
    defs = []
    for name, arity in sigs:
        params = ("w",)[:arity]
        body = _sequential(b, params, sigs)
        if not isinstance(body, Sum):
            pre, _ = b.atom(rng.choice(b.chans), params)
            body = Sum(((pre, body),))
        defs.append(AgentDef(name, params, body))
    return defs, sigs


def random_program(rng: random.Random, cfg: GenConfig | None = None) -> Program:
    """Closed, well-formed, finite-state: agent bodies never contain composition."""
    cfg = cfg or GenConfig()
    b = _Builder(rng, cfg)
    defs, sigs = _agents(b)
    main = _general(b, (), sigs)
    return Program(main, b.values, tuple(defs), cfg.lattice)


# ---------------------------------------------------------------------------
# typeable programs


def _simple_at(b: _Builder, floor: str, scope, calls, depth: int = 0) -> Process:
    """Principal level at or above ``floor``."""
    rng = b.rng
    lat = b.cfg.lattice
    if b.budget <= 0 or depth > 10:
        ok = [c for c in calls if lat.leq(floor, c[2])]
        if ok and rng.random() < 0.5:
            name, arity, _ = rng.choice(ok)
            return _call(b, (name, arity), scope)
        return NIL
    r = rng.random()
    if r < 0.1 and b.cfg.restrict:
        return Restrict(rng.choice(b.chans), _simple_at(b, floor, scope, calls, depth + 1))
    if r < 0.3:
        n = rng.randint(2, b.cfg.max_width)
        return Par(tuple(_simple_at(b, floor, scope, calls, depth + 1) for _ in range(n)))
    usable = [c for c in b.chans if lat.leq(floor, c.level)]
    if not usable:
        return NIL
    level = rng.choice(usable).level
    at_level = [c for c in usable if c.level == level]
    branches = []
    for _ in range(rng.randint(1, b.cfg.max_width)):
        if not b.take():
            break
        pre, inner = b.atom(rng.choice(at_level), scope)
        branches.append((pre, _simple_at(b, level, inner, calls, depth + 1)))
    return Sum(tuple(branches)) if branches else NIL


def _simple_seq(b: _Builder, level: str, scope, calls, depth: int = 0) -> Process:
    rng = b.rng
    lat = b.cfg.lattice
    ok = [c for c in calls if lat.leq(level, c[2])]
    at_level = [c for c in b.chans if c.level == level]
    if b.budget <= 0 or depth > 8 or not at_level:
        if ok and rng.random() < 0.6:
            name, arity, _ = rng.choice(ok)
            return _call(b, (name, arity), scope)
        return NIL
    branches = []
    for _ in range(rng.randint(1, b.cfg.max_width)):
        if not b.take():
            break
        pre, inner = b.atom(rng.choice(at_level), scope)
        if ok and rng.random() < 0.35:
            name, arity, _ = rng.choice(ok)
            cont = _call(b, (name, arity), inner)
        else:
            up = [c.level for c in b.chans if lat.leq(level, c.level)]
            cont = _simple_seq(b, rng.choice(up), inner, calls, depth + 1)
        branches.append((pre, cont))
    return Sum(tuple(branches)) if branches else NIL


def random_simple_typeable(rng: random.Random, cfg: GenConfig | None = None) -> Program:
    """Type-directed: every sum uses one level and its continuations sit at or above it."""
    cfg = cfg or GenConfig()
    b = _Builder(rng, cfg)
    defs: list[AgentDef] = []
    sigs: list[tuple[str, int, str]] = []
    if cfg.agents and rng.random() < 0.4:
        for name in ("A", "B")[: rng.randint(1, 2)]:
            # an agent whose body is a sum at level l has principal level l
            sigs.append((name, rng.randint(0, 1), rng.choice(b.chans).level))
        for name, arity, level in sigs:
            params = ("w",)[:arity]
            body = NIL
            for _ in range(5):
                body = _simple_seq(b, level, params, sigs)
                if isinstance(body, Sum):
                    break
                b.budget = max(b.budget, 1)
            if not isinstance(body, Sum):
                chan = next(c for c in b.chans if c.level == level)
                body = Sum(((Output(chan, b.values[0]), NIL),))
            defs.append(AgentDef(name, params, body))
    main = _simple_at(b, cfg.lattice.bottom, (), sigs)
    return Program(main, b.values, tuple(defs), cfg.lattice)


def random_asym_typeable(rng: random.Random, cfg: GenConfig | None = None, attempts: int = 10_000) -> Program:
    """Rejection sampling over random programs."""
    from .typesys import infer_asym

    for _ in range(attempts):
        prog = random_program(rng, cfg)
        if any(True for _ in prefixes(prog.main)) and infer_asym(prog).typeable:
            return prog
    raise RuntimeError("no asym-typeable program found")


# ---------------------------------------------------------------------------
# transition systems


def random_alphabet(rng: random.Random, lattice: SecurityLattice = DEFAULT_LATTICE) -> list[Action]:
    acts = [TAU]
    for base, level in (("a", lattice.bottom), ("b", lattice.top)):
        for kind in ("in", "out"):
            acts.append(Action(kind, Channel(base, level), "u"))
    if rng.random() < 0.5:
        acts.append(Action("out", Channel("c", lattice.bottom), "u"))
    return acts


def random_lts(rng: random.Random, max_states: int = 30, alphabet: list[Action] | None = None,
               density: float | None = None) -> Lts:
    n = rng.randint(1, max_states)
    alphabet = alphabet or random_alphabet(rng)
    density = density if density is not None else rng.uniform(0.5, 2.5)
    edges = set()
    for _ in range(int(n * density)):
        s = rng.randrange(n)
        edges.add((s, rng.choice(alphabet), rng.randrange(n)))
    return Lts.from_edges(n, edges)


def perturb(rng: random.Random, lts: Lts, max_states: int = 30) -> Lts:
    """A variant that is often, but not always, equivalent to ``lts``."""
    n = len(lts)
    edges = set(lts.transitions)

    def ordered():
        # set order follows string hashing; sort so a seed fixes the result
        return sorted(edges, key=lambda e: (e[0], e[1].label, e[2]))

    r = rng.random()
    if r < 0.3 and n < max_states:
        # clone a state: the copy has the same outgoing moves
        victim = rng.randrange(n)
        clone = n
        n += 1
        for s, a, t in ordered():
            if s == victim:
                edges.add((clone, a, t))
        for s, a, t in ordered():
            if t == victim and rng.random() < 0.5:
                edges.discard((s, a, t))
                edges.add((s, a, clone))
    elif r < 0.5 and n < max_states:
        # route one move through a fresh tau step
        if edges:
            s, a, t = rng.choice(ordered())
            mid = n
            n += 1
            edges.discard((s, a, t))
            edges.add((s, TAU, mid))
            edges.add((mid, a, t))
    elif r < 0.7 and edges:
        edges.discard(rng.choice(ordered()))
    elif r < 0.85:
        alphabet = sorted({a for _, a, _ in edges} | {TAU}, key=lambda a: a.label)
        edges.add((rng.randrange(n), rng.choice(alphabet), rng.randrange(n)))
    # else: plain relabelling of states below
    rest = list(range(1, n))
    rng.shuffle(rest)
    perm = [0] + rest
    moved = {(perm[s], a, perm[t]) for s, a, t in edges}
    return Lts.from_edges(n, moved, 0, lts.lattice)


def random_lts_pair(rng: random.Random, max_states: int = 30) -> tuple[Lts, Lts]:
    alphabet = random_alphabet(rng)
    left = random_lts(rng, max_states, alphabet)
    if rng.random() < 0.25:
        return left, random_lts(rng, max_states, alphabet)
    right = left
    for _ in range(rng.randint(1, 3)):
        right = perturb(rng, right, max_states)
    return left, right
