"""Weak bisimilarity, weak bisimilarity up-to-high and its refined variant.

All three games use strong challenges.  What differs is the set of legal
responses to a challenge ``a`` from state ``t`` on the other side:

weak       ``t ==a^==> t'``
uptohigh   as weak, but a high visible challenge may also be answered by
           ``t ==tau*==> t'``
refined    output ``a``: as uptohigh;
           tau: ``t ==tau*==> t'`` (possibly empty) or ``t ==b==> t'`` for
           any high output ``b``;
           input ``a``: ``t ==a==> t'`` only, whatever the level.

``check`` decides weak and uptohigh by partition refinement of the
saturated system and refined by a worklist greatest fixed point.
``check_naive`` re-derives everything from the raw transitions and sweeps
the full pair set, so it shares no code with ``check``.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from . import kernels
from .core import TAU, Action
from .lts import Lts, WeakRelation, saturate

NAIVE_PAIR_LIMIT = 10**6


class EquivKind(enum.Enum):
    WEAK = "weak"
    UPTOHIGH = "uptohigh"
    REFINED = "refined"


class PairSpaceExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Step:
    """One round of the game.

    ``pair`` is the position after the defender's reply; the last step of a
    counterexample has ``pair=None`` and ``target`` set to where the
    unanswerable challenge leads.
    """

    side: str
    action: Action
    pair: tuple[int, int] | None
    target: int | None = None

    def to_json(self) -> dict:
        out = {"side": self.side, "action": self.action.label,
               "pair": list(self.pair) if self.pair is not None else None}
        if self.target is not None:
            out["target"] = self.target
        return out


@dataclass(frozen=True)
class Verdict:
    kind: EquivKind
    equivalent: bool
    counterexample: tuple[Step, ...] | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "equivalent": self.equivalent,
            "counterexample": None if self.counterexample is None else [s.to_json() for s in self.counterexample],
        }

    def __bool__(self) -> bool:
        return self.equivalent


def _kind(kind) -> EquivKind:
    return kind if isinstance(kind, EquivKind) else EquivKind(kind)


def _check_lattices(P: Lts, Q: Lts) -> None:
    if P.lattice != Q.lattice:
        raise ValueError("cannot compare systems over different lattices")


# ---------------------------------------------------------------------------
# main route


def _responses(kind: EquivKind, lts: Lts, sat: WeakRelation, s: int, a: Action) -> frozenset[int]:
    if kind is EquivKind.WEAK:
        return sat.hat_moves(s, a)
    if kind is EquivKind.UPTOHIGH:
        if a.kind != "tau" and lts.is_high(a):
            return sat.weak_moves(s, a) | sat.tau_star[s]
        return sat.hat_moves(s, a)
    if a.kind == "in":
        return sat.weak_moves(s, a)
    if a.kind == "out":
        if lts.is_high(a):
            return sat.weak_moves(s, a) | sat.tau_star[s]
        return sat.weak_moves(s, a)
    out = set(sat.tau_star[s])
    for b, targets in sat.weak[s].items():
        if b.kind == "out" and lts.is_high(b):
            out |= targets
    return frozenset(out)


def _alphabet(*ltss: Lts) -> list[Action]:
    acts: set[Action] = set()
    for lts in ltss:
        acts |= lts.actions()
    acts.discard(TAU)
    return [TAU] + sorted(acts, key=lambda a: (a.label, str(a.chan)))


def _csr(rows: list[list[tuple[int, int]]]) -> tuple[list[int], list[int], list[int]]:
    ptr, lab, dst = [0], [], []
    for row in rows:
        for a, t in row:
            lab.append(a)
            dst.append(t)
        ptr.append(len(lab))
    return ptr, lab, dst


def _response_csr(kind, lts, sat, alphabet) -> tuple[list[int], list[int]]:
    ptr, dst = [0], []
    for s in range(len(lts)):
        for a in alphabet:
            dst.extend(sorted(_responses(kind, lts, sat, s, a)))
            ptr.append(len(dst))
    return ptr, dst


def _challenge_rows(lts: Lts, index: dict[Action, int]) -> list[list[tuple[int, int]]]:
    return [[(index[a], t) for a, t in lts.successors(s)] for s in range(len(lts))]


def relation(kind, P: Lts, Q: Lts) -> bytearray:
    """The greatest relation of the given kind over P x Q (row-major)."""
    kind = _kind(kind)
    _check_lattices(P, Q)
    alphabet = _alphabet(P, Q)
    index = {a: i for i, a in enumerate(alphabet)}
    satP, satQ = saturate(P), saturate(Q)
    c1 = _csr(_challenge_rows(P, index))
    c2 = _csr(_challenge_rows(Q, index))
    r1 = _response_csr(kind, P, satP, alphabet)
    r2 = _response_csr(kind, Q, satQ, alphabet)
    return kernels.gfp(len(P), len(Q), len(alphabet), *c1, *c2, *r1, *r2)


def _partition_equivalent(kind: EquivKind, P: Lts, Q: Lts) -> bool:
    alphabet = _alphabet(P, Q)
    satP, satQ = saturate(P), saturate(Q)
    rows: list[list[tuple[int, int]]] = []
    for lts, sat, offset in ((P, satP, 0), (Q, satQ, len(P))):
        for s in range(len(lts)):
            row = []
            for i, a in enumerate(alphabet):
                row.extend((i, t + offset) for t in _responses(kind, lts, sat, s, a))
            rows.append(row)
    block = kernels.refine(len(rows), *_csr(rows))
    return block[P.initial] == block[len(P) + Q.initial]


def check(kind, P: Lts, Q: Lts, counterexample: bool = True) -> Verdict:
    """Decide whether the initial states of P and Q are related."""
    kind = _kind(kind)
    _check_lattices(P, Q)
    if kind is EquivKind.REFINED:
        rel = relation(kind, P, Q)
        equivalent = bool(rel[P.initial * len(Q) + Q.initial])
    else:
        equivalent = _partition_equivalent(kind, P, Q)
    if equivalent:
        return Verdict(kind, True)
    return Verdict(kind, False, find_counterexample(kind, P, Q) if counterexample else None)


def bisimilarity(kind, lts: Lts) -> set[tuple[int, int]]:
    """All related pairs of states within one system."""
    rel = relation(kind, lts, lts)
    n = len(lts)
    return {(i, j) for i in range(n) for j in range(n) if rel[i * n + j]}


def disjoint_union(P: Lts, Q: Lts) -> Lts:
    off = len(P)
    edges = list(P.transitions) + [(s + off, a, t + off) for s, a, t in Q.transitions]
    return Lts(P.states + Q.states, tuple(edges), P.initial, P.lattice)


# ---------------------------------------------------------------------------
# naive oracle


class _Naive:
    """Moves recomputed from raw transitions, no shared saturation code."""

    def __init__(self, kind: EquivKind, lts: Lts, other_actions: Iterable[Action]):
        self.kind = kind
        self.lts = lts
        n = len(lts)
        self.tau_succ = [[t for a, t in lts.successors(s) if a.kind == "tau"] for s in range(n)]
        star = [{s} for s in range(n)]
        changed = True
        while changed:
            changed = False
            for s in range(n):
                extra = {v for u in star[s] for v in self.tau_succ[u]} - star[s]
                if extra:
                    star[s] |= extra
                    changed = True
        self.star = star
        self.high_outputs = sorted(
            {a for a in list(lts.actions()) + list(other_actions) if a.kind == "out" and lts.is_high(a)},
            key=lambda a: a.label)
        self._cache: dict[tuple[int, Action], frozenset[int]] = {}

    def weak(self, s: int, a: Action) -> set[int]:
        out: set[int] = set()
        for u in self.star[s]:
            for b, v in self.lts.successors(u):
                if b == a:
                    out |= self.star[v]
        return out

    def responses(self, s: int, a: Action) -> frozenset[int]:
        key = (s, a)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        high = a.kind != "tau" and self.lts.is_high(a)
        if a.kind == "tau":
            res = set(self.star[s])
            if self.kind is EquivKind.REFINED:
                for b in self.high_outputs:
                    res |= self.weak(s, b)
        elif self.kind is EquivKind.WEAK:
            res = self.weak(s, a)
        elif self.kind is EquivKind.UPTOHIGH:
            res = self.weak(s, a) | (self.star[s] if high else set())
        elif a.kind == "out":
            res = self.weak(s, a) | (self.star[s] if high else set())
        else:
            res = self.weak(s, a)
        hit = self._cache[key] = frozenset(res)
        return hit


def _moves(pair, P, Q, nP: _Naive, nQ: _Naive):
    """Challenges at ``pair`` with the positions each legal reply leads to."""
    p, q = pair
    for a, p2 in P.successors(p):
        yield "left", a, p2, [(p2, q2) for q2 in sorted(nQ.responses(q, a))]
    for a, q2 in Q.successors(q):
        yield "right", a, q2, [(p2, q2) for p2 in sorted(nP.responses(p, a))]


def _rounds(kind: EquivKind, P: Lts, Q: Lts, pairs: Iterable[tuple[int, int]]) -> dict[tuple[int, int], float]:
    """Synchronous deletion: round k removes pairs with a challenge every reply to
    which lands outside the relation left after round k-1."""
    nP = _Naive(kind, P, Q.actions())
    nQ = _Naive(kind, Q, P.actions())
    rnd: dict[tuple[int, int], float] = {pr: math.inf for pr in pairs}
    alive = set(rnd)
    k = 0
    while True:
        k += 1
        doomed = []
        for pr in alive:
            for _, _, _, replies in _moves(pr, P, Q, nP, nQ):
                if not any(r in alive for r in replies):
                    doomed.append(pr)
                    break
        if not doomed:
            return rnd
        for pr in doomed:
            alive.discard(pr)
            rnd[pr] = k


def check_naive(kind, P: Lts, Q: Lts) -> Verdict:
    """Textbook greatest fixed point over the full pair set."""
    kind = _kind(kind)
    _check_lattices(P, Q)
    if len(P) * len(Q) > NAIVE_PAIR_LIMIT:
        raise PairSpaceExceeded(f"{len(P)} x {len(Q)} pairs exceed {NAIVE_PAIR_LIMIT}")
    rnd = _rounds(kind, P, Q, ((p, q) for p in range(len(P)) for q in range(len(Q))))
    return Verdict(kind, rnd[P.initial, Q.initial] == math.inf)


# ---------------------------------------------------------------------------
# counterexamples


def _game_reachable(kind, P, Q) -> set[tuple[int, int]]:
    nP = _Naive(kind, P, Q.actions())
    nQ = _Naive(kind, Q, P.actions())
    start = (P.initial, Q.initial)
    seen = {start}
    queue = deque([start])
    while queue:
        pr = queue.popleft()
        for _, _, _, replies in _moves(pr, P, Q, nP, nQ):
            for r in replies:
                if r not in seen:
                    seen.add(r)
                    queue.append(r)
    return seen


def find_counterexample(kind, P: Lts, Q: Lts) -> tuple[Step, ...] | None:
    """Shortest winning line for the challenger against the best defence."""
    kind = _kind(kind)
    pairs = _game_reachable(kind, P, Q)
    rnd = _rounds(kind, P, Q, pairs)
    pair = (P.initial, Q.initial)
    if rnd[pair] == math.inf:
        return None
    nP = _Naive(kind, P, Q.actions())
    nQ = _Naive(kind, Q, P.actions())
    steps: list[Step] = []
    while True:
        r = rnd[pair]
        best = None
        for side, a, target, replies in _moves(pair, P, Q, nP, nQ):
            if all(rnd[x] < r for x in replies):
                worst = max((rnd[x] for x in replies), default=0)
                if best is None or worst < best[0]:
                    best = (worst, side, a, target, replies)
        worst, side, a, target, replies = best
        if not replies:
            steps.append(Step(side, a, None, target))
            return tuple(steps)
        pair = next(x for x in replies if rnd[x] == worst)
        steps.append(Step(side, a, pair))


def replay(kind, P: Lts, Q: Lts, steps: Iterable[Step]) -> bool:
    """True iff ``steps`` is a legal play ending in a challenge with no reply."""
    kind = _kind(kind)
    nP = _Naive(kind, P, Q.actions())
    nQ = _Naive(kind, Q, P.actions())
    pair = (P.initial, Q.initial)
    steps = list(steps)
    if not steps:
        return False
    for i, st in enumerate(steps):
        final = i == len(steps) - 1
        options = [(target, replies) for side, a, target, replies in _moves(pair, P, Q, nP, nQ)
                   if side == st.side and a == st.action]
        if final:
            return st.pair is None and any(not replies and (st.target is None or target == st.target)
                                           for target, replies in options)
        if not any(st.pair in replies for _, replies in options):
            return False
        pair = st.pair
    return False
