"""Security lattices, channels, actions and the process AST.

Processes are immutable frozen dataclasses.  Source positions are carried on
nodes for diagnostics but never take part in equality or hashing, so two
terms parsed from differently formatted text compare equal.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union


class LatticeError(ValueError):
    pass


class OpenVariable(ValueError):
    """A process that should be closed mentions an unbound variable."""


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# lattice


class SecurityLattice:
    """A finite lattice of security levels.

    ``order`` holds every pair ``(lo, hi)`` with ``lo <= hi``; the constructor
    closes it reflexively and transitively and then checks antisymmetry and
    the existence of unique meets and joins.
    """

    def __init__(self, elements: Iterable[str], order: Iterable[tuple[str, str]] = ()):
        self.elements: tuple[str, ...] = tuple(dict.fromkeys(elements))
        if not self.elements:
            raise LatticeError("a lattice needs at least one element")
        known = set(self.elements)
        leq = {(e, e) for e in self.elements}
        for lo, hi in order:
            if lo not in known or hi not in known:
                raise LatticeError(f"order mentions unknown level {lo if lo not in known else hi!r}")
            leq.add((lo, hi))
        changed = True
        while changed:
            changed = False
            for (a, b), (c, d) in itertools.product(list(leq), repeat=2):
                if b == c and (a, d) not in leq:
                    leq.add((a, d))
                    changed = True
        for a, b in leq:
            if a != b and (b, a) in leq:
                raise LatticeError(f"order is not antisymmetric: {a} and {b}")
        self.order = frozenset(leq)
        self._meet: dict[tuple[str, str], str] = {}
        self._join: dict[tuple[str, str], str] = {}
        for a in self.elements:
            for b in self.elements:
                self._meet[a, b] = self._extremum(a, b, lower=True)
                self._join[a, b] = self._extremum(a, b, lower=False)
        bottoms = [e for e in self.elements if all(self.leq(e, x) for x in self.elements)]
        tops = [e for e in self.elements if all(self.leq(x, e) for x in self.elements)]
        self.bottom = bottoms[0]
        self.top = tops[0]

    def _extremum(self, a: str, b: str, lower: bool) -> str:
        if lower:
            bounds = [x for x in self.elements if self.leq(x, a) and self.leq(x, b)]
            best = [x for x in bounds if all(self.leq(y, x) for y in bounds)]
            kind = "meet"
        else:
            bounds = [x for x in self.elements if self.leq(a, x) and self.leq(b, x)]
            best = [x for x in bounds if all(self.leq(x, y) for y in bounds)]
            kind = "join"
        if len(best) != 1:
            raise LatticeError(f"{a} and {b} have no unique {kind}")
        return best[0]

    @classmethod
    def two_point(cls) -> "SecurityLattice":
        return cls.chain(["l", "h"])

    @classmethod
    def chain(cls, levels: Sequence[str]) -> "SecurityLattice":
        if len(set(levels)) != len(levels):
            raise LatticeError("chain repeats a level")
        return cls(levels, zip(levels, levels[1:]))

    @classmethod
    def from_covers(cls, elements: Iterable[str], covers: Iterable[Sequence[str]]) -> "SecurityLattice":
        return cls(elements, [(lo, hi) for lo, hi in covers])

    def leq(self, a: str, b: str) -> bool:
        return (a, b) in self.order

    def meet(self, *levels: str) -> str:
        out = self.top
        for lv in levels:
            out = self._meet[out, lv]
        return out

    def join(self, *levels: str) -> str:
        out = self.bottom
        for lv in levels:
            out = self._join[out, lv]
        return out

    def __contains__(self, level: str) -> bool:
        return level in self.elements

    def chain_order(self) -> list[str] | None:
        """Elements bottom-to-top if the lattice is a chain, else None."""
        ordered = sorted(self.elements, key=lambda e: sum(self.leq(x, e) for x in self.elements))
        if all(self.leq(a, b) for a, b in zip(ordered, ordered[1:])):
            return ordered
        return None

    def is_two_point(self) -> bool:
        return len(self.elements) == 2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SecurityLattice):
            return NotImplemented
        return set(self.elements) == set(other.elements) and self.order == other.order

    def __hash__(self) -> int:
        return hash((frozenset(self.elements), self.order))

    def __repr__(self) -> str:
        chain = self.chain_order()
        if chain is not None:
            return "SecurityLattice(" + " < ".join(chain) + ")"
        return f"SecurityLattice({sorted(self.elements)})"


DEFAULT_LATTICE = SecurityLattice.two_point()
DEFAULT_VALUE = "u"
DUMMY_VAR = "_"


# ---------------------------------------------------------------------------
# names, prefixes, actions


@dataclass(frozen=True)
class Channel:
    base: str
    level: str

    def __str__(self) -> str:
        return f"{self.base}_{self.level}"


@dataclass(frozen=True)
class Input:
    chan: Channel
    var: str
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"{self.chan}({self.var})"


@dataclass(frozen=True)
class Output:
    chan: Channel
    arg: str
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"'{self.chan}<{self.arg}>"


Prefix = Union[Input, Output]


@dataclass(frozen=True)
class Action:
    """``kind`` is ``"in"``, ``"out"`` or ``"tau"``; tau has no channel."""

    kind: str
    chan: Channel | None = None
    value: str | None = None

    @property
    def label(self) -> str:
        if self.kind == "tau":
            return "tau"
        mark = "?" if self.kind == "in" else "!"
        return f"{self.chan.base}{mark}{self.value}"

    @property
    def subject(self) -> Channel | None:
        return self.chan

    def is_tau(self) -> bool:
        return self.kind == "tau"

    def complements(self, other: "Action") -> bool:
        return (
            {self.kind, other.kind} == {"in", "out"}
            and self.chan.base == other.chan.base
            and self.value == other.value
        )

    def __str__(self) -> str:
        return self.label


TAU = Action("tau")

_LABEL_RE = re.compile(r"^(?:tau|([^?!\s]+)([?!])(\S+))$")


def parse_label(label: str, level: str) -> Action:
    """Inverse of ``Action.label`` given the channel's level."""
    m = _LABEL_RE.match(label)
    if not m:
        raise ValueError(f"bad action label {label!r}")
    if label == "tau":
        return TAU
    return Action("in" if m.group(2) == "?" else "out", Channel(m.group(1), level), m.group(3))


# ---------------------------------------------------------------------------
# processes


@dataclass(frozen=True)
class Nil:
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sum:
    branches: tuple[tuple[Prefix, "Process"], ...]
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("a sum needs at least one branch")


@dataclass(frozen=True)
class Par:
    parts: tuple["Process", ...]
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Restrict:
    chan: Channel
    body: "Process"
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[str, ...] = ()
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Phi:
    """Inert high-input sink: accepts every value on each of ``chans`` forever."""

    chans: frozenset[Channel]


Process = Union[Nil, Sum, Par, Restrict, Call, Phi]

NIL = Nil()


def prefix(pre: Prefix, cont: Process | None = None) -> Sum:
    return Sum(((pre, NIL if cont is None else cont),))


def par(*parts: Process) -> Process:
    if not parts:
        return NIL
    if len(parts) == 1:
        return parts[0]
    return Par(tuple(parts))


@dataclass(frozen=True)
class AgentDef:
    name: str
    params: tuple[str, ...]
    body: Process
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    main: Process
    values: tuple[str, ...] = (DEFAULT_VALUE,)
    agents: tuple[AgentDef, ...] = ()
    lattice: SecurityLattice = DEFAULT_LATTICE

    def agent_map(self) -> dict[str, AgentDef]:
        return {a.name: a for a in self.agents}

    def with_main(self, main: Process) -> "Program":
        return Program(main, self.values, self.agents, self.lattice)


# ---------------------------------------------------------------------------
# traversal helpers


def prefixes(p: Process) -> Iterator[Prefix]:
    if isinstance(p, Sum):
        for pre, cont in p.branches:
            yield pre
            yield from prefixes(cont)
    elif isinstance(p, Par):
        for q in p.parts:
            yield from prefixes(q)
    elif isinstance(p, Restrict):
        yield from prefixes(p.body)


def calls(p: Process, guarded: bool = False) -> Iterator[tuple[Call, bool]]:
    """Yield every call in ``p`` with a flag telling whether it sits under a prefix."""
    if isinstance(p, Call):
        yield p, guarded
    elif isinstance(p, Sum):
        for _, cont in p.branches:
            yield from calls(cont, True)
    elif isinstance(p, Par):
        for q in p.parts:
            yield from calls(q, guarded)
    elif isinstance(p, Restrict):
        yield from calls(p.body, guarded)


def channels(p: Process) -> Iterator[Channel]:
    """Every channel occurrence, binders included."""
    if isinstance(p, Sum):
        for pre, cont in p.branches:
            yield pre.chan
            yield from channels(cont)
    elif isinstance(p, Par):
        for q in p.parts:
            yield from channels(q)
    elif isinstance(p, Restrict):
        yield p.chan
        yield from channels(p.body)
    elif isinstance(p, Phi):
        yield from p.chans


def size(p: Process) -> int:
    """Number of prefixes."""
    return sum(1 for _ in prefixes(p))


# ---------------------------------------------------------------------------
# substitution


def substitute(p: Process, var: str, val: str) -> Process:
    """Replace every free occurrence of variable ``var`` by ``val``."""
    if isinstance(p, (Nil, Phi)):
        return p
    if isinstance(p, Sum):
        out = []
        changed = False
        for pre, cont in p.branches:
            if isinstance(pre, Output):
                new_pre = Output(pre.chan, val, pre.loc) if pre.arg == var else pre
                new_cont = substitute(cont, var, val)
            else:
                new_pre = pre
                new_cont = cont if pre.var == var else substitute(cont, var, val)
            changed = changed or new_pre is not pre or new_cont is not cont
            out.append((new_pre, new_cont))
        return Sum(tuple(out), p.loc) if changed else p
    if isinstance(p, Par):
        parts = tuple(substitute(q, var, val) for q in p.parts)
        if all(a is b for a, b in zip(parts, p.parts)):
            return p
        return Par(parts, p.loc)
    if isinstance(p, Restrict):
        body = substitute(p.body, var, val)
        return p if body is p.body else Restrict(p.chan, body, p.loc)
    if isinstance(p, Call):
        if var not in p.args:
            return p
        return Call(p.name, tuple(val if a == var else a for a in p.args), p.loc)
    raise TypeError(f"not a process: {p!r}")


def substitute_many(p: Process, mapping: Mapping[str, str]) -> Process:
    # Parameters are distinct and values never look like variables, so
    # sequential substitution is the same as simultaneous substitution.
    for var, val in mapping.items():
        p = substitute(p, var, val)
    return p


def unfold(call: Call, agents: Mapping[str, AgentDef]) -> Process:
    agent = agents[call.name]
    return substitute_many(agent.body, dict(zip(agent.params, call.args)))


def free_args(p: Process, bound: frozenset[str] = frozenset()) -> set[str]:
    """Output payloads and call arguments not bound by an enclosing input."""
    out: set[str] = set()
    if isinstance(p, Sum):
        for pre, cont in p.branches:
            if isinstance(pre, Output):
                if pre.arg not in bound:
                    out.add(pre.arg)
                out |= free_args(cont, bound)
            else:
                out |= free_args(cont, bound | {pre.var})
    elif isinstance(p, Par):
        for q in p.parts:
            out |= free_args(q, bound)
    elif isinstance(p, Restrict):
        out |= free_args(p.body, bound)
    elif isinstance(p, Call):
        out |= {a for a in p.args if a not in bound}
    return out


# ---------------------------------------------------------------------------
# free names


def agent_channels(agents: Mapping[str, AgentDef] | Sequence[AgentDef]) -> dict[str, frozenset[Channel]]:
    """Free channels of each agent body, following calls transitively."""
    if not isinstance(agents, Mapping):
        agents = {a.name: a for a in agents}
    direct = {name: _free_names_local(a.body) for name, a in agents.items()}
    callees = {name: {c.name for c, _ in calls(a.body) if c.name in agents} for name, a in agents.items()}
    result = {name: set(chans) for name, chans in direct.items()}
    changed = True
    while changed:
        changed = False
        for name in result:
            for callee in callees[name]:
                extra = result[callee] - result[name]
                if extra:
                    result[name] |= extra
                    changed = True
    return {name: frozenset(chans) for name, chans in result.items()}


def _free_names_local(p: Process) -> set[Channel]:
    """Free channels, ignoring what called agents use."""
    if isinstance(p, Sum):
        out: set[Channel] = set()
        for pre, cont in p.branches:
            out.add(pre.chan)
            out |= _free_names_local(cont)
        return out
    if isinstance(p, Par):
        out = set()
        for q in p.parts:
            out |= _free_names_local(q)
        return out
    if isinstance(p, Restrict):
        return {c for c in _free_names_local(p.body) if c.base != p.chan.base}
    if isinstance(p, Phi):
        return set(p.chans)
    return set()


def free_names(p: Process, agents: Mapping[str, AgentDef] | Sequence[AgentDef] | None = None,
               _agent_chans: Mapping[str, frozenset[Channel]] | None = None) -> set[Channel]:
    """Channels of ``p`` not captured by a restriction.

    Calls contribute the free channels of the called agent's body (and of
    anything it calls in turn) when ``agents`` is given.
    """
    if _agent_chans is None:
        _agent_chans = agent_channels(agents) if agents else {}
    return _free_names(p, _agent_chans)


def _free_names(p: Process, achans: Mapping[str, frozenset[Channel]]) -> set[Channel]:
    if isinstance(p, Sum):
        out: set[Channel] = set()
        for pre, cont in p.branches:
            out.add(pre.chan)
            out |= _free_names(cont, achans)
        return out
    if isinstance(p, Par):
        out = set()
        for q in p.parts:
            out |= _free_names(q, achans)
        return out
    if isinstance(p, Restrict):
        return {c for c in _free_names(p.body, achans) if c.base != p.chan.base}
    if isinstance(p, Call):
        return set(achans.get(p.name, ()))
    if isinstance(p, Phi):
        return set(p.chans)
    return set()


# ---------------------------------------------------------------------------
# canonical form


def show(p: Process) -> str:
    """Compact fully-parenthesised rendering, used as the canonical sort key."""
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Sum):
        return "+".join(f"{pre}.{_show_term(cont)}" for pre, cont in p.branches)
    if isinstance(p, Par):
        return "(" + "|".join(show(q) for q in p.parts) + ")"
    if isinstance(p, Restrict):
        return f"new {p.chan}.{_show_term(p.body)}"
    if isinstance(p, Call):
        return f"{p.name}({','.join(p.args)})"
    if isinstance(p, Phi):
        return "Phi{" + ",".join(sorted(map(str, p.chans))) + "}"
    raise TypeError(f"not a process: {p!r}")


def _show_term(p: Process) -> str:
    if isinstance(p, Sum) and len(p.branches) > 1:
        return "(" + show(p) + ")"
    return show(p)


def _sort_key(item: tuple[Prefix, Process]) -> tuple[str, str]:
    return str(item[0]), show(item[1])


_HASH_NAME = re.compile(r"^#(\d+)$")


def _hash_index(base: str) -> int:
    m = _HASH_NAME.match(base)
    return int(m.group(1)) if m else 0


def _rename(p: Process, old: str, new: str) -> Process:
    """Rename free occurrences of channel base ``old`` to ``new``."""
    if isinstance(p, (Nil, Call)):
        return p
    if isinstance(p, Sum):
        branches = []
        for pre, cont in p.branches:
            if pre.chan.base == old:
                chan = Channel(new, pre.chan.level)
                pre = Input(chan, pre.var, pre.loc) if isinstance(pre, Input) else Output(chan, pre.arg, pre.loc)
            branches.append((pre, _rename(cont, old, new)))
        return Sum(tuple(branches), p.loc)
    if isinstance(p, Par):
        return Par(tuple(_rename(q, old, new) for q in p.parts), p.loc)
    if isinstance(p, Restrict):
        if p.chan.base == old:
            return p
        return Restrict(p.chan, _rename(p.body, old, new), p.loc)
    if isinstance(p, Phi):
        return Phi(frozenset(Channel(new, c.level) if c.base == old else c for c in p.chans))
    raise TypeError(f"not a process: {p!r}")


def _resort(p: Process) -> Process:
    if isinstance(p, Sum):
        return Sum(tuple(sorted(((pre, _resort(c)) for pre, c in p.branches), key=_sort_key)))
    if isinstance(p, Par):
        return Par(tuple(sorted((_resort(q) for q in p.parts), key=show)))
    if isinstance(p, Restrict):
        return Restrict(p.chan, _resort(p.body))
    return p


def _max_hash_index(p: Process, skip: str) -> int:
    best = 0
    for c in channels(p):
        if c.base != skip:
            best = max(best, _hash_index(c.base))
    return best


class Canonicalizer:
    """Computes normal forms relative to a fixed set of agent definitions.

    Normal form: parallel components are flattened, stripped of ``0`` and
    sorted; summands are sorted; a restriction is dropped when its name is
    unused and floated inward past components that do not mention it;
    restricted names are renamed ``#k`` where ``k`` is one more than the
    largest ``#`` index bound inside the scope, so names depend only on
    nesting height and re-normalising a normal form is the identity.  A
    restricted name that some called agent body refers to keeps its own
    name, since renaming it would cut the link to that body.
    """

    def __init__(self, agents: Mapping[str, AgentDef] | Sequence[AgentDef] | None = None):
        agents = agents or {}
        if not isinstance(agents, Mapping):
            agents = {a.name: a for a in agents}
        self.agents = agents
        self.achans = agent_channels(agents) if agents else {}
        self._abases = {name: frozenset(c.base for c in chans) for name, chans in self.achans.items()}

    def __call__(self, p: Process) -> Process:
        return self.canon(self._detach(p, [0]))

    def _detach(self, p: Process, counter: list[int]) -> Process:
        # give every renameable binder a unique placeholder so that no ``#``
        # name is free below a binder while heights are computed
        if isinstance(p, Sum):
            return Sum(tuple((pre, self._detach(c, counter)) for pre, c in p.branches), p.loc)
        if isinstance(p, Par):
            return Par(tuple(self._detach(q, counter) for q in p.parts), p.loc)
        if isinstance(p, Restrict):
            body = self._detach(p.body, counter)
            if p.chan.base in self._called_bases(body):
                return Restrict(p.chan, body, p.loc)
            counter[0] += 1
            tmp = f"${counter[0]}"
            return Restrict(Channel(tmp, p.chan.level), _rename(body, p.chan.base, tmp), p.loc)
        return p

    def _mentions(self, p: Process, base: str) -> bool:
        return any(c.base == base for c in _free_names(p, self.achans))

    def _called_bases(self, p: Process) -> set[str]:
        out: set[str] = set()
        for c, _ in calls(p):
            out |= self._abases.get(c.name, frozenset())
        return out

    def canon(self, p: Process) -> Process:
        if isinstance(p, Nil):
            return NIL
        if isinstance(p, Sum):
            return Sum(tuple(sorted(((pre, self.canon(c)) for pre, c in p.branches), key=_sort_key)))
        if isinstance(p, Par):
            return _make_par(self.canon(q) for q in p.parts)
        if isinstance(p, Restrict):
            return self._canon_restrict(p)
        if isinstance(p, Call):
            return Call(p.name, p.args)
        if isinstance(p, Phi):
            return p if p.chans else NIL
        raise TypeError(f"not a process: {p!r}")

    def _canon_restrict(self, p: Restrict) -> Process:
        chan = p.chan
        body = self.canon(p.body)
        parts = body.parts if isinstance(body, Par) else (body,)
        inside = [q for q in parts if self._mentions(q, chan.base)]
        if not inside:
            return body
        outside = [q for q in parts if not self._mentions(q, chan.base)]
        inner = inside[0] if len(inside) == 1 else Par(tuple(inside))
        if chan.base not in self._called_bases(inner):
            fresh = f"#{1 + _max_hash_index(inner, chan.base)}"
            if fresh != chan.base:
                inner = _resort(_rename(inner, chan.base, fresh))
            chan = Channel(fresh, chan.level)
        return _make_par(outside + [Restrict(chan, inner)])


def _make_par(parts: Iterable[Process]) -> Process:
    flat: list[Process] = []
    for q in parts:
        if isinstance(q, Nil):
            continue
        if isinstance(q, Par):
            flat.extend(q.parts)
        else:
            flat.append(q)
    if not flat:
        return NIL
    if len(flat) == 1:
        return flat[0]
    return Par(tuple(sorted(flat, key=show)))


def canonicalize(p: Process, agents: Mapping[str, AgentDef] | Sequence[AgentDef] | None = None,
                 values: Iterable[str] | None = None) -> Process:
    """Normal form of a closed process (see ``Canonicalizer``).

    When ``values`` is given, any output payload or call argument that is
    neither bound nor a declared value raises ``OpenVariable``.
    """
    if values is not None:
        loose = free_args(p) - set(values)
        if loose:
            raise OpenVariable(f"free variable(s): {', '.join(sorted(loose))}")
    return Canonicalizer(agents)(p)


# ---------------------------------------------------------------------------
# well-formedness


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    subject: str
    message: str
    loc: Loc | None = None

    def __str__(self) -> str:
        where = f"{self.loc}: " if self.loc else ""
        return f"{where}{self.kind} {self.subject}: {self.message}"


def _walk_scoped(p: Process, bound: frozenset[str], visit) -> None:
    visit(p, bound)
    if isinstance(p, Sum):
        for pre, cont in p.branches:
            _walk_scoped(cont, bound | {pre.var} if isinstance(pre, Input) else bound, visit)
    elif isinstance(p, Par):
        for q in p.parts:
            _walk_scoped(q, bound, visit)
    elif isinstance(p, Restrict):
        _walk_scoped(p.body, bound, visit)


def check_wellformed(prog: Program) -> list[Diagnostic]:
    """Every violated program invariant, in source order where possible."""
    diags: list[Diagnostic] = []
    values = set(prog.values)
    agents: dict[str, AgentDef] = {}
    if not prog.values:
        diags.append(Diagnostic("EmptyValues", "values", "the value set must not be empty"))
    for a in prog.agents:
        if a.name in agents:
            diags.append(Diagnostic("DuplicateAgent", a.name, "agent defined twice", a.loc))
        agents[a.name] = a
        if len(set(a.params)) != len(a.params):
            diags.append(Diagnostic("DuplicateParameter", a.name, "parameter names repeat", a.loc))

    bodies: list[tuple[str, Process, frozenset[str]]] = [("main", prog.main, frozenset())]
    bodies += [(a.name, a.body, frozenset(a.params)) for a in prog.agents]

    levels: dict[str, tuple[str, Loc | None]] = {}

    def note_channel(chan: Channel, loc: Loc | None) -> None:
        if chan.level not in prog.lattice:
            diags.append(Diagnostic("UnknownLevel", str(chan), f"level {chan.level!r} is not in the lattice", loc))
        seen = levels.get(chan.base)
        if seen is None:
            levels[chan.base] = (chan.level, loc)
        elif seen[0] != chan.level:
            diags.append(Diagnostic(
                "LevelClash", chan.base,
                f"used at level {chan.level} here and at level {seen[0]}" + (f" at {seen[1]}" if seen[1] else ""),
                loc))

    for owner, body, params in bodies:
        def visit(node: Process, bound: frozenset[str], owner=owner) -> None:
            if isinstance(node, Sum):
                for pre, _ in node.branches:
                    note_channel(pre.chan, pre.loc)
                    if isinstance(pre, Output) and pre.arg not in bound and pre.arg not in values:
                        diags.append(Diagnostic("UnboundVariable", pre.arg,
                                                f"in {owner}: neither a bound variable nor a declared value", pre.loc))
            elif isinstance(node, Restrict):
                note_channel(node.chan, node.loc)
            elif isinstance(node, Call):
                target = agents.get(node.name)
                if target is None:
                    diags.append(Diagnostic("UndefinedAgent", node.name, f"called from {owner}", node.loc))
                elif len(target.params) != len(node.args):
                    diags.append(Diagnostic("ArityMismatch", node.name,
                                            f"expects {len(target.params)} argument(s), got {len(node.args)}", node.loc))
                for arg in node.args:
                    if arg not in bound and arg not in values:
                        diags.append(Diagnostic("UnboundVariable", arg,
                                                f"in {owner}: neither a bound variable nor a declared value", node.loc))
        _walk_scoped(body, params, visit)

    for a in prog.agents:
        for c, guarded in calls(a.body):
            if not guarded:
                diags.append(Diagnostic("UnguardedRecursion", a.name,
                                        f"call to {c.name} is not under a prefix", c.loc or a.loc))

    for v in sorted(values & set(levels)):
        diags.append(Diagnostic("ValueNameClash", v, "used both as a value and as a channel name"))
    return diags
