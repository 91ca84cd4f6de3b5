"""The timed behaviour algebra: terms, delay transitions and action transitions.

Terms are immutable::

    B ::= Nil() | Prefix(c, B) | Omega(c, B) | Rho(L, B) | Delay(t, B) | Sum(B, B) | Const(K)

where ``c`` is a `Channel` (a `Name` and a `Surface`) and ``L`` a set of channels.
Constants are looked up in an environment mapping names to terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from .geometry import DEFAULT_TOL, Surface, intersects

CHAN, OMEGA, RHO = "chan", "omega", "rho"


class BehaviourError(ValueError):
    """Unbound constants, unguarded recursion, or malformed terms."""


@dataclass(frozen=True, order=True)
class Name:
    base: str
    co: bool = False

    def __post_init__(self):
        if not self.base:
            raise BehaviourError("empty channel name")

    def complement(self) -> "Name":
        return Name(self.base, not self.co)

    def __str__(self):
        return ("~" if self.co else "") + self.base


@dataclass(frozen=True)
class Channel:
    name: Name
    surface: Surface

    def __post_init__(self):
        if self.surface.is_empty:
            raise BehaviourError(f"channel {self.name} has an empty surface")

    def key(self):
        return (self.name.base, self.name.co, self.surface.key())

    def __str__(self):
        return f"<{self.name},{self.surface}>"


@dataclass(frozen=True)
class Action:
    kind: str
    channel: Channel

    def __str__(self):
        if self.kind == CHAN:
            return str(self.channel)
        sym = "w" if self.kind == OMEGA else "rho"
        return f"{sym}({self.channel.name},{self.channel.surface})"


# ------------------------------------------------------------------ terms

@dataclass(frozen=True)
class Nil:
    def __str__(self):
        return "nil"


@dataclass(frozen=True)
class Prefix:
    channel: Channel
    cont: "Behaviour"

    def __str__(self):
        return f"{self.channel}.{_wrap(self.cont)}"


@dataclass(frozen=True)
class Omega:
    channel: Channel
    cont: "Behaviour"

    def __str__(self):
        return f"w({self.channel.name},{self.channel.surface}).{_wrap(self.cont)}"


@dataclass(frozen=True)
class Rho:
    channels: tuple[Channel, ...]
    cont: "Behaviour"

    def __post_init__(self):
        chans = tuple(sorted(set(self.channels), key=Channel.key))
        object.__setattr__(self, "channels", chans)

    def __str__(self):
        return "rho{" + ", ".join(str(c) for c in self.channels) + "}." + _wrap(self.cont)


@dataclass(frozen=True)
class Delay:
    t: float
    cont: "Behaviour"

    def __post_init__(self):
        t = float(self.t)
        if not math.isfinite(t) or t < 0:
            raise BehaviourError(f"delay must be a finite non-negative time, got {self.t!r}")
        object.__setattr__(self, "t", t)

    def __str__(self):
        return f"eps({self.t!r}).{_wrap(self.cont)}"


@dataclass(frozen=True)
class Sum:
    left: "Behaviour"
    right: "Behaviour"

    def __str__(self):
        return f"{self.left} + {self.right}"


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


Behaviour = Union[Nil, Prefix, Omega, Rho, Delay, Sum, Const]
Env = Mapping[str, Behaviour]
NIL = Nil()


def _wrap(b) -> str:
    return f"({b})" if isinstance(b, Sum) else str(b)


def _lookup(env: Env, k: str) -> Behaviour:
    try:
        return env[k]
    except KeyError:
        raise BehaviourError(f"unbound behaviour constant {k!r}") from None


# ------------------------------------------------------------------ compatibility

def channels_compatible(c1: Channel, c2: Channel, eps: float = DEFAULT_TOL.eps_len) -> bool:
    """Complementary names on intersecting surfaces (same frame)."""
    return c2.name == c1.name.complement() and intersects(c1.surface, c2.surface, eps)


# ------------------------------------------------------------------ temporal rules

def delay_behaviour(b: Behaviour, t: float, env: Env | None = None, eps: float = 0.0) -> Behaviour | None:
    """Let ``t`` time units pass; None when time is refused.

    With ``eps > 0`` a delay ``eps(t')`` accepts any ``t <= t' + eps`` and a
    residue of at most ``eps`` is rounded down to ``eps(0)``.  A constant whose body is unchanged by the delay
    stays folded, so idle constants keep their names.
    """
    if t < 0:
        raise ValueError("negative delay")
    env = env or {}
    return _delay(b, t, env, eps, frozenset())


def _delay(b, t, env, eps, seen):
    if isinstance(b, (Nil, Prefix, Omega, Rho)):
        return b
    if isinstance(b, Delay):
        if b.t >= t - eps:
            if not t:
                return b
            rest = b.t - t
            return Delay(rest if rest > eps else 0.0, b.cont)
        return None
    if isinstance(b, Sum):
        l = _delay(b.left, t, env, eps, seen)
        if l is None:
            return None
        r = _delay(b.right, t, env, eps, seen)
        if r is None:
            return None
        return b if (l is b.left and r is b.right) else Sum(l, r)
    if isinstance(b, Const):
        if b.name in seen:
            raise BehaviourError(f"unguarded recursion through {b.name!r}")
        body = _lookup(env, b.name)
        d = _delay(body, t, env, eps, seen | {b.name})
        if d is None:
            return None
        return b if d == body else d
    raise TypeError(f"not a behaviour: {b!r}")


def delay_limit(b: Behaviour, env: Env | None = None) -> float:
    """Supremum of the delays the term accepts (``inf`` when it can idle forever)."""
    env = env or {}
    return _limit(b, env, frozenset())


def _limit(b, env, seen):
    if isinstance(b, (Nil, Prefix, Omega, Rho)):
        return math.inf
    if isinstance(b, Delay):
        return b.t
    if isinstance(b, Sum):
        return min(_limit(b.left, env, seen), _limit(b.right, env, seen))
    if isinstance(b, Const):
        if b.name in seen:
            raise BehaviourError(f"unguarded recursion through {b.name!r}")
        return _limit(_lookup(env, b.name), env, seen | {b.name})
    raise TypeError(f"not a behaviour: {b!r}")


# ------------------------------------------------------------------ action rules

def behaviour_actions(b: Behaviour, env: Env | None = None) -> tuple[tuple[Action, Behaviour], ...]:
    """All action derivatives ``(mu, B')`` of ``b``, without duplicates, in rule order."""
    env = env or {}
    out: dict[tuple[Action, Behaviour], None] = {}
    for pair in _actions(b, env, frozenset()):
        out.setdefault(pair, None)
    return tuple(out)


def _actions(b, env, seen) -> Iterator[tuple[Action, Behaviour]]:
    if isinstance(b, Nil):
        return
    if isinstance(b, Prefix):
        yield Action(CHAN, b.channel), b.cont
    elif isinstance(b, Omega):
        yield Action(OMEGA, b.channel), b.cont
    elif isinstance(b, Delay):
        if b.t == 0.0:
            yield from _actions(b.cont, env, seen)
    elif isinstance(b, Sum):
        yield from _actions(b.left, env, seen)
        yield from _actions(b.right, env, seen)
    elif isinstance(b, Const):
        if b.name in seen:
            raise BehaviourError(f"unguarded recursion through {b.name!r}")
        yield from _actions(_lookup(env, b.name), env, seen | {b.name})
    elif isinstance(b, Rho):
        L = b.channels
        for c in L:
            rest = tuple(x for x in L if x != c)
            yield Action(RHO, c), (Rho(rest, b.cont) if rest else b.cont)
        # nested strong splits: the continuation's rho actions are offered too
        for act, d in _actions(b.cont, env, frozenset()):
            if act.kind == RHO:
                yield act, Rho(L, d)
    else:
        raise TypeError(f"not a behaviour: {b!r}")


# ------------------------------------------------------------------ validation

def _subterms(b) -> Iterator:
    yield b
    if isinstance(b, (Prefix, Omega, Rho, Delay)):
        yield from _subterms(b.cont)
    elif isinstance(b, Sum):
        yield from _subterms(b.left)
        yield from _subterms(b.right)


def _unguarded_consts(b) -> set[str]:
    if isinstance(b, Const):
        return {b.name}
    if isinstance(b, Sum):
        return _unguarded_consts(b.left) | _unguarded_consts(b.right)
    if isinstance(b, Delay) and b.t == 0.0:
        return _unguarded_consts(b.cont)
    return set()


def validate_behaviour(b: Behaviour, env: Env | None = None, eps: float = DEFAULT_TOL.eps_len) -> list[str]:
    """Side conditions of the term grammar; returns a list of violation messages (empty = ok)."""
    env = env or {}
    problems: list[str] = []
    reachable: dict[str, Behaviour] = {}
    todo = [b]
    while todo:
        term = todo.pop()
        for s in _subterms(term):
            if isinstance(s, Rho):
                if not s.channels:
                    problems.append("strong split with an empty channel set")
                for i, c1 in enumerate(s.channels):
                    for c2 in s.channels[i + 1:]:
                        if channels_compatible(c1, c2, eps):
                            problems.append(f"strong split set contains compatible channels {c1} and {c2}")
            elif isinstance(s, Const) and s.name not in reachable:
                if s.name not in env:
                    problems.append(f"unbound behaviour constant {s.name!r}")
                    reachable[s.name] = NIL
                else:
                    reachable[s.name] = env[s.name]
                    todo.append(env[s.name])
    # guardedness: no cycle in the "unguarded occurrence" graph
    graph = {k: _unguarded_consts(v) & set(reachable) for k, v in reachable.items()}
    state: dict[str, int] = {}

    def visit(k, path):
        state[k] = 1
        for nxt in sorted(graph[k]):
            if state.get(nxt) == 1:
                cyc = path[path.index(nxt):] + [nxt] if nxt in path else [k, nxt]
                problems.append("unguarded recursion: " + " -> ".join(cyc))
            elif nxt not in state:
                visit(nxt, path + [nxt])
        state[k] = 2

    for k in sorted(graph):
        if k not in state:
            visit(k, [k])
    return problems


def behaviour_surfaces(b: Behaviour, env: Env | None = None) -> list[Surface]:
    """Every surface occurring in ``b`` or in constants reachable from it."""
    env = env or {}
    out: dict[Surface, None] = {}
    seen: set[str] = set()
    todo = [b]
    while todo:
        for s in _subterms(todo.pop()):
            if isinstance(s, (Prefix, Omega)):
                out.setdefault(s.channel.surface, None)
            elif isinstance(s, Rho):
                for c in s.channels:
                    out.setdefault(c.surface, None)
            elif isinstance(s, Const) and s.name not in seen and s.name in env:
                seen.add(s.name)
                todo.append(env[s.name])
    return list(out)


def unfold(b: Behaviour, env: Env | None = None) -> Behaviour:
    """Replace a top-level constant by its body (repeatedly)."""
    env = env or {}
    seen = set()
    while isinstance(b, Const):
        if b.name in seen:
            raise BehaviourError(f"unguarded recursion through {b.name!r}")
        seen.add(b.name)
        b = _lookup(env, b.name)
    return b
