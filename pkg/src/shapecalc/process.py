"""3D processes: shapes running behaviours, joined by named bonds.

A compound process is stored as a bond graph: nodes are basic processes with
stable integer ids, edges are bonds ``(u, v, name, surface)``.  Binding always
joins two separate bodies, so the graph is a tree; commutativity and
associativity of bonding are then just graph identity.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .behaviour import (
    CHAN,
    OMEGA,
    RHO,
    Action,
    Behaviour,
    BehaviourError,
    Channel,
    Env,
    behaviour_actions,
    behaviour_surfaces,
    delay_behaviour,
    delay_limit,
    unfold,
    validate_behaviour,
)
from .geometry import (
    DEFAULT_TOL,
    Compose,
    Shape,
    Surface,
    Tolerances,
    Vec3,
    contact_surface,
    interpenetrates,
    is_well_formed_shape,
    leaves,
    mass,
    ref_point,
    same_points,
    shapes_congruent,
    surface_on_boundary,
    translate_over_time,
    update_velocity,
    vel,
    vec3,
)
from .geometry import intersect as intersect_surfaces


class ProcessError(ValueError):
    """Misuse of a process operation (unknown bond, bad graph, ...)."""


@dataclass(frozen=True)
class Context:
    """Behaviour constants and tolerances shared by process-level operations."""

    env: Mapping[str, Behaviour] = field(default_factory=dict)
    tol: Tolerances = DEFAULT_TOL


DEFAULT_CTX = Context()


@dataclass(frozen=True)
class BasicProcess:
    shape: Shape
    behaviour: Behaviour
    pid: int


@dataclass(frozen=True)
class Bond:
    u: int
    v: int
    name: str
    surface: Surface

    def __post_init__(self):
        if self.u == self.v:
            raise ProcessError("a bond needs two distinct processes")
        if self.u > self.v:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)

    @property
    def label(self) -> tuple[str, Surface]:
        return (self.name, self.surface)

    def key(self):
        return (self.u, self.v, self.name, self.surface.key())


@dataclass(frozen=True)
class CompoundProcess:
    """Bond graph with at least two nodes; nodes sorted by id, bonds canonically sorted."""

    nodes: tuple[BasicProcess, ...]
    bonds: tuple[Bond, ...]

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes, key=lambda n: n.pid))
        bonds = tuple(sorted(self.bonds, key=Bond.key))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "bonds", bonds)
        ids = [n.pid for n in nodes]
        if len(set(ids)) != len(ids):
            raise ProcessError("duplicate process ids in compound")
        if len(nodes) < 2:
            raise ProcessError("a compound process needs at least two nodes")
        idset = set(ids)
        for b in bonds:
            if b.u not in idset or b.v not in idset:
                raise ProcessError(f"bond {b.name} refers to unknown process ids")
        if len(_components(ids, bonds)) != 1:
            raise ProcessError("compound process graph is not connected")

    @property
    def pid(self) -> int:
        return self.nodes[0].pid

    def node(self, pid: int) -> BasicProcess:
        for n in self.nodes:
            if n.pid == pid:
                return n
        raise KeyError(pid)


Process = Union[BasicProcess, CompoundProcess]


# ------------------------------------------------------------------ graph helpers

def _components(ids: Iterable[int], bonds: Iterable[Bond]) -> list[list[int]]:
    adj: dict[int, list[int]] = {i: [] for i in ids}
    for b in bonds:
        adj[b.u].append(b.v)
        adj[b.v].append(b.u)
    seen: set[int] = set()
    comps = []
    for i in sorted(adj):
        if i in seen:
            continue
        comp, dq = [], deque([i])
        seen.add(i)
        while dq:
            x = dq.popleft()
            comp.append(x)
            for y in sorted(adj[x]):
                if y not in seen:
                    seen.add(y)
                    dq.append(y)
        comps.append(sorted(comp))
    return comps


def proc_nodes(p: Process) -> tuple[BasicProcess, ...]:
    return (p,) if isinstance(p, BasicProcess) else p.nodes


def proc_bonds(p: Process) -> tuple[Bond, ...]:
    return () if isinstance(p, BasicProcess) else p.bonds


def bonds(p: Process) -> frozenset[tuple[str, Surface]]:
    """Bond labels ``(name, surface)`` established in ``p``."""
    return frozenset(b.label for b in proc_bonds(p))


def proc_id(p: Process) -> int:
    return p.pid


def build(nodes: Sequence[BasicProcess], bonds_: Sequence[Bond]) -> Process:
    if len(nodes) == 1:
        if bonds_:
            raise ProcessError("a single process cannot carry bonds")
        return nodes[0]
    return CompoundProcess(tuple(nodes), tuple(bonds_))


def with_nodes(p: Process, new: Mapping[int, BasicProcess]) -> Process:
    """Replace some nodes (by id) keeping the bond structure."""
    if isinstance(p, BasicProcess):
        return new.get(p.pid, p)
    return CompoundProcess(tuple(new.get(n.pid, n) for n in p.nodes), p.bonds)


def _find_bond(p: Process, bond) -> Bond:
    if isinstance(bond, Bond):
        for b in proc_bonds(p):
            if b == bond:
                return b
    else:
        name, surf = bond
        for b in proc_bonds(p):
            if b.name == name and b.surface == surf:
                return b
    raise ProcessError(f"bond {bond!r} is not established in the process")


def _sides(p: CompoundProcess, bond: Bond) -> tuple[list[int], list[int]]:
    rest = [b for b in p.bonds if b != bond]
    comps = _components([n.pid for n in p.nodes], rest)
    cu = next(c for c in comps if bond.u in c)
    cv = next(c for c in comps if bond.v in c)
    return cu, cv


def _subprocess(p: Process, ids: Sequence[int]) -> Process:
    idset = set(ids)
    nodes = [n for n in proc_nodes(p) if n.pid in idset]
    bs = [b for b in proc_bonds(p) if b.u in idset and b.v in idset]
    return build(nodes, bs)


# ------------------------------------------------------------------ shape

def proc_shape(p: Process, tol: Tolerances = DEFAULT_TOL) -> Shape:
    """Shape of a process: for compounds, leaves glued in breadth-first order on their full contact."""
    if isinstance(p, BasicProcess):
        return p.shape
    order = []
    adj: dict[int, list[int]] = {n.pid: [] for n in p.nodes}
    for b in p.bonds:
        adj[b.u].append(b.v)
        adj[b.v].append(b.u)
    seen = {p.nodes[0].pid}
    dq = deque([p.nodes[0].pid])
    while dq:
        x = dq.popleft()
        order.append(x)
        for y in sorted(adj[x]):
            if y not in seen:
                seen.add(y)
                dq.append(y)
    by_id = {n.pid: n for n in p.nodes}
    acc: Shape = by_id[order[0]].shape
    for i in order[1:]:
        s = by_id[i].shape
        X = contact_surface(acc, s, tol)
        acc = Compose(acc, X if X is not None else Surface(()), s)
    return acc


def proc_body(p: Process) -> Shape:
    """Cheap stand-in for `proc_shape`: the same leaves glued without computing contacts.

    Good for anything that only looks at leaves (contact tests, mass, velocity, boundary).
    """
    if isinstance(p, BasicProcess):
        return p.shape
    acc: Shape = p.nodes[0].shape
    for n in p.nodes[1:]:
        acc = Compose(acc, Surface(()), n.shape)
    return acc


def proc_vel(p: Process) -> Vec3:
    return vel(proc_nodes(p)[0].shape)


def proc_mass(p: Process) -> float:
    return float(sum(mass(n.shape) for n in proc_nodes(p)))


def proc_leaves(p: Process):
    return tuple(l for n in proc_nodes(p) for l in leaves(n.shape))


def proc_update_velocity(p: Process, v) -> Process:
    v = vec3(v)
    new = {n.pid: BasicProcess(update_velocity(n.shape, v), n.behaviour, n.pid) for n in proc_nodes(p)}
    return with_nodes(p, new)


def global_channel(c: Channel, shape: Shape) -> Channel:
    """Lift a channel from the shape's local frame to global coordinates."""
    return Channel(c.name, c.surface.translated(np.asarray(ref_point(shape))))


# ------------------------------------------------------------------ well-formedness

def proc_well_formed(p: Process, ctx: Context = DEFAULT_CTX) -> list[str]:
    """Violations of process well-formedness (empty list when well-formed)."""
    tol = ctx.tol
    out: list[str] = []
    for n in proc_nodes(p):
        rep = is_well_formed_shape(n.shape, tol)
        out.extend(f"process {n.pid}: shape {v}" for v in rep.violations)
        try:
            out.extend(f"process {n.pid}: {m}" for m in validate_behaviour(n.behaviour, ctx.env, tol.eps_len))
            surfs = behaviour_surfaces(n.behaviour, ctx.env)
        except BehaviourError as exc:
            out.append(f"process {n.pid}: {exc}")
            surfs = []
        r = np.asarray(ref_point(n.shape))
        for X in surfs:
            if not surface_on_boundary(n.shape, X.translated(r), tol):
                out.append(f"process {n.pid}: site {X} is not on the boundary of its shape")
    if isinstance(p, CompoundProcess):
        vs = np.array([l.velocity for l in proc_leaves(p)])
        if np.any(np.abs(vs - vs[0]) > 1e-12 * np.maximum(1.0, np.abs(vs[0]))):
            out.append(f"compound {p.pid}: components have different velocities")
        ns = p.nodes
        for i in range(len(ns)):
            for j in range(i + 1, len(ns)):
                if interpenetrates(ns[i].shape, ns[j].shape, tol):
                    out.append(f"compound {p.pid}: processes {ns[i].pid} and {ns[j].pid} interpenetrate")
        if len(p.bonds) != len(p.nodes) - 1:
            out.append(f"compound {p.pid}: bond graph is not a tree")
        for b in p.bonds:
            if b.surface.is_empty:
                out.append(f"compound {p.pid}: bond {b.name} has an empty surface")
                continue
            cu, cv = _sides(p, b)
            for side in (cu, cv):
                sh = proc_body(_subprocess(p, side))
                if not surface_on_boundary(sh, b.surface, tol):
                    out.append(f"compound {p.pid}: bond {b.name} between {b.u} and {b.v} is not on the boundary")
                    break
    return out


# ------------------------------------------------------------------ temporal transitions

def proc_delay(p: Process, t: float, ctx: Context = DEFAULT_CTX) -> Process | None:
    """Let ``t`` pass: behaviours idle and shapes move; None if some behaviour refuses."""
    if t < 0:
        raise ValueError("negative delay")
    new = {}
    for n in proc_nodes(p):
        b = delay_behaviour(n.behaviour, t, ctx.env, ctx.tol.eps_t)
        if b is None:
            return None
        new[n.pid] = BasicProcess(translate_over_time(n.shape, t), b, n.pid)
    if isinstance(p, BasicProcess):
        return new[p.pid]
    shift = t * np.asarray(proc_vel(p))
    bs = tuple(Bond(b.u, b.v, b.name, b.surface.translated(shift)) for b in p.bonds)
    return CompoundProcess(tuple(new[n.pid] for n in p.nodes), bs)


def proc_delay_limit(p: Process, ctx: Context = DEFAULT_CTX) -> float:
    return min(delay_limit(n.behaviour, ctx.env) for n in proc_nodes(p))


# ------------------------------------------------------------------ action transitions

@dataclass(frozen=True)
class ProcAction:
    """An action of node ``pid`` on a global channel, and the resulting process."""

    kind: str
    channel: Channel
    pid: int
    result: "Process"


def _node_actions(p: Process, kinds: tuple[str, ...], ctx: Context) -> Iterator[ProcAction]:
    for n in proc_nodes(p):
        for act, b2 in behaviour_actions(n.behaviour, ctx.env):
            if act.kind in kinds:
                ch = global_channel(act.channel, n.shape)
                yield ProcAction(act.kind, ch, n.pid, with_nodes(p, {n.pid: BasicProcess(n.shape, b2, n.pid)}))


def proc_channel_actions(p: Process, ctx: Context = DEFAULT_CTX) -> list[ProcAction]:
    """Binding actions on global channels still exposed on the boundary of the whole body."""
    acts = list(_node_actions(p, (CHAN,), ctx))
    if isinstance(p, CompoundProcess) and acts:
        sh = proc_body(p)
        cache: dict[Surface, bool] = {}
        keep = []
        for a in acts:
            s = a.channel.surface
            if s not in cache:
                cache[s] = surface_on_boundary(sh, s, ctx.tol)
            if cache[s]:
                keep.append(a)
        acts = keep
    return acts


def proc_split_actions(p: Process, ctx: Context = DEFAULT_CTX) -> list[ProcAction]:
    """Weak and strong split actions (not filtered by the boundary)."""
    return list(_node_actions(p, (OMEGA, RHO), ctx))


def has_rho(p: Process, ctx: Context = DEFAULT_CTX) -> bool:
    return any(True for _ in _node_actions(p, (RHO,), ctx))


def sync_split_all(p: Process, kind: str, bond, ctx: Context = DEFAULT_CTX) -> list[Process]:
    """All derivatives of ``p`` synchronising a split of ``kind`` on ``bond``.

    Some process on each side of the bond must offer a split action of that kind on
    complementary names of the bond's base name whose global surfaces meet
    exactly in the bond surface.  The bond stays in the term.
    """
    if kind not in (OMEGA, RHO):
        raise ValueError(f"split kind must be omega or rho, got {kind!r}")
    b = _find_bond(p, bond)
    assert isinstance(p, CompoundProcess)
    cu, cv = _sides(p, b)
    eps = ctx.tol.eps_len
    side_u = [a for a in _node_actions(_subprocess(p, cu), (kind,), ctx) if a.channel.name.base == b.name]
    side_v = [a for a in _node_actions(_subprocess(p, cv), (kind,), ctx) if a.channel.name.base == b.name]
    out: list[Process] = []
    seen = set()
    for au in side_u:
        for av in side_v:
            if av.channel.name != au.channel.name.complement():
                continue
            X = intersect_surfaces(au.channel.surface, av.channel.surface, eps)
            if X.is_empty or not same_points(X, b.surface, 10 * eps):
                continue
            nu = next(n for n in proc_nodes(au.result) if n.pid == au.pid)
            nv = next(n for n in proc_nodes(av.result) if n.pid == av.pid)
            q = with_nodes(p, {au.pid: nu, av.pid: nv})
            if q not in seen:
                seen.add(q)
                out.append(q)
    return out


def sync_split(p: Process, kind: str, bond, ctx: Context = DEFAULT_CTX) -> Process | None:
    res = sync_split_all(p, kind, bond, ctx)
    return res[0] if res else None


def _state_key(p: Process):
    return tuple((n.pid, n.behaviour) for n in proc_nodes(p))


def reaction_path(p: Process, ctx: Context = DEFAULT_CTX) -> list[tuple[Bond, Process]] | None:
    """A sequence of strong-split synchronisations after which no strong split remains.

    Returns ``[]`` when ``p`` has no strong-split action, None when the pending
    requests cannot all be satisfied.  Search is depth first over bonds in
    canonical order, memoised on node behaviours.
    """
    memo: dict = {}

    def go(q: Process):
        key = _state_key(q)
        if key in memo:
            return memo[key]
        memo[key] = None          # in progress: cycles count as failure
        if not has_rho(q, ctx):
            memo[key] = []
            return []
        for b in proc_bonds(q):
            for q2 in sync_split_all(q, RHO, b, ctx):
                rest = go(q2)
                if rest is not None:
                    memo[key] = [(b, q2)] + rest
                    return memo[key]
        return None

    return go(p)


def can_complete_reaction(p: Process, ctx: Context = DEFAULT_CTX) -> bool:
    return reaction_path(p, ctx) is not None


def reaction_channel_sets(p: Process, ctx: Context = DEFAULT_CTX, limit: int = 10000) -> list[frozenset]:
    """Every set of bonds split by some maximal completing sequence (for analysis)."""
    found: set[frozenset] = set()
    count = 0

    def go(q, used, seen):
        nonlocal count
        count += 1
        if count > limit:
            return
        if not has_rho(q, ctx):
            found.add(frozenset(b.label for b in used))
            return
        key = _state_key(q)
        if key in seen:
            return
        for b in proc_bonds(q):
            for q2 in sync_split_all(q, RHO, b, ctx):
                go(q2, used + [b], seen | {key})

    go(p, [], frozenset())
    return sorted(found, key=lambda s: sorted((n, x.key()) for n, x in s))


def proc_timed_step(p: Process, t: float, ctx: Context = DEFAULT_CTX) -> Process | None:
    """Delay gated by maximal progress: a ready reaction stops time."""
    if t > 0 and has_rho(p, ctx) and can_complete_reaction(p, ctx):
        return None
    return proc_delay(p, t, ctx)


# ------------------------------------------------------------------ structure

def decompose(p: Process, bond) -> tuple[Process, Process]:
    """Remove ``bond`` and return the two resulting processes (the ``u`` side first)."""
    b = _find_bond(p, bond)
    assert isinstance(p, CompoundProcess)
    cu, cv = _sides(p, b)
    rest = [x for x in p.bonds if x != b]
    return (
        build([n for n in p.nodes if n.pid in cu], [x for x in rest if x.u in cu]),
        build([n for n in p.nodes if n.pid in cv], [x for x in rest if x.u in cv]),
    )


def remove_bonds(p: Process, labels: Iterable[tuple[str, Surface]] | Iterable[Bond]) -> list[Process]:
    """Drop the given bonds and return the connected pieces, ordered by id."""
    labels = list(labels)
    drop = set()
    for b in proc_bonds(p):
        for l in labels:
            if (isinstance(l, Bond) and l == b) or (not isinstance(l, Bond) and l == b.label):
                drop.add(b)
    rest = [b for b in proc_bonds(p) if b not in drop]
    comps = _components([n.pid for n in proc_nodes(p)], rest)
    out = []
    for comp in comps:
        cs = set(comp)
        out.append(build([n for n in proc_nodes(p) if n.pid in cs], [b for b in rest if b.u in cs]))
    return out


def join(p: Process, q: Process, bond: Bond) -> Process:
    """Bond two processes together (no geometric checks)."""
    return CompoundProcess(proc_nodes(p) + proc_nodes(q), proc_bonds(p) + proc_bonds(q) + (bond,))


def _beh_equal(a: Behaviour, b: Behaviour, env) -> bool:
    if a == b:
        return True
    try:
        return unfold(a, env) == unfold(b, env)
    except BehaviourError:
        return False


def proc_congruent(p: Process, q: Process, ctx: Context = DEFAULT_CTX) -> bool:
    """Isomorphism of bond graphs matching shapes, behaviours, bond names and surfaces."""
    np_, nq = proc_nodes(p), proc_nodes(q)
    if len(np_) != len(nq) or len(proc_bonds(p)) != len(proc_bonds(q)):
        return False
    tol = ctx.tol
    cand = {
        a.pid: [b.pid for b in nq if _beh_equal(a.behaviour, b.behaviour, ctx.env) and shapes_congruent(a.shape, b.shape, tol)]
        for a in np_
    }
    if any(not c for c in cand.values()):
        return False
    eq = {}
    for b in proc_bonds(q):
        eq.setdefault(frozenset((b.u, b.v)), []).append(b)
    order = [n.pid for n in np_]
    pb = proc_bonds(p)

    def bonds_ok(m):
        for b in pb:
            if b.u in m and b.v in m:
                qs = eq.get(frozenset((m[b.u], m[b.v])), [])
                if not any(x.name == b.name and same_points(x.surface, b.surface, 10 * tol.eps_len) for x in qs):
                    return False
        return True

    def go(i, m, used):
        if i == len(order):
            return True
        for c in cand[order[i]]:
            if c in used:
                continue
            m[order[i]] = c
            if bonds_ok(m) and go(i + 1, m, used | {c}):
                return True
            del m[order[i]]
        return False

    return go(0, {}, frozenset())
