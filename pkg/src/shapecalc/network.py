"""Networks of processes and their evolution in movement time steps.

One movement step from clock ``T``:

1. compute the first time of contact ``t_f`` within the step length ``delta``;
2. let ``t' = min(t_f, delta)`` pass, interleaving sub-delays with the split
   operations that must (strong splits) or may (weak splits) happen on the way;
3. if a contact was reached, resolve all collisions (binding compatible pairs,
   bouncing the others) until none is left;
4. apply the steer rules at ``T + t'``.

Everything random is drawn from one seeded generator, so runs are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import trace as tr
from .behaviour import OMEGA, RHO
from .collision import (
    CollisionTuple,
    TunnelingError,
    colliding,
    elastic_response,
    ftoc,
    inelastic_response,
    tunneling_violations,
)
from .geometry import DEFAULT_TOL, Surface, Tolerances, covered_by, interpenetrates, same_points
from .geometry import contact_surface, intersect_patches
from .geometry import intersect as intersect_surfaces
from .process import (
    DEFAULT_CTX,
    BasicProcess,
    Bond,
    CompoundProcess,
    Context,
    Process,
    has_rho,
    join,
    proc_body,
    proc_bonds,
    proc_channel_actions,
    proc_delay_limit,
    proc_mass,
    proc_nodes,
    proc_timed_step,
    proc_update_velocity,
    proc_vel,
    proc_well_formed,
    reaction_path,
    remove_bonds,
    sync_split,
)
from .steer import Keep, SteerSpec, steer_velocity


class NetworkError(RuntimeError):
    """Runtime failure of the evolution engine."""


class StaleCollisionError(NetworkError):
    pass


class KappaError(NetworkError):
    """Collision resolution did not settle within its step bound."""


# ------------------------------------------------------------------ network value

@dataclass(frozen=True)
class Network:
    """Processes (sorted by id) and the global clock, summed with Kahan compensation."""

    processes: tuple[Process, ...] = ()
    clock: float = 0.0
    comp: float = field(default=0.0, compare=False)

    def __post_init__(self):
        procs = tuple(sorted(self.processes, key=lambda p: p.pid))
        object.__setattr__(self, "processes", procs)
        ids = [n.pid for p in procs for n in proc_nodes(p)]
        if len(set(ids)) != len(ids):
            raise NetworkError("duplicate process ids in network")

    def by_id(self, pid: int) -> Process:
        for p in self.processes:
            if p.pid == pid:
                return p
        raise KeyError(pid)

    def replace(self, old: Iterable[Process], new: Iterable[Process]) -> "Network":
        drop = {p.pid for p in old}
        keep = [p for p in self.processes if p.pid not in drop]
        return Network(tuple(keep) + tuple(new), self.clock, self.comp)

    def advanced(self, dt: float) -> "Network":
        y = dt - self.comp
        t = self.clock + y
        return Network(self.processes, t, (t - self.clock) - y)

    def with_processes(self, procs) -> "Network":
        return Network(tuple(procs), self.clock, self.comp)


def bodies(n: Network) -> dict:
    return {p.pid: proc_body(p) for p in n.processes}


def net_well_formed(n: Network, ctx: Context = DEFAULT_CTX) -> list[str]:
    """Every process well-formed and no two processes interpenetrating."""
    out: list[str] = []
    for p in n.processes:
        out.extend(proc_well_formed(p, ctx))
    bs = bodies(n)
    ids = sorted(bs)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            if interpenetrates(bs[a], bs[b], ctx.tol):
                out.append(f"processes {a} and {b} interpenetrate")
    return out


def net_delay(n: Network, t: float, ctx: Context = DEFAULT_CTX) -> Network | None:
    """Every process lets ``t`` pass (under maximal progress); None if any refuses."""
    out = []
    for p in n.processes:
        q = proc_timed_step(p, t, ctx)
        if q is None:
            return None
        out.append(q)
    return Network(tuple(out), n.clock, n.comp).advanced(t) if t else Network(tuple(out), n.clock, n.comp)


# ------------------------------------------------------------------ split operations

def split(p: Process, C) -> list[Process]:
    """Remove every bond of ``p`` whose label is in ``C``; the pieces keep their velocity."""
    return remove_bonds(p, C)


def strong_split_op(p: Process, ctx: Context = DEFAULT_CTX):
    """``(pieces, C)`` after completing a reaction, or None when no reaction is ready."""
    if not has_rho(p, ctx):
        return None
    path = reaction_path(p, ctx)
    if not path:
        return None
    C = [b.label for b, _ in path]
    return split(path[-1][1], C), C


def weak_split_op(p: Process, bond, ctx: Context = DEFAULT_CTX) -> list[Process] | None:
    q = sync_split(p, OMEGA, bond, ctx)
    if q is None:
        return None
    label = bond.label if isinstance(bond, Bond) else tuple(bond)
    return split(q, [label])


def enabled_weak_splits(n: Network, ctx: Context = DEFAULT_CTX) -> list[tuple[Process, Bond]]:
    out = []
    for p in n.processes:
        for b in proc_bonds(p):
            if sync_split(p, OMEGA, b, ctx) is not None:
                out.append((p, b))
    return out


# ------------------------------------------------------------------ collisions

def _label(a: Surface, b: Surface) -> str | None:
    return f"{a.label}&{b.label}" if a.label and b.label else None


def _restrict(contact: Surface, X: Surface, eps: float) -> Surface:
    """The part of the contact set lying in ``X``.

    Tolerant clipping of two boundaries leaves slivers up to ``eps`` off the
    actual contact, so bond surfaces are taken from the contact set itself.
    """
    pieces = []
    for c in contact.patches:
        if covered_by(Surface((c,)), X, 10 * eps):
            pieces.append(c)
        else:
            pieces.extend(r for x in X.patches if (r := intersect_patches(c, x, eps)) is not None)
    return Surface(tuple(pieces)) if pieces else X


def compatible_pairs(p: Process, q: Process, contact: Surface, ctx: Context = DEFAULT_CTX):
    """Channel action pairs of ``p`` and ``q`` that can bind inside ``contact``.

    Returns ``(base name, action of p, action of q, bond surface)`` tuples in
    canonical order (name, then declaration order).
    """
    eps = ctx.tol.eps_len
    out = []
    ap = proc_channel_actions(p, ctx)
    aq = proc_channel_actions(q, ctx)
    for i, a in enumerate(ap):
        for j, b in enumerate(aq):
            if b.channel.name != a.channel.name.complement():
                continue
            X = intersect_surfaces(a.channel.surface, b.channel.surface, eps)
            if X.is_empty or not covered_by(X, contact, 10 * eps):
                continue
            X = _restrict(contact, X, eps)
            X = Surface(X.patches, _label(a.channel.surface, b.channel.surface))
            out.append(((a.channel.name.base, i, j), a, b, X))
    out.sort(key=lambda e: e[0])
    return [(k[0], a, b, X) for k, a, b, X in out]


def resolve_collision(n: Network, c: CollisionTuple, ctx: Context = DEFAULT_CTX,
                      policy: str = "canonical", rng: np.random.Generator | None = None):
    """Resolve one collision: bind a compatible pair, otherwise bounce elastically.

    Returns ``(network, events)``.
    """
    try:
        p, q = n.by_id(c.id_a), n.by_id(c.id_b)
    except KeyError:
        raise StaleCollisionError(f"collision refers to a missing process ({c.id_a}, {c.id_b})") from None
    bp, bq = proc_body(p), proc_body(q)
    X = contact_surface(bp, bq, ctx.tol)
    if X is None or not same_points(X, c.surface, 10 * ctx.tol.eps_len):
        raise StaleCollisionError(f"processes {c.id_a} and {c.id_b} no longer touch on the recorded surface")
    t = n.clock
    cands = compatible_pairs(p, q, c.surface, ctx)
    if cands:
        k = 0
        if policy == "random" and len(cands) > 1:
            k = int((rng or np.random.default_rng(0)).integers(len(cands)))
        name, ap, aq, bX = cands[k]
        v = inelastic_response(bp, bq)
        joined = join(ap.result, aq.result, Bond(ap.pid, aq.pid, name, bX))
        joined = proc_update_velocity(joined, v)
        evs = [tr.collision(t, c.id_a, c.id_b, c.surface, False), tr.bind(t, name, bX, sorted((ap.pid, aq.pid)))]
        return n.replace([p, q], [joined]), evs
    w1, w2 = elastic_response(bp, bq, c.surface, ctx.tol)
    p2, q2 = proc_update_velocity(p, w1), proc_update_velocity(q, w2)
    return n.replace([p, q], [p2, q2]), [tr.collision(t, c.id_a, c.id_b, c.surface, True)]


@dataclass
class KappaReport:
    steps: int = 0
    repeats: list = field(default_factory=list)   # (a, b) pairs seen again after resolution


def kappa(n: Network, ctx: Context = DEFAULT_CTX, policy: str = "canonical",
          rng: np.random.Generator | None = None, report: KappaReport | None = None):
    """Resolve collisions until none is left; returns ``(network, events)``.

    The canonical policy takes the smallest id pair first, the random policy a seeded random one.
    """
    report = report if report is not None else KappaReport()
    events: list = []
    k = len(n.processes)
    bound = max(2, k * (k - 1))
    resolved: set[tuple[int, int]] = set()
    while True:
        col = colliding(bodies(n), ctx.tol)
        if not col:
            return n, events
        for c in col:
            if (c.id_a, c.id_b) in resolved:
                report.repeats.append((c.id_a, c.id_b))
        if report.steps >= bound:
            raise KappaError(f"collision resolution did not settle after {bound} steps; pending {[(c.id_a, c.id_b) for c in col]}")
        c = col[0]
        if policy == "random" and len(col) > 1:
            c = col[int((rng or np.random.default_rng(0)).integers(len(col)))]
        n, evs = resolve_collision(n, c, ctx, policy, rng)
        events.extend(evs)
        resolved.add((c.id_a, c.id_b))
        report.steps += 1


# ------------------------------------------------------------------ steer

def apply_steer(n: Network, spec: SteerSpec, t: float, prev_t: float | None = None, step: int = 0,
                ctx: Context = DEFAULT_CTX):
    """Assign velocities at clock ``t``; compounds get one velocity for the whole body."""
    prev_t = t if prev_t is None else prev_t
    out, events = [], []
    for p in n.processes:
        ids = [x.pid for x in proc_nodes(p)]
        rule = spec.rule_for(ids)
        v = None if isinstance(rule, Keep) else steer_velocity(
            rule, t, proc_vel(p), proc_mass(p), p.pid, prev_t, step, ctx.tol.eps_t)
        if v is not None and v != proc_vel(p):
            p = proc_update_velocity(p, v)
            events.append(tr.steer(t, p.pid, v))
        out.append(p)
    return n.with_processes(out), events


# ------------------------------------------------------------------ evolution

@dataclass(frozen=True)
class EvolutionConfig:
    delta: float = 1.0
    seed: int = 0
    policy: str = "canonical"
    p_omega: float = 0.0
    max_steps: int = 100
    max_time: float = math.inf
    tunneling_guard: bool = True
    omega_script: tuple = ()          # (time, bond name) pairs
    check_well_formed: bool = False   # assert network well-formedness at every sub-step

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError("delta must be a positive finite time")
        if self.policy not in ("canonical", "random"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if not 0.0 <= self.p_omega <= 1.0:
            raise ValueError("p_omega must lie in [0, 1]")
        object.__setattr__(self, "omega_script", tuple(sorted((float(t), str(b)) for t, b in self.omega_script)))


@dataclass
class StepResult:
    network: Network
    events: list
    halted: bool = False
    kappa: KappaReport = field(default_factory=KappaReport)


class Engine:
    """Owns the random generator and scripted-split bookkeeping of one run."""

    def __init__(self, config: EvolutionConfig, steer: SteerSpec | None = None, ctx: Context = DEFAULT_CTX):
        self.config = config
        self.steer = steer or SteerSpec()
        self.ctx = ctx
        self.rng = np.random.default_rng(config.seed)
        self.step_index = 0
        self.script_done: set[int] = set()

    # ---- helpers
    def _check(self, n: Network, where: str):
        if self.config.check_well_formed:
            bad = net_well_formed(n, self.ctx)
            if bad:
                raise NetworkError(f"ill-formed network after {where}: {bad}")

    def _fire_strong(self, n: Network, events: list) -> Network:
        changed = True
        while changed:
            changed = False
            for p in n.processes:
                if not isinstance(p, CompoundProcess):
                    continue
                res = strong_split_op(p, self.ctx)
                if res is None:
                    continue
                pieces, C = res
                n = n.replace([p], pieces)
                products = [([x.pid for x in proc_nodes(q)], [str(x.behaviour) for x in proc_nodes(q)]) for q in pieces]
                events.append(tr.strong_split(n.clock, C, products))
                self._check(n, "strong split")
                changed = True
                break
        return n

    def _fire_weak(self, n: Network, p: Process, b: Bond, events: list) -> Network:
        pieces = weak_split_op(p, b, self.ctx)
        assert pieces is not None
        n = n.replace([p], pieces)
        events.append(tr.weak_split(n.clock, b.name, b.surface, [b.u, b.v]))
        self._check(n, "weak split")
        return n

    def _bernoulli_weak(self, n: Network, events: list) -> Network:
        if self.config.p_omega <= 0.0:
            return n
        for p, b in enabled_weak_splits(n, self.ctx):
            if self.rng.random() < self.config.p_omega:
                try:
                    cur = n.by_id(p.pid)
                except KeyError:
                    continue
                if cur is p:
                    n = self._fire_weak(n, p, b, events)
        return n

    def _scripted_weak(self, n: Network, events: list) -> Network:
        eps_t = self.ctx.tol.eps_t
        for i, (ts, name) in enumerate(self.config.omega_script):
            if i in self.script_done or ts > n.clock + eps_t:
                continue
            for p, b in enabled_weak_splits(n, self.ctx):
                if b.name == name:
                    n = self._fire_weak(n, p, b, events)
                    self.script_done.add(i)
                    break
        return n

    def _next_script(self, clock: float) -> float:
        pend = [ts for i, (ts, _) in enumerate(self.config.omega_script)
                if i not in self.script_done and ts > clock + self.ctx.tol.eps_t]
        return min(pend) - clock if pend else math.inf

    # ---- one movement step
    def step(self, n: Network) -> StepResult:
        cfg, ctx = self.config, self.ctx
        eps_t = ctx.tol.eps_t
        events: list = []
        bs = bodies(n)
        if cfg.tunneling_guard:
            bad = tunneling_violations(bs, cfg.delta)
            if bad:
                i, j, d, lim = bad[0]
                raise TunnelingError(
                    f"processes {i} and {j} move {d:.6g} relative to each other in one step, "
                    f"more than the smaller extent {lim:.6g}; reduce delta")
        t_f = ftoc(bs, cfg.delta, ctx.tol)
        contact = t_f <= cfg.delta
        target = t_f if contact else cfg.delta
        start = n.clock
        remaining = target
        n = self._bernoulli_weak(n, events)
        halted = False
        while True:
            n = self._fire_strong(n, events)
            n = self._scripted_weak(n, events)
            if remaining <= 0.0:
                break
            limit = min((proc_delay_limit(p, ctx) for p in n.processes), default=math.inf)
            if limit <= 0.0:
                opts = enabled_weak_splits(n, ctx)
                if opts:
                    k = int(self.rng.integers(len(opts))) if cfg.policy == "random" and len(opts) > 1 else 0
                    n = self._fire_weak(n, *opts[k], events)
                    continue
                events.append(tr.deadlock(n.clock, "time is blocked and no split operation is enabled"))
                halted = True
                break
            dt = min(limit, remaining, self._next_script(n.clock))
            if remaining - dt <= eps_t:
                dt = remaining
            n2 = net_delay(n, dt, ctx)
            if n2 is None:
                events.append(tr.deadlock(n.clock, "a process refuses to let time pass"))
                halted = True
                break
            n = n2
            remaining = remaining - dt if dt != remaining else 0.0
            events.append(tr.time_step(n.clock, dt))
            self._check(n, "delay")
        rep = KappaReport()
        if halted:
            self.step_index += 1
            return StepResult(n, events, True, rep)
        if contact:
            n, evs = kappa(n, ctx, cfg.policy, self.rng, rep)
            events.extend(evs)
            self._check(n, "collision resolution")
        n, evs = apply_steer(n, self.steer, n.clock, start, self.step_index, ctx)
        events.extend(evs)
        self._check(n, "steer")
        self.step_index += 1
        return StepResult(n, events, False, rep)

    def run(self, n: Network, sink: Callable[[tr.TraceEvent], None] | None = None) -> "RunResult":
        cfg = self.config
        events: list = []
        repeats: list = []
        steps = 0
        halted = False
        while steps < cfg.max_steps and n.clock < cfg.max_time - self.ctx.tol.eps_t:
            res = self.step(n)
            n = res.network
            steps += 1
            repeats.extend(res.kappa.repeats)
            for ev in res.events:
                events.append(ev)
                if sink is not None:
                    sink(ev)
            if res.halted:
                halted = True
                break
        return RunResult(n, events, steps, halted, repeats)


@dataclass
class RunResult:
    network: Network
    events: list
    steps: int
    halted: bool
    kappa_repeats: list

    def histogram(self) -> dict[str, int]:
        h: dict[str, int] = {}
        for e in self.events:
            h[e.kind] = h.get(e.kind, 0) + 1
        return dict(sorted(h.items()))


def evolution_step(n: Network, config: EvolutionConfig, steer: SteerSpec | None = None,
                   ctx: Context = DEFAULT_CTX, step: int = 0) -> StepResult:
    """One movement time step with a fresh engine (``step`` seeds the per-step randomness)."""
    eng = Engine(config, steer, ctx)
    eng.step_index = step
    return eng.step(n)


def run(n: Network, config: EvolutionConfig, steer: SteerSpec | None = None, ctx: Context = DEFAULT_CTX,
        sink: Callable[[tr.TraceEvent], None] | None = None) -> RunResult:
    return Engine(config, steer, ctx).run(n, sink)
