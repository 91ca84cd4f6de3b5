"""``shapecalc`` command line: check, run, lts and state.

Exit codes: 0 success, 1 validation failure, 2 parse failure, 3 runtime error.
Default tolerances can be overridden with SHAPECALC_EPS_LEN, SHAPECALC_EPS_T
and SHAPECALC_MAX_BISECT.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from collections import deque

from . import __version__
from . import trace as tr
from .behaviour import BehaviourError, Const, behaviour_actions, delay_behaviour, delay_limit
from .collision import InterpenetrationError, TunnelingError
from .dsl import ParseError, build_network, format_behaviour, parse_model, validate_model
from .geometry import GeometryError, Tolerances
from .network import Engine, NetworkError
from .process import proc_bonds, proc_nodes

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_RUNTIME = 0, 1, 2, 3


def _overrides(a) -> dict:
    return {
        "delta": a.delta, "seed": a.seed, "max_steps": a.max_steps, "max_time": a.max_time,
        "policy": a.policy, "p_omega": a.p_omega,
    }


def _load(path: str):
    with open(path, "rb") as fh:
        return parse_model(fh.read())


def _fmt(b) -> str:
    try:
        return format_behaviour(b)
    except ValueError:
        return str(b)


def _err(msg: str):
    print(msg, file=sys.stderr)


def cmd_check(a, tol) -> int:
    m = _load(a.model)
    problems = validate_model(m, tol, **_overrides(a))
    if problems:
        for p in problems:
            _err(f"{a.model}: {p}")
        return EXIT_INVALID
    if a.verbose:
        print(f"{a.model}: ok ({len(m.processes)} processes, {len(m.behaviours)} behaviours)")
    return EXIT_OK


def cmd_run(a, tol) -> int:
    m = _load(a.model)
    problems = validate_model(m, tol, **_overrides(a))
    if problems:
        for p in problems:
            _err(f"{a.model}: {p}")
        return EXIT_INVALID
    built = build_network(m, tol, **_overrides(a))
    cfg = built.config
    header = {
        "model": a.model, "version": __version__, "delta": cfg.delta, "seed": cfg.seed,
        "policy": cfg.policy, "p_omega": cfg.p_omega, "processes": {str(k): v for k, v in built.names.items()},
    }
    out = open(a.out, "w", encoding="utf-8", newline="\n") if a.out else sys.stdout
    try:
        writer = tr.TraceWriter(out, header)
        res = Engine(cfg, built.steer, built.ctx).run(built.network, writer)
    finally:
        if a.out:
            out.close()
        else:
            out.flush()
    summary = {"steps": res.steps, "time": res.network.clock, "halted": res.halted, "events": res.histogram()}
    stream = sys.stdout if a.out else sys.stderr
    print(json.dumps(summary, sort_keys=True), file=stream)
    return EXIT_OK


def cmd_lts(a, tol) -> int:
    m = _load(a.model)
    env = dict(m.behaviours)
    if a.behaviour not in env:
        _err(f"{a.model}: no behaviour named {a.behaviour!r}")
        return EXIT_INVALID
    problems = [p for p in validate_model(m, tol) if "behaviour" in p]
    if problems:
        for p in problems:
            _err(f"{a.model}: {p}")
        return EXIT_INVALID
    start = Const(a.behaviour)
    seen = {start: 0}
    queue = deque([start])
    while queue:
        b = queue.popleft()
        d = seen[b]
        lim = delay_limit(b, env)
        print(f"[{d}] {_fmt(b)}    delay_limit={'inf' if math.isinf(lim) else repr(lim)}")
        succ = [(str(act), nb) for act, nb in behaviour_actions(b, env)]
        if 0 < lim < math.inf:
            succ.append((f"delay({lim!r})", delay_behaviour(b, lim, env)))
        for label, nb in succ:
            print(f"      --{label}--> {_fmt(nb)}")
            if nb not in seen and d + 1 <= a.depth:
                seen[nb] = d + 1
                queue.append(nb)
    return EXIT_OK


def _state_json(n, names) -> dict:
    procs = []
    for p in n.processes:
        nodes = proc_nodes(p)
        procs.append({
            "id": nodes[0].pid,
            "members": [{
                "id": q.pid, "name": names.get(q.pid, str(q.pid)), "ref": list(q.shape.ref),
                "velocity": list(q.shape.velocity), "behaviour": _fmt(q.behaviour),
            } for q in nodes],
            "bonds": [{"ids": [b.u, b.v], "name": b.name, "surface": tr.surface_json(b.surface)} for b in proc_bonds(p)],
        })
    return {"clock": n.clock, "processes": procs}


def cmd_state(a, tol) -> int:
    m = _load(a.model)
    problems = validate_model(m, tol, **_overrides(a))
    if problems:
        for p in problems:
            _err(f"{a.model}: {p}")
        return EXIT_INVALID
    built = build_network(m, tol, **_overrides(a))
    eng = Engine(built.config, built.steer, built.ctx)
    n = built.network
    states = [_state_json(n, built.names)]
    for _ in range(a.steps):
        r = eng.step(n)
        n = r.network
        states.append(_state_json(n, built.names))
        if r.halted:
            break
    print(json.dumps(states if a.all else states[-1], indent=2, sort_keys=True))
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shapecalc", description="Simulate networks of colliding, binding 3D shapes.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sim=True):
        p.add_argument("model", help="path to a .shc model")
        p.add_argument("-v", "--verbose", action="store_true")
        if sim:
            p.add_argument("--delta", type=float, help="time step (overrides the model)")
            p.add_argument("--seed", type=int)
            p.add_argument("--max-steps", type=int)
            p.add_argument("--max-time", type=float)
            p.add_argument("--policy", choices=("canonical", "random"))
            p.add_argument("--p-omega", type=float, help="per-bond weak split probability per step")

    common(sub.add_parser("check", help="validate a model"))
    p = sub.add_parser("run", help="run a simulation and write a trace")
    common(p)
    p.add_argument("--out", help="trace file (default: standard output)")
    p = sub.add_parser("lts", help="list the transitions of a behaviour")
    common(p, sim=False)
    p.add_argument("behaviour", help="behaviour constant name")
    p.add_argument("--depth", type=int, default=3)
    p = sub.add_parser("state", help="dump the network state as JSON")
    common(p)
    p.add_argument("--steps", type=int, default=0, help="evolve this many steps first")
    p.add_argument("--all", action="store_true", help="dump every intermediate state")
    return ap


def main(argv=None) -> int:
    a = _parser().parse_args(argv)
    try:
        tol = Tolerances.from_env()
    except ValueError as exc:
        _err(f"bad tolerance override: {exc}")
        return EXIT_RUNTIME
    cmd = {"check": cmd_check, "run": cmd_run, "lts": cmd_lts, "state": cmd_state}[a.command]
    try:
        return cmd(a, tol)
    except ParseError as exc:
        _err(f"{a.model}: {exc}")
        return EXIT_PARSE
    except OSError as exc:
        _err(f"{a.model}: {exc}")
        return EXIT_RUNTIME
    except (TunnelingError, InterpenetrationError, NetworkError, GeometryError, BehaviourError) as exc:
        _err(f"runtime error: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
