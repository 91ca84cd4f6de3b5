"""Walk through the hexokinase example step by step.

Runs the bundled glycolysis model one movement step at a time, printing the
events of each step and the processes left afterwards, then does the same for
the variant whose glucose timer is off and ends in a deadlock.

    python3 demos/glycolysis_walkthrough.py
"""
from importlib import resources

from shapecalc.dsl import build_network, format_behaviour, parse_model
from shapecalc.network import Engine
from shapecalc.process import proc_nodes


def show(fname):
    text = resources.files("shapecalc").joinpath("data", fname).read_text()
    built = build_network(parse_model(text))
    eng = Engine(built.config, built.steer, built.ctx)
    n = built.network
    print(f"== {fname}")
    for k in range(built.config.max_steps):
        r = eng.step(n)
        n = r.network
        print(f"-- step {k + 1}, clock {n.clock:g}")
        for e in r.events:
            extra = e.payload.get("name") or e.payload.get("reason") or ""
            print(f"   {e.time:6.3f}  {e.kind:<11} {extra}")
        for p in n.processes:
            members = ", ".join(f"{built.names[q.pid]}[{format_behaviour(q.behaviour)}]" for q in proc_nodes(p))
            print(f"   process {p.pid}: {members}")
        if r.halted:
            print("   (halted)")
            break
    print()


if __name__ == "__main__":
    show("glycolysis.shc")
    show("glycolysis_deadlock.shc")
