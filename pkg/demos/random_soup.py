"""A box of Brownian cubes that bind and split at random.

Builds a random network with the test generator, evolves it, and prints an
event histogram plus the size distribution of the complexes at the end.

    python3 demos/random_soup.py [seed] [steps]
"""
import sys
from collections import Counter
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from tests.gen import random_network  # noqa: E402

from shapecalc.network import Engine, EvolutionConfig, net_well_formed  # noqa: E402
from shapecalc.process import proc_nodes  # noqa: E402


def main(seed=0, steps=200):
    rng = np.random.default_rng(seed)
    n, steer, ctx = random_network(rng, 12, 16)
    eng = Engine(EvolutionConfig(delta=0.1, seed=seed, p_omega=0.02, max_steps=steps), steer, ctx)
    res = eng.run(n)
    print(f"seed {seed}: {res.steps} steps to t={res.network.clock:.2f}")
    for k, v in res.histogram().items():
        print(f"  {k:<12}{v}")
    sizes = Counter(len(proc_nodes(p)) for p in res.network.processes)
    print("  complexes by size:", dict(sorted(sizes.items())))
    print("  well formed:", not net_well_formed(res.network, ctx))


if __name__ == "__main__":
    a = [int(x) for x in sys.argv[1:3]]
    main(*a)
