"""Build hierarchies over a size sweep and compare against the singletons-plus-V control.

    python3 scripts/quality_sweep.py --family path --sizes 128,256,512 --W 16
"""

import argparse
import time

import numpy as np

from conga.approximator import assemble, trivial_approximator
from conga.generators import generate
from conga.partitioner import BuildParams, build_hierarchy
from conga.verifier import empirical_quality, mixed_sampler


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--family", default="path")
    p.add_argument("--sizes", default="64,128,256")
    p.add_argument("--W", type=int, default=1)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c-t", type=float, default=4.0)
    p.add_argument("--c-phi", type=float, default=0.5)
    args = p.parse_args()

    bp = BuildParams(seed=args.seed, c_t=args.c_t, c_phi=args.c_phi)
    print("family,n,W,L,K,build_s,max_ratio,control_max_ratio,bound")
    for n in (int(x) for x in args.sizes.split(",")):
        g = generate(args.family, n, seed=args.seed, W=args.W)
        t0 = time.perf_counter()
        h = build_hierarchy(g, bp)
        a = assemble(h)
        tb = time.perf_counter() - t0
        rng = np.random.default_rng(args.seed)
        demands = [mixed_sampler(g, a, rng) for _ in range(args.samples)]
        full = empirical_quality(g, a, demands=demands)
        ctrl = empirical_quality(g, trivial_approximator(g), demands=demands)
        print(f"{args.family},{n},{args.W},{h.L},{a.K},{tb:.3f},{full.max_ratio:.6g},{ctrl.max_ratio:.6g},"
              f"{a.quality_bound:.6g}", flush=True)


if __name__ == "__main__":
    main()
