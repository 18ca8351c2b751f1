"""Mean per-round relative potential decrease of the cut-matching game in dense mode.

Prints one CSV row per (family, n) and the least-squares slope against 1/log2 n.

    python3 scripts/potential_trend.py --sizes 16,32,64,128 --seeds 3
"""

import argparse
import math

import numpy as np

from conga.cutmatching import CMGParams, run_cmg
from conga.generators import generate
from conga.graph import Partition


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="16,32,64,128")
    p.add_argument("--families", default="two-cliques,path,gnm")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--c-t", type=float, default=4.0)
    p.add_argument("--c-phi", type=float, default=0.5)
    args = p.parse_args()

    sizes = [int(x) for x in args.sizes.split(",")]
    print("family,n,rounds,mean_rel_decrease,inv_log_n")
    xs, ys = [], []
    for fam in args.families.split(","):
        for n in sizes:
            drops = []
            for s in range(args.seeds):
                g = generate(fam, n, seed=s)
                params = CMGParams.from_scale(g.n, g.W, args.c_t, args.c_phi)
                res = run_cmg(g, Partition.singletons(n), range(n), params, seed=s, dense=True)
                drops += [(r.psi_before - r.psi_after) / r.psi_before for r in res.rounds if r.psi_before > 0]
            mean = float(np.mean(drops)) if drops else float("nan")
            print(f"{fam},{n},{len(drops)},{mean:.6g},{1 / math.log2(n):.6g}")
            if drops:
                xs.append(1 / math.log2(n))
                ys.append(mean)
    if len(set(xs)) > 1:
        print(f"# slope vs 1/log2 n: {np.polyfit(xs, ys, 1)[0]:.6g}")


if __name__ == "__main__":
    main()
