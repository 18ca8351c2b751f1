"""Command line: gen, build, verify, bench.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .approximator import (
    ParseError,
    assemble,
    check_structure,
    estimate_congestion,
    is_laminar,
    read_approximator,
    restrict_to,
    write_approximator,
)
from .config import SUITES, RunConfig
from .faircut import build_auxiliary, fair_cut, validate_fair_pair
from .generators import FAMILIES, generate
from .graph import InputError, InternalError, Partition, net_outflow, read_graph, write_graph_text
from .hierarchy_io import (
    read_certificates_text,
    read_hierarchy_text,
    write_certificates_text,
    write_hierarchy_text,
)
from .partitioner import build_hierarchy
from .verifier import (
    approximator_matches,
    check_certificate,
    check_mixing_sampled,
    check_property3,
    empirical_quality,
    mixed_sampler,
    structure_ok,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
log = logging.getLogger("conga")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads per recursion depth (default 1)")
    p.add_argument("--c-t", type=float, default=1.0, help="round count constant: T = ceil(c_t log^2(nW)) (default 1)")
    p.add_argument("--c-phi", type=float, default=1.0, help="phi = 1/(c_phi log^3(nW)), capped at 1/24 (default 1)")
    p.add_argument("--c-kappa", type=float, default=1.0, help="kappa = c_kappa log^3(nW) (default 1)")
    p.add_argument("--dense-cap", type=int, default=512, help="largest cluster tracked in dense mode (default 512)")
    p.add_argument("--samples", type=int, default=100, help="sampled demands per suite (default 100)")
    p.add_argument("--tol", type=float, default=1e-6, help="relative tolerance of the congestion search (default 1e-6)")


def _config(args, **extra) -> RunConfig:
    return RunConfig(
        seed=args.seed, c_t=args.c_t, c_phi=args.c_phi, c_kappa=args.c_kappa, dense_cap=args.dense_cap,
        threads=args.threads, samples=args.samples, tol=args.tol, **extra,
    )


def _summary(**kv) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        if isinstance(v, (list, tuple)):
            return ",".join(fmt(x) for x in v)
        return str(v)

    return " ".join(f"{k}={fmt(v)}" for k, v in kv.items())


def cmd_gen(args) -> int:
    g = generate(args.family, args.n, seed=args.seed, W=args.W, m=args.m, bridge_cap=args.bridge_cap)
    text = write_graph_text(g)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_build(args) -> int:
    cfg = _config(args, graph_path=args.graph, output_prefix=args.output)
    g = read_graph(cfg.graph_path)
    prefix = cfg.output_prefix or str(Path(cfg.graph_path).with_suffix(""))
    t0 = time.perf_counter()
    h = build_hierarchy(g, cfg.build_params())
    approx = assemble(h)
    elapsed = time.perf_counter() - t0
    Path(prefix + ".hier").write_text(write_hierarchy_text(h.levels))
    Path(prefix + ".certs").write_text(write_certificates_text(h))
    write_approximator(approx, prefix + ".apx")
    if h.components > 1:
        print(f"note: {h.components} connected components built separately; top level is the component partition")
    print(_summary(
        n=g.n, m=g.m, L=h.L, boundaries=h.boundaries(), K=approx.K, nodes=approx.num_nodes,
        T=h.params.T, phi=h.params.phi, alpha=h.alpha, beta=h.beta, quality_bound=approx.quality_bound,
        components=h.components, seconds=elapsed,
    ))
    return EXIT_OK


def _suite_quality(g, approx, cfg, ctx):
    rep = empirical_quality(g, approx, mixed_sampler, cfg.samples, rng=cfg.seed)
    ctx["csv"] = rep.to_csv()
    return rep.passed, f"max_ratio={rep.max_ratio:.6g} min_ratio={rep.min_ratio:.6g} bound={rep.bound:.6g}"


def _suite_property3(g, approx, cfg, ctx):
    levels, certs = ctx.get("levels"), ctx.get("certs")
    if levels is None:
        return None, "needs --hierarchy"
    ok = True
    for i in range(len(levels) - 1):
        if certs is not None:
            if i >= len(certs.flows) or certs.flows[i].shape != (g.m,):
                return False, f"certificate for level {i + 1} missing"
            beta = certs.betas[i]
            ok &= check_certificate(g, levels[i], levels[i + 1], certs.flows[i], beta)
        else:
            beta = approx.beta
        ok &= check_property3(g, levels[i], levels[i + 1], beta)
    return ok, f"levels={len(levels)}"


def _suite_mixing(g, approx, cfg, ctx):
    levels = ctx.get("levels")
    if levels is None:
        return None, "needs --hierarchy"
    rng = np.random.default_rng(cfg.seed)
    ok = all(
        check_mixing_sampled(g, levels[i], levels[i + 1], approx.alpha, cfg.samples, rng)
        for i in range(len(levels) - 1)
    )
    return ok, f"alpha={approx.alpha:.6g}"


def _suite_fairness(g, approx, cfg, ctx):
    rng = np.random.default_rng(cfg.seed)
    sizes = approx.end - approx.start
    cand = np.flatnonzero(sizes >= 2)
    if cand.size == 0 or g.m == 0:
        return True, "no clusters with two or more vertices"
    trials = min(cfg.samples, 50)
    P = Partition.singletons(g.n)
    for _ in range(trials):
        A = approx.members(int(rng.choice(cand)))
        s_w = np.zeros(g.n)
        t_w = np.zeros(g.n)
        s_w[A] = rng.uniform(0, 2, A.size) * (rng.random(A.size) < 0.5)
        t_w[A] = rng.uniform(0, 2, A.size) * (rng.random(A.size) < 0.5)
        inst = build_auxiliary(g, P, A, float(rng.uniform(0.01, 1.0)), s_w, t_w)
        pair = fair_cut(inst, 0.1)
        if not validate_fair_pair(inst, pair, 0.1):
            return False, "fair pair failed validation"
        value = float(net_outflow(inst.h, pair.f)[inst.s_id])
        if abs(pair.cut_value(inst.h) - value) > inst.h.tau:
            return False, "cut value differs from flow value"
        if not is_laminar(restrict_to(approx, A)):
            return False, "restricted family is not laminar"
    return True, f"trials={trials}"


def _suite_laminarity(g, approx, cfg, ctx):
    ok = check_structure(approx) and (g.n > 64 or is_laminar(approx.sets()))
    levels = ctx.get("levels")
    if levels is not None:
        ok = ok and structure_ok(g, levels) and approximator_matches(g, levels, approx)
    est, visits = estimate_congestion(approx, np.zeros(g.n), return_visits=True)
    ok = ok and visits == approx.n + approx.num_nodes
    return ok, f"nodes={approx.num_nodes} K={approx.K}"


SUITE_FUNCS = {
    "quality": _suite_quality,
    "property3": _suite_property3,
    "mixing-sampled": _suite_mixing,
    "fairness-audit": _suite_fairness,
    "laminarity": _suite_laminarity,
}


def cmd_verify(args) -> int:
    suites = tuple(args.suite) if args.suite else SUITES
    cfg = _config(args, suites=suites, graph_path=args.graph)
    g = read_graph(cfg.graph_path)
    approx = read_approximator(args.approx)
    if approx.n != g.n or approx.checksum != g.checksum():
        raise InputError("approximator does not belong to this graph (vertex count or checksum differs)")
    ctx = {}
    if args.hierarchy:
        levels = read_hierarchy_text(Path(args.hierarchy).read_text())
        if any(P.n != g.n for P in levels):
            raise InputError("hierarchy vertex count differs from the graph")
        ctx["levels"] = levels
    if args.certs:
        certs = read_certificates_text(Path(args.certs).read_text())
        if certs.n != g.n or certs.m != g.m:
            raise InputError("certificate file does not match the graph")
        ctx["certs"] = certs
    failed = []
    for name in cfg.suites:
        ok, detail = SUITE_FUNCS[name](g, approx, cfg, ctx)
        status = "skip" if ok is None else ("pass" if ok else "fail")
        print(f"suite={name} result={status} {detail}")
        if ok is False:
            failed.append(name)
    if "csv" in ctx:
        if args.csv:
            Path(args.csv).write_text(ctx["csv"])
        else:
            sys.stdout.write(ctx["csv"])
    if failed:
        print(f"failed suites: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    sizes = [int(x) for x in args.sizes.split(",") if x]
    if not sizes or min(sizes) < 1:
        raise InputError("sizes must be positive integers")
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["family", "n", "m", "L", "K", "build_s", "query_s", "max_ratio", "status"])
    spent = 0.0
    try:
        for i, n in enumerate(sizes):
            if spent > args.budget:
                w.writerow([args.family, n, "", "", "", "", "", "", "skipped"])
                continue
            g = generate(args.family, n, seed=cfg.seed + i, W=args.W)
            t0 = time.perf_counter()
            h = build_hierarchy(g, cfg.build_params())
            approx = assemble(h)
            tb = time.perf_counter() - t0
            rep = empirical_quality(g, approx, mixed_sampler, cfg.samples, rng=cfg.seed + i)
            t1 = time.perf_counter()
            rng = np.random.default_rng(cfg.seed)
            for _ in range(cfg.samples):
                estimate_congestion(approx, mixed_sampler(g, approx, rng))
            tq = (time.perf_counter() - t1) / cfg.samples
            spent += time.perf_counter() - t0
            w.writerow([args.family, n, g.m, h.L, approx.K, f"{tb:.4f}", f"{tq:.6f}", f"{rep.max_ratio:.6g}", "ok"])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="conga", description="Congestion approximators from expander hierarchies.")
    p.add_argument("--version", action="version", version=f"conga {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a graph")
    g.add_argument("family", choices=sorted(FAMILIES))
    g.add_argument("n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--W", type=int, default=1, help="capacities drawn from 1..W (default 1)")
    g.add_argument("--m", type=int, default=None, help="edge count for gnm (default 2n)")
    g.add_argument("--bridge-cap", type=float, default=1.0, help="bridge capacity for two-cliques")
    g.add_argument("-o", "--output", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build hierarchy, certificates and approximator")
    b.add_argument("graph")
    b.add_argument("-o", "--output", help="output prefix for .hier/.certs/.apx (default: graph path stem)")
    _common(b)
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("graph")
    v.add_argument("approx")
    v.add_argument("--hierarchy", help="hierarchy text file (enables property3, mixing-sampled)")
    v.add_argument("--certs", help="certificate file (checked by property3)")
    v.add_argument("--suite", action="append", choices=SUITES, help="suite to run; repeatable (default all)")
    v.add_argument("--csv", help="write the quality CSV here instead of stdout")
    _common(v)
    v.set_defaults(func=cmd_verify)

    be = sub.add_parser("bench", help="build and query a size sweep, CSV to stdout")
    be.add_argument("--family", choices=sorted(FAMILIES), default="gnm")
    be.add_argument("--sizes", default="16,32,64")
    be.add_argument("--W", type=int, default=1)
    be.add_argument("--budget", type=float, default=600.0, help="seconds after which remaining rows are skipped")
    be.add_argument("-o", "--output", help="CSV file (default stdout)")
    _common(be)
    be.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    level = os.environ.get("CONGA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
