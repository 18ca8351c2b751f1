"""Independent oracles and samplers for checking a built approximator.

Two optimal-congestion oracles are kept deliberately separate: one
enumerates every cut, the other searches on the congestion with an exact
max-flow feasibility test.  They share no code beyond the graph container.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .approximator import LaminarApproximator, assemble_levels, estimate_congestion
from .faircut import max_flow_arrays
from .graph import Graph, InputError, Partition, net_outflow, partition_boundary_mask

REL_TOL = 1e-6


def _check_demand(g: Graph, b) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (g.n,):
        raise InputError("demand has the wrong length")
    if abs(b.sum()) > 1e-9 * (1.0 + np.abs(b).sum()):
        raise InputError("demand does not sum to zero")
    return b


def opt_congestion_bruteforce(g: Graph, b) -> float:
    """max over proper cuts S of |b(S)| / cap(S, V-S); +inf if a zero cut carries demand."""
    if g.n > 16:
        raise InputError("brute force is limited to 16 vertices")
    b = _check_demand(g, b)
    if g.n < 2:
        return 0.0
    k = g.n - 1
    # vertex n-1 always lies outside S, which lists each cut once
    masks = np.arange(1, 2**k, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(k)) & 1).astype(bool)
    bits = np.hstack([bits, np.zeros((len(masks), 1), dtype=bool)])
    bS = bits @ b
    cross = bits[:, g.u] != bits[:, g.v]
    dS = cross.astype(np.float64) @ g.cap
    tol = 1e-9 * (1.0 + np.abs(b).sum())
    if np.any((dS == 0) & (np.abs(bS) > tol)):
        return float("inf")
    pos = dS > 0
    return float(np.max(np.abs(bS[pos]) / dS[pos], initial=0.0))


def _feasible(g: Graph, b: np.ndarray, lam: float):
    """Can b be routed with congestion lam?  Returns (ok, source side of a min cut)."""
    n = g.n
    s, t = n, n + 1
    vs = np.arange(n)
    src, snk = b < 0, b > 0
    tails = np.concatenate([g.u, np.full(src.sum(), s), vs[snk]])
    heads = np.concatenate([g.v, vs[src], np.full(snk.sum(), t)])
    total = float(b[snk].sum())
    # no edge ever needs more than the total demand; keeps eps tied to the demand scale
    caps = np.concatenate([np.minimum(lam * g.cap, total), -b[src], b[snk]])
    eps = 1e-14 * (1.0 + caps.sum())
    _, value, side = max_flow_arrays(n + 2, tails, heads, caps, s, t, eps)
    return value >= total * (1.0 - 1e-12) - eps, side[:n]


def opt_congestion_maxflow(g: Graph, b, tol: float = REL_TOL, max_iter: int = 60) -> float:
    """Smallest congestion routing b, to relative accuracy tol.

    The search keeps a certified lower bound lo (always the ratio of some
    cut) and a feasible upper bound hi.  An infeasible probe yields a
    min cut whose ratio strictly exceeds the probe, which becomes the new
    lower bound; a feasible probe just above lo ends the search.
    """
    b = _check_demand(g, b)
    if not np.any(b):
        return 0.0
    comp = g.components()
    bal = np.bincount(comp, b)
    if np.any(np.abs(bal) > 1e-9 * (1.0 + np.abs(b).sum())):
        return float("inf")
    deg = g.degree()
    if np.any((deg == 0) & (b != 0)):
        return float("inf")
    nz = deg > 0
    lo = float(np.max(np.abs(b[nz]) / deg[nz]))
    hi = float(b[b > 0].sum() / g.cap.min())
    for _ in range(max_iter):
        if hi - lo <= tol * hi:
            break
        probe = min(lo * (1.0 + tol / 2.0), 0.5 * (lo + hi)) if lo > 0 else 0.5 * hi
        ok, X = _feasible(g, b, probe)
        if ok:
            hi = probe
            continue
        cross = X[g.u] != X[g.v]
        dX = float(g.cap[cross].sum())
        ratio = abs(float(b[X].sum())) / dX if dX > 0 else float("inf")
        # the cut must beat the probe; fall back to bisection on round-off
        lo = max(ratio, probe) if ratio > probe else probe
    return lo if hi - lo <= tol * hi else hi


# demand samplers: each maps (g, approx, rng) to a zero-sum demand


def pair_demand(g: Graph, approx, rng: np.random.Generator) -> np.ndarray:
    deg = g.degree()
    b = np.zeros(g.n)
    for _ in range(int(rng.integers(1, 5))):
        x, y = rng.choice(g.n, 2, replace=False)
        a = rng.uniform(0.1, 1.0) * min(deg[x], deg[y])
        b[x] -= a
        b[y] += a
    return b


def cluster_demand(g: Graph, approx: LaminarApproximator, rng: np.random.Generator) -> np.ndarray:
    """Saturate the boundary of a random stored cluster, spread over random endpoints."""
    proper = np.flatnonzero((approx.end - approx.start) < g.n)
    if proper.size == 0:
        return pair_demand(g, approx, rng)
    C = np.zeros(g.n, dtype=bool)
    C[approx.members(int(rng.choice(proper)))] = True
    cross = C[g.u] != C[g.v]
    w_in = np.bincount(np.where(C[g.u], g.u, g.v)[cross], g.cap[cross], g.n)
    w_out = np.bincount(np.where(C[g.u], g.v, g.u)[cross], g.cap[cross], g.n)
    # random redistribution keeps the cluster total equal to its boundary
    a = w_in * rng.uniform(0.5, 1.5, g.n)
    c = w_out * rng.uniform(0.5, 1.5, g.n)
    total = w_in.sum()
    if total == 0:
        return pair_demand(g, approx, rng)
    return a / a.sum() * total - c / c.sum() * total


def _ball(g: Graph, root: int, radius: int) -> np.ndarray:
    adj = [[] for _ in range(g.n)]
    for a, c in zip(g.u.tolist(), g.v.tolist()):
        adj[a].append(c)
        adj[c].append(a)
    dist = np.full(g.n, -1)
    dist[root] = 0
    q = deque([root])
    while q:
        x = q.popleft()
        if dist[x] == radius:
            continue
        for y in adj[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist >= 0


def bridge_demand(g: Graph, approx, rng: np.random.Generator) -> np.ndarray:
    """Push the capacity of a BFS-ball cut from the ball, spread by degree, to the rest."""
    deg = g.degree()
    for _ in range(8):
        S = _ball(g, int(rng.integers(g.n)), int(rng.integers(1, max(2, g.n // 2))))
        dS = float(g.cap[S[g.u] != S[g.v]].sum())
        if 0 < S.sum() < g.n and dS > 0 and deg[S].sum() > 0 and deg[~S].sum() > 0:
            return dS * (np.where(S, deg, 0) / deg[S].sum() - np.where(~S, deg, 0) / deg[~S].sum())
    return pair_demand(g, approx, rng)


SAMPLERS = {"pairs": pair_demand, "clusters": cluster_demand, "bridges": bridge_demand}


def mixed_sampler(g, approx, rng):
    name = ("pairs", "clusters", "bridges")[int(rng.integers(3))]
    return SAMPLERS[name](g, approx, rng)


@dataclass
class QualityRecord:
    id: int
    estimate: float
    opt: float
    ratio: float


@dataclass
class QualityReport:
    records: list[QualityRecord] = field(default_factory=list)
    bound: float = float("inf")

    @property
    def max_ratio(self) -> float:
        return max((r.ratio for r in self.records), default=1.0)

    @property
    def min_ratio(self) -> float:
        return min((r.ratio for r in self.records), default=1.0)

    @property
    def passed(self) -> bool:
        return self.min_ratio >= 1.0 - REL_TOL and self.max_ratio <= self.bound

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "estimate", "opt", "ratio"])
        for r in self.records:
            w.writerow([r.id, repr(r.estimate), repr(r.opt), repr(r.ratio)])
        return buf.getvalue()


def _ratio(opt: float, est: float) -> float:
    if est == 0:
        return 1.0 if opt == 0 else float("inf")
    if np.isinf(est) and np.isinf(opt):
        return 1.0
    return opt / est


def empirical_quality(g: Graph, approx: LaminarApproximator, sampler=mixed_sampler, count: int = 100, rng=None,
                      demands=None) -> QualityReport:
    """opt/estimate over sampled (or given) demands; passes iff every ratio lies in [1, bound]."""
    if count < 1:
        raise InputError("count must be at least 1")
    rng = np.random.default_rng(rng)
    if demands is None:
        demands = [sampler(g, approx, rng) for _ in range(count)]
    rep = QualityReport(bound=approx.quality_bound)
    for i, b in enumerate(demands):
        est = estimate_congestion(approx, b)
        opt = opt_congestion_maxflow(g, b)
        rep.records.append(QualityRecord(i, est, opt, _ratio(opt, est)))
    return rep


def check_property3(g: Graph, P_i: Partition, P_next: Partition, beta: float) -> bool:
    """Exact feasibility: each v sends deg over boundary(P_next), receives at most half deg over boundary(P_i)."""
    send = g.degree(partition_boundary_mask(g, P_next))
    recv = g.degree(partition_boundary_mask(g, P_i)) / 2.0
    total = float(send.sum())
    if total == 0:
        return True
    n = g.n
    s, t = n, n + 1
    vs = np.arange(n)
    a, c = send > 0, recv > 0
    tails = np.concatenate([g.u, np.full(a.sum(), s), vs[c]])
    heads = np.concatenate([g.v, vs[a], np.full(c.sum(), t)])
    caps = np.concatenate([np.minimum(beta * g.cap, total), send[a], recv[c]])
    eps = 1e-14 * (1.0 + caps.sum())
    _, value, _ = max_flow_arrays(n + 2, tails, heads, caps, s, t, eps)
    return value >= total - g.tau


def check_certificate(g: Graph, P_i: Partition, P_next: Partition, flow, beta: float) -> bool:
    """A stored level flow: congestion at most beta, exact sends, bounded receipts."""
    flow = np.asarray(flow, dtype=np.float64)
    if flow.shape != (g.m,):
        return False
    tau = g.tau
    send = g.degree(partition_boundary_mask(g, P_next))
    recv = g.degree(partition_boundary_mask(g, P_i)) / 2.0
    if np.any(np.abs(flow) > beta * g.cap + tau):
        return False
    received = send - net_outflow(g, flow)
    return bool(np.all(received >= -tau) and np.all(received <= recv + tau))


def mixing_demand(g: Graph, P_i: Partition, P_next: Partition, rng: np.random.Generator) -> np.ndarray:
    """Sum over clusters C of P_next of a zero-sum b_C with |b_C| <= deg over boundary(P_i) u boundary(C)."""
    w = g.degree(partition_boundary_mask(g, P_i) | partition_boundary_mask(g, P_next))
    lab = P_next.labels
    k = P_next.size
    b = np.zeros(g.n)
    x = rng.uniform(-1.0, 1.0, g.n) * w
    tot_x = np.bincount(lab, x, k)
    tot_w = np.bincount(lab, w, k)
    ok = tot_w[lab] > 0
    b[ok] = x[ok] - w[ok] * tot_x[lab][ok] / tot_w[lab][ok]
    # rescale per cluster so every |b(v)| stays within w(v)
    over = np.zeros(k)
    r = np.divide(np.abs(b), w, out=np.zeros(g.n), where=w > 0)
    np.maximum.at(over, lab, r)
    scale = np.divide(rng.uniform(0.5, 1.0, k), over, out=np.zeros(k), where=over > 0)
    return b * scale[lab]


def check_mixing_sampled(g: Graph, P_i: Partition, P_next: Partition, alpha: float, samples: int, rng=None) -> bool:
    """Necessary-condition test: sampled cluster demands route at congestion alpha."""
    if samples < 1:
        raise InputError("samples must be at least 1")
    rng = np.random.default_rng(rng)
    for _ in range(samples):
        b = mixing_demand(g, P_i, P_next, rng)
        if not np.any(np.abs(b) > g.tau):
            continue
        ok, _ = _feasible(g, b, alpha)
        if not ok:
            return False
    return True


def corrupt_hierarchy(levels, g: Graph, rng=None) -> tuple[list[Partition], int]:
    """Merge a random cluster with an adjacent one at a random level below the top."""
    rng = np.random.default_rng(rng)
    levels = list(levels)
    candidates = []
    for i in range(len(levels) - 1):
        if np.any(partition_boundary_mask(g, levels[i])):
            candidates.append(i)
    if not candidates:
        raise InputError("hierarchy has no boundary edge to corrupt")
    i = int(rng.choice(candidates))
    lab = levels[i].labels.copy()
    e = int(rng.choice(np.flatnonzero(partition_boundary_mask(g, levels[i]))))
    a, c = lab[g.u[e]], lab[g.v[e]]
    lab[lab == c] = a
    levels[i] = Partition(lab)
    return levels, i


def structure_ok(g: Graph, levels) -> bool:
    """Bottom level singletons, top level the components, boundaries at least halving."""
    if not levels or levels[0] != Partition.singletons(g.n):
        return False
    if levels[-1] != Partition(g.components()):
        return False
    bd = [float(g.cap[partition_boundary_mask(g, P)].sum()) for P in levels]
    return all(bd[i + 1] <= bd[i] / 2.0 + g.tau for i in range(len(bd) - 1))


def approximator_matches(g: Graph, levels, approx: LaminarApproximator) -> bool:
    ref = assemble_levels(g, levels, approx.alpha, approx.beta)
    return set(ref.sets()) == set(approx.sets())
