"""Auxiliary instances G[A, gamma, s, t] and fair (s, t) cut/flow pairs.

The only backend is an exact max-flow (Dinic's blocking flows).  An exact
maximum flow together with the source side of a minimum cut saturates every
cut edge, so the pair is 1-fair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import (
    Graph,
    InputError,
    InternalError,
    boundary_mask,
    net_outflow,
    partition_boundary_mask,
    vertex_mask,
)


try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


@njit(cache=True)
def _dinic(n, tails, heads, caps, s, t, eps):
    m = caps.shape[0]
    deg = np.zeros(n + 1, np.int64)
    for e in range(m):
        deg[tails[e] + 1] += 1
        deg[heads[e] + 1] += 1
    start = np.cumsum(deg)
    fill = start[:n].copy()
    adj = np.empty(2 * m, np.int64)
    head = np.empty(2 * m, np.int64)
    res = np.empty(2 * m, np.float64)
    for e in range(m):
        a = tails[e]
        b = heads[e]
        head[2 * e] = b
        head[2 * e + 1] = a
        res[2 * e] = caps[e]
        res[2 * e + 1] = caps[e]
        adj[fill[a]] = 2 * e
        fill[a] += 1
        adj[fill[b]] = 2 * e + 1
        fill[b] += 1
    level = np.empty(n, np.int64)
    it = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    value = 0.0
    while True:
        level[:] = -1
        level[s] = 0
        qh = 0
        qt = 1
        queue[0] = s
        while qh < qt:
            x = queue[qh]
            qh += 1
            for j in range(start[x], start[x + 1]):
                arc = adj[j]
                y = head[arc]
                if level[y] < 0 and res[arc] > eps:
                    level[y] = level[x] + 1
                    queue[qt] = y
                    qt += 1
        if level[t] < 0:
            break
        for x in range(n):
            it[x] = start[x]
        depth = 0
        x = s
        while True:
            if x == t:
                push = res[path[0]]
                for i in range(1, depth):
                    if res[path[i]] < push:
                        push = res[path[i]]
                k = -1
                for i in range(depth):
                    a = path[i]
                    res[a] -= push
                    res[a ^ 1] += push
                    if k < 0 and res[a] <= eps:
                        k = i
                value += push
                depth = k
                x = s if k == 0 else head[path[k - 1]]
                continue
            j = it[x]
            end = start[x + 1]
            while j < end:
                arc = adj[j]
                if res[arc] > eps and level[head[arc]] == level[x] + 1:
                    break
                j += 1
            it[x] = j
            if j == end:
                if x == s:
                    break
                level[x] = -1
                depth -= 1
                x = s if depth == 0 else head[path[depth - 1]]
                continue
            path[depth] = adj[j]
            depth += 1
            x = head[adj[j]]
    flow = np.empty(m, np.float64)
    for e in range(m):
        flow[e] = caps[e] - res[2 * e]
    seen = np.zeros(n, np.bool_)
    seen[s] = True
    qh = 0
    qt = 1
    queue[0] = s
    while qh < qt:
        x = queue[qh]
        qh += 1
        for j in range(start[x], start[x + 1]):
            arc = adj[j]
            y = head[arc]
            if not seen[y] and res[arc] > eps:
                seen[y] = True
                queue[qt] = y
                qt += 1
    return flow, value, seen


def max_flow_arrays(n, tails, heads, caps, s, t, eps):
    """Dinic max-flow on an undirected multigraph.

    Returns (signed flow per edge in tail->head direction, value, reachable
    mask of the residual graph from s).
    """
    return _dinic(
        int(n),
        np.ascontiguousarray(tails, dtype=np.int64),
        np.ascontiguousarray(heads, dtype=np.int64),
        np.ascontiguousarray(caps, dtype=np.float64),
        int(s),
        int(t),
        float(eps),
    )


def _flow_eps(g: Graph) -> float:
    return 1e-14 * (1.0 + g.total_capacity)


def exact_max_flow(g: Graph, s: int, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Maximum s-t flow and the source side of a minimum cut (as a mask)."""
    if s == t:
        raise InputError("source and sink coincide")
    if not (0 <= s < g.n and 0 <= t < g.n):
        raise InputError("source or sink out of range")
    flow, _, side = max_flow_arrays(g.n, g.u, g.v, g.cap, s, t, _flow_eps(g))
    return flow, side


def flow_value(g: Graph, f: np.ndarray, s: int) -> float:
    return float(net_outflow(g, f)[s])


def cluster_weighting(g: Graph, P_L, A) -> np.ndarray:
    """deg over the edges of boundary(P_L) or boundary(A), restricted to A."""
    inside = vertex_mask(g, A)
    marked = partition_boundary_mask(g, P_L) | boundary_mask(g, inside)
    return np.where(inside, g.degree(marked), 0.0)


@dataclass(eq=False)
class AuxiliaryInstance:
    h: Graph
    x_id: int
    s_id: int
    t_id: int
    back_map: np.ndarray  # local id -> original id for the vertices of A
    edge_map: np.ndarray  # h edge id -> original edge id, -1 for added edges
    gamma: float
    s_weights: np.ndarray  # on local ids
    t_weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.back_map)


def build_auxiliary(g: Graph, P_L, A, gamma: float, s_w, t_w, weighting=None) -> AuxiliaryInstance:
    """G[A] plus vertices x, s, t joined to A by the prescribed capacities.

    s_w and t_w are full-length weightings on V that must vanish off A.
    """
    if not 0 < gamma <= 1:
        raise InputError("gamma must lie in (0, 1]")
    inside = vertex_mask(g, A)
    verts = np.flatnonzero(inside)
    if verts.size == 0:
        raise InputError("A must be nonempty")
    s_w = np.asarray(s_w, dtype=np.float64)
    t_w = np.asarray(t_w, dtype=np.float64)
    for name, w in (("s", s_w), ("t", t_w)):
        if w.shape != (g.n,) or np.any(w < 0):
            raise InputError(f"{name} weighting must be a nonnegative vector on V")
        if np.any(w[~inside] != 0):
            raise InputError(f"{name} weighting is supported outside A")
    d = cluster_weighting(g, P_L, inside) if weighting is None else weighting
    k = verts.size
    local = np.full(g.n, -1, dtype=np.int64)
    local[verts] = np.arange(k)
    keep = np.flatnonzero(inside[g.u] & inside[g.v])
    x, s, t = k, k + 1, k + 2
    tails = [local[g.u[keep]]]
    heads = [local[g.v[keep]]]
    caps = [g.cap[keep]]
    emap = [keep]
    ar = np.arange(k)
    for hub, w in ((x, gamma * d[verts]), (s, s_w[verts]), (t, t_w[verts])):
        nz = w > 0
        tails.append(ar[nz])
        heads.append(np.full(int(nz.sum()), hub))
        caps.append(w[nz])
        emap.append(np.full(int(nz.sum()), -1))
    h = Graph(k + 3, np.concatenate(tails), np.concatenate(heads), np.concatenate(caps))
    return AuxiliaryInstance(
        h, x, s, t, verts, np.concatenate(emap), gamma, s_w[verts].copy(), t_w[verts].copy()
    )


@dataclass(eq=False)
class FairCutFlowPair:
    S: np.ndarray  # mask over the vertices of h
    f: np.ndarray
    fairness: float = 1.0

    def cut_value(self, h: Graph) -> float:
        return float(h.cap[boundary_mask(h, self.S)].sum())


def _exact_backend(inst: AuxiliaryInstance, eps: float) -> FairCutFlowPair:
    f, side = exact_max_flow(inst.h, inst.s_id, inst.t_id)
    return FairCutFlowPair(side, f, 1.0)


BACKENDS = {"exact": _exact_backend}


def fair_cut(inst: AuxiliaryInstance, eps: float, backend: str = "exact", approximator=None) -> FairCutFlowPair:
    """A (1+eps)-fair cut/flow pair.  `approximator` is accepted and unused."""
    if not 0 < eps <= 1:
        raise InputError("eps must lie in (0, 1]")
    try:
        solve = BACKENDS[backend]
    except KeyError:
        raise InputError(f"unknown fair-cut backend {backend!r}") from None
    pair = solve(inst, eps)
    if not validate_fair_pair(inst, pair, eps):
        raise InternalError(f"fair-cut backend {backend!r} returned an invalid pair")
    return pair


def validate_fair_pair(inst: AuxiliaryInstance, pair: FairCutFlowPair, eps: float) -> bool:
    h = inst.h
    tau = h.tau
    f = np.asarray(pair.f, dtype=np.float64)
    S = np.asarray(pair.S, dtype=bool)
    if f.shape != (h.m,) or S.shape != (h.n,):
        return False
    if not S[inst.s_id] or S[inst.t_id]:
        return False
    if np.any(np.abs(f) > h.cap + tau):
        return False
    out = net_outflow(h, f)
    out[[inst.s_id, inst.t_id]] = 0.0
    if np.any(np.abs(out) > tau):
        return False
    cross = S[h.u] != S[h.v]
    # flow oriented from the S side to the other side
    oriented = np.where(S[h.u], f, -f)[cross]
    return bool(np.all(oriented >= h.cap[cross] / (1.0 + eps) - tau))
