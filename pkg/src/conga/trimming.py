"""Expander trimming: grow a sparse cut R to R u B with one fair-cut call.

Vertices next to R get source capacity equal to their capacity into R (plus a
small uniform term), R itself is tied to the source, and every vertex outside
R can absorb 12*phi*d(v).  Whatever
the cut side of the fair pair captures becomes B.  The flow on the far side,
scaled by 2 and trimmed, certifies that the new boundary weighting can be
routed away with congestion 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .faircut import build_auxiliary, cluster_weighting, fair_cut
from .graph import (
    Graph,
    InternalError,
    boundary_mask,
    net_outflow,
    path_decompose,
    trim_paths,
    vertex_mask,
)


@dataclass
class TrimResult:
    B: np.ndarray
    t_vec: np.ndarray
    g_flow: np.ndarray  # on global edge ids, supported on G[A \ (R u B)]
    boundary_deg: np.ndarray  # deg over the G[A]-boundary of R u B, on A \ (R u B)


def trim(g: Graph, P_L, A, R, phi: float, kappa: float, eps: float, weighting=None) -> TrimResult:
    inside = vertex_mask(g, A)
    R = vertex_mask(g, R) & inside
    d = cluster_weighting(g, P_L, inside) if weighting is None else np.asarray(weighting, float)
    in_GA = inside[g.u] & inside[g.v]
    # s0(v) = c(v, R) for v outside R
    to_R = in_GA & (R[g.u] != R[g.v])
    s0 = np.where(inside & ~R, g.degree(to_R), 0.0)
    gamma = eps * phi / 2.0
    s_w = np.where(inside, s0 + eps * phi * d, 0.0)
    # pin R to the source side: an s-edge heavier than everything else at r
    # keeps every minimum cut from separating r from s, so no vertex outside
    # R u B can push flow into R on the sink side
    pin = 1.0 + g.degree(in_GA) + gamma * d
    s_w = np.where(R, pin, s_w)
    t_w = np.where(inside & ~R, 12.0 * phi * d, 0.0)
    inst = build_auxiliary(g, P_L, inside, gamma, s_w, t_w, weighting=d)
    pair = fair_cut(inst, eps)
    h, k, bm = inst.h, inst.size, inst.back_map

    B = np.zeros(g.n, dtype=bool)
    B[bm[pair.S[:k]]] = True
    RB = R | B
    rest = inside & ~RB
    cut_edges = in_GA & (RB[g.u] != RB[g.v])
    deg_cut = np.where(rest, g.degree(cut_edges), 0.0)

    # every vertex on the far side must receive its full cut capacity from S
    S = pair.S
    cross = S[h.u] != S[h.v]
    into = np.where(S[h.u], pair.f, -pair.f) * cross
    got = np.bincount(np.where(S[h.u], h.v, h.u), into, h.n)
    want = np.bincount(np.where(S[h.u], h.v, h.u), h.cap * cross, h.n)
    far = ~S
    if np.any(got[far] < want[far] / 2.0 - h.tau):
        raise InternalError("trimming: fair flow delivers too little across the cut")

    # drop edges touching s, x and R u B; keep the t edges for now
    RB_local = np.zeros(h.n, dtype=bool)
    RB_local[:k] = RB[bm]
    RB_local[[inst.s_id, inst.x_id]] = True
    keep = ~RB_local[h.u] & ~RB_local[h.v]
    f = 2.0 * np.where(keep, pair.f, 0.0)
    pd = path_decompose(h, f)
    quota = np.zeros(h.n)
    quota[:k] = deg_cut[bm]
    pd = trim_paths(pd, quota, tol=h.tau)
    f_trim = pd.to_flow(h)

    core = inst.edge_map >= 0
    g_flow = np.zeros(g.m)
    g_flow[inst.edge_map[core]] = f_trim[core]
    out = net_outflow(g, g_flow)
    t_vec = np.where(rest, deg_cut - out, 0.0)
    t_vec = np.maximum(t_vec, 0.0)
    return TrimResult(B, t_vec, g_flow, deg_cut)


def trim_checks(g: Graph, P_L, A, R, result: TrimResult, phi: float, eps: float, weighting=None) -> dict:
    """Slack of each trimming property (nonnegative means the property holds)."""
    inside = vertex_mask(g, A)
    R = vertex_mask(g, R) & inside
    d = cluster_weighting(g, P_L, inside) if weighting is None else np.asarray(weighting, float)
    in_GA = inside[g.u] & inside[g.v]
    dA = float(d.sum())
    dR = float(g.cap[boundary_mask(g, R) & in_GA].sum())
    B = result.B & inside
    dB = float(g.cap[boundary_mask(g, B) & in_GA].sum())
    RB = R | B
    rest = inside & ~RB
    cut_edges = in_GA & (RB[g.u] != RB[g.v])
    deg_cut = np.where(rest, g.degree(cut_edges), 0.0)
    tau = g.tau

    support_ok = bool(np.all(result.g_flow[~(rest[g.u] & rest[g.v])] == 0))
    out = net_outflow(g, result.g_flow)
    demand_err = float(np.max(np.abs(np.where(rest, out - (deg_cut - result.t_vec), out)), initial=0.0))
    cong = float(np.max(np.abs(result.g_flow) / g.cap, initial=0.0))
    t_slack = float(np.min(np.where(rest, 24.0 * phi * d - result.t_vec, np.inf), initial=np.inf))
    t_nonneg = float(np.min(result.t_vec, initial=0.0))
    return {
        "property1": 2.0 * dR + 2.0 * eps * phi * dA - dB,
        "property2": dR / (6.0 * phi) + eps / 6.0 * dA - float(d[B & ~R].sum()),
        "t_bound": min(t_slack, t_nonneg),
        "demand": -demand_err if support_ok else -np.inf,
        "congestion": 2.0 - cong,
        "tau": tau,
    }


def validate_trim(g: Graph, P_L, A, R, result: TrimResult, phi: float, eps: float, weighting=None) -> bool:
    checks = trim_checks(g, P_L, A, R, result, phi, eps, weighting)
    tau = checks.pop("tau")
    return all(v >= -tau for v in checks.values())
