"""Bottom-up hierarchy construction.

Each new level is built by recursively running the cut-matching game and
trimming on clusters A, starting from A = V.  Heavy cuts split A in two;
light cuts peel off R u B and emit the mixing remainder as a cluster.  The
flows produced along the way are assembled into one certificate per level:
every vertex sends its new boundary degree and receives at most half of its
old boundary degree.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cutmatching import CMGParams, Matching, run_cmg
from .faircut import cluster_weighting, max_flow_arrays
from .graph import (
    Graph,
    InputError,
    InternalError,
    Partition,
    congestion,
    induced_subgraph,
    net_outflow,
    partition_boundary_mask,
    path_decompose,
    trim_paths,
    vertex_mask,
)
from .trimming import trim

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BuildParams:
    seed: int = 0
    c_t: float = 1.0
    c_phi: float = 1.0
    c_kappa: float = 1.0
    dense_cap: int = 512
    threads: int = 1
    check_assumptions: bool = False
    dense: bool = False  # keep the flow matrix for clusters with at most dense_cap weighted vertices

    def __post_init__(self):
        if self.c_t <= 0 or self.c_phi <= 0 or self.c_kappa <= 0:
            raise InputError("constants must be positive")
        if self.threads < 1 or self.dense_cap < 1:
            raise InputError("threads and dense cap must be positive")


@dataclass
class RecursionNode:
    A: np.ndarray  # sorted vertex ids
    depth: int
    path: tuple[int, ...]
    case: int  # 1: two children, 2: one child and an emitted cluster
    d_A: float
    d_R: float
    R: np.ndarray
    B: np.ndarray
    rounds: int
    child_ratios: list[float] = field(default_factory=list)
    star_ok: bool | None = None
    round_records: list = field(default_factory=list)  # filled in dense mode only


@dataclass
class LevelCertificate:
    flow: np.ndarray
    beta: float
    receive: np.ndarray
    depth_edges: list[np.ndarray]
    nodes: list[RecursionNode]
    mixing: list[tuple[np.ndarray, list[Matching]]]
    max_depth: int
    depth_bound: int


@dataclass
class Hierarchy:
    g: Graph
    levels: list[Partition]
    certificates: list[LevelCertificate]
    params: CMGParams
    build: BuildParams
    components: int = 1

    @property
    def L(self) -> int:
        return len(self.levels)

    @property
    def beta(self) -> float:
        return max([1.0] + [c.beta for c in self.certificates])

    @property
    def alpha(self) -> float:
        return self.params.alpha

    def boundaries(self) -> list[float]:
        return [float(self.g.cap[partition_boundary_mask(self.g, P)].sum()) for P in self.levels]


def level_cap(g: Graph) -> int:
    return math.ceil(math.log2(max(g.total_capacity, 1.0))) + 2


def check_star_assumption(g: Graph, P_L: Partition, A, kappa: float) -> bool:
    """Can every v in A push c(v, V-A) out to sinks of capacity deg over boundary(P_L)?"""
    inside = vertex_mask(g, A)
    cross = inside[g.u] != inside[g.v]
    src = np.where(inside, g.degree(cross), 0.0)
    snk = g.degree(partition_boundary_mask(g, P_L))
    total = float(src.sum())
    if total == 0:
        return True
    n = g.n
    s, t = n, n + 1
    vs = np.arange(n)
    a, b = src > 0, snk > 0
    tails = np.concatenate([g.u, np.full(a.sum(), s), vs[b]])
    heads = np.concatenate([g.v, vs[a], np.full(b.sum(), t)])
    caps = np.concatenate([kappa * g.cap, src[a], snk[b]])
    eps = 1e-14 * (1.0 + caps.sum())
    _, value, _ = max_flow_arrays(n + 2, tails, heads, caps, s, t, eps)
    return value >= total - g.tau


def assemble_level_flow(g: Graph, depth_flows, P_L: Partition, P_next: Partition):
    """Combine per-depth flows into the level certificate.

    Returns (flow, congestion, received) where each vertex sends exactly its
    boundary degree in P_next and receives at most half its boundary degree
    in P_L.
    """
    deg_next = g.degree(partition_boundary_mask(g, P_next))
    deg_L = g.degree(partition_boundary_mask(g, P_L))
    total = np.sum(depth_flows, axis=0) if len(depth_flows) else np.zeros(g.m)
    received = deg_next - net_outflow(g, total)
    excess = received - (deg_L + deg_next) / 3.0
    if np.any(excess > g.tau):
        v = int(np.argmax(excess))
        raise InternalError(
            f"level flow: vertex {v} receives {received[v]:.6g}, above a third of "
            f"{deg_L[v] + deg_next[v]:.6g}"
        )
    pd = path_decompose(g, 1.5 * total)
    pd = trim_paths(pd, np.minimum(pd.sent(), deg_next))
    flow = pd.to_flow(g)
    received = deg_next - net_outflow(g, flow)
    if np.any(received < -g.tau) or np.any(received > deg_L / 2.0 + g.tau):
        raise InternalError("level flow violates its send/receive bounds after trimming")
    return flow, congestion(g, flow), np.maximum(received, 0.0)


def _node_rng(seed: int, level: int, path: tuple[int, ...]) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(level, len(path)) + path)
    return np.random.default_rng(ss)


def next_level(g: Graph, levels: list[Partition], params: CMGParams, bp: BuildParams):
    """Build the next partition of a connected graph plus its certificate."""
    P_L = levels[-1]
    T = params.T
    trim_eps = 1.0 / (4.0 * T)
    labels = np.full(g.n, -1, dtype=np.int64)
    n_emitted = 0
    nodes: list[RecursionNode] = []
    mixing: list[tuple[np.ndarray, list[Matching]]] = []
    depth_edges: list[np.ndarray] = []
    depth_flows: list[np.ndarray] = []
    d_V = float(cluster_weighting(g, P_L, np.ones(g.n, bool)).sum())
    shrink = 1.0 - 1.0 / (24.0 * T)
    depth_bound = math.ceil(math.log(max(d_V, 1.0)) / -math.log(shrink)) + 1

    def process(item):
        try:
            return _process(item)
        except InternalError as exc:
            if "recursion path" in str(exc):
                raise
            raise InternalError(f"level {len(levels) + 1}, recursion path {item[1]}: {exc}") from exc

    def _process(item):
        A, path = item
        inside = vertex_mask(g, A)
        d = cluster_weighting(g, P_L, inside)
        star = check_star_assumption(g, P_L, inside, params.kappa) if bp.check_assumptions else None
        rng = _node_rng(bp.seed, len(levels), path)
        dense = bp.dense and int(np.count_nonzero(d)) <= bp.dense_cap
        cmg = run_cmg(g, P_L, inside, params, rng, dense=dense, dense_cap=bp.dense_cap, weighting=d)
        tr = trim(g, P_L, inside, cmg.R, params.phi, params.kappa, trim_eps, weighting=d)
        return inside, d, star, cmg, tr

    frontier = [(np.arange(g.n), ())]
    depth = 0
    pool = ThreadPoolExecutor(bp.threads) if bp.threads > 1 else None
    try:
        while frontier:
            results = list(pool.map(process, frontier)) if pool else [process(x) for x in frontier]
            E_d = np.zeros(g.m, dtype=bool)
            f_d = np.zeros(g.m)
            new_frontier = []
            for (A, path), (inside, d, star, cmg, tr) in zip(frontier, results):
                dA = float(d.sum())
                dR = float(d[cmg.R].sum())
                RB = (cmg.R | tr.B) & inside
                rest = inside & ~RB
                cut = inside[g.u] & inside[g.v] & (RB[g.u] != RB[g.v])
                E_d |= cut
                f_d += np.where(cut, np.where(RB[g.u], g.cap, -g.cap), 0.0) + 2.0 * tr.g_flow
                case = 1 if dR >= dA / (6.0 * T) and dA > 0 else 2
                node = RecursionNode(
                    A, depth, path, case, dA, dR, np.flatnonzero(cmg.R), np.flatnonzero(tr.B), cmg.rounds_run, star_ok=star,
                    round_records=cmg.rounds if bp.dense else [],
                )
                children = [RB, rest] if case == 1 else [RB]
                for i, child in enumerate(children):
                    if not child.any():
                        continue
                    d_child = float(cluster_weighting(g, P_L, child).sum())
                    ratio = d_child / dA if dA > 0 else math.inf
                    node.child_ratios.append(ratio)
                    if d_child > shrink * dA + g.tau:
                        raise InternalError(
                            f"recursion path {path}: child weight {d_child:.6g} exceeds "
                            f"(1-1/(24T)) * {dA:.6g}"
                        )
                    new_frontier.append((np.flatnonzero(child), path + (i,)))
                if case == 2 and rest.any():
                    labels[rest] = n_emitted
                    n_emitted += 1
                    mixing.append((np.flatnonzero(rest), cmg.matchings))
                nodes.append(node)
            depth_edges.append(E_d)
            depth_flows.append(f_d)
            frontier = new_frontier
            depth += 1
            if depth > depth_bound:
                raise InternalError(f"recursion depth {depth} exceeds bound {depth_bound}")
    finally:
        if pool:
            pool.shutdown()

    if np.any(labels < 0):
        raise InternalError("emitted clusters do not cover V")
    P_next = Partition(labels)
    union = np.zeros(g.m, dtype=bool)
    for E in depth_edges:
        union |= E
    if not np.array_equal(union, partition_boundary_mask(g, P_next)):
        raise InternalError("union of recursion cuts differs from the new boundary")
    flow, beta, received = assemble_level_flow(g, depth_flows, P_L, P_next)
    cert = LevelCertificate(flow, beta, received, depth_edges, nodes, mixing, depth, depth_bound)
    return P_next, cert


def _build_connected(g: Graph, params: CMGParams, bp: BuildParams):
    levels = [Partition.singletons(g.n)]
    certs: list[LevelCertificate] = []
    cap = level_cap(g)
    while levels[-1].size > 1:
        if len(levels) >= cap:
            raise InternalError(f"level cap {cap} exceeded")
        P_next, cert = next_level(g, levels, params, bp)
        log.info("level %d: %d clusters, beta=%.3g", len(levels) + 1, P_next.size, cert.beta)
        levels.append(P_next)
        certs.append(cert)
    return levels, certs


def build_hierarchy(g: Graph, bp: BuildParams | None = None) -> Hierarchy:
    bp = bp or BuildParams()
    params = CMGParams.from_scale(g.n, g.W, bp.c_t, bp.c_phi, bp.c_kappa)
    if g.n == 0:
        raise InputError("empty graph")
    comp = g.components()
    n_comp = int(comp.max()) + 1
    if n_comp == 1:
        levels, certs = _build_connected(g, params, bp)
        return Hierarchy(g, levels, certs, params, bp, 1)

    parts = []
    for c in range(n_comp):
        sub, verts, emap = induced_subgraph(g, comp == c)
        levels, certs = _build_connected(sub, params, bp)
        parts.append((verts, emap, levels, certs))
    L = max(len(p[2]) for p in parts)
    levels = []
    certs = []
    for i in range(L):
        labels = np.zeros(g.n, dtype=np.int64)
        offset = 0
        for verts, _, lv, _ in parts:
            P = lv[min(i, len(lv) - 1)]
            labels[verts] = P.labels + offset
            offset += P.size
        levels.append(Partition(labels))
    for i in range(L - 1):
        flow = np.zeros(g.m)
        receive = np.zeros(g.n)
        beta = 0.0
        nodes, mixing, depth_edges = [], [], []
        max_depth = depth_bound = 0
        for verts, emap, lv, cs in parts:
            if i < len(cs):
                c = cs[i]
                flow[emap] = c.flow
                receive[verts] = c.receive
                beta = max(beta, c.beta)
                max_depth = max(max_depth, c.max_depth)
                depth_bound = max(depth_bound, c.depth_bound)
                mixing.extend(
                    (verts[a], [Matching(verts[mt.u], verts[mt.v], mt.c) for mt in ms]) for a, ms in c.mixing
                )
                for node in c.nodes:
                    nodes.append(
                        RecursionNode(
                            verts[node.A], node.depth, node.path, node.case, node.d_A, node.d_R,
                            verts[node.R], verts[node.B], node.rounds, node.child_ratios, node.star_ok, node.round_records,
                        )
                    )
                for dpt, E in enumerate(c.depth_edges):
                    while len(depth_edges) <= dpt:
                        depth_edges.append(np.zeros(g.m, dtype=bool))
                    depth_edges[dpt][emap[E]] = True
        certs.append(LevelCertificate(flow, beta, receive, depth_edges, nodes, mixing, max_depth, depth_bound))
    return Hierarchy(g, levels, certs, params, bp, n_comp)
