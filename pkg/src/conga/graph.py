"""Capacitated undirected graphs, partitions, flows and path decompositions.

Edges are stored with their endpoints sorted (u < v).  A flow is a float array
with one entry per edge; a positive value means flow from the lower-indexed
endpoint to the higher-indexed one.  A demand is a float array with one entry
per vertex giving the net flow the vertex receives.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class InputError(ValueError):
    """Malformed user input (bad ids, bad files, bad partitions)."""


class InternalError(RuntimeError):
    """A guarantee that should hold by construction was violated."""


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    u: np.ndarray
    v: np.ndarray
    cap: np.ndarray
    W: float | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.int64)
        v = np.asarray(self.v, dtype=np.int64)
        cap = np.asarray(self.cap, dtype=np.float64)
        if not (u.shape == v.shape == cap.shape) or u.ndim != 1:
            raise InputError("edge arrays must be 1-d and of equal length")
        if self.n < 0:
            raise InputError("negative vertex count")
        if len(u) and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= self.n):
            raise InputError("edge endpoint out of range")
        if np.any(u == v):
            raise InputError("self-loops are not allowed")
        if np.any(~np.isfinite(cap)) or np.any(cap <= 0):
            raise InputError("capacities must be positive and finite")
        if self.W is not None and len(cap) and (cap.min() < 1 or cap.max() > self.W):
            raise InputError(f"capacities must lie in [1, {self.W}]")
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        for name, arr in (("u", lo), ("v", hi), ("cap", cap)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]], W: float | None = None) -> "Graph":
        edges = list(edges)
        if not edges:
            return cls(n, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0), W)
        arr = np.asarray(edges, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InputError("edges must be (u, v, capacity) triples")
        if np.any(arr[:, :2] != np.round(arr[:, :2])):
            raise InputError("vertex ids must be integers")
        return cls(n, arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2], W)

    @property
    def m(self) -> int:
        return len(self.cap)

    @property
    def total_capacity(self) -> float:
        return float(self.cap.sum())

    @property
    def tau(self) -> float:
        """Scale-aware conservation tolerance used by every check."""
        return 1e-9 * (1.0 + self.total_capacity)

    def degree(self, edge_mask: np.ndarray | None = None) -> np.ndarray:
        """Weighted degree of every vertex, optionally restricted to a set of edges."""
        c = self.cap if edge_mask is None else np.where(edge_mask, self.cap, 0.0)
        return np.bincount(self.u, c, self.n) + np.bincount(self.v, c, self.n)

    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.u.tolist(), self.v.tolist(), self.cap.tolist()))

    def components(self) -> np.ndarray:
        """Connected-component label of every vertex."""
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        adj = coo_matrix((np.ones(self.m), (self.u, self.v)), shape=(self.n, self.n))
        return connected_components(adj, directed=False)[1]

    def checksum(self) -> int:
        import hashlib

        digest = hashlib.sha256(write_graph_text(self).encode()).digest()
        return int.from_bytes(digest[:8], "little")


def _as_mask(n: int, C) -> np.ndarray:
    """Boolean membership vector from a vertex collection or mask."""
    C = np.asarray(C)
    if C.dtype == bool:
        if C.shape != (n,):
            raise InputError("vertex mask has the wrong length")
        return C
    mask = np.zeros(n, dtype=bool)
    if C.size:
        C = C.astype(np.int64).ravel()
        if C.min() < 0 or C.max() >= n:
            raise InputError("vertex id out of range")
        mask[C] = True
    return mask


def vertex_mask(g: Graph, C) -> np.ndarray:
    return _as_mask(g.n, list(C) if isinstance(C, (set, frozenset)) else C)


def boundary_mask(g: Graph, C) -> np.ndarray:
    """Edges with exactly one endpoint in C."""
    inside = vertex_mask(g, C)
    return inside[g.u] != inside[g.v]


def boundary_capacity(g: Graph, C) -> float:
    return float(g.cap[boundary_mask(g, C)].sum())


def edge_mask(g: Graph, F) -> np.ndarray:
    F = np.asarray(list(F) if isinstance(F, (set, frozenset)) else F)
    if F.dtype == bool:
        if F.shape != (g.m,):
            raise InputError("edge mask has the wrong length")
        return F
    mask = np.zeros(g.m, dtype=bool)
    if F.size:
        F = F.astype(np.int64)
        if F.min() < 0 or F.max() >= g.m:
            raise InputError("edge id not in graph")
        mask[F] = True
    return mask


def restricted_degree(g: Graph, F, v: int) -> float:
    if not 0 <= v < g.n:
        raise InputError("vertex id out of range")
    return float(g.degree(edge_mask(g, F))[v])


@dataclass(frozen=True, eq=False)
class Partition:
    """A partition of 0..n-1, stored as a canonical label per vertex.

    Labels are renumbered by first occurrence so two partitions with the same
    clusters compare equal.
    """

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise InputError("labels must be 1-d")
        _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        canon = order[inv].astype(np.int64)
        canon.setflags(write=False)
        object.__setattr__(self, "labels", canon)

    @classmethod
    def from_clusters(cls, n: int, clusters: Iterable[Iterable[int]]) -> "Partition":
        labels = np.full(n, -1, dtype=np.int64)
        for i, cluster in enumerate(clusters):
            ids = np.asarray(list(cluster), dtype=np.int64)
            if ids.size == 0:
                raise InputError("empty cluster")
            if ids.min() < 0 or ids.max() >= n:
                raise InputError("vertex id out of range")
            if np.any(labels[ids] != -1) or len(set(ids.tolist())) != ids.size:
                raise InputError("clusters are not disjoint")
            labels[ids] = i
        if np.any(labels == -1):
            raise InputError("clusters do not cover every vertex")
        return cls(labels)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @classmethod
    def whole(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def size(self) -> int:
        return int(self.labels.max()) + 1 if self.n else 0

    def clusters(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.size)]
        for v, lab in enumerate(self.labels.tolist()):
            out[lab].append(v)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash(self.labels.tobytes())

    def __repr__(self) -> str:
        return f"Partition({self.clusters()})"


def partition_boundary(g: Graph, P: Partition) -> np.ndarray:
    """Sorted ids of the edges whose endpoints lie in different clusters."""
    return np.flatnonzero(partition_boundary_mask(g, P))


def partition_boundary_mask(g: Graph, P: Partition) -> np.ndarray:
    if not isinstance(P, Partition) or P.n != g.n:
        raise InputError("partition does not match the graph")
    return P.labels[g.u] != P.labels[g.v]


def induced_subgraph(g: Graph, A) -> tuple[Graph, np.ndarray, np.ndarray]:
    """G[A] together with local->global vertex ids and local->global edge ids."""
    inside = vertex_mask(g, A)
    verts = np.flatnonzero(inside)
    if verts.size == 0:
        raise InputError("induced subgraph of an empty set")
    local = np.full(g.n, -1, dtype=np.int64)
    local[verts] = np.arange(verts.size)
    keep = np.flatnonzero(inside[g.u] & inside[g.v])
    sub = Graph(verts.size, local[g.u[keep]], local[g.v[keep]], g.cap[keep], g.W)
    return sub, verts, keep


def net_outflow(g: Graph, f: np.ndarray) -> np.ndarray:
    """Flow leaving each vertex minus flow entering it."""
    return np.bincount(g.u, f, g.n) - np.bincount(g.v, f, g.n)


def congestion(g: Graph, f: np.ndarray) -> float:
    if g.m == 0:
        return 0.0
    return float(np.max(np.abs(f) / g.cap))


def route_check(g: Graph, f: np.ndarray, b: np.ndarray) -> tuple[bool, float]:
    """Does f route b (b(v) = net flow received by v)?  Also returns the congestion."""
    f = np.asarray(f, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if f.shape != (g.m,) or b.shape != (g.n,):
        return False, float("inf")
    received = -net_outflow(g, f)
    ok = bool(np.all(np.abs(received - b) <= g.tau))
    return ok, congestion(g, f)


@dataclass
class Path:
    vertices: list[int]
    edges: list[int]
    capacity: float

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]


@dataclass
class PathDecomposition:
    n: int
    paths: list[Path] = field(default_factory=list)

    def to_flow(self, g: Graph) -> np.ndarray:
        f = np.zeros(g.m)
        for p in self.paths:
            for a, e in zip(p.vertices, p.edges):
                f[e] += p.capacity if g.u[e] == a else -p.capacity
        return f

    def sent(self) -> np.ndarray:
        out = np.zeros(self.n)
        for p in self.paths:
            out[p.start] += p.capacity
        return out

    def received(self) -> np.ndarray:
        out = np.zeros(self.n)
        for p in self.paths:
            out[p.end] += p.capacity
        return out


def path_decompose(g: Graph, f: np.ndarray, tol: float | None = None) -> PathDecomposition:
    """Decompose f into source-to-sink paths, dropping any circulation.

    Walks from a vertex with remaining excess along positive arcs.  A walk
    that closes a cycle cancels it; a walk that reaches a vertex with
    remaining deficit yields a path.
    """
    f = np.asarray(f, dtype=np.float64)
    if tol is None:
        tol = 1e-12 * (1.0 + g.total_capacity)
    out = net_outflow(g, f)
    excess = np.maximum(out, 0.0).tolist()
    deficit = np.maximum(-out, 0.0).tolist()
    amount = np.abs(f).tolist()
    head = np.where(f > 0, g.v, g.u).tolist()
    tail = np.where(f > 0, g.u, g.v)
    arcs: list[list[int]] = [[] for _ in range(g.n)]
    for e in np.flatnonzero(np.abs(f) > tol).tolist():
        arcs[int(tail[e])].append(e)
    ptr = [0] * g.n
    paths: list[Path] = []

    def next_arc(x: int) -> int:
        lst = arcs[x]
        i = ptr[x]
        while i < len(lst) and amount[lst[i]] <= tol:
            i += 1
        ptr[x] = i
        return lst[i] if i < len(lst) else -1

    order = sorted(range(g.n), key=lambda x: -excess[x])
    for src in order:
        while excess[src] > tol:
            stack_v = [src]
            stack_e: list[int] = []
            pos = {src: 0}
            while True:
                x = stack_v[-1]
                if x != src and deficit[x] > tol:
                    break
                e = next_arc(x)
                if e < 0:
                    break
                y = head[e]
                if y in pos:
                    k = pos[y]
                    cyc = stack_e[k:] + [e]
                    delta = min(amount[a] for a in cyc)
                    for a in cyc:
                        amount[a] -= delta
                    for w in stack_v[k + 1:]:
                        del pos[w]
                    del stack_v[k + 1:]
                    del stack_e[k:]
                    continue
                pos[y] = len(stack_v)
                stack_v.append(y)
                stack_e.append(e)
            end = stack_v[-1]
            if end == src:
                # only round-off excess is left here
                excess[src] = 0.0
                break
            delta = min([excess[src], deficit[end]] + [amount[a] for a in stack_e])
            if deficit[end] <= tol:
                # dead end caused by round-off; absorb what is left
                delta = min([excess[src]] + [amount[a] for a in stack_e])
            for a in stack_e:
                amount[a] -= delta
            excess[src] -= delta
            deficit[end] = max(deficit[end] - delta, 0.0)
            if delta > tol:
                paths.append(Path(stack_v, stack_e, delta))
    return PathDecomposition(g.n, paths)


def trim_paths(pd: PathDecomposition, quota: np.ndarray, tol: float = 0.0) -> PathDecomposition:
    """Shrink paths so every vertex starts exactly quota(v) capacity.

    Paths are kept in order; the first ones are kept whole and the last kept
    one is cut down.  A shortfall larger than tol is an error.
    """
    quota = np.asarray(quota, dtype=np.float64)
    available = pd.sent()
    short = np.flatnonzero(available + tol < quota)
    if short.size:
        v = int(short[0])
        raise InternalError(
            f"trim_paths: vertex {v} starts {available[v]:.12g} but quota is {quota[v]:.12g}"
        )
    remaining = np.minimum(quota, available).tolist()
    kept: list[Path] = []
    for p in pd.paths:
        take = min(p.capacity, remaining[p.start])
        if take > 0:
            kept.append(Path(p.vertices, p.edges, take))
            remaining[p.start] -= take
    return PathDecomposition(pd.n, kept)


def read_graph_text(text: str) -> Graph:
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "p" and header is None and len(parts) == 4:
                header = (int(parts[1]), int(parts[2]), float(parts[3]))
            elif parts[0] == "e" and header is not None and len(parts) == 4:
                edges.append((int(parts[1]), int(parts[2]), float(parts[3])))
            else:
                raise InputError(f"line {lineno}: unexpected line {raw!r}")
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"line {lineno}: {exc}") from None
    if header is None:
        raise InputError("missing 'p <n> <m> <W>' header")
    n, m, W = header
    if len(edges) != m:
        raise InputError(f"header declares {m} edges but {len(edges)} were given")
    return Graph.from_edges(n, edges, W)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_graph_text(g: Graph) -> str:
    buf = io.StringIO()
    W = g.W if g.W is not None else (float(g.cap.max()) if g.m else 1.0)
    buf.write(f"p {g.n} {g.m} {_fmt(W)}\n")
    for a, b, c in g.edges():
        buf.write(f"e {a} {b} {_fmt(c)}\n")
    return buf.getvalue()


def read_graph(path) -> Graph:
    with open(path) as fh:
        return read_graph_text(fh.read())


def write_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(write_graph_text(g))
