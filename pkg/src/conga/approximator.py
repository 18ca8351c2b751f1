"""The laminar family of common refinements and its congestion query.

For levels P_1..P_L the family holds every cluster of every common
refinement R_i = P_i ^ ... ^ P_L.  It is stored as a forest over a vertex
order in which each cluster is a contiguous range.  A set appearing in
several refinements is stored once, at its highest level.

Binary format (all integers little-endian)::

    offset  size    field
    0       8       magic b"CONGAAPX"
    8       2       version (u16, currently 1)
    10      2       reserved (u16, 0)
    12      4       n (u32)
    16      4       node count k (u32)
    20      4       level count L (u32)
    24      8       graph checksum (u64)
    32      8       alpha (f64)
    40      8       beta (f64)
    48      8       tau, the zero-boundary tolerance (f64)
    56      4n      leaf order (u32 each)
    56+4n   24k     nodes: start u32, end u32, level u32, parent i32, delta f64

Ranges are half-open [start, end) into the leaf order; roots have parent -1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .graph import Graph, InputError, InternalError, Partition, boundary_capacity, partition_boundary_mask

MAGIC = b"CONGAAPX"
VERSION = 1
_HEADER = struct.Struct("<8sHHIIIQddd")
_NODE = np.dtype([("start", "<u4"), ("end", "<u4"), ("level", "<u4"), ("parent", "<i4"), ("delta", "<f8")])


class ParseError(InputError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (at byte offset {offset})")
        self.offset = offset


def common_refinement(levels) -> Partition:
    levels = list(levels)
    if not levels:
        raise InputError("need at least one partition")
    if not all(isinstance(P, Partition) for P in levels):
        raise InputError("inputs must be partitions")
    n = levels[0].n
    for P in levels:
        if P.n != n:
            raise InputError("inputs must be partitions of the same vertex set")
    keys = np.stack([P.labels for P in levels], axis=1)
    _, labels = np.unique(keys, axis=0, return_inverse=True)
    return Partition(labels.ravel())


def refinements(levels) -> list[Partition]:
    """R_i for i = 1..L, each the common refinement of P_i..P_L."""
    out = [levels[-1]]
    for P in reversed(levels[:-1]):
        out.append(common_refinement([P, out[-1]]))
    return out[::-1]


@dataclass(eq=False)
class LaminarApproximator:
    n: int
    order: np.ndarray
    start: np.ndarray
    end: np.ndarray
    level: np.ndarray
    parent: np.ndarray
    delta: np.ndarray
    L: int
    alpha: float = 1.0
    beta: float = 1.0
    tau: float = 1e-9
    checksum: int = 0

    def __post_init__(self):
        self._leaf = np.full(self.n, -1, dtype=np.int64)
        single = (self.end - self.start) == 1
        self._leaf[self.order[self.start[single]]] = np.flatnonzero(single)
        depth = np.zeros(len(self.start), dtype=np.int64)
        # parents always precede children (nodes are created top-down)
        for i, p in enumerate(self.parent.tolist()):
            if p >= 0:
                depth[i] = depth[p] + 1
        self._depth = depth

    @property
    def num_nodes(self) -> int:
        return len(self.start)

    @property
    def K(self) -> int:
        return int(np.sum(self.end - self.start))

    @property
    def quality_bound(self) -> float:
        return 5.0 * self.L**2 * self.alpha * self.beta

    def members(self, node: int) -> np.ndarray:
        return np.sort(self.order[self.start[node]:self.end[node]])

    def sets(self) -> list[frozenset[int]]:
        return [frozenset(self.members(i).tolist()) for i in range(self.num_nodes)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaminarApproximator):
            return NotImplemented
        same = all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("order", "start", "end", "level", "parent", "delta")
        )
        meta = (self.n, self.L, self.alpha, self.beta, self.tau, self.checksum)
        return same and meta == (other.n, other.L, other.alpha, other.beta, other.tau, other.checksum)


def assemble_levels(g: Graph, levels, alpha: float = 1.0, beta: float = 1.0) -> LaminarApproximator:
    levels = list(levels)
    L = len(levels)
    refs = refinements(levels)
    keys = np.stack([R.labels for R in reversed(refs)])
    # lexsort uses the last key as primary: coarsest refinement first
    order = np.lexsort(keys[::-1])
    pos = np.empty(g.n, dtype=np.int64)
    pos[order] = np.arange(g.n)

    starts, ends, lv, parents, deltas = [], [], [], [], []
    prev_node = None
    for i in range(L - 1, -1, -1):
        lab = refs[i].labels
        k = refs[i].size
        lo = np.full(k, g.n, dtype=np.int64)
        hi = np.zeros(k, dtype=np.int64)
        np.minimum.at(lo, lab, pos)
        np.maximum.at(hi, lab, pos + 1)
        size = np.bincount(lab, minlength=k)
        if np.any(hi - lo != size):
            raise InternalError("refinement produced a non-contiguous cluster")
        node = np.empty(k, dtype=np.int64)
        for c in range(k):
            par = -1
            if prev_node is not None:
                up = refs[i + 1].labels[order[lo[c]]]
                par = int(prev_node[up])
                if ends[par] - starts[par] == size[c]:
                    node[c] = par
                    continue
                if not (starts[par] <= lo[c] and hi[c] <= ends[par]):
                    raise InternalError("refinement violation: cluster escapes its parent")
            node[c] = len(starts)
            starts.append(int(lo[c]))
            ends.append(int(hi[c]))
            lv.append(i + 1)
            parents.append(par)
            deltas.append(boundary_capacity(g, order[lo[c]:hi[c]]))
        prev_node = node
    return LaminarApproximator(
        g.n,
        order.astype(np.int64),
        np.asarray(starts, dtype=np.int64),
        np.asarray(ends, dtype=np.int64),
        np.asarray(lv, dtype=np.int64),
        np.asarray(parents, dtype=np.int64),
        np.asarray(deltas, dtype=np.float64),
        L,
        float(alpha),
        float(beta),
        g.tau,
        g.checksum(),
    )


def assemble(hierarchy) -> LaminarApproximator:
    return assemble_levels(hierarchy.g, hierarchy.levels, hierarchy.alpha, hierarchy.beta)


def trivial_approximator(g: Graph) -> LaminarApproximator:
    """Singletons plus V only; the negative control."""
    return assemble_levels(g, [Partition.singletons(g.n), Partition.whole(g.n)])


def estimate_congestion(approx: LaminarApproximator, b, return_visits: bool = False):
    """max over stored clusters C of |b(C)| / delta(C), by one bottom-up pass."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (approx.n,):
        raise InputError("demand has the wrong length")
    sums = np.zeros(approx.num_nodes)
    visits = 0
    leaf = approx._leaf
    sums[leaf] = b
    visits += approx.n
    depth = approx._depth
    for dpt in range(int(depth.max(initial=0)), 0, -1):
        idx = np.flatnonzero(depth == dpt)
        # singletons were loaded directly; internal nodes sum their children
        np.add.at(sums, approx.parent[idx], sums[idx])
        visits += idx.size
    visits += int(np.sum(depth == 0))
    mag = np.abs(sums)
    pos = approx.delta > 0
    est = float(np.max(mag[pos] / approx.delta[pos], initial=0.0))
    if np.any(mag[~pos] > approx.tau):
        est = float("inf")
    return (est, visits) if return_visits else est


MARKERS = (frozenset({"x"}), frozenset({"s"}), frozenset({"t"}))


def restrict_to(approx: LaminarApproximator, A) -> list[frozenset]:
    """Nonempty intersections with A, deduplicated, plus markers for x, s, t."""
    keep = set(int(a) for a in A)
    seen = set()
    out = []
    for i in range(approx.num_nodes):
        s = frozenset(v for v in approx.order[approx.start[i]:approx.end[i]].tolist() if v in keep)
        if s and s not in seen:
            seen.add(s)
            out.append(s)
    return out + list(MARKERS)


def is_laminar(sets) -> bool:
    sets = list(sets)
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            a, b = sets[i], sets[j]
            if a & b and not (a <= b or b <= a):
                return False
    return True


def check_structure(approx: LaminarApproximator) -> bool:
    """Ranges nest inside parents and siblings are disjoint."""
    for i in range(approx.num_nodes):
        p = approx.parent[i]
        if p >= 0 and not (approx.start[p] <= approx.start[i] and approx.end[i] <= approx.end[p]):
            return False
        if p >= 0 and approx.level[p] <= approx.level[i]:
            return False
    key = np.lexsort((approx.start, approx.parent))
    par, st, en = approx.parent[key], approx.start[key], approx.end[key]
    same = par[1:] == par[:-1]
    return bool(np.all(st[1:][same] >= en[:-1][same]))


def refinement_checks(g: Graph, levels) -> bool:
    """Nesting of refinements and the boundary relations between consecutive ones."""
    refs = refinements(levels)
    for i in range(len(refs) - 1):
        fine, coarse = refs[i], refs[i + 1]
        # fine refines coarse: each fine cluster maps to one coarse cluster
        pairs = np.unique(np.stack([fine.labels, coarse.labels], axis=1), axis=0)
        if len(pairs) != fine.size:
            return False
        bf = partition_boundary_mask(g, fine)
        bc = partition_boundary_mask(g, coarse)
        if np.any(bc & ~bf):
            return False
        if np.any(bf & ~bc & ~partition_boundary_mask(g, levels[i])):
            return False
    return True


def serialize(approx: LaminarApproximator) -> bytes:
    header = _HEADER.pack(
        MAGIC, VERSION, 0, approx.n, approx.num_nodes, approx.L, approx.checksum,
        approx.alpha, approx.beta, approx.tau,
    )
    nodes = np.empty(approx.num_nodes, dtype=_NODE)
    nodes["start"], nodes["end"] = approx.start, approx.end
    nodes["level"], nodes["parent"], nodes["delta"] = approx.level, approx.parent, approx.delta
    return header + approx.order.astype("<u4").tobytes() + nodes.tobytes()


def deserialize(data: bytes) -> LaminarApproximator:
    if len(data) < _HEADER.size:
        raise ParseError("truncated header", len(data))
    magic, version, _, n, k, L, checksum, alpha, beta, tau = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ParseError("bad magic", 0)
    if version != VERSION:
        raise ParseError(f"unsupported version {version}", 8)
    off = _HEADER.size
    need = off + 4 * n + _NODE.itemsize * k
    if len(data) < need:
        raise ParseError(f"truncated body: need {need} bytes, have {len(data)}", len(data))
    if len(data) > need:
        raise ParseError("trailing bytes", need)
    order = np.frombuffer(data, "<u4", n, off).astype(np.int64)
    if n and (order.max() >= n or len(np.unique(order)) != n):
        raise ParseError("leaf order is not a permutation", off)
    off += 4 * n
    nodes = np.frombuffer(data, _NODE, k, off)
    start = nodes["start"].astype(np.int64)
    end = nodes["end"].astype(np.int64)
    parent = nodes["parent"].astype(np.int64)
    for i in range(k):
        if not (0 <= start[i] < end[i] <= n) or not (-1 <= parent[i] < i):
            raise ParseError(f"node {i} is malformed", off + i * _NODE.itemsize)
    return LaminarApproximator(
        n, order, start, end, nodes["level"].astype(np.int64), parent,
        nodes["delta"].astype(np.float64), L, alpha, beta, tau, checksum,
    )


def write_approximator(approx: LaminarApproximator, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(approx))


def read_approximator(path) -> LaminarApproximator:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
