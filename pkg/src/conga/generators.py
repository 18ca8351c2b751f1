"""Random and structured graph families.  All capacities are integers in [1, W]."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .graph import Graph, InputError


def _caps(rng: np.random.Generator, k: int, W: int) -> np.ndarray:
    if W <= 1:
        return np.ones(k)
    return rng.integers(1, W + 1, k).astype(np.float64)


def _graph(n: int, pairs, W: int, rng) -> Graph:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return Graph(n, pairs[:, 0], pairs[:, 1], _caps(rng, len(pairs), W), float(max(W, 1)))


def gnm(n: int, m: int | None = None, W: int = 1, seed=None) -> Graph:
    """Connected random graph: a random recursive tree plus uniform extra edges."""
    rng = np.random.default_rng(seed)
    m = 2 * n if m is None else m
    m = min(max(m, n - 1), n * (n - 1) // 2)
    seen = set()
    pairs = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        seen.add((j, i))
        pairs.append((j, i))
    while len(pairs) < m:
        a, b = sorted(int(x) for x in rng.integers(0, n, 2))
        if a != b and (a, b) not in seen:
            seen.add((a, b))
            pairs.append((a, b))
    return _graph(n, pairs, W, rng)


def grid(n: int, W: int = 1, seed=None) -> Graph:
    rng = np.random.default_rng(seed)
    cols = max(1, math.isqrt(n))
    pairs = []
    for v in range(n):
        if (v + 1) % cols and v + 1 < n:
            pairs.append((v, v + 1))
        if v + cols < n:
            pairs.append((v, v + cols))
    return _graph(n, pairs, W, rng)


def two_cliques(n: int, bridge_cap: float = 1.0, W: int = 1, seed=None) -> Graph:
    rng = np.random.default_rng(seed)
    h = n // 2
    pairs = list(itertools.combinations(range(h), 2))
    pairs += [(a + h, b + h) for a, b in itertools.combinations(range(n - h), 2)]
    g = _graph(n, pairs, W, rng)
    if h == 0 or h == n:
        return g
    Wb = max(float(W), float(bridge_cap))
    return Graph(
        n,
        np.append(g.u, 0),
        np.append(g.v, h),
        np.append(g.cap, float(bridge_cap)),
        Wb,
    )


def path(n: int, W: int = 1, seed=None) -> Graph:
    rng = np.random.default_rng(seed)
    return _graph(n, [(i, i + 1) for i in range(n - 1)], W, rng)


def star(n: int, W: int = 1, seed=None) -> Graph:
    rng = np.random.default_rng(seed)
    return _graph(n, [(0, i) for i in range(1, n)], W, rng)


def power_law(n: int, W: int = 1, attach: int = 2, seed=None) -> Graph:
    """Preferential attachment: each new vertex links to `attach` distinct earlier ones."""
    rng = np.random.default_rng(seed)
    core = min(n, attach + 1)
    pairs = [(i, i + 1) for i in range(core - 1)]
    ends = [x for p in pairs for x in p] or [0]
    for v in range(core, n):
        targets = set()
        while len(targets) < min(attach, v):
            targets.add(int(ends[int(rng.integers(0, len(ends)))]))
        for u in sorted(targets):
            pairs.append((u, v))
            ends.extend((u, v))
    return _graph(n, pairs, W, rng)


FAMILIES = {
    "gnm": gnm,
    "grid": grid,
    "two-cliques": two_cliques,
    "path": path,
    "star": star,
    "power-law": power_law,
}


def generate(family: str, n: int, seed=None, W: int = 1, m: int | None = None, bridge_cap: float = 1.0) -> Graph:
    if family not in FAMILIES:
        raise InputError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    if n < 1:
        raise InputError("n must be positive")
    if family == "gnm":
        return gnm(n, m, W, seed)
    if family == "two-cliques":
        return two_cliques(n, bridge_cap, W, seed)
    return FAMILIES[family](n, W=W, seed=seed)
