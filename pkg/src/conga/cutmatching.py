"""The cut-matching game on a cluster A with vertex weighting d.

Each round projects the (implicit) flow-matrix rows onto a random direction,
splits A by the projection, and runs one fair-cut computation.  The cut side
is peeled off into R and the flow side becomes a fractional matching that
mixes the remaining rows.  The game stops early once R is heavy enough.

Vertices with d(v) = 0 carry no mass and are left out of the projection space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .faircut import build_auxiliary, cluster_weighting, fair_cut
from .graph import (
    Graph,
    InputError,
    InternalError,
    boundary_mask,
    path_decompose,
    trim_paths,
    vertex_mask,
)


def scale_log(n: int, W: float | None) -> float:
    """log2(n W), floored at 1 so tiny graphs still get positive parameters."""
    return max(math.log2(max(n * (W or 1.0), 2.0)), 1.0)


@dataclass(frozen=True)
class CMGParams:
    phi: float
    kappa: float
    T: int

    def __post_init__(self):
        if not self.phi > 0 or self.kappa < 1 or self.T < 1:
            raise InputError("need phi > 0, kappa >= 1 and T >= 1")

    @classmethod
    def from_scale(cls, n: int, W, c_t: float = 1.0, c_phi: float = 1.0, c_kappa: float = 1.0) -> "CMGParams":
        lg = scale_log(n, W)
        T = max(1, math.ceil(c_t * lg**2))
        # the shrinkage argument for recursive calls needs phi <= 1/24
        phi = min(1.0 / 24.0, 1.0 / (c_phi * lg**3))
        kappa = max(1.0, c_kappa * lg**3)
        return cls(phi, kappa, T)

    @property
    def eps(self) -> float:
        return 1.0 / (18.0 * self.T**2)

    @property
    def gamma(self) -> float:
        return self.eps * self.phi / 2.0

    @property
    def beta(self) -> float:
        return max(1.0, (24.0 * self.phi + self.eps * self.gamma) * (self.kappa + 2.0))

    @property
    def alpha(self) -> float:
        """Mixing congestion certified by a full game."""
        return 5.0 * self.T / self.phi


@dataclass
class Matching:
    """Fractional matching between original vertex ids."""

    u: np.ndarray
    v: np.ndarray
    c: np.ndarray

    def degree(self, n: int) -> np.ndarray:
        return np.bincount(self.u, self.c, n) + np.bincount(self.v, self.c, n)


@dataclass
class RoundRecord:
    S: np.ndarray
    left: np.ndarray
    right: np.ndarray
    eta: float
    cut_boundary: float  # boundary of S_t inside G[A]
    d_S_active: float  # d(S_t intersected with A_{t-1})
    d_S: float
    R_boundary: float
    d_R: float
    psi_before: float | None = None
    psi_after: float | None = None
    energy: float | None = None
    row_sum_error: float | None = None


@dataclass
class CMGResult:
    R: np.ndarray
    matchings: list[Matching]
    rounds_run: int
    early_termination: bool
    d: np.ndarray
    rounds: list[RoundRecord] = field(default_factory=list)

    @property
    def mixing_claimed(self) -> bool:
        return not self.early_termination


def random_unit_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 2:
        raise InputError("need at least two coordinates")
    while True:
        x = rng.standard_normal(n)
        x -= x.mean()
        norm = np.linalg.norm(x)
        if norm > 1e-12:
            return x / norm


def project_flow_vectors(matchings, d: np.ndarray, r: np.ndarray) -> np.ndarray:
    """p(v) = <F(v)/d(v), r> for the flow matrix implied by the matchings.

    Matchings are (a, b, c) index arrays in the coordinate space of d.  The
    inner products follow the same update as the rows themselves, so the
    matrix is never formed.
    """
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0):
        raise InternalError("projection space contains a vertex with d(v) = 0")
    q = d * np.asarray(r, dtype=np.float64)
    k = len(d)
    for a, b, c in matchings:
        p = q / d
        delta = 0.5 * c * (p[b] - p[a])
        q = q + np.bincount(a, delta, k) - np.bincount(b, delta, k)
    return q / d


def update_flow_matrix(F: np.ndarray, d: np.ndarray, matching) -> np.ndarray:
    a, b, c = matching
    Fn = F / d[:, None]
    delta = 0.5 * c[:, None] * (Fn[b] - Fn[a])
    out = F.copy()
    np.add.at(out, a, delta)
    np.subtract.at(out, b, delta)
    return out


def potential(F: np.ndarray, d: np.ndarray, members: np.ndarray) -> float:
    """Weighted spread of the normalized rows of F over the member rows."""
    members = np.asarray(members, dtype=bool)
    if not members.any():
        return 0.0
    rows = F[members] / d[members, None]
    w = d[members]
    mu = F[members].sum(axis=0) / w.sum()
    return float(np.sum(w * np.sum((rows - mu) ** 2, axis=1)))


def matching_energy(F: np.ndarray, d: np.ndarray, matching) -> float:
    a, b, c = matching
    Fn = F / d[:, None]
    return float(np.sum(c * np.sum((Fn[a] - Fn[b]) ** 2, axis=1)))


def split_by_projection(p: np.ndarray, d: np.ndarray, members: np.ndarray):
    """Threshold split of the member coordinates by their projections.

    Returns (left mask, right mask, eta).  Left lies on one side of eta, has
    at most half the member weight, and holds at least half of the weighted
    squared deviation from eta.
    """
    members = np.asarray(members, dtype=bool)
    idx = np.flatnonzero(members)
    left = np.zeros(len(p), dtype=bool)
    if idx.size == 0:
        return left, members.copy(), 0.0
    order = idx[np.argsort(p[idx], kind="stable")]
    ps, ds = p[order], d[order]
    cum = np.cumsum(ds)
    i = int(np.searchsorted(cum, cum[-1] / 2.0, side="left"))
    i = min(i, len(order) - 1)
    eta = float(ps[i])
    dev = ds * (ps - eta) ** 2
    if dev[: i + 1].sum() >= dev[i:].sum():
        left[order[:i]] = True
    else:
        left[order[i + 1:]] = True
    right = members & ~left
    return left, right, eta


def cmg_round_flow(g: Graph, P_L, A, left, right, params: CMGParams, d: np.ndarray):
    """One fair-cut round: returns (S_t mask, matching, f_t on global edges).

    left/right are masks over V partitioning the current active part of A.
    """
    inside = vertex_mask(g, A)
    phi, eps = params.phi, params.eps
    s_w = np.where(inside, phi * d * left + eps * phi * d, 0.0)
    t_w = np.where(inside, 12.0 * phi * d * right, 0.0)
    inst = build_auxiliary(g, P_L, inside, params.gamma, s_w, t_w, weighting=d)
    pair = fair_cut(inst, eps)
    h, k = inst.h, inst.size
    S_local = pair.S[:k]
    S = np.zeros(g.n, dtype=bool)
    S[inst.back_map[S_local]] = True

    # keep only edges of G[A] with no endpoint in S_t, scaled to unit demand d/12
    core = inst.edge_map >= 0
    keep = core & ~pair.S[h.u] & ~pair.S[h.v]
    f = np.where(keep, pair.f, 0.0) / (12.0 * phi)
    pd = path_decompose(h, f)
    quota = np.zeros(h.n)
    src = (left & ~S)[inst.back_map]
    quota[:k][src] = d[inst.back_map][src] / 12.0
    pd = trim_paths(pd, quota, tol=h.tau / (12.0 * phi))

    pairs: dict[tuple[int, int], float] = {}
    for path in pd.paths:
        key = (path.start, path.end)
        pairs[key] = pairs.get(key, 0.0) + path.capacity
    bm = inst.back_map
    if pairs:
        ab = np.array(list(pairs.keys()), dtype=np.int64)
        if ab.max() >= k:
            raise InternalError("matching path ends at an auxiliary vertex")
        matching = Matching(bm[ab[:, 0]], bm[ab[:, 1]], np.array(list(pairs.values())))
    else:
        matching = Matching(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
    f_local = pd.to_flow(h)
    f_t = np.zeros(g.m)
    f_t[inst.edge_map[core]] = f_local[core]
    return S, matching, f_t


def run_cmg(
    g: Graph,
    P_L,
    A,
    params: CMGParams,
    seed=None,
    dense: bool = False,
    dense_cap: int = 512,
    weighting: np.ndarray | None = None,
) -> CMGResult:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    inside = vertex_mask(g, A)
    if not inside.any():
        raise InputError("A must be nonempty")
    d = cluster_weighting(g, P_L, inside) if weighting is None else np.asarray(weighting, float)
    dims = np.flatnonzero(inside & (d > 0))
    R = np.zeros(g.n, dtype=bool)
    result = CMGResult(R, [], 0, False, d)
    if dims.size < 2:
        # zero or one weighted vertex: nothing can be unbalanced
        return result
    dA = float(d.sum())
    k = dims.size
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[dims] = np.arange(k)
    dk = d[dims]
    local_matchings: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    F = None
    if dense:
        if k > dense_cap:
            raise InputError(f"dense mode limited to {dense_cap} weighted vertices")
        F = np.diag(dk)
    in_GA = inside[g.u] & inside[g.v]

    for _ in range(params.T):
        active = inside & ~R
        members = active[dims]
        r = random_unit_orthogonal(k, rng)
        p = project_flow_vectors(local_matchings, dk, r)
        left_k, right_k, eta = split_by_projection(p, dk, members)
        left = np.zeros(g.n, dtype=bool)
        left[dims[left_k]] = True
        right = active & ~left
        S, matching, _ = cmg_round_flow(g, P_L, inside, left, right, params, d)

        a, b = pos[matching.u], pos[matching.v]
        if np.any(a < 0) or np.any(b < 0):
            raise InternalError("matched vertex has d(v) = 0")
        lm = (a, b, matching.c)
        rec = RoundRecord(
            S=S,
            left=left,
            right=right,
            eta=eta,
            cut_boundary=float(g.cap[boundary_mask(g, S) & in_GA].sum()),
            d_S_active=float(d[S & active].sum()),
            d_S=float(d[S].sum()),
            R_boundary=0.0,
            d_R=0.0,
        )
        if F is not None:
            rec.psi_before = potential(F, dk, members)
            rec.energy = matching_energy(F, dk, lm)
            F = update_flow_matrix(F, dk, lm)
            rec.row_sum_error = float(np.max(np.abs(F.sum(axis=1) - dk)))
        local_matchings.append(lm)
        result.matchings.append(matching)
        R |= S
        if F is not None:
            rec.psi_after = potential(F, dk, (inside & ~R)[dims])
        rec.R_boundary = float(g.cap[boundary_mask(g, R) & in_GA].sum())
        rec.d_R = float(d[R].sum())
        result.rounds.append(rec)
        result.rounds_run += 1
        if rec.d_R >= dA / (6.0 * params.T):
            result.early_termination = True
            break
    result.R = R
    return result
