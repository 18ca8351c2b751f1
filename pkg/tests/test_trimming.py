import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conga.cutmatching import CMGParams
from conga.faircut import cluster_weighting
from conga.generators import gnm, path, two_cliques
from conga.graph import Partition, boundary_mask, route_check
from conga.trimming import TrimResult, trim, trim_checks, validate_trim


def _setup(g, P=None):
    P = P or Partition.singletons(g.n)
    p = CMGParams.from_scale(g.n, g.W, 4.0, 0.5)
    return P, p.phi, p.kappa, 1.0 / (4 * p.T)


def test_empty_R_gives_small_B():
    g = two_cliques(16)
    P, phi, kappa, eps = _setup(g)
    A = np.ones(16, bool)
    res = trim(g, P, A, np.zeros(16, bool), phi, kappa, eps)
    d = cluster_weighting(g, P, A)
    dB = g.cap[boundary_mask(g, res.B)].sum()
    assert dB <= 2 * eps * phi * d.sum() + g.tau
    assert validate_trim(g, P, A, [], res, phi, eps)


def test_R_equal_A_leaves_nothing():
    g = two_cliques(12)
    P, phi, kappa, eps = _setup(g)
    res = trim(g, P, range(12), range(12), phi, kappa, eps)
    assert not np.any(res.g_flow) and not np.any(res.t_vec)


def test_joined_cliques_with_boundary_R():
    g = two_cliques(20)
    P, phi, kappa, eps = _setup(g)
    A = np.ones(20, bool)
    res = trim(g, P, A, [0, 1, 2], phi, kappa, eps)
    checks = trim_checks(g, P, A, [0, 1, 2], res, phi, eps)
    tau = checks.pop("tau")
    assert all(v >= -tau for v in checks.values()), checks


def test_certificate_routes_boundary_demand():
    g = two_cliques(20)
    P, phi, kappa, eps = _setup(g)
    A = np.ones(20, bool)
    R = np.zeros(20, bool)
    R[:10] = True
    res = trim(g, P, A, R, phi, kappa, eps)
    rest = A & ~(R | res.B)
    demand = -(np.where(rest, res.boundary_deg - res.t_vec, 0.0))
    # the certificate pushes (boundary degree - t) out of each remaining vertex; the
    # receiving end is wherever the flow stops, so check sources only
    out = np.bincount(g.u, res.g_flow, g.n) - np.bincount(g.v, res.g_flow, g.n)
    assert np.allclose(out[rest], -demand[rest], atol=g.tau)
    ok, cong = route_check(g, res.g_flow, -out)
    assert ok and cong <= 2 + g.tau


def test_validate_rejects_oversized_B():
    g = two_cliques(16)
    P, phi, kappa, eps = _setup(g)
    A = np.ones(16, bool)
    res = trim(g, P, A, [], phi, kappa, eps)
    # half of one clique has a boundary far above 2 eps phi d(A)
    half = np.zeros(16, bool)
    half[:4] = True
    bad = TrimResult(half, np.zeros(16), np.zeros(g.m), res.boundary_deg)
    assert not validate_trim(g, P, A, [], bad, phi, eps)


def test_validate_rejects_zeroed_flow():
    g = path(64)
    P, phi, kappa, eps = _setup(g)
    A = np.ones(64, bool)
    # with small phi the cut degree next to R exceeds what t can absorb locally
    R = np.zeros(64, bool)
    R[0] = True
    res = trim(g, P, A, R, phi, kappa, eps)
    assert np.any(res.g_flow)
    assert validate_trim(g, P, A, R, res, phi, eps)
    bad = TrimResult(res.B, res.t_vec, np.zeros(g.m), res.boundary_deg)
    assert not validate_trim(g, P, A, R, bad, phi, eps)


@given(st.integers(0, 2**32 - 1))
def test_trim_properties_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 40))
    g = gnm(n, int(rng.integers(n, 3 * n)), W=int(rng.choice([1, 16])), seed=seed)
    P, phi, kappa, eps = _setup(g)
    A = rng.random(n) < 0.8
    if not A.any():
        A[0] = True
    R = A & (rng.random(n) < 0.3)
    res = trim(g, P, A, R, phi, kappa, eps)
    checks = trim_checks(g, P, A, R, res, phi, eps)
    tau = checks.pop("tau")
    assert all(v >= -tau for v in checks.values()), checks
