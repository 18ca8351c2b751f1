import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conga.approximator import assemble, trivial_approximator
from conga.generators import gnm, path, two_cliques
from conga.graph import Graph, InputError, Partition
from conga.partitioner import build_hierarchy
from conga.verifier import (
    approximator_matches,
    bridge_demand,
    check_certificate,
    check_mixing_sampled,
    check_property3,
    cluster_demand,
    corrupt_hierarchy,
    empirical_quality,
    mixed_sampler,
    opt_congestion_bruteforce,
    opt_congestion_maxflow,
    pair_demand,
    structure_ok,
)

from conftest import DESK


def test_bruteforce_examples():
    g = Graph.from_edges(2, [(0, 1, 2)])
    assert opt_congestion_bruteforce(g, np.zeros(2)) == 0
    assert opt_congestion_bruteforce(g, np.array([1.0, -1.0])) == pytest.approx(0.5)


def test_bruteforce_limits():
    with pytest.raises(InputError):
        opt_congestion_bruteforce(path(17), np.zeros(17))
    with pytest.raises(InputError):
        opt_congestion_bruteforce(path(3), np.array([1.0, 0, 0]))


def test_maxflow_examples():
    g = path(3)
    assert opt_congestion_maxflow(g, np.zeros(3)) == 0
    assert opt_congestion_maxflow(g, np.array([1.0, 0, -1.0])) == pytest.approx(1.0)


def test_infeasible_across_components():
    g = Graph.from_edges(4, [(0, 1, 1), (2, 3, 1)])
    b = np.array([1.0, 0, -1.0, 0])
    assert opt_congestion_maxflow(g, b) == np.inf
    assert opt_congestion_bruteforce(g, b) == np.inf


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_oracles_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    g = gnm(n, int(rng.integers(n - 1, n * (n - 1) // 2 + 1)), W=int(rng.choice([1, 16])), seed=seed)
    b = rng.normal(size=n)
    b -= b.mean()
    a, c = opt_congestion_bruteforce(g, b), opt_congestion_maxflow(g, b)
    assert c == pytest.approx(a, rel=1e-6)


def test_samplers_are_zero_sum():
    g = two_cliques(20)
    a = assemble(build_hierarchy(g, DESK))
    rng = np.random.default_rng(0)
    for sampler in (pair_demand, cluster_demand, bridge_demand, mixed_sampler):
        for _ in range(10):
            b = sampler(g, a, rng)
            assert abs(b.sum()) < 1e-9 and np.any(b)


def test_cluster_demands_have_ratio_at_least_one():
    g = two_cliques(20)
    a = assemble(build_hierarchy(g, DESK))
    rep = empirical_quality(g, a, cluster_demand, 20, rng=1)
    assert rep.min_ratio >= 1 - 1e-6


def test_trivial_approximator_on_path_is_poor():
    n = 32
    g = path(n)
    a = trivial_approximator(g)
    deg = g.degree()
    S = np.arange(n) < n // 2
    b = np.where(S, deg / deg[S].sum(), -deg / deg[~S].sum())
    rep = empirical_quality(g, a, demands=[b])
    assert rep.max_ratio == pytest.approx(deg[S].sum())  # opt 1, estimate 1/d(S)
    assert not rep.passed or rep.max_ratio <= rep.bound


def test_full_build_quality():
    g = gnm(32, 64, W=8, seed=4)
    a = assemble(build_hierarchy(g, DESK))
    rep = empirical_quality(g, a, mixed_sampler, 50, rng=2)
    assert rep.passed and rep.max_ratio <= a.quality_bound
    rows = rep.to_csv().strip().splitlines()
    assert rows[0] == "id,estimate,opt,ratio" and len(rows) == 51


def test_property3_examples():
    g = gnm(8, 12, seed=0)
    V = Partition.whole(8)
    assert check_property3(g, V, V, 1.0)
    cyc = Graph.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)])
    P = Partition.singletons(4)
    # everyone must send 2 and may receive only 1: impossible at any congestion
    assert not check_property3(cyc, P, P, 1.0)
    assert not check_property3(cyc, P, P, 100.0)


def test_property3_on_builds():
    g = two_cliques(24)
    h = build_hierarchy(g, DESK)
    for i, cert in enumerate(h.certificates):
        assert check_property3(g, h.levels[i], h.levels[i + 1], cert.beta)
        assert check_certificate(g, h.levels[i], h.levels[i + 1], cert.flow, cert.beta)


def test_mixing_examples():
    g = gnm(10, 20, seed=3)
    V = Partition.whole(10)
    assert check_mixing_sampled(g, V, V, 1.0, 5, 0)
    P = Partition.from_clusters(10, [range(5), range(5, 10)])
    assert check_mixing_sampled(g, Partition.singletons(10), P, 1e12, 5, 0)


def test_mixing_fails_at_tiny_congestion():
    g = path(16)
    assert not check_mixing_sampled(g, Partition.singletons(16), Partition.whole(16), 1e-3, 5, 0)


def test_corruption_is_detected():
    g = two_cliques(24)
    h = build_hierarchy(g, DESK)
    a = assemble(h)
    assert structure_ok(g, h.levels) and approximator_matches(g, h.levels, a)
    for seed in range(10):
        bad, i = corrupt_hierarchy(h.levels, g, seed)
        detected = not structure_ok(g, bad) or not approximator_matches(g, bad, a)
        for j in range(len(bad) - 1):
            cert = h.certificates[j]
            detected |= not check_certificate(g, bad[j], bad[j + 1], cert.flow, cert.beta)
        assert detected


def test_quality_count_validation():
    g = path(4)
    with pytest.raises(InputError):
        empirical_quality(g, trivial_approximator(g), count=0)
