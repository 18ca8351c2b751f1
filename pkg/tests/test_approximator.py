import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conga.approximator import (
    MARKERS,
    ParseError,
    assemble,
    assemble_levels,
    check_structure,
    common_refinement,
    deserialize,
    estimate_congestion,
    is_laminar,
    refinement_checks,
    restrict_to,
    serialize,
    trivial_approximator,
)
from conga.generators import generate, gnm, path, two_cliques
from conga.graph import Graph, InputError, Partition
from conga.partitioner import BuildParams, build_hierarchy
from conga.verifier import opt_congestion_bruteforce

from conftest import DESK


def test_common_refinement_examples():
    P = Partition.from_clusters(4, [[0, 1], [2, 3]])
    Q = Partition.from_clusters(4, [[0, 2], [1, 3]])
    assert common_refinement([P]) == P
    assert common_refinement([P, Q]) == Partition.singletons(4)
    assert common_refinement([P, Partition.whole(4)]) == P


def test_common_refinement_rejects_mismatch():
    with pytest.raises(InputError):
        common_refinement([Partition.whole(3), Partition.whole(4)])
    with pytest.raises(InputError):
        common_refinement([[0, 1]])


def test_trivial_is_star_forest():
    g = gnm(10, 20, seed=0)
    a = trivial_approximator(g)
    assert a.num_nodes == 11
    roots = np.flatnonzero(a.parent < 0)
    assert roots.size == 1 and a.end[roots[0]] - a.start[roots[0]] == 10
    assert np.all(a.parent[a.parent >= 0] == roots[0])
    assert a.K == 20


def test_nontrivial_build_is_laminar():
    g = two_cliques(32)
    h = build_hierarchy(g, DESK)
    a = assemble(h)
    sets = a.sets()
    assert is_laminar(sets) and check_structure(a)
    assert len(set(sets)) == len(sets)  # stored once each
    assert np.max(a.level) <= h.L
    assert a.K <= h.L * g.n
    assert refinement_checks(g, h.levels)
    assert all(frozenset([v]) in set(sets) for v in range(g.n))


def test_dedup_keeps_highest_level():
    g = path(4)
    levels = [Partition.singletons(4), Partition.from_clusters(4, [[0, 1], [2], [3]]), Partition.whole(4)]
    a = assemble_levels(g, levels)
    sets = dict(zip(a.sets(), a.level.tolist()))
    assert sets[frozenset([2])] == 2 and sets[frozenset([0])] == 1
    assert sets[frozenset(range(4))] == 3


def test_estimate_examples():
    g = two_cliques(16)
    h = build_hierarchy(g, DESK)
    a = assemble(h)
    assert estimate_congestion(a, np.zeros(16)) == 0
    b = np.zeros(16)
    b[0], b[8] = -1.0, 1.0  # the bridge endpoints
    assert estimate_congestion(a, b) >= 1.0


def test_estimate_single_edge():
    g = Graph.from_edges(2, [(0, 1, 2)])
    a = trivial_approximator(g)
    assert estimate_congestion(a, np.array([-1.0, 1.0])) == pytest.approx(0.5)


def test_zero_boundary_cluster_reports_inf():
    g = Graph.from_edges(4, [(0, 1, 1), (2, 3, 1)])
    h = build_hierarchy(g, DESK)
    a = assemble(h)
    assert estimate_congestion(a, np.array([-1.0, 0, 1.0, 0])) == np.inf
    assert np.isfinite(estimate_congestion(a, np.array([-1.0, 1.0, 0, 0])))


def test_visit_count():
    g = two_cliques(24)
    a = assemble(build_hierarchy(g, DESK))
    _, visits = estimate_congestion(a, np.ones(24) - 1, return_visits=True)
    assert visits == g.n + a.num_nodes
    assert visits <= a.K + g.n


def test_restrict_examples():
    g = two_cliques(16)
    a = assemble(build_hierarchy(g, DESK))
    full = restrict_to(a, range(16))
    assert set(full[:-3]) == set(a.sets()) and full[-3:] == list(MARKERS)
    assert restrict_to(a, [5]) == [frozenset([5])] + list(MARKERS)


@settings(max_examples=30)
@given(st.integers(0, 2**16), st.integers(6, 40))
def test_restrict_preserves_laminarity(seed, n):
    g = two_cliques(n)
    a = assemble(build_hierarchy(g, DESK))
    A = np.flatnonzero(np.random.default_rng(seed).random(n) < 0.5)
    assert is_laminar(restrict_to(a, A))


def test_serialize_roundtrip():
    g = two_cliques(20)
    for a in (trivial_approximator(g), assemble(build_hierarchy(g, DESK))):
        data = serialize(a)
        assert deserialize(data) == a
        assert len(data) == 56 + 4 * a.n + 24 * a.num_nodes


def test_serialize_header_layout():
    a = trivial_approximator(path(3))
    data = serialize(a)
    assert data[:8] == b"CONGAAPX"
    assert int.from_bytes(data[8:10], "little") == 1
    assert int.from_bytes(data[12:16], "little") == 3
    assert int.from_bytes(data[16:20], "little") == a.num_nodes


def test_deserialize_errors():
    data = serialize(trivial_approximator(path(5)))
    with pytest.raises(ParseError) as exc:
        deserialize(data[:-3])
    assert exc.value.offset == len(data) - 3
    with pytest.raises(ParseError):
        deserialize(data[:20])
    with pytest.raises(ParseError) as exc:
        deserialize(b"XXXXXXXX" + data[8:])
    assert exc.value.offset == 0
    with pytest.raises(ParseError):
        deserialize(data + b"\0")
    bad = bytearray(data)
    bad[56:60] = (7).to_bytes(4, "little")  # leaf order entry out of range
    with pytest.raises(ParseError):
        deserialize(bytes(bad))


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_estimate_is_lower_bound(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 12))
    g = gnm(n, int(rng.integers(n - 1, n * (n - 1) // 2 + 1)), W=int(rng.choice([1, 16])), seed=seed)
    a = assemble(build_hierarchy(g, BuildParams(seed=seed, c_t=4.0, c_phi=0.5)))
    b = rng.normal(size=n)
    b -= b.mean()
    assert estimate_congestion(a, b) <= opt_congestion_bruteforce(g, b) * (1 + 1e-9)


@settings(max_examples=20)
@given(st.sampled_from(["gnm", "grid", "two-cliques", "path", "power-law"]), st.integers(4, 48), st.integers(0, 999))
def test_laminar_on_random_builds(family, n, seed):
    g = generate(family, n, seed=seed)
    h = build_hierarchy(g, BuildParams(seed=seed, c_t=4.0, c_phi=0.5))
    a = assemble(h)
    assert is_laminar(a.sets()) and check_structure(a) and refinement_checks(g, h.levels)
    assert a.K <= h.L * g.n
