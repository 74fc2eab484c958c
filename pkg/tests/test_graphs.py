import itertools
from collections import Counter
from math import comb

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2_contingency, chisquare

from oracles import expansion_violators_brute, kcore_brute, orientable_brute
from rigidevo.graphs import (
    EXHAUSTIVE_MAX_N,
    Graph,
    complete_graph,
    complete_minus_edge,
    cycle_graph,
    empty_graph,
    evolution,
    expansion_violator,
    extended_core,
    format_edge_list,
    gadget_graph,
    gnm,
    gnp,
    graph_oracles,
    henneberg_minimally_rigid,
    is_d_orientable,
    kcore,
    pair_index,
    pairs_from_index,
    parse_edge_list,
    path_graph,
    read_edge_list,
    star_graph,
    write_edge_list,
)
from rigidevo.rigidity import rigidity_rank


@st.composite
def small_graphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(n, chosen)


# -- Graph ------------------------------------------------------------------


def test_graph_normalises_and_validates():
    G = Graph(4, [(2, 1), (0, 3)])
    assert G.edges == {(1, 2), (0, 3)}
    assert G.adj[1] == {2}
    for bad in ([(1, 1)], [(0, 4)], [(-1, 2)], [(0, 1), (1, 0)]):
        with pytest.raises(ValueError):
            Graph(4, bad)


def test_from_arrays_matches_constructor():
    us, vs = np.array([3, 0, 2]), np.array([1, 2, 0])
    with pytest.raises(ValueError):
        Graph.from_arrays(4, us, vs)  # (0,2) twice
    G = Graph.from_arrays(4, np.array([3, 0]), np.array([1, 2]))
    assert G == Graph(4, [(1, 3), (0, 2)])
    assert G.degrees() == [1, 1, 1, 1] and G.min_degree() == 1
    with pytest.raises(ValueError):
        Graph.from_arrays(3, np.array([0]), np.array([0]))


@given(small_graphs())
def test_degrees_consistent_with_edges(G):
    count = Counter(v for e in G.edges for v in e)
    assert G.degrees() == [count[v] for v in range(G.n)]
    assert all(G.degree(v) == len(G.adj[v]) for v in range(G.n))
    for u, v in G.edges:
        assert v in G.adj[u] and u in G.adj[v]


def test_induced_subgraph():
    G = cycle_graph(5)
    H, labels = G.induced([4, 0, 1])
    assert labels == [0, 1, 4]
    assert H.m == 2
    assert G.induced_edge_count({0, 1, 4}) == 2


def test_pair_index_roundtrip():
    for n in (2, 3, 7, 50, 4096):
        total = comb(n, 2)
        k = np.arange(total) if total < 10**5 else np.random.default_rng(0).integers(0, total, 10**5)
        u, v = pairs_from_index(n, k)
        assert (u < v).all() and (v < n).all() and (u >= 0).all()
        np.testing.assert_array_equal(pair_index(n, u, v), k)


# -- random models ----------------------------------------------------------


def test_gnp_extremes():
    assert gnp(7, 0.0, 1).m == 0
    assert gnp(7, 1.0, 1) == complete_graph(7)
    with pytest.raises(ValueError):
        gnp(5, 1.5)


def test_gnm_forced_and_range():
    assert gnm(4, 6, 0) == complete_graph(4)
    with pytest.raises(ValueError):
        gnm(4, 7)


def test_gnm_three_one_uniform():
    counts = Counter(next(iter(gnm(3, 1, s).edges)) for s in range(10_000))
    assert set(counts) == {(0, 1), (0, 2), (1, 2)}
    for c in counts.values():
        assert abs(c / 10_000 - 1 / 3) < 0.02


def test_evolution_prefixes():
    s = evolution(6, 3)
    assert len(s) == 15
    assert s.prefix(0).m == 0
    assert s.prefix(15) == complete_graph(6)
    pairs = set(zip(s.us.tolist(), s.vs.tolist()))
    assert len(pairs) == 15
    with pytest.raises(ValueError):
        s.prefix(16)
    assert evolution(6, 3).us.tolist() == s.us.tolist()
    assert s.seed == 3


def test_evolution_first_edge_uniform():
    counts = Counter(evolution(3, s).edge(0) for s in range(10_000))
    for c in counts.values():
        assert abs(c / 10_000 - 1 / 3) < 0.02


def test_evolution_prefix_matches_gnm_in_distribution():
    # all 20 three-edge graphs on 4 vertices
    keys = [frozenset(c) for c in itertools.combinations(itertools.combinations(range(4), 2), 3)]
    a = Counter(evolution(4, s).prefix(3).edges for s in range(10_000))
    b = Counter(gnm(4, 3, 10**6 + s).edges for s in range(10_000))
    for sample in (a, b):
        obs = [sample[k] for k in keys]
        assert sum(obs) == 10_000
        assert chisquare(obs).pvalue > 0.001
    table = np.array([[a[k] for k in keys], [b[k] for k in keys]])
    assert chi2_contingency(table).pvalue > 0.001


# -- oracles ----------------------------------------------------------------


def test_graph_oracles_examples():
    assert graph_oracles(path_graph(4)) == (1, True, False)
    assert graph_oracles(cycle_graph(5)).is_2_connected
    two = Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert not graph_oracles(two).is_connected
    assert graph_oracles(complete_graph(2)) == (1, True, False)
    assert graph_oracles(Graph(1)) == (0, True, False)


@settings(max_examples=200)
@given(small_graphs())
def test_connectivity_matches_networkx(G):
    H = G.to_networkx()
    o = graph_oracles(G)
    assert o.is_connected == nx.is_connected(H)
    assert o.is_2_connected == (G.n >= 3 and nx.is_biconnected(H))


# -- cores ------------------------------------------------------------------


def test_kcore_examples():
    tree = Graph(6, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)])
    assert kcore(tree, 2) == frozenset()
    assert kcore(complete_graph(5), 4) == frozenset(range(5))
    k4_pendant = Graph(5, list(complete_graph(4).edges) + [(3, 4)])
    assert kcore(k4_pendant, 3) == frozenset(range(4))


@settings(max_examples=150, deadline=None)
@given(small_graphs(max_n=8), st.integers(0, 4))
def test_kcore_is_maximal(G, k):
    core = kcore(G, k)
    assert core == kcore_brute(G.n, G.edges, k)
    assert all(len(G.adj[v] & core) >= k for v in core)
    for v in set(range(G.n)) - core:
        s = core | {v}
        assert any(len(G.adj[u] & s) < k for u in s)


def test_extended_core_examples():
    assert extended_core(complete_graph(6), 2) == frozenset(range(6))
    assert extended_core(path_graph(6), 2) == frozenset()
    G = Graph(6, list(complete_graph(4).edges) + [(3, 4), (4, 5)])
    assert kcore(G, 3) == frozenset(range(4))
    assert extended_core(G, 2) == frozenset(range(4))
    with pytest.raises(ValueError):
        extended_core(G, 0)


def test_extended_core_grows_beyond_core():
    # vertex 4 sees two core vertices, then 5 sees 4 and a core vertex
    G = Graph(6, list(complete_graph(4).edges) + [(0, 4), (1, 4), (4, 5), (2, 5)])
    assert extended_core(G, 2) == frozenset(range(6))


def test_extended_core_confluent_under_shuffles():
    for seed in range(20):
        G = gnp(60, 3.5 / 60, seed)
        results = {extended_core(G, 2, rng=r) for r in range(10)}
        assert len(results) == 1


# -- orientability ----------------------------------------------------------


def _check_orientation(G, d, res):
    if res.orientable:
        assert set(res.heads) == G.edges
        assert all(h in e for e, h in res.heads.items())
        assert max(res.in_degrees(G.n), default=0) <= d
    else:
        assert G.induced_edge_count(res.witness) > d * len(res.witness)


def test_orientability_examples():
    forest = Graph(7, [(0, 1), (0, 2), (2, 3), (4, 5)])
    assert is_d_orientable(forest, 1).orientable
    r = is_d_orientable(complete_graph(4), 1)
    assert not r.orientable and r.witness == frozenset(range(4))
    assert is_d_orientable(complete_graph(5), 2).orientable
    for G, d in ((forest, 1), (complete_graph(4), 1), (complete_graph(5), 2), (complete_graph(6), 2)):
        _check_orientation(G, d, is_d_orientable(G, d))


def test_orientability_matches_brute_force_on_all_small_graphs():
    checked = 0
    for H in nx.graph_atlas_g()[1:]:
        if H.number_of_nodes() > 7 or H.number_of_edges() > 14:
            continue
        G = Graph(H.number_of_nodes(), H.edges())
        for d in (1, 2):
            res = is_d_orientable(G, d)
            assert res.orientable == orientable_brute(G.n, G.edges, d)
            _check_orientation(G, d, res)
            checked += 1
    assert checked > 2000


# -- expansion --------------------------------------------------------------


def test_expansion_examples():
    B = expansion_violator(star_graph(5), 2)
    assert B is not None and len(B) == 1 and 0 not in B
    assert expansion_violator(complete_graph(6), 2) is None
    with pytest.raises(ValueError):
        expansion_violator(empty_graph(EXHAUSTIVE_MAX_N + 1), 2)


@settings(max_examples=80, deadline=None)
@given(small_graphs(max_n=9), st.integers(1, 3))
def test_expansion_exhaustive_matches_brute(G, d):
    brute = expansion_violators_brute(G.n, G.edges, d)
    B = expansion_violator(G, d)
    if not brute:
        assert B is None
    else:
        assert B in brute and len(B) == min(map(len, brute))


def test_expansion_search_finds_planted_violator():
    G = Graph(20, list(complete_graph(20).edges - {(0, j) for j in range(2, 20)}))
    B = expansion_violator(G, 2, mode="search", budget=2000, rng=0)
    assert B is not None
    assert all(len(G.adj[v] - B) < 2 for v in B) and 1 <= len(B) <= 10
    assert expansion_violator(complete_graph(20), 2, mode="search", budget=500, rng=0) is None


# -- constructions ----------------------------------------------------------


def test_henneberg_base_cases():
    assert henneberg_minimally_rigid(3, 2, 0) == complete_graph(3)
    G = henneberg_minimally_rigid(4, 2, 0)
    assert G.m == 2 * 4 - 3 and min(G.degrees()) == 2
    with pytest.raises(ValueError):
        henneberg_minimally_rigid(2, 2)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_henneberg_output_is_minimally_rigid(d):
    for a in range(d + 1, 11):
        for seed in range(3):
            G = henneberg_minimally_rigid(a, d, seed)
            target = d * a - comb(d + 1, 2)
            assert G.m == target
            assert rigidity_rank(G, d, seed) == target


def test_gadget_counts():
    G, A = gadget_graph(Graph(2, [(0, 1)]), 2)
    assert G == complete_minus_edge(4) and A == {0, 1}
    tri = complete_graph(3)
    G, A = gadget_graph(tri, 2)
    assert G.n == 9 and G.m == 15 and A == {0, 1, 2}


@pytest.mark.parametrize("d", [2, 3])
def test_gadget_structure(d):
    H = henneberg_minimally_rigid(5, d, 1)
    G, A = gadget_graph(H, d)
    assert G.n == len(A) + d * H.m
    assert not any(u in A and v in A for u, v in G.edges)
    for v in range(G.n):
        if v not in A:
            assert G.degree(v) == d + 1


# -- I/O --------------------------------------------------------------------


def test_edge_list_roundtrip(tmp_path):
    G = gnp(12, 0.3, 4)
    text = format_edge_list(G)
    assert parse_edge_list(text) == G
    p = tmp_path / "g.txt"
    write_edge_list(G, p)
    assert read_edge_list(p) == G


def test_edge_list_comments_and_errors():
    assert parse_edge_list("# c\n\n3 2\n0 1\n# x\n1 2\n") == path_graph(3)
    assert parse_edge_list("3 0\n") == empty_graph(3)
    for bad in ("", "3\n", "3 2\n0 1\n", "3 1\n0 1 2\n", "3 1\n0 5\n", "2 1\n1 1\n"):
        with pytest.raises(ValueError):
            parse_edge_list(bad)
