import itertools
from collections import Counter
from math import comb

import numpy as np
import pytest
from scipy.stats import chisquare

from rigidevo.evolve import (
    SANDWICH_MIN_N,
    HittingTimes,
    claim_violator,
    coupled_closure_sampler,
    degree_hitting_times,
    global_hitting_time,
    hitting_times,
    rank_hitting_time,
    rank_trajectory,
    sandwich_coupling,
    sandwich_probabilities,
)
from rigidevo.exceptions import IntegrityError
from rigidevo.graphs import (
    Graph,
    complete_graph,
    evolution,
    is_2_connected,
    is_connected,
    star_graph,
)
from rigidevo.rigidity import closure, is_rigid, max_rank, sample_embedding


def first_prefix(stream, pred):
    return next(M for M in range(len(stream) + 1) if pred(stream.prefix(M)))


# -- hitting times ----------------------------------------------------------


def test_degree_hitting_times_by_hand():
    us, vs = [0, 1, 0, 2], [1, 2, 2, 3]
    assert degree_hitting_times(us, vs, 4, (0, 1, 2, 5)) == [0, 4, None, None]
    assert degree_hitting_times(us[:2], vs[:2], 3, (1,)) == [2]


def test_n3_d1_always_two():
    for seed in range(200):
        ht = hitting_times(3, 1, rng=seed)
        assert ht.M_d == ht.M_rigid_d == 2


def test_hitting_times_preconditions():
    with pytest.raises(ValueError):
        hitting_times(3, 2)
    with pytest.raises(ValueError):
        hitting_times(5, 0)


def test_check_rejects_impossible_records():
    with pytest.raises(IntegrityError):
        HittingTimes(10, 2, M_d=20, M_d_plus_1=30, M_rigid_d=19, M_rigid_d1=40).check()
    with pytest.raises(IntegrityError):
        HittingTimes(10, 2, M_d=20, M_d_plus_1=30, M_rigid_d=20, M_rigid_d1=29).check()
    with pytest.raises(IntegrityError):
        HittingTimes(10, 2, 20, 30, 20, 40, M_GR_d=41).check()
    with pytest.raises(IntegrityError):
        HittingTimes(10, 2, 20, 30, 20, 40, M_GR_d=29).check()
    HittingTimes(10, 2, 20, 30, 20, 40, M_GR_d=30).check()


@pytest.mark.parametrize("d", [1, 2, 3])
def test_hitting_times_match_prefix_scans(d):
    for seed in range(4):
        n = 9 + seed
        ht = hitting_times(n, d, rng=seed)
        s = evolution(n, np.random.default_rng(seed))  # same stream as inside hitting_times
        assert ht.M_d == first_prefix(s, lambda G: G.min_degree() >= d)
        assert ht.M_d_plus_1 == first_prefix(s, lambda G: G.min_degree() >= d + 1)
        M = ht.M_rigid_d
        assert is_rigid(s.prefix(M), d, 99, reps=2)
        assert not is_rigid(s.prefix(M - 1), d, 99, reps=2)
        M1 = ht.M_rigid_d1
        assert is_rigid(s.prefix(M1), d + 1, 99, reps=2)
        assert not is_rigid(s.prefix(M1 - 1), d + 1, 99, reps=2)


def test_rank_trajectory_monotone_unit_steps():
    s = evolution(20, 4)
    emb = sample_embedding(20, 2, 4)
    traj = rank_trajectory(s, emb)
    steps = np.diff(np.concatenate([[0], traj]))
    assert set(steps.tolist()) <= {0, 1}
    assert traj[-1] == max_rank(20, 2)
    assert rank_hitting_time(s, emb) == int(np.argmax(traj == traj[-1])) + 1


def test_d1_hitting_times_against_combinatorial_oracles():
    for seed in range(100):
        n = int(np.random.default_rng(seed).integers(3, 41))
        ht = hitting_times(n, 1, with_global=True, rng=seed)
        s = evolution(n, np.random.default_rng(seed))
        lo, hi = ht.M_d, ht.M_rigid_d1
        assert ht.M_rigid_d == _first_in(s, is_connected, lo, len(s))
        assert ht.M_GR_d == _first_in(s, is_2_connected, ht.M_d_plus_1, hi)


def _first_in(stream, pred, lo, hi):
    lo = max(lo - 1, 0)
    while hi - lo > 1:  # pred is monotone along the stream
        mid = (lo + hi) // 2
        if pred(stream.prefix(mid)):
            hi = mid
        else:
            lo = mid
    return hi if lo or not pred(stream.prefix(0)) else 0


def test_global_hitting_time_sandwich():
    for seed in range(20):
        ht = hitting_times(14, 2, with_global=True, rng=seed)
        assert ht.M_rigid_d1 >= ht.M_GR_d >= ht.M_d_plus_1
        assert ht.M_rigid_d >= ht.M_d


def test_global_hitting_time_whole_range():
    s = evolution(6, 0)
    M = global_hitting_time(s, 1, 0)
    assert is_2_connected(s.prefix(M)) and not is_2_connected(s.prefix(M - 1))


# -- coupled closure sampler ------------------------------------------------


def test_coupling_cap_and_rank():
    cap = 2 * 30 - 3
    for seed in range(30):
        tr = coupled_closure_sampler(30, 200, 2, seed)
        assert tr.low_count <= cap
        assert tr.low_count == tr.rank
        assert tr.graph.m == 200 and tr.r.shape == (200,)
        assert tr.closure_size == closure(tr.graph, 2, seed).size


def test_coupling_full_graph():
    tr = coupled_closure_sampler(7, comb(7, 2), 2, 1)
    assert tr.graph == complete_graph(7)
    assert tr.closure_size == comb(7, 2)
    with pytest.raises(ValueError):
        coupled_closure_sampler(7, comb(7, 2) + 1, 2)


def test_coupling_marginal_uniform():
    keys = [frozenset(c) for c in itertools.combinations(itertools.combinations(range(4), 2), 3)]
    counts = Counter(coupled_closure_sampler(4, 3, 1, s).graph.edges for s in range(10_000))
    obs = [counts[k] for k in keys]
    assert sum(obs) == 10_000
    assert chisquare(obs).pvalue > 0.001


# -- sandwich coupling ------------------------------------------------------


def test_sandwich_probabilities():
    lo, hi = sandwich_probabilities(4096, 2)
    assert 0 < lo < hi < 1
    with pytest.raises(ValueError):
        sandwich_probabilities(SANDWICH_MIN_N - 1, 2)


def test_sandwich_structure():
    valid = 0
    for seed in range(100):
        S = sandwich_coupling(64, 2, seed)
        assert S.G_minus.edges <= S.G_plus.edges
        assert S.G_star.m == S.M_d
        assert S.G_star.min_degree() == 2
        if S.valid:
            valid += 1
            assert S.G_minus.edges <= S.G_star.edges <= S.G_plus.edges
    assert valid > 0


def test_claim_violator_injections():
    n = 16
    K, S = complete_graph(n), star_graph(n - 1)
    assert claim_violator(K, K, 2) is None
    B = claim_violator(S, K, 2)
    assert B is not None and len(B) == 2 and 0 not in B
    # independent in G_plus rescues every set
    assert claim_violator(Graph(n), Graph(n), 2) is None
    with pytest.raises(ValueError):
        claim_violator(Graph(25), Graph(25), 2)
