"""Rank maintenance along the random graph process and the two coupling constructions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .exceptions import IntegrityError
from .graphs import EXHAUSTIVE_MAX_N, EvolutionStream, Graph, evolution, pairs_from_index, subset_masks
from .rigidity import Embedding, is_globally_rigid, max_rank, new_basis, sample_embedding

__all__ = [
    "HittingTimes",
    "CouplingTrace",
    "Sandwich",
    "degree_hitting_times",
    "rank_trajectory",
    "rank_hitting_time",
    "hitting_times",
    "global_hitting_time",
    "coupled_closure_sampler",
    "sandwich_probabilities",
    "sandwich_coupling",
    "claim_violator",
    "SANDWICH_MIN_N",
]

SANDWICH_MIN_N = 16


@dataclass(frozen=True)
class HittingTimes:
    """Hitting times of one run of the random graph process.

    ``M_d``/``M_d_plus_1``: first edge count with minimum degree ``d``/``d+1``.
    ``M_rigid_d``/``M_rigid_d1``: first edge count that is ``d``-/``(d+1)``-rigid.
    ``M_GR_d``: first globally ``d``-rigid edge count, if it was computed.
    """

    n: int
    d: int
    M_d: int
    M_d_plus_1: int
    M_rigid_d: int
    M_rigid_d1: int
    M_GR_d: int | None = None
    seed: int | None = None

    @property
    def rigid_at_min_degree(self) -> bool:
        return self.M_rigid_d == self.M_d

    @property
    def global_at_min_degree(self) -> bool | None:
        return None if self.M_GR_d is None else self.M_GR_d == self.M_d_plus_1

    def check(self) -> None:
        """Raise :class:`IntegrityError` if a deterministic inequality fails."""
        if self.M_rigid_d < self.M_d:
            raise IntegrityError(f"M_rigid_d={self.M_rigid_d} < M_d={self.M_d} (seed {self.seed})")
        if self.M_rigid_d1 < self.M_d_plus_1:
            raise IntegrityError(
                f"M_rigid_(d+1)={self.M_rigid_d1} < M_(d+1)={self.M_d_plus_1} (seed {self.seed})"
            )
        if self.M_GR_d is not None and not self.M_rigid_d1 >= self.M_GR_d >= self.M_d_plus_1:
            raise IntegrityError(
                f"expected M_rigid_(d+1)={self.M_rigid_d1} >= M_GR={self.M_GR_d} >= "
                f"M_(d+1)={self.M_d_plus_1} (seed {self.seed})"
            )


def degree_hitting_times(us, vs, n: int, ks) -> list[int | None]:
    """First prefix length whose minimum degree is at least ``k``, for each ``k``.

    ``None`` marks thresholds never reached by the given edge sequence.
    """
    ks = list(ks)
    kmax = max(ks, default=0)
    deg = [0] * n
    below = {k: n for k in ks}  # vertices with degree < k
    hit: dict[int, int] = {}
    for k in ks:
        if k <= 0 or n == 0:
            hit[k] = 0
    if len(hit) == len(ks):
        return [hit[k] for k in ks]
    for i, (u, v) in enumerate(zip(np.asarray(us).tolist(), np.asarray(vs).tolist())):
        for x in (u, v):
            deg[x] += 1
            dx = deg[x]
            if dx <= kmax and dx in below:
                below[dx] -= 1
                if below[dx] == 0 and dx not in hit:
                    hit[dx] = i + 1
        if len(hit) == len(ks):
            break
    return [hit.get(k) for k in ks]


def rank_trajectory(stream: EvolutionStream, emb: Embedding, upto: int | None = None) -> np.ndarray:
    """Rank of the rigidity matrix after each of the first ``upto`` edges."""
    upto = len(stream) if upto is None else upto
    basis = new_basis(stream.n, emb.d)
    flags = basis.insert_edges(emb.coords, stream.us[:upto], stream.vs[:upto])
    return np.cumsum(flags, dtype=np.int64)


def rank_hitting_time(stream: EvolutionStream, emb: Embedding) -> int:
    """Number of stream edges needed for the rank to reach that of ``K_n``."""
    n, d = stream.n, emb.d
    target = max_rank(n, d)
    if target == 0:
        return 0
    basis = new_basis(n, d)
    pos = 0
    chunk = 2 * target
    total = len(stream)
    while pos < total:
        stop = min(pos + chunk, total)
        used = basis.insert_edges(emb.coords, stream.us[pos:stop], stream.vs[pos:stop], stop_rank=target)
        pos += used.shape[0]
        if basis.rank == target:
            return pos
        chunk *= 2
    raise IntegrityError(f"complete graph on {n} vertices did not reach rank {target}")


def global_hitting_time(stream: EvolutionStream, d: int, rng=None, trials: int = 2) -> int:
    """First prefix that passes the global rigidity test, by binary search.

    Global rigidity is monotone along the process, so the predicate is
    searched over the whole range ``[0, C(n, 2)]`` without assuming any
    bracket from the degree or rigidity hitting times.
    """
    rng = np.random.default_rng(rng)
    lo, hi = 0, len(stream)  # predicate false at lo (n >= d+2), true at hi
    if is_globally_rigid(stream.prefix(0), d, rng, trials):
        return 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if is_globally_rigid(stream.prefix(mid), d, rng, trials):
            hi = mid
        else:
            lo = mid
    return hi


def hitting_times(n: int, d: int, with_global: bool = False, rng=None, global_trials: int = 2) -> HittingTimes:
    """Run one random graph process and record its degree and rigidity hitting times.

    Two independent row bases (dimensions ``d`` and ``d+1``) follow the same
    edge stream. The result is checked against the deterministic inequalities
    before being returned.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if n < d + 2:
        raise ValueError(f"hitting times need n >= d+2 = {d + 2}, got {n}")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    gen = np.random.default_rng(rng)
    stream = evolution(n, gen)
    M_d, M_d1 = degree_hitting_times(stream.us, stream.vs, n, (d, d + 1))
    M_rigid_d = rank_hitting_time(stream, sample_embedding(n, d, gen))
    M_rigid_d1 = rank_hitting_time(stream, sample_embedding(n, d + 1, gen))
    M_gr = global_hitting_time(stream, d, gen, global_trials) if with_global else None
    result = HittingTimes(n, d, M_d, M_d1, M_rigid_d, M_rigid_d1, M_gr, seed)
    result.check()
    return result


# -- closure coupling -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CouplingTrace:
    """One run of the closure coupling.

    ``r`` holds the uniform draws; ``low_count`` counts the steps whose draw
    fell below the threshold, i.e. edges taken from outside the closure.
    """

    n: int
    M: int
    d: int
    r: np.ndarray
    graph: Graph
    low_count: int
    rank: int
    closure_size: int


def coupled_closure_sampler(n: int, M: int, d: int, rng=None) -> CouplingTrace:
    """Sample ``G(n, M)`` one edge at a time, steering each edge by a uniform draw.

    At step ``i`` with closure size ``C`` the new edge is uniform outside the
    closure when ``r_i < (N - C) / (N - i + 1)`` and uniform on
    closure-minus-graph otherwise (``N = C(n, 2)``); each edge is therefore
    uniform over all non-edges. Closure membership is monotone, so after a
    rank increase only pairs still outside the closure are re-tested.
    """
    N = comb(n, 2)
    if not 0 <= M <= N:
        raise ValueError(f"M={M} outside [0, {N}]")
    gen = np.random.default_rng(rng)
    emb = sample_embedding(max(n, 1), d, gen)
    iu, iv = np.triu_indices(n, 1)
    iu = iu.astype(np.int64)
    iv = iv.astype(np.int64)
    basis = new_basis(n, d)
    in_g = np.zeros(N, dtype=bool)
    in_c = np.zeros(N, dtype=bool)
    csize = 0
    r = gen.random(M)
    low = 0
    for i in range(1, M + 1):
        threshold = (N - csize) / (N - (i - 1))
        if r[i - 1] < threshold:
            cand = np.flatnonzero(~in_c)
            if cand.size == 0:
                raise IntegrityError("draw below threshold but the closure is complete")
            e = int(cand[gen.integers(cand.size)])
            grew = basis.insert_edges(emb.coords, iu[e:e + 1], iv[e:e + 1])
            if not grew[0]:
                raise IntegrityError(f"edge {e} outside the closure did not raise the rank")
            low += 1
            in_g[e] = in_c[e] = True
            rest = np.flatnonzero(~in_c)
            in_c[rest] = basis.edges_in_span(emb.coords, iu[rest], iv[rest])
            csize = int(np.count_nonzero(in_c))
        else:
            cand = np.flatnonzero(in_c & ~in_g)
            if cand.size == 0:
                raise IntegrityError("draw above threshold but closure minus graph is empty")
            e = int(cand[gen.integers(cand.size)])
            in_g[e] = True
    cap = max_rank(n, d)
    if low > cap or low != basis.rank:
        raise IntegrityError(f"low_count={low}, rank={basis.rank}, cap={cap}")
    graph = Graph.from_arrays(n, iu[in_g], iv[in_g])
    return CouplingTrace(n, M, d, r, graph, low, basis.rank, csize)


# -- sandwich coupling ------------------------------------------------------


def sandwich_probabilities(n: int, d: int) -> tuple[float, float]:
    """``(log n + (d-1) log log n -/+ log log log n) / n``."""
    if n < SANDWICH_MIN_N:
        raise ValueError(f"sandwich coupling needs n >= {SANDWICH_MIN_N}, got {n}")
    L = math.log(n)
    LL = math.log(L)
    LLL = math.log(LL)
    base = L + (d - 1) * LL
    lo, hi = (base - LLL) / n, (base + LLL) / n
    if not (0 < lo < hi < 1):
        raise ValueError(f"edge probabilities ({lo:.4g}, {hi:.4g}) not inside (0, 1)")
    return lo, hi


@dataclass(frozen=True, eq=False)
class Sandwich:
    G_minus: Graph
    G_star: Graph
    G_plus: Graph
    valid: bool
    M_d: int
    p_minus: float
    p_plus: float


def sandwich_coupling(n: int, d: int, rng=None) -> Sandwich:
    """Couple ``G(n, p_-)``, ``G(n, M_d)`` and ``G(n, p_+)`` through shared edge ranks.

    ``valid`` reports ``G_minus <= G_star <= G_plus``.
    """
    p_minus, p_plus = sandwich_probabilities(n, d)
    gen = np.random.default_rng(rng)
    N = comb(n, 2)
    r = gen.random(N)
    minus = np.flatnonzero(r < p_minus)
    plus = np.flatnonzero(r < p_plus)
    # only the smallest ranks matter for M_d; fall back to a full sort if needed
    bound = min(1.0, 3 * p_plus)
    M_d = None
    while M_d is None:
        cand = np.flatnonzero(r < bound)
        order = cand[np.argsort(r[cand], kind="stable")]
        us, vs = pairs_from_index(n, order)
        (M_d,) = degree_hitting_times(us, vs, n, (d,))
        if bound >= 1.0 and M_d is None:
            raise IntegrityError("complete graph never reached the minimum degree")
        bound = min(1.0, 2 * bound)
    star = order[:M_d]

    def build(idx):
        a, b = pairs_from_index(n, idx)
        return Graph.from_arrays(n, a, b)

    G_minus, G_star, G_plus = build(minus), build(star), build(plus)
    valid = G_minus.edges <= G_star.edges <= G_plus.edges
    return Sandwich(G_minus, G_star, G_plus, valid, int(M_d), p_minus, p_plus)


def claim_violator(G_minus: Graph, G_plus: Graph, d: int) -> frozenset[int] | None:
    """Smallest ``B`` (``1 <= |B| <= n/2``) failing both alternatives of the dichotomy.

    A set passes if some vertex of ``B`` has at least ``d`` ``G_minus``
    neighbours outside ``B``, or if ``B`` spans no edge of ``G_plus``.
    Every subset is checked, so ``n <= 24``.
    """
    n = G_minus.n
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive check needs n <= {EXHAUSTIVE_MAX_N}, got {n}")
    if n < 2:
        return None
    adj_minus = G_minus.adjacency_masks()
    adj_plus = G_plus.adjacency_masks()
    full = (1 << n) - 1
    best = None
    for masks in subset_masks(n, n // 2):
        passes = np.zeros(masks.shape[0], dtype=bool)
        spans_edge = np.zeros(masks.shape[0], dtype=bool)
        comp = ~masks & full
        for v in range(n):
            inside = (masks >> v) & 1 == 1
            passes |= inside & (np.bitwise_count(adj_minus[v] & comp) >= d)
            spans_edge |= inside & ((adj_plus[v] & masks) != 0)
        bad = masks[~passes & spans_edge]
        if bad.size:
            sizes = np.bitwise_count(bad)
            i = int(np.lexsort((bad, sizes))[0])
            cand = (int(sizes[i]), int(bad[i]))
            if best is None or cand < best:
                best = cand
    if best is None:
        return None
    return frozenset(v for v in range(n) if best[1] >> v & 1)
